#ifndef FDCLUSTER_MVCLUST_HPP_
#define FDCLUSTER_MVCLUST_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fdc {

// Hard partition of n observations into M non-empty clusters.
// Labels are 0-based; exports write them 1-based.
struct Partition {
    std::vector<int> labels;    // n entries in [0, M)
    int M = 0;
    Eigen::MatrixXd centroids;  // M x p
    double wcss = 0.0;          // sum over clusters of squared distances to centroid
};

// Recomputes wcss and centroids of `labels` over X.
Partition make_partition(const Eigen::MatrixXd& X, std::span<const int> labels, int M);

struct KmeansOptions {
    int restarts = 20;
    int max_iter = 100;
    std::uint64_t seed = 0;
};

struct KmeansResult {
    Partition partition;
    std::vector<double> wcss_trace;  // best run, one entry per Lloyd iteration
    int iterations = 0;
};

// Lloyd iterations from k-means++ seeding, best of `restarts` runs by wcss.
// A cluster emptied during an iteration is re-seeded at the point farthest
// from its assigned centroid. Deterministic given options.seed.
KmeansResult kmeans(const Eigen::MatrixXd& X, int M, const KmeansOptions& opts = {});

enum class Linkage { single, complete, average, ward };

Linkage linkage_from_string(const std::string& name);
std::string to_string(Linkage linkage);

struct Merge {
    int left;       // cluster ids = smallest original row index in each cluster
    int right;      // left < right
    double height;  // dissimilarity at the merge; for ward, the wcss increase
};

struct HierarchicalResult {
    Partition partition;
    std::vector<Merge> merges;  // n-1 entries, in merge order
};

// Agglomerative clustering with Lance-Williams updates on Euclidean
// distances (ward tracks the exact within-cluster sum-of-squares increase).
// Ties are broken toward the lexicographically smallest cluster-id pair.
HierarchicalResult hierarchical(const Eigen::MatrixXd& X, Linkage linkage, int M);

enum class CovarianceModel { spherical, diagonal, full };

CovarianceModel covariance_model_from_string(const std::string& name);

struct GmmOptions {
    CovarianceModel model = CovarianceModel::full;
    double tol = 1e-6;  // relative loglik change
    int max_iter = 500;
    int restarts = 5;
    std::uint64_t seed = 0;
};

struct GmmFit {
    Eigen::VectorXd weights;                  // M, sums to 1
    Eigen::MatrixXd means;                    // M x p
    std::vector<Eigen::MatrixXd> covariances; // M matrices, p x p
    Eigen::MatrixXd posteriors;               // n x M, rows sum to 1
    double loglik = 0.0;
    double bic = 0.0;   // -2 loglik + n_params log n   (lower is better)
    double aic = 0.0;   // -2 loglik + 2 n_params
    double icl = 0.0;   // bic + 2 * posterior entropy
    int n_params = 0;
    CovarianceModel model = CovarianceModel::full;
    std::vector<double> loglik_trace;  // best run, one entry per EM iteration

    std::vector<int> hard_labels() const;
    std::string summary_json() const;  // loglik, BIC, AIC, ICL, M, n_params
};

// Gaussian mixture EM, k-means++-initialized, best of restarts by loglik.
// Covariance diagonals carry a relative ridge of 1e-8 * trace/p.
GmmFit gmm_em(const Eigen::MatrixXd& X, int M, const GmmOptions& opts = {});

// Euclidean distance matrix of the rows of X.
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& X);

struct SilhouetteResult {
    double mean = 0.0;
    std::vector<double> widths;  // s_i = (b_i - a_i)/max(a_i, b_i); singletons get 0
};

// Requires a symmetric zero-diagonal D and at least two clusters.
SilhouetteResult silhouette(const Eigen::MatrixXd& D, std::span<const int> labels);

// Min inter-cluster distance over max intra-cluster diameter. Returns
// +infinity when every cluster has zero diameter. Requires >= 2 clusters.
double dunn(const Eigen::MatrixXd& D, std::span<const int> labels);

// (between-SS/(M-1)) / (within-SS/(n-M)).
double calinski_harabasz(const Eigen::MatrixXd& X, std::span<const int> labels, int M);

enum class ClusterMethod { kmeans, hierarchical };

struct MajorityOptions {
    ClusterMethod method = ClusterMethod::kmeans;
    Linkage linkage = Linkage::ward;  // hierarchical only
    int restarts = 20;
    std::uint64_t seed = 0;
};

struct MajorityResult {
    int best_M = 0;
    // votes[i] = optimal M by index i, order {silhouette, dunn, calinski_harabasz}
    std::vector<int> votes;
    std::vector<int> M_range;
    Eigen::MatrixXd index_values;  // |M_range| x 3
    Partition best_partition;
};

// Each validity index votes for its own optimal M over M_range; the modal
// vote wins, ties toward the smaller M.
MajorityResult select_M_majority(const Eigen::MatrixXd& X,
                                 std::span<const int> M_range,
                                 const MajorityOptions& opts = {});

// CSV `curve_id,cluster` with 1-based cluster numbers.
void save_assignments(std::span<const std::string> ids, std::span<const int> labels,
                      const std::filesystem::path& path);

}  // namespace fdc

#endif  // FDCLUSTER_MVCLUST_HPP_
