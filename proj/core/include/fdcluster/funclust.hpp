#ifndef FDCLUSTER_FUNCLUST_HPP_
#define FDCLUSTER_FUNCLUST_HPP_

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fdcluster/basis.hpp"
#include "fdcluster/mvclust.hpp"

namespace fdc {

// n x n matrix of the derivative metric d_l(X_i, X_j); symmetric,
// zero-diagonal, and a pseudometric (a metric for l = 0).
struct FunctionalDistanceMatrix {
    Eigen::MatrixXd D;
    int deriv = 0;
};

// d_l between two curves in basis coordinates:
// sqrt((ci-cj)' W_l (ci-cj)) with W_l the l-th derivative Gram matrix.
// Exact under the basis representation; requires l <= order - 2.
double functional_distance(const Eigen::VectorXd& ci, const Eigen::VectorXd& cj,
                           const BSplineBasis& basis, int l = 0);

FunctionalDistanceMatrix distance_matrix(const CoefficientSet& coeffs, int l = 0);

// PSD square root factor F with W_l = F'F; coefficient differences mapped
// through F have Euclidean length d_l.
Eigen::MatrixXd metric_factor(const BSplineBasis& basis, int l);

struct FunctionalKmeansResult {
    Partition partition;             // centroids are coefficient K-vectors
    std::vector<double> wcss_trace;  // objective (sum of squared d_l) per iteration
    int iterations = 0;
};

// Lloyd's algorithm under the d_l metric. Cluster centroids are coefficient
// means, the exact minimizers of the within-cluster squared-distance sum.
FunctionalKmeansResult functional_kmeans(const CoefficientSet& coeffs, int M,
                                         int l = 0, const KmeansOptions& opts = {});

struct FunctionalSelection {
    int best_M = 0;
    Partition partition;
    std::vector<std::pair<int, double>> silhouette_by_M;
};

// Fits every M in M_range and keeps the one with the best mean silhouette
// width on the d_l distance matrix; ties toward the smaller M.
FunctionalSelection select_M_functional(const CoefficientSet& coeffs, int l,
                                        std::span<const int> M_range,
                                        const KmeansOptions& opts = {});

// Lower-triangle CSV (row i lists d(i,0..i-1)).
void save_distance_matrix(const FunctionalDistanceMatrix& dm,
                          const std::filesystem::path& path);

}  // namespace fdc

#endif  // FDCLUSTER_FUNCLUST_HPP_
