#ifndef FDCLUSTER_ADAPTIVE_HPP_
#define FDCLUSTER_ADAPTIVE_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fdcluster/basis.hpp"
#include "fdcluster/curves.hpp"
#include "fdcluster/wavelet.hpp"

namespace fdc {

// Thrown when a mixture component's responsibility mass collapses below the
// working floor; callers selecting over M treat it as a failed candidate.
class ClusterDeathError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EmOptions {
    double tol = 1e-6;  // relative loglik change
    int max_iter = 500;
    int restarts = 5;
    std::uint64_t seed = 0;
    // Random multinomial responsibilities instead of the k-means start.
    bool stochastic_init = false;
};

// ---------------------------------------------------------------------------
// fclust: mixture of spline mixed-effects models.
// X_i | cluster m  ~  N(S mu_m, sigma^2 I + S Gamma S'), fit by EM.
// ---------------------------------------------------------------------------

struct FclustOptions {
    EmOptions em;
    bool fix_gamma_zero = false;  // degenerate fixed-effects model
};

struct FclustModel {
    Eigen::MatrixXd mu;          // M x K cluster mean coefficients
    Eigen::MatrixXd gamma;       // K x K random-effect covariance, PSD
    double sigma = 0.0;          // measurement-error SD
    Eigen::VectorXd weights;     // M
    Eigen::MatrixXd posteriors;  // n x M
    double loglik = 0.0;
    double bic = 0.0;
    double aic = 0.0;
    int n_params = 0;  // (M-1) + M K + K(K+1)/2 + 1
    std::vector<double> loglik_trace;
    std::shared_ptr<const BSplineBasis> basis;
    std::vector<double> grid;

    std::vector<int> hard_labels() const;
    std::string to_json() const;  // parameters + criteria + iteration trace
};

FclustModel fclust_em(const CurveSet& cs, std::shared_ptr<const BSplineBasis> basis,
                      int M, const FclustOptions& opts = {});

// Membership probabilities of one curve sampled on the model grid.
Eigen::VectorXd fclust_posterior(const FclustModel& model,
                                 std::span<const double> curve);

// ---------------------------------------------------------------------------
// waveclust: linear mixed-effect mixture in the Haar wavelet domain.
// Coefficient vector w_i | m ~ N(omega_m, G + sigma_eps^2 I) with diagonal
// G = gamma^2 I (constant) or gamma_m^2 I (group). Only the total variance
// gamma^2 + sigma_eps^2 is identified by the marginal likelihood; the split
// reported is the EM fixed point reached from equal-split initialization.
// ---------------------------------------------------------------------------

enum class VarianceStructure { constant, group, automatic };

struct WaveclustOptions {
    EmOptions em;
    VarianceStructure structure = VarianceStructure::automatic;  // BIC picks
    bool denoise = false;            // per-curve universal hard threshold
    bool fix_gamma_zero = false;     // no random effect
};

struct WaveletModel {
    Eigen::MatrixXd means;       // M x J fixed effects (alpha_m', beta_m')'
    Eigen::VectorXd gamma2;      // random-effect variance, size 1 or M
    double sigma_eps2 = 0.0;     // measurement-error variance
    VarianceStructure structure = VarianceStructure::constant;
    Eigen::VectorXd weights;
    Eigen::MatrixXd posteriors;  // n x M
    double loglik = 0.0;
    double bic = 0.0;
    double icl = 0.0;
    int n_params = 0;  // (M-1) + M J + |gamma2| + 1
    std::vector<double> loglik_trace;
    int padded_length = 0;
    int original_length = 0;

    std::vector<int> hard_labels() const;
    std::string to_json() const;
};

WaveletModel waveclust_em(const CurveSet& cs, int M, const WaveclustOptions& opts = {});

// ---------------------------------------------------------------------------
// funHDDC: Gaussian mixture in group-specific low-dimensional subspaces.
// Per group: covariance Q_m Delta_m Q_m' with
// Delta_m = diag(a_m1..a_md, b_m..b_m); d_m chosen by Cattell scree test
// each iteration.
// ---------------------------------------------------------------------------

enum class HddcSubmodel { full, common_noise };

struct FunHddcOptions {
    EmOptions em{.restarts = 20};
    double scree_threshold = 0.2;  // usual grid: 0.2, 0.5, 0.9
    HddcSubmodel submodel = HddcSubmodel::full;
    // Work on W^(1/2)-transformed coefficients (L2 geometry); false uses the
    // raw coefficient vectors.
    bool gram_metric = true;
};

struct FunHddcGroup {
    Eigen::MatrixXd Q;            // K x K orthogonal
    int d = 0;                    // intrinsic dimension
    Eigen::VectorXd a;            // d signal variances, a_j >= b
    double b = 0.0;               // noise variance
    Eigen::VectorXd mean;         // K-vector cluster mean (working coordinates)
    Eigen::VectorXd mean_latent;  // d-vector, subspace coordinates of mean
};

struct FunHddcModel {
    std::vector<FunHddcGroup> groups;
    Eigen::VectorXd weights;
    Eigen::MatrixXd posteriors;
    double loglik = 0.0;
    double bic = 0.0;
    int n_params = 0;
    HddcSubmodel submodel = HddcSubmodel::full;
    double scree_threshold = 0.2;
    bool gram_metric = true;
    std::vector<double> loglik_trace;

    std::vector<int> hard_labels() const;
    std::string to_json() const;
};

FunHddcModel funhddc_em(const CoefficientSet& coeffs, int M,
                        const FunHddcOptions& opts = {});

// Cattell scree rule: with gaps g_j = lambda_j - lambda_{j+1},
// d = max{ j : g_j >= threshold * max gap }. Flat spectra give d = 1.
// Requires >= 2 non-increasing, non-negative eigenvalues.
int scree_dimension(std::span<const double> eigenvalues, double threshold);

// ---------------------------------------------------------------------------
// BIC model selection over a cluster-count range.
// ---------------------------------------------------------------------------

struct BicRow {
    int M = 0;
    bool ok = false;
    double loglik = 0.0;
    double bic = 0.0;
    std::string error;
};

template <typename Model>
struct BicSelection {
    int best_M = 0;
    Model model;
    std::vector<BicRow> table;
};

// Fits every M via `fit` (a callable int -> Model with .loglik/.bic) and
// returns the lowest-BIC fit. Failed fits are recorded in the table; throws
// only if every candidate fails.
template <typename FitFn>
auto select_M_bic(FitFn&& fit, std::span<const int> M_range)
    -> BicSelection<std::decay_t<decltype(fit(0))>> {
    using Model = std::decay_t<decltype(fit(0))>;
    if (M_range.empty()) throw std::invalid_argument("select_M_bic: empty M range");
    BicSelection<Model> out;
    bool have_best = false;
    for (int M : M_range) {
        BicRow row;
        row.M = M;
        try {
            Model model = fit(M);
            row.ok = true;
            row.loglik = model.loglik;
            row.bic = model.bic;
            if (!have_best || model.bic < out.model.bic) {
                out.best_M = M;
                out.model = std::move(model);
                have_best = true;
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        out.table.push_back(std::move(row));
    }
    if (!have_best) throw std::runtime_error("select_M_bic: every candidate fit failed");
    return out;
}

std::string bic_table_json(std::span<const BicRow> table);

}  // namespace fdc

#endif  // FDCLUSTER_ADAPTIVE_HPP_
