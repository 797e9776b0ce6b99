#ifndef FDCLUSTER_FPCA_HPP_
#define FDCLUSTER_FPCA_HPP_

#include <filesystem>
#include <memory>

#include <Eigen/Dense>

#include "fdcluster/basis.hpp"

namespace fdc {

// Functional PCA of a smoothed curve set, expressed in basis coordinates.
// Eigenfunctions are L2-orthonormal: row l of eigen_coeffs is psi_l with
// psi_l' W psi_l = 1 and psi_i' W psi_j = 0 for i != j. Scores are of the
// centered curves, so every score column has mean zero and sample variance
// (divisor n-1) equal to its eigenvalue. Signs are fixed so each
// eigenfunction's largest-magnitude coefficient is positive.
struct FpcaModel {
    Eigen::VectorXd mean_coeffs;    // K
    Eigen::MatrixXd eigen_coeffs;   // L x K, rows are eigenfunctions
    Eigen::VectorXd eigenvalues;    // L, non-increasing, >= 0
    Eigen::MatrixXd scores;         // n x L
    Eigen::VectorXd var_explained;  // cumulative proportions of total variance
    int rank = 0;                   // numerical rank of the centered data
    std::shared_ptr<const BSplineBasis> basis;  // may be null for raw use
};

// Coefficient-space core: eigenproblem of the centered coefficient
// covariance (divisor n-1) metricized by the Gram matrix. Requires n >= 2.
FpcaModel fpca(const Eigen::MatrixXd& coefficients, const Eigen::MatrixXd& gram);

FpcaModel fpca(const CoefficientSet& coeffs);

// Smallest L whose cumulative variance proportion reaches `threshold`
// (in (0, 1]). Throws on zero total variance.
int select_components(const FpcaModel& model, double threshold);

// Curves reconstructed from the leading L components, as basis
// coefficients: mean + sum_{l<=L} score_il psi_l. Requires 1 <= L <= rank.
CoefficientSet reconstruct(const FpcaModel& model, int L,
                           const CoefficientSet& source);

// CSV `curve_id,xi1,...,xiL`.
void save_scores(const FpcaModel& model, std::span<const std::string> ids,
                 const std::filesystem::path& path);

// Eigenfunctions sampled on a grid (L x m), for plotting.
Eigen::MatrixXd sample_eigenfunctions(const FpcaModel& model,
                                      std::span<const double> grid);

}  // namespace fdc

#endif  // FDCLUSTER_FPCA_HPP_
