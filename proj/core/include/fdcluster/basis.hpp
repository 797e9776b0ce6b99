#ifndef FDCLUSTER_BASIS_HPP_
#define FDCLUSTER_BASIS_HPP_

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdcluster/curves.hpp"

namespace fdc {

// Clamped B-spline system on [a, b] with equally spaced interior knots.
// Boundary knots are repeated `order` times; `order` 4 is cubic. The Gram
// matrix of each derivative level is assembled once by composite
// Gauss-Legendre quadrature that is exact for the piecewise-polynomial
// integrands, so W = gram(), the roughness penalty R = gram(2) and the
// first-derivative Gram carry no quadrature error beyond roundoff.
class BSplineBasis {
public:
    // Requires b > a and K >= order >= 2.
    BSplineBasis(double a, double b, int num_basis, int order = 4);

    int size() const { return num_basis_; }   // K
    int order() const { return order_; }
    double domain_start() const { return a_; }
    double domain_end() const { return b_; }
    const std::vector<double>& knots() const { return knots_; }

    // m x K matrix of D^deriv phi_k(t_j). Points must lie in [a, b] and
    // deriv must not exceed order - 2.
    Eigen::MatrixXd evaluate(std::span<const double> points, int deriv = 0) const;

    // All order-many basis values (and derivatives up to `nderiv`) that are
    // nonzero at t; `first` receives the index of the first nonzero basis
    // function. ders is (nderiv+1) x order, row r = r-th derivative.
    void evaluate_nonzero(double t, int nderiv, int& first,
                          Eigen::Ref<Eigen::MatrixXd> ders) const;

    // Gram matrix of the l-th derivative, int D^l phi_k D^l phi_j dt.
    // l = 0 is the Gram matrix W, l = 2 the roughness penalty R.
    const Eigen::MatrixXd& gram(int l = 0) const;
    const Eigen::MatrixXd& penalty() const { return gram(2); }

    std::string to_json() const;  // {order, K, knots}

private:
    int find_span(double t) const;

    double a_, b_;
    int num_basis_;
    int order_;
    std::vector<double> knots_;          // K + order entries
    Eigen::MatrixXd grams_[3];           // derivative Gram matrices, l = 0..2
};

// One penalized least-squares fit c = (S'S + lambda R)^-1 S'x.
struct PenalizedFit {
    Eigen::VectorXd coefficients;  // K
    double lambda = 0.0;
    double df = 0.0;    // trace of the hat matrix
    double sse = 0.0;   // residual sum of squares at the grid points
    double gcv = 0.0;   // (sse/m) / (1 - df/m)^2
};

// Factorizes the normal equations of one (grid, basis, lambda) triple so a
// whole curve set can be fitted with a single factorization. A fixed
// relative ridge of 1e-10 * mean diag(S'S) is added before factorizing;
// systems that are singular beyond that throw.
class PenalizedSolver {
public:
    PenalizedSolver(const BSplineBasis& basis, std::span<const double> grid,
                    double lambda);

    PenalizedFit fit(const Eigen::VectorXd& values) const;
    double df() const { return df_; }  // shared by every curve on this grid

private:
    Eigen::MatrixXd design_;       // m x K
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double lambda_;
    double df_;
    int m_;
};

// Requires lambda >= 0 and, for lambda = 0, m >= K.
PenalizedFit fit_penalized(const Eigen::VectorXd& values,
                           std::span<const double> grid,
                           const BSplineBasis& basis, double lambda);

// 41 log-spaced values in [1e-6, 1e4].
std::vector<double> default_lambda_grid();

// Smallest-GCV lambda; near-exact GCV ties (relative to the data scale) are
// broken toward the larger, smoother lambda.
struct LambdaSelection {
    double lambda = 0.0;
    PenalizedFit fit;
    std::vector<double> gcv_by_lambda;
};
LambdaSelection select_lambda_gcv(const Eigen::VectorXd& values,
                                  std::span<const double> grid,
                                  const BSplineBasis& basis,
                                  std::span<const double> lambda_grid);

// Functional representation of a curve set: row i of `coefficients` holds
// the basis coefficients of curve i.
struct CoefficientSet {
    Eigen::MatrixXd coefficients;  // n x K
    std::shared_ptr<const BSplineBasis> basis;
    std::vector<double> lambda;    // per-curve smoothing parameter used
    std::vector<std::string> ids;

    int n() const { return static_cast<int>(coefficients.rows()); }

    // Reconstructed curves sampled at `grid`.
    Eigen::MatrixXd evaluate(std::span<const double> grid) const;
};

struct SmoothingSpec {
    // Fixed lambda when `gcv` is false, otherwise per-curve GCV over
    // `lambda_grid` (default_lambda_grid() when empty).
    double lambda = 0.0;
    bool gcv = false;
    std::vector<double> lambda_grid;
};

CoefficientSet smooth_curveset(const CurveSet& cs,
                               std::shared_ptr<const BSplineBasis> basis,
                               const SmoothingSpec& spec);

// Mean GCV over the curves for each candidate basis dimension, the table
// behind a by-eye elbow choice of K.
struct GcvByBasisRow {
    int num_basis;
    double mean_gcv;
};
std::vector<GcvByBasisRow> gcv_by_num_basis(const CurveSet& cs,
                                            std::span<const int> num_basis_grid,
                                            int order, double lambda);

void save_coefficients(const CoefficientSet& coeffs,
                       const std::filesystem::path& path);

}  // namespace fdc

#endif  // FDCLUSTER_BASIS_HPP_
