#include "fdcluster/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "csv.hpp"

namespace fdc {
namespace {

// Gauss-Legendre nodes and weights on [-1, 1], Newton iteration on the
// Legendre recurrence. q nodes integrate polynomials of degree 2q-1 exactly.
void gauss_legendre(int q, std::vector<double>& x, std::vector<double>& w) {
    x.assign(static_cast<std::size_t>(q), 0.0);
    w.assign(static_cast<std::size_t>(q), 0.0);
    for (int i = 0; i < (q + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= q; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = q * (z * p1 - p2) / (z * z - 1.0);
            double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[static_cast<std::size_t>(i)] = -z;
        x[static_cast<std::size_t>(q - 1 - i)] = z;
        double wi = 2.0 / ((1.0 - z * z) * pp * pp);
        w[static_cast<std::size_t>(i)] = wi;
        w[static_cast<std::size_t>(q - 1 - i)] = wi;
    }
}

}  // namespace

BSplineBasis::BSplineBasis(double a, double b, int num_basis, int order)
    : a_(a), b_(b), num_basis_(num_basis), order_(order) {
    if (!(b > a)) throw std::invalid_argument("BSplineBasis: need b > a");
    if (order < 2) throw std::invalid_argument("BSplineBasis: need order >= 2");
    if (num_basis < order) throw std::invalid_argument("BSplineBasis: need K >= order");

    knots_.assign(static_cast<std::size_t>(num_basis + order), a);
    const int interior = num_basis - order;
    for (int i = 1; i <= interior; ++i) {
        knots_[static_cast<std::size_t>(order - 1 + i)] =
            a + (b - a) * i / (interior + 1);
    }
    for (int i = num_basis; i < num_basis + order; ++i) {
        knots_[static_cast<std::size_t>(i)] = b;
    }

    // Assemble the derivative Gram matrices by per-interval quadrature.
    const int p = order_ - 1;
    const int ndmax = std::min(2, p);
    for (auto& g : grams_) g = Eigen::MatrixXd::Zero(num_basis_, num_basis_);
    std::vector<double> gx, gw;
    gauss_legendre(order_, gx, gw);
    Eigen::MatrixXd ders(ndmax + 1, order_);
    int first = 0;
    for (int s = p; s < num_basis_; ++s) {
        const double u0 = knots_[static_cast<std::size_t>(s)];
        const double u1 = knots_[static_cast<std::size_t>(s + 1)];
        if (!(u1 > u0)) continue;
        const double mid = 0.5 * (u0 + u1);
        const double half = 0.5 * (u1 - u0);
        for (int g = 0; g < order_; ++g) {
            const double t = mid + half * gx[static_cast<std::size_t>(g)];
            const double wgt = half * gw[static_cast<std::size_t>(g)];
            evaluate_nonzero(t, ndmax, first, ders);
            for (int l = 0; l <= ndmax; ++l) {
                for (int i = 0; i < order_; ++i) {
                    for (int j = 0; j < order_; ++j) {
                        grams_[l](first + i, first + j) += wgt * ders(l, i) * ders(l, j);
                    }
                }
            }
        }
    }
    // (w*a)*b and (w*b)*a round differently; restore exact symmetry.
    for (auto& g : grams_) g = (0.5 * (g + g.transpose())).eval();
}

int BSplineBasis::find_span(double t) const {
    const int p = order_ - 1;
    if (t >= b_) return num_basis_ - 1;
    if (t <= a_) return p;
    int lo = p;
    int hi = num_basis_;
    int mid = (lo + hi) / 2;
    while (t < knots_[static_cast<std::size_t>(mid)] ||
           t >= knots_[static_cast<std::size_t>(mid + 1)]) {
        if (t < knots_[static_cast<std::size_t>(mid)]) {
            hi = mid;
        } else {
            lo = mid;
        }
        mid = (lo + hi) / 2;
    }
    return mid;
}

void BSplineBasis::evaluate_nonzero(double t, int nderiv, int& first,
                                    Eigen::Ref<Eigen::MatrixXd> ders) const {
    const int p = order_ - 1;
    if (!(t >= a_ && t <= b_)) {
        throw std::invalid_argument("BSplineBasis: point outside [a, b]");
    }
    if (nderiv < 0 || nderiv > p) {
        throw std::invalid_argument("BSplineBasis: derivative order out of range");
    }
    if (ders.rows() < nderiv + 1 || ders.cols() < order_) {
        throw std::invalid_argument("BSplineBasis: ders buffer too small");
    }
    const int span = find_span(t);
    first = span - p;

    // Basis values via the triangular table, derivatives from its knot
    // differences (the a-array recursion).
    Eigen::MatrixXd ndu(p + 1, p + 1);
    std::vector<double> left(static_cast<std::size_t>(p + 1));
    std::vector<double> right(static_cast<std::size_t>(p + 1));
    ndu(0, 0) = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[static_cast<std::size_t>(j)] = t - knots_[static_cast<std::size_t>(span + 1 - j)];
        right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(span + j)] - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu(j, r) = right[static_cast<std::size_t>(r + 1)] +
                        left[static_cast<std::size_t>(j - r)];
            const double temp = ndu(r, j - 1) / ndu(j, r);
            ndu(r, j) = saved + right[static_cast<std::size_t>(r + 1)] * temp;
            saved = left[static_cast<std::size_t>(j - r)] * temp;
        }
        ndu(j, j) = saved;
    }
    for (int j = 0; j <= p; ++j) ders(0, j) = ndu(j, p);
    if (nderiv == 0) return;

    Eigen::MatrixXd a(2, p + 1);
    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        a(0, 0) = 1.0;
        for (int k = 1; k <= nderiv; ++k) {
            double d = 0.0;
            const int rk = r - k;
            const int pk = p - k;
            if (r >= k) {
                a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
                d = a(s2, 0) * ndu(rk, pk);
            }
            const int j1 = (rk >= -1) ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
                d += a(s2, j) * ndu(rk + j, pk);
            }
            if (r <= pk) {
                a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
                d += a(s2, k) * ndu(r, pk);
            }
            ders(k, r) = d;
            std::swap(s1, s2);
        }
    }
    double factor = p;
    for (int k = 1; k <= nderiv; ++k) {
        for (int j = 0; j <= p; ++j) ders(k, j) *= factor;
        factor *= p - k;
    }
}

Eigen::MatrixXd BSplineBasis::evaluate(std::span<const double> points, int deriv) const {
    if (deriv < 0 || deriv > order_ - 2) {
        throw std::invalid_argument("BSplineBasis::evaluate: deriv must be in [0, order-2]");
    }
    Eigen::MatrixXd out =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(points.size()), num_basis_);
    Eigen::MatrixXd ders(deriv + 1, order_);
    int first = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        evaluate_nonzero(points[i], deriv, first, ders);
        for (int j = 0; j < order_; ++j) {
            out(static_cast<Eigen::Index>(i), first + j) = ders(deriv, j);
        }
    }
    return out;
}

const Eigen::MatrixXd& BSplineBasis::gram(int l) const {
    if (l < 0 || l > 2) throw std::invalid_argument("BSplineBasis::gram: l must be 0, 1 or 2");
    return grams_[l];
}

std::string BSplineBasis::to_json() const {
    nlohmann::json j;
    j["order"] = order_;
    j["K"] = num_basis_;
    j["knots"] = knots_;
    return j.dump(2);
}

PenalizedSolver::PenalizedSolver(const BSplineBasis& basis,
                                 std::span<const double> grid, double lambda)
    : design_(basis.evaluate(grid, 0)),
      lambda_(lambda),
      m_(static_cast<int>(grid.size())) {
    if (lambda < 0.0) throw std::invalid_argument("PenalizedSolver: lambda must be >= 0");
    if (grid.empty()) throw std::invalid_argument("PenalizedSolver: empty grid");
    if (lambda == 0.0 && m_ < basis.size()) {
        throw std::invalid_argument("PenalizedSolver: unpenalized fit needs m >= K");
    }
    const Eigen::MatrixXd StS = design_.transpose() * design_;
    // Ridge relative to the unpenalized normal equations only; tying it to
    // lambda would bias heavy smoothing away from the exact penalized
    // solution.
    const double ridge = 1e-10 * StS.diagonal().mean();
    Eigen::MatrixXd A = StS + lambda * basis.penalty();
    A.diagonal().array() += ridge;
    llt_.compute(A);
    if (llt_.info() != Eigen::Success) {
        throw std::runtime_error("PenalizedSolver: normal equations not positive definite");
    }
    df_ = llt_.solve(StS).trace();
}

PenalizedFit PenalizedSolver::fit(const Eigen::VectorXd& values) const {
    if (values.size() != m_) {
        throw std::invalid_argument("PenalizedSolver::fit: value/grid length mismatch");
    }
    PenalizedFit out;
    out.lambda = lambda_;
    out.df = df_;
    out.coefficients = llt_.solve(design_.transpose() * values);
    out.sse = (values - design_ * out.coefficients).squaredNorm();
    const double denom = 1.0 - df_ / m_;
    out.gcv = denom > 0.0 ? (out.sse / m_) / (denom * denom)
                          : std::numeric_limits<double>::infinity();
    return out;
}

PenalizedFit fit_penalized(const Eigen::VectorXd& values,
                           std::span<const double> grid,
                           const BSplineBasis& basis, double lambda) {
    return PenalizedSolver(basis, grid, lambda).fit(values);
}

std::vector<double> default_lambda_grid() {
    std::vector<double> g(41);
    for (int i = 0; i < 41; ++i) g[static_cast<std::size_t>(i)] = std::pow(10.0, -6.0 + 0.25 * i);
    return g;
}

namespace {

// Index of the winning lambda: smallest GCV, with anything within a
// data-scale tolerance of the minimum counting as tied and the largest tied
// lambda taken.
std::size_t pick_lambda(std::span<const double> lambda_grid,
                        std::span<const double> gcv, double mean_square) {
    double min_gcv = std::numeric_limits<double>::infinity();
    for (double g : gcv) min_gcv = std::min(min_gcv, g);
    const double tol = 1e-9 * mean_square + std::numeric_limits<double>::min();
    std::size_t best = 0;
    double best_lambda = -1.0;
    for (std::size_t i = 0; i < gcv.size(); ++i) {
        if (gcv[i] <= min_gcv + tol && lambda_grid[i] > best_lambda) {
            best_lambda = lambda_grid[i];
            best = i;
        }
    }
    return best;
}

}  // namespace

LambdaSelection select_lambda_gcv(const Eigen::VectorXd& values,
                                  std::span<const double> grid,
                                  const BSplineBasis& basis,
                                  std::span<const double> lambda_grid) {
    if (lambda_grid.empty()) {
        throw std::invalid_argument("select_lambda_gcv: empty lambda grid");
    }
    std::vector<PenalizedFit> fits;
    fits.reserve(lambda_grid.size());
    LambdaSelection sel;
    sel.gcv_by_lambda.reserve(lambda_grid.size());
    for (double lambda : lambda_grid) {
        fits.push_back(fit_penalized(values, grid, basis, lambda));
        sel.gcv_by_lambda.push_back(fits.back().gcv);
    }
    const double ms = values.squaredNorm() / static_cast<double>(values.size());
    const std::size_t idx = pick_lambda(lambda_grid, sel.gcv_by_lambda, ms);
    sel.lambda = lambda_grid[idx];
    sel.fit = std::move(fits[idx]);
    return sel;
}

Eigen::MatrixXd CoefficientSet::evaluate(std::span<const double> grid) const {
    if (!basis) throw std::logic_error("CoefficientSet: no basis attached");
    return coefficients * basis->evaluate(grid, 0).transpose();
}

CoefficientSet smooth_curveset(const CurveSet& cs,
                               std::shared_ptr<const BSplineBasis> basis,
                               const SmoothingSpec& spec) {
    if (!basis) throw std::invalid_argument("smooth_curveset: null basis");
    CoefficientSet out;
    out.basis = basis;
    out.ids = cs.ids;
    out.coefficients.resize(cs.n(), basis->size());
    out.lambda.resize(static_cast<std::size_t>(cs.n()));

    if (!spec.gcv) {
        PenalizedSolver solver(*basis, cs.grid, spec.lambda);
        for (int i = 0; i < cs.n(); ++i) {
            PenalizedFit fit = solver.fit(cs.values.row(i).transpose());
            out.coefficients.row(i) = fit.coefficients.transpose();
            out.lambda[static_cast<std::size_t>(i)] = spec.lambda;
        }
        return out;
    }

    const std::vector<double> grid_default = default_lambda_grid();
    std::span<const double> lambdas =
        spec.lambda_grid.empty() ? std::span<const double>(grid_default)
                                 : std::span<const double>(spec.lambda_grid);
    // One factorization per lambda, shared by every curve.
    std::vector<PenalizedSolver> solvers;
    solvers.reserve(lambdas.size());
    for (double lambda : lambdas) solvers.emplace_back(*basis, cs.grid, lambda);

    std::vector<PenalizedFit> fits(lambdas.size());
    std::vector<double> gcv(lambdas.size());
    for (int i = 0; i < cs.n(); ++i) {
        const Eigen::VectorXd values = cs.values.row(i).transpose();
        for (std::size_t l = 0; l < lambdas.size(); ++l) {
            fits[l] = solvers[l].fit(values);
            gcv[l] = fits[l].gcv;
        }
        const double ms = values.squaredNorm() / static_cast<double>(values.size());
        const std::size_t idx = pick_lambda(lambdas, gcv, ms);
        out.coefficients.row(i) = fits[idx].coefficients.transpose();
        out.lambda[static_cast<std::size_t>(i)] = lambdas[idx];
    }
    return out;
}

std::vector<GcvByBasisRow> gcv_by_num_basis(const CurveSet& cs,
                                            std::span<const int> num_basis_grid,
                                            int order, double lambda) {
    std::vector<GcvByBasisRow> rows;
    rows.reserve(num_basis_grid.size());
    for (int K : num_basis_grid) {
        BSplineBasis basis(cs.grid.front(), cs.grid.back(), K, order);
        PenalizedSolver solver(basis, cs.grid, lambda);
        double total = 0.0;
        for (int i = 0; i < cs.n(); ++i) {
            total += solver.fit(cs.values.row(i).transpose()).gcv;
        }
        rows.push_back({K, total / cs.n()});
    }
    return rows;
}

void save_coefficients(const CoefficientSet& coeffs,
                       const std::filesystem::path& path) {
    std::string out = "curve_id";
    const int K = static_cast<int>(coeffs.coefficients.cols());
    for (int k = 1; k <= K; ++k) out += ",c" + std::to_string(k);
    out += '\n';
    for (int i = 0; i < coeffs.n(); ++i) {
        out += coeffs.ids[static_cast<std::size_t>(i)];
        for (int k = 0; k < K; ++k) {
            out += ',';
            out += csv::format(coeffs.coefficients(i, k));
        }
        out += '\n';
    }
    csv::write_file(path, out);
}

}  // namespace fdc
