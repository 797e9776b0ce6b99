#include "fdcluster/fpca.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "csv.hpp"

namespace fdc {

FpcaModel fpca(const Eigen::MatrixXd& coefficients, const Eigen::MatrixXd& gram) {
    const Eigen::Index n = coefficients.rows();
    const Eigen::Index K = coefficients.cols();
    if (n < 2) throw std::invalid_argument("fpca: need at least two curves");
    if (gram.rows() != K || gram.cols() != K) {
        throw std::invalid_argument("fpca: gram size does not match coefficients");
    }

    FpcaModel model;
    model.mean_coeffs = coefficients.colwise().mean().transpose();
    const Eigen::MatrixXd centered =
        coefficients.rowwise() - model.mean_coeffs.transpose();
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);

    // With W = U'U the W-metric eigenproblem becomes an ordinary symmetric
    // one for U cov U'; eigenvectors pull back through U^-1 and come out
    // W-orthonormal.
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("fpca: gram matrix not positive definite");
    }
    const Eigen::MatrixXd U = llt.matrixU();
    Eigen::MatrixXd mid = U * cov * U.transpose();
    mid = 0.5 * (mid + mid.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mid);
    if (eig.info() != Eigen::Success) throw std::runtime_error("fpca: eigensolver failed");

    // Ascending from the solver; store descending, clipping roundoff
    // negatives.
    model.eigenvalues.resize(K);
    model.eigen_coeffs.resize(K, K);
    for (Eigen::Index l = 0; l < K; ++l) {
        const Eigen::Index src = K - 1 - l;
        model.eigenvalues(l) = std::max(0.0, eig.eigenvalues()(src));
        model.eigen_coeffs.row(l) =
            U.triangularView<Eigen::Upper>().solve(eig.eigenvectors().col(src)).transpose();
    }

    const double max_ev = model.eigenvalues.size() > 0 ? model.eigenvalues(0) : 0.0;
    model.rank = 0;
    for (Eigen::Index l = 0; l < K; ++l) {
        if (model.eigenvalues(l) > 1e-12 * max_ev && model.eigenvalues(l) > 0.0) {
            model.rank = static_cast<int>(l) + 1;
        }
    }

    // Sign convention: largest-magnitude coefficient positive.
    for (Eigen::Index l = 0; l < K; ++l) {
        Eigen::Index imax = 0;
        model.eigen_coeffs.row(l).cwiseAbs().maxCoeff(&imax);
        if (model.eigen_coeffs(l, imax) < 0.0) model.eigen_coeffs.row(l) *= -1.0;
    }

    model.scores = centered * gram * model.eigen_coeffs.transpose();

    const double total = model.eigenvalues.sum();
    model.var_explained.resize(K);
    double running = 0.0;
    for (Eigen::Index l = 0; l < K; ++l) {
        running += model.eigenvalues(l);
        model.var_explained(l) = total > 0.0 ? running / total : 0.0;
    }
    return model;
}

FpcaModel fpca(const CoefficientSet& coeffs) {
    if (!coeffs.basis) throw std::invalid_argument("fpca: coefficient set has no basis");
    FpcaModel model = fpca(coeffs.coefficients, coeffs.basis->gram(0));
    model.basis = coeffs.basis;
    return model;
}

int select_components(const FpcaModel& model, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw std::invalid_argument("select_components: threshold must be in (0, 1]");
    }
    if (model.eigenvalues.sum() <= 0.0) {
        throw std::invalid_argument("select_components: zero total variance");
    }
    for (Eigen::Index l = 0; l < model.var_explained.size(); ++l) {
        if (model.var_explained(l) + 1e-12 >= threshold) return static_cast<int>(l) + 1;
    }
    return static_cast<int>(model.var_explained.size());
}

CoefficientSet reconstruct(const FpcaModel& model, int L, const CoefficientSet& source) {
    if (L < 1 || L > model.rank) {
        throw std::invalid_argument("reconstruct: L must be in [1, rank]");
    }
    CoefficientSet out;
    out.basis = model.basis ? model.basis : source.basis;
    out.ids = source.ids;
    out.lambda = source.lambda;
    out.coefficients = model.scores.leftCols(L) * model.eigen_coeffs.topRows(L);
    out.coefficients.rowwise() += model.mean_coeffs.transpose();
    return out;
}

void save_scores(const FpcaModel& model, std::span<const std::string> ids,
                 const std::filesystem::path& path) {
    if (static_cast<Eigen::Index>(ids.size()) != model.scores.rows()) {
        throw std::invalid_argument("save_scores: id count does not match scores");
    }
    const Eigen::Index L = model.scores.cols();
    std::string out = "curve_id";
    for (Eigen::Index l = 1; l <= L; ++l) out += ",xi" + std::to_string(l);
    out += '\n';
    for (Eigen::Index i = 0; i < model.scores.rows(); ++i) {
        out += ids[static_cast<std::size_t>(i)];
        for (Eigen::Index l = 0; l < L; ++l) {
            out += ',';
            out += csv::format(model.scores(i, l));
        }
        out += '\n';
    }
    csv::write_file(path, out);
}

Eigen::MatrixXd sample_eigenfunctions(const FpcaModel& model,
                                      std::span<const double> grid) {
    if (!model.basis) throw std::logic_error("sample_eigenfunctions: model has no basis");
    return model.eigen_coeffs * model.basis->evaluate(grid, 0).transpose();
}

}  // namespace fdc
