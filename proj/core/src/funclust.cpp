#include "fdcluster/funclust.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "csv.hpp"

namespace fdc {

double functional_distance(const Eigen::VectorXd& ci, const Eigen::VectorXd& cj,
                           const BSplineBasis& basis, int l) {
    if (ci.size() != basis.size() || cj.size() != basis.size()) {
        throw std::invalid_argument("functional_distance: coefficient length != K");
    }
    const Eigen::VectorXd d = ci - cj;
    const double q = d.dot(basis.gram(l) * d);
    return std::sqrt(std::max(0.0, q));
}

FunctionalDistanceMatrix distance_matrix(const CoefficientSet& coeffs, int l) {
    if (!coeffs.basis) throw std::invalid_argument("distance_matrix: no basis attached");
    const Eigen::MatrixXd& W = coeffs.basis->gram(l);
    const int n = coeffs.n();
    FunctionalDistanceMatrix out;
    out.deriv = l;
    out.D = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const Eigen::VectorXd d =
                (coeffs.coefficients.row(i) - coeffs.coefficients.row(j)).transpose();
            out.D(i, j) = out.D(j, i) = std::sqrt(std::max(0.0, d.dot(W * d)));
        }
    }
    return out;
}

Eigen::MatrixXd metric_factor(const BSplineBasis& basis, int l) {
    const Eigen::MatrixXd& W = basis.gram(l);
    const int K = basis.size();
    // Identity metric needs no transform; keeps coefficient geometry exact.
    if ((W - Eigen::MatrixXd::Identity(K, K)).cwiseAbs().maxCoeff() < 1e-12) {
        return Eigen::MatrixXd::Identity(K, K);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(W);
    if (eig.info() != Eigen::Success) {
        throw std::runtime_error("metric_factor: eigensolver failed");
    }
    // W_1 and W_2 are only positive semidefinite (constants, linears in the
    // null space); clip roundoff negatives and build F = Lambda^(1/2) V'.
    Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0);
    return ev.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

FunctionalKmeansResult functional_kmeans(const CoefficientSet& coeffs, int M,
                                         int l, const KmeansOptions& opts) {
    if (!coeffs.basis) throw std::invalid_argument("functional_kmeans: no basis attached");
    const Eigen::MatrixXd F = metric_factor(*coeffs.basis, l);
    // Under Y = C F' the metric is Euclidean and coefficient means stay
    // means, so plain k-means on Y solves the functional problem.
    const Eigen::MatrixXd Y = coeffs.coefficients * F.transpose();
    KmeansResult km = kmeans(Y, M, opts);

    FunctionalKmeansResult out;
    out.wcss_trace = std::move(km.wcss_trace);
    out.iterations = km.iterations;
    out.partition.labels = km.partition.labels;
    out.partition.M = M;
    out.partition.wcss = km.partition.wcss;
    // Report centroids in coefficient coordinates.
    out.partition.centroids = Eigen::MatrixXd::Zero(M, coeffs.coefficients.cols());
    std::vector<int> count(static_cast<std::size_t>(M), 0);
    for (int i = 0; i < coeffs.n(); ++i) {
        const int m = out.partition.labels[static_cast<std::size_t>(i)];
        out.partition.centroids.row(m) += coeffs.coefficients.row(i);
        ++count[static_cast<std::size_t>(m)];
    }
    for (int m = 0; m < M; ++m) {
        out.partition.centroids.row(m) /= count[static_cast<std::size_t>(m)];
    }
    return out;
}

FunctionalSelection select_M_functional(const CoefficientSet& coeffs, int l,
                                        std::span<const int> M_range,
                                        const KmeansOptions& opts) {
    if (M_range.empty()) {
        throw std::invalid_argument("select_M_functional: empty M range");
    }
    const FunctionalDistanceMatrix dm = distance_matrix(coeffs, l);
    FunctionalSelection out;
    double best_sil = -2.0;
    for (int M : M_range) {
        KmeansOptions mo = opts;
        mo.seed = opts.seed + static_cast<std::uint64_t>(M);
        FunctionalKmeansResult fk = functional_kmeans(coeffs, M, l, mo);
        const double sil = silhouette(dm.D, fk.partition.labels).mean;
        out.silhouette_by_M.emplace_back(M, sil);
        if (sil > best_sil) {
            best_sil = sil;
            out.best_M = M;
            out.partition = std::move(fk.partition);
        }
    }
    return out;
}

void save_distance_matrix(const FunctionalDistanceMatrix& dm,
                          const std::filesystem::path& path) {
    std::string out;
    for (Eigen::Index i = 1; i < dm.D.rows(); ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            if (j > 0) out += ',';
            out += csv::format(dm.D(i, j));
        }
        out += '\n';
    }
    csv::write_file(path, out);
}

}  // namespace fdc
