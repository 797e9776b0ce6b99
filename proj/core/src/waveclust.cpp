#include "fdcluster/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <json.hpp>

#include "fdcluster/mvclust.hpp"

namespace fdc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<int> wave_initial_labels(const Eigen::MatrixXd& W, int M,
                                     bool stochastic, std::mt19937_64& rng) {
    const int n = static_cast<int>(W.rows());
    if (stochastic) {
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            labels[static_cast<std::size_t>(i)] =
                static_cast<int>((rng() >> 11) % static_cast<std::uint64_t>(M));
        }
        std::vector<int> count(static_cast<std::size_t>(M), 0);
        for (int l : labels) ++count[static_cast<std::size_t>(l)];
        for (int m = 0; m < M; ++m) {
            if (count[static_cast<std::size_t>(m)] == 0) {
                --count[static_cast<std::size_t>(labels[static_cast<std::size_t>(m)])];
                labels[static_cast<std::size_t>(m)] = m;
                count[static_cast<std::size_t>(m)] = 1;
            }
        }
        return labels;
    }
    KmeansOptions ko;
    ko.restarts = 2;
    ko.max_iter = 50;
    ko.seed = rng();
    return kmeans(W, M, ko).partition.labels;
}

// One EM run for a fixed variance structure from given starting labels.
WaveletModel waveclust_run(const Eigen::MatrixXd& W, int M,
                           VarianceStructure structure, const WaveclustOptions& opts,
                           const std::vector<int>& labels0) {
    const int n = static_cast<int>(W.rows());
    const int J = static_cast<int>(W.cols());
    const int n_gamma = structure == VarianceStructure::group ? M : 1;
    const double log2pi = std::log(2.0 * std::numbers::pi_v<double>);
    const double data_var = (W.array() - W.mean()).square().sum() / (n * J);
    const double var_floor = std::max(1e-12 * data_var, 1e-300);

    WaveletModel md;
    md.structure = structure;
    md.means.resize(M, J);
    md.gamma2.resize(n_gamma);
    md.weights.resize(M);

    // Start from the hard partition: cluster means, member counts, and the
    // within-cluster variance split evenly between the two levels.
    std::vector<int> count(static_cast<std::size_t>(M), 0);
    md.means.setZero();
    for (int i = 0; i < n; ++i) {
        md.means.row(labels0[static_cast<std::size_t>(i)]) += W.row(i);
        ++count[static_cast<std::size_t>(labels0[static_cast<std::size_t>(i)])];
    }
    for (int m = 0; m < M; ++m) {
        if (count[static_cast<std::size_t>(m)] == 0) {
            throw ClusterDeathError("waveclust_em: empty starting cluster");
        }
        md.means.row(m) /= count[static_cast<std::size_t>(m)];
        md.weights(m) = static_cast<double>(count[static_cast<std::size_t>(m)]) / n;
    }
    if (structure == VarianceStructure::group) {
        for (int m = 0; m < M; ++m) {
            double ss = 0.0;
            for (int i = 0; i < n; ++i) {
                if (labels0[static_cast<std::size_t>(i)] == m) {
                    ss += (W.row(i) - md.means.row(m)).squaredNorm();
                }
            }
            const double s2 = std::max(
                ss / (static_cast<double>(count[static_cast<std::size_t>(m)]) * J),
                var_floor);
            md.gamma2(m) = 0.5 * s2;
        }
        double pooled = 0.0;
        for (int i = 0; i < n; ++i) {
            pooled += (W.row(i) - md.means.row(labels0[static_cast<std::size_t>(i)]))
                          .squaredNorm();
        }
        md.sigma_eps2 = std::max(0.5 * pooled / (static_cast<double>(n) * J), var_floor);
    } else {
        double pooled = 0.0;
        for (int i = 0; i < n; ++i) {
            pooled += (W.row(i) - md.means.row(labels0[static_cast<std::size_t>(i)]))
                          .squaredNorm();
        }
        const double s2 = std::max(pooled / (static_cast<double>(n) * J), var_floor);
        md.gamma2(0) = 0.5 * s2;
        md.sigma_eps2 = 0.5 * s2;
    }

    Eigen::MatrixXd post(n, M);
    double ll = -kInf;
    double ll_prev = -kInf;
    // The loop always ends right after an E step so the reported loglik and
    // posteriors belong to the reported parameters.
    for (int iter = 0;; ++iter) {
        // E step: diagonal marginals make everything per-coordinate.
        Eigen::MatrixXd logd(n, M);
        for (int m = 0; m < M; ++m) {
            const double g2 = opts.fix_gamma_zero
                                  ? 0.0
                                  : md.gamma2(structure == VarianceStructure::group ? m : 0);
            const double tau = std::max(g2 + md.sigma_eps2, var_floor);
            const double cterm = J * (log2pi + std::log(tau));
            for (int i = 0; i < n; ++i) {
                const double q = (W.row(i) - md.means.row(m)).squaredNorm() / tau;
                logd(i, m) = std::log(md.weights(m)) - 0.5 * (cterm + q);
            }
        }
        ll = 0.0;
        for (int i = 0; i < n; ++i) {
            const double mx = logd.row(i).maxCoeff();
            double sum = 0.0;
            for (int m = 0; m < M; ++m) sum += std::exp(logd(i, m) - mx);
            const double lse = mx + std::log(sum);
            ll += lse;
            for (int m = 0; m < M; ++m) post(i, m) = std::exp(logd(i, m) - lse);
        }
        md.loglik_trace.push_back(ll);
        if (iter > 0 && ll - ll_prev <= opts.em.tol * (1.0 + std::abs(ll))) break;
        if (iter >= opts.em.max_iter) break;
        ll_prev = ll;

        // M step via the conditional random-effect moments: shrinkage
        // rho = g2/(g2+s2) per cluster, conditional variance v = rho*s2.
        const Eigen::VectorXd Nm = post.colwise().sum().transpose();
        for (int m = 0; m < M; ++m) {
            if (Nm(m) < 1e-10) throw ClusterDeathError("waveclust_em: component died");
        }
        md.weights = Nm / n;

        Eigen::VectorXd rho(M), condv(M);
        for (int m = 0; m < M; ++m) {
            const double g2 = opts.fix_gamma_zero
                                  ? 0.0
                                  : md.gamma2(structure == VarianceStructure::group ? m : 0);
            const double tau = std::max(g2 + md.sigma_eps2, var_floor);
            rho(m) = g2 / tau;
            condv(m) = rho(m) * md.sigma_eps2;
        }

        Eigen::MatrixXd means_new(M, J);
        double eps_acc = 0.0;
        Eigen::VectorXd gamma_acc = Eigen::VectorXd::Zero(n_gamma);
        Eigen::VectorXd gamma_den = Eigen::VectorXd::Zero(n_gamma);
        for (int m = 0; m < M; ++m) {
            // With nu_hat_im = rho (w_i - omega_m) held fixed, the mean
            // maximizer is sum r (w - nu_hat) / sum r, a rho-blend of the
            // weighted mean and the old mean; the residual against it
            // telescopes to (1-rho)(w - wbar).
            const Eigen::RowVectorXd wbar = (post.col(m).transpose() * W) / Nm(m);
            means_new.row(m) = (1.0 - rho(m)) * wbar + rho(m) * md.means.row(m);
            const int gi = structure == VarianceStructure::group ? m : 0;
            for (int i = 0; i < n; ++i) {
                const double r = post(i, m);
                if (r == 0.0) continue;
                const double nu2 =
                    rho(m) * rho(m) * (W.row(i) - md.means.row(m)).squaredNorm();
                gamma_acc(gi) += r * (nu2 + J * condv(m));
                gamma_den(gi) += r;
                const double resid2 = (1.0 - rho(m)) * (1.0 - rho(m)) *
                                      (W.row(i) - wbar).squaredNorm();
                eps_acc += r * (resid2 + J * condv(m));
            }
        }
        md.means = std::move(means_new);
        if (!opts.fix_gamma_zero) {
            for (int g = 0; g < n_gamma; ++g) {
                md.gamma2(g) = gamma_acc(g) / (gamma_den(g) * J);
            }
        } else {
            md.gamma2.setZero();
        }
        md.sigma_eps2 = std::max(eps_acc / (static_cast<double>(n) * J), var_floor);
    }

    md.posteriors = std::move(post);
    md.loglik = ll;
    md.n_params = (M - 1) + M * J + (opts.fix_gamma_zero ? 0 : n_gamma) + 1;
    md.bic = -2.0 * ll + md.n_params * std::log(static_cast<double>(n));
    double entropy = 0.0;
    for (Eigen::Index i = 0; i < md.posteriors.rows(); ++i) {
        for (int m = 0; m < M; ++m) {
            const double g = md.posteriors(i, m);
            if (g > 0.0) entropy -= g * std::log(g);
        }
    }
    md.icl = md.bic + 2.0 * entropy;
    return md;
}

WaveletModel waveclust_structure(const Eigen::MatrixXd& W, int M,
                                 VarianceStructure structure,
                                 const WaveclustOptions& opts) {
    std::mt19937_64 rng(opts.em.seed);
    WaveletModel best;
    best.loglik = -kInf;
    bool have = false;
    std::string last_error = "waveclust_em: no attempt ran";
    for (int r = 0; r < std::max(1, opts.em.restarts); ++r) {
        try {
            const std::vector<int> labels =
                wave_initial_labels(W, M, opts.em.stochastic_init, rng);
            WaveletModel md = waveclust_run(W, M, structure, opts, labels);
            if (md.loglik > best.loglik) {
                best = std::move(md);
                have = true;
            }
        } catch (const std::exception& e) {
            last_error = e.what();
        }
    }
    if (!have) throw ClusterDeathError(last_error);
    return best;
}

}  // namespace

std::vector<int> WaveletModel::hard_labels() const {
    std::vector<int> labels(static_cast<std::size_t>(posteriors.rows()));
    for (Eigen::Index i = 0; i < posteriors.rows(); ++i) {
        Eigen::Index arg = 0;
        posteriors.row(i).maxCoeff(&arg);
        labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
    return labels;
}

std::string WaveletModel::to_json() const {
    nlohmann::json j;
    j["M"] = static_cast<int>(means.rows());
    j["J"] = static_cast<int>(means.cols());
    j["structure"] = structure == VarianceStructure::group ? "group" : "constant";
    j["gamma2"] = std::vector<double>(gamma2.data(), gamma2.data() + gamma2.size());
    j["sigma_eps2"] = sigma_eps2;
    j["weights"] = std::vector<double>(weights.data(), weights.data() + weights.size());
    j["loglik"] = loglik;
    j["bic"] = bic;
    j["icl"] = icl;
    j["n_params"] = n_params;
    j["padded_length"] = padded_length;
    j["original_length"] = original_length;
    j["loglik_trace"] = loglik_trace;
    return j.dump(2);
}

WaveletModel waveclust_em(const CurveSet& cs, int M, const WaveclustOptions& opts) {
    const int n = cs.n();
    if (M < 1 || M > n) throw std::invalid_argument("waveclust_em: need 1 <= M <= n");
    const std::size_t target = next_power_of_two(static_cast<std::size_t>(cs.m()));
    const int J = static_cast<int>(target);
    Eigen::MatrixXd W(n, J);
    for (int i = 0; i < n; ++i) {
        std::vector<double> row(cs.values.row(i).begin(), cs.values.row(i).end());
        HaarDwt dwt = haar_dwt(pad_reflect(row, target));
        if (opts.denoise) dwt = hard_threshold(dwt, universal_threshold(dwt));
        W.row(i) = dwt.flatten().transpose();
    }

    WaveletModel out;
    if (opts.structure == VarianceStructure::automatic) {
        WaveletModel constant = waveclust_structure(W, M, VarianceStructure::constant, opts);
        try {
            WaveletModel group = waveclust_structure(W, M, VarianceStructure::group, opts);
            out = group.bic < constant.bic ? std::move(group) : std::move(constant);
        } catch (const std::exception&) {
            out = std::move(constant);
        }
    } else {
        out = waveclust_structure(W, M, opts.structure, opts);
    }
    out.padded_length = J;
    out.original_length = cs.m();
    return out;
}

}  // namespace fdc
