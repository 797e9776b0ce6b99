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

struct FclustState {
    Eigen::MatrixXd mu;     // M x K
    Eigen::MatrixXd gamma;  // K x K
    double sigma2 = 0.0;
    Eigen::VectorXd weights;
};

// Hard labels to one-hot responsibilities, guaranteeing no empty cluster.
Eigen::MatrixXd one_hot(const std::vector<int>& labels, int M) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), M);
    for (std::size_t i = 0; i < labels.size(); ++i) r(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    return r;
}

std::vector<int> initial_labels(const Eigen::MatrixXd& coeffs, int M,
                                bool stochastic, std::mt19937_64& rng) {
    const int n = static_cast<int>(coeffs.rows());
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    if (stochastic) {
        for (int i = 0; i < n; ++i) {
            labels[static_cast<std::size_t>(i)] =
                static_cast<int>((rng() >> 11) % static_cast<std::uint64_t>(M));
        }
        // Force every cluster non-empty.
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
    return kmeans(coeffs, M, ko).partition.labels;
}

}  // namespace

std::vector<int> FclustModel::hard_labels() const {
    std::vector<int> labels(static_cast<std::size_t>(posteriors.rows()));
    for (Eigen::Index i = 0; i < posteriors.rows(); ++i) {
        Eigen::Index arg = 0;
        posteriors.row(i).maxCoeff(&arg);
        labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
    return labels;
}

std::string FclustModel::to_json() const {
    nlohmann::json j;
    j["M"] = static_cast<int>(mu.rows());
    j["K"] = static_cast<int>(mu.cols());
    j["sigma"] = sigma;
    j["loglik"] = loglik;
    j["bic"] = bic;
    j["aic"] = aic;
    j["n_params"] = n_params;
    j["weights"] = std::vector<double>(weights.data(), weights.data() + weights.size());
    j["loglik_trace"] = loglik_trace;
    auto matrix_rows = [](const Eigen::MatrixXd& A) {
        std::vector<std::vector<double>> rows(static_cast<std::size_t>(A.rows()));
        for (Eigen::Index i = 0; i < A.rows(); ++i) {
            rows[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(A.cols()));
            for (Eigen::Index c = 0; c < A.cols(); ++c) {
                rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] = A(i, c);
            }
        }
        return rows;
    };
    j["mu"] = matrix_rows(mu);
    j["gamma"] = matrix_rows(gamma);
    if (basis) j["basis"] = nlohmann::json::parse(basis->to_json());
    return j.dump(2);
}

FclustModel fclust_em(const CurveSet& cs, std::shared_ptr<const BSplineBasis> basis,
                      int M, const FclustOptions& opts) {
    if (!basis) throw std::invalid_argument("fclust_em: null basis");
    const int n = cs.n();
    const int mp = cs.m();
    const int K = basis->size();
    if (M < 1 || M > n) throw std::invalid_argument("fclust_em: need 1 <= M <= n");
    if (mp <= K) throw std::invalid_argument("fclust_em: need more grid points than basis functions");

    const Eigen::MatrixXd S = basis->evaluate(cs.grid, 0);
    Eigen::MatrixXd StS = S.transpose() * S;
    StS.diagonal().array() += 1e-12 * StS.diagonal().mean();
    const Eigen::LLT<Eigen::MatrixXd> StS_llt(StS);

    // Per-curve least-squares coefficients, used by every initialization.
    Eigen::MatrixXd C0(n, K);
    for (int i = 0; i < n; ++i) {
        C0.row(i) = StS_llt.solve(S.transpose() * cs.values.row(i).transpose()).transpose();
    }
    double ls_sse = 0.0;
    for (int i = 0; i < n; ++i) {
        ls_sse += (cs.values.row(i) - C0.row(i) * S.transpose()).squaredNorm();
    }
    const double data_var =
        (cs.values.array() - cs.values.mean()).square().sum() / (n * mp);
    const double sigma2_floor = std::max(1e-12 * data_var, 1e-300);

    std::mt19937_64 rng(opts.em.seed);
    const double log2pi = std::log(2.0 * std::numbers::pi_v<double>);

    FclustModel best;
    best.loglik = -kInf;
    bool have = false;
    std::string last_error = "fclust_em: no attempt ran";

    for (int restart = 0; restart < std::max(1, opts.em.restarts); ++restart) {
        try {
            const std::vector<int> labels = initial_labels(C0, M, opts.em.stochastic_init, rng);
            Eigen::MatrixXd post = one_hot(labels, M);

            FclustState st;
            st.weights = post.colwise().mean().transpose();
            st.mu.resize(M, K);
            for (int m = 0; m < M; ++m) {
                const double Nm = post.col(m).sum();
                st.mu.row(m) = (post.col(m).transpose() * C0) / Nm;
            }
            st.sigma2 = std::max(ls_sse / (static_cast<double>(n) * (mp - K)), sigma2_floor);
            if (opts.fix_gamma_zero) {
                st.gamma = Eigen::MatrixXd::Zero(K, K);
            } else {
                // Spread of the per-curve coefficients around their cluster
                // mean, the natural random-effect scale.
                st.gamma = Eigen::MatrixXd::Zero(K, K);
                for (int i = 0; i < n; ++i) {
                    const Eigen::VectorXd e =
                        (C0.row(i) - st.mu.row(labels[static_cast<std::size_t>(i)])).transpose();
                    st.gamma.noalias() += e * e.transpose();
                }
                st.gamma /= n;
                st.gamma.diagonal().array() += 1e-8 * st.gamma.trace() / K + 1e-12;
            }

            std::vector<double> trace;
            double ll_prev = -kInf;
            double ll = -kInf;
            Eigen::MatrixXd V = Eigen::MatrixXd::Zero(K, K);

            // The loop always ends right after an E step so the reported
            // loglik and posteriors belong to the reported parameters.
            for (int iter = 0;; ++iter) {
                // E step: shared covariance Sigma = sigma2 I + S Gamma S'.
                Eigen::MatrixXd Sigma = S * st.gamma * S.transpose();
                Sigma.diagonal().array() += st.sigma2;
                const Eigen::LLT<Eigen::MatrixXd> sig_llt(Sigma);
                if (sig_llt.info() != Eigen::Success) {
                    throw std::runtime_error("fclust_em: covariance factorization failed");
                }
                const Eigen::MatrixXd L = sig_llt.matrixL();
                const double logdet = 2.0 * L.diagonal().array().log().sum();

                const Eigen::MatrixXd SG = S * st.gamma;            // mp x K
                const Eigen::MatrixXd SigInv_SG = sig_llt.solve(SG);
                if (!opts.fix_gamma_zero) {
                    V = st.gamma - SG.transpose() * SigInv_SG;
                    V = 0.5 * (V + V.transpose());
                }

                Eigen::MatrixXd logd(n, M);
                std::vector<Eigen::MatrixXd> resid(static_cast<std::size_t>(M));
                for (int m = 0; m < M; ++m) {
                    const Eigen::RowVectorXd fitted = st.mu.row(m) * S.transpose();
                    Eigen::MatrixXd R = cs.values.rowwise() - fitted;  // n x mp
                    const Eigen::MatrixXd Lin =
                        L.triangularView<Eigen::Lower>().solve(R.transpose());
                    for (int i = 0; i < n; ++i) {
                        logd(i, m) = -0.5 * (mp * log2pi + logdet +
                                             Lin.col(i).squaredNorm()) +
                                     std::log(st.weights(m));
                    }
                    resid[static_cast<std::size_t>(m)] = std::move(R);
                }
                ll = 0.0;
                for (int i = 0; i < n; ++i) {
                    double mx = logd.row(i).maxCoeff();
                    double sum = 0.0;
                    for (int m = 0; m < M; ++m) sum += std::exp(logd(i, m) - mx);
                    const double lse = mx + std::log(sum);
                    ll += lse;
                    for (int m = 0; m < M; ++m) post(i, m) = std::exp(logd(i, m) - lse);
                }
                trace.push_back(ll);
                if (iter > 0 && ll - ll_prev <= opts.em.tol * (1.0 + std::abs(ll))) break;
                if (iter >= opts.em.max_iter) break;
                ll_prev = ll;

                // M step
                const Eigen::VectorXd Nm = post.colwise().sum().transpose();
                for (int m = 0; m < M; ++m) {
                    if (Nm(m) < 1e-10) throw ClusterDeathError("fclust_em: component died");
                }
                st.weights = Nm / n;

                double sse = 0.0;
                Eigen::MatrixXd gamma_new = Eigen::MatrixXd::Zero(K, K);
                const double trSVS =
                    opts.fix_gamma_zero ? 0.0 : (S * V).cwiseProduct(S).sum();
                for (int m = 0; m < M; ++m) {
                    const Eigen::MatrixXd& R = resid[static_cast<std::size_t>(m)];
                    Eigen::MatrixXd G;  // n x K conditional random-effect means
                    if (opts.fix_gamma_zero) {
                        G = Eigen::MatrixXd::Zero(n, K);
                    } else {
                        G = R * SigInv_SG;
                        gamma_new.noalias() +=
                            G.transpose() * post.col(m).asDiagonal() * G;
                    }
                    // Mean update: weighted LS of the de-random-effected data.
                    const Eigen::MatrixXd target = cs.values - G * S.transpose();
                    const Eigen::VectorXd rhs =
                        S.transpose() * (target.transpose() * post.col(m));
                    st.mu.row(m) = (StS_llt.solve(rhs) / Nm(m)).transpose();

                    const Eigen::RowVectorXd fitted_mu = st.mu.row(m) * S.transpose();
                    for (int i = 0; i < n; ++i) {
                        if (post(i, m) == 0.0) continue;
                        const double e2 =
                            (cs.values.row(i) - fitted_mu - G.row(i) * S.transpose())
                                .squaredNorm();
                        sse += post(i, m) * e2;
                    }
                }
                st.sigma2 = std::max((sse + n * trSVS) / (static_cast<double>(n) * mp),
                                     sigma2_floor);
                if (!opts.fix_gamma_zero) {
                    st.gamma = (gamma_new + static_cast<double>(n) * V) / n;
                    st.gamma = 0.5 * (st.gamma + st.gamma.transpose());
                }
            }

            if (ll > best.loglik) {
                best.mu = st.mu;
                best.gamma = st.gamma;
                best.sigma = std::sqrt(st.sigma2);
                best.weights = st.weights;
                best.posteriors = post;
                best.loglik = ll;
                best.loglik_trace = std::move(trace);
                have = true;
            }
        } catch (const std::exception& e) {
            last_error = e.what();
        }
    }
    if (!have) throw ClusterDeathError(last_error);

    best.basis = std::move(basis);
    best.grid = cs.grid;
    best.n_params = (M - 1) + M * K + (opts.fix_gamma_zero ? 0 : K * (K + 1) / 2) + 1;
    best.bic = -2.0 * best.loglik + best.n_params * std::log(static_cast<double>(n));
    best.aic = -2.0 * best.loglik + 2.0 * best.n_params;
    return best;
}

Eigen::VectorXd fclust_posterior(const FclustModel& model,
                                 std::span<const double> curve) {
    if (!model.basis) throw std::logic_error("fclust_posterior: model has no basis");
    if (curve.size() != model.grid.size()) {
        throw std::invalid_argument("fclust_posterior: curve length != model grid");
    }
    const int mp = static_cast<int>(curve.size());
    const int M = static_cast<int>(model.mu.rows());
    const Eigen::MatrixXd S = model.basis->evaluate(model.grid, 0);
    Eigen::MatrixXd Sigma = S * model.gamma * S.transpose();
    Sigma.diagonal().array() += model.sigma * model.sigma;
    const Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
    const Eigen::MatrixXd L = llt.matrixL();
    const double logdet = 2.0 * L.diagonal().array().log().sum();
    const double log2pi = std::log(2.0 * std::numbers::pi_v<double>);

    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(curve.data(), mp);
    Eigen::VectorXd logp(M);
    for (int m = 0; m < M; ++m) {
        const Eigen::VectorXd r = x - S * model.mu.row(m).transpose();
        const double q = L.triangularView<Eigen::Lower>().solve(r).squaredNorm();
        logp(m) = std::log(model.weights(m)) - 0.5 * (mp * log2pi + logdet + q);
    }
    const double mx = logp.maxCoeff();
    Eigen::VectorXd p = (logp.array() - mx).exp();
    return p / p.sum();
}

}  // namespace fdc
