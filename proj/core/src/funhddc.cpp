#include "fdcluster/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <json.hpp>

#include "fdcluster/funclust.hpp"
#include "fdcluster/mvclust.hpp"

namespace fdc {

int scree_dimension(std::span<const double> eigenvalues, double threshold) {
    if (eigenvalues.size() < 2) {
        throw std::invalid_argument("scree_dimension: need >= 2 eigenvalues");
    }
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw std::invalid_argument("scree_dimension: threshold must be in (0, 1]");
    }
    const double scale = std::abs(eigenvalues[0]);
    for (std::size_t j = 0; j < eigenvalues.size(); ++j) {
        if (eigenvalues[j] < -1e-9 * scale - 1e-300) {
            throw std::invalid_argument("scree_dimension: negative eigenvalue");
        }
        if (j > 0 && eigenvalues[j] > eigenvalues[j - 1] + 1e-9 * scale + 1e-300) {
            throw std::invalid_argument("scree_dimension: eigenvalues must be non-increasing");
        }
    }
    double max_gap = 0.0;
    for (std::size_t j = 0; j + 1 < eigenvalues.size(); ++j) {
        max_gap = std::max(max_gap, eigenvalues[j] - eigenvalues[j + 1]);
    }
    if (max_gap <= 0.0) return 1;  // flat spectrum
    int d = 1;
    for (std::size_t j = 0; j + 1 < eigenvalues.size(); ++j) {
        if (eigenvalues[j] - eigenvalues[j + 1] >= threshold * max_gap) {
            d = static_cast<int>(j) + 1;
        }
    }
    return d;
}

std::string bic_table_json(std::span<const BicRow> table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const BicRow& r : table) {
        nlohmann::json j;
        j["M"] = r.M;
        j["ok"] = r.ok;
        if (r.ok) {
            j["loglik"] = r.loglik;
            j["bic"] = r.bic;
        } else {
            j["error"] = r.error;
        }
        rows.push_back(std::move(j));
    }
    return rows.dump(2);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct HddcParams {
    Eigen::VectorXd weights;
    Eigen::MatrixXd means;  // M x K
    std::vector<Eigen::MatrixXd> Q;
    std::vector<int> d;
    std::vector<Eigen::VectorXd> a;
    std::vector<double> b;
};

// Maximizer of the expected complete loglik for fixed responsibilities;
// dims come from the scree rule unless pinned by `fixed_dims`.
HddcParams hddc_m_step(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& post,
                       const FunHddcOptions& opts, const std::vector<int>* fixed_dims,
                       double b_floor) {
    const int n = static_cast<int>(Y.rows());
    const int K = static_cast<int>(Y.cols());
    const int M = static_cast<int>(post.cols());

    HddcParams pr;
    const Eigen::VectorXd Nm = post.colwise().sum().transpose();
    for (int m = 0; m < M; ++m) {
        if (Nm(m) < 1e-10) throw ClusterDeathError("funhddc_em: component died");
    }
    pr.weights = Nm / n;
    pr.means = (post.transpose() * Y).array().colwise() / Nm.array();
    pr.Q.resize(static_cast<std::size_t>(M));
    pr.d.resize(static_cast<std::size_t>(M));
    pr.a.resize(static_cast<std::size_t>(M));
    pr.b.assign(static_cast<std::size_t>(M), 0.0);

    std::vector<Eigen::VectorXd> evals(static_cast<std::size_t>(M));
    double noise_num = 0.0, noise_den = 0.0;
    for (int m = 0; m < M; ++m) {
        Eigen::MatrixXd C = Eigen::MatrixXd::Zero(K, K);
        for (int i = 0; i < n; ++i) {
            if (post(i, m) == 0.0) continue;
            const Eigen::VectorXd x = (Y.row(i) - pr.means.row(m)).transpose();
            C.noalias() += post(i, m) * (x * x.transpose());
        }
        C /= Nm(m);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
        if (eig.info() != Eigen::Success) {
            throw std::runtime_error("funhddc_em: eigensolver failed");
        }
        Eigen::VectorXd ev(K);
        Eigen::MatrixXd Q(K, K);
        for (int j = 0; j < K; ++j) {
            ev(j) = std::max(0.0, eig.eigenvalues()(K - 1 - j));
            Q.col(j) = eig.eigenvectors().col(K - 1 - j);
        }
        evals[static_cast<std::size_t>(m)] = ev;
        pr.Q[static_cast<std::size_t>(m)] = std::move(Q);

        int d;
        if (fixed_dims) {
            d = (*fixed_dims)[static_cast<std::size_t>(m)];
        } else {
            d = scree_dimension(std::span<const double>(ev.data(), static_cast<std::size_t>(K)),
                                opts.scree_threshold);
            d = std::min(d, K - 1);
        }
        pr.d[static_cast<std::size_t>(m)] = d;
        pr.a[static_cast<std::size_t>(m)] = ev.head(d);
        const double tail = ev.tail(K - d).sum();
        if (opts.submodel == HddcSubmodel::common_noise) {
            noise_num += Nm(m) * tail;
            noise_den += Nm(m) * (K - d);
        } else {
            pr.b[static_cast<std::size_t>(m)] = std::max(tail / (K - d), b_floor);
        }
    }
    if (opts.submodel == HddcSubmodel::common_noise) {
        const double b = std::max(noise_num / noise_den, b_floor);
        for (int m = 0; m < M; ++m) pr.b[static_cast<std::size_t>(m)] = b;
    }
    for (int m = 0; m < M; ++m) {
        // Signal variances may not fall below the noise level.
        pr.a[static_cast<std::size_t>(m)] =
            pr.a[static_cast<std::size_t>(m)].cwiseMax(pr.b[static_cast<std::size_t>(m)]);
    }
    return pr;
}

void hddc_log_densities(const Eigen::MatrixXd& Y, const HddcParams& pr,
                        Eigen::MatrixXd& logd) {
    const int n = static_cast<int>(Y.rows());
    const int K = static_cast<int>(Y.cols());
    const int M = static_cast<int>(pr.means.rows());
    const double log2pi = std::log(2.0 * std::numbers::pi_v<double>);
    for (int m = 0; m < M; ++m) {
        const int d = pr.d[static_cast<std::size_t>(m)];
        const Eigen::VectorXd& a = pr.a[static_cast<std::size_t>(m)];
        const double b = pr.b[static_cast<std::size_t>(m)];
        const auto Qd = pr.Q[static_cast<std::size_t>(m)].leftCols(d);
        double logdet = (K - d) * std::log(b);
        for (int j = 0; j < d; ++j) logdet += std::log(a(j));
        const double lw = std::log(pr.weights(m));
        for (int i = 0; i < n; ++i) {
            const Eigen::VectorXd x = (Y.row(i) - pr.means.row(m)).transpose();
            const Eigen::VectorXd proj = Qd.transpose() * x;
            double quad = (x.squaredNorm() - proj.squaredNorm()) / b;
            for (int j = 0; j < d; ++j) quad += proj(j) * proj(j) / a(j);
            logd(i, m) = lw - 0.5 * (K * log2pi + logdet + quad);
        }
    }
}

double hddc_loglik(const Eigen::MatrixXd& Y, const HddcParams& pr) {
    Eigen::MatrixXd logd(Y.rows(), pr.means.rows());
    hddc_log_densities(Y, pr, logd);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < logd.rows(); ++i) {
        const double mx = logd.row(i).maxCoeff();
        double sum = 0.0;
        for (Eigen::Index m = 0; m < logd.cols(); ++m) sum += std::exp(logd(i, m) - mx);
        ll += mx + std::log(sum);
    }
    return ll;
}

int hddc_param_count(int M, int K, std::span<const int> dims, HddcSubmodel submodel) {
    int total = (M - 1) + M * K;
    for (int d : dims) {
        total += d * K - d * (d + 1) / 2;  // orientation
        total += d;                        // signal variances
    }
    total += submodel == HddcSubmodel::common_noise ? 1 : M;
    return total;
}

}  // namespace

std::vector<int> FunHddcModel::hard_labels() const {
    std::vector<int> labels(static_cast<std::size_t>(posteriors.rows()));
    for (Eigen::Index i = 0; i < posteriors.rows(); ++i) {
        Eigen::Index arg = 0;
        posteriors.row(i).maxCoeff(&arg);
        labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
    return labels;
}

std::string FunHddcModel::to_json() const {
    nlohmann::json j;
    j["M"] = static_cast<int>(groups.size());
    j["submodel"] = submodel == HddcSubmodel::common_noise ? "common_noise" : "full";
    j["scree_threshold"] = scree_threshold;
    j["gram_metric"] = gram_metric;
    j["weights"] = std::vector<double>(weights.data(), weights.data() + weights.size());
    j["loglik"] = loglik;
    j["bic"] = bic;
    j["n_params"] = n_params;
    j["loglik_trace"] = loglik_trace;
    nlohmann::json gj = nlohmann::json::array();
    for (const FunHddcGroup& g : groups) {
        nlohmann::json one;
        one["d"] = g.d;
        one["b"] = g.b;
        one["a"] = std::vector<double>(g.a.data(), g.a.data() + g.a.size());
        one["mean"] = std::vector<double>(g.mean.data(), g.mean.data() + g.mean.size());
        one["mean_latent"] = std::vector<double>(g.mean_latent.data(),
                                                 g.mean_latent.data() + g.mean_latent.size());
        gj.push_back(std::move(one));
    }
    j["groups"] = std::move(gj);
    return j.dump(2);
}

FunHddcModel funhddc_em(const CoefficientSet& coeffs, int M,
                        const FunHddcOptions& opts) {
    if (!coeffs.basis && opts.gram_metric) {
        throw std::invalid_argument("funhddc_em: gram metric needs a basis");
    }
    const int n = coeffs.n();
    const int K = static_cast<int>(coeffs.coefficients.cols());
    if (M < 1 || M > n) throw std::invalid_argument("funhddc_em: need 1 <= M <= n");
    if (K < 2) throw std::invalid_argument("funhddc_em: need K >= 2");

    const Eigen::MatrixXd Y = opts.gram_metric
                                  ? (coeffs.coefficients *
                                     metric_factor(*coeffs.basis, 0).transpose())
                                      .eval()
                                  : coeffs.coefficients;
    const Eigen::RowVectorXd ybar = Y.colwise().mean();
    const double b_floor =
        std::max(1e-8 * (Y.rowwise() - ybar).squaredNorm() / (n * K), 1e-300);

    std::mt19937_64 rng(opts.em.seed);
    HddcParams best_params;
    Eigen::MatrixXd best_post;
    std::vector<double> best_trace;
    double best_ll = -kInf;
    bool have = false;
    std::string last_error = "funhddc_em: no attempt ran";

    for (int restart = 0; restart < std::max(1, opts.em.restarts); ++restart) {
        try {
            std::vector<int> labels;
            if (opts.em.stochastic_init) {
                labels.resize(static_cast<std::size_t>(n));
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
            } else {
                KmeansOptions ko;
                ko.restarts = 2;
                ko.max_iter = 50;
                ko.seed = rng();
                labels = kmeans(Y, M, ko).partition.labels;
            }
            Eigen::MatrixXd post = Eigen::MatrixXd::Zero(n, M);
            for (int i = 0; i < n; ++i) post(i, labels[static_cast<std::size_t>(i)]) = 1.0;

            HddcParams params = hddc_m_step(Y, post, opts, nullptr, b_floor);
            std::vector<double> trace;
            Eigen::MatrixXd logd(n, M);
            double ll = -kInf, ll_prev = -kInf;
            // The loop always ends right after an E step so the reported
            // loglik and posteriors belong to the reported parameters.
            for (int iter = 0;; ++iter) {
                hddc_log_densities(Y, params, logd);
                ll = 0.0;
                for (int i = 0; i < n; ++i) {
                    const double mx = logd.row(i).maxCoeff();
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

                HddcParams cand = hddc_m_step(Y, post, opts, nullptr, b_floor);
                if (cand.d != params.d) {
                    // Fresh scree dims can shrink a subspace and cost
                    // likelihood; fall back to the previous dims, whose
                    // M-step cannot decrease it.
                    const double ll_cand = hddc_loglik(Y, cand);
                    if (ll_cand < ll - 1e-12 * (1.0 + std::abs(ll))) {
                        cand = hddc_m_step(Y, post, opts, &params.d, b_floor);
                    }
                }
                params = std::move(cand);
            }
            if (ll > best_ll) {
                best_ll = ll;
                best_params = std::move(params);
                best_post = post;
                best_trace = std::move(trace);
                have = true;
            }
        } catch (const ClusterDeathError& e) {
            last_error = e.what();
        }
    }
    if (!have) throw ClusterDeathError(last_error);

    FunHddcModel model;
    model.submodel = opts.submodel;
    model.scree_threshold = opts.scree_threshold;
    model.gram_metric = opts.gram_metric;
    model.weights = best_params.weights;
    model.posteriors = std::move(best_post);
    model.loglik = best_ll;
    model.loglik_trace = std::move(best_trace);
    model.groups.resize(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
        FunHddcGroup& g = model.groups[static_cast<std::size_t>(m)];
        g.Q = best_params.Q[static_cast<std::size_t>(m)];
        g.d = best_params.d[static_cast<std::size_t>(m)];
        g.a = best_params.a[static_cast<std::size_t>(m)];
        g.b = best_params.b[static_cast<std::size_t>(m)];
        g.mean = best_params.means.row(m).transpose();
        g.mean_latent = g.Q.leftCols(g.d).transpose() * g.mean;
    }
    model.n_params = hddc_param_count(M, K, best_params.d, opts.submodel);
    model.bic = -2.0 * model.loglik + model.n_params * std::log(static_cast<double>(n));
    return model;
}

}  // namespace fdc
