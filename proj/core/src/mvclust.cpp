#include "fdcluster/mvclust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "csv.hpp"

namespace fdc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Uniform deviates straight from the engine's 64-bit output, so draws do not
// depend on the standard library's distribution internals.
double runif(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

int runif_int(std::mt19937_64& rng, int n) {
    return std::min(n - 1, static_cast<int>(runif(rng) * n));
}

std::vector<int> kmeanspp_seed(const Eigen::MatrixXd& X, int M, std::mt19937_64& rng) {
    const int n = static_cast<int>(X.rows());
    std::vector<int> centers;
    centers.reserve(static_cast<std::size_t>(M));
    centers.push_back(runif_int(rng, n));
    Eigen::VectorXd d2 =
        (X.rowwise() - X.row(centers[0])).rowwise().squaredNorm();
    while (static_cast<int>(centers.size()) < M) {
        const double total = d2.sum();
        int next;
        if (total <= 0.0) {
            next = runif_int(rng, n);
        } else {
            const double r = runif(rng) * total;
            double acc = 0.0;
            next = n - 1;
            for (int i = 0; i < n; ++i) {
                acc += d2(i);
                if (acc >= r) {
                    next = i;
                    break;
                }
            }
        }
        centers.push_back(next);
        d2 = d2.cwiseMin((X.rowwise() - X.row(next)).rowwise().squaredNorm());
    }
    return centers;
}

struct LloydRun {
    std::vector<int> labels;
    Eigen::MatrixXd centroids;
    double wcss = kInf;
    std::vector<double> trace;
    int iterations = 0;
};

LloydRun lloyd(const Eigen::MatrixXd& X, int M, std::mt19937_64& rng, int max_iter) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    LloydRun run;
    const std::vector<int> seeds = kmeanspp_seed(X, M, rng);
    Eigen::MatrixXd C(M, p);
    for (int m = 0; m < M; ++m) C.row(m) = X.row(seeds[static_cast<std::size_t>(m)]);

    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    std::vector<int> prev(static_cast<std::size_t>(n), -1);
    std::vector<int> count(static_cast<std::size_t>(M), 0);
    for (int iter = 0; iter < max_iter; ++iter) {
        std::fill(count.begin(), count.end(), 0);
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double bestd = (X.row(i) - C.row(0)).squaredNorm();
            for (int m = 1; m < M; ++m) {
                const double d = (X.row(i) - C.row(m)).squaredNorm();
                if (d < bestd) {
                    bestd = d;
                    best = m;
                }
            }
            labels[static_cast<std::size_t>(i)] = best;
            ++count[static_cast<std::size_t>(best)];
        }
        // Re-seed any emptied cluster at the point farthest from its current
        // centroid (donors must keep at least one member).
        for (int m = 0; m < M; ++m) {
            if (count[static_cast<std::size_t>(m)] > 0) continue;
            int bestp = -1;
            double bestd = -1.0;
            for (int i = 0; i < n; ++i) {
                const int li = labels[static_cast<std::size_t>(i)];
                if (count[static_cast<std::size_t>(li)] < 2) continue;
                const double d = (X.row(i) - C.row(li)).squaredNorm();
                if (d > bestd) {
                    bestd = d;
                    bestp = i;
                }
            }
            if (bestp < 0) throw std::runtime_error("kmeans: cannot fill empty cluster");
            --count[static_cast<std::size_t>(labels[static_cast<std::size_t>(bestp)])];
            labels[static_cast<std::size_t>(bestp)] = m;
            count[static_cast<std::size_t>(m)] = 1;
        }
        C.setZero();
        for (int i = 0; i < n; ++i) C.row(labels[static_cast<std::size_t>(i)]) += X.row(i);
        for (int m = 0; m < M; ++m) C.row(m) /= count[static_cast<std::size_t>(m)];
        double wcss = 0.0;
        for (int i = 0; i < n; ++i) {
            wcss += (X.row(i) - C.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
        }
        run.trace.push_back(wcss);
        run.iterations = iter + 1;
        if (labels == prev) break;
        prev = labels;
    }
    run.labels = std::move(labels);
    run.centroids = std::move(C);
    run.wcss = run.trace.back();
    return run;
}

}  // namespace

Partition make_partition(const Eigen::MatrixXd& X, std::span<const int> labels, int M) {
    const int n = static_cast<int>(X.rows());
    if (static_cast<int>(labels.size()) != n) {
        throw std::invalid_argument("make_partition: label count != rows");
    }
    if (M < 1) throw std::invalid_argument("make_partition: M must be >= 1");
    Partition part;
    part.M = M;
    part.labels.assign(labels.begin(), labels.end());
    part.centroids = Eigen::MatrixXd::Zero(M, X.cols());
    std::vector<int> count(static_cast<std::size_t>(M), 0);
    for (int i = 0; i < n; ++i) {
        const int l = labels[static_cast<std::size_t>(i)];
        if (l < 0 || l >= M) throw std::invalid_argument("make_partition: label out of range");
        part.centroids.row(l) += X.row(i);
        ++count[static_cast<std::size_t>(l)];
    }
    for (int m = 0; m < M; ++m) {
        if (count[static_cast<std::size_t>(m)] == 0) {
            throw std::invalid_argument("make_partition: empty cluster");
        }
        part.centroids.row(m) /= count[static_cast<std::size_t>(m)];
    }
    part.wcss = 0.0;
    for (int i = 0; i < n; ++i) {
        part.wcss += (X.row(i) - part.centroids.row(labels[static_cast<std::size_t>(i)]))
                         .squaredNorm();
    }
    return part;
}

KmeansResult kmeans(const Eigen::MatrixXd& X, int M, const KmeansOptions& opts) {
    const int n = static_cast<int>(X.rows());
    if (M < 1 || M > n) throw std::invalid_argument("kmeans: need 1 <= M <= n");
    if (opts.restarts < 1) throw std::invalid_argument("kmeans: restarts must be >= 1");
    std::mt19937_64 rng(opts.seed);
    LloydRun best;
    for (int r = 0; r < opts.restarts; ++r) {
        LloydRun run = lloyd(X, M, rng, opts.max_iter);
        if (run.wcss < best.wcss) best = std::move(run);
    }
    KmeansResult out;
    out.partition = make_partition(X, best.labels, M);
    out.wcss_trace = std::move(best.trace);
    out.iterations = best.iterations;
    return out;
}

Linkage linkage_from_string(const std::string& name) {
    if (name == "single") return Linkage::single;
    if (name == "complete") return Linkage::complete;
    if (name == "average") return Linkage::average;
    if (name == "ward") return Linkage::ward;
    throw std::invalid_argument("unknown linkage: " + name);
}

std::string to_string(Linkage linkage) {
    switch (linkage) {
        case Linkage::single: return "single";
        case Linkage::complete: return "complete";
        case Linkage::average: return "average";
        case Linkage::ward: return "ward";
    }
    throw std::logic_error("bad linkage value");
}

HierarchicalResult hierarchical(const Eigen::MatrixXd& X, Linkage linkage, int M) {
    const int n = static_cast<int>(X.rows());
    if (n < 1) throw std::invalid_argument("hierarchical: empty data");
    if (M < 1 || M > n) throw std::invalid_argument("hierarchical: need 1 <= M <= n");

    // Dissimilarities: Euclidean distances, except ward which runs in
    // merge-cost units so heights are exact wcss increases.
    Eigen::MatrixXd d(n, n);
    d.setZero();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double sq = (X.row(i) - X.row(j)).squaredNorm();
            d(i, j) = d(j, i) = linkage == Linkage::ward ? 0.5 * sq : std::sqrt(sq);
        }
    }

    std::vector<bool> active(static_cast<std::size_t>(n), true);
    std::vector<int> size(static_cast<std::size_t>(n), 1);
    std::vector<int> member_of(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) member_of[static_cast<std::size_t>(i)] = i;

    HierarchicalResult out;
    out.merges.reserve(static_cast<std::size_t>(n - 1));
    int n_active = n;
    std::vector<int> labels_at_M;
    if (M == n) {
        labels_at_M.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) labels_at_M[static_cast<std::size_t>(i)] = i;
    }

    while (n_active > 1) {
        int bi = -1, bj = -1;
        double bestd = kInf;
        for (int i = 0; i < n; ++i) {
            if (!active[static_cast<std::size_t>(i)]) continue;
            for (int j = i + 1; j < n; ++j) {
                if (!active[static_cast<std::size_t>(j)]) continue;
                if (d(i, j) < bestd) {
                    bestd = d(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        out.merges.push_back({bi, bj, bestd});
        const int ni = size[static_cast<std::size_t>(bi)];
        const int nj = size[static_cast<std::size_t>(bj)];
        for (int k = 0; k < n; ++k) {
            if (!active[static_cast<std::size_t>(k)] || k == bi || k == bj) continue;
            const int nk = size[static_cast<std::size_t>(k)];
            double upd = 0.0;
            switch (linkage) {
                case Linkage::single: upd = std::min(d(bi, k), d(bj, k)); break;
                case Linkage::complete: upd = std::max(d(bi, k), d(bj, k)); break;
                case Linkage::average:
                    upd = (ni * d(bi, k) + nj * d(bj, k)) / (ni + nj);
                    break;
                case Linkage::ward:
                    upd = ((ni + nk) * d(bi, k) + (nj + nk) * d(bj, k) - nk * d(bi, bj)) /
                          (ni + nj + nk);
                    break;
            }
            d(bi, k) = d(k, bi) = upd;
        }
        active[static_cast<std::size_t>(bj)] = false;
        size[static_cast<std::size_t>(bi)] = ni + nj;
        for (int i = 0; i < n; ++i) {
            if (member_of[static_cast<std::size_t>(i)] == bj) {
                member_of[static_cast<std::size_t>(i)] = bi;
            }
        }
        --n_active;
        if (n_active == M) {
            // Compact active ids, ascending, into labels 0..M-1.
            std::vector<int> ids;
            for (int i = 0; i < n; ++i) {
                if (active[static_cast<std::size_t>(i)]) ids.push_back(i);
            }
            labels_at_M.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                const auto it = std::lower_bound(ids.begin(), ids.end(),
                                                 member_of[static_cast<std::size_t>(i)]);
                labels_at_M[static_cast<std::size_t>(i)] =
                    static_cast<int>(it - ids.begin());
            }
        }
    }
    out.partition = make_partition(X, labels_at_M, M);
    return out;
}

CovarianceModel covariance_model_from_string(const std::string& name) {
    if (name == "spherical") return CovarianceModel::spherical;
    if (name == "diagonal") return CovarianceModel::diagonal;
    if (name == "full") return CovarianceModel::full;
    throw std::invalid_argument("unknown covariance model: " + name);
}

namespace {

// Column m gets log N(x_i; mu_m, Sigma_m) for every row i.
void log_densities(const Eigen::MatrixXd& X, const Eigen::MatrixXd& means,
                   const std::vector<Eigen::MatrixXd>& covs, CovarianceModel model,
                   Eigen::MatrixXd& logd) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    const int M = static_cast<int>(means.rows());
    const double c = p * std::log(2.0 * std::numbers::pi_v<double>);
    for (int m = 0; m < M; ++m) {
        const Eigen::MatrixXd& S = covs[static_cast<std::size_t>(m)];
        if (model == CovarianceModel::spherical) {
            const double s2 = S(0, 0);
            const double logdet = p * std::log(s2);
            for (int i = 0; i < n; ++i) {
                const double q = (X.row(i) - means.row(m)).squaredNorm() / s2;
                logd(i, m) = -0.5 * (c + logdet + q);
            }
        } else if (model == CovarianceModel::diagonal) {
            const Eigen::VectorXd dvec = S.diagonal();
            const double logdet = dvec.array().log().sum();
            for (int i = 0; i < n; ++i) {
                const Eigen::VectorXd r = (X.row(i) - means.row(m)).transpose();
                const double q = (r.array().square() / dvec.array()).sum();
                logd(i, m) = -0.5 * (c + logdet + q);
            }
        } else {
            Eigen::LLT<Eigen::MatrixXd> llt(S);
            if (llt.info() != Eigen::Success) {
                throw std::runtime_error("gmm_em: covariance not positive definite");
            }
            const Eigen::MatrixXd L = llt.matrixL();
            const double logdet = 2.0 * L.diagonal().array().log().sum();
            for (int i = 0; i < n; ++i) {
                const Eigen::VectorXd r = (X.row(i) - means.row(m)).transpose();
                const double q =
                    L.triangularView<Eigen::Lower>().solve(r).squaredNorm();
                logd(i, m) = -0.5 * (c + logdet + q);
            }
        }
    }
}

int gmm_param_count(int M, int p, CovarianceModel model) {
    int cov_params = 0;
    switch (model) {
        case CovarianceModel::spherical: cov_params = M; break;
        case CovarianceModel::diagonal: cov_params = M * p; break;
        case CovarianceModel::full: cov_params = M * p * (p + 1) / 2; break;
    }
    return (M - 1) + M * p + cov_params;
}

GmmFit gmm_single(const Eigen::MatrixXd& X, int M, const GmmOptions& opts,
                  std::mt19937_64& rng) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());

    GmmFit fit;
    fit.model = opts.model;
    fit.weights = Eigen::VectorXd::Constant(M, 1.0 / M);
    fit.means.resize(M, p);
    const std::vector<int> seeds = kmeanspp_seed(X, M, rng);
    for (int m = 0; m < M; ++m) fit.means.row(m) = X.row(seeds[static_cast<std::size_t>(m)]);

    // Start every component at the pooled covariance for its model class.
    const Eigen::RowVectorXd xbar = X.colwise().mean();
    const Eigen::MatrixXd Xc = X.rowwise() - xbar;
    Eigen::MatrixXd pooled = Xc.transpose() * Xc / std::max(1, n - 1);
    const double ridge0 = std::max(1e-8 * pooled.trace() / p, 1e-12);
    pooled.diagonal().array() += ridge0;
    Eigen::MatrixXd cov0;
    if (opts.model == CovarianceModel::spherical) {
        cov0 = Eigen::MatrixXd::Identity(p, p) * (pooled.trace() / p);
    } else if (opts.model == CovarianceModel::diagonal) {
        cov0 = pooled.diagonal().asDiagonal();
    } else {
        cov0 = pooled;
    }
    fit.covariances.assign(static_cast<std::size_t>(M), cov0);

    Eigen::MatrixXd logd(n, M);
    Eigen::MatrixXd post(n, M);
    auto e_step = [&]() {
        log_densities(X, fit.means, fit.covariances, opts.model, logd);
        double ll = 0.0;
        for (int i = 0; i < n; ++i) {
            double mx = -kInf;
            for (int m = 0; m < M; ++m) {
                logd(i, m) += std::log(fit.weights(m));
                mx = std::max(mx, logd(i, m));
            }
            double sum = 0.0;
            for (int m = 0; m < M; ++m) sum += std::exp(logd(i, m) - mx);
            const double lse = mx + std::log(sum);
            ll += lse;
            for (int m = 0; m < M; ++m) post(i, m) = std::exp(logd(i, m) - lse);
        }
        return ll;
    };

    // The loop always ends on an E step so the reported loglik and
    // posteriors belong to the returned parameters.
    double ll = -kInf, ll_prev = -kInf;
    int iter = 0;
    while (true) {
        ll = e_step();
        fit.loglik_trace.push_back(ll);
        if (iter > 0 && ll - ll_prev <= opts.tol * (1.0 + std::abs(ll))) break;
        if (iter >= opts.max_iter) break;
        ll_prev = ll;

        // M step
        const Eigen::VectorXd Nm = post.colwise().sum().transpose();
        for (int m = 0; m < M; ++m) {
            if (Nm(m) < 1e-10) throw std::runtime_error("gmm_em: component died");
        }
        fit.weights = Nm / n;
        fit.means = (post.transpose() * X).array().colwise() / Nm.array();
        for (int m = 0; m < M; ++m) {
            const Eigen::MatrixXd R = X.rowwise() - fit.means.row(m);
            if (opts.model == CovarianceModel::spherical) {
                double s2 = 0.0;
                for (int i = 0; i < n; ++i) s2 += post(i, m) * R.row(i).squaredNorm();
                s2 /= Nm(m) * p;
                s2 += std::max(1e-8 * s2, 1e-12);
                fit.covariances[static_cast<std::size_t>(m)] =
                    Eigen::MatrixXd::Identity(p, p) * s2;
            } else if (opts.model == CovarianceModel::diagonal) {
                Eigen::VectorXd dvec = Eigen::VectorXd::Zero(p);
                for (int i = 0; i < n; ++i) {
                    dvec += post(i, m) * R.row(i).array().square().matrix().transpose();
                }
                dvec /= Nm(m);
                const double ridge = std::max(1e-8 * dvec.sum() / p, 1e-12);
                dvec.array() += ridge;
                fit.covariances[static_cast<std::size_t>(m)] = dvec.asDiagonal();
            } else {
                Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p, p);
                for (int i = 0; i < n; ++i) {
                    S.noalias() += post(i, m) * (R.row(i).transpose() * R.row(i));
                }
                S /= Nm(m);
                S.diagonal().array() += std::max(1e-8 * S.trace() / p, 1e-12);
                fit.covariances[static_cast<std::size_t>(m)] = S;
            }
        }
        ++iter;
    }

    fit.posteriors = post;
    fit.loglik = ll;
    fit.n_params = gmm_param_count(M, p, opts.model);
    fit.bic = -2.0 * fit.loglik + fit.n_params * std::log(static_cast<double>(n));
    fit.aic = -2.0 * fit.loglik + 2.0 * fit.n_params;
    double entropy = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int m = 0; m < M; ++m) {
            const double g = post(i, m);
            if (g > 0.0) entropy -= g * std::log(g);
        }
    }
    fit.icl = fit.bic + 2.0 * entropy;
    return fit;
}

}  // namespace

std::vector<int> GmmFit::hard_labels() const {
    std::vector<int> labels(static_cast<std::size_t>(posteriors.rows()));
    for (Eigen::Index i = 0; i < posteriors.rows(); ++i) {
        Eigen::Index arg = 0;
        posteriors.row(i).maxCoeff(&arg);
        labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
    }
    return labels;
}

std::string GmmFit::summary_json() const {
    nlohmann::json j;
    j["M"] = static_cast<int>(weights.size());
    j["loglik"] = loglik;
    j["bic"] = bic;
    j["aic"] = aic;
    j["icl"] = icl;
    j["n_params"] = n_params;
    j["iterations"] = loglik_trace.size();
    return j.dump(2);
}

GmmFit gmm_em(const Eigen::MatrixXd& X, int M, const GmmOptions& opts) {
    const int n = static_cast<int>(X.rows());
    if (M < 1 || M > n) throw std::invalid_argument("gmm_em: need 1 <= M <= n");
    if (opts.restarts < 1) throw std::invalid_argument("gmm_em: restarts must be >= 1");
    std::mt19937_64 rng(opts.seed);
    GmmFit best;
    bool have = false;
    std::string last_error = "gmm_em: no attempt ran";
    for (int r = 0; r < opts.restarts; ++r) {
        try {
            GmmFit fit = gmm_single(X, M, opts, rng);
            if (!have || fit.loglik > best.loglik) {
                best = std::move(fit);
                have = true;
            }
        } catch (const std::exception& e) {
            last_error = e.what();
        }
    }
    if (!have) throw std::runtime_error(last_error);
    return best;
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& X) {
    const int n = static_cast<int>(X.rows());
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            D(i, j) = D(j, i) = (X.row(i) - X.row(j)).norm();
        }
    }
    return D;
}

SilhouetteResult silhouette(const Eigen::MatrixXd& D, std::span<const int> labels) {
    const int n = static_cast<int>(D.rows());
    if (D.cols() != n || static_cast<int>(labels.size()) != n) {
        throw std::invalid_argument("silhouette: size mismatch");
    }
    int M = 0;
    for (int l : labels) M = std::max(M, l + 1);
    std::vector<int> count(static_cast<std::size_t>(M), 0);
    for (int l : labels) {
        if (l < 0) throw std::invalid_argument("silhouette: negative label");
        ++count[static_cast<std::size_t>(l)];
    }
    int nonempty = 0;
    for (int c : count) nonempty += c > 0 ? 1 : 0;
    if (nonempty < 2) throw std::invalid_argument("silhouette: need >= 2 clusters");

    SilhouetteResult out;
    out.widths.resize(static_cast<std::size_t>(n), 0.0);
    std::vector<double> sum_to(static_cast<std::size_t>(M));
    for (int i = 0; i < n; ++i) {
        std::fill(sum_to.begin(), sum_to.end(), 0.0);
        for (int j = 0; j < n; ++j) {
            if (j != i) sum_to[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] += D(i, j);
        }
        const int li = labels[static_cast<std::size_t>(i)];
        if (count[static_cast<std::size_t>(li)] <= 1) continue;  // singleton: width 0
        const double a = sum_to[static_cast<std::size_t>(li)] /
                         (count[static_cast<std::size_t>(li)] - 1);
        double b = kInf;
        for (int m = 0; m < M; ++m) {
            if (m == li || count[static_cast<std::size_t>(m)] == 0) continue;
            b = std::min(b, sum_to[static_cast<std::size_t>(m)] /
                                count[static_cast<std::size_t>(m)]);
        }
        const double denom = std::max(a, b);
        out.widths[static_cast<std::size_t>(i)] = denom > 0.0 ? (b - a) / denom : 0.0;
    }
    double total = 0.0;
    for (double s : out.widths) total += s;
    out.mean = total / n;
    return out;
}

double dunn(const Eigen::MatrixXd& D, std::span<const int> labels) {
    const int n = static_cast<int>(D.rows());
    if (D.cols() != n || static_cast<int>(labels.size()) != n) {
        throw std::invalid_argument("dunn: size mismatch");
    }
    double min_between = kInf;
    double max_diameter = 0.0;
    bool any_between = false;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
                max_diameter = std::max(max_diameter, D(i, j));
            } else {
                min_between = std::min(min_between, D(i, j));
                any_between = true;
            }
        }
    }
    if (!any_between) throw std::invalid_argument("dunn: need >= 2 clusters");
    if (max_diameter == 0.0) return kInf;
    return min_between / max_diameter;
}

double calinski_harabasz(const Eigen::MatrixXd& X, std::span<const int> labels, int M) {
    const int n = static_cast<int>(X.rows());
    if (M < 2 || M >= n) throw std::invalid_argument("calinski_harabasz: need 2 <= M < n");
    const Partition part = make_partition(X, labels, M);
    const Eigen::RowVectorXd grand = X.colwise().mean();
    double between = 0.0;
    std::vector<int> count(static_cast<std::size_t>(M), 0);
    for (int l : labels) ++count[static_cast<std::size_t>(l)];
    for (int m = 0; m < M; ++m) {
        between += count[static_cast<std::size_t>(m)] *
                   (part.centroids.row(m) - grand).squaredNorm();
    }
    if (part.wcss == 0.0) return kInf;
    return (between / (M - 1)) / (part.wcss / (n - M));
}

MajorityResult select_M_majority(const Eigen::MatrixXd& X,
                                 std::span<const int> M_range,
                                 const MajorityOptions& opts) {
    if (M_range.empty()) throw std::invalid_argument("select_M_majority: empty M range");
    const Eigen::MatrixXd D = pairwise_distances(X);

    MajorityResult out;
    out.M_range.assign(M_range.begin(), M_range.end());
    out.index_values.resize(static_cast<Eigen::Index>(M_range.size()), 3);
    std::vector<Partition> partitions;
    partitions.reserve(M_range.size());
    for (std::size_t r = 0; r < M_range.size(); ++r) {
        const int M = M_range[r];
        Partition part;
        if (opts.method == ClusterMethod::kmeans) {
            KmeansOptions ko;
            ko.restarts = opts.restarts;
            ko.seed = opts.seed + static_cast<std::uint64_t>(M);
            part = kmeans(X, M, ko).partition;
        } else {
            part = hierarchical(X, opts.linkage, M).partition;
        }
        out.index_values(static_cast<Eigen::Index>(r), 0) = silhouette(D, part.labels).mean;
        out.index_values(static_cast<Eigen::Index>(r), 1) = dunn(D, part.labels);
        out.index_values(static_cast<Eigen::Index>(r), 2) =
            calinski_harabasz(X, part.labels, M);
        partitions.push_back(std::move(part));
    }

    out.votes.resize(3);
    for (int c = 0; c < 3; ++c) {
        Eigen::Index arg = 0;
        out.index_values.col(c).maxCoeff(&arg);
        // maxCoeff returns the first maximum, which is the smallest M when
        // the range is increasing.
        out.votes[static_cast<std::size_t>(c)] = out.M_range[static_cast<std::size_t>(arg)];
    }
    std::map<int, int> tally;
    for (int v : out.votes) ++tally[v];
    int best_M = out.votes[0];
    int best_count = 0;
    for (const auto& [M, cnt] : tally) {
        if (cnt > best_count) {  // map iterates ascending, ties keep smaller M
            best_count = cnt;
            best_M = M;
        }
    }
    out.best_M = best_M;
    for (std::size_t r = 0; r < M_range.size(); ++r) {
        if (out.M_range[r] == best_M) out.best_partition = partitions[r];
    }
    return out;
}

void save_assignments(std::span<const std::string> ids, std::span<const int> labels,
                      const std::filesystem::path& path) {
    if (ids.size() != labels.size()) {
        throw std::invalid_argument("save_assignments: id/label count mismatch");
    }
    std::string out = "curve_id,cluster\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out += ids[i];
        out += ',';
        out += std::to_string(labels[i] + 1);
        out += '\n';
    }
    csv::write_file(path, out);
}

}  // namespace fdc
