#include "fdcluster/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "fdcluster/adaptive.hpp"
#include "fdcluster/basis.hpp"
#include "fdcluster/fpca.hpp"
#include "fdcluster/funclust.hpp"
#include "fdcluster/mvclust.hpp"
#include "csv.hpp"

namespace fdc {
namespace {

template <typename T>
void read_optional(const nlohmann::json& j, const char* key, std::optional<T>& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

MethodSpec method_from_json(const nlohmann::json& j) {
    MethodSpec spec;
    spec.kind = j.at("kind").get<std::string>();
    spec.name = j.value("name", spec.kind);
    read_optional(j, "M", spec.M);
    if (j.contains("M_range")) spec.M_range = j.at("M_range").get<std::vector<int>>();
    read_optional(j, "algorithm", spec.algorithm);
    read_optional(j, "num_basis", spec.num_basis);
    read_optional(j, "lambda", spec.lambda);
    read_optional(j, "subsample_step", spec.subsample_step);
    read_optional(j, "var_threshold", spec.var_threshold);
    read_optional(j, "deriv", spec.deriv);
    read_optional(j, "scree_threshold", spec.scree_threshold);
    read_optional(j, "submodel", spec.submodel);
    read_optional(j, "restarts", spec.restarts);
    read_optional(j, "stochastic_init", spec.stochastic_init);
    return spec;
}

std::string safe_name(const std::string& name) {
    std::string out;
    for (char c : name) {
        out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    }
    return out.empty() ? std::string("method") : out;
}

// Multivariate leg shared by the raw/filtering/fpca kinds: fixed-M fit or
// majority-rule selection, plus the three validity indices as diagnostics.
void cluster_feature_matrix(const Eigen::MatrixXd& X, const MethodSpec& spec,
                            std::span<const int> M_range, std::uint64_t seed,
                            MethodOutcome& out) {
    const bool hier = spec.algorithm.value_or("kmeans") == "hierarchical";
    if (spec.algorithm && *spec.algorithm != "kmeans" && *spec.algorithm != "hierarchical") {
        throw std::invalid_argument("unknown algorithm: " + *spec.algorithm);
    }
    Partition part;
    if (spec.M) {
        if (hier) {
            part = hierarchical(X, Linkage::ward, *spec.M).partition;
        } else {
            KmeansOptions ko;
            ko.restarts = spec.restarts.value_or(20);
            ko.seed = seed;
            part = kmeans(X, *spec.M, ko).partition;
        }
    } else {
        MajorityOptions mo;
        mo.method = hier ? ClusterMethod::hierarchical : ClusterMethod::kmeans;
        mo.linkage = Linkage::ward;
        mo.restarts = spec.restarts.value_or(20);
        mo.seed = seed;
        const MajorityResult sel = select_M_majority(X, M_range, mo);
        part = sel.best_partition;
    }
    out.selected_M = part.M;
    out.labels = part.labels;
    out.diagnostics["wcss"] = part.wcss;
    const Eigen::MatrixXd D = pairwise_distances(X);
    out.diagnostics["silhouette"] = silhouette(D, part.labels).mean;
    out.diagnostics["dunn"] = dunn(D, part.labels);
    if (part.M >= 2 && part.M < static_cast<int>(X.rows())) {
        out.diagnostics["calinski_harabasz"] = calinski_harabasz(X, part.labels, part.M);
    }
}

MethodOutcome run_method(const CurveSet& cs, const MethodSpec& spec,
                         std::span<const int> M_range_default, std::uint64_t seed) {
    MethodOutcome out;
    out.name = spec.name.empty() ? spec.kind : spec.name;
    out.kind = spec.kind;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        std::span<const int> M_range = spec.M_range.empty()
                                           ? M_range_default
                                           : std::span<const int>(spec.M_range);
        const double a = cs.grid.front();
        const double b = cs.grid.back();

        if (spec.kind == "raw") {
            const CurveSet sub = subsample_grid(cs, spec.subsample_step.value_or(13));
            cluster_feature_matrix(sub.values, spec, M_range, seed, out);
        } else if (spec.kind == "filtering") {
            auto basis = std::make_shared<BSplineBasis>(a, b, spec.num_basis.value_or(12));
            SmoothingSpec sm;
            sm.lambda = spec.lambda.value_or(0.0);
            const CoefficientSet coeffs = smooth_curveset(cs, basis, sm);
            cluster_feature_matrix(coeffs.coefficients, spec, M_range, seed, out);
        } else if (spec.kind == "fpca") {
            const int K = spec.num_basis.value_or(std::min(100, cs.m()));
            auto basis = std::make_shared<BSplineBasis>(a, b, K);
            SmoothingSpec sm;
            if (spec.lambda) {
                sm.lambda = *spec.lambda;
            } else {
                sm.gcv = true;
            }
            const CoefficientSet coeffs = smooth_curveset(cs, basis, sm);
            const FpcaModel model = fpca(coeffs);
            const int L = select_components(model, spec.var_threshold.value_or(0.99));
            out.diagnostics["components"] = L;
            cluster_feature_matrix(model.scores.leftCols(L), spec, M_range, seed, out);
        } else if (spec.kind == "distance") {
            auto basis = std::make_shared<BSplineBasis>(a, b, spec.num_basis.value_or(12));
            SmoothingSpec sm;
            sm.lambda = spec.lambda.value_or(0.0);
            const CoefficientSet coeffs = smooth_curveset(cs, basis, sm);
            const int l = spec.deriv.value_or(0);
            KmeansOptions ko;
            ko.restarts = spec.restarts.value_or(20);
            ko.seed = seed;
            if (spec.M) {
                const FunctionalKmeansResult fk = functional_kmeans(coeffs, *spec.M, l, ko);
                out.selected_M = *spec.M;
                out.labels = fk.partition.labels;
                out.diagnostics["wcss"] = fk.partition.wcss;
                out.diagnostics["silhouette"] =
                    silhouette(distance_matrix(coeffs, l).D, fk.partition.labels).mean;
            } else {
                const FunctionalSelection sel = select_M_functional(coeffs, l, M_range, ko);
                out.selected_M = sel.best_M;
                out.labels = sel.partition.labels;
                out.diagnostics["wcss"] = sel.partition.wcss;
                for (const auto& [M, sil] : sel.silhouette_by_M) {
                    if (M == sel.best_M) out.diagnostics["silhouette"] = sil;
                }
            }
        } else if (spec.kind == "fclust") {
            auto basis = std::make_shared<BSplineBasis>(a, b, spec.num_basis.value_or(5));
            FclustOptions fo;
            fo.em.seed = seed;
            fo.em.restarts = spec.restarts.value_or(3);
            fo.em.stochastic_init = spec.stochastic_init.value_or(false);
            auto fit_one = [&](int M) { return fclust_em(cs, basis, M, fo); };
            if (spec.M) {
                const FclustModel model = fit_one(*spec.M);
                out.selected_M = *spec.M;
                out.labels = model.hard_labels();
                out.diagnostics["loglik"] = model.loglik;
                out.diagnostics["bic"] = model.bic;
            } else {
                const auto sel = select_M_bic(fit_one, M_range);
                out.selected_M = sel.best_M;
                out.labels = sel.model.hard_labels();
                out.diagnostics["loglik"] = sel.model.loglik;
                out.diagnostics["bic"] = sel.model.bic;
            }
        } else if (spec.kind == "waveclust") {
            WaveclustOptions wo;
            wo.em.seed = seed;
            wo.em.restarts = spec.restarts.value_or(3);
            wo.em.stochastic_init = spec.stochastic_init.value_or(false);
            auto fit_one = [&](int M) { return waveclust_em(cs, M, wo); };
            if (spec.M) {
                const WaveletModel model = fit_one(*spec.M);
                out.selected_M = *spec.M;
                out.labels = model.hard_labels();
                out.diagnostics["loglik"] = model.loglik;
                out.diagnostics["bic"] = model.bic;
                out.diagnostics["icl"] = model.icl;
            } else {
                const auto sel = select_M_bic(fit_one, M_range);
                out.selected_M = sel.best_M;
                out.labels = sel.model.hard_labels();
                out.diagnostics["loglik"] = sel.model.loglik;
                out.diagnostics["bic"] = sel.model.bic;
                out.diagnostics["icl"] = sel.model.icl;
            }
        } else if (spec.kind == "funhddc") {
            auto basis = std::make_shared<BSplineBasis>(a, b, spec.num_basis.value_or(12));
            SmoothingSpec sm;
            sm.lambda = spec.lambda.value_or(0.0);
            const CoefficientSet coeffs = smooth_curveset(cs, basis, sm);
            FunHddcOptions ho;
            ho.em.seed = seed;
            ho.em.restarts = spec.restarts.value_or(10);
            ho.em.stochastic_init = spec.stochastic_init.value_or(false);
            ho.scree_threshold = spec.scree_threshold.value_or(0.2);
            if (spec.submodel) {
                ho.submodel = *spec.submodel == "common_noise" ? HddcSubmodel::common_noise
                                                               : HddcSubmodel::full;
            }
            auto fit_one = [&](int M) { return funhddc_em(coeffs, M, ho); };
            if (spec.M) {
                const FunHddcModel model = fit_one(*spec.M);
                out.selected_M = *spec.M;
                out.labels = model.hard_labels();
                out.diagnostics["loglik"] = model.loglik;
                out.diagnostics["bic"] = model.bic;
            } else {
                const auto sel = select_M_bic(fit_one, M_range);
                out.selected_M = sel.best_M;
                out.labels = sel.model.hard_labels();
                out.diagnostics["loglik"] = sel.model.loglik;
                out.diagnostics["bic"] = sel.model.bic;
            }
        } else {
            throw std::invalid_argument("unknown method kind: " + spec.kind);
        }

        // Centroid curves: per-cluster means of the observed samples.
        out.centroid_curves = Eigen::MatrixXd::Zero(out.selected_M, cs.m());
        std::vector<int> count(static_cast<std::size_t>(out.selected_M), 0);
        for (int i = 0; i < cs.n(); ++i) {
            out.centroid_curves.row(out.labels[static_cast<std::size_t>(i)]) +=
                cs.values.row(i);
            ++count[static_cast<std::size_t>(out.labels[static_cast<std::size_t>(i)])];
        }
        for (int m = 0; m < out.selected_M; ++m) {
            if (count[static_cast<std::size_t>(m)] > 0) {
                out.centroid_curves.row(m) /= count[static_cast<std::size_t>(m)];
            }
        }
        out.ok = true;
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

const char* kPalette[] = {"#1b6ca8", "#d1495b", "#2e933c", "#8c5383", "#e09f3e",
                          "#218380", "#a44a3f", "#5c6b73", "#9b2915", "#3d348b"};

}  // namespace

PipelineConfig PipelineConfig::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    PipelineConfig cfg;
    if (j.contains("methods")) {
        for (const auto& mj : j.at("methods")) cfg.methods.push_back(method_from_json(mj));
    }
    if (j.contains("M_range")) cfg.M_range = j.at("M_range").get<std::vector<int>>();
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.workers = j.value("workers", 0);
    cfg.emit_plots = j.value("emit_plots", true);
    return cfg;
}

PipelineConfig PipelineConfig::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    try {
        return from_json(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

std::vector<MethodSpec> default_method_suite() {
    auto make = [](const char* kind, const char* name) {
        MethodSpec s;
        s.kind = kind;
        s.name = name;
        return s;
    };
    std::vector<MethodSpec> suite;
    suite.push_back(make("raw", "raw_kmeans"));
    suite.push_back(make("filtering", "filtering_kmeans"));
    MethodSpec fh = make("filtering", "filtering_ward");
    fh.algorithm = "hierarchical";
    suite.push_back(std::move(fh));
    suite.push_back(make("fpca", "fpca_kmeans"));
    MethodSpec ph = make("fpca", "fpca_ward");
    ph.algorithm = "hierarchical";
    suite.push_back(std::move(ph));
    suite.push_back(make("distance", "distance_l2"));
    suite.push_back(make("fclust", "fclust"));
    suite.push_back(make("waveclust", "waveclust"));
    suite.push_back(make("funhddc", "funhddc"));
    return suite;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("adjusted_rand_index: length mismatch");
    }
    const std::size_t n = a.size();
    if (n < 2) return 1.0;

    // Contingency table over the distinct labels of each side.
    auto relabel = [](std::span<const int> v) {
        std::vector<int> out(v.size());
        std::vector<int> seen;
        for (std::size_t i = 0; i < v.size(); ++i) {
            auto it = std::find(seen.begin(), seen.end(), v[i]);
            if (it == seen.end()) {
                seen.push_back(v[i]);
                out[i] = static_cast<int>(seen.size()) - 1;
            } else {
                out[i] = static_cast<int>(it - seen.begin());
            }
        }
        return std::pair(out, static_cast<int>(seen.size()));
    };
    const auto [la, ka] = relabel(a);
    const auto [lb, kb] = relabel(b);
    Eigen::MatrixXd table = Eigen::MatrixXd::Zero(ka, kb);
    for (std::size_t i = 0; i < n; ++i) table(la[i], lb[i]) += 1.0;

    auto comb2 = [](double x) { return 0.5 * x * (x - 1.0); };
    double index = 0.0;
    for (int i = 0; i < ka; ++i) {
        for (int j = 0; j < kb; ++j) index += comb2(table(i, j));
    }
    double rows = 0.0, cols = 0.0;
    for (int i = 0; i < ka; ++i) rows += comb2(table.row(i).sum());
    for (int j = 0; j < kb; ++j) cols += comb2(table.col(j).sum());
    const double total = comb2(static_cast<double>(n));
    const double expected = rows * cols / total;
    const double max_index = 0.5 * (rows + cols);
    const double denom = max_index - expected;
    if (denom == 0.0) {
        // Only trivial identical partitions land here (both all-singleton or
        // both one-cluster); verify co-membership to be safe.
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if ((la[i] == la[j]) != (lb[i] == lb[j])) return 0.0;
            }
        }
        return 1.0;
    }
    return (index - expected) / denom;
}

std::string curves_svg(const CurveSet& cs, std::span<const int> labels,
                       const std::string& title) {
    if (!labels.empty() && static_cast<int>(labels.size()) != cs.n()) {
        throw std::invalid_argument("curves_svg: label count mismatch");
    }
    const double W = 860.0, H = 520.0;
    const double ml = 60.0, mr = 20.0, mt = 40.0, mb = 40.0;
    const double x0 = cs.grid.front(), x1 = cs.grid.back();
    double y0 = cs.values.minCoeff(), y1 = cs.values.maxCoeff();
    if (y1 <= y0) y1 = y0 + 1.0;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto sx = [&](double t) { return ml + (t - x0) / (x1 - x0) * (W - ml - mr); };
    auto sy = [&](double v) { return H - mb - (v - y0) / (y1 - y0) * (H - mt - mb); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + fmt2(W) +
           " " + fmt2(H) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt2(W / 2) +
           "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">" + title + "</text>\n";
    // axes
    svg += "<line x1=\"" + fmt2(ml) + "\" y1=\"" + fmt2(H - mb) + "\" x2=\"" +
           fmt2(W - mr) + "\" y2=\"" + fmt2(H - mb) +
           "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    svg += "<line x1=\"" + fmt2(ml) + "\" y1=\"" + fmt2(mt) + "\" x2=\"" + fmt2(ml) +
           "\" y2=\"" + fmt2(H - mb) + "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double tv = x0 + (x1 - x0) * k / 4.0;
        const double vv = y0 + (y1 - y0) * k / 4.0;
        svg += "<text x=\"" + fmt2(sx(tv)) + "\" y=\"" + fmt2(H - mb + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
               "fill=\"#444\">" + fmt2(tv) + "</text>\n";
        svg += "<text x=\"" + fmt2(ml - 8) + "\" y=\"" + fmt2(sy(vv) + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" "
               "fill=\"#444\">" + fmt2(vv) + "</text>\n";
    }
    const int npal = static_cast<int>(sizeof(kPalette) / sizeof(kPalette[0]));
    for (int i = 0; i < cs.n(); ++i) {
        const char* color = labels.empty()
                                ? "#8a8a8a"
                                : kPalette[labels[static_cast<std::size_t>(i)] % npal];
        svg += "<polyline fill=\"none\" stroke=\"";
        svg += color;
        svg += "\" stroke-width=\"1\" stroke-opacity=\"0.8\" points=\"";
        for (int j = 0; j < cs.m(); ++j) {
            if (j > 0) svg += ' ';
            svg += fmt2(sx(cs.grid[static_cast<std::size_t>(j)]));
            svg += ',';
            svg += fmt2(sy(cs.values(i, j)));
        }
        svg += "\"/>\n";
    }
    svg += "</svg>\n";
    return svg;
}

std::string ComparisonReport::to_json() const {
    nlohmann::json j;
    j["dataset"] = dataset;
    j["n_curves"] = n_curves;
    j["n_points"] = n_points;
    j["seed"] = seed;
    nlohmann::json methods = nlohmann::json::array();
    for (const MethodOutcome& o : outcomes) {
        nlohmann::json mj;
        mj["name"] = o.name;
        mj["kind"] = o.kind;
        mj["ok"] = o.ok;
        if (o.ok) {
            mj["selected_M"] = o.selected_M;
            mj["seconds"] = o.seconds;
            mj["diagnostics"] = o.diagnostics;
        } else {
            mj["error"] = o.error;
            mj["seconds"] = o.seconds;
        }
        methods.push_back(std::move(mj));
    }
    j["methods"] = std::move(methods);
    j["ari"]["names"] = ari_names;
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < ari.rows(); ++i) {
        rows.emplace_back(static_cast<std::size_t>(ari.cols()));
        for (Eigen::Index c = 0; c < ari.cols(); ++c) {
            rows.back()[static_cast<std::size_t>(c)] = ari(i, c);
        }
    }
    j["ari"]["matrix"] = std::move(rows);
    return j.dump(2);
}

ComparisonReport run_pipeline(const CurveSet& cs, const PipelineConfig& config) {
    if (cs.n() < 2) throw std::invalid_argument("run_pipeline: need at least two curves");
    const std::vector<MethodSpec> methods =
        config.methods.empty() ? default_method_suite() : config.methods;
    if (methods.empty()) throw std::invalid_argument("run_pipeline: no methods configured");

    ComparisonReport report;
    report.n_curves = cs.n();
    report.n_points = cs.m();
    report.seed = config.seed;
    report.outcomes.resize(methods.size());

    int workers = config.workers > 0
                      ? config.workers
                      : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, static_cast<int>(methods.size()));

    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= methods.size()) return;
            report.outcomes[i] = run_method(cs, methods[i], config.M_range, config.seed);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }

    for (const MethodOutcome& o : report.outcomes) {
        if (o.ok) report.ari_names.push_back(o.name);
    }
    const int R = static_cast<int>(report.ari_names.size());
    report.ari = Eigen::MatrixXd::Identity(R, R);
    std::vector<const MethodOutcome*> ok;
    for (const MethodOutcome& o : report.outcomes) {
        if (o.ok) ok.push_back(&o);
    }
    for (int i = 0; i < R; ++i) {
        for (int j = i + 1; j < R; ++j) {
            const double v = adjusted_rand_index(ok[static_cast<std::size_t>(i)]->labels,
                                                 ok[static_cast<std::size_t>(j)]->labels);
            report.ari(i, j) = report.ari(j, i) = v;
        }
    }
    return report;
}

void write_report(const ComparisonReport& report, const CurveSet& cs,
                  const std::filesystem::path& out_dir, bool emit_plots) {
    std::filesystem::create_directories(out_dir);
    csv::write_file(out_dir / "report.json", report.to_json());
    if (emit_plots) {
        csv::write_file(out_dir / "curves.svg", curves_svg(cs, {}, "curves"));
    }
    for (const MethodOutcome& o : report.outcomes) {
        if (!o.ok) continue;
        const std::string name = safe_name(o.name);
        save_assignments(cs.ids, o.labels, out_dir / ("assignments_" + name + ".csv"));
        CurveSet centro;
        centro.grid = cs.grid;
        centro.values = o.centroid_curves;
        std::vector<int> centro_labels(static_cast<std::size_t>(o.selected_M));
        for (int m = 0; m < o.selected_M; ++m) {
            centro.ids.push_back("centroid_" + std::to_string(m + 1));
            centro_labels[static_cast<std::size_t>(m)] = m;
        }
        save_curveset(centro, out_dir / ("centroids_" + name + ".csv"));
        if (emit_plots) {
            csv::write_file(out_dir / ("curves_" + name + ".svg"),
                            curves_svg(cs, o.labels, name));
            csv::write_file(out_dir / ("centroids_" + name + ".svg"),
                            curves_svg(centro, centro_labels, name + " centroids"));
        }
    }
}

}  // namespace fdc
