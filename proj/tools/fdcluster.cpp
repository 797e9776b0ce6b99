// Command line front end: synth, smooth, fpca, cluster, compare, plot.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <fdcluster/basis.hpp>
#include <fdcluster/curves.hpp>
#include <fdcluster/fpca.hpp>
#include <fdcluster/pipeline.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void save_labels(const fs::path& path, const std::vector<std::string>& ids,
                 const std::vector<int>& labels) {
    std::ostringstream out;
    out << "curve_id,cluster\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << ids[i] << ',' << labels[i] + 1 << '\n';
    }
    write_text(path, out.str());
}

std::vector<int> load_labels(const fs::path& path,
                             const std::vector<std::string>& ids) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    std::getline(in, line);  // header
    std::vector<int> labels(ids.size(), 0);
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || row >= ids.size()) {
            throw std::runtime_error("bad label file " + path.string());
        }
        labels[row++] = std::stoi(line.substr(comma + 1)) - 1;
    }
    if (row != ids.size()) throw std::runtime_error("label count mismatch");
    return labels;
}

fdc::SyntheticConfig synth_from_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    const json j = json::parse(in);
    fdc::SyntheticConfig cfg;
    cfg.n_per_cluster = j.value("n_per_cluster", cfg.n_per_cluster);
    cfg.noise_sd = j.value("noise_sd", cfg.noise_sd);
    cfg.m = j.value("m", cfg.m);
    cfg.t_end = j.value("t_end", cfg.t_end);
    for (const json& t : j.value("templates", json::array())) {
        cfg.templates.push_back({t.value("amplitude_shift", 0.0),
                                 t.value("phase_shift", 0.0),
                                 t.value("level_shift", 0.0)});
    }
    return cfg;
}

std::shared_ptr<fdc::BSplineBasis> basis_for(const fdc::CurveSet& cs, int num_basis) {
    return std::make_shared<fdc::BSplineBasis>(cs.grid.front(), cs.grid.back(),
                                               num_basis);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"functional data clustering toolkit"};
    app.require_subcommand(1);

    std::string input, config, out = ".", labels_path, method = "filtering",
                algorithm = "kmeans";
    std::uint64_t seed = 0;
    int workers = 0, num_basis = 12, M = 0;
    double lambda = 0.0, var_threshold = 0.99;
    bool gcv = false;

    auto add_common = [&](CLI::App* cmd, bool needs_input) {
        auto* in_opt = cmd->add_option("--input", input, "input curve CSV");
        if (needs_input) in_opt->required();
        cmd->add_option("--out", out, "output directory");
        cmd->add_option("--seed", seed, "random seed");
        return cmd;
    };

    auto* synth = add_common(app.add_subcommand("synth", "generate synthetic curves"),
                             false);
    synth->add_option("--config", config, "synthetic config JSON");

    auto* smooth = add_common(app.add_subcommand("smooth", "penalized B-spline fit"),
                              true);
    smooth->add_option("--num-basis", num_basis, "basis dimension");
    smooth->add_option("--lambda", lambda, "fixed penalty");
    smooth->add_flag("--gcv", gcv, "select lambda per curve by GCV");

    auto* fpca_cmd = add_common(app.add_subcommand("fpca", "functional PCA scores"),
                                true);
    fpca_cmd->add_option("--num-basis", num_basis, "basis dimension");
    fpca_cmd->add_flag("--gcv", gcv, "select lambda per curve by GCV");
    fpca_cmd->add_option("--var", var_threshold, "cumulative variance cutoff");

    auto* cluster = add_common(app.add_subcommand("cluster", "run one method"),
                               true);
    cluster->add_option("--method", method,
                        "raw | filtering | fpca | distance | fclust | waveclust | funhddc");
    cluster->add_option("--algorithm", algorithm, "kmeans | hierarchical");
    cluster->add_option("--M", M, "fixed cluster count (0 = select)");
    cluster->add_option("--num-basis", num_basis, "basis dimension");

    auto* compare = add_common(app.add_subcommand("compare", "run the method suite"),
                               true);
    compare->add_option("--config", config, "pipeline config JSON");
    compare->add_option("--workers", workers, "parallel method fits (0 = auto)");

    auto* plot = add_common(app.add_subcommand("plot", "curves to SVG"), true);
    plot->add_option("--labels", labels_path, "assignment CSV for coloring");

    CLI11_PARSE(app, argc, argv);

    try {
        fs::create_directories(out);
        const fs::path out_dir(out);

        if (synth->parsed()) {
            fdc::SyntheticConfig cfg;
            if (!config.empty()) {
                cfg = synth_from_json(config);
            } else {
                cfg.n_per_cluster = 30;
                cfg.templates = {{0.0, 0.0, 0.0}, {0.25, 12.0, 0.2}, {0.5, 24.0, 0.4}};
                cfg.noise_sd = 0.01;
            }
            cfg.seed = seed;
            const fdc::LabeledCurves data = fdc::generate_synthetic(cfg);
            fdc::save_curveset(data.curves, out_dir / "curves.csv");
            save_labels(out_dir / "labels.csv", data.curves.ids, data.labels);
            write_text(out_dir / "curves.svg",
                       fdc::curves_svg(data.curves, data.labels, "synthetic curves"));
            std::cout << data.curves.n() << " curves on " << data.curves.m()
                      << " points -> " << out_dir.string() << "\n";
            return 0;
        }

        const fdc::CurveSet cs = fdc::load_curveset(input);

        if (smooth->parsed() || fpca_cmd->parsed()) {
            fdc::SmoothingSpec spec;
            spec.lambda = lambda;
            spec.gcv = gcv;
            const fdc::CoefficientSet coeffs =
                fdc::smooth_curveset(cs, basis_for(cs, num_basis), spec);
            if (smooth->parsed()) {
                fdc::save_coefficients(coeffs, out_dir / "coefficients.csv");
                std::cout << cs.n() << " curves smoothed with " << num_basis
                          << " basis functions\n";
                return 0;
            }
            const fdc::FpcaModel model = fdc::fpca(coeffs);
            fdc::save_scores(model, coeffs.ids, out_dir / "scores.csv");
            const int L = fdc::select_components(model, var_threshold);
            std::cout << "rank " << model.rank << ", " << L
                      << " components reach " << var_threshold
                      << " of the variance\n";
            return 0;
        }

        if (cluster->parsed() || compare->parsed()) {
            fdc::PipelineConfig pc;
            if (compare->parsed() && !config.empty()) {
                pc = fdc::PipelineConfig::from_json_file(config);
            }
            if (cluster->parsed()) {
                fdc::MethodSpec spec;
                spec.kind = method;
                spec.name = method;
                if (method == "raw" || method == "filtering" || method == "fpca") {
                    spec.algorithm = algorithm;
                }
                if (M > 0) spec.M = M;
                spec.num_basis = num_basis;
                pc.methods = {spec};
            }
            pc.seed = seed;
            if (workers > 0) pc.workers = workers;
            const fdc::ComparisonReport report = fdc::run_pipeline(cs, pc);
            fdc::write_report(report, cs, out_dir, pc.emit_plots);
            for (const fdc::MethodOutcome& o : report.outcomes) {
                std::cout << o.name << ": "
                          << (o.ok ? "M=" + std::to_string(o.selected_M)
                                   : "failed (" + o.error + ")")
                          << "\n";
            }
            return 0;
        }

        // plot
        std::vector<int> labels;
        if (!labels_path.empty()) labels = load_labels(labels_path, cs.ids);
        write_text(out_dir / "curves.svg",
                   fdc::curves_svg(cs, labels, fs::path(input).stem().string()));
        std::cout << "wrote " << (out_dir / "curves.svg").string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
