#include "fdcluster/curves.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "csv.hpp"

namespace fdc {

CurveSet load_curveset(const std::filesystem::path& path) {
    csv::Table t = csv::read_table(path);
    if (t.header.size() < 2) {
        throw std::runtime_error(path.string() + ": header needs at least one grid value");
    }
    const std::size_t m = t.header.size() - 1;
    CurveSet cs;
    cs.grid.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        cs.grid[j] = csv::parse_double(t.header[j + 1], path, 1, j + 2);
        if (j > 0 && cs.grid[j] <= cs.grid[j - 1]) {
            std::ostringstream msg;
            msg << path.string() << ": grid not strictly increasing at column "
                << j + 2;
            throw std::runtime_error(msg.str());
        }
    }
    const std::size_t n = t.rows.size();
    cs.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    cs.ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = t.rows[i];
        if (row.size() != m + 1) {
            std::ostringstream msg;
            msg << path.string() << ": row " << i + 2 << " has " << row.size()
                << " fields, expected " << m + 1;
            throw std::runtime_error(msg.str());
        }
        cs.ids.push_back(row[0]);
        for (std::size_t j = 0; j < m; ++j) {
            cs.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                csv::parse_double(row[j + 1], path, i + 2, j + 2);
        }
    }
    return cs;
}

void save_curveset(const CurveSet& cs, const std::filesystem::path& path) {
    std::string out = "id";
    for (double t : cs.grid) {
        out += ',';
        out += csv::format(t);
    }
    out += '\n';
    for (int i = 0; i < cs.n(); ++i) {
        out += cs.ids[static_cast<std::size_t>(i)];
        for (int j = 0; j < cs.m(); ++j) {
            out += ',';
            out += csv::format(cs.values(i, j));
        }
        out += '\n';
    }
    csv::write_file(path, out);
}

CurveSet subsample_grid(const CurveSet& cs, int step) {
    if (step < 1 || step > cs.m()) {
        throw std::invalid_argument("subsample_grid: step out of range");
    }
    const int kept = 1 + (cs.m() - 1) / step;
    CurveSet out;
    out.ids = cs.ids;
    out.grid.resize(static_cast<std::size_t>(kept));
    out.values.resize(cs.n(), kept);
    for (int j = 0; j < kept; ++j) {
        out.grid[static_cast<std::size_t>(j)] = cs.grid[static_cast<std::size_t>(j) * step];
        out.values.col(j) = cs.values.col(static_cast<Eigen::Index>(j) * step);
    }
    return out;
}

std::vector<double> synthetic_template(const ClusterTemplate& tpl,
                                       std::span<const double> grid) {
    if (grid.empty()) throw std::invalid_argument("synthetic_template: empty grid");
    const double T = grid.back();
    if (T <= 0.0) throw std::invalid_argument("synthetic_template: need grid.back() > 0");
    // Base shape: fast exponential drop from the start, logistic rise to the
    // peak, then a gentle linear fall. Scales echo a milliohm-range
    // resistance trace over a couple hundred samples.
    const double c0 = 0.30;
    const double drop_amp = 0.12;
    const double drop_tau = T / 40.0;
    const double rise_amp = 0.20 + tpl.amplitude_shift;
    const double rise_center = 0.35 * T + tpl.phase_shift;
    const double rise_width = T / 18.0;
    const double tail_slope = 0.05 / T;
    const double end_ramp = tpl.level_shift;

    std::vector<double> out(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double t = grid[j];
        const double rise = rise_amp / (1.0 + std::exp(-(t - rise_center) / rise_width));
        out[j] = c0 + drop_amp * std::exp(-t / drop_tau) + rise - tail_slope * t +
                 end_ramp * (t / T);
    }
    return out;
}

LabeledCurves generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.templates.empty()) {
        throw std::invalid_argument("generate_synthetic: no templates");
    }
    if (cfg.n_per_cluster < 1 || cfg.m < 2) {
        throw std::invalid_argument("generate_synthetic: bad sizes");
    }
    LabeledCurves out;
    auto& cs = out.curves;
    cs.grid.resize(static_cast<std::size_t>(cfg.m));
    for (int j = 0; j < cfg.m; ++j) {
        cs.grid[static_cast<std::size_t>(j)] = cfg.t_end * j / (cfg.m - 1);
    }
    const int n = cfg.n_per_cluster * static_cast<int>(cfg.templates.size());
    cs.values.resize(n, cfg.m);
    cs.ids.reserve(static_cast<std::size_t>(n));
    out.labels.reserve(static_cast<std::size_t>(n));

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    int row = 0;
    for (std::size_t c = 0; c < cfg.templates.size(); ++c) {
        std::vector<double> base = synthetic_template(cfg.templates[c], cs.grid);
        for (int r = 0; r < cfg.n_per_cluster; ++r, ++row) {
            for (int j = 0; j < cfg.m; ++j) {
                double v = base[static_cast<std::size_t>(j)];
                if (cfg.noise_sd > 0.0) v += cfg.noise_sd * noise(rng);
                cs.values(row, j) = v;
            }
            cs.ids.push_back("c" + std::to_string(c + 1) + "_" + std::to_string(r + 1));
            out.labels.push_back(static_cast<int>(c));
        }
    }
    return out;
}

}  // namespace fdc
