#ifndef FDCLUSTER_CURVES_HPP_
#define FDCLUSTER_CURVES_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fdc {

// A set of curves sampled on one shared, strictly increasing time grid.
// Row i of `values` holds the samples of curve `ids[i]`; there are no
// missing entries.
struct CurveSet {
    std::vector<double> grid;      // m time points, strictly increasing
    Eigen::MatrixXd values;        // n x m
    std::vector<std::string> ids;  // n identifiers, row order

    int n() const { return static_cast<int>(values.rows()); }
    int m() const { return static_cast<int>(values.cols()); }
};

// Loads a curve set from CSV. First row: a label cell followed by the
// numeric grid; body rows: curve id followed by m numeric samples.
// Throws std::runtime_error naming the offending row/column on malformed
// input (missing file, non-numeric cell, ragged row, non-increasing grid).
CurveSet load_curveset(const std::filesystem::path& path);

// Writes the CSV format read by load_curveset.
void save_curveset(const CurveSet& cs, const std::filesystem::path& path);

// Keeps grid indices 0, step, 2*step, ... of every curve.
// Requires 1 <= step <= m. The result has 1 + floor((m-1)/step) points.
CurveSet subsample_grid(const CurveSet& cs, int step);

// Shape parameters of one synthetic cluster, expressed as offsets from the
// generator's base template: a shift of the rise amplitude (min-to-max
// difference), of the local maximum's position, and of the end-of-domain
// level.
struct ClusterTemplate {
    double amplitude_shift = 0.0;
    double phase_shift = 0.0;
    double level_shift = 0.0;
};

struct SyntheticConfig {
    int n_per_cluster = 10;
    std::vector<ClusterTemplate> templates;
    double noise_sd = 0.0;  // additive iid Gaussian per grid point
    int m = 238;
    double t_end = 237.0;   // domain [0, t_end]
    std::uint64_t seed = 0;
};

struct LabeledCurves {
    CurveSet curves;
    std::vector<int> labels;  // 0-based cluster index per row
};

// Noise-free cluster template sampled on `grid`: an exponential initial
// drop, a logistic rise, and a slow linear tail, so each curve has exactly
// one interior local minimum followed by one local maximum followed by
// monotone decay.
std::vector<double> synthetic_template(const ClusterTemplate& tpl,
                                       std::span<const double> grid);

// Deterministic given cfg.seed; labels align with row order and each
// cluster contributes cfg.n_per_cluster consecutive rows.
LabeledCurves generate_synthetic(const SyntheticConfig& cfg);

}  // namespace fdc

#endif  // FDCLUSTER_CURVES_HPP_
