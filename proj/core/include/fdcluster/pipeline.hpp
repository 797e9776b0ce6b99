#ifndef FDCLUSTER_PIPELINE_HPP_
#define FDCLUSTER_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fdcluster/curves.hpp"

namespace fdc {

// One clustering route through the pipeline. `kind` is one of:
//   raw        k-means on subsampled evaluations
//   filtering  k-means on spline coefficients
//   fpca       k-means on leading FPCA scores
//   distance   functional k-means under the L2 metric
//   fclust     spline mixed-effects mixture
//   waveclust  wavelet-domain mixed-effects mixture
//   funhddc    subspace Gaussian mixture on coefficients
// Unset fields fall back to defaults mirroring the reference analysis.
struct MethodSpec {
    std::string kind;
    std::string name;                   // defaults to kind
    std::optional<int> M;               // fixed cluster count; unset = select
    std::vector<int> M_range;           // selection range, default 2..6
    std::optional<std::string> algorithm;  // raw/filtering/fpca: kmeans | hierarchical
    std::optional<int> num_basis;
    std::optional<double> lambda;       // unset = GCV for fpca, 0 elsewhere
    std::optional<int> subsample_step;  // raw only, default 13
    std::optional<double> var_threshold;   // fpca, default 0.99
    std::optional<int> deriv;              // distance, default 0
    std::optional<double> scree_threshold; // funhddc, default 0.2
    std::optional<std::string> submodel;   // funhddc
    std::optional<int> restarts;
    std::optional<bool> stochastic_init;
};

struct PipelineConfig {
    std::vector<MethodSpec> methods;  // empty = default suite covering every kind
    std::vector<int> M_range = {2, 3, 4, 5, 6};
    std::uint64_t seed = 0;
    int workers = 0;  // 0 = hardware concurrency
    bool emit_plots = true;

    static PipelineConfig from_json_file(const std::filesystem::path& path);
    static PipelineConfig from_json(const std::string& text);
};

std::vector<MethodSpec> default_method_suite();

struct MethodOutcome {
    std::string name;
    std::string kind;
    bool ok = false;
    std::string error;
    int selected_M = 0;
    std::vector<int> labels;
    Eigen::MatrixXd centroid_curves;  // M x m, sampled on the input grid
    double seconds = 0.0;
    std::map<std::string, double> diagnostics;  // loglik, bic, silhouette, ...
};

struct ComparisonReport {
    std::vector<MethodOutcome> outcomes;
    Eigen::MatrixXd ari;  // pairwise between successful methods, 1 on diagonal
    std::vector<std::string> ari_names;
    std::string dataset;
    int n_curves = 0;
    int n_points = 0;
    std::uint64_t seed = 0;

    std::string to_json() const;
};

ComparisonReport run_pipeline(const CurveSet& cs, const PipelineConfig& config);

// Writes report.json, assignments_<name>.csv, centroids_<name>.csv and, when
// enabled, curves.svg + centroids_<name>.svg. Deterministic output bytes.
void write_report(const ComparisonReport& report, const CurveSet& cs,
                  const std::filesystem::path& out_dir, bool emit_plots);

// Chance-adjusted pair-counting agreement between two labelings.
// Degenerate denominator: 1 if the partitions match, else 0.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

// Polyline plot of curves, optionally colored by label. Pure function of its
// inputs, byte-stable across runs.
std::string curves_svg(const CurveSet& cs, std::span<const int> labels,
                       const std::string& title);

}  // namespace fdc

#endif  // FDCLUSTER_PIPELINE_HPP_
