#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ml2r/estimators.hpp"

namespace ml2r {

inline constexpr const char* kVersionTag = "ml2r 0.1.0";

enum class EstimatorKind { ml2r, aisml2r, crude };

const char* estimator_name(EstimatorKind kind);
EstimatorKind estimator_from_name(const std::string& name);

/// Declarative description of one benchmark study. Serializes to a JSON
/// document with one section per concern; see presets/ for examples.
struct ExperimentConfig {
    // model
    double x0 = 100.0;
    double rate = 0.06;
    double vol = 0.4;
    double horizon = 1.0;
    // payoff
    PayoffKind payoff_kind = PayoffKind::european_call;
    double strike = 80.0;
    double zeta = 1.1;
    std::string reference_id = "european_call";
    // scheme
    SchemeKind scheme = SchemeKind::milstein;
    std::vector<EstimatorKind> estimators = {EstimatorKind::ml2r, EstimatorKind::aisml2r};
    // grid: target RMSE values are eps = 2^-k
    int refinement = 8;
    std::vector<int> k_values = {3, 4, 5, 6, 7, 8, 9};
    double coarsest_h = 1.0;
    // replications per k bucket
    int reps_small_k = 50;  // k <= 5
    int reps_mid_k = 10;    // k in {6, 7}
    int reps_large_k = 3;   // k >= 8
    // planner
    double planner_a = 1.0;
    double c_inf = 1.0;
    double alpha = 1.0;
    // pilots
    long long pilot_v1_paths = 100000;
    long long pilot_var_paths = 100000;
    int pilot_m_max = 10;
    // adaptive
    long rm_iterations = 0;  // 0 -> default per scheme/payoff (1000/500/200)
    double theta_lo = 0.0;
    double theta_hi = 1.0;
    double gain_scale = 1.0;
    double gain_offset = 1.0;
    bool use_k_l_scaling = true;
    int euler_path_multiplier = 2;
    // run
    std::uint64_t master_seed = 20260809;
    int threads = 0;  // 0 -> hardware concurrency
    // output
    std::string output_dir;
    std::vector<std::string> formats = {"csv", "json", "plot"};

    SdeModel model() const;
    PayoffSpec payoff() const;
    long effective_rm_iterations() const;
    int replications_for(int k) const;
    int effective_threads() const;
    void validate() const;
};

struct PlanEntry {
    EstimatorKind estimator = EstimatorKind::ml2r;
    int k = 0;
    double eps = 0.0;
    LevelPlan plan;
};

/// Everything needed to re-run an experiment bit-identically: resolved
/// structural parameters, per-eps plans, the pilot drift shift, the full
/// config echo and the software version.
struct RunManifest {
    std::string version = kVersionTag;
    ExperimentConfig config;
    std::optional<StructuralParams> structural_plain;
    std::optional<StructuralParams> structural_theta;
    std::optional<ThetaState> pilot_theta;
    std::vector<PlanEntry> plans;
};

struct ResultRow {
    std::string estimator;
    std::string scheme;
    std::string payoff;
    int k = 0;
    double eps = 0.0;
    int depth = 0;
    long long total_paths = 0;
    double variance = 0.0;
    double bias = 0.0;
    double rmse = 0.0;
    double cost = 0.0;
    double time_seconds = 0.0;
    std::optional<double> improvement_factor_cost;
    std::optional<double> improvement_factor_time;
};

struct ExperimentOutput {
    RunManifest manifest;
    std::vector<ResultRow> rows;
};

/// Runs the pilots and resolves plans for every (estimator, k) pair without
/// executing the replications.
RunManifest calibrate(const ExperimentConfig& config);

ExperimentOutput run_experiment(const ExperimentConfig& config);

/// Executes the replications recorded in a manifest, skipping all pilots.
ExperimentOutput replay(const RunManifest& manifest);

// --- serialization and file emission (bench_io.cpp) ---

ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

/// Applies "section.key=value" overrides on top of a config JSON document.
std::string apply_overrides(const std::string& json_text,
                            const std::vector<std::string>& overrides);

RunManifest manifest_from_json_text(const std::string& text);
std::string manifest_to_json_text(const RunManifest& manifest);
RunManifest load_manifest(const std::string& path);

std::string output_to_json_text(const ExperimentOutput& output);
ExperimentOutput output_from_json_text(const std::string& text);

std::string rows_to_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> rows_from_csv(const std::string& csv);

/// Writes manifest.json plus one file per requested format ("csv", "json",
/// "plot") into out_dir; returns the written paths.
std::vector<std::string> emit_outputs(const ExperimentOutput& output,
                                      const std::vector<std::string>& formats,
                                      const std::string& out_dir);

/// $ML2R_OUTPUT_DIR if set, else "ml2r_out".
std::string default_output_dir();

}  // namespace ml2r
