#pragma once

#include <cstdint>
#include <vector>

#include "ml2r/adaptive_is.hpp"
#include "ml2r/calibration.hpp"
#include "ml2r/path_kernel.hpp"
#include "ml2r/payoffs.hpp"

namespace ml2r {

struct LevelStats {
    long long paths = 0;
    double mean = 0.0;
    double variance = 0.0;  // sample variance of the per-path terms
};

struct EstimateResult {
    double estimate = 0.0;
    std::vector<LevelStats> levels;
    double cost = 0.0;  // sum_l N_l (n_{l-1} + n_l) / h, n_0 = 0
    double wall_seconds = 0.0;
    ThetaSchedule thetas;  // adaptive runs only
    LevelPlan plan;
};

/// Seed, replication id and worker count for one estimator run. Results are
/// bit-identical for any thread count because accumulation happens in fixed
/// path blocks reduced in index order.
struct RunContext {
    std::uint64_t master_seed = 0;
    std::uint32_t replication = 0;
    int threads = 1;
};

/// Fixed-measure multilevel estimator: level-1 payoff mean plus the
/// w_tilde-weighted coupled-difference means.
EstimateResult run_ml2r(const SdeModel& model, const PayoffSpec& payoff, SchemeKind scheme,
                        const LevelPlan& plan, const RunContext& ctx);

struct AdaptiveConfig {
    long rm_iterations = 1000;  // updates per level before freezing at the average
    double theta_lo = 0.0;
    double theta_hi = 1.0;
    GainSchedule gain;
    bool use_k_l_scaling = true;  // drop the k_l factor when false (argmin-invariant)
    int path_multiplier = 1;      // 2 for Euler runs
};

/// Per-level adaptive estimator: path k at level l is simulated under the
/// drift shift theta_l^(k-1), its Girsanov-weighted term accumulated, and the
/// same sample drives the projected Robbins-Monro update. After
/// rm_iterations updates the level freezes at the Ruppert-Polyak average.
EstimateResult run_aisml2r(const SdeModel& model, const PayoffSpec& payoff, SchemeKind scheme,
                           const LevelPlan& plan, const StructuralParams& sp,
                           const AdaptiveConfig& cfg, const ThetaSchedule& warm_start,
                           const RunContext& ctx);

/// Single-grid baseline.
EstimateResult run_crude_mc(const SdeModel& model, const PayoffSpec& payoff, SchemeKind scheme,
                            long long n_steps, long long n_paths, const RunContext& ctx);

struct ReplicationSummary {
    long long replications = 0;
    double mean = 0.0;
    double bias = 0.0;      // |mean - reference|
    double variance = 0.0;  // across replications
    double rmse = 0.0;      // sqrt(bias^2 + variance)
    double mean_cost = 0.0;
    double mean_seconds = 0.0;
};

ReplicationSummary estimate_bias_variance(const std::vector<EstimateResult>& results,
                                          const ReferencePrice& reference);

/// (variance * resource) ratio of the baseline run to the adaptive run;
/// resource is the cost proxy or wall time.
double improvement_factor(const ReplicationSummary& baseline, const ReplicationSummary& adaptive,
                          bool use_cost);

}  // namespace ml2r
