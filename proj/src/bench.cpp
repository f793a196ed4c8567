#include "ml2r/bench.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "ml2r/detail/parallel.hpp"

namespace ml2r {

const char* estimator_name(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::ml2r: return "ml2r";
        case EstimatorKind::aisml2r: return "aisml2r";
        case EstimatorKind::crude: return "crude";
    }
    return "?";
}

EstimatorKind estimator_from_name(const std::string& name) {
    if (name == "ml2r") return EstimatorKind::ml2r;
    if (name == "aisml2r") return EstimatorKind::aisml2r;
    if (name == "crude") return EstimatorKind::crude;
    throw std::invalid_argument("unknown estimator '" + name + "'");
}

SdeModel ExperimentConfig::model() const { return SdeModel::gbm(rate, vol, x0, horizon); }

PayoffSpec ExperimentConfig::payoff() const {
    return payoff_kind == PayoffKind::european_call
               ? PayoffSpec::european(strike, rate, horizon)
               : PayoffSpec::partial_lookback(zeta, rate, horizon);
}

long ExperimentConfig::effective_rm_iterations() const {
    if (rm_iterations > 0) return rm_iterations;
    if (payoff_kind == PayoffKind::partial_lookback_call) return 200;
    return scheme == SchemeKind::milstein ? 1000 : 500;
}

int ExperimentConfig::replications_for(int k) const {
    if (k <= 5) return reps_small_k;
    if (k <= 7) return reps_mid_k;
    return reps_large_k;
}

int ExperimentConfig::effective_threads() const {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void ExperimentConfig::validate() const {
    if (k_values.empty()) throw std::invalid_argument("config: k_values must be non-empty");
    for (int k : k_values)
        if (k < 1) throw std::invalid_argument("config: k values must be >= 1 so eps is in (0,1)");
    if (reps_small_k < 1 || reps_mid_k < 1 || reps_large_k < 1)
        throw std::invalid_argument("config: replication counts must be >= 1");
    if (refinement < 2) throw std::invalid_argument("config: refinement must be >= 2");
    if (theta_lo > theta_hi) throw std::invalid_argument("config: empty theta domain");
    if (coarsest_h <= 0.0) throw std::invalid_argument("config: coarsest_h must be positive");
    if (estimators.empty()) throw std::invalid_argument("config: no estimators requested");
    payoff();  // throws on bad strike / zeta
}

namespace {

bool wants(const ExperimentConfig& cfg, EstimatorKind kind) {
    for (auto e : cfg.estimators)
        if (e == kind) return true;
    return false;
}

// Level-1 pre-optimization of the drift shift ("dummy optimization"): plain
// Robbins-Monro on coarsest-grid samples, drawn from a dedicated seed domain.
ThetaState run_theta_pilot(const ExperimentConfig& cfg, const StructuralParams& sp_plain) {
    const SdeModel model = cfg.model();
    const PayoffSpec payoff = cfg.payoff();
    const double beta = strong_rate_beta(cfg.scheme);
    const GradientBranch branch =
        beta > 1.0 ? GradientBranch::beta_gt_1 : GradientBranch::beta_le_1;
    const long budget = cfg.scheme == SchemeKind::milstein ? 1000 : 500;
    const std::uint64_t seed = derive_seed(cfg.master_seed, SeedDomain::theta_pilot);
    const bool track_min = payoff.needs_min();

    double k1 = 1.0;
    if (branch == GradientBranch::beta_gt_1 && cfg.use_k_l_scaling)
        k1 = compute_k_l(1, sp_plain, solve_weights(sp_plain.alpha, sp_plain.refinement, 1));

    long iteration = 0;
    auto sampler = [&](double theta) {
        RngStream rng(seed, StreamKey{0, 1, static_cast<std::uint64_t>(iteration++)});
        const auto s = simulate_coupled_pair(model, cfg.scheme, 1, cfg.refinement, cfg.coarsest_h,
                                             theta, track_min, rng);
        GradientSample gs;
        gs.payoff_term = payoff_of(payoff, s.fine_terminal, s.fine_min);
        gs.w_terminal = s.brownian_terminal;
        gs.k_l = k1;
        return gs;
    };

    GainSchedule gain{cfg.gain_scale, cfg.gain_offset};
    ThetaState init = ThetaState::initial(1, 0.5 * (cfg.theta_lo + cfg.theta_hi), cfg.theta_lo,
                                          cfg.theta_hi, gain);
    return robbins_monro_run(1, branch, sampler, init, budget, model.horizon);
}

LevelPlan crude_plan(const ExperimentConfig& cfg, double eps, const StructuralParams& sp) {
    // Single-grid sizing: bias budget eps/sqrt(2) at weak order alpha, the
    // rest of the error budget on the statistical term.
    const double h_target = cfg.coarsest_h * std::pow(eps / std::numbers::sqrt2, 1.0 / sp.alpha);
    const long long n_steps =
        std::max<long long>(1, static_cast<long long>(std::ceil(cfg.horizon / h_target)));
    LevelPlan p;
    p.depth = 1;
    p.coarsest_h = cfg.horizon / static_cast<double>(n_steps);
    p.refinement = cfg.refinement;
    p.mu = {1.0};
    p.total_paths =
        std::max<long long>(2, static_cast<long long>(std::ceil(2.0 * sp.var_y0 / (eps * eps))));
    p.level_paths = {p.total_paths};
    p.weights = solve_weights(sp.alpha, cfg.refinement, 1);
    p.q_star = 1.0;
    p.eps = eps;
    return p;
}

}  // namespace

RunManifest calibrate(const ExperimentConfig& config) {
    config.validate();
    const SdeModel model = config.model();
    const PayoffSpec payoff = config.payoff();
    const double beta = strong_rate_beta(config.scheme);

    RunManifest manifest;
    manifest.config = config;

    const double v1 = estimate_v1(model, payoff, config.scheme, config.coarsest_h,
                                  config.pilot_v1_paths, config.pilot_m_max, config.master_seed);
    const double var0 = estimate_var_y0(model, payoff, config.scheme, config.coarsest_h,
                                        config.pilot_var_paths, config.master_seed);
    manifest.structural_plain =
        StructuralParams::make(config.alpha, beta, v1, var0, config.c_inf, config.coarsest_h,
                               config.refinement, config.planner_a);

    if (wants(config, EstimatorKind::aisml2r)) {
        manifest.pilot_theta = run_theta_pilot(config, *manifest.structural_plain);
        const double theta = manifest.pilot_theta->theta_bar;
        const double v1_theta =
            estimate_v1(model, payoff, config.scheme, config.coarsest_h, config.pilot_v1_paths,
                        config.pilot_m_max, config.master_seed, theta);
        const double var_theta =
            estimate_var_y0(model, payoff, config.scheme, config.coarsest_h,
                            config.pilot_var_paths, config.master_seed, theta);
        manifest.structural_theta =
            StructuralParams::make(config.alpha, beta, v1_theta, var_theta, config.c_inf,
                                   config.coarsest_h, config.refinement, config.planner_a);
        manifest.structural_theta->plan_var_y0 = var0;
    }

    for (EstimatorKind est : config.estimators) {
        for (int k : config.k_values) {
            const double eps = std::pow(2.0, -k);
            PlanEntry entry;
            entry.estimator = est;
            entry.k = k;
            entry.eps = eps;
            switch (est) {
                case EstimatorKind::ml2r:
                    entry.plan = plan(eps, *manifest.structural_plain);
                    break;
                case EstimatorKind::aisml2r:
                    entry.plan = plan(eps, *manifest.structural_theta);
                    break;
                case EstimatorKind::crude:
                    entry.plan = crude_plan(config, eps, *manifest.structural_plain);
                    break;
            }
            manifest.plans.push_back(std::move(entry));
        }
    }
    return manifest;
}

namespace {

ExperimentOutput execute(const RunManifest& manifest) {
    const ExperimentConfig& cfg = manifest.config;
    const SdeModel model = cfg.model();
    const PayoffSpec payoff = cfg.payoff();
    const ReferencePrice reference = reference_price(cfg.reference_id);
    const int threads = cfg.effective_threads();

    AdaptiveConfig adaptive;
    adaptive.rm_iterations = cfg.effective_rm_iterations();
    adaptive.theta_lo = cfg.theta_lo;
    adaptive.theta_hi = cfg.theta_hi;
    adaptive.gain = GainSchedule{cfg.gain_scale, cfg.gain_offset};
    adaptive.use_k_l_scaling = cfg.use_k_l_scaling;
    adaptive.path_multiplier =
        cfg.scheme == SchemeKind::euler ? cfg.euler_path_multiplier : 1;

    ThetaSchedule warm;
    if (manifest.pilot_theta) warm.push_back(*manifest.pilot_theta);

    ExperimentOutput out;
    out.manifest = manifest;

    std::map<std::pair<std::string, int>, ReplicationSummary> summaries;
    for (const PlanEntry& entry : manifest.plans) {
        const int reps = cfg.replications_for(entry.k);
        std::vector<EstimateResult> results(reps);
        detail::parallel_for(reps, threads, [&](long long r) {
            RunContext ctx{cfg.master_seed, static_cast<std::uint32_t>(r), 1};
            switch (entry.estimator) {
                case EstimatorKind::ml2r:
                case EstimatorKind::crude:
                    results[r] = run_ml2r(model, payoff, cfg.scheme, entry.plan, ctx);
                    break;
                case EstimatorKind::aisml2r:
                    results[r] = run_aisml2r(model, payoff, cfg.scheme, entry.plan,
                                             *manifest.structural_theta, adaptive, warm, ctx);
                    break;
            }
        });
        const ReplicationSummary summary = estimate_bias_variance(results, reference);
        summaries[{estimator_name(entry.estimator), entry.k}] = summary;

        ResultRow row;
        row.estimator = estimator_name(entry.estimator);
        row.scheme = scheme_name(cfg.scheme);
        row.payoff = payoff_name(cfg.payoff_kind);
        row.k = entry.k;
        row.eps = entry.eps;
        row.depth = entry.plan.depth;
        row.total_paths = entry.plan.total_paths;
        row.variance = summary.variance;
        row.bias = summary.bias;
        row.rmse = summary.rmse;
        row.cost = summary.mean_cost;
        row.time_seconds = summary.mean_seconds;
        out.rows.push_back(std::move(row));
    }

    // Pair the adaptive rows against the fixed-measure rows at the same k.
    for (ResultRow& row : out.rows) {
        if (row.estimator != "aisml2r") continue;
        const auto it = summaries.find({"ml2r", row.k});
        if (it == summaries.end()) continue;
        const auto ais = summaries.find({"aisml2r", row.k});
        row.improvement_factor_cost = improvement_factor(it->second, ais->second, true);
        row.improvement_factor_time = improvement_factor(it->second, ais->second, false);
    }
    return out;
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& config) {
    return execute(calibrate(config));
}

ExperimentOutput replay(const RunManifest& manifest) {
    manifest.config.validate();
    return execute(manifest);
}

}  // namespace ml2r
