#include "ml2r/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "ml2r/detail/parallel.hpp"

namespace ml2r {

namespace {

constexpr long long kAccumBlock = 4096;

long long int_pow(long long base, int exp) {
    long long r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

long long level_steps(double horizon, double coarsest_h, int refinement, int level) {
    long long n1 = std::llround(horizon / coarsest_h);
    if (n1 < 1) n1 = 1;
    return n1 * int_pow(refinement, level - 1);
}

double plan_cost(const LevelPlan& plan, double horizon,
                 const std::vector<long long>& effective_paths) {
    double cost = 0.0;
    for (int l = 1; l <= plan.depth; ++l) {
        const long long fine = level_steps(horizon, plan.coarsest_h, plan.refinement, l);
        const long long coarse =
            l >= 2 ? level_steps(horizon, plan.coarsest_h, plan.refinement, l - 1) : 0;
        cost += static_cast<double>(effective_paths[l - 1]) *
                static_cast<double>(fine + coarse) / plan.coarsest_h;
    }
    return cost;
}

LevelStats reduce_blocks(const std::vector<double>& sums, const std::vector<double>& sum_sqs,
                         long long n_paths) {
    double s = 0.0, ss = 0.0;
    for (std::size_t b = 0; b < sums.size(); ++b) {
        s += sums[b];
        ss += sum_sqs[b];
    }
    LevelStats st;
    st.paths = n_paths;
    const double n = static_cast<double>(n_paths);
    st.mean = s / n;
    st.variance = n_paths > 1 ? std::max(0.0, (ss - s * s / n) / (n - 1.0)) : 0.0;
    return st;
}

}  // namespace

EstimateResult run_ml2r(const SdeModel& model, const PayoffSpec& payoff, SchemeKind scheme,
                        const LevelPlan& plan, const RunContext& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = derive_seed(ctx.master_seed, SeedDomain::estimation);
    const bool track_min = payoff.needs_min();

    EstimateResult result;
    result.plan = plan;
    result.levels.resize(plan.depth);

    double estimate = 0.0;
    for (int l = 1; l <= plan.depth; ++l) {
        const long long n_paths = plan.level_paths[l - 1];
        const long long n_blocks = (n_paths + kAccumBlock - 1) / kAccumBlock;
        std::vector<double> sums(n_blocks, 0.0), sum_sqs(n_blocks, 0.0);

        detail::parallel_for(n_blocks, ctx.threads, [&](long long b) {
            const long long begin = b * kAccumBlock;
            const long long end = std::min(n_paths, begin + kAccumBlock);
            double s = 0.0, ss = 0.0;
            for (long long k = begin; k < end; ++k) {
                RngStream rng(seed, StreamKey{ctx.replication, static_cast<std::uint32_t>(l),
                                              static_cast<std::uint64_t>(k)});
                const auto sample = simulate_coupled_pair(model, scheme, l, plan.refinement,
                                                          plan.coarsest_h, 0.0, track_min, rng);
                double term = payoff_of(payoff, sample.fine_terminal, sample.fine_min);
                if (l >= 2)
                    term -= payoff_of(payoff, sample.coarse_terminal, sample.coarse_min);
                s += term;
                ss += term * term;
            }
            sums[b] = s;
            sum_sqs[b] = ss;
        });

        result.levels[l - 1] = reduce_blocks(sums, sum_sqs, n_paths);
        estimate += (l == 1 ? 1.0 : plan.weights.w_tilde[l - 1]) * result.levels[l - 1].mean;
    }

    result.estimate = estimate;
    result.cost = plan_cost(plan, model.horizon, plan.level_paths);
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

EstimateResult run_aisml2r(const SdeModel& model, const PayoffSpec& payoff, SchemeKind scheme,
                           const LevelPlan& plan, const StructuralParams& sp,
                           const AdaptiveConfig& cfg, const ThetaSchedule& warm_start,
                           const RunContext& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = derive_seed(ctx.master_seed, SeedDomain::estimation);
    const bool track_min = payoff.needs_min();
    const double beta = strong_rate_beta(scheme);
    const GradientBranch branch =
        beta > 1.0 ? GradientBranch::beta_gt_1 : GradientBranch::beta_le_1;
    const double horizon = model.horizon;
    if (cfg.path_multiplier < 1)
        throw std::invalid_argument("run_aisml2r: path_multiplier must be >= 1");

    EstimateResult result;
    result.plan = plan;
    result.levels.resize(plan.depth);
    result.thetas.reserve(plan.depth);

    std::vector<long long> effective_paths(plan.depth);
    double estimate = 0.0;
    for (int l = 1; l <= plan.depth; ++l) {
        const long long n_paths = plan.level_paths[l - 1] * cfg.path_multiplier;
        effective_paths[l - 1] = n_paths;
        const long long n_blocks = (n_paths + kAccumBlock - 1) / kAccumBlock;
        std::vector<double> sums(n_blocks, 0.0), sum_sqs(n_blocks, 0.0);

        ThetaState state;
        if (warm_start.empty()) {
            state = ThetaState::initial(l, 0.0, cfg.theta_lo, cfg.theta_hi, cfg.gain);
        } else {
            const ThetaState& w =
                warm_start.size() >= static_cast<std::size_t>(l) ? warm_start[l - 1] : warm_start[0];
            state = ThetaState::initial(l, w.theta_bar, cfg.theta_lo, cfg.theta_hi, cfg.gain);
        }
        const double k_l =
            branch == GradientBranch::beta_gt_1 && cfg.use_k_l_scaling
                ? compute_k_l(l, sp, plan.weights)
                : 1.0;
        const double h_fine =
            horizon / static_cast<double>(level_steps(horizon, plan.coarsest_h, plan.refinement, l));
        const double y_scale =
            branch == GradientBranch::beta_le_1 && l >= 2 ? std::pow(h_fine, -beta / 2.0) : 1.0;

        bool frozen = false;
        double shift = state.theta;
        for (long long k = 0; k < n_paths; ++k) {
            if (!frozen) {
                if (state.iterations >= cfg.rm_iterations) {
                    shift = state.theta_bar;
                    frozen = true;
                } else {
                    shift = state.theta;
                }
            }
            RngStream rng(seed, StreamKey{ctx.replication, static_cast<std::uint32_t>(l),
                                          static_cast<std::uint64_t>(k)});
            const auto sample = simulate_coupled_pair(model, scheme, l, plan.refinement,
                                                      plan.coarsest_h, shift, track_min, rng);
            double z = payoff_of(payoff, sample.fine_terminal, sample.fine_min);
            if (l >= 2) z -= payoff_of(payoff, sample.coarse_terminal, sample.coarse_min);
            const double term = z * girsanov_minus(sample.brownian_terminal, shift, horizon);
            const long long b = k / kAccumBlock;
            sums[b] += term;
            sum_sqs[b] += term * term;

            if (!frozen) {
                GradientSample gs;
                gs.level = l;
                gs.branch = branch;
                gs.payoff_term = z * y_scale;
                gs.w_terminal = sample.brownian_terminal;
                gs.k_l = k_l;
                robbins_monro_update(state, gs, horizon);
            }
        }

        result.levels[l - 1] = reduce_blocks(sums, sum_sqs, n_paths);
        estimate += (l == 1 ? 1.0 : plan.weights.w_tilde[l - 1]) * result.levels[l - 1].mean;
        result.thetas.push_back(state);
    }

    result.estimate = estimate;
    result.cost = plan_cost(plan, horizon, effective_paths);
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

EstimateResult run_crude_mc(const SdeModel& model, const PayoffSpec& payoff, SchemeKind scheme,
                            long long n_steps, long long n_paths, const RunContext& ctx) {
    if (n_steps < 1) throw std::invalid_argument("run_crude_mc: n_steps must be >= 1");
    if (n_paths < 1) throw std::invalid_argument("run_crude_mc: n_paths must be >= 1");
    LevelPlan plan;
    plan.depth = 1;
    plan.coarsest_h = model.horizon / static_cast<double>(n_steps);
    plan.refinement = 2;
    plan.mu = {1.0};
    plan.total_paths = n_paths;
    plan.level_paths = {n_paths};
    plan.weights = solve_weights(1.0, 2, 1);
    plan.q_star = 1.0;
    plan.eps = 0.0;
    return run_ml2r(model, payoff, scheme, plan, ctx);
}

ReplicationSummary estimate_bias_variance(const std::vector<EstimateResult>& results,
                                          const ReferencePrice& reference) {
    if (results.size() < 2)
        throw std::invalid_argument("estimate_bias_variance: need at least 2 replications");
    const double n = static_cast<double>(results.size());
    double sum = 0.0;
    for (const auto& r : results) sum += r.estimate;
    const double mean = sum / n;
    double ss = 0.0, cost = 0.0, secs = 0.0;
    for (const auto& r : results) {
        const double d = r.estimate - mean;
        ss += d * d;
        cost += r.cost;
        secs += r.wall_seconds;
    }
    ReplicationSummary s;
    s.replications = static_cast<long long>(results.size());
    s.mean = mean;
    s.bias = std::fabs(mean - reference.value);
    s.variance = ss / (n - 1.0);
    s.rmse = std::sqrt(s.bias * s.bias + s.variance);
    s.mean_cost = cost / n;
    s.mean_seconds = secs / n;
    return s;
}

double improvement_factor(const ReplicationSummary& baseline, const ReplicationSummary& adaptive,
                          bool use_cost) {
    const double num = baseline.variance * (use_cost ? baseline.mean_cost : baseline.mean_seconds);
    const double den = adaptive.variance * (use_cost ? adaptive.mean_cost : adaptive.mean_seconds);
    if (den == 0.0) throw std::invalid_argument("improvement_factor: zero denominator");
    return num / den;
}

}  // namespace ml2r
