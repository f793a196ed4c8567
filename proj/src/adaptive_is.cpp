#include "ml2r/adaptive_is.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ml2r {

double girsanov_minus(double w_terminal, double theta, double horizon) {
    return std::exp(-theta * w_terminal - 0.5 * theta * theta * horizon);
}

double girsanov_plus(double w_terminal, double theta, double horizon) {
    return std::exp(-theta * w_terminal + 0.5 * theta * theta * horizon);
}

double GirsanovWeight::log_minus() const {
    return -theta * w_terminal - 0.5 * theta * theta * horizon;
}

double GirsanovWeight::log_plus() const {
    return -theta * w_terminal + 0.5 * theta * theta * horizon;
}

double GirsanovWeight::minus() const { return std::exp(log_minus()); }

double GirsanovWeight::plus() const { return std::exp(log_plus()); }

double compute_k_l(int level, const StructuralParams& sp, const WeightSet& weights) {
    if (sp.beta <= 1.0)
        throw std::invalid_argument("compute_k_l: defined only on the beta > 1 branch");
    if (level < 1) throw std::invalid_argument("compute_k_l: level must be >= 1");
    const double M = sp.refinement;
    const double hb2 = std::pow(sp.coarsest_h, sp.beta / 2.0);
    const double m_pow = std::pow(M, (1.0 - sp.beta) / 2.0);
    const double big_sigma =
        1.0 + sp.lambda * hb2 * (1.0 + c_upper(sp.refinement, sp.beta) * m_pow / (1.0 - m_pow));
    if (level == 1) return 1.0 / (big_sigma * sp.var_y0 * (1.0 + sp.lambda * hb2));
    if (level > weights.depth)
        throw std::invalid_argument("compute_k_l: level exceeds weight depth");
    const double k2 =
        hb2 / (big_sigma * std::sqrt(sp.var_y0 * sp.v1) * c_lower(sp.refinement, sp.beta));
    return k2 * std::pow(M, (1.0 + sp.beta) * (level - 1) / 2.0) *
           std::fabs(weights.w_tilde[level - 1]) * std::pow(sp.coarsest_h, -sp.beta);
}

double gradient_G(double theta, const GradientSample& sample, double horizon) {
    const double scale = sample.branch == GradientBranch::beta_gt_1 ? sample.k_l : 1.0;
    return (theta * horizon - sample.w_terminal) * scale * sample.payoff_term *
           sample.payoff_term * girsanov_plus(sample.w_terminal, theta, horizon);
}

ThetaState ThetaState::initial(int level, double theta0, double lo, double hi,
                               GainSchedule gain) {
    if (lo > hi) throw std::invalid_argument("ThetaState: empty projection domain");
    ThetaState s;
    s.level = level;
    s.theta = std::clamp(theta0, lo, hi);
    s.theta_sum = s.theta;
    s.theta_bar = s.theta;
    s.iterations = 0;
    s.lo = lo;
    s.hi = hi;
    s.gain = gain;
    return s;
}

void robbins_monro_update(ThetaState& state, const GradientSample& sample, double horizon) {
    const double g = gradient_G(state.theta, sample, horizon);
    const double gamma = state.gain(state.iterations + 1);
    const double candidate = state.theta - gamma * g;
    if (!std::isfinite(candidate))
        throw std::runtime_error("robbins_monro_update: non-finite iterate at step " +
                                 std::to_string(state.iterations + 1));
    state.theta = std::clamp(candidate, state.lo, state.hi);
    ++state.iterations;
    state.theta_sum += state.theta;
    state.theta_bar = state.theta_sum / static_cast<double>(state.iterations + 1);
}

ThetaState robbins_monro_run(int level, GradientBranch branch,
                             const std::function<GradientSample(double)>& sampler,
                             ThetaState init, long n_iter, double horizon) {
    if (n_iter <= 0) throw std::invalid_argument("robbins_monro_run: n_iter must be positive");
    ThetaState state = init;
    state.level = level;
    for (long n = 0; n < n_iter; ++n) {
        GradientSample sample = sampler(state.theta);
        sample.level = level;
        sample.branch = branch;
        robbins_monro_update(state, sample, horizon);
    }
    return state;
}

}  // namespace ml2r
