#pragma once

#include <functional>
#include <vector>

#include "ml2r/calibration.hpp"

namespace ml2r {

/// Radon-Nikodym weight exp(-theta * w_T - theta^2 * horizon / 2); multiplies
/// payoffs sampled under the drift shift to recover the plain-measure mean.
double girsanov_minus(double w_terminal, double theta, double horizon);

/// Second-moment reweighting kernel exp(-theta * w_T + theta^2 * horizon / 2).
/// Note girsanov_minus(w, theta, T) * girsanov_plus(w, -theta, T) == 1.
double girsanov_plus(double w_terminal, double theta, double horizon);

struct GirsanovWeight {
    double theta = 0.0;
    double w_terminal = 0.0;
    double horizon = 0.0;
    double log_minus() const;
    double log_plus() const;
    double minus() const;
    double plus() const;
};

enum class GradientBranch { beta_gt_1, beta_le_1 };

/// One stochastic-gradient observation for the level objective.
/// payoff_term is Z_l (raw coupled payoff difference; the level-1 payoff
/// itself at l = 1) when beta > 1, or Y_l = h_l^(-beta/2) * Z_l when
/// beta <= 1. k_l applies only on the beta > 1 branch.
struct GradientSample {
    int level = 1;
    GradientBranch branch = GradientBranch::beta_gt_1;
    double payoff_term = 0.0;
    double w_terminal = 0.0;
    double k_l = 1.0;
};

/// Level constant for the beta > 1 objective:
///   k_1 = 1 / (Sigma * Var(Y0) * (1 + lambda h^(beta/2)))
///   k_l = k_2 * M^((1+beta)(l-1)/2) * |w_tilde_l| * h^(-beta), l >= 2,
/// with k_2 = h^(beta/2) / (Sigma * sqrt(Var(Y0) V1) * C_lower).
double compute_k_l(int level, const StructuralParams& sp, const WeightSet& weights);

/// Stochastic gradient (theta T - w_T) * scale * payoff_term^2 * J+(w_T, theta),
/// where scale is k_l on the beta > 1 branch and 1 otherwise.
double gradient_G(double theta, const GradientSample& sample, double horizon);

/// Gain sequence gamma(k) = scale / (k + offset); defaults give 1/(k+1).
struct GainSchedule {
    double scale = 1.0;
    double offset = 1.0;
    double operator()(long k) const { return scale / (static_cast<double>(k) + offset); }
};

/// Projected Robbins-Monro iterate with its Ruppert-Polyak running average
/// over theta^0..theta^k.
struct ThetaState {
    int level = 1;
    double theta = 0.0;
    double theta_bar = 0.0;
    double theta_sum = 0.0;  // running sum behind theta_bar
    long iterations = 0;
    double lo = 0.0;
    double hi = 1.0;
    GainSchedule gain;

    static ThetaState initial(int level, double theta0, double lo, double hi,
                              GainSchedule gain = {});
};

using ThetaSchedule = std::vector<ThetaState>;

/// Applies one projected update theta <- Proj[theta - gamma * G] and folds the
/// new iterate into the running average. Throws if the iterate turns non-finite.
void robbins_monro_update(ThetaState& state, const GradientSample& sample, double horizon);

/// Runs n_iter updates, drawing one fresh GradientSample per iteration from
/// sampler(theta) evaluated at the current iterate.
ThetaState robbins_monro_run(int level, GradientBranch branch,
                             const std::function<GradientSample(double)>& sampler,
                             ThetaState init, long n_iter, double horizon);

}  // namespace ml2r
