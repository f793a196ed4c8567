#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ml2r/rng.hpp"
#include "ml2r/sde_model.hpp"

namespace ml2r {

/// Thrown when a simulated state turns NaN/inf; carries enough context to
/// identify the offending stream instead of contaminating averages.
class SampleAbort : public std::runtime_error {
  public:
    SampleAbort(const StreamKey& key, int level, long long step, double value);
    StreamKey key;
    int level;
    long long step;
    double value;
};

/// One coupled coarse/fine draw at a given level. The coarse path consumes
/// the same Brownian increments as the fine one (each coarse increment is
/// the sum of its M fine increments). At level 1 only the fine path exists;
/// the coarse fields mirror it and has_coarse is false.
struct CoupledPathSample {
    double fine_terminal = 0.0;
    double coarse_terminal = 0.0;
    std::optional<double> fine_min;
    std::optional<double> coarse_min;
    double brownian_terminal = 0.0;  // sum of all fine increments
    int level = 1;
    double theta_used = 0.0;
    bool has_coarse = false;
};

/// Optional per-path record for coupling diagnostics.
struct PathTrace {
    std::vector<double> fine_increments;
    std::vector<double> coarse_increments;
};

/// One Euler step under drift shift theta: the shifted scheme equals the
/// plain scheme driven by dB = dW + theta*h, bit for bit.
double euler_step(double x, double t, double h, double dW, const SdeModel& model, double theta);

/// One Milstein step under drift shift theta, same dB convention.
double milstein_step(double x, double t, double h, double dW, const SdeModel& model, double theta);

/// Conditional minimum of one step via the Brownian-bridge formula
///   0.5 * (x_n + x_next - sqrt((x_next - x_n)^2 - 2 * vol_level^2 * h * log u)).
/// vol_level is the diffusion coefficient at the left endpoint. u must be in (0, 1].
double brownian_bridge_min(double x_n, double x_next, double vol_level, double h, double u);

/// Simulates the coupled pair for one level. Fine path: n1 * M^(level-1)
/// uniform steps with n1 = round(horizon / coarsest_h); coarse path: n1 *
/// M^(level-2) steps sharing the same increments. With track_min, the fine
/// minimum is taken over per-step bridge draws (one uniform after each
/// Gaussian) and the coarse minimum is set equal to the fine one.
CoupledPathSample simulate_coupled_pair(const SdeModel& model, SchemeKind scheme, int level,
                                        int refinement, double coarsest_h, double theta,
                                        bool track_min, RngStream& rng,
                                        PathTrace* trace = nullptr);

}  // namespace ml2r
