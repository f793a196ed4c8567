#include "ml2r/path_kernel.hpp"

#include <cmath>
#include <limits>

namespace ml2r {

namespace {

long long int_pow(long long base, int exp) {
    long long r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

// Single source of truth for the update arithmetic; the public step
// functions and the path loops below must agree bit for bit.
inline double euler_update(double x, double h, double dB, double b, double s) {
    return x + b * h + s * dB;
}

inline double milstein_update(double x, double h, double dB, double b, double s, double sp) {
    return x + b * h + s * dB + 0.5 * sp * s * (dB * dB - h);
}

struct GbmOps {
    double rate, vol;
    double b(double x) const { return rate * x; }
    double s(double x) const { return vol * x; }
    double sp(double) const { return vol; }
};

struct GenericOps {
    const SdeModel* m;
    double b(double x) const { return m->drift(x); }
    double s(double x) const { return m->diffusion(x); }
    double sp(double x) const { return m->diffusion_derivative(x); }
};

template <class Ops>
CoupledPathSample simulate_impl(const Ops& ops, const SdeModel& model, SchemeKind scheme,
                                int level, int refinement, double coarsest_h, double theta,
                                bool track_min, RngStream& rng, PathTrace* trace) {
    const double T = model.horizon;
    long long n1 = std::llround(T / coarsest_h);
    if (n1 < 1) n1 = 1;
    const long long steps_f = n1 * int_pow(refinement, level - 1);
    const double h_f = T / static_cast<double>(steps_f);
    const double sqrt_hf = std::sqrt(h_f);
    const bool coupled = level >= 2;
    const long long steps_c = coupled ? steps_f / refinement : 0;
    const double h_c = coupled ? T / static_cast<double>(steps_c) : 0.0;
    const bool milstein = scheme == SchemeKind::milstein;

    double xf = model.x0;
    double xc = model.x0;
    double w_terminal = 0.0;
    double fine_min = std::numeric_limits<double>::infinity();

    auto fine_step = [&](double dW) {
        const double b = ops.b(xf);
        const double s = ops.s(xf);
        const double dB = dW + theta * h_f;
        const double next = milstein ? milstein_update(xf, h_f, dB, b, s, ops.sp(xf))
                                     : euler_update(xf, h_f, dB, b, s);
        if (track_min) {
            const double u = rng.next_uniform();
            fine_min = std::min(fine_min, brownian_bridge_min(xf, next, s, h_f, u));
        }
        xf = next;
    };

    long long step_index = 0;
    if (!coupled) {
        for (long long n = 0; n < steps_f; ++n) {
            const double dW = sqrt_hf * rng.next_normal();
            w_terminal += dW;
            if (trace) trace->fine_increments.push_back(dW);
            fine_step(dW);
            if (!std::isfinite(xf)) throw SampleAbort(rng.key(), level, n, xf);
        }
    } else {
        for (long long c = 0; c < steps_c; ++c) {
            double dWc = 0.0;
            for (int m = 0; m < refinement; ++m, ++step_index) {
                const double dW = sqrt_hf * rng.next_normal();
                w_terminal += dW;
                dWc += dW;
                if (trace) trace->fine_increments.push_back(dW);
                fine_step(dW);
                if (!std::isfinite(xf)) throw SampleAbort(rng.key(), level, step_index, xf);
            }
            if (trace) trace->coarse_increments.push_back(dWc);
            const double b = ops.b(xc);
            const double s = ops.s(xc);
            const double dB = dWc + theta * h_c;
            xc = milstein ? milstein_update(xc, h_c, dB, b, s, ops.sp(xc))
                          : euler_update(xc, h_c, dB, b, s);
            if (!std::isfinite(xc)) throw SampleAbort(rng.key(), level, c, xc);
        }
    }

    CoupledPathSample sample;
    sample.level = level;
    sample.theta_used = theta;
    sample.fine_terminal = xf;
    sample.has_coarse = coupled;
    sample.coarse_terminal = coupled ? xc : xf;
    sample.brownian_terminal = w_terminal;
    if (track_min) {
        sample.fine_min = fine_min;
        sample.coarse_min = fine_min;  // coarse minimum copied from fine
    }
    return sample;
}

}  // namespace

SampleAbort::SampleAbort(const StreamKey& k, int lvl, long long s, double v)
    : std::runtime_error("non-finite state at level " + std::to_string(lvl) + ", step " +
                         std::to_string(s) + " (replication " + std::to_string(k.replication) +
                         ", path " + std::to_string(k.path) + ")"),
      key(k),
      level(lvl),
      step(s),
      value(v) {}

double euler_step(double x, double /*t*/, double h, double dW, const SdeModel& model,
                  double theta) {
    if (h <= 0.0) throw std::invalid_argument("euler_step: h must be positive");
    const double dB = dW + theta * h;
    return euler_update(x, h, dB, model.drift(x), model.diffusion(x));
}

double milstein_step(double x, double /*t*/, double h, double dW, const SdeModel& model,
                     double theta) {
    if (h <= 0.0) throw std::invalid_argument("milstein_step: h must be positive");
    const double dB = dW + theta * h;
    return milstein_update(x, h, dB, model.drift(x), model.diffusion(x),
                           model.diffusion_derivative(x));
}

double brownian_bridge_min(double x_n, double x_next, double vol_level, double h, double u) {
    if (u <= 0.0 || u > 1.0) throw std::invalid_argument("brownian_bridge_min: u must be in (0,1]");
    const double dx = x_next - x_n;
    const double radicand = dx * dx - 2.0 * vol_level * vol_level * h * std::log(u);
    return 0.5 * (x_n + x_next - std::sqrt(radicand));
}

CoupledPathSample simulate_coupled_pair(const SdeModel& model, SchemeKind scheme, int level,
                                        int refinement, double coarsest_h, double theta,
                                        bool track_min, RngStream& rng, PathTrace* trace) {
    if (level < 1) throw std::invalid_argument("simulate_coupled_pair: level must be >= 1");
    if (level >= 2 && refinement < 2)
        throw std::invalid_argument("simulate_coupled_pair: refinement must be >= 2");
    if (coarsest_h <= 0.0)
        throw std::invalid_argument("simulate_coupled_pair: coarsest_h must be positive");

    if (model.is_gbm) {
        return simulate_impl(GbmOps{model.rate, model.vol}, model, scheme, level, refinement,
                             coarsest_h, theta, track_min, rng, trace);
    }
    return simulate_impl(GenericOps{&model}, model, scheme, level, refinement, coarsest_h, theta,
                         track_min, rng, trace);
}

}  // namespace ml2r
