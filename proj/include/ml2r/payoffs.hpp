#pragma once

#include <optional>
#include <string>

namespace ml2r {

enum class PayoffKind { european_call, partial_lookback_call };

struct PayoffSpec {
    PayoffKind kind = PayoffKind::european_call;
    double strike = 0.0;  // call only
    double zeta = 1.0;    // lookback only, >= 1
    double rate = 0.0;
    double horizon = 0.0;

    bool needs_min() const { return kind == PayoffKind::partial_lookback_call; }

    static PayoffSpec european(double strike, double rate, double horizon);
    static PayoffSpec partial_lookback(double zeta, double rate, double horizon);
};

/// Discounted call payoff exp(-r T) * max(x_T - K, 0).
double european_call(double x_terminal, const PayoffSpec& spec);

/// Discounted partial lookback payoff exp(-r T) * max(x_T - zeta * x_min, 0).
double partial_lookback_call(double x_terminal, double x_min, const PayoffSpec& spec);

/// Dispatch on the spec kind; x_min is required for the lookback.
double payoff_of(const PayoffSpec& spec, double x_terminal, std::optional<double> x_min);

struct ReferencePrice {
    std::string id;
    double value = 0.0;
    enum class Source { paper, analytic } source = Source::paper;
};

/// Registered closed-form benchmark prices, keyed by payoff id.
/// Throws std::out_of_range for unknown ids.
ReferencePrice reference_price(const std::string& id);

/// Black-Scholes call price; cross-checks the registered European value.
double black_scholes_call(double x0, double strike, double rate, double vol, double horizon);

const char* payoff_name(PayoffKind kind);

}  // namespace ml2r
