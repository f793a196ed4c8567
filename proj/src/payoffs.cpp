#include "ml2r/payoffs.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ml2r {

PayoffSpec PayoffSpec::european(double strike, double rate, double horizon) {
    if (strike <= 0.0) throw std::invalid_argument("PayoffSpec: strike must be positive");
    PayoffSpec s;
    s.kind = PayoffKind::european_call;
    s.strike = strike;
    s.rate = rate;
    s.horizon = horizon;
    return s;
}

PayoffSpec PayoffSpec::partial_lookback(double zeta, double rate, double horizon) {
    if (zeta < 1.0) throw std::invalid_argument("PayoffSpec: zeta must be >= 1");
    PayoffSpec s;
    s.kind = PayoffKind::partial_lookback_call;
    s.zeta = zeta;
    s.rate = rate;
    s.horizon = horizon;
    return s;
}

double european_call(double x_terminal, const PayoffSpec& spec) {
    const double intrinsic = x_terminal - spec.strike;
    return intrinsic > 0.0 ? std::exp(-spec.rate * spec.horizon) * intrinsic : 0.0;
}

double partial_lookback_call(double x_terminal, double x_min, const PayoffSpec& spec) {
    const double intrinsic = x_terminal - spec.zeta * x_min;
    return intrinsic > 0.0 ? std::exp(-spec.rate * spec.horizon) * intrinsic : 0.0;
}

double payoff_of(const PayoffSpec& spec, double x_terminal, std::optional<double> x_min) {
    if (spec.kind == PayoffKind::european_call) return european_call(x_terminal, spec);
    if (!x_min) throw std::invalid_argument("payoff_of: lookback payoff needs a running minimum");
    return partial_lookback_call(x_terminal, *x_min, spec);
}

ReferencePrice reference_price(const std::string& id) {
    // Closed-form benchmark values for the two study configurations:
    // European call with X0=100, K=80, r=0.06, vol=0.4, T=1 and the partial
    // lookback call with X0=100, r=0.15, vol=0.1, T=1, zeta=1.1.
    if (id == "european_call") return {id, 29.4987, ReferencePrice::Source::paper};
    if (id == "partial_lookback_call") return {id, 8.89343, ReferencePrice::Source::paper};
    throw std::out_of_range("reference_price: unknown id '" + id + "'");
}

double black_scholes_call(double x0, double strike, double rate, double vol, double horizon) {
    const double sd = vol * std::sqrt(horizon);
    const double d1 = (std::log(x0 / strike) + (rate + 0.5 * vol * vol) * horizon) / sd;
    const double d2 = d1 - sd;
    auto ncdf = [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); };
    return x0 * ncdf(d1) - strike * std::exp(-rate * horizon) * ncdf(d2);
}

const char* payoff_name(PayoffKind kind) {
    return kind == PayoffKind::european_call ? "european_call" : "partial_lookback_call";
}

}  // namespace ml2r
