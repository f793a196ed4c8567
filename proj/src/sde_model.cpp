#include "ml2r/sde_model.hpp"

#include <stdexcept>

namespace ml2r {

SdeModel SdeModel::gbm(double rate, double vol, double x0, double horizon) {
    if (x0 <= 0.0) throw std::invalid_argument("gbm: x0 must be positive");
    if (horizon <= 0.0) throw std::invalid_argument("gbm: horizon must be positive");
    SdeModel m;
    m.drift = [rate](double x) { return rate * x; };
    m.diffusion = [vol](double x) { return vol * x; };
    m.diffusion_derivative = [vol](double) { return vol; };
    m.x0 = x0;
    m.horizon = horizon;
    m.is_gbm = true;
    m.rate = rate;
    m.vol = vol;
    return m;
}

double strong_rate_beta(SchemeKind scheme) {
    return scheme == SchemeKind::milstein ? 2.0 : 1.0;
}

const char* scheme_name(SchemeKind scheme) {
    return scheme == SchemeKind::milstein ? "milstein" : "euler";
}

}  // namespace ml2r
