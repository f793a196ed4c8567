#pragma once

#include <functional>

namespace ml2r {

/// Scalar diffusion dX = b(X) dt + sigma(X) dW on [0, horizon].
/// Drift and diffusion must be Lipschitz on the simulated range;
/// diffusion_derivative is the exact derivative of diffusion (Milstein needs it).
struct SdeModel {
    std::function<double(double)> drift;
    std::function<double(double)> diffusion;
    std::function<double(double)> diffusion_derivative;
    double x0 = 0.0;
    double horizon = 0.0;

    // Set when the model is geometric Brownian motion; lets hot loops use
    // the closed coefficients directly.
    bool is_gbm = false;
    double rate = 0.0;
    double vol = 0.0;

    static SdeModel gbm(double rate, double vol, double x0, double horizon);
};

/// Discretization scheme; the tag fixes the strong rate beta used downstream
/// (squared-L2 convention: Euler beta = 1, Milstein beta = 2).
enum class SchemeKind { euler, milstein };

double strong_rate_beta(SchemeKind scheme);
const char* scheme_name(SchemeKind scheme);

}  // namespace ml2r
