#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ml2r/bench.hpp"

namespace py = pybind11;
using namespace ml2r;

namespace {

SchemeKind scheme_arg(const std::string& name) {
    if (name == "euler") return SchemeKind::euler;
    if (name == "milstein") return SchemeKind::milstein;
    throw py::value_error("scheme must be 'euler' or 'milstein'");
}

PayoffSpec payoff_arg(const std::string& kind, double strike, double zeta, double rate,
                      double horizon) {
    if (kind == "european_call") return PayoffSpec::european(strike, rate, horizon);
    if (kind == "partial_lookback_call") return PayoffSpec::partial_lookback(zeta, rate, horizon);
    throw py::value_error("payoff must be 'european_call' or 'partial_lookback_call'");
}

py::dict result_dict(const EstimateResult& r) {
    py::dict d;
    d["estimate"] = r.estimate;
    d["cost"] = r.cost;
    d["wall_seconds"] = r.wall_seconds;
    py::list levels;
    for (const auto& l : r.levels) {
        py::dict ld;
        ld["paths"] = l.paths;
        ld["mean"] = l.mean;
        ld["variance"] = l.variance;
        levels.append(ld);
    }
    d["levels"] = levels;
    py::list thetas;
    for (const auto& t : r.thetas) {
        py::dict td;
        td["level"] = t.level;
        td["theta"] = t.theta;
        td["theta_bar"] = t.theta_bar;
        td["iterations"] = t.iterations;
        thetas.append(td);
    }
    d["thetas"] = thetas;
    return d;
}

}  // namespace

PYBIND11_MODULE(_ml2r, m) {
    m.doc() = "Multilevel Richardson-Romberg pricing engine with adaptive importance sampling";
    m.attr("__version__") = kVersionTag;

    py::class_<SdeModel>(m, "SdeModel")
        .def_static("gbm", &SdeModel::gbm, py::arg("rate"), py::arg("vol"), py::arg("x0"),
                    py::arg("horizon"))
        .def_readonly("x0", &SdeModel::x0)
        .def_readonly("horizon", &SdeModel::horizon)
        .def_readonly("rate", &SdeModel::rate)
        .def_readonly("vol", &SdeModel::vol);

    m.def("euler_step", &euler_step, py::arg("x"), py::arg("t"), py::arg("h"), py::arg("dw"),
          py::arg("model"), py::arg("theta") = 0.0);
    m.def("milstein_step", &milstein_step, py::arg("x"), py::arg("t"), py::arg("h"), py::arg("dw"),
          py::arg("model"), py::arg("theta") = 0.0);
    m.def("brownian_bridge_min", &brownian_bridge_min, py::arg("x_n"), py::arg("x_next"),
          py::arg("vol_level"), py::arg("h"), py::arg("u"));

    m.def("girsanov_minus", &girsanov_minus, py::arg("w_terminal"), py::arg("theta"),
          py::arg("horizon"));
    m.def("girsanov_plus", &girsanov_plus, py::arg("w_terminal"), py::arg("theta"),
          py::arg("horizon"));

    m.def(
        "solve_weights",
        [](double alpha, int refinement, int depth) {
            const auto ws = solve_weights(alpha, refinement, depth);
            return py::make_tuple(ws.w, ws.w_tilde);
        },
        py::arg("alpha"), py::arg("refinement"), py::arg("depth"),
        "Extrapolation weights (w, w_tilde) for the given weak rate and grid family.");

    m.def(
        "plan",
        [](double eps, double alpha, double beta, double v1, double var_y0, double c_inf,
           double coarsest_h, int refinement, double planner_a) {
            const auto sp = StructuralParams::make(alpha, beta, v1, var_y0, c_inf, coarsest_h,
                                                   refinement, planner_a);
            const auto p = plan(eps, sp);
            py::dict d;
            d["depth"] = p.depth;
            d["total_paths"] = p.total_paths;
            d["level_paths"] = p.level_paths;
            d["mu"] = p.mu;
            d["w_tilde"] = p.weights.w_tilde;
            d["q_star"] = p.q_star;
            return d;
        },
        py::arg("eps"), py::arg("alpha"), py::arg("beta"), py::arg("v1"), py::arg("var_y0"),
        py::arg("c_inf") = 1.0, py::arg("coarsest_h") = 1.0, py::arg("refinement") = 8,
        py::arg("planner_a") = 1.0);

    m.def(
        "reference_price",
        [](const std::string& id) {
            const auto r = reference_price(id);
            return py::make_tuple(r.value, r.source == ReferencePrice::Source::paper ? "paper"
                                                                                     : "analytic");
        },
        py::arg("id"));
    m.def("black_scholes_call", &black_scholes_call, py::arg("x0"), py::arg("strike"),
          py::arg("rate"), py::arg("vol"), py::arg("horizon"));

    m.def(
        "run_crude_mc",
        [](const SdeModel& model, const std::string& payoff, double strike, double zeta,
           long long n_steps, long long n_paths, const std::string& scheme,
           std::uint64_t master_seed, std::uint32_t replication, int threads) {
            const auto spec = payoff_arg(payoff, strike, zeta, model.rate, model.horizon);
            return result_dict(run_crude_mc(model, spec, scheme_arg(scheme), n_steps, n_paths,
                                            {master_seed, replication, threads}));
        },
        py::arg("model"), py::arg("payoff"), py::arg("strike"), py::arg("zeta"),
        py::arg("n_steps"), py::arg("n_paths"), py::arg("scheme") = "milstein",
        py::arg("master_seed") = 0, py::arg("replication") = 0, py::arg("threads") = 1);

    m.def(
        "run_study",
        [](const std::string& config_json) {
            const auto out = run_experiment(config_from_json_text(config_json));
            py::list rows;
            for (const auto& r : out.rows) {
                py::dict d;
                d["estimator"] = r.estimator;
                d["scheme"] = r.scheme;
                d["payoff"] = r.payoff;
                d["k"] = r.k;
                d["eps"] = r.eps;
                d["L"] = r.depth;
                d["N"] = r.total_paths;
                d["variance"] = r.variance;
                d["bias"] = r.bias;
                d["rmse"] = r.rmse;
                d["cost"] = r.cost;
                d["time_seconds"] = r.time_seconds;
                if (r.improvement_factor_cost)
                    d["improvement_factor_cost"] = *r.improvement_factor_cost;
                if (r.improvement_factor_time)
                    d["improvement_factor_time"] = *r.improvement_factor_time;
                rows.append(d);
            }
            return py::make_tuple(rows, manifest_to_json_text(out.manifest));
        },
        py::arg("config_json"),
        "Runs a full experiment from a JSON config; returns (rows, manifest_json).");

    m.def("default_config_json", [] { return config_to_json_text(ExperimentConfig{}); });
}
