"""Multilevel Richardson-Romberg pricing engine with adaptive importance sampling."""

try:
    # installed layout: the extension lives inside the package
    from ._ml2r import (  # noqa: F401
        SdeModel,
        __version__,
        black_scholes_call,
        brownian_bridge_min,
        default_config_json,
        euler_step,
        girsanov_minus,
        girsanov_plus,
        milstein_step,
        plan,
        reference_price,
        run_crude_mc,
        run_study,
        solve_weights,
    )
except ImportError:
    # build-tree layout: the extension sits on PYTHONPATH next to the package
    from _ml2r import (  # noqa: F401
        SdeModel,
        __version__,
        black_scholes_call,
        brownian_bridge_min,
        default_config_json,
        euler_step,
        girsanov_minus,
        girsanov_plus,
        milstein_step,
        plan,
        reference_price,
        run_crude_mc,
        run_study,
        solve_weights,
    )
