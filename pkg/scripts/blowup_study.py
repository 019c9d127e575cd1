"""Blow-up showcase: simulate a collapsing run, extrapolate the blow-up
time, and compare it against the analytic lower bound.

Usage: python scripts/blowup_study.py [outdir]
"""

import json
import sys
from pathlib import Path

from fluxks import grids
from fluxks.bounds import lower_bound_T, lower_bound_constants
from fluxks.diagnostics import detect_blowup, psi
from fluxks.model import InitialDataSpec, ModelParams, make_initial_data, mass_bound
from fluxks.primal import run_primal
from fluxks.stepping import StepperConfig

PARAMS = ModelParams(dim=3, radius=1.0, alpha=0.1, k=1.1, mu=0.1, lam=1.0)
DATA = InitialDataSpec("peaked-exponential", m0=5.0, concentration=400.0)


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("out/blowup_study")
    out.mkdir(parents=True, exist_ok=True)

    grid = grids.graded_radii(PARAMS.radius, 201, 2.0)
    u0 = make_initial_data(DATA, grid, PARAMS)
    cfg = StepperConfig(nodes=201, grading=2.0, t_end=10.0, dt_max=1e-3, u_stop=3e6 * u0.max_value())
    state, series, reason = run_primal(u0, cfg, PARAMS)
    estimate = detect_blowup(series)

    m_bar = mass_bound(grids.omega_integral(grid, u0.values, PARAMS.dim), PARAMS)
    report = lower_bound_constants(2.0, PARAMS, m_bar)
    psi0 = psi(u0, 2.0, PARAMS)
    t_quad, t_closed = lower_bound_T(psi0, report)

    with open(out / "series.csv", "w") as handle:
        series.write_csv(handle)
    summary = {
        "stop_reason": reason.value,
        "final_time": state.t,
        "max_u_final": state.u.max_value(),
        "t_est": estimate.t_est,
        "beta_fit": estimate.beta_fit,
        "confident": estimate.confident,
        "t_lower_quadrature": t_quad,
        "t_lower_closed_form": t_closed,
        "sound": t_closed <= t_quad <= estimate.t_est,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for key, val in summary.items():
        print(f"{key:>24}: {val}")


if __name__ == "__main__":
    main()
