"""Command-line runner: classify | simulate | sweep | bounds.

Config files are flat JSON; see RUN_KEYS for the accepted keys.  All
runs are fully deterministic: identical configs produce byte-identical
series.csv and report.json (timestamps live only in the meta field).
Exit codes: 0 ok, 2 config error, 3 solver error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import datetime
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import jsonschema

from . import bounds as bounds_mod
from . import diagnostics, grids, massform, model, primal
from .errors import ConfigError, FluxKSError, InsufficientGrowth, InvalidP, SolverFailure
from .model import InitialDataSpec, ModelParams
from .stepping import StepperConfig, StopReason

RUN_KEYS = {
    "dim": 3,
    "radius": 1.0,
    "k_f": 1.0,
    "alpha": 0.1,
    "lambda": 1.0,
    "mu": 1.0,
    "k": 1.5,
    "profile": "peaked-exponential",
    "m0": 1.0,
    "concentration": 16.0,
    "solver": "primal",
    "nodes": 201,
    "grading": 1.5,
    "cfl": 0.4,
    "dt_min": 1e-12,
    "dt_max": 1e-2,
    "t_end": 1.0,
    "u_stop": None,
    "p_list": None,
}

SOLVERS = ("primal", "mass", "both")

REPORT_SCHEMA = {
    "type": "object",
    "required": ["config", "stop_reason", "final_time", "steps", "blowup_estimate", "invariants", "ab", "meta"],
    "properties": {
        "config": {"type": "object"},
        "stop_reason": {"enum": [r.value for r in StopReason]},
        "mass_stop_reason": {"enum": [r.value for r in StopReason]},
        "final_time": {"type": "number"},
        "steps": {"type": "integer", "minimum": 0},
        "blowup_estimate": {
            "type": ["object", "null"],
            "required": ["t_est", "beta_fit", "residual", "confident"],
        },
        "invariants": {
            "type": "object",
            "required": ["mass_bound", "monotone"],
            "properties": {
                "mass_bound": {"type": "object", "required": ["ok", "max_ratio", "m_bar"]},
                "monotone": {"type": "object", "required": ["ok", "max_violation", "scale"]},
            },
        },
        "ab": {"type": ["array", "null"]},
        "cross": {"type": ["object", "null"]},
        "meta": {"type": "object"},
    },
}


@dataclass
class RunConfig:
    params: ModelParams
    init: InitialDataSpec
    stepper: StepperConfig
    solver: str
    p_list: list | None
    raw: dict

    def p_values(self) -> list[float]:
        return list(self.p_list) if self.p_list else diagnostics.default_p_list(self.params)


def parse_run_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("run config must be a JSON object")
    unknown = set(data) - set(RUN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    merged = dict(RUN_KEYS)
    merged.update(data)
    if merged["solver"] not in SOLVERS:
        raise ConfigError(f"solver must be one of {SOLVERS}")
    p_list = merged["p_list"]
    if p_list is not None:
        if not isinstance(p_list, list) or not p_list or any(p < 1 for p in p_list):
            raise ConfigError("p_list must be a nonempty list of exponents >= 1")
        p_list = [float(p) for p in p_list]
    try:
        params = ModelParams(
            dim=merged["dim"],
            radius=float(merged["radius"]),
            k_f=float(merged["k_f"]),
            alpha=float(merged["alpha"]),
            lam=float(merged["lambda"]),
            mu=float(merged["mu"]),
            k=float(merged["k"]),
        )
        init = InitialDataSpec(
            profile=merged["profile"],
            m0=float(merged["m0"]),
            concentration=float(merged["concentration"]),
        )
        stepper = StepperConfig(
            nodes=int(merged["nodes"]),
            grading=float(merged["grading"]),
            cfl=float(merged["cfl"]),
            dt_min=float(merged["dt_min"]),
            dt_max=float(merged["dt_max"]),
            t_end=float(merged["t_end"]),
            u_stop=None if merged["u_stop"] is None else float(merged["u_stop"]),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc
    echo = {key: merged[key] for key in RUN_KEYS}
    return RunConfig(params, init, stepper, merged["solver"], p_list, echo)


def build_initial(cfg: RunConfig) -> model.RadialField:
    grid = grids.graded_radii(cfg.params.radius, cfg.stepper.nodes, cfg.stepper.grading)
    return model.make_initial_data(cfg.init, grid, cfg.params)


def _series_invariants(series: diagnostics.DiagnosticsSeries, dim: int) -> dict:
    mass = series.column("l1")
    ratio = float((mass / series.m_bar).max())
    viol = float(series.column("monotone_violation").max())
    # concavity-bound scale is ||w_s||_inf = max_u / N
    scale = float(series.column("max_u").max()) / dim
    return {
        "mass_bound": {"ok": bool(ratio <= 1.0 + 1e-6), "max_ratio": ratio, "m_bar": series.m_bar},
        "monotone": {"ok": bool(viol <= 1e-6 * scale), "max_violation": viol, "scale": scale},
    }


@dataclass
class RunResult:
    series: diagnostics.DiagnosticsSeries
    reason: StopReason
    final_time: float
    steps: int
    estimate: diagnostics.BlowupEstimate | None
    mass_series: diagnostics.DiagnosticsSeries | None = None
    mass_reason: StopReason | None = None
    cross_rows: list | None = None
    cross_max: float | None = None


def execute_run(cfg: RunConfig) -> RunResult:
    u0 = build_initial(cfg)
    p_list = cfg.p_values()
    series = mass_series = None
    reason = mass_reason = None

    if cfg.solver in ("primal", "both"):
        _, series, reason = primal.run_primal(u0, cfg.stepper, cfg.params, p_list)
    if cfg.solver in ("mass", "both"):
        w0 = massform.transform_to_mass(u0, cfg.params)
        _, mseries, mreason = massform.run_mass(w0, cfg.stepper, cfg.params, p_list)
        if cfg.solver == "mass":
            series, reason = mseries, mreason
        else:
            mass_series, mass_reason = mseries, mreason

    try:
        estimate = diagnostics.detect_blowup(series)
    except InsufficientGrowth:
        estimate = None

    cross_rows = cross_max = None
    if cfg.solver == "both":
        tp = series.column("t")
        mp = series.column("max_u")
        tm = mass_series.column("t")
        mm = mass_series.column("max_u")
        mm_interp = np.interp(tp, tm, mm)
        rel = np.abs(mp - mm_interp) / np.maximum(mp, 1e-300)
        cross_rows = list(zip(tp.tolist(), mp.tolist(), mm_interp.tolist(), rel.tolist()))
        cross_max = float(rel.max())

    return RunResult(
        series=series,
        reason=reason,
        final_time=float(series.column("t")[-1]),
        steps=len(series.rows) - 1,
        estimate=estimate,
        mass_series=mass_series,
        mass_reason=mass_reason,
        cross_rows=cross_rows,
        cross_max=cross_max,
    )


def _report_dict(cfg: RunConfig, result: RunResult) -> dict:
    series = result.series
    inv = _series_invariants(series, cfg.params.dim)
    report = {
        "config": cfg.raw,
        "stop_reason": result.reason.value,
        "final_time": result.final_time,
        "steps": result.steps,
        "blowup_estimate": result.estimate.to_dict() if result.estimate else None,
        "invariants": inv,
        "ab": list(series.ab) if series.ab else None,
        "meta": {"created": datetime.datetime.now(datetime.timezone.utc).isoformat()},
    }
    if result.mass_reason is not None:
        report["mass_stop_reason"] = result.mass_reason.value
    if result.cross_max is not None:
        report["cross"] = {"max_rel_discrepancy": result.cross_max}
    return report


def validate_report(report: dict):
    jsonschema.validate(report, REPORT_SCHEMA)


def _plot_script(series: diagnostics.DiagnosticsSeries) -> str:
    header = series.header()
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set logscale y",
        "set xlabel 't'",
        "set ylabel 'sup norm / psi'",
    ]
    cols = [header.index("max_u") + 1]
    cols += [header.index(c) + 1 for c in header if c.startswith("psi_")]
    plots = ", ".join(f"'series.csv' using 1:{c} with lines" for c in cols)
    lines.append("plot " + plots)
    return "\n".join(lines) + "\n"


def cmd_classify(cfg: RunConfig, out_dir: Path | None, quiet: bool) -> int:
    verdict = model.classify_regime(cfg.params)
    payload = json.dumps(verdict.to_dict(), indent=2, sort_keys=True)
    if not quiet:
        print(payload)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "classify.json").write_text(payload + "\n")
    return 0


def cmd_simulate(cfg: RunConfig, out_dir: Path, quiet: bool) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    series_path = out_dir / "series.csv"
    try:
        result = execute_run(cfg)
    except SolverFailure as exc:
        if exc.series is not None:
            with open(series_path, "w") as handle:
                exc.series.write_csv(handle)
                handle.write(f"# truncated: {exc}\n")
        print(f"solver error: {exc}", file=sys.stderr)
        return 3

    with open(series_path, "w") as handle:
        result.series.write_csv(handle)
    report = _report_dict(cfg, result)
    validate_report(report)
    (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    (out_dir / "plot.gp").write_text(_plot_script(result.series))
    if result.cross_rows is not None:
        with open(out_dir / "cross.csv", "w") as handle:
            handle.write("t,max_u_primal,max_u_mass,rel_discrepancy\n")
            for row in result.cross_rows:
                handle.write(",".join(repr(float(v)) for v in row) + "\n")
            handle.write(f"max,,,{result.cross_max!r}\n")
    if not quiet:
        print(f"stop_reason={result.reason.value} final_time={result.final_time!r} rows={len(result.series.rows)}")
    return 0


def _bounds_payload(cfg: RunConfig, companion: dict | None) -> dict:
    p_default = cfg.params.dim / 2.0 + 0.5
    p = p_default
    if cfg.p_list:
        above = [q for q in cfg.p_list if q > cfg.params.dim / 2.0]
        if above:
            p = float(min(above))
    u0 = build_initial(cfg)
    m_bar = model.mass_bound(grids.omega_integral(u0.grid, u0.values, cfg.params.dim), cfg.params)
    report = bounds_mod.lower_bound_constants(p, cfg.params, m_bar)
    psi0 = diagnostics.psi(u0, p, cfg.params)
    t_quad, t_closed = bounds_mod.lower_bound_T(psi0, report)
    report.psi0 = psi0
    report.t_quadrature = t_quad
    report.t_closed_form = t_closed
    payload = report.to_dict()
    payload["m_bar"] = m_bar

    try:
        a, b = diagnostics.select_ab(cfg.params)
        w0 = massform.transform_to_mass(u0, cfg.params)
        beta = diagnostics.moment_functional(w0, a, b)
        upper = bounds_mod.upper_bound_apparatus(cfg.params, m_bar, a, b, beta)
        payload["upper"] = upper.to_dict()
    except FluxKSError:
        payload["upper"] = None

    if companion is not None:
        est = companion.get("blowup_estimate")
        if est and est.get("confident"):
            payload["soundness"] = {
                "t_est": est["t_est"],
                "sound": bool(t_closed <= t_quad <= est["t_est"]),
            }
    return payload


def cmd_bounds(cfg: RunConfig, out_dir: Path, quiet: bool) -> int:
    companion = None
    report_path = out_dir / "report.json"
    if report_path.exists():
        companion = json.loads(report_path.read_text())
    payload = _bounds_payload(cfg, companion)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "bounds.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if not quiet:
        print(json.dumps({k: payload[k] for k in ("p", "t_quadrature", "t_closed_form")}, sort_keys=True))
    return 0


def parse_sweep_config(data: dict):
    if not isinstance(data, dict) or "axes" not in data:
        raise ConfigError("sweep config needs 'axes'")
    template = data.get("template", {})
    axes_raw = data["axes"]
    if isinstance(axes_raw, dict):
        axes = list(axes_raw.items())
    else:
        axes = [(ax["name"], ax["values"]) for ax in axes_raw]
    if not axes or any(not vals for _, vals in axes):
        raise ConfigError("sweep axes must be nonempty")
    allowed = {"alpha", "k", "mu", "dim", "m0"}
    bad = [name for name, _ in axes if name not in allowed]
    if bad:
        raise ConfigError(f"sweep axes must be among {sorted(allowed)}, got {bad}")
    max_points = int(data.get("max_points", 4096))
    total = 1
    for _, vals in axes:
        total *= len(vals)
    if total > max_points:
        raise ConfigError(f"sweep has {total} points, above the cap {max_points}")
    parse_run_config(template)  # validate early
    return template, axes, int(data.get("workers", 1))


def _sweep_point(args) -> dict:
    template, names, values = args
    point = dict(template)
    point.update(dict(zip(names, values)))
    row = {name: val for name, val in zip(names, values)}
    try:
        cfg = parse_run_config(point)
        verdict = model.classify_regime(cfg.params)
        row["verdict"] = verdict.verdict
        row["clause"] = verdict.clause
        result = execute_run(cfg)
        row["outcome"] = result.reason.value
        row["t_est"] = result.estimate.t_est if result.estimate and result.estimate.confident else ""
        row["t_closed_form"] = ""
        if result.estimate and result.estimate.confident:
            try:
                payload = _bounds_payload(cfg, None)
                row["t_closed_form"] = payload["t_closed_form"]
            except FluxKSError:
                pass
        row["error"] = ""
    except Exception as exc:  # per-point failures never abort the sweep
        row.setdefault("verdict", "")
        row.setdefault("clause", "")
        row.setdefault("outcome", "")
        row.setdefault("t_est", "")
        row.setdefault("t_closed_form", "")
        row["error"] = str(exc)
    return row


def cmd_sweep(data: dict, out_dir: Path, workers: int, quiet: bool) -> int:
    template, axes, cfg_workers = parse_sweep_config(data)
    workers = workers or cfg_workers
    names = [name for name, _ in axes]
    points = [[]]
    for _, vals in axes:
        points = [pt + [v] for pt in points for v in vals]

    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "regime_map.csv"
    header = names + ["verdict", "clause", "outcome", "t_est", "t_closed_form", "error"]
    tasks = [(template, names, tuple(vals)) for vals in points]

    rows = []
    with open(path, "w") as handle:
        handle.write(",".join(header) + "\n")
        if workers > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
                for row in pool.map(_sweep_point, tasks):
                    rows.append(row)
                    handle.write(",".join(str(row[c]) for c in header) + "\n")
                    handle.flush()
        else:
            for task in tasks:
                row = _sweep_point(task)
                rows.append(row)
                handle.write(",".join(str(row[c]) for c in header) + "\n")
                handle.flush()

    rows.sort(key=lambda row: tuple(row[name] for name in names))
    with open(path, "w") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(str(row[c]) for c in header) + "\n")
    if not quiet:
        print(f"swept {len(rows)} points -> {path}")
    return 0


def _load_config(path: str) -> dict:
    try:
        with open(path) as handle:
            return json.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fluxks", description=__doc__)
    parser.add_argument("command", choices=["classify", "simulate", "sweep", "bounds"])
    parser.add_argument("--config", required=True, help="path to a JSON config file")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--workers", type=int, default=0, help="sweep worker processes")
    parser.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        data = _load_config(args.config)
        out_dir = Path(args.out) if args.out else None
        if args.command == "classify":
            return cmd_classify(parse_run_config(data), out_dir, args.quiet)
        if out_dir is None:
            raise ConfigError(f"--out is required for {args.command}")
        if args.command == "simulate":
            return cmd_simulate(parse_run_config(data), out_dir, args.quiet)
        if args.command == "sweep":
            return cmd_sweep(data, out_dir, args.workers, args.quiet)
        return cmd_bounds(parse_run_config(data), out_dir, args.quiet)
    except (ConfigError, InvalidP) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 2
    except SolverFailure as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
