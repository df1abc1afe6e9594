"""predict / evolve / analyze / verify / sweep pipelines behind the CLI.

Every pipeline writes JSON with sorted keys so identical configs give
byte-identical output files.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import (
    attractor_from_report,
    approach_rate,
    convergence_order,
    default_window,
    epsilon_scaling,
    fit_attractor,
    fit_tail,
    is_non_generic,
    local_exponent,
    scaled_remainder,
)
from .asymptotics import match_attractor, predict_tail, prediction_report
from .config import Config
from .errors import FitError, NonGenericData, TailwaveError
from .solver import EvolutionRun, evolve

# acceptance thresholds used by verify
EXPONENT_TOL_GENERIC = 0.1
EXPONENT_TOL_NONGENERIC = 0.15
AMPLITUDE_RTOL = 0.10
NONGENERIC_A0_FRACTION = 0.05
APPROACH_TARGET = -4.0
APPROACH_TOL = 0.4
ENERGY_DRIFT_MAX = 1e-6
FINITE_SPEED_MAX = 1e-12


def _clean(obj):
    """Recursively convert numpy scalars and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(data, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(_clean(data), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def worker_count(n_jobs: int) -> int:
    """Workers for ``n_jobs`` tasks, capped by ``TAILWAVE_THREADS``."""
    cap = os.environ.get("TAILWAVE_THREADS")
    limit = os.cpu_count() or 1
    if cap:
        try:
            limit = max(1, int(cap))
        except ValueError:
            warnings.warn(f"ignoring non-integer TAILWAVE_THREADS={cap!r}", RuntimeWarning)
    return max(1, min(n_jobs, limit))


# ------------------------------------------------------------------ predict


def predict(cfg: Config, epsilon: float | None = None) -> dict:
    eps = cfg.epsilon[0] if epsilon is None else epsilon
    n = cfg.analysis.n_terms
    exp = predict_tail(cfg.f, cfg.g, cfg.p, eps, n=n)
    report = prediction_report(exp, cfg.analysis.a_scale)
    born = predict_tail(cfg.f, cfg.g, cfg.p, eps, n=n, weights="born")
    report["B_born"] = list(born.B)
    report["A_born"] = list(born.A)
    return report


# ------------------------------------------------------------------- evolve


def evolve_config(cfg: Config, epsilon: float | None = None, resolution_factor: float = 1) -> EvolutionRun:
    return evolve(cfg.run_config(epsilon, resolution_factor))


def convergence_report(runs: list, factors: list) -> dict:
    """Richardson orders per observer for three runs at N, kN, k^2 N."""
    ref = factors[1] / factors[0]
    orders = {}
    for r_obs in runs[0].config.observers:
        series = [(run.times, run.observer(r_obs)) for run in runs]
        orders[f"{r_obs:g}"] = convergence_order(series, ref)
    return {"resolution_factors": list(factors), "refinement": ref, "order": orders,
            "nominal_order": runs[0].metadata["scheme_order"]}


# ------------------------------------------------------------------ analyze


def analyze_run(run: EvolutionRun, cfg: Config) -> dict:
    """Per-observer exponents, tail coefficients and attractor parameters."""
    c = run.config
    R = c.support_radius
    out = {"observers": {}}
    for r_obs in c.observers:
        entry = {}
        u = run.observer(r_obs)
        try:
            window = default_window(r_obs, R, c.t_final, cfg.analysis.window_factor)
        except FitError as exc:
            entry["error"] = str(exc)
            out["observers"][f"{r_obs:g}"] = entry
            continue
        entry["window"] = window.to_dict()
        try:
            entry["exponent"] = local_exponent(run.times, u, window).to_dict()
        except FitError as exc:
            entry["exponent"] = {"error": str(exc)}
        try:
            tail = fit_tail(run.times, u, r_obs, cfg.analysis.n_terms, window)
        except FitError as exc:
            entry["tail"] = {"error": str(exc)}
            out["observers"][f"{r_obs:g}"] = entry
            continue
        entry["tail"] = tail.to_dict()
        generic = not is_non_generic(tail) if len(tail.values["A"]) > 1 else tail.values["A"][0] != 0
        entry["nonGeneric"] = not generic
        if generic and c.p == 3:
            try:
                att = fit_attractor(run.times, u, r_obs, window)
                entry["attractor"] = att.to_dict()
                params = attractor_from_report(att)
                rate = approach_rate(run.times, u, r_obs, params, window.last_decade())
                entry["approach_rate"] = rate.to_dict()
            except (FitError, NonGenericData, TailwaveError) as exc:
                entry["attractor"] = {"error": str(exc)}
        out["observers"][f"{r_obs:g}"] = entry
    out["energy_drift"] = run.energy_drift
    out["finite_speed_violation"] = run.finite_speed_violation
    return out


# ------------------------------------------------------------------- verify


def _row(quantity, observer, predicted, measured, tolerance, passed):
    return {
        "quantity": quantity,
        "observer": observer,
        "predicted": predicted,
        "measured": measured,
        "tolerance": tolerance,
        "pass": passed,
    }


def verification_checks(pred: dict, analysis: dict, cfg: Config) -> list:
    """Predicted vs measured rows; ``pass`` is None for informational rows."""
    p = cfg.p
    rows = []
    A_pred = pred["A"]
    non_generic = bool(pred["nonGeneric"])
    eps = pred["epsilon"]
    C = pred["C"]
    a0_bound = NONGENERIC_A0_FRACTION * eps**p * abs(C[1]) if len(C) > 1 else 0.0
    sigma_expect = -float(p) if non_generic else -float(p - 1)
    sigma_tol = EXPONENT_TOL_NONGENERIC if non_generic else EXPONENT_TOL_GENERIC
    for key, entry in analysis["observers"].items():
        if "error" in entry:
            rows.append(_row("window", key, None, entry["error"], None, False))
            continue
        exp = entry.get("exponent", {})
        plateau = exp.get("plateau")
        rows.append(_row(
            "exponent", key, sigma_expect, plateau, sigma_tol,
            plateau is not None and abs(plateau - sigma_expect) <= sigma_tol,
        ))
        tail = entry.get("tail", {})
        if "error" in tail:
            rows.append(_row("A0", key, A_pred[0], tail["error"], None, False))
            continue
        A_fit = tail["values"]["A"]
        if non_generic:
            rows.append(_row("|A0|", key, a0_bound, abs(A_fit[0]), "below", abs(A_fit[0]) < a0_bound))
        else:
            ok = abs(A_fit[0] - A_pred[0]) <= AMPLITUDE_RTOL * abs(A_pred[0])
            rows.append(_row("A0", key, A_pred[0], A_fit[0], AMPLITUDE_RTOL, ok))
        if len(A_fit) > 1 and len(A_pred) > 1:
            if A_pred[1] != 0.0:
                ok = abs(A_fit[1] - A_pred[1]) <= AMPLITUDE_RTOL * abs(A_pred[1])
                rows.append(_row("A1", key, A_pred[1], A_fit[1], AMPLITUDE_RTOL, ok))
            else:
                rows.append(_row("A1", key, A_pred[1], A_fit[1], None, None))
        if len(A_fit) > 2 and len(A_pred) > 2:
            rows.append(_row("A2", key, A_pred[2], A_fit[2], None, None))
            rows.append(_row("A2 (first-order weights)", key, pred["A_born"][2], A_fit[2], None, None))
        if non_generic or p != 3:
            continue
        att = entry.get("attractor", {})
        if "error" in att:
            rows.append(_row("(a,b)", key, None, att["error"], None, False))
            continue
        try:
            matched = match_attractor(A_pred[0], A_pred[1]).to_dict()
        except NonGenericData:
            matched = None
        vals = att["values"]
        rows.append(_row(
            "(a,b)", key,
            None if matched is None else [matched["a"], matched["b"]],
            [vals["a"], vals["b"]], None, bool(att["converged"]),
        ))
        rate = entry.get("approach_rate", {})
        plateau = rate.get("plateau")
        rows.append(_row(
            "approach rate", key, APPROACH_TARGET, plateau, APPROACH_TOL,
            plateau is not None and abs(plateau - APPROACH_TARGET) <= APPROACH_TOL,
        ))
    drift = analysis["energy_drift"]
    rows.append(_row("energy drift", None, 0.0, drift, ENERGY_DRIFT_MAX,
                     drift is not None and drift < ENERGY_DRIFT_MAX))
    fs = analysis["finite_speed_violation"]
    rows.append(_row("finite-speed violation", None, 0.0, fs, FINITE_SPEED_MAX, fs < FINITE_SPEED_MAX))
    return rows


def _fmt(x):
    if x is None:
        return "-"
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, (list, tuple)):
        return "(" + ", ".join(_fmt(v) for v in x) + ")"
    if isinstance(x, (int, float)):
        return f"{x:.6g}"
    return str(x)


def format_table(rows: list) -> str:
    header = ("quantity", "r", "predicted", "measured", "tol", "result")
    body = []
    for row in rows:
        status = {True: "PASS", False: "FAIL", None: "info"}[row["pass"]]
        body.append((row["quantity"], _fmt(row["observer"]), _fmt(row["predicted"]),
                     _fmt(row["measured"]), _fmt(row["tolerance"]), status))
    widths = [max(len(str(line[i])) for line in [header, *body]) for i in range(len(header))]
    lines = ["  ".join(str(c).ljust(w) for c, w in zip(line, widths)).rstrip()
             for line in [header, *body]]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def verify(cfg: Config, out_dir, resolution_factor: float = 1) -> tuple:
    """Run predict, evolve and analyze; return (report, all_passed).

    Blow-up is not caught here; the caller reports it.
    """
    out = Path(out_dir)
    pred = predict(cfg)
    run = evolve_config(cfg, resolution_factor=resolution_factor)
    run.write(out / "run")
    analysis = analyze_run(run, cfg)
    rows = verification_checks(pred, analysis, cfg)
    passed = all(row["pass"] is not False for row in rows)
    report = {
        "status": "pass" if passed else "fail",
        "nonGeneric": pred["nonGeneric"],
        "prediction": pred,
        "analysis": analysis,
        "checks": rows,
    }
    write_json(report, out / "verify.json")
    (out / "verify.txt").write_text(format_table(rows))
    return report, passed


# -------------------------------------------------------------------- sweep


def _sweep_job(args):
    cfg_dict, eps, factor, run_dir = args
    from .config import parse_config

    cfg = parse_config(cfg_dict)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        run = evolve_config(cfg, eps, factor)
    run.write(run_dir)
    return run_dir


def sweep_dirname(eps: float, factor) -> str:
    return f"eps{eps:g}_res{factor:g}"


def sweep(cfg: Config, out_dir, resolution_factor: float = 1) -> dict:
    """Evolve every (epsilon, resolution) pair and summarise scaling and convergence."""
    out = Path(out_dir)
    factors = [resolution_factor * k for k in cfg.resolutions]
    jobs = [(cfg.to_dict(), eps, k, str(out / sweep_dirname(eps, k)))
            for eps in cfg.epsilon for k in factors]
    workers = worker_count(len(jobs))
    if workers == 1:
        for job in jobs:
            _sweep_job(job)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_sweep_job, jobs))

    runs = {(eps, k): EvolutionRun.load(out / sweep_dirname(eps, k))
            for eps in cfg.epsilon for k in factors}
    base = factors[0]
    R = cfg.support_radius
    report = {"workers": workers, "epsilon": list(cfg.epsilon), "resolution_factors": factors,
              "runs": [sweep_dirname(eps, k) for eps in cfg.epsilon for k in factors]}

    pred = predict_tail(cfg.f, cfg.g, cfg.p, 1.0, n=1)
    amplitude = "A1" if pred.non_generic else "A0"
    scaling = []
    eps_sorted = sorted(e for e in cfg.epsilon if e > 0)
    for e1, e2 in zip(eps_sorted[:-1], eps_sorted[1:]):
        r1, r2 = runs[(e1, base)], runs[(e2, base)]
        per_obs = {}
        for r_obs in cfg.observers:
            try:
                window = default_window(r_obs, R, cfg.t_final, cfg.analysis.window_factor)
                per_obs[f"{r_obs:g}"] = epsilon_scaling(
                    r1.times, r1.remainder(r_obs), e1, r2.times, r2.remainder(r_obs), e2,
                    r_obs, window, amplitude=amplitude,
                )
            except FitError as exc:
                per_obs[f"{r_obs:g}"] = {"error": str(exc)}
        scaling.append({"epsilons": [e1, e2], "observers": per_obs})
    report["epsilon_scaling"] = scaling

    deviations = {}
    if cfg.formulation == "remainder" and cfg.nonlinear and not pred.non_generic:
        for eps in eps_sorted:
            run = runs[(eps, base)]
            per_obs = {}
            for r_obs in cfg.observers:
                try:
                    sr = scaled_remainder(run.times, run.remainder(r_obs), r_obs, eps,
                                          cfg.analysis.a_scale, cfg.p, pred.B, n=1)
                    per_obs[f"{r_obs:g}"] = sr.max_deviation
                except (FitError, ValueError) as exc:
                    per_obs[f"{r_obs:g}"] = str(exc)
            deviations[f"{eps:g}"] = per_obs
    report["scaled_remainder_max_deviation"] = deviations

    convergence = {}
    if len(factors) >= 3:
        for eps in cfg.epsilon:
            convergence[f"{eps:g}"] = convergence_report(
                [runs[(eps, k)] for k in factors[:3]], factors[:3]
            )
    report["convergence"] = convergence
    write_json(report, out / "sweep.json")
    return report
