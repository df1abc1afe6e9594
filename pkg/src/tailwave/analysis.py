"""Decay exponents, tail fits and attractor fits from observer time series.

All routines take plain arrays ``(t, u)`` sampled at a fixed radius ``r``
and a :class:`Window` selecting the late-time part of the series.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import least_squares

from .asymptotics import (
    SQRT2,
    AttractorParams,
    attractor_eval,
    match_attractor,
    scaling_params,
    tail_basis,
    wk_eval,
)
from .errors import DomainError, FitError, NonGenericData

ILL_CONDITIONED = 1e8
MIN_SAMPLES = 50


@dataclass(frozen=True)
class Window:
    """Closed time interval ``[t_lo, t_hi]`` used for late-time analysis."""

    t_lo: float
    t_hi: float
    rule: str = "manual"

    def __post_init__(self):
        if not self.t_hi > self.t_lo:
            raise ValueError("window needs t_hi > t_lo")

    def mask(self, t) -> np.ndarray:
        t = np.asarray(t)
        return (t >= self.t_lo) & (t <= self.t_hi)

    def check(self, t, min_samples: int = MIN_SAMPLES):
        n = int(np.count_nonzero(self.mask(t)))
        if n < min_samples:
            raise FitError(f"window [{self.t_lo:g}, {self.t_hi:g}] holds {n} samples (< {min_samples})")

    def last_decade(self) -> Window:
        return Window(max(self.t_lo, self.t_hi / 10.0), self.t_hi, rule="last decade")

    def to_dict(self) -> dict:
        return asdict(self)


def default_window(r_obs: float, support_radius: float, t_final: float, factor: float = 5.0) -> Window:
    """``[factor * (R + r_obs), t_final]``; the factor must be at least 3."""
    if factor < 3:
        raise ValueError("window factor must be >= 3")
    t_lo = factor * (support_radius + r_obs)
    if not t_lo < t_final:
        raise FitError(f"t_final={t_final} ends before the late-time window starts at {t_lo}")
    return Window(t_lo, t_final, rule=f"{factor:g}*(R+r)")


@dataclass
class FitReport:
    kind: str
    values: dict
    residual_norm: float
    window: Window
    condition: float = 1.0
    ill_conditioned: bool = False
    converged: bool = True
    iterations: int = 0
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = self.window.to_dict()
        return d


@dataclass
class ExponentEstimate:
    """Local exponent ``d ln|u| / d ln t`` on a log-uniform time grid."""

    t: np.ndarray
    sigma: np.ndarray
    plateau: float
    window: Window
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "plateau": self.plateau,
            "degenerate": self.degenerate,
            "window": self.window.to_dict(),
            "sigma_min": float(np.min(self.sigma)) if len(self.sigma) else None,
            "sigma_max": float(np.max(self.sigma)) if len(self.sigma) else None,
        }


def _select(t, u, window: Window, min_samples: int = MIN_SAMPLES):
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    window.check(t, min_samples)
    m = window.mask(t)
    return t[m], u[m]


def local_exponent(t, u, window: Window, n_points: int = 400) -> ExponentEstimate:
    """Local power ``sigma(t)`` and its plateau (median over the last third).

    Raises
    ------
    FitError
        If u changes sign or vanishes inside the window.
    """
    ts, us = _select(t, u, window)
    if not (np.all(us > 0) or np.all(us < 0)):
        raise FitError("series changes sign inside the window; start the window later")
    x = np.log(ts)
    y = np.log(np.abs(us))
    spline = CubicSpline(x, y)
    xs = np.linspace(x[0], x[-1], n_points)
    sigma = np.gradient(spline(xs), xs)
    plateau = float(np.median(sigma[-(n_points // 3):]))
    return ExponentEstimate(t=np.exp(xs), sigma=sigma, plateau=plateau, window=window)


def _weighted_system(t, r, n, weighting):
    M = tail_basis(t, r, n)
    if weighting == "leading":
        w = t * t - r * r
    elif weighting == "none":
        w = np.ones_like(t)
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    return M, w


def fit_tail(t, u, r: float, n: int = 2, window: Window | None = None,
             weighting: str = "leading") -> FitReport:
    """Linear least-squares fit of ``A_0..A_n`` in the late-time basis.

    Rows are weighted by ``t^2 - r^2`` (``weighting="leading"``) so every
    sample counts relative to the leading decay.  The system is column
    normalised and solved by SVD; the condition number of the normalised
    matrix is reported and fits above 1e8 are flagged.
    """
    if window is None:
        window = Window(float(np.min(t)), float(np.max(t)))
    ts, us = _select(t, u, window, min_samples=max(3 * (n + 1), 3))
    M, w = _weighted_system(ts, r, n, weighting)
    Mw = M * w[:, None]
    yw = us * w
    scale = np.linalg.norm(Mw, axis=0)
    Ms = Mw / scale
    coef, *_ = np.linalg.lstsq(Ms, yw, rcond=None)
    cond = float(np.linalg.cond(Ms))
    A = coef / scale
    resid = float(np.linalg.norm(M @ A - us))
    report = FitReport(
        kind="tail",
        values={"A": [float(a) for a in A], "r": float(r), "n": n},
        residual_norm=resid,
        window=window,
        condition=cond,
        ill_conditioned=cond > ILL_CONDITIONED,
    )
    if report.ill_conditioned:
        report.notes.append("basis ill-conditioned on this window; lengthen it")
    return report


def is_non_generic(tail: FitReport, threshold: float = 0.05) -> bool:
    """True when the A_0 term is below ``threshold`` of the A_1 term mid-window."""
    A = tail.values["A"]
    if len(A) < 2:
        return A[0] == 0.0
    t_mid = math.sqrt(tail.window.t_lo * tail.window.t_hi)
    return abs(A[0]) * t_mid < threshold * abs(A[1])


def _attractor_model(theta, t, r, sign, nuisance):
    a, b = theta[0], theta[1]
    s = t + a
    D = s + b * (s * s - r * r)
    if np.any(D <= 0):
        return None, None
    model = sign * SQRT2 / D
    dm = -model / D
    J = [dm * (1.0 + 2.0 * b * s), dm * (s * s - r * r)]
    if nuisance:
        X = t * t - r * r
        col = (3 * t * t + r * r) / X**3
        model = model + theta[2] * col
        J.append(col)
    return model, np.stack(J, axis=-1)


def fit_attractor(t, u, r: float, window: Window, init: AttractorParams | None = None,
                  nuisance: bool = True, max_iter: int = 100, rtol: float = 1e-12) -> FitReport:
    """Nonlinear least-squares fit of the attractor parameters (a, b) to a tail.

    The default model adds a linear nuisance term ``c (3t^2+r^2)/(t^2-r^2)^3``,
    the first term the attractor cannot reproduce; without it the t^-4 part
    of the data biases (a, b).  Residuals carry the ``t^2 - r^2`` weight used
    by :func:`fit_tail`.

    Raises
    ------
    NonGenericData
        If the tail has no t^-2 part to match.
    """
    ts, us = _select(t, u, window)
    if init is None:
        tail = fit_tail(ts, us, r, 2, window)
        if is_non_generic(tail):
            raise NonGenericData("fitted A0 is negligible; no attractor to fit")
        init = match_attractor(tail.values["A"][0], tail.values["A"][1])
    sign = init.sign
    w = ts * ts - r * r
    # unknowns are scaled to order one: (a, b / b0, c / c0)
    b0 = abs(init.b) if init.b != 0 else 1.0
    c0 = float(np.max(np.abs(us)) * ts[0] ** 4)
    scale = np.array([1.0, b0] + ([c0] if nuisance else []))
    x0 = np.array([init.a, init.b] + ([0.0] if nuisance else [])) / scale
    if _attractor_model(x0 * scale, ts, r, sign, nuisance)[0] is None:
        raise DomainError("initial attractor parameters give a non-positive denominator")
    penalty = 1e3 * np.abs(us * w).max() + 1.0

    def resid(x):
        model, _ = _attractor_model(x * scale, ts, r, sign, nuisance)
        if model is None:
            return np.full(ts.size, penalty)
        return (model - us) * w

    def jac(x):
        model, J = _attractor_model(x * scale, ts, r, sign, nuisance)
        if model is None:
            return np.zeros((ts.size, x.size))
        return J * w[:, None] * scale

    sol = least_squares(resid, x0, jac=jac, method="trf", xtol=rtol, ftol=1e-15, gtol=1e-15,
                        max_nfev=max_iter)
    theta = sol.x * scale
    notes = [] if sol.success else [sol.message]
    model, _ = _attractor_model(theta, ts, r, sign, nuisance)
    values = {"a": float(theta[0]), "b": float(theta[1]), "sign": sign, "r": float(r)}
    if nuisance:
        values["c"] = float(theta[2])
    return FitReport(
        kind="attractor",
        values=values,
        residual_norm=float(np.linalg.norm(model - us)),
        window=window,
        converged=bool(sol.success),
        iterations=int(sol.nfev),
        notes=notes,
    )


def attractor_from_report(report: FitReport) -> AttractorParams:
    v = report.values
    return AttractorParams(a=v["a"], b=v["b"], sign=v.get("sign", 1.0))


def approach_rate(t, u, r: float, params: AttractorParams, window: Window,
                  noise_floor: float = 1e-12) -> ExponentEstimate:
    """Local exponent of ``|u - u_attractor|``.

    When the difference is below ``noise_floor`` times the series amplitude
    everywhere in the window the estimate is marked degenerate (plateau NaN).
    """
    ts, us = _select(t, u, window)
    diff = us - attractor_eval(params, ts, r)
    if np.max(np.abs(diff)) <= noise_floor * np.max(np.abs(us)):
        return ExponentEstimate(t=ts[:0], sigma=ts[:0], plateau=float("nan"),
                                window=window, degenerate=True)
    return local_exponent(ts, diff, window)


def epsilon_scaling(t1, w1, eps1: float, t2, w2, eps2: float, r: float, window: Window,
                    amplitude: str = "A0", noise_floor: float = 0.0) -> dict:
    """Power ``q`` in ``amplitude ~ eps^q`` from two runs.

    ``amplitude="A0"`` uses the fitted t^-2 coefficient, ``"A1"`` the t^-3
    coefficient (non-generic data), ``"rms"`` the RMS of the series in the
    window.
    """
    def amp(t, w):
        if amplitude == "rms":
            ts, ws = _select(t, w, window)
            return float(np.sqrt(np.mean(ws * ws)))
        idx = {"A0": 0, "A1": 1}[amplitude]
        return fit_tail(t, w, r, 2, window).values["A"][idx]

    a1, a2 = amp(t1, w1), amp(t2, w2)
    flagged = min(abs(a1), abs(a2)) <= noise_floor or a1 == 0 or a1 * a2 <= 0
    ratio = a2 / a1 if a1 != 0 else float("nan")
    power = math.log(abs(ratio)) / math.log(eps2 / eps1) if not flagged else float("nan")
    return {
        "amplitude": amplitude,
        "epsilons": [eps1, eps2],
        "amplitudes": [a1, a2],
        "ratio": ratio,
        "power": power,
        "flagged": bool(flagged),
        "window": window.to_dict(),
    }


@dataclass
class ScaledRemainder:
    """``W_eps`` at one observer against the truncated scaled-limit sum."""

    t_scaled: np.ndarray
    r_scaled: float
    W: np.ndarray
    W_pred: np.ndarray
    max_deviation: float
    n_samples: int


def scaled_remainder(t, w, r_obs: float, epsilon: float, a_scale: float, p: int, B,
                     n: int | None = None, region: float = 1.0) -> ScaledRemainder:
    """Rescale ``w = u - eps u0`` to ``W = eps^-b w(eps^-a t, eps^-a r)``.

    Compared against ``sum_{k<=n} eps^(ka) W^(k)`` on samples with
    ``t_s - r_s > region`` in scaled units.

    Raises
    ------
    FitError
        If no sample of the series lies in the valid region.
    """
    sp = scaling_params(p, a_scale)
    if not sp.valid:
        raise ValueError(f"a_scale={a_scale} outside {sp.a_range}")
    B = list(B)
    n = len(B) - 1 if n is None else n
    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    scale = epsilon**a_scale
    ts = scale * t
    rs = scale * r_obs
    keep = ts - rs > region
    if not np.any(keep):
        raise FitError(f"observer r={r_obs} has no samples with t - r > {region} (scaled)")
    ts = ts[keep]
    W = epsilon ** (-sp.b_scale) * w[keep]
    pred = np.zeros_like(ts)
    for k in range(n + 1):
        pred += epsilon ** (k * a_scale) * wk_eval(p, k, B[k], ts, rs)
    dev = float(np.max(np.abs(W - pred)))
    return ScaledRemainder(ts, rs, W, pred, dev, int(keep.sum()))


def _on_common_times(t_ref, t, u):
    t_ref = np.asarray(t_ref)
    idx = np.searchsorted(t, t_ref)
    idx = np.clip(idx, 0, len(t) - 1)
    if np.allclose(t[idx], t_ref, rtol=0, atol=1e-9 * max(1.0, t_ref[-1])):
        return u[idx]
    return CubicSpline(t, u)(t_ref)


def convergence_order(runs, refinement: float = 2.0) -> float:
    """Richardson order from three series ``[(t, u)]`` at N, kN, k^2 N.

    Series are compared at the coarse run's sample times.
    """
    (t1, u1), (t2, u2), (t3, u3) = runs
    a = np.asarray(u1)
    b = _on_common_times(t1, np.asarray(t2), np.asarray(u2))
    c = _on_common_times(t1, np.asarray(t3), np.asarray(u3))
    num = np.max(np.abs(a - b))
    den = np.max(np.abs(b - c))
    if den == 0 or num == 0:
        return float("nan")
    return math.log(num / den) / math.log(refinement)


def error_order(err_coarse: float, err_fine: float, refinement: float = 2.0) -> float:
    """Observed order from errors against an exact solution at two resolutions."""
    return math.log(err_coarse / err_fine) / math.log(refinement)
