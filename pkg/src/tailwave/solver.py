"""Radial finite-difference evolution of box u = u^p.

With ``v = r u`` the equation becomes ``v_tt = v_rr + v^p / r^(p-1)`` on
r >= 0 with ``v(t, 0) = 0``.  Space is discretised with 4th-order centred
differences (odd reflection across the origin, one-sided stencil next to the
outer boundary) and time with classical RK4.

Two formulations are available:

``"full"``
    evolve v itself from the data (eps f, eps g);
``"remainder"``
    evolve ``v_w = r (u - eps u0)`` from zero data, with the free solution
    ``eps u0 = eps [h(t-r) - h(t+r)] / r`` supplied in closed form inside the
    nonlinearity.  The linear pulse then carries no discretisation error, and
    only the small nonlinear remainder is subject to truncation error.

The outer boundary sits far enough out that no signal from it can reach an
observer before ``t_final``.
"""

from __future__ import annotations

import functools
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import BlowupOrInstability, CausalityError, ConfigError
from .profiles import HFunction, RadialProfile, build_h

SCHEME_ORDER = 4
FORMULATIONS = ("remainder", "full")


@dataclass(frozen=True)
class Grid:
    r_max: float
    N: int

    def __post_init__(self):
        if not self.r_max > 0 or self.N < 8:
            raise ConfigError("grid needs r_max > 0 and N >= 8")

    @property
    def dr(self) -> float:
        return self.r_max / self.N

    @functools.cached_property
    def r(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.dr

    def inv_rpow(self, k: int) -> np.ndarray:
        """``1 / r^k`` on the nodes, with 0 at the origin."""
        cache = self.__dict__.setdefault("_inv_rpow", {})
        if k not in cache:
            out = np.zeros(self.N + 1)
            out[1:] = self.r[1:] ** (-float(k))
            cache[k] = out
        return cache[k]


@dataclass
class FieldState:
    """``v = r u`` and ``pi = v_t`` on the grid nodes at time ``t``."""

    v: np.ndarray
    pi: np.ndarray
    t: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    """Everything one evolution needs.

    ``r_max = None`` places the outer boundary at
    ``t_final + max(observers) + R_support + margin``.
    """

    p: int = 3
    epsilon: float = 0.05
    f: RadialProfile = field(default_factory=RadialProfile.zero)
    g: RadialProfile = field(default_factory=RadialProfile)
    N: int = 8000
    r_max: float | None = None
    cfl: float = 0.5
    t_final: float = 100.0
    observers: tuple = (0.5, 1.0, 2.0)
    nonlinear: bool = True
    formulation: str = "remainder"
    energy_every: int = 10
    blowup_threshold: float = 1e3
    small_data_threshold: float = 0.5
    margin: float = 2.0
    n_steps: int | None = None

    @property
    def steps(self) -> int:
        """Number of RK4 steps; ``n_steps`` overrides the CFL-derived count."""
        if self.n_steps is not None:
            return int(self.n_steps)
        return int(math.ceil(self.t_final / (self.cfl * self.grid.dr) - 1e-9))

    @property
    def support_radius(self) -> float:
        return max(self.f.support_radius, self.g.support_radius)

    @property
    def resolved_r_max(self) -> float:
        if self.r_max is not None:
            return float(self.r_max)
        return self.t_final + max(self.observers) + self.support_radius + self.margin

    @property
    def grid(self) -> Grid:
        return Grid(self.resolved_r_max, self.N)

    def validate(self):
        if int(self.p) != self.p or self.p < 2:
            raise ConfigError("p must be an integer >= 2")
        if self.formulation not in FORMULATIONS:
            raise ConfigError(f"formulation must be one of {FORMULATIONS}")
        if not 0 < self.cfl <= 1.0:
            raise ConfigError("cfl must lie in (0, 1]")
        if not self.t_final > 0:
            raise ConfigError("t_final must be positive")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be non-negative")
        if not self.observers or min(self.observers) < 0:
            raise ConfigError("need at least one observer at r >= 0")
        if self.energy_every < 1:
            raise ConfigError("energy_every must be >= 1")
        if self.n_steps is not None and self.t_final / self.n_steps > self.grid.dr * (1 + 1e-9):
            raise ConfigError("n_steps too small: dt exceeds dr")
        limit = self.resolved_r_max - max(self.observers) - self.support_radius
        if not self.t_final < limit:
            raise CausalityError(
                f"t_final={self.t_final} must be < r_max - max(observers) - R = {limit:.6g}"
            )

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "epsilon": self.epsilon,
            "f": self.f.to_dict(),
            "g": self.g.to_dict(),
            "N": self.N,
            "r_max": self.resolved_r_max,
            "cfl": self.cfl,
            "t_final": self.t_final,
            "observers": list(self.observers),
            "nonlinear": self.nonlinear,
            "formulation": self.formulation,
            "energy_every": self.energy_every,
            "blowup_threshold": self.blowup_threshold,
            "n_steps": self.n_steps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        d = dict(d)
        d["f"] = RadialProfile.from_dict(d["f"])
        d["g"] = RadialProfile.from_dict(d["g"])
        d["observers"] = tuple(d["observers"])
        return cls(**d)


# ------------------------------------------------------------ stencils


def second_derivative(v: np.ndarray, dr: float) -> np.ndarray:
    """4th-order ``d^2 v / dr^2`` for odd v with ``v[0] = 0``.

    Odd reflection supplies the ghost nodes at the origin; node N-1 uses a
    one-sided 6-point stencil and node N (held at zero) gets 0.
    """
    out = np.zeros_like(v)
    c = 1.0 / (12.0 * dr * dr)
    out[2:-2] = (-v[4:] + 16.0 * v[3:-1] - 30.0 * v[2:-2] + 16.0 * v[1:-3] - v[:-4]) * c
    out[1] = (-v[3] + 16.0 * v[2] - 29.0 * v[1] + 16.0 * v[0]) * c
    out[-2] = (
        10.0 * v[-1] - 15.0 * v[-2] - 4.0 * v[-3] + 14.0 * v[-4] - 6.0 * v[-5] + v[-6]
    ) * c
    return out


def first_derivative(v: np.ndarray, dr: float) -> np.ndarray:
    """4th-order ``dv/dr`` for odd v (odd ghosts at the origin)."""
    out = np.zeros_like(v)
    c = 1.0 / (12.0 * dr)
    out[2:-2] = (-v[4:] + 8.0 * v[3:-1] - 8.0 * v[1:-3] + v[:-4]) * c
    out[1] = (-v[3] + 8.0 * v[2] - 8.0 * v[0] - v[1]) * c
    out[0] = (16.0 * v[1] - 2.0 * v[2]) * c
    out[-2] = (v[-1] - v[-3]) / (2.0 * dr)
    out[-1] = (v[-1] - v[-2]) / dr
    return out


def wave_residual(func, p: int, t, r, h: float):
    """``u_tt - u_rr - 2 u_r / r - u^p`` of ``func(t, r)`` with 4th-order stencils.

    ``func`` must accept negative r (even continuation).  At r = 0 the
    Laplacian is ``3 u_rr``.
    """
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    u = func(t, r)
    c2 = 1.0 / (12.0 * h * h)
    u_tt = (-func(t + 2 * h, r) + 16 * func(t + h, r) - 30 * u
            + 16 * func(t - h, r) - func(t - 2 * h, r)) * c2
    u_rr = (-func(t, r + 2 * h) + 16 * func(t, r + h) - 30 * u
            + 16 * func(t, r - h) - func(t, r - 2 * h)) * c2
    u_r = (-func(t, r + 2 * h) + 8 * func(t, r + h) - 8 * func(t, r - h)
           + func(t, r - 2 * h)) / (12.0 * h)
    with np.errstate(divide="ignore", invalid="ignore"):
        lap = np.where(r == 0, 3.0 * u_rr, u_rr + 2.0 * u_r / np.where(r == 0, 1.0, r))
    return u_tt - lap - u**p


# --------------------------------------------------------------- dynamics


class _Background:
    """Closed-form ``eps [h(t-r) - h(t+r)]`` and its time derivative on the grid."""

    def __init__(self, h: HFunction, epsilon: float, r: np.ndarray):
        self.h = h
        self.eps = epsilon
        self.r = r
        self.R = h.support_radius
        self.dr = r[1] - r[0]

    def _band(self, t):
        # nodes where t - r or t + r lies inside the support
        lo = max(0, int(math.floor((t - self.R) / self.dr)) - 1)
        hi = min(len(self.r), int(math.ceil((t + self.R) / self.dr)) + 2)
        return lo, hi

    def value(self, t: float) -> tuple:
        if self.eps == 0.0 or self.R == 0.0:
            return 0, 0, None
        lo, hi = self._band(t)
        if hi <= lo:
            return 0, 0, None
        rr = self.r[lo:hi]
        return lo, hi, self.eps * (self.h(t - rr) - self.h(t + rr))

    def fields(self, t: float) -> tuple:
        """Full-grid ``(V0, dV0/dt, dV0/dr)`` at time t."""
        V = np.zeros_like(self.r)
        Vt = np.zeros_like(self.r)
        Vr = np.zeros_like(self.r)
        if self.eps != 0.0 and self.R != 0.0:
            lo, hi = self._band(t)
            if hi > lo:
                rr = self.r[lo:hi]
                hm, hp = self.h(t - rr), self.h(t + rr)
                dm, dp = self.h.derivative(t - rr), self.h.derivative(t + rr)
                V[lo:hi] = self.eps * (hm - hp)
                Vt[lo:hi] = self.eps * (dm - dp)
                Vr[lo:hi] = -self.eps * (dm + dp)
        return V, Vt, Vr


def reduce_rhs(
    state: FieldState,
    p: int,
    grid: Grid,
    nonlinear: bool = True,
    background: _Background | None = None,
) -> tuple:
    """Time derivative ``(v_t, pi_t) = (pi, v_rr + V^p / r^(p-1))``.

    ``V`` is v plus the background (if any).  The nonlinear term is 0 at the
    origin, where it behaves like ``r u^p``.  The end nodes are held fixed.
    """
    v = state.v
    acc = second_derivative(v, grid.dr)
    if nonlinear:
        total = v
        if background is not None:
            lo, hi, vals = background.value(state.t)
            if vals is not None:
                total = v.copy()
                total[lo:hi] += vals
        src = total * total * total if p == 3 else total**p
        src *= grid.inv_rpow(p - 1)
        acc += src
    acc[0] = 0.0
    acc[-1] = 0.0
    dv = state.pi.copy()
    dv[0] = 0.0
    dv[-1] = 0.0
    return dv, acc


def linear_solution(f: RadialProfile, g: RadialProfile, t, r, h: HFunction | None = None):
    """Free solution ``[h(t-r) - h(t+r)] / r`` with ``u(0) = f``, ``u_t(0) = g``.

    For r below ``1e-6 R`` the quotient is taken with ``r = 1e-6 R``, a
    symmetric difference approximating the limit ``-2 h'(t)``.
    """
    if h is None:
        h = build_h(f, g)
    t = np.asarray(t, dtype=float)
    r = np.abs(np.asarray(r, dtype=float))
    R = h.support_radius
    if R == 0.0:
        return np.zeros(np.broadcast(t, r).shape)[()]
    delta = 1e-6 * R
    rr = np.where(r < delta, delta, r)
    out = (h(t - rr) - h(t + rr)) / rr
    return out[()] if np.ndim(out) == 0 else out


class _Observer:
    """Cubic (4-node) Lagrange interpolation of v at ``r_obs``; u = v / r_obs."""

    def __init__(self, r_obs: float, grid: Grid):
        self.r_obs = float(r_obs)
        dr = grid.dr
        x = self.r_obs / dr
        j = int(round(x))
        if self.r_obs == 0.0:
            self.kind = "origin"
            self.idx = np.array([1, 2])
            self.w = np.array([16.0, -2.0]) / (12.0 * dr)
        elif abs(x - j) < 1e-9:
            self.kind = "node"
            self.idx = np.array([j])
            self.w = np.array([1.0 / self.r_obs])
        else:
            self.kind = "interp"
            j0 = int(math.floor(x)) - 1
            nodes = np.arange(j0, j0 + 4)
            w = np.ones(4)
            for a in range(4):
                for b in range(4):
                    if a != b:
                        w[a] *= (x - nodes[b]) / (nodes[a] - nodes[b])
            sign = np.where(nodes < 0, -1.0, 1.0)  # odd reflection of v
            self.idx = np.abs(nodes)
            self.w = w * sign / self.r_obs

    def __call__(self, v: np.ndarray) -> float:
        return float(np.dot(self.w, v[self.idx]))


@dataclass
class EvolutionRun:
    """Observer time series, energy history and run metadata."""

    config: RunConfig
    times: np.ndarray
    series: dict
    energy_times: np.ndarray
    energy: np.ndarray
    metadata: dict

    @property
    def energy_drift(self) -> float:
        E0 = self.energy[0]
        if E0 == 0:
            return 0.0 if np.all(self.energy == 0) else float("inf")
        return float(np.max(np.abs(self.energy - E0)) / abs(E0))

    @property
    def finite_speed_violation(self) -> float:
        return float(self.metadata.get("finite_speed_violation", 0.0))

    def observer(self, r_obs: float) -> np.ndarray:
        for key, val in self.series.items():
            if math.isclose(key, r_obs, rel_tol=0, abs_tol=1e-12):
                return val
        raise KeyError(f"no observer at r={r_obs}")

    def remainder(self, r_obs: float) -> np.ndarray:
        """``u - eps u0`` at an observer, with u0 in closed form."""
        c = self.config
        u0 = linear_solution(c.f, c.g, self.times, r_obs)
        return self.observer(r_obs) - c.epsilon * u0

    # ---- I/O: one CSV per observer plus metadata.json
    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for r_obs, u in self.series.items():
            path = out / observer_filename(r_obs)
            data = np.column_stack([self.times, u])
            np.savetxt(path, data, delimiter=",", header="t,u", comments="", fmt="%.17g")
        np.savetxt(
            out / "energy.csv",
            np.column_stack([self.energy_times, self.energy]),
            delimiter=",", header="t,E", comments="", fmt="%.17g",
        )
        meta = dict(self.metadata)
        meta["config"] = self.config.to_dict()
        meta["energy_drift"] = self.energy_drift
        with open(out / "metadata.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return out

    @classmethod
    def load(cls, run_dir) -> EvolutionRun:
        run_dir = Path(run_dir)
        with open(run_dir / "metadata.json") as fh:
            meta = json.load(fh)
        cfg = RunConfig.from_dict(meta.pop("config"))
        meta.pop("energy_drift", None)
        series = {}
        times = None
        for r_obs in cfg.observers:
            data = np.loadtxt(run_dir / observer_filename(r_obs), delimiter=",", skiprows=1, ndmin=2)
            times = data[:, 0]
            series[float(r_obs)] = data[:, 1]
        e = np.loadtxt(run_dir / "energy.csv", delimiter=",", skiprows=1, ndmin=2)
        return cls(cfg, times, series, e[:, 0], e[:, 1], meta)


def observer_filename(r_obs: float) -> str:
    return f"obs_r{float(r_obs):g}.csv"


def _energy(v, pi, grid: Grid, p: int, nonlinear: bool, vr=None) -> float:
    """Trapezoid of ``[u_t^2/2 + u_r^2/2 - u^(p+1)/(p+1)] r^2`` written in v."""
    r = grid.r
    dr = grid.dr
    if vr is None:
        vr = first_derivative(v, dr)
    dens = 0.5 * pi * pi
    grad = np.zeros_like(v)
    grad[1:] = vr[1:] - v[1:] / r[1:]
    dens += 0.5 * grad * grad
    if nonlinear:
        pot = np.zeros_like(v)
        pot[1:] = v[1:] ** (p + 1) / r[1:] ** (p - 1)
        dens -= pot / (p + 1)
    return float(np.trapezoid(dens, dx=dr))


@np.errstate(over="ignore", invalid="ignore")  # overflow is reported by the blow-up guard
def evolve(config: RunConfig) -> EvolutionRun:
    """Evolve from data ``(eps f, eps g)`` and record observers and energy.

    Raises
    ------
    CausalityError
        If the outer boundary can influence an observer before ``t_final``.
    BlowupOrInstability
        If the field becomes non-finite or ``|u|`` exceeds the guard.
    """
    config.validate()
    if config.epsilon > config.small_data_threshold:
        warnings.warn(
            f"epsilon={config.epsilon} is above the small-data threshold "
            f"{config.small_data_threshold}", RuntimeWarning, stacklevel=3,
        )
    p = int(config.p)
    grid = config.grid
    r = grid.r
    dr = grid.dr
    n_steps = config.steps
    dt = config.t_final / n_steps
    h = build_h(config.f, config.g)
    eps = float(config.epsilon)
    R = h.support_radius

    background = None
    if config.formulation == "full":
        v = eps * r * config.f(r)
        pi = eps * r * config.g(r)
        v[0] = pi[0] = 0.0
        v[-1] = pi[-1] = 0.0
    else:
        v = np.zeros_like(r)
        pi = np.zeros_like(r)
        background = _Background(h, eps, r)
        if not config.nonlinear:
            background = None

    observers = [_Observer(ro, grid) for ro in config.observers]
    # closed-form eps*u0 is added back at the observers in remainder mode
    add_linear = config.formulation == "remainder" and eps != 0.0 and R > 0

    times = np.empty(n_steps + 1)
    obs_vals = np.empty((len(observers), n_steps + 1))
    e_times, e_vals = [], []
    fs_violation = 0.0

    def record(k, t, v):
        times[k] = t
        for i, ob in enumerate(observers):
            obs_vals[i, k] = ob(v)

    lin = _Background(h, eps, r) if add_linear else None

    def diagnostics(t, v, pi):
        nonlocal fs_violation
        vt, pt, vr = v, pi, first_derivative(v, dr)
        if lin is not None:
            V0, V0t, V0r = lin.fields(t)
            vt, pt, vr = v + V0, pi + V0t, vr + V0r
        e_times.append(t)
        e_vals.append(_energy(vt, pt, grid, p, config.nonlinear, vr=vr))
        ahead = r > R + t + 4 * dr
        if np.any(ahead):
            fs_violation = max(fs_violation, float(np.max(np.abs(v[ahead]))))
        u = np.empty_like(vt)
        u[1:] = vt[1:] / r[1:]
        u[0] = (16.0 * vt[1] - 2.0 * vt[2]) / (12.0 * dr)
        umax = float(np.max(np.abs(u)))
        if not np.isfinite(umax) or umax > config.blowup_threshold:
            what = f"|u| reached {umax:.3g}" if np.isfinite(umax) else "field became non-finite"
            raise BlowupOrInstability(f"{what} at t={t:.6g}", t, umax)

    nl = config.nonlinear
    record(0, 0.0, v)
    diagnostics(0.0, v, pi)
    t = 0.0
    for k in range(1, n_steps + 1):
        s = FieldState(v, pi, t)
        k1v, k1p = reduce_rhs(s, p, grid, nl, background)
        s = FieldState(v + 0.5 * dt * k1v, pi + 0.5 * dt * k1p, t + 0.5 * dt)
        k2v, k2p = reduce_rhs(s, p, grid, nl, background)
        s = FieldState(v + 0.5 * dt * k2v, pi + 0.5 * dt * k2p, t + 0.5 * dt)
        k3v, k3p = reduce_rhs(s, p, grid, nl, background)
        s = FieldState(v + dt * k3v, pi + dt * k3p, t + dt)
        k4v, k4p = reduce_rhs(s, p, grid, nl, background)
        v = v + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        pi = pi + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        v[0] = 0.0
        t = k * dt
        record(k, t, v)
        if k % config.energy_every == 0 or k == n_steps:
            diagnostics(t, v, pi)

    if add_linear:
        for i, ob in enumerate(observers):
            obs_vals[i] += eps * linear_solution(config.f, config.g, times, ob.r_obs, h)

    metadata = {
        "scheme_order": SCHEME_ORDER,
        "time_integrator": "rk4",
        "dr": dr,
        "dt": dt,
        "steps": n_steps,
        "formulation": config.formulation,
        "finite_speed_violation": fs_violation,
    }
    series = {float(ob.r_obs): obs_vals[i] for i, ob in enumerate(observers)}
    return EvolutionRun(
        config=config,
        times=times,
        series=series,
        energy_times=np.array(e_times),
        energy=np.array(e_vals),
        metadata=metadata,
    )


def refine(config: RunConfig, factor: int) -> RunConfig:
    """Same run with ``N`` and the step count multiplied by ``factor``.

    The domain is kept fixed so the coarse sample times are a subset of the
    fine ones.
    """
    return replace(config, N=int(round(config.N * factor)), r_max=config.resolved_r_max,
                   n_steps=int(math.ceil(config.steps * factor - 1e-9)))
