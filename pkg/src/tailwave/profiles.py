"""Compactly supported radial initial data and the d'Alembert profile h.

Radial data ``f`` (position) and ``g`` (velocity) are even functions of r
supported in ``|r| < R``.  The free solution with ``u(0) = f``,
``u_t(0) = g`` is ``u0 = [h(t - r) - h(t + r)] / r`` with

    h(x) = -(x/2) f(x) + (1/2) * integral_x^inf y g(y) dy.

All tail coefficients of the nonlinear problem are moments of powers of h.
"""

from __future__ import annotations

import functools
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.polynomial import polyval

from .errors import ProfileError, QuadratureError

FAMILIES = ("poly_bump", "zero")

DEFAULT_TOL = 1e-10

# 15-point Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree 29.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(15)


@dataclass(frozen=True)
class RadialProfile:
    """Even, compactly supported radial profile.

    ``poly_bump(r) = amplitude * (1 - r**2/R**2)**m`` for ``|r| < R`` and 0
    otherwise; it is C^(m-1) at the support edge.  ``zero`` is identically 0.
    """

    family: str = "poly_bump"
    amplitude: float = 1.0
    radius: float = 1.0
    m: int = 6

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ProfileError(f"unknown profile family {self.family!r}")
        if not np.isfinite(self.amplitude):
            raise ProfileError("amplitude must be finite")
        if not self.radius > 0 or not np.isfinite(self.radius):
            raise ProfileError("radius must be a positive finite number")
        if int(self.m) != self.m or self.m < 2:
            raise ProfileError("smoothness exponent m must be an integer >= 2")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "radius", float(self.radius))

    @classmethod
    def zero(cls) -> RadialProfile:
        return cls(family="zero", amplitude=0.0)

    @property
    def is_zero(self) -> bool:
        return self.family == "zero" or self.amplitude == 0.0

    @property
    def support_radius(self) -> float:
        """Radius outside of which the profile vanishes (0 for zero data)."""
        return 0.0 if self.is_zero else self.radius

    def __call__(self, r):
        return eval_profile(self, r)

    def scaled(self, factor: float) -> RadialProfile:
        if self.family == "zero":
            return self
        return RadialProfile(self.family, self.amplitude * factor, self.radius, self.m)

    def polynomial(self) -> Polynomial:
        """The profile as a polynomial valid on ``|r| < R``."""
        if self.is_zero:
            return Polynomial([0.0])
        base = Polynomial([1.0, 0.0, -1.0 / self.radius**2])
        return self.amplitude * base**self.m

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "amplitude": self.amplitude,
            "radius": self.radius,
            "m": self.m,
        }

    @classmethod
    def from_dict(cls, data: dict) -> RadialProfile:
        unknown = set(data) - {"family", "amplitude", "radius", "m"}
        if unknown:
            raise ProfileError(f"unknown profile keys: {sorted(unknown)}")
        return cls(
            family=data.get("family", "poly_bump"),
            amplitude=data.get("amplitude", 1.0),
            radius=data.get("radius", 1.0),
            m=data.get("m", 6),
        )


def eval_profile(profile: RadialProfile, r):
    """Evaluate a profile at radius ``r`` (scalar or array), exactly 0 outside."""
    r = np.asarray(r, dtype=float)
    if profile.is_zero:
        out = np.zeros_like(r)
    else:
        s = 1.0 - (r / profile.radius) ** 2
        out = np.where(np.abs(r) < profile.radius, profile.amplitude * np.abs(s) ** profile.m, 0.0)
    return out[()] if out.ndim == 0 else out


def integrate_compact(
    fn: Callable,
    support: Sequence[float],
    tol: float = DEFAULT_TOL,
    breakpoints: Sequence[float] = (),
    max_depth: int = 40,
) -> float:
    """Adaptive Gauss-Legendre quadrature of ``fn`` over a finite interval.

    Each panel is accepted once the 15-point rule on the panel and the sum of
    the rules on its two halves agree to within the panel's share of ``tol``
    (shares are proportional to panel length, so the total absolute error
    estimate stays below ``tol``).

    Parameters
    ----------
    fn : callable
        Vectorised integrand.
    support : (a, b)
        Integration interval.
    tol : float
        Absolute error target.
    breakpoints : sequence of float
        Interior points where the integrand is known to lose smoothness; they
        become initial panel edges.
    max_depth : int
        Maximum number of halvings of any initial panel.

    Raises
    ------
    QuadratureError
        If a panel still fails the halving test at ``max_depth``.
    """
    a, b = float(support[0]), float(support[1])
    if not tol > 0:
        raise ValueError("tol must be positive")
    if a == b:
        return 0.0
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0
    edges = sorted({a, b, *[float(x) for x in breakpoints if a < x < b]})
    total_len = b - a

    def rule(lo, hi):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        vals = np.asarray(fn(mid + half * _GL_NODES), dtype=float)
        return half * float(np.dot(_GL_WEIGHTS, vals))

    result = 0.0
    for lo0, hi0 in zip(edges[:-1], edges[1:]):
        stack = [(lo0, hi0, rule(lo0, hi0), 0)]
        while stack:
            lo, hi, whole, depth = stack.pop()
            mid = 0.5 * (lo + hi)
            left, right = rule(lo, mid), rule(mid, hi)
            share = tol * (hi - lo) / total_len
            if abs(left + right - whole) <= share:
                result += left + right
                continue
            if depth >= max_depth:
                raise QuadratureError(
                    f"no convergence on [{lo:.6g}, {hi:.6g}] after {max_depth} halvings; "
                    "integrand not smooth or tol too tight"
                )
            stack.append((mid, hi, right, depth + 1))
            stack.append((lo, mid, left, depth + 1))
    return sign * result


class HFunction:
    """The profile h(x) built from radial data, supported in ``[-R, R]``.

    Calling the object evaluates ``func`` (the closed form when the data
    admit one).  :meth:`numeric` evaluates the defining integral by
    quadrature instead and caches point values.
    """

    def __init__(
        self,
        func: Callable,
        support_radius: float,
        f: RadialProfile | None = None,
        g: RadialProfile | None = None,
        deriv: Callable | None = None,
        breakpoints: Sequence[float] = (),
        closed_form: bool = False,
        tol: float = DEFAULT_TOL,
    ):
        self._func = func
        self._deriv = deriv
        self.support_radius = float(support_radius)
        self.f = f
        self.g = g
        self.breakpoints = tuple(sorted(set(breakpoints)))
        self.closed_form = closed_form
        self.tol = tol
        self._numeric_point = functools.lru_cache(maxsize=65536)(self._numeric_scalar)

    @classmethod
    def from_callable(cls, func: Callable, support_radius: float, **kw) -> HFunction:
        """Wrap an arbitrary vectorised function supported in ``[-R, R]``."""
        R = float(support_radius)

        def clipped(x):
            x = np.asarray(x, dtype=float)
            return np.where(np.abs(x) < R, func(x), 0.0)

        return cls(clipped, R, **kw)

    def __call__(self, x):
        out = np.asarray(self._func(np.asarray(x, dtype=float)), dtype=float)
        return out[()] if out.ndim == 0 else out

    def derivative(self, x):
        """h'(x); closed form when available, else a 4th-order central difference."""
        x = np.asarray(x, dtype=float)
        if self._deriv is not None:
            out = np.asarray(self._deriv(x), dtype=float)
        else:
            d = 1e-3 * max(self.support_radius, 1.0)
            out = (8 * (self(x + d) - self(x - d)) - (self(x + 2 * d) - self(x - 2 * d))) / (12 * d)
        return out[()] if out.ndim == 0 else out

    def _numeric_scalar(self, x: float) -> float:
        val = 0.0
        if self.f is not None and not self.f.is_zero:
            val -= 0.5 * x * float(eval_profile(self.f, x))
        if self.g is not None and not self.g.is_zero:
            Rg = self.g.radius
            if x < Rg:
                lo = max(x, -Rg)
                val += 0.5 * integrate_compact(
                    lambda y: y * eval_profile(self.g, y), (lo, Rg), tol=self.tol,
                    breakpoints=(0.0,),
                )
        return val

    def numeric(self, x):
        """h(x) from the defining integral, evaluated by adaptive quadrature."""
        if self.f is None and self.g is None:
            return self(x)
        x = np.asarray(x, dtype=float)
        out = np.array([self._numeric_point(float(xi)) for xi in x.ravel()]).reshape(x.shape)
        return out[()] if out.ndim == 0 else out

    def scaled(self, factor: float) -> HFunction:
        if self.f is not None or self.g is not None:
            f = self.f if self.f is not None else RadialProfile.zero()
            g = self.g if self.g is not None else RadialProfile.zero()
            return build_h(f.scaled(factor), g.scaled(factor), tol=self.tol)
        deriv = None if self._deriv is None else (lambda x: factor * self._deriv(x))
        return HFunction(
            lambda x: factor * self._func(x), self.support_radius, deriv=deriv,
            breakpoints=self.breakpoints, tol=self.tol,
        )


def _h_pieces(f: RadialProfile, g: RadialProfile):
    """Polynomial pieces of h: (poly, radius) pairs, each valid on ``|x| < radius``."""
    pieces = []
    if not f.is_zero:
        pieces.append((f.polynomial() * Polynomial([0.0, -0.5]), f.radius))
    if not g.is_zero:
        # (1/2) int_x^R y A (1 - y^2/R^2)^m dy = A R^2 (1 - x^2/R^2)^(m+1) / (4 (m+1))
        base = Polynomial([1.0, 0.0, -1.0 / g.radius**2])
        coef = g.amplitude * g.radius**2 / (4.0 * (g.m + 1))
        pieces.append((coef * base ** (g.m + 1), g.radius))
    return pieces


def _piecewise(pieces):
    coefs = [(np.asarray(poly.coef, dtype=float), R) for poly, R in pieces]

    def fn(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for coef, R in coefs:
            out = out + np.where(np.abs(x) < R, polyval(x, coef), 0.0)
        return out

    return fn


def build_h(f: RadialProfile, g: RadialProfile, tol: float = DEFAULT_TOL) -> HFunction:
    """Build h from position data ``f`` and velocity data ``g``.

    The returned object evaluates the closed form (both families integrate in
    closed form); :meth:`HFunction.numeric` gives the quadrature evaluator.
    """
    for name, prof in (("f", f), ("g", g)):
        if not isinstance(prof, RadialProfile):
            raise ProfileError(f"{name} must be an even, compactly supported RadialProfile")
    pieces = _h_pieces(f, g)
    dpieces = [(poly.deriv(), R) for poly, R in pieces]
    radius = max(f.support_radius, g.support_radius)
    edges = {R for _, R in pieces} | {-R for _, R in pieces}
    return HFunction(
        _piecewise(pieces),
        radius,
        f=f,
        g=g,
        deriv=_piecewise(dpieces),
        breakpoints=sorted(edges | {0.0}),
        closed_form=True,
        tol=tol,
    )
