"""Predicted late-time structure of small solutions of box u = u^p.

The late-time field at fixed r is expanded in the basis

    1/(t^2-r^2),  t/(t^2-r^2)^2,  (3t^2+r^2)/(t^2-r^2)^3

with coefficients A_0, A_1, A_2.  At order eps^p they follow from the
moments ``C[p][k] = int x^k h(x)^p dx`` through ``B[p][k]`` and the light-cone
brackets ``[1/(t-r)^m - 1/(t+r)^m] / r`` (m = p+k-2), which equal
``(2, 4t, 2(3t^2+r^2)) / (t^2-r^2)^(m)`` for m = 1, 2, 3.

The two-parameter family ``sqrt(2) / (t + a + b[(t+a)^2 - r^2])`` solves
box u = u^3 exactly; :func:`match_attractor` picks the member whose own
expansion reproduces a given (A_0, A_1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FitError, NonGenericData
from .profiles import DEFAULT_TOL, HFunction, RadialProfile, build_h, integrate_compact

SQRT2 = math.sqrt(2.0)

# bracket_m / r = BRACKET_FACTORS[m-1] * basis_{m-1}; the middle factor multiplies t.
BRACKET_FACTORS = (2.0, 4.0, 2.0)

BASIS_NAMES = ("1/(t^2-r^2)", "t/(t^2-r^2)^2", "(3t^2+r^2)/(t^2-r^2)^3", "t^2/(t^2-r^2)^3")


def tail_basis(t, r, n: int = 2, extended: bool = False) -> np.ndarray:
    """Columns of the late-time basis evaluated at (t, r).

    Returns an array of shape ``(len(t), n+1)``.  With ``extended=True`` the
    extra column ``t^2/(t^2-r^2)^3`` is appended; together with the third
    column it spans every t^-4 term at fixed r.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    r = np.broadcast_to(np.asarray(r, dtype=float), t.shape)
    if np.any(t <= np.abs(r)):
        raise DomainError("tail basis requires t > |r|")
    X = t * t - r * r
    cols = [1.0 / X, t / X**2, (3 * t * t + r * r) / X**3]
    if not 0 <= n <= 2:
        raise ValueError("basis order n must be 0, 1 or 2")
    cols = cols[: n + 1]
    if extended:
        cols.append(t * t / X**3)
    return np.stack(cols, axis=-1)


# ---------------------------------------------------------------- moments


@dataclass(frozen=True)
class MomentTable:
    """Moments ``C[i] = int x^i h^q dx`` for i = 0..n at a fixed power q."""

    q: int
    C: tuple
    h: HFunction = field(repr=False, compare=False)


def _parity_zero(h: HFunction, q: int, i: int) -> bool:
    parity = _h_parity(h)
    if parity is None:
        return False
    # h^q has parity (parity)^q, x^i has parity (-1)^i
    odd_h = parity == "odd"
    integrand_odd = ((q if odd_h else 0) + i) % 2 == 1
    return integrand_odd


def _h_parity(h: HFunction):
    if h.f is None and h.g is None:
        return None
    f_zero = h.f is None or h.f.is_zero
    g_zero = h.g is None or h.g.is_zero
    if g_zero and not f_zero:
        return "odd"
    if f_zero:
        return "even"
    return None


def moment(h: HFunction, q: int, i: int, tol: float = DEFAULT_TOL) -> float:
    """``int x^i h(x)^q dx`` over the support of h.

    Moments whose integrand is odd by construction (h built from data of
    definite parity) are returned as exactly 0.
    """
    if q < 1 or i < 0:
        raise ValueError("need q >= 1 and i >= 0")
    R = h.support_radius
    if R == 0.0 or _parity_zero(h, q, i):
        return 0.0
    return integrate_compact(
        lambda x: x**i * h(x) ** q, (-R, R), tol=tol, breakpoints=h.breakpoints
    )


def moment_table(h: HFunction, q: int, n: int, tol: float = DEFAULT_TOL) -> MomentTable:
    return MomentTable(q=q, C=tuple(moment(h, q, i, tol) for i in range(n + 1)), h=h)


def b_coefficient(p: int, k: int, C: float) -> float:
    """``2^(p+k-3) C / (p+k-2)``: weight of the k-th light-cone bracket."""
    if p < 3 or k < 0:
        raise ValueError("need p >= 3 and k >= 0")
    return 2.0 ** (p + k - 3) * C / (p + k - 2)


def born_coefficient(p: int, k: int, C: float) -> float:
    """Weight of the k-th bracket in the exact first-order (Born) tail.

    Expanding ``(T - x)^-(p-2)`` in x inside the Duhamel integral of the
    source ``eps^p h(t-r)^p / r^p`` gives ``binom(p+k-3, k) 2^(p-3) C / (p-2)``.
    It coincides with :func:`b_coefficient` for k = 0, and for p = 3, k = 1.
    """
    if p < 3 or k < 0:
        raise ValueError("need p >= 3 and k >= 0")
    return math.comb(p + k - 3, k) * 2.0 ** (p - 3) * C / (p - 2)


# --------------------------------------------------------- light-cone terms


def _bracket_over_r(m: int, t, r):
    """``[1/(t-r)^m - 1/(t+r)^m] / r`` for t > r >= 0, series-continued at r = 0."""
    small = r < 1e-4 * t
    rs = np.where(small, 0.0, r)
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = ((t - rs) ** (-m) - (t + rs) ** (-m)) / np.where(small, 1.0, rs)
    series = 2.0 * m / t ** (m + 1) + m * (m + 1) * (m + 2) / 3.0 * r * r / t ** (m + 3)
    return np.where(small, series, exact)


def wk_eval(p: int, k: int, B: float, t, r):
    """k-th scaled-limit term ``B Theta(t-r)/r [(t-r)^-m - (t+r)^-m]``, m = p+k-2.

    Zero for t < |r|; even in r; continued to r = 0 by its limit
    ``2 m B / t^(m+1)``.
    """
    t = np.asarray(t, dtype=float)
    r = np.abs(np.asarray(r, dtype=float))
    t, r = np.broadcast_arrays(t, r)
    if np.any((t == r) & (t >= 0)):
        raise DomainError("W^(k) is singular on the light cone t = r")
    m = p + k - 2
    inside = t > r
    tt = np.where(inside, t, 1.0)
    rr = np.where(inside, r, 0.0)
    out = np.where(inside, B * _bracket_over_r(m, tt, rr), 0.0)
    return out[()] if out.ndim == 0 else out


# ------------------------------------------------------------ expansions


@dataclass(frozen=True)
class TailExpansion:
    """Late-time coefficients in the (1/X, t/X^2, (3t^2+r^2)/X^3) basis.

    ``A`` holds the basis coefficients.  When built by :func:`predict_tail`
    the moments ``C`` and bracket weights ``B`` (for k = 0..n) and the data
    amplitude ``epsilon`` are kept as well.
    """

    A: tuple
    p: int = 3
    epsilon: float | None = None
    B: tuple | None = None
    C: tuple | None = None

    @property
    def n(self) -> int:
        return len(self.B) - 1 if self.B is not None else len(self.A) - 1

    @property
    def non_generic(self) -> bool:
        return self.A[0] == 0.0

    def bracket_eval(self, t, r):
        """``eps^p sum_k W^(k)(t, r)`` using the stored B (requires epsilon, B)."""
        if self.B is None or self.epsilon is None:
            raise ValueError("bracket form needs epsilon and B")
        total = 0.0
        for k, Bk in enumerate(self.B):
            total = total + wk_eval(self.p, k, Bk, t, r)
        return self.epsilon**self.p * total


def tail_eval(exp: TailExpansion, t, r):
    """Sum of the basis terms ``sum_j A_j basis_j(t, r)`` for t > r >= 0."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    t, r = np.broadcast_arrays(t, r)
    if np.any(t <= np.abs(r)):
        raise DomainError("tail expansion requires t > r")
    A = np.asarray(exp.A, dtype=float)
    n = len(A) - 1
    vals = tail_basis(t.ravel(), r.ravel(), n) @ A
    out = vals.reshape(t.shape)
    return out[()] if out.ndim == 0 else out


def basis_coefficients(p: int, epsilon: float, B) -> tuple:
    """Map bracket weights B_k to basis coefficients A_0..A_2.

    Bracket k has exponent m = p+k-2 and lands on basis column m-1 with
    factor 2, 4 or 2.  Brackets beyond the third column are dropped.
    """
    A = [0.0, 0.0, 0.0]
    for k, Bk in enumerate(B):
        j = p + k - 3
        if j <= 2:
            A[j] = BRACKET_FACTORS[j] * epsilon**p * Bk
    return tuple(A)


def predict_tail(
    f: RadialProfile,
    g: RadialProfile,
    p: int = 3,
    epsilon: float = 0.05,
    n: int = 2,
    tol: float = DEFAULT_TOL,
    weights: str = "scaling",
) -> TailExpansion:
    """Leading-order (eps^p) tail predicted from the data moments.

    ``weights="scaling"`` uses :func:`b_coefficient`; ``"born"`` uses the
    exact first-order weights of :func:`born_coefficient`.
    """
    if int(p) != p or p < 3:
        raise ValueError("p must be an integer >= 3")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    weight = {"scaling": b_coefficient, "born": born_coefficient}.get(weights)
    if weight is None:
        raise ValueError("weights must be 'scaling' or 'born'")
    h = build_h(f, g, tol=tol)
    table = moment_table(h, p, n, tol)
    B = tuple(weight(p, k, Ck) for k, Ck in enumerate(table.C))
    return TailExpansion(
        A=basis_coefficients(p, epsilon, B), p=p, epsilon=epsilon, B=B, C=table.C
    )


def born_tail(h: HFunction, p: int, epsilon: float, t, r, tol: float = 1e-13):
    """Exact first-order remainder ``eps^p w_1(t, r)`` for t - r > R.

    ``w_1 = 2^(p-3)/((p-2) r) int h(x)^p [(t-r-x)^(2-p) - (t+r-x)^(2-p)] dx``,
    the Duhamel integral of ``(u0)^p`` evaluated behind the outgoing pulse.
    """
    R = h.support_radius
    t = np.atleast_1d(np.asarray(t, dtype=float))
    r = np.broadcast_to(np.asarray(r, dtype=float), t.shape)
    if np.any(t - r <= R):
        raise DomainError("Born tail formula needs t - r > support radius")
    out = np.empty_like(t)
    for idx, (ti, ri) in enumerate(zip(t, r)):
        if ri == 0.0:
            kern = lambda x, ti=ti: 2.0 * (p - 2) * (ti - x) ** (1 - p)
        else:
            kern = lambda x, ti=ti, ri=ri: (
                (ti - ri - x) ** (2 - p) - (ti + ri - x) ** (2 - p)
            ) / ri
        val = integrate_compact(lambda x: h(x) ** p * kern(x), (-R, R), tol=tol,
                                breakpoints=h.breakpoints)
        out[idx] = epsilon**p * 2.0 ** (p - 3) / (p - 2) * val
    return out


# -------------------------------------------------------------- attractor


@dataclass(frozen=True)
class AttractorParams:
    """Parameters of ``sign * sqrt(2) / (t + a + b[(t+a)^2 - r^2])``.

    ``sign = -1`` selects the mirror solution -u (box u = u^3 is odd in u),
    which is the match for negative tails.
    """

    a: float
    b: float
    sign: float = 1.0

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "sign": self.sign}


def attractor_eval(params: AttractorParams, t, r):
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    s = t + params.a
    D = s + params.b * (s * s - r * r)
    if np.any(D <= 0):
        raise DomainError("attractor denominator is not positive on the evaluation region")
    out = params.sign * SQRT2 / D
    return out[()] if np.ndim(out) == 0 else out


def _attractor_series(params: AttractorParams) -> np.ndarray:
    # 1/D with D = bX + beta t + gamma, X = t^2 - r^2, expanded in 1/X.
    a, b, s = params.a, params.b, params.sign
    beta = 1.0 + 2.0 * a * b
    gamma = a * (1.0 + a * b)
    A0 = SQRT2 / b
    A1 = -SQRT2 * beta / b**2
    # t^-4 terms: sqrt2 beta^2 t^2/(b^3 X^3) - sqrt2 gamma (t^2 - r^2)/(b^2 X^3)
    A2 = SQRT2 * gamma / b**2
    D4 = SQRT2 * beta**2 / b**3 - 4.0 * SQRT2 * gamma / b**2
    return s * np.array([A0, A1, A2, D4])


def _attractor_fit(params: AttractorParams) -> np.ndarray:
    t = np.geomspace(1e3, 1e4, 200)
    tt = np.concatenate([t, t])
    rr = np.concatenate([np.zeros_like(t), 0.5 * t])
    M = tail_basis(tt, rr, 2, extended=True)
    y = attractor_eval(params, tt, rr)
    scale = np.linalg.norm(M, axis=0)
    Ms = M / scale
    cond = np.linalg.cond(Ms)
    if cond > 1e8:
        raise FitError(f"attractor expansion fit ill-conditioned (cond={cond:.3g})")
    coef, *_ = np.linalg.lstsq(Ms, y, rcond=None)
    return coef / scale


def attractor_expand(params: AttractorParams, n: int = 1, method: str = "series") -> np.ndarray:
    """Coefficients of the attractor's own large-(t^2-r^2) expansion.

    Returned in the order (A_0, A_1, A_2, D) where D multiplies
    ``t^2/(t^2-r^2)^3``; only the first ``n+1`` are returned (n <= 3).

    ``method="series"`` divides out the denominator as a geometric series;
    ``method="fit"`` least-squares fits samples at t in [1e3, 1e4],
    r in {0, t/2}.  The closed form gives A_1 = -sqrt(2)(1+2ab)/b^2.
    """
    if params.b == 0:
        raise DomainError("expansion in 1/(t^2-r^2) requires b != 0")
    if not 0 <= n <= 3:
        raise ValueError("n must be between 0 and 3")
    if method == "series":
        coef = _attractor_series(params)
    elif method == "fit":
        coef = _attractor_fit(params)
    else:
        raise ValueError(f"unknown method {method!r}")
    return coef[: n + 1]


def match_attractor(A0: float, A1: float) -> AttractorParams:
    """Unique (a, b, sign) whose expansion starts with ``A0/X + A1 t/X^2``.

    Inverts A_0 = s sqrt2/b, A_1 = -s sqrt2 (1+2ab)/b^2 with b > 0 and
    s = sign(A_0).

    Raises
    ------
    NonGenericData
        If ``A0 == 0``.
    """
    if A0 == 0 or not np.isfinite(A0):
        raise NonGenericData("A0 = 0: no attractor matches; the tail decays faster than t^-2")
    s = 1.0 if A0 > 0 else -1.0
    b = SQRT2 / abs(A0)
    a = (-s * A1 * b * b / SQRT2 - 1.0) / (2.0 * b)
    return AttractorParams(a=a, b=b, sign=s)


# --------------------------------------------------------------- scaling


@dataclass(frozen=True)
class ScalingParams:
    p: int
    a_scale: float
    b_scale: float
    lambda0: float
    valid: bool

    @property
    def a_range(self) -> tuple:
        return (0.0, self.p * (self.p - 1) / (self.p + 1))


def scaling_params(p: int, a_scale: float) -> ScalingParams:
    """Exponents of the rescaling ``W = eps^-b w(eps^-a t, eps^-a r)``.

    ``b = p + a(p-1)`` and the remainder exponent
    ``lambda0 = (p-1)(1-a) + a[(p-1)^2 - 2]/p``; ``valid`` reports whether
    ``0 < a < p(p-1)/(p+1)``.
    """
    b = p + a_scale * (p - 1)
    lam = (p - 1) * (1 - a_scale) + a_scale * ((p - 1) ** 2 - 2) / p
    valid = 0.0 < a_scale < p * (p - 1) / (p + 1)
    return ScalingParams(p=p, a_scale=a_scale, b_scale=b, lambda0=lam, valid=valid)


def prediction_report(exp: TailExpansion, a_scale: float = 1.0) -> dict:
    """JSON-ready summary of a :func:`predict_tail` result."""
    sp = scaling_params(exp.p, a_scale)
    return {
        "p": exp.p,
        "epsilon": exp.epsilon,
        "n": exp.n,
        "C": list(exp.C) if exp.C is not None else None,
        "B": list(exp.B) if exp.B is not None else None,
        "A": list(exp.A),
        "lambda0": sp.lambda0,
        "a_scale": a_scale,
        "a_scale_range": list(sp.a_range),
        "nonGeneric": exp.non_generic,
    }
