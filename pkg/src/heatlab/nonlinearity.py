"""Nonlinearity bundles f, f', f'', the tail integral F(u) = int_u^inf ds/f(s),
its inverse, and validators for the structural assumptions the pipeline needs.

Built-in families:

* ``power(p)``            -- f(u) = u^p
* ``exponential()``       -- f(u) = e^u (canonical comparison case; f(0) != 0)
* ``example1(beta, gam)`` -- f(u) = u^beta exp(u^gam), super-power growth
* ``example2()``          -- f(u) = chi(u) e^{20u} with a C^2 piecewise-quintic chi
* ``example3(beta, gam)`` -- f(u) = u^beta + u^gam, two-power growth

Every family except ``exponential`` vanishes at 0 and is extended by zero for
u < 0; the exponential keeps f(u) = e^u on the whole line (its tail integral
F(u) = e^{-u} is used on negative values by the singular-solution oracle).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

__all__ = [
    "Nonlinearity",
    "CanonicalNonlinearity",
    "DivergentTailError",
    "OutOfRangeError",
    "tail_integral_F",
    "F_inverse",
    "q_ratio",
    "largeness_threshold",
    "validate_assumptions",
    "AssumptionReport",
    "power",
    "exponential",
    "example1",
    "example2",
    "example3",
    "build_nonlinearity",
]


class DivergentTailError(ValueError):
    """The tail of int ds/f(s) does not converge (growth not superlinear)."""


class OutOfRangeError(ValueError):
    """Requested value lies outside the range of the (monotone) map."""


@dataclass(eq=False)
class Nonlinearity:
    """Evaluation bundle for a source term f with superlinear growth.

    ``f``, ``df``, ``d2f`` accept scalars or arrays.  ``qf_declared`` is the
    analytic limit of f'(u)^2/(f(u) f''(u)); ``closed_form_F`` (and its
    inverse) are set for families where the tail integral has an exact
    expression.  ``u_overflow`` marks where f leaves double precision; table
    construction stays below it.  Instances are immutable by convention and
    safe to share between threads.
    """

    name: str
    f: Callable
    df: Callable
    d2f: Callable
    qf_declared: float
    closed_form_F: Optional[Callable] = None
    closed_form_F_inv: Optional[Callable] = None
    q_ratio_closed: Optional[Callable] = None
    params: dict = field(default_factory=dict)
    u_overflow: float = math.inf
    zero_extended: bool = True
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def pf_declared(self) -> float:
        """Conjugate growth rate, 1/p + 1/q = 1 (inf when qf = 1)."""
        q = self.qf_declared
        return math.inf if q == 1.0 else q / (q - 1.0)

    # convenience wrappers so hot paths can say nl.F / nl.F_inv
    def F(self, u):
        return tail_integral_F(self, u)

    def F_inv(self, s):
        return F_inverse(self, s)

    def fast_F(self) -> "FastTailIntegral":
        """Vectorized F / F^{-1}; table-backed unless closed forms exist."""
        if "fast" not in self._cache:
            self._cache["fast"] = FastTailIntegral(self)
        return self._cache["fast"]


@dataclass(frozen=True)
class CanonicalNonlinearity:
    """The two canonical comparison nonlinearities, indexed by q >= 1:
    f_q(U) = U^p with p = q/(q-1) for q > 1, and f_q(U) = e^U for q = 1."""

    q: float

    def __post_init__(self):
        if self.q < 1.0:
            raise ValueError(f"canonical index must satisfy q >= 1, got {self.q}")

    @property
    def p(self) -> float:
        return math.inf if self.q == 1.0 else self.q / (self.q - 1.0)

    def f(self, U):
        U = np.asarray(U, dtype=float)
        if self.q == 1.0:
            return np.exp(U)
        return np.sign(U) * np.abs(U) ** self.p

    def F(self, U):
        """Tail integral: U^{1-p}/(p-1) for q > 1, e^{-U} for q = 1."""
        U = np.asarray(U, dtype=float)
        if self.q == 1.0:
            return np.exp(-U)
        p = self.p
        return U ** (1.0 - p) / (p - 1.0)

    def F_inv(self, s):
        s = np.asarray(s, dtype=float)
        if self.q == 1.0:
            return -np.log(s)
        p = self.p
        return ((p - 1.0) * s) ** (-1.0 / (p - 1.0))


# ---------------------------------------------------------------------------
# tail integral and inverse
# ---------------------------------------------------------------------------

def _tail_estimate(nl: Nonlinearity, u: float) -> float:
    """Estimate of int_u^inf ds/f(s) from the local growth structure,
    f'(u)F(u) -> qf; exact for pure powers and exponentials."""
    d = float(nl.df(u))
    if d <= 0.0:
        return math.inf
    try:
        return float(q_ratio(nl, u)) / d
    except ZeroDivisionError:
        return math.inf


def tail_integral_F(nl: Nonlinearity, u, rtol: float = 1e-12):
    """F(u) = int_u^inf ds/f(s), by closed form when available, otherwise
    adaptive quadrature over geometrically expanding panels plus an analytic
    tail estimate at the cutoff.

    Raises ``DivergentTailError`` when the tail estimate fails to contract
    (growth too slow) and ``ValueError`` for nonpositive u on zero-extended
    nonlinearities.
    """
    if nl.closed_form_F is not None:
        return nl.closed_form_F(np.asarray(u, dtype=float)) if np.ndim(u) else float(nl.closed_form_F(u))
    if np.ndim(u):
        return np.array([tail_integral_F(nl, float(x), rtol) for x in np.asarray(u).ravel()]).reshape(np.shape(u))
    u = float(u)
    if u <= 0.0 and nl.zero_extended:
        raise ValueError(f"F(u) needs u > 0, got {u}")
    total = 0.0
    a = u
    tail_prev = math.inf
    for _ in range(300):
        b = min(a * 2.0 if a > 0 else 1.0, nl.u_overflow * 0.995)
        if b > a:
            val, _ = quad(lambda s: 1.0 / nl.f(s), a, b, epsrel=min(rtol, 1e-12), limit=200)
            total += val
            a = b
        tail = _tail_estimate(nl, a)
        if tail <= rtol * total or tail < 1e-300:
            return total + tail
        if a >= nl.u_overflow * 0.99:
            # cannot push the cutoff further; accept if the estimate is tiny
            if tail <= 1e-10 * max(total, 1e-300):
                return total + tail
            raise DivergentTailError(
                f"{nl.name}: tail estimate {tail:.3e} at cutoff u={a:.3e} does not vanish")
        if tail >= tail_prev * 0.999 and a > max(1e12, 1e6 * max(u, 1.0)):
            raise DivergentTailError(
                f"{nl.name}: tail estimate stalls at {tail:.3e} (u={a:.3e}); growth not superlinear enough")
        tail_prev = tail
    raise DivergentTailError(f"{nl.name}: tail integration did not converge from u={u}")


def F_inverse(nl: Nonlinearity, s, rtol: float = 1e-12):
    """Inverse of the strictly decreasing map F, by closed form or bracketed
    root finding.  Raises ``OutOfRangeError`` if s exceeds sup F."""
    if nl.closed_form_F_inv is not None:
        return nl.closed_form_F_inv(np.asarray(s, dtype=float)) if np.ndim(s) else float(nl.closed_form_F_inv(s))
    if np.ndim(s):
        return np.array([F_inverse(nl, float(x), rtol) for x in np.asarray(s).ravel()]).reshape(np.shape(s))
    s = float(s)
    if s <= 0.0:
        raise OutOfRangeError(f"F^-1 needs s > 0, got {s}")
    # bracket: expand down/up in u until F brackets s
    lo, hi = 1.0, 1.0
    F_lo = tail_integral_F(nl, lo)
    while F_lo < s:
        lo *= 0.25
        if lo < 1e-280:
            raise OutOfRangeError(f"{nl.name}: s={s:.3e} exceeds sup F (tail at 0 too small)")
        F_lo = tail_integral_F(nl, lo)
    F_hi = tail_integral_F(nl, hi)
    while F_hi > s:
        hi = min(hi * 4.0, nl.u_overflow * 0.99)
        F_hi = tail_integral_F(nl, hi)
        if hi >= nl.u_overflow * 0.989 and F_hi > s:
            raise OutOfRangeError(f"{nl.name}: s={s:.3e} below F at the overflow cutoff")
    return brentq(lambda x: tail_integral_F(nl, x) - s, lo, hi, rtol=max(rtol, 8.9e-16))


class FastTailIntegral:
    """Vectorized F and F^{-1}.  Uses closed forms when present, otherwise a
    log-log monotone-cubic table built from panel Gauss-Legendre quadrature
    (validated at construction against the reference quadrature)."""

    def __init__(self, nl: Nonlinearity, u_lo: float = 1e-8, n_nodes: int = 4000):
        self.nl = nl
        if nl.closed_form_F is not None and nl.closed_form_F_inv is not None:
            self._F = nl.closed_form_F
            self._Fi = nl.closed_form_F_inv
            return
        u_hi = min(nl.u_overflow * 0.98, 1e15)
        xg, wg = np.polynomial.legendre.leggauss(12)
        u_nodes = np.geomspace(u_lo, u_hi, n_nodes)
        a, b = u_nodes[:-1], u_nodes[1:]
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        pts = mid[:, None] + half[:, None] * xg[None, :]
        panel = (half[:, None] * wg[None, :] / nl.f(pts)).sum(axis=1)
        tail = _tail_estimate(nl, float(u_nodes[-1]))
        F_tab = np.concatenate((np.cumsum(panel[::-1])[::-1] + tail, [max(tail, 1e-300)]))
        keep = F_tab > 1e-290
        u_nodes, F_tab = u_nodes[keep], F_tab[keep]
        self.u_range = (float(u_nodes[0]), float(u_nodes[-1]))
        logu, logF = np.log(u_nodes), np.log(F_tab)
        self._F_interp = PchipInterpolator(logu, logF, extrapolate=True)
        self._Fi_interp = PchipInterpolator(-logF, logu, extrapolate=True)
        self._F = lambda u: np.exp(self._F_interp(np.log(u)))
        self._Fi = lambda s: np.exp(self._Fi_interp(-np.log(s)))
        for u_chk in np.geomspace(u_nodes[0] * 10, u_nodes[-1] / 10, 7):
            ref = tail_integral_F(nl, float(u_chk))
            if abs(float(self._F(u_chk)) / ref - 1.0) > 1e-6:
                raise RuntimeError(f"{nl.name}: F table validation failed at u={u_chk:.3e}")

    def F(self, u):
        return self._F(np.asarray(u, dtype=float))

    def F_inv(self, s):
        return self._Fi(np.asarray(s, dtype=float))


# ---------------------------------------------------------------------------
# structural diagnostics
# ---------------------------------------------------------------------------

def q_ratio(nl: Nonlinearity, u):
    """f'(u)^2 / (f(u) f''(u)); its large-u limit is the declared qf.

    Families with exponential factors supply a cancellation-safe closed form
    (the exponentials drop out of the ratio)."""
    u_arr = np.asarray(u, dtype=float)
    if nl.q_ratio_closed is not None:
        out = nl.q_ratio_closed(u_arr)
        return out if np.ndim(u) else float(out)
    den = nl.f(u_arr) * nl.d2f(u_arr)
    if np.any(den == 0.0):
        raise ZeroDivisionError(f"{nl.name}: f*f'' vanishes on the requested points")
    out = nl.df(u_arr) ** 2 / den
    return out if np.ndim(u) else float(out)


def largeness_threshold(nl: Nonlinearity, q: float, u_hi: float = 1e8,
                        margin: float = 0.05, n_scan: int = 600) -> float:
    """Smallest level above which q - f'(u)F(u) stays nonnegative.

    Returns 1.05x the largest root of f'(u)F(u) = q (0.0 when the coefficient
    is nonnegative on the whole scan range).  Raises ``OutOfRangeError`` when
    f'F still exceeds q at the top of the scan, i.e. q does not dominate.
    """
    fast = nl.fast_F()
    u_top = min(u_hi, nl.u_overflow * 0.9)
    us = np.geomspace(1e-6, u_top, n_scan)
    g = nl.df(us) * fast.F(us) - q
    tol = 1e-8 * q   # f'F - q that is zero to roundoff counts as dominated
    if g[-1] > tol:
        raise OutOfRangeError(
            f"{nl.name}: f'F = {g[-1] + q:.6f} > q = {q} at u = {u_top:.3e}; no largeness threshold")
    pos = np.where(g > tol)[0]
    if len(pos) == 0:
        return 0.0
    i = pos[-1]
    root = brentq(lambda x: float(nl.df(x)) * float(fast.F(x)) - q, us[i], us[i + 1], rtol=1e-12)
    return (1.0 + margin) * root


@dataclass
class AssumptionEntry:
    name: str
    passed: bool
    detail: str


@dataclass
class AssumptionReport:
    nonlinearity: str
    N: float
    entries: list

    @property
    def all_passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, name: str) -> AssumptionEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {
            "nonlinearity": self.nonlinearity,
            "N": self.N,
            "entries": [{"name": e.name, "passed": e.passed, "detail": e.detail} for e in self.entries],
        }


def validate_assumptions(nl: Nonlinearity, N: float, u_grid=None) -> AssumptionReport:
    """Sampled checks of the structural assumptions at dimension N.

    A1: f(0) = 0 and f'(0) = 0.  A2: f' > 0 and f'' > 0 on u > 0.
    A3: q_ratio(u) converges to the declared qf (Richardson-style trend over
    increasing u).  A4: Q(u) = u f(u) - (p_s + 1) int_0^u f >= 0 on a log grid.
    A5: q_jl < qf < q_s (dimension window for qf = 1).  A6 (qf = 1 only):
    q_ratio <= 1 for large u.  Also verifies the limit f'(u)F(u) -> qf.
    Failures are report entries, never exceptions.
    """
    from .exponents import exponent_table

    entries: list[AssumptionEntry] = []
    tab = exponent_table(N)
    if u_grid is None:
        u_grid = np.geomspace(1e-6, min(1e6, nl.u_overflow * 0.8), 200)
    u_grid = np.asarray(u_grid, dtype=float)

    # A1
    f0 = float(nl.f(0.0))
    df0 = float(nl.df(1e-9))
    a1 = abs(f0) <= 1e-12 and abs(df0) <= 1e-6
    entries.append(AssumptionEntry("A1", a1, f"f(0)={f0:.3e}, f'(0+)={df0:.3e}"))

    # A2
    dfv, d2fv = nl.df(u_grid), nl.d2f(u_grid)
    a2 = bool(np.all(dfv > 0.0) and np.all(d2fv > 0.0))
    entries.append(AssumptionEntry("A2", a2, f"min f'={dfv.min():.3e}, min f''={d2fv.min():.3e}"))

    # A3: q_ratio trend toward declared value, three points per decade up to 1e6
    u_top = min(1e6, nl.u_overflow * 0.8)
    us = np.geomspace(10.0, u_top, max(4, int(3 * math.log10(u_top / 10.0)) + 1))
    try:
        qr = q_ratio(nl, us)
        gaps = np.abs(qr - nl.qf_declared)
        a3 = gaps[-1] < 1e-3 or (gaps[-1] < 0.05 and gaps[-1] <= 0.5 * gaps[0])
        detail = f"q_ratio({us[-1]:.1e})={qr[-1]:.6f} vs declared {nl.qf_declared}"
    except ZeroDivisionError:
        a3, detail = False, "f*f'' vanishes; no q-ratio limit"
    entries.append(AssumptionEntry("A3", a3, detail))

    # A4: Q(u) = u f - (p_s+1) F0(u) >= 0, inner integral by quadrature
    try:
        us4 = np.geomspace(1e-4, u_top, 60)
        F0 = _cumulative_primitive(nl, us4)
        Q = us4 * nl.f(us4) - (tab.p_s + 1.0) * F0
        bad = Q < -1e-10 * np.maximum(us4 * nl.f(us4), 1e-300)
        a4 = not bool(bad.any())
        detail = f"min Q/(u f) = {np.min(Q / np.maximum(us4 * nl.f(us4), 1e-300)):.3e}"
    except Exception as exc:  # quadrature failure counts as a failed check
        a4, detail = False, f"Q-quadrature failed: {exc}"
    entries.append(AssumptionEntry("A4", a4, detail))

    # A5 window
    a5 = tab.q_jl < nl.qf_declared < tab.q_s
    entries.append(AssumptionEntry(
        "A5", bool(a5), f"q_jl={tab.q_jl:.4f} < qf={nl.qf_declared} < q_s={tab.q_s:.4f}: {a5}"))

    # A6 only binds for qf = 1: the ratio must stay <= 1 from some level on
    if nl.qf_declared == 1.0:
        try:
            us6 = np.geomspace(u_top / 1e3, u_top, 48)
            qr_large = q_ratio(nl, us6)
            ok = qr_large <= 1.0 + 1e-9
            run = 0
            while run < len(ok) and ok[-1 - run]:
                run += 1
            a6 = run >= max(4, len(ok) // 4)
            detail = (f"q_ratio <= 1 from u ~ {us6[len(ok) - run]:.3e} on"
                      if a6 else f"q_ratio = {qr_large[-1]:.6f} at u = {us6[-1]:.3e}")
        except ZeroDivisionError:
            a6, detail = False, "q_ratio undefined at large u"
    else:
        a6, detail = True, "not applicable (qf > 1)"
    entries.append(AssumptionEntry("A6", bool(a6), detail))

    # limit f'(u) F(u) -> qf
    try:
        us_l = np.array([1e2, 1e3, 1e4])
        us_l = us_l[us_l < nl.u_overflow * 0.8]
        if len(us_l) == 0:
            us_l = np.geomspace(1.0, nl.u_overflow * 0.8, 3)
        fF = np.array([float(nl.df(x)) * tail_integral_F(nl, float(x)) for x in us_l])
        gaps = np.abs(fF - nl.qf_declared)
        lim_ok = bool(gaps[-1] <= gaps[0] + 1e-12 and gaps[-1] < 0.25)
        detail = "f'F = " + ", ".join(f"{v:.6f}" for v in fF) + f" vs qf={nl.qf_declared}"
    except (DivergentTailError, ValueError) as exc:
        lim_ok, detail = False, f"tail integral failed: {exc}"
    entries.append(AssumptionEntry("fF-limit", lim_ok, detail))

    return AssumptionReport(nl.name, N, entries)


def _cumulative_primitive(nl: Nonlinearity, us: np.ndarray) -> np.ndarray:
    """F0(u) = int_0^u f, cumulatively on the sorted grid ``us``."""
    xg, wg = np.polynomial.legendre.leggauss(16)
    edges = np.concatenate(([0.0], us))
    a, b = edges[:-1], edges[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    pts = mid[:, None] + half[:, None] * xg[None, :]
    panels = (half[:, None] * wg[None, :] * nl.f(pts)).sum(axis=1)
    return np.cumsum(panels)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def power(p: float) -> Nonlinearity:
    """f(u) = u^p (zero for u < 0), p > 1; F(u) = u^{1-p}/(p-1)."""
    if p <= 1.0:
        raise ValueError(f"power exponent must exceed 1, got {p}")

    def f(u):
        u = np.asarray(u, dtype=float)
        return np.where(u > 0.0, np.abs(u) ** p, 0.0)

    def df(u):
        u = np.asarray(u, dtype=float)
        return np.where(u > 0.0, p * np.abs(u) ** (p - 1.0), 0.0)

    def d2f(u):
        u = np.asarray(u, dtype=float)
        return np.where(u > 0.0, p * (p - 1.0) * np.abs(u) ** (p - 2.0), 0.0)

    Fc = lambda u: np.asarray(u, dtype=float) ** (1.0 - p) / (p - 1.0)
    Fi = lambda s: ((p - 1.0) * np.asarray(s, dtype=float)) ** (-1.0 / (p - 1.0))
    return Nonlinearity(
        name=f"power(p={p:g})", f=f, df=df, d2f=d2f,
        qf_declared=p / (p - 1.0), closed_form_F=Fc, closed_form_F_inv=Fi,
        params={"kind": "power", "p": p})


def exponential() -> Nonlinearity:
    """f(u) = e^u on the whole line; F(u) = e^{-u}.  Violates the vanishing
    conditions at 0 (f(0) = 1) and is not zero-extended: the comparison
    singular solution -2 log r + log 2(N-2) crosses zero and the exact tail
    integral must keep following e^u there."""
    f = lambda u: np.exp(np.minimum(np.asarray(u, dtype=float), 700.0))
    return Nonlinearity(
        name="exponential", f=f, df=f, d2f=f,
        qf_declared=1.0,
        closed_form_F=lambda u: np.exp(-np.asarray(u, dtype=float)),
        closed_form_F_inv=lambda s: -np.log(np.asarray(s, dtype=float)),
        q_ratio_closed=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        params={"kind": "exponential"},
        u_overflow=700.0, zero_extended=False)


def example1(beta: float, gamma: float) -> Nonlinearity:
    """f(u) = u^beta exp(u^gamma) with gamma > 1: super-power growth, qf = 1."""
    if gamma <= 1.0:
        raise ValueError(f"example1 needs gamma > 1, got {gamma}")
    if beta <= 1.0:
        raise ValueError(f"example1 needs beta > 1, got {beta}")
    u_over = (700.0) ** (1.0 / gamma)

    def _exp(u):
        return np.exp(np.minimum(u ** gamma, 705.0))

    # values saturate to inf past u_overflow; callers stay below it
    def f(u):
        u = np.asarray(u, dtype=float)
        up = np.where(u > 0.0, u, 1.0)
        with np.errstate(over="ignore"):
            return np.where(u > 0.0, up ** beta * _exp(up), 0.0)

    def df(u):
        u = np.asarray(u, dtype=float)
        up = np.where(u > 0.0, u, 1.0)
        with np.errstate(over="ignore"):
            return np.where(u > 0.0, up ** (beta - 1.0) * (beta + gamma * up ** gamma) * _exp(up), 0.0)

    def d2f(u):
        u = np.asarray(u, dtype=float)
        up = np.where(u > 0.0, u, 1.0)
        poly = (beta * (beta - 1.0)
                + gamma * (2.0 * beta + gamma - 1.0) * up ** gamma
                + gamma ** 2 * up ** (2.0 * gamma))
        with np.errstate(over="ignore"):
            return np.where(u > 0.0, up ** (beta - 2.0) * poly * _exp(up), 0.0)

    def ratio(u):
        # exponential factors cancel in f'^2/(f f'')
        u = np.asarray(u, dtype=float)
        ug = u ** gamma
        num = (beta + gamma * ug) ** 2
        den = beta * (beta - 1.0) + gamma * (2.0 * beta + gamma - 1.0) * ug + gamma ** 2 * ug ** 2
        return num / den

    return Nonlinearity(
        name=f"example1(beta={beta:g},gamma={gamma:g})", f=f, df=df, d2f=d2f,
        qf_declared=1.0, q_ratio_closed=ratio,
        params={"kind": "example1", "beta": beta, "gamma": gamma},
        u_overflow=u_over)


def _chi(u):
    """C^2 plateau factor: quintic ramp 0 -> 20 on [0, 4], constant beyond."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    out = np.where(u <= 0.0, 0.0, out)
    m1 = (u > 0.0) & (u <= 1.0)
    m2 = (u > 1.0) & (u <= 3.0)
    m3 = (u > 3.0) & (u <= 4.0)
    out = np.where(m1, u ** 5, out)
    out = np.where(m2, 10.0 * (u - 1.0) - (u - 2.0) ** 5, out)
    out = np.where(m3, 20.0 + (u - 4.0) ** 5, out)
    out = np.where(u > 4.0, 20.0, out)
    return out


def _chi_p(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    m1 = (u > 0.0) & (u <= 1.0)
    m2 = (u > 1.0) & (u <= 3.0)
    m3 = (u > 3.0) & (u <= 4.0)
    out = np.where(m1, 5.0 * u ** 4, out)
    out = np.where(m2, 10.0 - 5.0 * (u - 2.0) ** 4, out)
    out = np.where(m3, 5.0 * (u - 4.0) ** 4, out)
    return out


def _chi_pp(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    m1 = (u > 0.0) & (u <= 1.0)
    m2 = (u > 1.0) & (u <= 3.0)
    m3 = (u > 3.0) & (u <= 4.0)
    out = np.where(m1, 20.0 * u ** 3, out)
    out = np.where(m2, -20.0 * (u - 2.0) ** 3, out)
    out = np.where(m3, 20.0 * (u - 4.0) ** 3, out)
    return out


def example2(a: float = 20.0) -> Nonlinearity:
    """f(u) = chi(u) e^{au} with the piecewise-quintic plateau chi; equals
    u^5 e^{au} near 0 and 20 e^{au} for u >= 4, so q_ratio(u) = 1 exactly
    there."""

    def f(u):
        u = np.asarray(u, dtype=float)
        return _chi(u) * np.exp(np.minimum(a * u, 700.0))

    def df(u):
        u = np.asarray(u, dtype=float)
        return (_chi_p(u) + a * _chi(u)) * np.exp(np.minimum(a * u, 700.0))

    def d2f(u):
        u = np.asarray(u, dtype=float)
        return (_chi_pp(u) + 2.0 * a * _chi_p(u) + a ** 2 * _chi(u)) * np.exp(np.minimum(a * u, 700.0))

    def ratio(u):
        u = np.asarray(u, dtype=float)
        num = (_chi_p(u) + a * _chi(u)) ** 2
        den = _chi(u) * (_chi_pp(u) + 2.0 * a * _chi_p(u) + a ** 2 * _chi(u))
        if np.any(den == 0.0):
            raise ZeroDivisionError("example2: ratio undefined at u <= 0")
        return num / den

    return Nonlinearity(
        name=f"example2(a={a:g})", f=f, df=df, d2f=d2f, qf_declared=1.0,
        q_ratio_closed=ratio,
        params={"kind": "example2", "a": a}, u_overflow=700.0 / a)


def example3(beta: float, gamma: float, N: float | None = None) -> Nonlinearity:
    """f(u) = u^beta + u^gamma with gamma < beta; two-power growth with
    qf = beta/(beta-1).  With N supplied, enforces the admissible window
    p_s < gamma < beta < p_jl."""
    if not gamma < beta:
        raise ValueError(f"example3 needs gamma < beta, got gamma={gamma}, beta={beta}")
    if gamma <= 1.0:
        raise ValueError(f"example3 needs gamma > 1, got {gamma}")
    if N is not None:
        from .exponents import exponent_table
        tab = exponent_table(N)
        if not (tab.p_s < gamma and beta < tab.p_jl):
            raise ValueError(
                f"example3 window violated at N={N}: need p_s={tab.p_s:.4f} < gamma={gamma} "
                f"and beta={beta} < p_jl={tab.p_jl:.4f}")

    def f(u):
        u = np.asarray(u, dtype=float)
        up = np.abs(u)
        return np.where(u > 0.0, up ** beta + up ** gamma, 0.0)

    def df(u):
        u = np.asarray(u, dtype=float)
        up = np.abs(u)
        return np.where(u > 0.0, beta * up ** (beta - 1.0) + gamma * up ** (gamma - 1.0), 0.0)

    def d2f(u):
        u = np.asarray(u, dtype=float)
        up = np.abs(u)
        return np.where(u > 0.0,
                        beta * (beta - 1.0) * up ** (beta - 2.0)
                        + gamma * (gamma - 1.0) * up ** (gamma - 2.0), 0.0)

    return Nonlinearity(
        name=f"example3(beta={beta:g},gamma={gamma:g})", f=f, df=df, d2f=d2f,
        qf_declared=beta / (beta - 1.0),
        params={"kind": "example3", "beta": beta, "gamma": gamma})


_BUILDERS = {
    "power": lambda p=3.0, **kw: power(p),
    "exponential": lambda **kw: exponential(),
    "example1": lambda beta=5.0, gamma=2.0, **kw: example1(beta, gamma),
    "example2": lambda a=20.0, **kw: example2(a),
    "example3": lambda beta=3.0, gamma=2.5, N=None, **kw: example3(beta, gamma, N),
}


def build_nonlinearity(kind: str, **params) -> Nonlinearity:
    """Builder dispatch used by the CLI config: kind + keyword parameters."""
    if kind not in _BUILDERS:
        raise ValueError(f"unknown nonlinearity kind {kind!r}; choices: {sorted(_BUILDERS)}")
    return _BUILDERS[kind](**params)
