"""Forward self-similar profiles for the canonical nonlinearities and their
transversal intersections with the singular profile.

The profile phi(eta; alpha) solves

    phi'' + (N-1)/eta phi' + eta/2 phi' + f_q(phi) F_q(phi) + f_q(phi) = 0,
    phi(0) = alpha,  phi'(0) = 0,

which is the two-power / exponential family written through the canonical
pair (f_q, F_q).  The singular profile is phi*(eta) = F_q^{-1}[eta^2/(2N-4q)].
``find_alpha0`` locates the smallest alpha (up to the scan's resolution) whose
profile crosses a singular-type target transversally with at least the
requested slope margin; ``intersection_curve`` continues that crossing in time
against the target perturbed by the stationary correction theta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .nonlinearity import CanonicalNonlinearity, Nonlinearity, largeness_threshold

__all__ = [
    "ProfileSolution",
    "IntersectionRecord",
    "IntersectionCurve",
    "EpsilonChoice",
    "NoCrossingError",
    "solve_profile",
    "singular_profile",
    "singular_profile_slope",
    "first_crossing",
    "find_alpha0",
    "choose_epsilon",
    "intersection_curve",
]


class NoCrossingError(RuntimeError):
    """The alpha scan exhausted its bracket without a transversal crossing."""


@dataclass(eq=False)
class ProfileSolution:
    """Self-similar profile phi(., alpha) for canonical index q at dimension N.

    Carries the dense ODE solution for evaluation between nodes.
    """

    eta: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    alpha: float
    q: float
    N: float
    _dense: object = field(default=None, repr=False)

    def phi_at(self, eta):
        eta = np.asarray(eta, dtype=float)
        out = self._dense(np.clip(eta, 1e-300, self.eta[-1]))[0]
        return np.where(eta <= 0.0, self.alpha, out)

    def dphi_at(self, eta):
        eta = np.asarray(eta, dtype=float)
        out = self._dense(np.clip(eta, 1e-300, self.eta[-1]))[1]
        return np.where(eta <= 0.0, 0.0, out)

    @property
    def eta_max(self) -> float:
        return float(self.eta[-1])


@dataclass
class IntersectionRecord:
    """First transversal crossing of a profile with a singular-type target."""

    alpha0: float
    eta0: float
    margin: float            # |phi'(eta0) - target'(eta0)|
    first: bool
    below_before_max: float  # max of phi - target on (0, eta0), < 0
    above_after_min: float   # min of phi - target just beyond eta0, > 0
    q: float
    N: float
    alpha_threshold: float | None = None


def _ode_rhs(q: float, N: float):
    can = CanonicalNonlinearity(q)
    if q == 1.0:
        def rhs(eta, y):
            phi, dphi = y
            return (dphi, -(N - 1.0) / eta * dphi - 0.5 * eta * dphi - 1.0 - math.exp(min(phi, 700.0)))
    else:
        p = can.p
        def rhs(eta, y):
            phi, dphi = y
            # |phi|^{p-1} phi keeps the source odd for transient negative values
            return (dphi, -(N - 1.0) / eta * dphi - 0.5 * eta * dphi
                    - phi / (p - 1.0) - abs(phi) ** (p - 1.0) * phi)
    return rhs


def solve_profile(q: float, N: float, alpha: float, eta_max: float = 20.0,
                  rtol: float = 1e-11) -> ProfileSolution:
    """Integrate the profile equation from the center.

    Seeds just off eta = 0 with phi ~ alpha - c eta^2/(2N), where c is the
    source at alpha.  For q = 1 the profile may cross into negative values;
    for q > 1 the source is extended oddly (profiles in the scanned range
    stay positive).
    """
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if q < 1.0:
        raise ValueError(f"canonical index must satisfy q >= 1, got {q}")
    can = CanonicalNonlinearity(q)
    c = float(can.f(alpha) * can.F(alpha) + can.f(alpha))
    e0 = 1e-8
    y0 = [alpha - c * e0 ** 2 / (2.0 * N), -c * e0 / N]
    sol = solve_ivp(_ode_rhs(q, N), (e0, eta_max), y0, method="DOP853",
                    rtol=rtol, atol=1e-14, dense_output=True)
    if sol.status != 0:
        raise RuntimeError(f"profile integration failed at eta={sol.t[-1]:.4f}: {sol.message}")
    eta = np.linspace(e0, eta_max, 2048)
    vals = sol.sol(eta)
    return ProfileSolution(eta=eta, phi=vals[0], dphi=vals[1], alpha=alpha,
                           q=q, N=N, _dense=sol.sol)


def singular_profile(q: float, N: float, eta):
    """phi*(eta) = F_q^{-1}[eta^2 / (2N - 4q)]: L eta^{-2/(p-1)} for q > 1,
    -2 log eta + log(2N - 4) for q = 1."""
    if q >= N / 2.0:
        raise ValueError(f"need q < N/2, got q={q}, N={N}")
    can = CanonicalNonlinearity(q)
    eta = np.asarray(eta, dtype=float)
    return can.F_inv(eta ** 2 / (2.0 * N - 4.0 * q))


def singular_profile_slope(q: float, N: float, eta):
    eta = np.asarray(eta, dtype=float)
    if q == 1.0:
        return -2.0 / eta
    p = q / (q - 1.0)
    c = 2.0 * N - 4.0 * q
    # d/deta ((p-1) eta^2 / c)^{-1/(p-1)}
    return (-2.0 / (p - 1.0)) * ((p - 1.0) / c) ** (-1.0 / (p - 1.0)) * eta ** (-2.0 / (p - 1.0) - 1.0)


def _target_fns(q: float, N: float, qf_denominator: float, theta_fn=None, sqrt_t: float = 0.0):
    """Target curve eta -> F_q^{-1}[eta^2 (1 + theta(sqrt_t * eta)) / (2N - 4 qf)]
    and its slope (theta treated by finite differences when present)."""
    can = CanonicalNonlinearity(q)
    c = 2.0 * N - 4.0 * qf_denominator
    if c <= 0.0:
        raise ValueError(f"need qf < N/2 in the target denominator, got {qf_denominator}")

    if theta_fn is None:
        def val(eta):
            return can.F_inv(np.asarray(eta, dtype=float) ** 2 / c)

        def slope(eta):
            h = 1e-6 * max(abs(eta), 1e-6)
            return (float(val(eta + h)) - float(val(eta - h))) / (2.0 * h)
        return val, slope

    def val(eta):
        eta = np.asarray(eta, dtype=float)
        return can.F_inv(eta ** 2 * (1.0 + theta_fn(sqrt_t * eta)) / c)

    def slope(eta):
        h = 1e-6 * max(abs(eta), 1e-6)
        return (float(val(eta + h)) - float(val(eta - h))) / (2.0 * h)
    return val, slope


def first_crossing(profile: ProfileSolution, target_val, target_slope,
                   eta_hi: float | None = None, points_per_unit: int = 512,
                   after_window: float = 0.25):
    """Locate the first sign change of phi - target on (0, eta_hi] by dense
    scanning plus bracketed root polishing; verify the below/at/above pattern.

    Returns None when no crossing exists on the scanned range, else a dict
    with eta0, slope margin, and the sign-pattern extrema.
    """
    eta_hi = profile.eta_max * 0.999 if eta_hi is None else eta_hi
    n = max(64, int(points_per_unit * eta_hi))
    eta = np.linspace(eta_hi / n, eta_hi, n)
    with np.errstate(over="ignore"):
        d = profile.phi_at(eta) - target_val(eta)
    sign_flip = np.where((d[:-1] < 0.0) & (d[1:] >= 0.0))[0]
    if len(sign_flip) == 0:
        return None
    i = sign_flip[0]
    g = lambda e: float(profile.phi_at(e)) - float(target_val(e))
    eta0 = brentq(g, eta[i], eta[i + 1], xtol=1e-14, rtol=8.9e-16)
    margin = float(profile.dphi_at(eta0)) - float(target_slope(eta0))
    below_max = float(d[:i + 1].max()) if i >= 0 else 0.0
    after = eta[(eta > eta0) & (eta <= eta0 * (1.0 + after_window))]
    above_min = float((profile.phi_at(after) - target_val(after)).min()) if len(after) else 0.0
    return {
        "eta0": float(eta0),
        "margin": margin,
        "below_before_max": below_max,
        "above_after_min": above_min,
        "pattern_ok": bool(below_max < 0.0 and margin > 0.0 and above_min > 0.0),
    }


def find_alpha0(q: float, N: float, margin_floor: float = 1e-4,
                qf_denominator: float | None = None, eta_max: float = 20.0,
                alpha_bracket: tuple[float, float] | None = None,
                scan_points: int = 25, rtol: float = 1e-11) -> IntersectionRecord:
    """Smallest alpha (at the scan's resolution) whose profile crosses the
    singular-type target transversally with slope margin >= margin_floor.

    Scans a log bracket around the singular profile's value at eta = 1 for
    the appearance of a crossing, bisects the appearance threshold, then
    steps up from the threshold until the margin clears the floor.  Raises
    ``NoCrossingError`` when the bracket holds no crossing.
    """
    qf_denominator = q if qf_denominator is None else qf_denominator
    target_val, target_slope = _target_fns(q, N, qf_denominator)
    if alpha_bracket is None:
        ref = float(singular_profile(q, N, 1.0))
        lo, hi = max(ref, 0.05) * 1e-2, max(ref, 0.05) * 1e2
    else:
        lo, hi = alpha_bracket

    def crossing(alpha):
        prof = solve_profile(q, N, alpha, eta_max, rtol)
        return prof, first_crossing(prof, target_val, target_slope)

    alphas = np.geomspace(lo, hi, scan_points)
    hit_idx = None
    for i, a in enumerate(alphas):
        _, rec = crossing(float(a))
        if rec is not None:
            hit_idx = i
            break
    if hit_idx is None:
        raise NoCrossingError(
            f"no crossing for q={q}, N={N} with alpha in [{lo:.3g}, {hi:.3g}]")
    if hit_idx == 0:
        a_thr = float(alphas[0])
    else:
        a_no, a_yes = float(alphas[hit_idx - 1]), float(alphas[hit_idx])
        for _ in range(48):
            mid = 0.5 * (a_no + a_yes)
            _, rec = crossing(mid)
            if rec is None:
                a_no = mid
            else:
                a_yes = mid
            if (a_yes - a_no) <= 1e-6 * a_yes:
                break
        a_thr = a_yes

    # step up from the appearance threshold until the margin clears the floor
    step = 0.005
    for _ in range(24):
        alpha0 = a_thr * (1.0 + step)
        prof, rec = crossing(alpha0)
        if rec is not None and rec["pattern_ok"] and rec["margin"] >= margin_floor:
            return IntersectionRecord(
                alpha0=alpha0, eta0=rec["eta0"], margin=rec["margin"], first=True,
                below_before_max=rec["below_before_max"],
                above_after_min=rec["above_after_min"], q=q, N=N,
                alpha_threshold=a_thr)
        step *= 2.0
    raise NoCrossingError(
        f"margin floor {margin_floor} unreachable for q={q}, N={N} (threshold {a_thr:.6g})")


@dataclass
class EpsilonChoice:
    q: float
    epsilon: float
    record: IntersectionRecord
    u_large: float
    trials: list


def choose_epsilon(nl: Nonlinearity, N: float,
                   trials=(0.1, 0.05, 0.02, 0.01, 0.0),
                   margin_floor: float = 1e-4, eta_max: float = 20.0) -> EpsilonChoice:
    """Pick the canonical index q = qf + eps for the comparison machinery.

    For qf = 1 returns eps = 0.  For qf > 1 walks the decreasing trial list
    and keeps the smallest eps such that q < q_s, the profile/target crossing
    is transversal above the margin floor, and q dominates f'F for large u
    (a finite largeness threshold exists; eps = 0 qualifies only when f'F
    approaches qf from below or equals it identically).
    """
    from .exponents import exponent_table

    qf = nl.qf_declared
    if qf == 1.0:
        rec = find_alpha0(1.0, N, margin_floor=margin_floor, eta_max=eta_max)
        u_large = largeness_threshold(nl, 1.0)
        return EpsilonChoice(q=1.0, epsilon=0.0, record=rec, u_large=u_large, trials=[(0.0, "ok")])

    q_s = exponent_table(N).q_s
    outcome: list = []
    best: EpsilonChoice | None = None
    for eps in trials:
        q = qf + eps
        if not q < q_s:
            outcome.append((eps, f"q={q:.4f} not below q_s={q_s:.4f}"))
            continue
        try:
            u_large = largeness_threshold(nl, q)
        except Exception as exc:
            outcome.append((eps, f"no largeness threshold: {exc}"))
            continue
        try:
            rec = find_alpha0(q, N, margin_floor=margin_floor,
                              qf_denominator=qf, eta_max=eta_max)
        except NoCrossingError as exc:
            outcome.append((eps, f"no crossing: {exc}"))
            continue
        outcome.append((eps, "ok"))
        best = EpsilonChoice(q=q, epsilon=eps, record=rec, u_large=u_large, trials=outcome)
    if best is None:
        raise NoCrossingError(f"all epsilon trials failed for {nl.name}, N={N}: {outcome}")
    best.trials = outcome
    return best


@dataclass
class IntersectionCurve:
    """Interface curve r(t) = sqrt(t) eta_*(t) where the transformed profile
    meets the stationary singular branch."""

    t: np.ndarray
    eta_star: np.ndarray
    r: np.ndarray
    eta0_limit: float
    q: float
    qf: float
    N: float

    def r_at(self, t):
        t = np.asarray(t, dtype=float)
        return np.sqrt(t) * self.eta_at(t)

    def eta_at(self, t):
        from scipy.interpolate import PchipInterpolator
        if not hasattr(self, "_interp"):
            self._interp = PchipInterpolator(np.log(self.t), self.eta_star)
        t = np.clip(np.asarray(t, dtype=float), self.t[0], self.t[-1])
        return self._interp(np.log(t))


def intersection_curve(q: float, qf: float, N: float, profile: ProfileSolution,
                       t_grid, theta_fn, eta0_hint: float | None = None,
                       continuity_ratio: float = 10.0) -> IntersectionCurve:
    """Continue the first crossing of the profile with the theta-perturbed
    singular target along a time grid; verifies the crossing stays first and
    transversal and that eta_*(t) moves continuously (bounded increments).

    Raises ``NoCrossingError`` when the root is lost at some t (the caller
    shrinks its time window accordingly).
    """
    t_grid = np.sort(np.asarray(t_grid, dtype=float))
    target0_val, target0_slope = _target_fns(q, N, qf)
    if eta0_hint is None:
        rec0 = first_crossing(profile, target0_val, target0_slope)
        if rec0 is None:
            raise NoCrossingError("no limiting crossing for the curve")
        eta0 = rec0["eta0"]
    else:
        eta0 = eta0_hint

    etas = np.empty_like(t_grid)
    cur = eta0
    for k, t in enumerate(t_grid):
        val, slope = _target_fns(q, N, qf, theta_fn=theta_fn, sqrt_t=math.sqrt(t))
        g = lambda e: float(profile.phi_at(e)) - float(val(e))
        lo, hi = 0.55 * cur, 1.65 * cur
        if g(lo) >= 0.0 or g(hi) <= 0.0:
            raise NoCrossingError(f"curve root lost at t={t:.3e} (bracket [{lo:.3f},{hi:.3f}])")
        cur = brentq(g, lo, hi, xtol=1e-14, rtol=8.9e-16)
        # first-ness: no earlier sign change
        probe = np.linspace(cur / 256.0, cur * 0.995, 256)
        if np.any(profile.phi_at(probe) - val(probe) >= 0.0):
            raise NoCrossingError(f"crossing at t={t:.3e} is not first")
        etas[k] = cur
    inc = np.abs(np.diff(etas))
    dt = np.diff(t_grid)
    if len(inc) and np.any(inc[1:] > continuity_ratio * np.maximum(inc[:-1], 1e-14) + continuity_ratio * dt[1:] / np.maximum(t_grid[1:-1], 1e-300) * etas[1:-1]):
        # increments should scale with the grid; a jump signals a lost branch
        raise NoCrossingError("eta_*(t) increments violate the continuity bound")
    return IntersectionCurve(t=t_grid, eta_star=etas, r=np.sqrt(t_grid) * etas,
                             eta0_limit=eta0, q=q, qf=qf, N=N)
