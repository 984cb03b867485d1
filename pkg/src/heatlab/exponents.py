"""Critical exponents for the radial semilinear heat equation in dimension N.

All quantities are elementary functions of the dimension N and, where needed,
of the growth-conjugate exponent ``qf`` of the nonlinearity.  Infinite values
are represented by ``math.inf`` so that regime tests branch exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ExponentTable",
    "exponent_table",
    "gamma_star",
    "classify_regime",
    "SUPERCRITICAL_WINDOW",
    "CRITICAL_SUBCRITICAL_WINDOW",
    "OUTSIDE",
]

SUPERCRITICAL_WINDOW = "supercritical-window"
CRITICAL_SUBCRITICAL_WINDOW = "critical-subcritical-window"
OUTSIDE = "outside"


@dataclass(frozen=True)
class ExponentTable:
    """Critical exponents at dimension N (q-entries are conjugates, 1/p + 1/q = 1).

    ``p_jl`` is infinite for N <= 10; ``q_jl`` always carries the closed-form
    value (N - 2 sqrt(N-1))/4, which is the quantity regime tests compare
    against even when p_jl is infinite.  ``gamma_star``/``gamma_c`` are only
    populated when the table was built with a ``qf`` value.
    """

    N: float
    p_s: float
    p_jl: float
    p_f: float
    p_0: float
    q_s: float
    q_jl: float
    q_0: float
    qf: float | None = None
    gamma_star: float | None = None
    gamma_c: float | None = None

    def as_dict(self) -> dict:
        return {
            "N": self.N,
            "p_s": self.p_s,
            "p_jl": self.p_jl,
            "p_f": self.p_f,
            "p_0": self.p_0,
            "q_s": self.q_s,
            "q_jl": self.q_jl,
            "q_0": self.q_0,
            "qf": self.qf,
            "gamma_star": self.gamma_star,
            "gamma_c": self.gamma_c,
        }


def exponent_table(N: float, qf: float | None = None) -> ExponentTable:
    """Build the exponent table for dimension N (> 2; non-integer N allowed).

    With ``qf`` supplied, also fills ``gamma_star`` and, for qf > 1, the
    conjugate growth rate's ``gamma_c`` = N(p_f - 1)/2.
    """
    if N <= 2:
        raise ValueError(f"dimension must exceed 2, got N={N}")
    p_s = (N + 2.0) / (N - 2.0)
    if N > 10:
        p_jl = 1.0 + 4.0 / (N - 4.0 - 2.0 * math.sqrt(N - 1.0))
    else:
        p_jl = math.inf
    q_jl = (N - 2.0 * math.sqrt(N - 1.0)) / 4.0
    gs = gc = None
    if qf is not None:
        gs = gamma_star(N, qf)
        if qf > 1.0:
            p_f = qf / (qf - 1.0)
            gc = N * (p_f - 1.0) / 2.0
    return ExponentTable(
        N=N,
        p_s=p_s,
        p_jl=p_jl,
        p_f=1.0 + 2.0 / N,
        p_0=N / (N - 2.0),
        q_s=(N + 2.0) / 4.0,
        q_jl=q_jl,
        q_0=N / 2.0,
        qf=qf,
        gamma_star=gs,
        gamma_c=gc,
    )


def gamma_star(N: float, qf: float) -> float:
    """Supremum of exponents gamma with the singular solution locally
    gamma-integrable: N/(2(qf-1)) for qf > 1, infinite for qf = 1."""
    if N <= 2:
        raise ValueError(f"dimension must exceed 2, got N={N}")
    if qf < 1.0:
        raise ValueError(f"qf must be >= 1, got {qf}")
    if qf == 1.0:
        return math.inf
    return N / (2.0 * (qf - 1.0))


def classify_regime(N: float, qf: float) -> str:
    """Classify (N, qf) against the two nonuniqueness windows.

    Supercritical window: q_jl < qf < q_s (for qf = 1 this reduces to the
    dimension condition 2 < N < 10).  Critical/subcritical window:
    q_s <= qf < q_0.  Everything else is outside.
    """
    t = exponent_table(N)
    if t.q_jl < qf < t.q_s:
        return SUPERCRITICAL_WINDOW
    if t.q_s <= qf < t.q_0:
        return CRITICAL_SUBCRITICAL_WINDOW
    return OUTSIDE
