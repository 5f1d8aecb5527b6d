"""Closed-form inequalities and thresholds, plus root solvers for the
critical-temperature bounds they imply."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from scipy.optimize import bisect

__all__ = [
    "BoundReport",
    "kw_dual",
    "self_dual_K",
    "theorem1_region",
    "lemma_A_bound",
    "hts_radius",
    "cumulant_bound",
    "gap_inequalities",
    "theorem4_bound",
    "format_reports",
]

SELF_DUAL_K = 0.5 * math.log1p(math.sqrt(2.0))


def self_dual_K() -> float:
    return SELF_DUAL_K


@dataclass
class BoundReport:
    name: str
    inputs: dict
    value: float
    satisfied: bool | None = None
    extra: dict = field(default_factory=dict)

    def row(self) -> str:
        ins = " ".join(f"{k}={v}" for k, v in self.inputs.items())
        sat = "" if self.satisfied is None else f"\tsatisfied={self.satisfied}"
        return f"{self.name}\t{ins}\tvalue={self.value:.12g}{sat}"


def format_reports(reports: Iterable[BoundReport]) -> str:
    reports = list(reports)
    width = max((len(r.name) for r in reports), default=0)
    lines = []
    for r in reports:
        ins = ", ".join(f"{k}={v}" for k, v in r.inputs.items())
        sat = "" if r.satisfied is None else ("  ok" if r.satisfied else "  FAILS")
        lines.append(f"{r.name:<{width}}  {r.value:>16.10g}{sat}  ({ins})")
    return "\n".join(lines)


def kw_dual(K: float) -> float:
    """Kramers-Wannier dual coupling, ``tanh K* = exp(-2K)``."""
    if not K > 0:
        raise ValueError(f"dual coupling needs K > 0, got {K}")
    return math.atanh(math.exp(-2.0 * K))


def _S(p: float, K: float) -> float:
    return math.exp(-2.0 * K) * (1.0 - p) + math.exp(2.0 * K) * p


def theorem1_region(m: int, p: float, K: float) -> BoundReport:
    """Low-temperature, low-disorder region ``(m-1) S < 1`` where the averaged
    homological difference vanishes with growing distance."""
    if m < 2:
        raise ValueError("row weight m must be >= 2")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    val = (m - 1) * _S(p, K)
    thr = 0.5 * math.log(m - 1)
    return BoundReport("theorem1_region", {"m": m, "p": p, "K": K}, val, val < 1.0,
                       {"K_threshold_p0": thr})


def lemma_A_bound(m: int, p: float, K: float, d_G: int) -> float:
    """``(m-1)^d S^(d+1) / (1 - (m-1) S)`` bounding the averaged homological
    difference inside the region."""
    if not theorem1_region(m, p, K).satisfied:
        raise ValueError(f"(m={m}, p={p}, K={K}) lies outside the convergence region")
    S = _S(p, K)
    x = (m - 1) * S
    return x**d_G * S / (1.0 - x)


def hts_radius(l: int, m: int) -> float:
    """Radius of guaranteed analyticity of the high-temperature series."""
    if l < 1 or m < 1:
        raise ValueError("l and m must be >= 1")
    return 1.0 / (2.0 * math.e * ((l - 1) * m + 1))


def cumulant_bound(s: int, l: int, m: int, J: float = 1.0, h_field: float = 0.0,
                   case: str = "b", r: int | None = None, n: int | None = None) -> float:
    """``2^(s-1) s^(s-2) C (D+1)^(s-1) A^s`` with ``A = max(|J|, |h'|)``.

    Case ``"a"`` (field on) uses ``D = l m`` and ``C = r/n + 1``; case ``"b"``
    (no field) uses ``D = (l-1) m`` and ``C = 1``.  The bound applies to the
    per-bond cumulants of ``X = J sum R_b + h' sum S_v``.
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    if case == "a":
        if r is None or n is None:
            raise ValueError("case (a) needs r and n")
        D, C = l * m, r / n + 1.0
    elif case == "b":
        D, C = (l - 1) * m, 1.0
    else:
        raise ValueError("case must be 'a' or 'b'")
    A = max(abs(J), abs(h_field))
    return 2.0 ** (s - 1) * float(s) ** (s - 2) * C * (D + 1.0) ** (s - 1) * A**s


def gap_inequalities(K_pairs: Iterable[tuple[float, float]], R: float,
                     tol: float = 0.0) -> list[BoundReport]:
    """Check ``K_a - K_b >= R ln 2`` for each supplied ``(K_a, K_b)``."""
    target = R * math.log(2.0)
    out = []
    for Ka, Kb in K_pairs:
        gap = Ka - Kb
        out.append(BoundReport("gap", {"K_a": Ka, "K_b": Kb, "R": R}, gap,
                               gap >= target - tol, {"R_ln2": target}))
    return out


def theorem4_bound(f: int, d: int, tol: float = 1e-10) -> BoundReport:
    """Critical-temperature bound for ``{f, d}`` tilings.

    For ``f = d`` the bound coupling solves ``tanh(K + R ln 2) = exp(-2K)``,
    i.e. the gap condition applied to a self-dual pair.  For ``f != d`` only the
    rate and the inequality pair are reported.  The flat self-dual case
    ``{4, 4}`` has ``R = 0`` and returns the self-dual point.
    """
    if f * d < 2 * (f + d):
        raise ValueError(f"{{{f},{d}}} is neither hyperbolic nor flat")
    if f * d == 2 * (f + d) and f != d:
        raise ValueError(f"{{{f},{d}}} is flat but not self-dual")
    R = 1.0 - 2.0 / f - 2.0 / d
    inputs = {"f": f, "d": d, "R": R}
    if f != d:
        return BoundReport("theorem4", inputs, float("nan"), None,
                           {"inequalities": "K_c(H*) - K_c(G) >= R ln2, K_c(H*) = kw_dual(K_c(H))"})
    lr = R * math.log(2.0)

    def g(K: float) -> float:
        return math.tanh(K + lr) - math.exp(-2.0 * K)

    K = bisect(g, 1e-6, 5.0, xtol=tol)
    return BoundReport("theorem4", inputs, 1.0 / K, None, {"K_max": K, "T_min": 1.0 / K})
