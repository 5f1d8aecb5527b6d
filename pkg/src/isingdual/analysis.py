"""Post-processing of temperature series: energy duality transform, quartic
peak fits, infinite-size extrapolation and Binder-cumulant crossings."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import least_squares

from .bounds import kw_dual
from .errors import NumericalFailure

__all__ = [
    "Series",
    "PeakFit",
    "Crossing",
    "dualize_energy",
    "quartic_peak_fit",
    "extrapolate_infinite_size",
    "binder_crossing",
    "series_from_mc",
    "write_tsv",
]


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    yerr: np.ndarray | None = None
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.yerr is not None:
            self.yerr = np.asarray(self.yerr, dtype=np.float64)
            if self.yerr.shape != self.x.shape:
                raise ValueError("yerr length differs from x")
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise ValueError("x and y must be 1-d arrays of equal length")
        dx = np.diff(self.x)
        if self.x.size > 1 and not (np.all(dx > 0) or np.all(dx < 0)):
            raise ValueError("x must be strictly monotone")

    def sorted(self) -> "Series":
        o = np.argsort(self.x)
        err = None if self.yerr is None else self.yerr[o]
        return Series(self.x[o], self.y[o], err, dict(self.labels))


def series_from_mc(mc, observable: str, direction: str = "both") -> Series:
    d = mc.select(direction)
    return Series(d["T"], d[observable], d[observable + "_err"],
                  {"observable": observable, "direction": direction})


def dualize_energy(s: Series) -> Series:
    """Map a per-bond energy curve ``eps(T)`` of one model onto the dual model:
    ``eps*(K*) = -sinh(2K) eps(K) - cosh(2K)`` at ``T* = 1/K*`` (``J = 1``)."""
    if np.any(s.x <= 0):
        raise ValueError("temperatures must be positive")
    K = 1.0 / s.x
    Ks = np.array([kw_dual(k) for k in K])
    y = -np.sinh(2 * K) * s.y - np.cosh(2 * K)
    err = None if s.yerr is None else np.sinh(2 * K) * s.yerr
    labels = dict(s.labels, dualized=not s.labels.get("dualized", False))
    return Series(1.0 / Ks, y, err, labels).sorted()


class PeakFit(NamedTuple):
    x_m: float
    y_m: float
    x_err: float
    y_err: float
    params: np.ndarray       # x_m, y_m, a2, a3, a4
    cov: np.ndarray
    residual: float          # chi^2 (or RSS without errors)
    success: bool


def _quartic(p, x):
    xm, ym, a2, a3, a4 = p
    u = x - xm
    return ym + a2 * u**2 + a3 * u**3 + a4 * u**4


def quartic_peak_fit(s: Series, window: float = 0.4, maximum: bool = True) -> PeakFit:
    """Fit ``y_m + a2 u^2 + a3 u^3 + a4 u^4`` (``u = x - x_m``) within
    ``window`` of the discrete extremum.

    Starts from the parabola through the extremum and its two neighbours and
    refines with trust-region least squares.  Parameter covariance uses the
    supplied errors as absolute, or the residual variance otherwise.
    """
    s = s.sorted()
    i0 = int(np.argmax(s.y) if maximum else np.argmin(s.y))
    x0 = s.x[i0]
    sel = np.abs(s.x - x0) <= window + 1e-12
    x, y = s.x[sel], s.y[sel]
    sig = s.yerr[sel] if s.yerr is not None else np.ones_like(y)
    if x.size < 7:
        raise ValueError(f"degenerate window: {x.size} points, need >= 7")
    if np.any(sig <= 0):
        raise ValueError("errors must be positive")
    j = int(np.clip(np.searchsorted(x, x0), 1, x.size - 2))
    c2, c1, c0 = np.polyfit(x[j - 1: j + 2], y[j - 1: j + 2], 2)
    if c2 != 0 and (c2 < 0) == maximum:
        xm0 = -c1 / (2 * c2)
        if not x[0] <= xm0 <= x[-1]:
            xm0 = x0
    else:
        xm0 = x0
    p0 = np.array([xm0, np.polyval([c2, c1, c0], xm0), c2, 0.0, 0.0])

    res = least_squares(lambda p: (_quartic(p, x) - y) / sig, p0, method="trf",
                        x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    chi2 = float(2 * res.cost)
    dof = x.size - 5
    try:
        cov = np.linalg.inv(res.jac.T @ res.jac)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"singular quartic fit: {exc}") from exc
    if s.yerr is None:
        cov = cov * (chi2 / dof if dof > 0 else 0.0)
    p = res.x
    return PeakFit(float(p[0]), float(p[1]), float(math.sqrt(max(cov[0, 0], 0.0))),
                   float(math.sqrt(max(cov[1, 1], 0.0))), p, cov, chi2, bool(res.success))


def extrapolate_infinite_size(points: Sequence[Sequence[float]], mode: str = "linear",
                              max_linear_points: int = 4) -> tuple[float, float]:
    """Intercept at ``x = n^(-1/2) = 0`` of a weighted polynomial fit.

    ``points`` holds ``(n, T)`` or ``(n, T, err)``.  Linear mode keeps only the
    ``max_linear_points`` points with the smallest ``x``.
    """
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] not in (2, 3):
        raise ValueError("points must be (n, T) or (n, T, err) rows")
    deg = {"linear": 1, "quadratic": 2}.get(mode)
    if deg is None:
        raise ValueError(f"unknown mode {mode!r}")
    x = arr[:, 0] ** -0.5
    o = np.lexsort((arr[:, 1], x))
    arr, x = arr[o], x[o]
    if mode == "linear":
        arr, x = arr[:max_linear_points], x[:max_linear_points]
    if len(x) < deg + 1:
        raise ValueError(f"{mode} extrapolation needs at least {deg + 1} points")
    y = arr[:, 1]
    has_err = arr.shape[1] == 3
    w = 1.0 / arr[:, 2] if has_err else np.ones_like(y)
    X = np.vander(x, deg + 1, increasing=True)
    A = X * w[:, None]
    coef, *_ = np.linalg.lstsq(A, y * w, rcond=None)
    cov = np.linalg.pinv(A.T @ A)
    dof = len(x) - (deg + 1)
    if not has_err:
        rss = float(((X @ coef - y) ** 2).sum())
        cov = cov * (rss / dof if dof > 0 else 0.0)
    return float(coef[0]), float(math.sqrt(max(cov[0, 0], 0.0)))


class Crossing(NamedTuple):
    lo: float
    hi: float
    estimate: float


def binder_crossing(a: Series, b: Series) -> list[Crossing]:
    """All sign changes of ``y_a - y_b`` over the overlap of the two grids,
    with ``b`` linearly interpolated onto ``a``'s points (and vice versa)."""
    a, b = a.sorted(), b.sorted()
    lo, hi = max(a.x[0], b.x[0]), min(a.x[-1], b.x[-1])
    if lo >= hi:
        raise ValueError("series do not overlap")
    xs = np.union1d(a.x, b.x)
    xs = xs[(xs >= lo) & (xs <= hi)]
    diff = np.interp(xs, a.x, a.y) - np.interp(xs, b.x, b.y)
    out = []
    for i in range(len(xs) - 1):
        d0, d1 = diff[i], diff[i + 1]
        if d0 == 0:
            out.append(Crossing(xs[i], xs[i], xs[i]))
        elif d0 * d1 < 0:
            t = d0 / (d0 - d1)
            out.append(Crossing(xs[i], xs[i + 1], xs[i] + t * (xs[i + 1] - xs[i])))
    if len(xs) and diff[-1] == 0:
        out.append(Crossing(xs[-1], xs[-1], xs[-1]))
    return out


def write_tsv(path, columns: dict[str, Sequence[float]], header: str = "") -> None:
    names = list(columns)
    rows = zip(*(columns[k] for k in names))
    lines = [f"# {line}" for line in header.splitlines()] if header else []
    lines.append("\t".join(names))
    lines += ["\t".join(f"{v:.10g}" for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")
