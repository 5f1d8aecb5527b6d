"""Monte Carlo engines (single-spin Metropolis and Wolff clusters) and the
cooling-heating measurement protocol.

Couplings are ``J = 1`` times the disorder signs; temperature enters as
``1/T``.  In this layer the model's ``h`` is read as the field ``h'`` in units
of ``J`` and its ``K`` is ignored, since the temperature comes from the
schedule.

Random numbers come from numba's internal generator, reseeded from a
SplitMix64-derived seed at the start of every run, so a fixed schedule seed
gives bit-identical measurement streams.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

from .errors import ConfigError
from .model import IsingModel
from .rng import derive_seed

__all__ = [
    "Schedule",
    "MCSeries",
    "metropolis_sweep",
    "wolff_update",
    "run_schedule",
    "error_bars",
    "estimate_observables",
    "CSV_COLUMNS",
]

CSV_COLUMNS = ["T", "m", "m_err", "chi", "chi_err", "eps", "eps_err", "C", "C_err",
               "U4", "U4_err", "n_samples", "direction"]
OBSERVABLES = ("m", "chi", "eps", "C", "U4")


# ---------------------------------------------------------------------------
# compiled model layout

@dataclass(frozen=True)
class _Layout:
    r: int
    n: int
    sg: np.ndarray        # (n,) bond signs
    bptr: np.ndarray      # CSR: spins of each bond
    bsp: np.ndarray
    vptr: np.ndarray      # CSR: bonds of each spin
    vb: np.ndarray
    nptr: np.ndarray      # CSR: neighbours (one entry per bond) for two-body models
    nbr: np.ndarray
    two_body: bool


def _layout(m: IsingModel) -> _Layout:
    cols = m.theta.column_supports()
    rows = m.theta.row_supports()
    bptr = np.zeros(m.n + 1, dtype=np.int64)
    bptr[1:] = np.cumsum([len(c) for c in cols])
    bsp = np.array([v for c in cols for v in c], dtype=np.int64)
    vptr = np.zeros(m.r + 1, dtype=np.int64)
    vptr[1:] = np.cumsum([len(rw) for rw in rows])
    vb = np.array([b for rw in rows for b in rw], dtype=np.int64)
    two_body = all(len(c) == 2 for c in cols)
    if two_body:
        nb: list[list[int]] = [[] for _ in range(m.r)]
        for i, j in cols:
            nb[i].append(j)
            nb[j].append(i)
        nptr = np.zeros(m.r + 1, dtype=np.int64)
        nptr[1:] = np.cumsum([len(x) for x in nb])
        nbr = np.array([w for x in nb for w in x], dtype=np.int64)
    else:
        nptr, nbr = np.zeros(m.r + 1, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return _Layout(m.r, m.n, m.signs, bptr, bsp, vptr, vb, nptr, nbr, two_body)


# ---------------------------------------------------------------------------
# kernels

@numba.njit(cache=True)
def _seed(s):
    np.random.seed(s)


@numba.njit(cache=True)
def _random_spins(r):
    S = np.empty(r, dtype=np.int8)
    for v in range(r):
        S[v] = 1 if np.random.random() < 0.5 else -1
    return S


@numba.njit(cache=True)
def _bond_values(S, bptr, bsp):
    n = len(bptr) - 1
    R = np.empty(n, dtype=np.int8)
    for b in range(n):
        p = 1
        for q in range(bptr[b], bptr[b + 1]):
            p *= S[bsp[q]]
        R[b] = p
    return R


@numba.njit(cache=True)
def _energy(R, sg):
    e = 0.0
    for b in range(len(R)):
        e -= sg[b] * R[b]
    return e


@numba.njit(cache=True)
def _metropolis(S, R, sg, vptr, vb, beta, hf, nsweeps, Eout, Mout):
    r = len(S)
    acc = 0
    for t in range(nsweeps):
        for _ in range(r):
            v = np.random.randint(0, r)
            loc = 0.0
            for q in range(vptr[v], vptr[v + 1]):
                b = vb[q]
                loc += sg[b] * R[b]
            dlog = -2.0 * beta * (loc + hf * S[v])
            if dlog >= 0.0 or np.random.random() < math.exp(dlog):
                S[v] = -S[v]
                for q in range(vptr[v], vptr[v + 1]):
                    R[vb[q]] = -R[vb[q]]
                acc += 1
        Eout[t] = _energy(R, sg)
        m = 0
        for v in range(r):
            m += S[v]
        Mout[t] = m
    return acc


@numba.njit(cache=True)
def _wolff(S, nptr, nbr, bptr, bsp, beta, nupd, Eout, Mout, sizes):
    r = len(S)
    padd = 1.0 - math.exp(-2.0 * beta)
    stack = np.empty(r, dtype=np.int64)
    n = len(bptr) - 1
    for t in range(nupd):
        v0 = np.random.randint(0, r)
        s0 = S[v0]
        S[v0] = -s0
        stack[0] = v0
        top = 1
        size = 1
        while top > 0:
            top -= 1
            u = stack[top]
            for q in range(nptr[u], nptr[u + 1]):
                w = nbr[q]
                if S[w] == s0 and np.random.random() < padd:
                    S[w] = -s0
                    stack[top] = w
                    top += 1
                    size += 1
        sizes[t] = size
        e = 0.0
        for b in range(n):
            e -= S[bsp[bptr[b]]] * S[bsp[bptr[b] + 1]]
        Eout[t] = e
        m = 0
        for v in range(r):
            m += S[v]
        Mout[t] = m


def _check_wolff(m: IsingModel, lay: _Layout) -> None:
    if not lay.two_body:
        raise ConfigError("Wolff updates need a two-body model")
    if m.e.bits:
        raise ConfigError("Wolff updates need e = 0 (no disorder)")
    if m.h:
        raise ConfigError("Wolff updates need zero field")


def _spins(s, r: int) -> np.ndarray:
    s = np.asarray(s, dtype=np.int8)
    if s.shape != (r,) or not np.all(np.abs(s) == 1):
        raise ValueError(f"spin configuration must be +-1 of length {r}")
    return s.copy()


def _numba_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**32 - 1))


def metropolis_sweep(m: IsingModel, s, T: float, rng: np.random.Generator,
                     h_field: float | None = None) -> tuple[np.ndarray, int]:
    """One Metropolis sweep of ``r`` proposals at uniformly random sites;
    returns ``(new spins, accepted flips)``.

    Random sites rather than a fixed order: with a fixed order, zero-cost flips
    (always accepted) can lock even-degree graphs into a deterministic cycle
    that flips every spin on every sweep.
    """
    if not T > 0:
        raise ValueError("temperature must be positive")
    lay = _layout(m)
    S = _spins(s, m.r)
    R = _bond_values(S, lay.bptr, lay.bsp)
    _seed(_numba_seed(rng))
    E, M = np.empty(1), np.empty(1, dtype=np.int64)
    hf = m.h if h_field is None else h_field
    acc = _metropolis(S, R, lay.sg, lay.vptr, lay.vb, 1.0 / T, hf, 1, E, M)
    return S, int(acc)


def wolff_update(m: IsingModel, s, T: float, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Grow and flip one Wolff cluster; returns ``(new spins, cluster size)``."""
    if not T > 0:
        raise ValueError("temperature must be positive")
    lay = _layout(m)
    _check_wolff(m, lay)
    S = _spins(s, m.r)
    _seed(_numba_seed(rng))
    E, M, sz = np.empty(1), np.empty(1, dtype=np.int64), np.empty(1, dtype=np.int64)
    _wolff(S, lay.nptr, lay.nbr, lay.bptr, lay.bsp, 1.0 / T, 1, E, M, sz)
    return S, int(sz[0])


# ---------------------------------------------------------------------------
# error analysis

def error_bars(x, min_blocks: int = 16) -> float:
    """Standard error of the mean of a correlated series by blocking.

    Block sizes double until fewer than ``min_blocks`` blocks remain; the
    estimate at each level is ``std(block means)/sqrt(blocks)``.  The result is
    the first level whose successor does not exceed it by more than its own
    statistical uncertainty (the plateau), or the largest estimate if the
    curve never flattens.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size < 16:
        raise ValueError("need at least 16 samples")
    levels = []
    y = x
    while y.size >= min_blocks:
        nb = y.size
        se = y.std(ddof=1) / math.sqrt(nb)
        levels.append((se, se / math.sqrt(2.0 * (nb - 1))))
        y = 0.5 * (y[: nb // 2 * 2 : 2] + y[1: nb // 2 * 2 : 2])
    if not levels:
        return float(x.std(ddof=1) / math.sqrt(x.size))
    for (se, dse), (se2, _) in zip(levels, levels[1:]):
        if se2 - se <= dse:
            return float(se)
    return float(max(se for se, _ in levels))


def _observables(sums: np.ndarray, T: float, r: int, n: int) -> np.ndarray:
    # sums: count, |M|, M^2, M^4, E, E^2
    cnt = sums[0]
    aM, M2, M4, E1, E2 = sums[1:] / cnt
    return np.array([
        aM / r,
        (M2 - aM**2) / (r * T**2),
        E1 / n,
        (E2 - E1**2) / (n * T**2),
        1.0 - M4 / (3.0 * M2**2) if M2 > 0 else np.nan,
    ])


def estimate_observables(bins: np.ndarray, T: float, r: int, n: int):
    """Ratio estimators with jackknife errors from per-bin raw sums."""
    bins = np.asarray(bins, dtype=np.float64)
    total = bins.sum(axis=0)
    est = _observables(total, T, r, n)
    B = len(bins)
    if B < 2:
        return est, np.full(5, np.nan)
    jk = np.array([_observables(total - b, T, r, n) for b in bins])
    err = np.sqrt((B - 1) / B * ((jk - jk.mean(axis=0)) ** 2).sum(axis=0))
    return est, err


def _bin_sums(E: np.ndarray, M: np.ndarray, nbins: int) -> np.ndarray:
    aM = np.abs(M).astype(np.float64)
    cols = np.stack([np.ones_like(E), aM, aM**2, aM**4, E, E**2], axis=1)
    return np.array([c.sum(axis=0) for c in np.array_split(cols, nbins)])


# ---------------------------------------------------------------------------
# schedule

@dataclass
class Schedule:
    temperatures: Sequence[float]
    cycles: int = 1
    sweeps_per_T: int = 1024
    algorithm: str = "metropolis"
    seed: int = 0
    runs: int = 1
    discard: float = 0.25
    bins_per_block: int | None = None
    h_field: float | None = None

    def __post_init__(self):
        T = np.asarray(self.temperatures, dtype=np.float64)
        if T.size == 0 or np.any(T <= 0):
            raise ConfigError("temperatures must be positive and non-empty")
        self.temperatures = tuple(sorted(set(T.tolist()), reverse=True))
        if self.cycles < 1 or self.runs < 1:
            raise ConfigError("cycles and runs must be >= 1")
        if self.algorithm not in ("metropolis", "wolff"):
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if not 0.0 <= self.discard < 1.0:
            raise ConfigError("discard fraction must lie in [0, 1)")
        if self.sweeps_per_T * (1 - self.discard) < 2:
            raise ConfigError("too few kept sweeps per temperature")

    @property
    def kept(self) -> int:
        return self.sweeps_per_T - int(self.discard * self.sweeps_per_T)

    def bins(self) -> int:
        if self.bins_per_block is not None:
            return max(1, min(self.bins_per_block, self.kept))
        blocks = self.cycles * self.runs
        return 1 if blocks >= 16 else min(self.kept, -(-32 // blocks))


@dataclass
class MCSeries:
    rows: list[dict]
    meta: dict = field(default_factory=dict)

    def select(self, direction: str = "both") -> dict[str, np.ndarray]:
        rows = sorted((r for r in self.rows if r["direction"] == direction), key=lambda r: r["T"])
        return {c: np.array([r[c] for r in rows]) for c in CSV_COLUMNS if c != "direction"}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            w.writeheader()
            for r in self.rows:
                w.writerow({c: r[c] for c in CSV_COLUMNS})

    @classmethod
    def from_csv(cls, path) -> "MCSeries":
        rows = []
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                row = {c: float(rec[c]) for c in CSV_COLUMNS if c not in ("direction", "n_samples")}
                row["n_samples"] = int(rec["n_samples"])
                row["direction"] = rec["direction"]
                rows.append(row)
        return cls(rows)


def run_schedule(m: IsingModel, sched: Schedule) -> MCSeries:
    """Cooling-heating cycles over the temperature grid.

    Each cycle visits the grid from hot to cold and back; at every visit the
    first ``discard`` fraction of sweeps is dropped and the rest are reduced to
    bin sums.  Rows are reported per temperature for the ``cool`` and ``heat``
    directions separately and pooled (``both``), with jackknife errors over
    bins.
    """
    lay = _layout(m)
    wolff = sched.algorithm == "wolff"
    if wolff:
        _check_wolff(m, lay)
    hf = m.h if sched.h_field is None else sched.h_field
    temps = sched.temperatures
    nb = sched.bins()
    ns, skip = sched.sweeps_per_T, sched.sweeps_per_T - sched.kept
    bins = {(T, d): [] for T in temps for d in ("cool", "heat")}
    E = np.empty(ns)
    M = np.empty(ns, dtype=np.int64)
    sizes = np.empty(ns, dtype=np.int64)
    seeds, accepted, proposals, cluster_total = [], 0, 0, 0
    for run in range(sched.runs):
        s = derive_seed(sched.seed, run) & 0xFFFFFFFF
        seeds.append(s)
        _seed(s)
        S = _random_spins(m.r)
        R = _bond_values(S, lay.bptr, lay.bsp)
        for _ in range(sched.cycles):
            for direction, grid in (("cool", temps), ("heat", temps[::-1])):
                for T in grid:
                    beta = 1.0 / T
                    if wolff:
                        _wolff(S, lay.nptr, lay.nbr, lay.bptr, lay.bsp, beta, ns, E, M, sizes)
                        cluster_total += int(sizes.sum())
                    else:
                        accepted += _metropolis(S, R, lay.sg, lay.vptr, lay.vb, beta, hf,
                                                ns, E, M)
                    proposals += ns * m.r
                    bins[(T, direction)].append(_bin_sums(E[skip:], M[skip:], nb))
    rows = []
    for T in temps:
        groups = {d: np.concatenate(bins[(T, d)]) for d in ("cool", "heat")}
        groups["both"] = np.concatenate([groups["cool"], groups["heat"]])
        for d, b in groups.items():
            est, err = estimate_observables(b, T, m.r, m.n)
            row = {"T": T, "n_samples": int(b[:, 0].sum()), "direction": d}
            for name, v, e in zip(OBSERVABLES, est, err):
                row[name] = float(v)
                row[name + "_err"] = float(e)
            rows.append(row)
    meta = {"schedule": {k: (list(v) if isinstance(v, tuple) else v)
                         for k, v in asdict(sched).items()},
            "run_seeds": seeds, "r": m.r, "n": m.n}
    if wolff:
        meta["mean_cluster_fraction"] = cluster_total / max(proposals, 1)
    else:
        meta["acceptance"] = accepted / max(proposals, 1)
    return MCSeries(rows, meta)
