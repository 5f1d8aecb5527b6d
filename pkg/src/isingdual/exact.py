"""Brute-force thermodynamics for small Ising models (``r <= 24`` spins).

Spin configurations are integers: bit ``v`` set means ``S_v = -1``.  A bond
value is then ``R_b = (-1)^popcount(config & mask_b)``.  Configurations are
processed in chunks; for each chunk the bond table ``R`` (configs x bonds) is
built once and contracted against one or many disorder sign vectors with a
matrix product, so a whole disorder batch costs a single pass.  All sums are
accumulated in the log domain with a running maximum.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from .bounds import kw_dual
from .css import CssPair, build_H_star, class_distances, defect_distance
from .errors import InfeasibleSizeError, InvariantViolation, NumericalFailure
from .gf2 import BinMatrix, BitVector, dual_matrix, rank
from .model import DisorderEnsemble, IsingModel, disorder_matrix, sample_disorder

log = logging.getLogger(__name__)

ENUM_CAP = 24
EXHAUSTIVE_DISORDER_MAX_N = 16
_CHUNK_BITS = 16
_CACHE_BYTES = 64 << 20

__all__ = [
    "ENUM_CAP",
    "ExactReport",
    "TensionReport",
    "partition_function",
    "log_partition_batch",
    "spin_average",
    "bond_averages",
    "magnetizations",
    "homological_difference",
    "defect_delta",
    "defect_tension",
    "area_law_exponent",
    "weighted_average_tension",
    "verify_duality",
    "verify_em_duality",
    "energy_cumulants",
    "correlation_exponent",
    "disorder_average",
    "density_of_states",
    "thermal_observables",
    "exact_report",
]


# ---------------------------------------------------------------------------
# enumeration kernels

def _check_cap(r: int, cap: int = ENUM_CAP) -> None:
    if r > cap:
        raise InfeasibleSizeError(f"2^{r} configurations exceed the enumeration cap 2^{cap}")


def _masks(theta: BinMatrix) -> np.ndarray:
    return np.array([sum(1 << v for v in col) for col in theta.column_supports()],
                    dtype=np.uint64).reshape(-1)


def _chunk_tables(theta: BinMatrix, start: int, stop: int):
    configs = np.arange(start, stop, dtype=np.uint64)
    masks = _masks(theta)
    par = np.bitwise_count(configs[:, None] & masks[None, :]) & 1
    R = 1.0 - 2.0 * par.astype(np.float64)
    M = theta.nrows - 2 * np.bitwise_count(configs).astype(np.int64)
    return configs, R, M


@lru_cache(maxsize=16)
def _cached_table(theta: BinMatrix):
    return _chunk_tables(theta, 0, 1 << theta.nrows)


def _chunks(theta: BinMatrix):
    r = theta.nrows
    _check_cap(r)
    total = 1 << r
    if total * max(theta.ncols, 1) * 8 <= _CACHE_BYTES:
        yield _cached_table(theta)
        return
    step = 1 << _CHUNK_BITS
    for start in range(0, total, step):
        yield _chunk_tables(theta, start, min(total, start + step))


class _LogSumExp:
    """Streaming column-wise log-sum-exp."""

    def __init__(self, width: int):
        self.mx = np.full(width, -np.inf)
        self.s = np.zeros(width)

    def add(self, lw: np.ndarray) -> None:
        bm = lw.max(axis=0)
        new = np.maximum(self.mx, bm)
        with np.errstate(invalid="ignore"):
            scale = np.where(np.isfinite(self.mx), np.exp(self.mx - new), 0.0)
        self.s = self.s * scale + np.exp(lw - new).sum(axis=0)
        self.mx = new

    def result(self) -> np.ndarray:
        return self.mx + np.log(self.s)


def _signs_from(E) -> np.ndarray:
    E = np.atleast_2d(np.asarray(E, dtype=np.float64))
    return 1.0 - 2.0 * E


def log_partition_batch(theta: BinMatrix, K: float, h: float, E) -> np.ndarray:
    """``ln Z_e`` for every row ``e`` of the ``(count, n)`` 0/1 array ``E``."""
    S = _signs_from(E)
    if S.shape[1] != theta.ncols:
        raise ValueError(f"disorder rows have length {S.shape[1]}, expected {theta.ncols}")
    acc = _LogSumExp(S.shape[0])
    for _, R, M in _chunks(theta):
        lw = K * (R @ S.T)
        if h:
            lw = lw + h * M[:, None]
        acc.add(lw)
    return acc.result()


def partition_function(m: IsingModel) -> float:
    """``ln Z`` of the model by full enumeration."""
    return float(log_partition_batch(m.theta, m.K, m.h, m.e.to_array()[None, :])[0])


def _weighted_sums(m: IsingModel, observable: Callable) -> tuple[float, np.ndarray]:
    """Return ``ln Z`` and ``<observable>`` where ``observable(configs, R, M)``
    returns an array with the configuration index on axis 0."""
    lnZ = partition_function(m)
    sg = m.signs
    total = None
    for configs, R, M in _chunks(m.theta):
        lw = m.K * (R @ sg) + m.h * M - lnZ
        w = np.exp(lw)
        part = np.tensordot(w, observable(configs, R, M), axes=(0, 0))
        total = part if total is None else total + part
    return lnZ, total


def _vertex_mask(A: Iterable[int], r: int) -> int:
    mask = 0
    for v in A:
        if not 0 <= v < r:
            raise IndexError(f"vertex {v} out of range")
        mask ^= 1 << v
    return mask


def spin_average(m: IsingModel, A: Iterable[int]) -> float:
    """``<S_A>``; repeated vertices cancel (``S_v^2 = 1``)."""
    mask = _vertex_mask(A, m.r)
    if mask == 0:
        return 1.0
    mk = np.uint64(mask)

    def obs(configs, R, M):
        return 1.0 - 2.0 * (np.bitwise_count(configs & mk) & 1).astype(np.float64)

    _, val = _weighted_sums(m, obs)
    return float(val)


def bond_averages(m: IsingModel) -> np.ndarray:
    """``<R_b>`` for every bond (without the disorder sign)."""
    _, val = _weighted_sums(m, lambda c, R, M: R)
    return np.asarray(val)


def magnetizations(m: IsingModel) -> np.ndarray:
    """``<S_v>`` for every spin."""
    r = m.r

    def obs(configs, R, M):
        bits = (configs[:, None] >> np.arange(r, dtype=np.uint64)[None, :]) & np.uint64(1)
        return 1.0 - 2.0 * bits.astype(np.float64)

    _, val = _weighted_sums(m, obs)
    return np.asarray(val)


def pair_correlations(m: IsingModel) -> np.ndarray:
    """Matrix of ``<S_i S_j>``."""
    r = m.r
    lnZ = partition_function(m)
    sg = m.signs
    C = np.zeros((r, r))
    for configs, R, M in _chunks(m.theta):
        w = np.exp(m.K * (R @ sg) + m.h * M - lnZ)
        bits = (configs[:, None] >> np.arange(r, dtype=np.uint64)[None, :]) & np.uint64(1)
        S = 1.0 - 2.0 * bits.astype(np.float64)
        C += (S * w[:, None]).T @ S
    return C


# ---------------------------------------------------------------------------
# density of states and thermal observables

@dataclass(frozen=True)
class DensityOfStates:
    """Counts of configurations by bond sum ``X = sum_b (-1)^{e_b} R_b`` and
    magnetization ``M = sum_v S_v``."""

    r: int
    n: int
    counts: np.ndarray  # shape (2n+1, r+1): index [X + n, (M + r) // 2]

    def support(self):
        xi, mi = np.nonzero(self.counts)
        return xi - self.n, 2 * mi - self.r, self.counts[xi, mi]

    def log_z(self, K: float, h: float = 0.0) -> float:
        X, M, c = self.support()
        lw = K * X + h * M + np.log(c.astype(np.float64))
        mx = lw.max()
        return float(mx + np.log(np.exp(lw - mx).sum()))

    def weights(self, K: float, h: float = 0.0):
        X, M, c = self.support()
        lw = K * X + h * M + np.log(c.astype(np.float64))
        w = np.exp(lw - lw.max())
        return X, M, w / w.sum()


def density_of_states(theta: BinMatrix, e: BitVector | None = None) -> DensityOfStates:
    n, r = theta.ncols, theta.nrows
    sg = 1.0 - 2.0 * (e.to_array(np.float64) if e is not None else np.zeros(n))
    counts = np.zeros((2 * n + 1) * (r + 1), dtype=np.int64)
    for _, R, M in _chunks(theta):
        X = np.rint(R @ sg).astype(np.int64)
        idx = (X + n) * (r + 1) + (M + r) // 2
        counts += np.bincount(idx, minlength=counts.size)
    return DensityOfStates(r, n, counts.reshape(2 * n + 1, r + 1))


def thermal_observables(theta: BinMatrix, T: float, e: BitVector | None = None,
                        field: float = 0.0, dos: DensityOfStates | None = None) -> dict:
    """Exact counterparts of the Monte Carlo estimators at temperature ``T``
    (``J = 1``): ``m = <|M|>/N``, ``chi = (<M^2> - <|M|>^2)/(N T^2)``,
    ``eps = <E>/n``, ``C = var(E)/(n T^2)``, ``U4 = 1 - <M^4>/(3 <M^2>^2)``,
    with ``E`` the bond energy ``-X``."""
    if T <= 0:
        raise ValueError("temperature must be positive")
    dos = dos or density_of_states(theta, e)
    X, M, w = dos.weights(1.0 / T, field / T)
    N, n = dos.r, dos.n
    E = -X.astype(np.float64)
    aM = np.abs(M).astype(np.float64)
    mA, m2, m4 = (w * aM).sum(), (w * aM**2).sum(), (w * aM**4).sum()
    e1, e2 = (w * E).sum(), (w * E**2).sum()
    return {
        "m": mA / N,
        "chi": (m2 - mA**2) / (N * T**2),
        "eps": e1 / n,
        "C": (e2 - e1**2) / (n * T**2),
        "U4": 1.0 - m4 / (3.0 * m2**2) if m2 > 0 else float("nan"),
    }


# ---------------------------------------------------------------------------
# homological difference, defects and tensions

def homological_difference(p: CssPair, K: float, e: BitVector | None = None) -> float:
    """Specific homological difference ``(ln Z_e(H*) - ln Z_e(G)) / n``."""
    e = e if e is not None else BitVector.zeros(p.n)
    return float(homological_difference_batch(p, K, e.to_array()[None, :])[0])


def homological_difference_batch(p: CssPair, K: float, E) -> np.ndarray:
    Hs = build_H_star(p)
    return (log_partition_batch(Hs, K, 0.0, E) - log_partition_batch(p.G, K, 0.0, E)) / p.n


def defect_delta(m: IsingModel, c: BitVector) -> float:
    """Free energy increment ``ln Z_e - ln Z_{e+c}`` of adding defect ``c``."""
    E = np.stack([m.e.to_array(), (m.e + c).to_array()])
    lz = log_partition_batch(m.theta, m.K, m.h, E)
    return float(lz[0] - lz[1])


def defect_tension(m: IsingModel, c: BitVector) -> float:
    """``delta / d_c`` with ``d_c`` the minimum weight equivalent to ``c``."""
    delta = defect_delta(m, c)
    d = defect_distance(c, m.theta)
    if d == 0:
        if abs(delta) > 1e-10:
            raise InvariantViolation(f"defect equivalent to zero has delta={delta:.3e}")
        raise ValueError("tension undefined: defect is equivalent to zero")
    return delta / d


def area_law_exponent(p: CssPair, e: BitVector, K: float) -> float:
    """``-ln <prod_b R_b^{e_b}> / d_e`` in the exact dual of ``G`` at ``K*``."""
    d = defect_distance(e, p.G)
    if d == 0:
        log.info("area-law exponent of a trivial defect set to 0 by convention")
        return 0.0
    dual = dual_matrix(p.G)
    avg = spin_average(IsingModel(dual, kw_dual(K)), dual.mul_vec(e).support())
    if avg <= 0:
        raise NumericalFailure(f"non-positive bond-product average {avg}")
    return -math.log(avg) / d


class TensionReport(NamedTuple):
    tau_bar: float
    zeta: float
    delta_f: float
    rate: float
    d_G: int


def exhaustive_disorders(n: int, p: float) -> tuple[np.ndarray, np.ndarray]:
    """All ``2^n`` disorder vectors and their i.i.d. probabilities."""
    idx = np.arange(1 << n, dtype=np.uint64)
    E = ((idx[:, None] >> np.arange(n, dtype=np.uint64)[None, :]) & np.uint64(1)).astype(np.uint8)
    wt = E.sum(axis=1)
    with np.errstate(divide="ignore"):
        logw = wt * np.log(p) + (n - wt) * np.log1p(-p) if 0 < p < 1 else None
    if logw is None:
        w = (wt == (n if p == 1 else 0)).astype(np.float64)
    else:
        w = np.exp(logw)
    return E, w


def _disorder_batch(n: int, ens: DisorderEnsemble, exhaustive: bool | None):
    if ens.p == 0:
        return np.zeros((1, n), dtype=np.uint8), np.ones(1), True
    if exhaustive is None:
        exhaustive = n <= EXHAUSTIVE_DISORDER_MAX_N
    if exhaustive:
        _check_cap(n, EXHAUSTIVE_DISORDER_MAX_N + 4)
        E, w = exhaustive_disorders(n, ens.p)
        return E, w, True
    E = disorder_matrix(sample_disorder(ens, n))
    return E, np.full(len(E), 1.0 / len(E)), False


def disorder_average(quantity: Callable, n: int, ens: DisorderEnsemble,
                     exhaustive: bool | None = None, vectorized: bool = False):
    """Average ``quantity`` over disorder; returns ``(mean, stderr)``.

    Exhaustive (weighted, stderr 0) when ``n <= 16`` unless told otherwise,
    sampled from ``ens`` otherwise.  ``quantity`` receives a BitVector, or the
    whole ``(count, n)`` array when ``vectorized`` is set.
    """
    E, w, exact = _disorder_batch(n, ens, exhaustive)
    if vectorized:
        vals = np.asarray(quantity(E), dtype=np.float64)
    else:
        vals = np.array([quantity(BitVector.from_array(row)) for row in E], dtype=np.float64)
    mean = float(np.dot(w, vals))
    if exact or len(vals) < 2:
        return mean, 0.0
    return mean, float(vals.std(ddof=1) / math.sqrt(len(vals)))


def weighted_average_tension(p: CssPair, K: float, ens: DisorderEnsemble,
                             exhaustive: bool | None = None, max_k: int = 12) -> TensionReport:
    """Weighted average defect tension over all ``2^k - 1`` nontrivial classes,
    the constant ``zeta`` and the disorder-averaged homological difference.

    Checks ``(1 - 2^-k) d_G / n <= zeta <= 1/2`` and
    ``zeta * tau_bar >= R ln 2 - [Delta f]_p`` before returning.
    """
    if p.k == 0:
        raise ValueError("k = 0: no nontrivial defect classes")
    if p.k > max_k:
        raise InfeasibleSizeError(f"2^{p.k} defect classes exceed the cap 2^{max_k}")
    classes, d = class_distances(p)
    n, k = p.n, p.k
    E, w, _ = _disorder_batch(n, ens, exhaustive)
    C = np.array([c.to_array() for c in classes], dtype=np.uint8)
    shifted = (E[:, None, :] ^ C[None, :, :]).reshape(-1, n)
    lz = log_partition_batch(p.G, K, 0.0, shifted).reshape(len(E), len(classes))
    delta = lz[:, :1] - lz[:, 1:]                      # (disorders, 2^k - 1)
    tau_bar = float(np.dot(w, delta.sum(axis=1)) / d[1:].sum())
    zeta = float(d.sum() / (2**k * n))
    dG = int(d[1:].min())
    df = float(np.dot(w, homological_difference_batch(p, K, E)))
    rate = p.R
    if zeta > 0.5 + 1e-12 or (1 - 2.0**-k) * dG / n > zeta + 1e-12:
        raise InvariantViolation(f"zeta={zeta} outside [{(1 - 2.0**-k) * dG / n}, 1/2]")
    if zeta * tau_bar < rate * math.log(2) - df - 1e-9:
        raise InvariantViolation(
            f"average tension bound violated: {zeta * tau_bar} < {rate * math.log(2) - df}")
    return TensionReport(tau_bar, zeta, df, rate, dG)


# ---------------------------------------------------------------------------
# duality checks

def verify_duality(m: IsingModel) -> float:
    """Residual of ``Z(theta; K) = Z(theta*; K*) 2^(r - n_g*) (sinh K cosh K)^(n/2)``."""
    if m.e.bits or m.h:
        raise ValueError("duality check requires e = 0 and h = 0")
    if m.K <= 0:
        raise ValueError("duality check requires K > 0")
    dual = dual_matrix(m.theta)
    _check_cap(dual.nrows)
    ng = dual.nrows - rank(dual)
    lhs = partition_function(m)
    rhs = (partition_function(IsingModel(dual, kw_dual(m.K)))
           + (m.r - ng) * math.log(2)
           + 0.5 * m.n * math.log(math.sinh(m.K) * math.cosh(m.K)))
    return abs(lhs - rhs)


def verify_em_duality(m: IsingModel, e: BitVector) -> float:
    """Residual of ``Z_e / Z_0 = <prod_b R_b^{e_b}>`` in the dual at ``K*``."""
    base = m.with_(e=None)
    if m.h:
        raise ValueError("electric-magnetic duality check requires h = 0")
    lz = log_partition_batch(m.theta, m.K, 0.0, np.stack([np.zeros(m.n), e.to_array()]))
    lhs = math.exp(lz[1] - lz[0])
    dual = dual_matrix(base.theta)
    rhs = spin_average(IsingModel(dual, kw_dual(m.K)), dual.mul_vec(e).support())
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# high-temperature series

def _cumulants_from_moments(mu: Sequence[Fraction]) -> list[Fraction]:
    # mu[0] = 1; kappa_s = mu_s - sum_{j=1}^{s-1} C(s-1, j-1) kappa_j mu_{s-j}
    kappa = [Fraction(0)]
    for s in range(1, len(mu)):
        acc = mu[s]
        for j in range(1, s):
            acc -= math.comb(s - 1, j - 1) * kappa[j] * mu[s - j]
        kappa.append(acc)
    return kappa[1:]


def energy_cumulants(m: IsingModel, s_max: int, J: float = 1.0, h_field: float = 0.0,
                     per_bond: bool = False) -> list[float]:
    """Cumulants ``kappa_1 .. kappa_{s_max}`` of ``X = J sum_b (-1)^{e_b} R_b
    + h' sum_v S_v`` under the uniform spin measure, computed exactly in
    rational arithmetic.  With ``per_bond`` they are divided by ``n``, which
    is the normalization of the free-energy density series
    ``f = -(r/n) ln 2 - sum_s kappa_s beta^s / s!``."""
    if not 1 <= s_max <= 8:
        raise ValueError("s_max must be in 1..8")
    dos = density_of_states(m.theta, m.e)
    X, M, c = dos.support()
    Jf, hf = Fraction(J), Fraction(h_field)
    total = Fraction(1 << m.r)
    vals = [Jf * int(x) + hf * int(mm) for x, mm in zip(X, M)]
    cnt = [int(v) for v in c]
    mu = [Fraction(1)]
    for s in range(1, s_max + 1):
        mu.append(sum(ci * v**s for ci, v in zip(cnt, vals)) / total)
    kap = _cumulants_from_moments(mu)
    scale = m.n if per_bond else 1
    return [float(x / scale) for x in kap]


# ---------------------------------------------------------------------------
# correlation decay

def graph_distances(theta: BinMatrix) -> np.ndarray:
    """All-pairs BFS distances on the graph whose edges are the columns."""
    from collections import deque

    r = theta.nrows
    adj: list[list[int]] = [[] for _ in range(r)]
    for col in theta.column_supports():
        if len(col) != 2:
            raise ValueError("graph distances need a two-body model")
        i, j = col
        adj[i].append(j)
        adj[j].append(i)
    D = np.full((r, r), -1, dtype=np.int64)
    for s in range(r):
        D[s, s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for v in adj[u]:
                if D[s, v] < 0:
                    D[s, v] = D[s, u] + 1
                    q.append(v)
    return D


class CorrelationExponent(NamedTuple):
    alpha: float
    pair: tuple[int, int] | None
    excluded: list[tuple[int, int]]


def correlation_exponent(m: IsingModel, K: float | None = None) -> CorrelationExponent:
    """``min_{i,j} -ln <S_i S_j> / d_ij`` over connected pairs with positive
    correlation; pairs with ``<S_i S_j> <= 0`` are excluded and listed.
    ``alpha = inf`` means no decay scale (no admissible pair)."""
    if not m.is_two_body():
        raise ValueError("correlation exponent needs a two-body model")
    mm = m if K is None else m.with_(K=K)
    D = graph_distances(mm.theta)
    if mm.K == 0 and mm.h == 0:
        pairs = [(i, j) for i in range(mm.r) for j in range(i + 1, mm.r) if D[i, j] > 0]
        return CorrelationExponent(float("inf"), None, pairs)
    C = pair_correlations(mm)
    best, arg, excluded = float("inf"), None, []
    for i in range(mm.r):
        for j in range(i + 1, mm.r):
            if D[i, j] <= 0:
                continue
            if C[i, j] <= 0:
                excluded.append((i, j))
                continue
            a = -math.log(min(C[i, j], 1.0)) / D[i, j]
            if a < best:
                best, arg = a, (i, j)
    return CorrelationExponent(best, arg, excluded)


# ---------------------------------------------------------------------------
# reports

@dataclass
class ExactReport:
    lnZ: float
    f: float
    averages: dict[str, float] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExactReport":
        return cls(**json.loads(text))


def exact_report(m: IsingModel, vertex_sets: Iterable[Iterable[int]] = ()) -> ExactReport:
    lnZ = partition_function(m)
    averages = {}
    for A in vertex_sets:
        A = sorted(A)
        averages[",".join(map(str, A))] = spin_average(m, A)
    meta = {"r": m.r, "n": m.n, "K": m.K, "h": m.h, "e": m.e.support(),
            "sparsity": list(m.sparsity)}
    return ExactReport(lnZ, -lnZ / m.n, averages, meta)
