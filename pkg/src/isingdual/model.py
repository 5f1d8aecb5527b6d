"""Ising models in coupling-matrix (Wegner) form.

The weight of a spin configuration ``S`` is::

    exp( K * sum_b (-1)^{e_b} R_b  +  h * sum_v S_v ),   R_b = prod_v S_v^{theta[v, b]}

``K`` and ``h`` are the dimensionless products ``beta*J`` and ``beta*h'``.
Temperatures only appear in the Monte Carlo and analysis layers (``T = 1/K``
with ``J = 1``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .gf2 import BinMatrix, BitVector, read_matrix, write_matrix
from .rng import uniform_stream

__all__ = [
    "IsingModel",
    "DisorderEnsemble",
    "bond_value",
    "energy",
    "frustration",
    "gauge_transform",
    "sample_disorder",
    "check_spins",
    "save_model",
    "load_model",
]


@dataclass(frozen=True)
class IsingModel:
    theta: BinMatrix
    K: float = 0.0
    h: float = 0.0
    e: BitVector | None = None

    def __post_init__(self):
        if self.e is None:
            object.__setattr__(self, "e", BitVector.zeros(self.theta.ncols))
        if self.e.length != self.theta.ncols:
            raise ValueError(f"disorder length {self.e.length} != bond count {self.theta.ncols}")
        if not (math.isfinite(self.K) and math.isfinite(self.h)):
            raise ValueError("K and h must be finite")

    @property
    def r(self) -> int:
        return self.theta.nrows

    @property
    def n(self) -> int:
        return self.theta.ncols

    @cached_property
    def sparsity(self) -> tuple[int, int]:
        """``(l, m)``: maximum column weight and maximum row weight."""
        cw = self.theta.column_weights()
        rw = self.theta.row_weights()
        return (max(cw, default=0), max(rw, default=0))

    @cached_property
    def bond_spins(self) -> list[list[int]]:
        return self.theta.column_supports()

    @property
    def signs(self) -> np.ndarray:
        """``(-1)^{e_b}`` as a float array."""
        return 1.0 - 2.0 * self.e.to_array(np.float64)

    def with_(self, **kw) -> "IsingModel":
        return replace(self, **kw)

    def is_two_body(self) -> bool:
        return all(w == 2 for w in self.theta.column_weights())


@dataclass(frozen=True)
class DisorderEnsemble:
    p: float
    seed: int = 0
    samples: int = 100

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"flip probability {self.p} outside [0, 1]")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")


def check_spins(s, r: int) -> np.ndarray:
    s = np.asarray(s)
    if s.shape != (r,):
        raise ValueError(f"spin configuration must have length {r}")
    if not np.all((s == 1) | (s == -1)):
        raise ValueError("spins must be +1 or -1")
    return s


def bond_value(m: IsingModel, s, b: int) -> int:
    """``R_b``: product of the spins in column ``b`` of theta."""
    s = check_spins(s, m.r)
    if not 0 <= b < m.n:
        raise IndexError(f"bond {b} out of range")
    val = 1
    for v in m.bond_spins[b]:
        val *= int(s[v])
    return val


def energy(m: IsingModel, s) -> tuple[float, float]:
    """Return ``(E_bonds, E_field)`` with ``E_bonds = -sum_b (-1)^{e_b} R_b``
    and ``E_field = -sum_v S_v``; the Boltzmann exponent is
    ``-(K * E_bonds + h * E_field)``."""
    s = check_spins(s, m.r)
    sg = m.signs
    eb = 0.0
    for b, spins in enumerate(m.bond_spins):
        eb -= sg[b] * np.prod(s[spins]) if spins else sg[b]
    return float(eb), float(-np.sum(s))


def frustration(m: IsingModel, H: BinMatrix) -> BitVector:
    """Syndrome ``s = e H^T``."""
    if H.ncols != m.n:
        raise ValueError(f"H has {H.ncols} columns, model has {m.n} bonds")
    return H.mul_vec(m.e)


def gauge_transform(m: IsingModel, alpha: BitVector) -> IsingModel:
    """Flip the spins selected by ``alpha`` and the bonds they touch:
    ``e -> e + alpha theta``."""
    if alpha.length != m.r:
        raise ValueError(f"alpha length {alpha.length} != spin count {m.r}")
    return m.with_(e=m.e + m.theta.vec_mul(alpha))


def sample_disorder(ens: DisorderEnsemble, n: int) -> list[BitVector]:
    """i.i.d. bond flips with probability ``p`` from the SplitMix64 stream.

    Sample ``i``, bond ``b`` consumes stream position ``i * n + b``.
    """
    u = uniform_stream(ens.seed, 0, ens.samples * n).reshape(ens.samples, n)
    flips = u < ens.p
    return [BitVector.from_array(row) for row in flips]


def disorder_matrix(vectors) -> np.ndarray:
    """Stack bit vectors into a ``(count, n)`` uint8 array."""
    return np.array([v.to_array() for v in vectors], dtype=np.uint8)


# ---------------------------------------------------------------------------
# model file = matrix file + JSON sidecar

def save_model(m: IsingModel, matrix_path, sidecar_path=None, seed: int | None = None,
               p: float | None = None) -> None:
    write_matrix(m.theta, matrix_path)
    side = {"K": m.K, "h": m.h, "e": m.e.support()}
    if p is not None:
        side["p"] = p
    if seed is not None:
        side["seed"] = seed
    sidecar = Path(sidecar_path) if sidecar_path else Path(str(matrix_path) + ".json")
    sidecar.write_text(json.dumps(side, indent=2) + "\n")


def load_model(matrix_path, sidecar_path=None) -> IsingModel:
    theta = read_matrix(matrix_path)
    sidecar = Path(sidecar_path) if sidecar_path else Path(str(matrix_path) + ".json")
    if not sidecar.exists():
        return IsingModel(theta)
    try:
        side = json.loads(sidecar.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"bad model sidecar {sidecar}: {exc}") from exc
    K = float(side.get("K", 0.0))
    h = float(side.get("h", 0.0))
    if "e" in side:
        e = BitVector.from_indices(side["e"], theta.ncols)
    elif "p" in side:
        ens = DisorderEnsemble(float(side["p"]), int(side.get("seed", 0)), 1)
        e = sample_disorder(ens, theta.ncols)[0]
    else:
        e = None
    return IsingModel(theta, K, h, e)
