"""CSS pairs: homology rank, defect (logical) codewords and code distances.

A pair of binary matrices ``G`` and ``H`` with ``G H^T = 0`` defines a pair of
weakly dual Ising models.  The homology rank is ``k = n - rank G - rank H``;
nontrivial defects are the vectors of ``C_H^perp`` that are not in the
rowspace ``C_G``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .errors import ConfigError, InvariantViolation
from .gf2 import (
    BinMatrix,
    BitVector,
    Echelon,
    coset_min_weights,
    nullspace_basis,
    rank,
    read_matrix,
    row_basis,
    write_matrix,
)
from .rng import derive_seed

__all__ = [
    "CssPair",
    "build_css",
    "homology_basis",
    "build_H_star",
    "defect_distance",
    "css_distance_exact",
    "css_distance_upper",
    "random_window_search",
    "save_pair",
    "load_pair",
]


@dataclass(frozen=True)
class CssPair:
    G: BinMatrix
    H: BinMatrix
    rank_G: int
    rank_H: int

    @property
    def n(self) -> int:
        return self.G.ncols

    @property
    def k(self) -> int:
        return self.n - self.rank_G - self.rank_H

    @property
    def R(self) -> float:
        return self.k / self.n

    def swapped(self) -> "CssPair":
        """The pair ``(H, G)``: the other model of the weakly dual couple."""
        return CssPair(self.H, self.G, self.rank_H, self.rank_G)


def build_css(G: BinMatrix, H: BinMatrix) -> CssPair:
    if G.ncols != H.ncols:
        raise ConfigError(f"column mismatch: G has {G.ncols}, H has {H.ncols}")
    for i, g in enumerate(G.rows):
        for j, h in enumerate(H.rows):
            if (g & h).bit_count() & 1:
                raise InvariantViolation(
                    f"rows not orthogonal: G row {i} and H row {j}")
    return CssPair(G, H, rank(G), rank(H))


def _logical_rows(G: BinMatrix, H: BinMatrix) -> list[int]:
    # Quotient basis of ker(H) modulo rowspace(G), scanned in nullspace order.
    ech = Echelon(G.ncols)
    for r in G.rows:
        ech.add(r)
    out = []
    for v in nullspace_basis(H).rows:
        if ech.add(v):
            out.append(v)
    return out


def homology_basis(p: CssPair) -> list[BitVector]:
    """``k`` defect vectors: ``H c^T = 0`` and independent modulo ``C_G``."""
    rows = _logical_rows(p.G, p.H)
    if len(rows) != p.k:
        raise InvariantViolation(f"found {len(rows)} homology vectors, expected k={p.k}")
    return [BitVector(v, p.n) for v in rows]


def build_H_star(p: CssPair) -> BinMatrix:
    """Exact dual of ``H`` built as the rows of ``G`` plus a homology basis."""
    extra = tuple(c.bits for c in homology_basis(p))
    return BinMatrix(p.G.rows + extra, p.n)


def defect_distance(e: BitVector, M: BinMatrix) -> int:
    """Minimum weight in the class ``e + rowspace(M)`` (exhaustive)."""
    if e.length != M.ncols:
        raise ValueError(f"length mismatch: {e.length} vs {M.ncols}")
    return int(coset_min_weights([e.bits], row_basis(M), M.ncols)[0])


def class_distances(p: CssPair) -> tuple[list[BitVector], np.ndarray]:
    """All ``2^k`` defect classes (combinations of the homology basis) and
    their minimum weights ``d_c`` (``d_0 = 0`` first)."""
    basis = [c.bits for c in homology_basis(p)]
    combos = []
    for mask in range(1 << len(basis)):
        v = 0
        for i, b in enumerate(basis):
            if (mask >> i) & 1:
                v ^= b
        combos.append(v)
    d = coset_min_weights(combos, row_basis(p.G), p.n)
    return [BitVector(v, p.n) for v in combos], d


def _one_side_exact(p: CssPair) -> int:
    basis = [c.bits for c in homology_basis(p)]
    offsets = []
    for mask in range(1, 1 << len(basis)):
        v = 0
        for i, b in enumerate(basis):
            if (mask >> i) & 1:
                v ^= b
        offsets.append(v)
    return int(coset_min_weights(offsets, row_basis(p.G), p.n).min())


def css_distance_exact(p: CssPair) -> tuple[int, int] | None:
    """Exact ``(d_G, d_H)`` by exhaustive enumeration; None when ``k = 0``."""
    if p.k == 0:
        return None
    return _one_side_exact(p), _one_side_exact(p.swapped())


# ---------------------------------------------------------------------------
# random window (information set) search

@numba.njit(cache=True)
def _rref_words(A, ncols):
    # In-place GF(2) RREF of packed rows; pivots scanned left to right.
    nrows, nw = A.shape
    r = 0
    for col in range(ncols):
        if r == nrows:
            break
        w = col >> 6
        bit = np.uint64(1) << np.uint64(col & 63)
        piv = -1
        for i in range(r, nrows):
            if A[i, w] & bit:
                piv = i
                break
        if piv < 0:
            continue
        if piv != r:
            for t in range(nw):
                tmp = A[r, t]
                A[r, t] = A[piv, t]
                A[piv, t] = tmp
        for i in range(nrows):
            if i != r and (A[i, w] & bit):
                for t in range(nw):
                    A[i, t] ^= A[r, t]
        r += 1
    return r


def _pack_bool(a: np.ndarray) -> np.ndarray:
    nr, n = a.shape
    nw = (n + 63) // 64
    padded = np.zeros((nr, nw * 64), dtype=bool)
    padded[:, :n] = a
    return np.packbits(padded, axis=1, bitorder="little").view(np.uint64).reshape(nr, nw)


def _unpack_bool(w: np.ndarray, n: int) -> np.ndarray:
    return np.unpackbits(w.view(np.uint8), axis=-1, bitorder="little")[..., :n].astype(bool)


@dataclass
class WindowResult:
    weight: int | None
    codeword: BitVector | None
    trials_run: int
    history: list[int] = field(default_factory=list)


def random_window_search(p: CssPair, trials: int = 10_000, seed: int = 0,
                         early_stop: bool = True) -> WindowResult:
    """Upper bound on ``d_G`` by randomized information-set search.

    Each trial permutes the columns of a generator matrix of ``C_H^perp``,
    brings it to reduced echelon form and inspects every row: each row is a
    codeword supported on one information position plus the redundancy
    window.  Rows that are nontrivial (odd overlap with some ``H``-type
    logical) update the running minimum.  Trial ``i`` uses the seed
    ``derive_seed(seed, i)``, so the running minimum over a fixed seed never
    increases with the trial budget.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if p.k == 0:
        return WindowResult(None, None, 0)
    n = p.n
    gen = nullspace_basis(p.H).to_array().astype(bool)
    anti = np.array([c.to_array() for c in homology_basis(p.swapped())], dtype=bool)
    best_w: int | None = None
    best_c = None
    last_improved = 0
    history = []
    t = 0
    for t in range(trials):
        rng = np.random.default_rng(derive_seed(seed, t))
        perm = rng.permutation(n)
        A = _pack_bool(gen[:, perm])
        nr = _rref_words(A, n)
        A = A[:nr]
        wts = np.bitwise_count(A).sum(axis=1)
        cand = np.flatnonzero(wts < best_w) if best_w is not None else np.arange(nr)
        if cand.size:
            cand = cand[np.argsort(wts[cand], kind="stable")]
            B = _pack_bool(anti[:, perm])
            for i in cand:
                par = np.bitwise_count(B & A[i]).sum(axis=1) & 1
                if par.any():
                    w = int(wts[i])
                    if best_w is None or w < best_w:
                        row = _unpack_bool(A[i], n)
                        c = np.zeros(n, dtype=bool)
                        c[perm] = row
                        best_w, best_c = w, c
                        last_improved = t
                    break
        history.append(best_w if best_w is not None else -1)
        if early_stop and t - last_improved >= trials // 2 and t >= 1:
            break
    codeword = BitVector.from_array(best_c) if best_c is not None else None
    if codeword is not None:
        # re-verify: in ker(H) and not in rowspace(G)
        if p.H.mul_vec(codeword).bits:
            raise InvariantViolation("random window returned a vector outside ker(H)")
        ech = Echelon(n)
        for r in p.G.rows:
            ech.add(r)
        if ech.contains(codeword.bits):
            raise InvariantViolation("random window returned a trivial codeword")
    return WindowResult(best_w, codeword, t + 1, history)


def css_distance_upper(p: CssPair, trials: int = 10_000, seed: int = 0) -> int | None:
    """Upper bound on ``d_G``; None if ``k = 0``."""
    return random_window_search(p, trials, seed).weight


# ---------------------------------------------------------------------------
# serialization: G.txt, H.txt and a JSON header

def save_pair(p: CssPair, directory, distance: int | None = None,
              provenance: str = "") -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_matrix(p.G, d / "G.txt")
    write_matrix(p.H, d / "H.txt")
    header = {"n": p.n, "k": p.k, "rank_G": p.rank_G, "rank_H": p.rank_H,
              "distance": distance, "provenance": provenance}
    (d / "code.json").write_text(json.dumps(header, indent=2) + "\n")


def load_pair(directory) -> CssPair:
    d = Path(directory)
    p = build_css(read_matrix(d / "G.txt"), read_matrix(d / "H.txt"))
    hdr = d / "code.json"
    if hdr.exists():
        meta = json.loads(hdr.read_text())
        if meta.get("k") is not None and meta["k"] != p.k:
            raise InvariantViolation(f"header k={meta['k']} but matrices give k={p.k}")
    return p


def euler_k(r: int, n: int, faces: int) -> int:
    """Homology rank of a closed orientable surface tiling, ``n - r - f + 2``."""
    return n - r - faces + 2


def asymptotic_rate(f: int, d: int) -> float:
    return 1.0 - 2.0 / f - 2.0 / d
