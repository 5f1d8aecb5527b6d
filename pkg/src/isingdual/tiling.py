"""Lattices on closed surfaces: square tori and ``{f, d}`` quotients of van
Dyck groups built by Todd-Coxeter coset enumeration.

Words are strings over ``a, b, A, B`` with ``A = a^-1`` and ``B = b^-1``.  For
a finite quotient the enumeration over the trivial subgroup gives the regular
action of the group on itself; vertices, edges and faces are then the orbits
of right multiplication by ``a``, ``ab`` and ``b`` (the cosets ``g<a>``,
``g<ab>``, ``g<b>``), and two cells are incident when their cosets intersect.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .css import CssPair, build_css
from .errors import ConfigError, CosetEnumerationError, InvariantViolation
from .gf2 import BinMatrix, rank, read_matrix, write_matrix

log = logging.getLogger(__name__)

__all__ = [
    "GroupPresentation",
    "CosetTable",
    "Tiling",
    "todd_coxeter",
    "build_tiling",
    "square_torus",
    "random_relator",
    "dual_tiling",
    "search_quotients",
    "validate_tiling",
    "save_tiling",
    "load_tiling",
    "free_reduce",
    "invert_word",
    "stored_presentations",
]

LETTERS = "aAbB"
_INDEX = {c: i for i, c in enumerate(LETTERS)}
_INV = (1, 0, 3, 2)


def _parse_word(word: str) -> list[int]:
    try:
        return [_INDEX[c] for c in word]
    except KeyError as exc:
        raise ConfigError(f"bad letter {exc.args[0]!r} in word {word!r}") from None


def free_reduce(word: str) -> str:
    out: list[str] = []
    for c in word:
        if out and out[-1] == c.swapcase():
            out.pop()
        else:
            out.append(c)
    return "".join(out)


def invert_word(word: str) -> str:
    return word[::-1].swapcase()


@dataclass(frozen=True)
class GroupPresentation:
    relators: tuple[str, ...]

    def __post_init__(self):
        for w in self.relators:
            _parse_word(w)

    @classmethod
    def van_dyck(cls, f: int, d: int) -> "GroupPresentation":
        """``<a, b | a^d, b^f, (ab)^2>``: ``a`` rotates about a vertex of degree
        ``d`` and ``b`` about an ``f``-gonal face."""
        return cls(("a" * d, "b" * f, "abab"))

    def with_relators(self, *extra: str) -> "GroupPresentation":
        return GroupPresentation(self.relators + tuple(extra))

    def to_text(self) -> str:
        return "\n".join(self.relators) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GroupPresentation":
        rels = tuple(line.strip() for line in text.splitlines()
                     if line.strip() and not line.lstrip().startswith("#"))
        if not rels:
            raise ConfigError("presentation has no relators")
        return cls(rels)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "GroupPresentation":
        return cls.from_text(Path(path).read_text())


@dataclass(frozen=True)
class CosetTable:
    """Complete coset table: ``action[c, x]`` for letters in ``aAbB`` order."""

    action: np.ndarray

    @property
    def cosets(self) -> int:
        return self.action.shape[0]

    def act(self, c: int, word: str) -> int:
        for x in _parse_word(word):
            c = int(self.action[c, x])
        return c

    def check(self, relators: Iterable[str]) -> None:
        N = self.cosets
        for x in range(4):
            col = self.action[:, x]
            if sorted(col.tolist()) != list(range(N)):
                raise InvariantViolation(f"generator {LETTERS[x]} does not act as a permutation")
            if np.any(self.action[col, _INV[x]] != np.arange(N)):
                raise InvariantViolation(f"generator {LETTERS[x]} and its inverse disagree")
        for w in relators:
            for c in range(N):
                if self.act(c, w) != c:
                    raise InvariantViolation(f"relator {w} not satisfied at coset {c}")


class _Enumerator:
    # HLT coset enumeration with immediate coincidence processing.

    def __init__(self, max_cosets: int):
        self.max_cosets = max_cosets
        self.table: list[list[int]] = [[-1, -1, -1, -1]]
        self.parent: list[int] = [0]

    def define(self, c: int, x: int) -> int:
        n = len(self.table)
        if n >= self.max_cosets:
            raise CosetEnumerationError(
                f"coset enumeration did not close within {self.max_cosets} cosets")
        self.table.append([-1, -1, -1, -1])
        self.parent.append(n)
        self.table[c][x] = n
        self.table[n][_INV[x]] = c
        return n

    def rep(self, c: int) -> int:
        p = self.parent
        root = c
        while p[root] != root:
            root = p[root]
        while p[c] != root:
            p[c], c = root, p[c]
        return root

    def _merge(self, k: int, l: int, queue: list[int]) -> None:
        k, l = self.rep(k), self.rep(l)
        if k == l:
            return
        lo, hi = min(k, l), max(k, l)
        self.parent[hi] = lo
        queue.append(hi)

    def coincidence(self, a: int, b: int) -> None:
        queue: list[int] = []
        self._merge(a, b, queue)
        t = self.table
        i = 0
        while i < len(queue):
            e = queue[i]
            i += 1
            for x in range(4):
                f = t[e][x]
                if f < 0:
                    continue
                xi = _INV[x]
                t[f][xi] = -1
                e1, f1 = self.rep(e), self.rep(f)
                if t[e1][x] >= 0:
                    self._merge(f1, t[e1][x], queue)
                elif t[f1][xi] >= 0:
                    self._merge(e1, t[f1][xi], queue)
                else:
                    t[e1][x] = f1
                    t[f1][xi] = e1

    def scan_and_fill(self, c: int, w: Sequence[int]) -> None:
        t = self.table
        L = len(w)
        while True:
            f, i = c, 0
            b, j = c, L - 1
            while i <= j and t[f][w[i]] >= 0:
                f = t[f][w[i]]
                i += 1
            if i > j:
                if f != b:
                    self.coincidence(f, b)
                return
            while j >= i and t[b][_INV[w[j]]] >= 0:
                b = t[b][_INV[w[j]]]
                j -= 1
            if j < i:
                self.coincidence(f, b)
                return
            if i == j:
                t[f][w[i]] = b
                t[b][_INV[w[i]]] = f
                return
            self.define(f, w[i])
            if self.parent[c] != c:
                return

    def live(self, c: int) -> bool:
        return self.parent[c] == c


def todd_coxeter(pres: GroupPresentation, subgroup: Sequence[str] = (),
                 max_cosets: int = 1_000_000) -> CosetTable:
    """Enumerate the right cosets of ``<subgroup>`` in the presented group.

    Cosets are processed lowest first; each live coset is traced through every
    relator (defining new cosets as needed) and then completed.  Raises
    :class:`CosetEnumerationError` when more than ``max_cosets`` cosets are
    defined, e.g. for an infinite group.
    """
    rels = [_parse_word(w) for w in pres.relators if w]
    en = _Enumerator(max_cosets)
    for w in subgroup:
        if w:
            en.scan_and_fill(0, _parse_word(w))
    c = 0
    while c < len(en.table):
        for w in rels:
            if not en.live(c):
                break
            en.scan_and_fill(c, w)
        if en.live(c):
            for x in range(4):
                if en.table[c][x] < 0:
                    en.define(c, x)
        c += 1
    live = [c for c in range(len(en.table)) if en.live(c)]
    index = {c: i for i, c in enumerate(live)}
    action = np.array([[index[en.rep(en.table[c][x])] for x in range(4)] for c in live],
                      dtype=np.int64)
    table = CosetTable(action)
    table.check(pres.relators)
    return table


def random_relator(length: int, seed: int) -> str:
    """Freely reduced pseudo-random word of the given length."""
    if length < 1:
        raise ValueError("relator length must be >= 1")
    rng = np.random.default_rng(seed)
    out: list[str] = []
    while len(out) < length:
        c = LETTERS[int(rng.integers(4))]
        if out and out[-1] == c.swapcase():
            continue
        out.append(c)
    return "".join(out)


# ---------------------------------------------------------------------------
# tilings

@dataclass(frozen=True)
class Tiling:
    G: BinMatrix   # vertex-edge incidence
    H: BinMatrix   # face-edge incidence
    f: int
    d: int

    @property
    def r(self) -> int:
        return self.G.nrows

    @property
    def n(self) -> int:
        return self.G.ncols

    @property
    def faces(self) -> int:
        return self.H.nrows

    @property
    def euler(self) -> int:
        return self.r - self.n + self.faces

    @property
    def genus(self) -> int:
        return (2 - self.euler) // 2

    def css(self) -> CssPair:
        return build_css(self.G, self.H)

    def header(self) -> dict:
        return {"f": self.f, "d": self.d, "r": self.r, "n": self.n,
                "faces": self.faces, "genus": self.genus}


def validate_tiling(t: Tiling) -> None:
    """Raise :class:`InvariantViolation` naming the first failed check."""
    if t.G.ncols != t.H.ncols:
        raise InvariantViolation("G and H have different edge counts")
    if any(w != 2 for w in t.G.column_weights()):
        raise InvariantViolation("an edge does not have exactly two vertex ends")
    if any(w != 2 for w in t.H.column_weights()):
        raise InvariantViolation("an edge does not border exactly two faces")
    if any(w != t.d for w in t.G.row_weights()):
        raise InvariantViolation(f"vertex degree differs from d={t.d}")
    if any(w != t.f for w in t.H.row_weights()):
        raise InvariantViolation(f"face size differs from f={t.f}")
    for i, g in enumerate(t.G.rows):
        for j, h in enumerate(t.H.rows):
            if (g & h).bit_count() & 1:
                raise InvariantViolation(f"vertex {i} and face {j} share an odd number of edges")
    if (2 - t.euler) % 2:
        raise InvariantViolation(f"odd Euler characteristic {t.euler}")
    if rank(t.G) != t.r - 1:
        raise InvariantViolation("graph is not connected")


def _orbits(perm: np.ndarray) -> np.ndarray:
    """Label each point by its orbit under ``perm``; labels ordered by first point."""
    N = len(perm)
    label = np.full(N, -1, dtype=np.int64)
    nxt = 0
    for s in range(N):
        if label[s] >= 0:
            continue
        c = s
        while label[c] < 0:
            label[c] = nxt
            c = perm[c]
        nxt += 1
    return label


def _incidence(cell_of: np.ndarray, edge_of: np.ndarray, ncells: int, nedges: int) -> BinMatrix:
    supports: list[set[int]] = [set() for _ in range(ncells)]
    for g in range(len(cell_of)):
        supports[cell_of[g]].add(int(edge_of[g]))
    return BinMatrix.from_supports([sorted(s) for s in supports], nedges)


def build_tiling(pres: GroupPresentation, f: int, d: int,
                 max_cosets: int = 1_000_000) -> Tiling:
    """Tiling of the closed surface defined by a finite quotient of ``D(f, d, 2)``.

    Elements ``g`` and ``g*ab`` both lie in the edge ``g<ab>``, so the edge
    ``{g, g ab}`` joins vertices ``g<a>`` and ``g ab<a>`` and borders faces
    ``g<b>`` and ``g ab<b>``.
    """
    table = todd_coxeter(pres, (), max_cosets)
    act = table.action
    pa, pb = act[:, _INDEX["a"]], act[:, _INDEX["b"]]
    pab = pb[pa]
    vert, edge, face = _orbits(pa), _orbits(pab), _orbits(pb)
    nv, ne, nf = (int(x.max()) + 1 for x in (vert, edge, face))
    G = _incidence(vert, edge, nv, ne)
    H = _incidence(face, edge, nf, ne)
    t = Tiling(G, H, f, d)
    validate_tiling(t)
    return t


def square_torus(L: int) -> Tiling:
    """``L x L`` periodic square lattice; edge ``2v`` points in +x and
    ``2v + 1`` in +y from vertex ``v = x + L y``."""
    if L < 2:
        raise ValueError("L must be >= 2")

    def v(x, y):
        return (x % L) + L * (y % L)

    n = 2 * L * L
    vert: list[list[int]] = [[] for _ in range(L * L)]
    faces = []
    for y in range(L):
        for x in range(L):
            i = v(x, y)
            vert[i] += [2 * i, 2 * i + 1]
            vert[v(x + 1, y)].append(2 * i)
            vert[v(x, y + 1)].append(2 * i + 1)
            faces.append(sorted({2 * i, 2 * v(x, y + 1), 2 * i + 1, 2 * v(x + 1, y) + 1}))
    G = BinMatrix.from_supports([sorted(s) for s in vert], n)
    H = BinMatrix.from_supports(faces, n)
    t = Tiling(G, H, 4, 4)
    validate_tiling(t)
    return t


def dual_tiling(t: Tiling) -> Tiling:
    return Tiling(t.H, t.G, t.d, t.f)


def search_quotients(f: int, d: int, lengths: Iterable[int], seeds: Iterable[int],
                     max_cosets: int = 200_000, max_order: int | None = None,
                     min_order: int = 1):
    """Yield ``(presentation, order, relator, seed)`` for every random extra
    relator whose quotient of ``D(f, d, 2)`` closes and gives a valid tiling."""
    base = GroupPresentation.van_dyck(f, d)
    seeds = list(seeds)
    for length in lengths:
        for seed in seeds:
            rel = random_relator(length, seed)
            pres = base.with_relators(rel)
            try:
                table = todd_coxeter(pres, (), max_cosets)
            except CosetEnumerationError:
                continue
            order = table.cosets
            if order < min_order or (max_order is not None and order > max_order):
                continue
            try:
                build_tiling(pres, f, d, max_cosets)
            except InvariantViolation as exc:
                log.debug("relator %s closes at %d but fails: %s", rel, order, exc)
                continue
            yield pres, order, rel, seed


def save_tiling(t: Tiling, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_matrix(t.G, d / "G.txt")
    write_matrix(t.H, d / "H.txt")
    (d / "tiling.json").write_text(json.dumps(t.header(), indent=2) + "\n")


def load_tiling(directory) -> Tiling:
    d = Path(directory)
    hdr = json.loads((d / "tiling.json").read_text())
    t = Tiling(read_matrix(d / "G.txt"), read_matrix(d / "H.txt"), int(hdr["f"]), int(hdr["d"]))
    validate_tiling(t)
    return t


def stored_presentations() -> dict[str, GroupPresentation]:
    """Presentations shipped with the package, keyed by file stem."""
    from importlib import resources

    root = resources.files("isingdual") / "data" / "presentations"
    out = {}
    for entry in sorted(root.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".txt"):
            out[entry.name[:-4]] = GroupPresentation.from_text(entry.read_text())
    return out
