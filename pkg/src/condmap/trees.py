"""Rooted planar trees, the enumeration oracle, exact simply generated
sampling and the max-degree decomposition around the condensate.

A tree is stored as its outdegree sequence in depth-first (lexicographic)
order.  Colours alternate by depth with a white root.
"""

from __future__ import annotations

import hashlib
import math
import os
import threading
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

import numpy as np

from . import _kernels as K
from .weights import WeightSequence, _logsumexp

__all__ = [
    "PlanarTree",
    "CondensateView",
    "DegreeSampler",
    "get_sampler",
    "SamplerCapError",
    "DEFAULT_CAP",
    "sampler_cap",
    "enumerate_trees",
    "tree_weight",
    "exact_nu_distribution",
    "sample_degree_sequence",
    "cycle_lemma_rotate",
    "sample_tree",
    "sample_trees",
    "condensate_view",
]

DEFAULT_CAP = 30_000
ENUM_CAP = 10


class SamplerCapError(ValueError):
    pass


def sampler_cap() -> int:
    """Sampler size cap; ``CONDMAP_CAP_N`` overrides the default."""
    raw = os.environ.get("CONDMAP_CAP_N")
    return int(raw) if raw else DEFAULT_CAP


class PlanarTree:
    """Rooted planar tree given by its preorder outdegree sequence."""

    __slots__ = ("outdeg", "__dict__")

    def __init__(self, outdeg, *, check: bool = True):
        arr = np.array(outdeg, dtype=np.int64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("outdeg must be a non-empty 1-d sequence")
        if check:
            if np.any(arr < 0):
                raise ValueError("outdegrees must be non-negative")
            if not K.lukasiewicz_ok(arr):
                raise ValueError(f"not a Lukasiewicz path: {arr.tolist()}")
        arr.setflags(write=False)
        self.outdeg = arr

    @property
    def n_edges(self) -> int:
        return int(self.outdeg.size - 1)

    @property
    def n_vertices(self) -> int:
        return int(self.outdeg.size)

    @cached_property
    def _structure(self):
        parent, depth, size, rank = K.tree_structure(self.outdeg)
        for a in (parent, depth, size, rank):
            a.setflags(write=False)
        return parent, depth, size, rank

    @property
    def parent(self) -> np.ndarray:
        return self._structure[0]

    @property
    def depth(self) -> np.ndarray:
        return self._structure[1]

    @property
    def subtree_size(self) -> np.ndarray:
        """Number of vertices in the subtree rooted at each vertex."""
        return self._structure[2]

    @property
    def sibling_rank(self) -> np.ndarray:
        return self._structure[3]

    @cached_property
    def _csr(self):
        ptr, kids = K.children_csr(self.outdeg, self.parent)
        ptr.setflags(write=False)
        kids.setflags(write=False)
        return ptr, kids

    def children(self, v: int) -> np.ndarray:
        ptr, kids = self._csr
        return kids[ptr[v]: ptr[v + 1]]

    @property
    def is_white(self) -> np.ndarray:
        return self.depth % 2 == 0

    @property
    def white_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.is_white)

    @property
    def black_vertices(self) -> np.ndarray:
        return np.flatnonzero(~self.is_white)

    @property
    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.outdeg == 0)

    def to_dict(self) -> dict:
        return {"n": self.n_edges, "outdeg": self.outdeg.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "PlanarTree":
        t = cls(d["outdeg"])
        if "n" in d and d["n"] != t.n_edges:
            raise ValueError("edge count does not match outdeg")
        return t

    def __eq__(self, other):
        if not isinstance(other, PlanarTree):
            return NotImplemented
        return np.array_equal(self.outdeg, other.outdeg)

    def __lt__(self, other):
        return self.outdeg.tolist() < other.outdeg.tolist()

    def __hash__(self):
        return hash(self.outdeg.tobytes())

    def __repr__(self):
        if self.outdeg.size <= 12:
            return f"PlanarTree({self.outdeg.tolist()})"
        return f"PlanarTree(n_edges={self.n_edges})"


# -- enumeration ------------------------------------------------------------


def enumerate_trees(n: int) -> list[PlanarTree]:
    """All planar trees with ``n`` edges in lexicographic order of outdegrees."""
    if not 0 <= n <= ENUM_CAP:
        raise ValueError(f"enumeration is capped at n <= {ENUM_CAP}, got {n}")
    out = []
    seq = [0] * (n + 1)

    def rec(pos, open_slots, remaining):
        # open_slots: children still to be placed (partial sum + 1)
        if pos == n + 1:
            if open_slots == 0:
                out.append(PlanarTree(seq, check=False))
            return
        if open_slots == 0:
            return
        for d in range(remaining + 1):
            seq[pos] = d
            rec(pos + 1, open_slots - 1 + d, remaining - d)

    rec(0, 1, n)
    return out


def tree_weight(t: PlanarTree, w: WeightSequence) -> float:
    """``sum_v log w_{outdeg(v)}`` (``-inf`` on zero weights)."""
    lw = w.log_prefix(int(t.outdeg.max()))
    return float(np.sum(lw[t.outdeg]))


def exact_nu_distribution(n: int, w: WeightSequence) -> dict[PlanarTree, float]:
    """Exact law ``nu_n`` by enumeration (``n <= 10``)."""
    trees = enumerate_trees(n)
    logs = np.array([tree_weight(t, w) for t in trees])
    z = _logsumexp(logs)
    if not math.isfinite(z):
        raise ValueError("empty support: every tree has zero weight")
    probs = np.exp(logs - z)
    return {t: float(p) for t, p in zip(trees, probs)}


# -- exact conditioned-sum sampler ------------------------------------------


class DegreeSampler:
    """Exact sampler of ``(d_1, ..., d_{n+1})`` with ``sum d = n`` and law
    proportional to ``prod w_{d_i}``.

    Convolution powers of the one-slot weight vector are built once in log
    domain along a balanced split of the slot range; each draw then walks
    the split tree, choosing the left-block total from its exact
    conditional law.  Tables are immutable and shared across threads.
    """

    def __init__(self, n: int, w: WeightSequence, *, cap: int | None = None):
        cap = sampler_cap() if cap is None else cap
        if n < 0:
            raise ValueError("n must be non-negative")
        if n > cap:
            raise SamplerCapError(
                f"n={n} exceeds the sampler cap {cap}; raise it with CONDMAP_CAP_N")
        self.n = n
        self.w = w
        base = np.ascontiguousarray(w.log_prefix(n), dtype=float)
        tabs: dict[int, np.ndarray] = {1: base}

        def table(size):
            if size not in tabs:
                left = table((size + 1) // 2)
                right = table(size // 2)
                tabs[size] = K.log_convolve(left, right, n + 1)
            return tabs[size]

        nodes: list = []

        def build(lo, size):
            if size == 1:
                return -(lo + 1)
            k = len(nodes)
            nodes.append(None)
            L = (size + 1) // 2
            lc = build(lo, L)
            rc = build(lo + L, size - L)
            nodes[k] = (L, size - L, lc, rc)
            return k

        build(0, n + 1)
        sizes = sorted({s for nd in nodes for s in nd[:2]})
        index = {s: i for i, s in enumerate(sizes)}
        self.tables = np.stack([table(s) for s in sizes]) if sizes else np.zeros((0, n + 1))
        self.tables.setflags(write=False)
        arr = np.array(nodes, dtype=np.int64).reshape(-1, 4)
        self._lt = np.array([index[s] for s in arr[:, 0]], dtype=np.int64)
        self._rt = np.array([index[s] for s in arr[:, 1]], dtype=np.int64)
        self._lc = np.ascontiguousarray(arr[:, 2])
        self._rc = np.ascontiguousarray(arr[:, 3])
        # log partition function of n+1 slots summing to n
        if n == 0:
            self.log_partition = float(base[0])
        else:
            l0, r0 = self.tables[self._lt[0]], self.tables[self._rt[0]]
            self.log_partition = _logsumexp(l0 + r0[::-1])
        if not math.isfinite(self.log_partition):
            raise ValueError(f"zero partition function for n={n} and {w.spec}")

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        out = np.zeros(self.n + 1, dtype=np.int64)
        if self.n == 0:
            return out
        u = rng.random(len(self._lt))
        K.sample_blocks(self.tables, self._lt, self._rt, self._lc, self._rc, self.n, u, out)
        return out


_SAMPLERS: dict[tuple, DegreeSampler] = {}
_SAMPLERS_LOCK = threading.Lock()


def get_sampler(n: int, w: WeightSequence) -> DegreeSampler:
    """Memoised :class:`DegreeSampler` for ``(w, n)``."""
    digest = hashlib.sha1(np.asarray(w.log_prefix(n)).tobytes()).hexdigest()
    key = (w.spec, n, digest)
    with _SAMPLERS_LOCK:
        s = _SAMPLERS.get(key)
    if s is None:
        s = DegreeSampler(n, w)
        with _SAMPLERS_LOCK:
            if len(_SAMPLERS) > 32:
                _SAMPLERS.clear()
            _SAMPLERS[key] = s
    return s


def sample_degree_sequence(n: int, w: WeightSequence, rng: np.random.Generator) -> np.ndarray:
    """Exact draw of ``n+1`` exchangeable degrees with sum ``n``."""
    return get_sampler(n, w).sample(rng)


def cycle_lemma_rotate(d) -> PlanarTree:
    """The unique cyclic rotation of ``d`` that is a Lukasiewicz path."""
    d = np.asarray(d, dtype=np.int64)
    if d.ndim != 1 or d.size == 0 or np.any(d < 0):
        raise ValueError("degree sequence must be non-empty and non-negative")
    if int(d.sum()) != d.size - 1:
        raise ValueError(f"degrees must sum to len-1={d.size - 1}, got {int(d.sum())}")
    start = K.cycle_lemma_start(d)
    rot = np.roll(d, -start)
    assert K.lukasiewicz_ok(rot)
    return PlanarTree(rot, check=False)


def sample_tree(n: int, w: WeightSequence, rng: np.random.Generator) -> PlanarTree:
    """A ``nu_n``-distributed tree with ``n`` edges."""
    return cycle_lemma_rotate(sample_degree_sequence(n, w, rng))


def sample_trees(n: int, w: WeightSequence, rng: np.random.Generator,
                 size: int) -> Iterator[PlanarTree]:
    sampler = get_sampler(n, w)
    for _ in range(size):
        yield cycle_lemma_rotate(sampler.sample(rng))


# -- condensate -------------------------------------------------------------


@dataclass(frozen=True)
class CondensateView:
    """Decomposition of a coloured tree around its largest black vertex.

    ``neighbors[0]`` is the parent ``s_0`` of ``s``; ``neighbors[i]`` for
    ``i >= 1`` are its children in planar order.  ``subtree_sizes[i]`` counts
    edges of ``tau_{n,i}``: ``i = 0`` is everything outside the descendants
    of ``s``, ``i >= 1`` is the subtree of ``neighbors[i]``.
    """

    s_index: int
    delta_n: int
    neighbors: np.ndarray
    subtree_sizes: np.ndarray
    white_counts: np.ndarray
    N_white: int

    def component_of(self, t: PlanarTree) -> np.ndarray:
        """Index ``i`` of the piece ``tau_{n,i}`` holding each vertex (``-1`` for ``s``)."""
        comp = np.zeros(t.n_vertices, dtype=np.int64)
        size = t.subtree_size
        comp[self.s_index] = -1
        for i in range(1, self.delta_n):
            c = int(self.neighbors[i])
            comp[c: c + size[c]] = i
        return comp


def condensate_view(t: PlanarTree) -> CondensateView:
    blacks = t.black_vertices
    if blacks.size == 0:
        raise ValueError("tree has no black vertex")
    od = t.outdeg[blacks]
    s = int(blacks[int(np.argmax(od))])  # argmax returns the first maximiser
    delta = int(t.outdeg[s]) + 1
    kids = t.children(s)
    neighbors = np.concatenate([[t.parent[s]], kids]).astype(np.int64)
    size = t.subtree_size
    white = t.is_white.astype(np.int64)
    cum_white = np.concatenate([[0], np.cumsum(white)])
    sizes = np.empty(delta, dtype=np.int64)
    whites = np.empty(delta, dtype=np.int64)
    for i, c in enumerate(kids, start=1):
        sizes[i] = size[c] - 1
        whites[i] = cum_white[c + size[c]] - cum_white[c]
    n_white = int(white.sum())
    sizes[0] = t.n_edges - int(size[s])
    whites[0] = n_white - int(whites[1:].sum())
    for a in (neighbors, sizes, whites):
        a.setflags(write=False)
    return CondensateView(s, delta, neighbors, sizes, whites, n_white)
