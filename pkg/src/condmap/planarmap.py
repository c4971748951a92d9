"""Half-edge planar maps with a root arc and a marked vertex.

Arcs are dense integers.  ``next_around_vertex`` is the rotation system,
``twin`` pairs the two arcs of an edge (``a ^ 1`` for maps built here) and
faces are the cycles of ``twin o next_around_vertex``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels as K

__all__ = ["PlanarMap", "ValidationReport", "bfs_distances", "face_degrees", "validate",
           "degree_profile", "all_pairs_distances"]

SCHEMA_VERSION = 1


class PlanarMap:
    """A rooted, pointed planar map stored as a rotation system.

    :param next_around_vertex: permutation of arcs giving the cyclic order
        of arcs leaving each vertex.
    :param vertex_of: tail vertex of each arc.
    :param root_arc: the oriented root edge.
    :param rho: the marked vertex.
    :param twin: edge involution; defaults to ``a ^ 1``.
    """

    def __init__(self, next_around_vertex, vertex_of, root_arc: int, rho: int,
                 twin=None, n_vertices: int | None = None):
        self.next_around_vertex = np.asarray(next_around_vertex, dtype=np.int64)
        self.vertex_of = np.asarray(vertex_of, dtype=np.int64)
        n_arcs = self.next_around_vertex.size
        if twin is None:
            twin = np.arange(n_arcs, dtype=np.int64) ^ 1
        self.twin = np.asarray(twin, dtype=np.int64)
        self.root_arc = int(root_arc)
        self.rho = int(rho)
        self.n_vertices = int(n_vertices if n_vertices is not None
                              else (self.vertex_of.max() + 1 if n_arcs else 1))
        for a in (self.next_around_vertex, self.vertex_of, self.twin):
            a.setflags(write=False)

    @property
    def n_arcs(self) -> int:
        return int(self.twin.size)

    @property
    def n_edges(self) -> int:
        return self.n_arcs // 2

    def head(self, a):
        return self.vertex_of[self.twin[a]]

    @cached_property
    def face_next(self) -> np.ndarray:
        return self.twin[self.next_around_vertex]

    @cached_property
    def _faces(self):
        return K.perm_cycles(self.face_next)

    @property
    def face_of(self) -> np.ndarray:
        """Face id of each arc (faces numbered by smallest arc)."""
        return self._faces[0]

    @property
    def n_faces(self) -> int:
        return int(self._faces[2].size)

    @cached_property
    def _csr(self):
        order = np.argsort(self.vertex_of, kind="stable")
        ptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
        np.add.at(ptr, self.vertex_of + 1, 1)
        ptr = np.cumsum(ptr)
        nbr = self.vertex_of[self.twin[order]]
        return ptr, np.ascontiguousarray(nbr)

    def vertex_degrees(self) -> np.ndarray:
        return np.bincount(self.vertex_of, minlength=self.n_vertices)

    def bfs(self, src: int, dist=None, queue=None) -> np.ndarray:
        ptr, nbr = self._csr
        if dist is None:
            dist = np.empty(self.n_vertices, dtype=np.int64)
        if queue is None:
            queue = np.empty(self.n_vertices, dtype=np.int64)
        return K.bfs(ptr, nbr, src, dist, queue)

    def adjacency(self) -> list[list[int]]:
        """Adjacency lists (with multiplicity) for external graph tools."""
        ptr, nbr = self._csr
        return [nbr[ptr[v]: ptr[v + 1]].tolist() for v in range(self.n_vertices)]

    def canonical_code(self) -> tuple:
        """Relabelling-invariant code of the rooted, pointed map."""
        if self.n_arcs == 0:
            return ()
        label = {self.root_arc: 0}
        order = [self.root_arc]
        k = 0
        while k < len(order):
            a = order[k]
            for b in (int(self.next_around_vertex[a]), int(self.twin[a])):
                if b not in label:
                    label[b] = len(order)
                    order.append(b)
            k += 1
        code = tuple((label[int(self.next_around_vertex[a])], label[int(self.twin[a])])
                     for a in order)
        rho_arcs = [label[int(a)] for a in np.flatnonzero(self.vertex_of == self.rho)]
        return code + (min(rho_arcs) if rho_arcs else -1,)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "half_edges": [[int(self.vertex_of[a]), int(self.twin[a])] for a in range(self.n_arcs)],
            "next_around_vertex": self.next_around_vertex.tolist(),
            "root_arc": self.root_arc,
            "rho": self.rho,
            "n_vertices": self.n_vertices,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlanarMap":
        he = d["half_edges"]
        return cls(d["next_around_vertex"], [h[0] for h in he], d["root_arc"], d["rho"],
                   twin=[h[1] for h in he], n_vertices=d.get("n_vertices"))

    def __eq__(self, other):
        if not isinstance(other, PlanarMap):
            return NotImplemented
        return (self.root_arc == other.root_arc and self.rho == other.rho
                and self.n_vertices == other.n_vertices
                and np.array_equal(self.next_around_vertex, other.next_around_vertex)
                and np.array_equal(self.vertex_of, other.vertex_of)
                and np.array_equal(self.twin, other.twin))

    def __repr__(self):
        return f"PlanarMap(V={self.n_vertices}, E={self.n_edges}, F={self.n_faces})"


def bfs_distances(m: PlanarMap, src: int) -> np.ndarray:
    return m.bfs(src)


def all_pairs_distances(m: PlanarMap, cap: int = 2000) -> np.ndarray:
    if m.n_vertices > cap:
        raise ValueError(f"all-pairs distances capped at {cap} vertices")
    dist = np.empty((m.n_vertices, m.n_vertices), dtype=np.int64)
    queue = np.empty(m.n_vertices, dtype=np.int64)
    for v in range(m.n_vertices):
        m.bfs(v, dist[v], queue)
    return dist


def face_degrees(m: PlanarMap) -> np.ndarray:
    return m._faces[2].copy()


@dataclass
class ValidationReport:
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def failures(self) -> list[str]:
        return [k for k, v in self.checks.items() if not v]


def validate(m: PlanarMap) -> ValidationReport:
    """Check the rotation-system invariants, Euler's formula and bipartiteness."""
    r = ValidationReport()
    n = m.n_arcs
    idx = np.arange(n)
    tw, nx = m.twin, m.next_around_vertex
    in_range = bool(np.all((tw >= 0) & (tw < n)) and np.all((nx >= 0) & (nx < n)))
    r.checks["twin_involution"] = in_range and bool(np.all(tw[tw] == idx) and np.all(tw != idx))
    r.checks["next_permutation"] = in_range and np.array_equal(np.sort(nx), idx)
    if not (r.checks["twin_involution"] and r.checks["next_permutation"]):
        for key in ("vertex_consistent", "connected", "euler", "bipartite", "even_faces"):
            r.checks[key] = False
        return r
    r.checks["vertex_consistent"] = bool(np.all(m.vertex_of[nx] == m.vertex_of))
    # every vertex's arcs form a single rotation cycle
    vcid, _, vlen = K.perm_cycles(nx)
    r.checks["vertex_consistent"] &= int(vlen.size) == int(np.unique(m.vertex_of).size)
    dist = m.bfs(m.vertex_of[0] if n else 0)
    r.checks["connected"] = bool(np.all(dist >= 0))
    V, E, F = m.n_vertices, m.n_edges, m.n_faces
    r.checks["euler"] = V - E + F == 2
    heads = m.vertex_of[tw]
    r.checks["bipartite"] = bool(np.all((dist[m.vertex_of] + dist[heads]) % 2 == 1))
    r.checks["even_faces"] = bool(np.all(face_degrees(m) % 2 == 0))
    return r


def degree_profile(m: PlanarMap) -> tuple[dict[int, int], int, int]:
    """Histogram of face degrees, the maximum and its multiplicity."""
    deg = face_degrees(m)
    hist = dict(sorted(Counter(deg.tolist()).items()))
    mx = int(deg.max())
    return hist, mx, hist[mx]
