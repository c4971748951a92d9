"""Mobiles and the two bijections used throughout.

``gn_forward`` / ``gn_inverse`` relate coloured mobile trees to the
simply generated tree that carries the weights; ``bdg_inverse`` /
``bdg_forward`` relate labelled mobiles with a sign to rooted pointed
bipartite maps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .planarmap import SCHEMA_VERSION, PlanarMap
from .trees import PlanarTree

__all__ = ["Mobile", "LabelRuleError", "gn_forward", "gn_inverse", "bdg_inverse", "bdg_forward"]


class LabelRuleError(ValueError):
    """The labels violate the increment rule around some black vertex."""


@dataclass(frozen=True, eq=False)
class Mobile:
    """Coloured tree (root white) with integer labels on white vertices.

    ``labels`` is indexed by tree vertex; entries at black vertices are 0.
    ``label_offset`` is added when comparing labels with a parent mobile
    (used by the trimmed star mobile, whose root label is not 0 there).
    """

    tree: PlanarTree
    labels: np.ndarray
    epsilon: int = 1
    label_offset: int = 0

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.int64)
        if lab.shape != (self.tree.n_vertices,):
            raise ValueError("need one label per tree vertex")
        lab = np.where(self.tree.is_white, lab, 0)
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)
        if self.epsilon not in (-1, 1):
            raise ValueError("epsilon must be +1 or -1")

    @property
    def n(self) -> int:
        return self.tree.n_edges

    def white_labels(self) -> np.ndarray:
        return self.labels[self.tree.is_white]

    def check(self) -> None:
        """Raise :class:`LabelRuleError` unless the label rule holds."""
        if self.labels[0] != 0:
            raise LabelRuleError("root label must be 0")
        t = self.tree
        for b in t.black_vertices:
            ring = np.concatenate([[t.parent[b]], t.children(b)])
            lab = self.labels[ring]
            inc = np.diff(np.append(lab, lab[0]))
            if np.any(inc < -1):
                raise LabelRuleError(f"increment below -1 around black vertex {b}")

    def is_valid(self) -> bool:
        try:
            self.check()
        except LabelRuleError:
            return False
        return True

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "outdeg": self.tree.outdeg.tolist(),
            "labels": self.white_labels().tolist(),
            "epsilon": self.epsilon,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Mobile":
        t = PlanarTree(d["outdeg"])
        lab = np.zeros(t.n_vertices, dtype=np.int64)
        lab[t.is_white] = d["labels"]
        return cls(t, lab, int(d["epsilon"]))

    def key(self) -> tuple:
        return (self.tree.outdeg.tobytes(), self.labels.tobytes(), self.epsilon)

    def __eq__(self, other):
        if not isinstance(other, Mobile):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


def _preorder(children: list[list[int]], root: int) -> tuple[np.ndarray, np.ndarray]:
    """Preorder outdegrees and the visiting order of an ordered tree."""
    order = []
    stack = [root]
    while stack:
        v = stack.pop()
        order.append(v)
        stack.extend(reversed(children[v]))
    order = np.array(order, dtype=np.int64)
    outdeg = np.array([len(children[v]) for v in order], dtype=np.int64)
    return outdeg, order


# -- G_n --------------------------------------------------------------------


def gn_forward(t: PlanarTree, *, return_order: bool = False):
    """Coloured mobile tree to the tree whose outdegrees carry the weights.

    The first black child of the root becomes the new root.  A black vertex
    with white children ``c_1..c_m`` gets children ``head(c_1), ...,
    head(c_m), succ(b)`` where ``head(c)`` is the first child of ``c`` (or
    ``c`` itself if it is a leaf) and ``succ(b)`` is the next sibling of
    ``b`` or, for a last child, its parent.  White vertices become leaves.

    With ``return_order=True`` also returns ``order`` where ``order[k]`` is
    the input vertex that becomes vertex ``k`` of the output.
    """
    nv = t.n_vertices
    if nv == 1:
        out = PlanarTree([0])
        return (out, np.zeros(1, dtype=np.int64)) if return_order else out
    ptr, kids = t._csr
    parent = t.parent
    white = t.is_white
    children: list[list[int]] = [[] for _ in range(nv)]
    for b in np.flatnonzero(~white):
        b = int(b)
        row = children[b]
        for c in kids[ptr[b]: ptr[b + 1]]:
            row.append(int(kids[ptr[c]]) if ptr[c + 1] > ptr[c] else int(c))
        p = int(parent[b])
        r = int(t.sibling_rank[b])
        row.append(int(kids[ptr[p] + r + 1]) if r + 1 < t.outdeg[p] else p)
    outdeg, order = _preorder(children, int(kids[ptr[0]]))
    out = PlanarTree(outdeg, check=False)
    return (out, order) if return_order else out


def gn_inverse(tp: PlanarTree) -> PlanarTree:
    """Inverse of :func:`gn_forward`.

    Following last children from any chain start reaches a leaf, which is a
    white vertex; the vertices passed on the way are its black children in
    order.  The other children of each such black vertex start the chains of
    its white children.
    """
    nv = tp.n_vertices
    if nv == 1:
        return PlanarTree([0])
    ptr, kids = tp._csr
    children: list[list[int]] = [[] for _ in range(nv)]

    def chain(x: int) -> int:
        blacks = []
        while ptr[x + 1] > ptr[x]:
            blacks.append(x)
            x = int(kids[ptr[x + 1] - 1])
        children[x] = blacks
        return x

    root = chain(0)
    todo = list(children[root])
    while todo:
        b = todo.pop()
        whites = [chain(int(c)) for c in kids[ptr[b]: ptr[b + 1] - 1]]
        children[b] = whites
        for w in whites:
            todo.extend(children[w])
    outdeg, _ = _preorder(children, root)
    return PlanarTree(outdeg, check=False)


# -- BDG --------------------------------------------------------------------


def _white_contour(t: PlanarTree):
    c = K.contour(t.outdeg, t.parent)
    return c[0:-1:2], c[1::2]


def bdg_inverse(m: Mobile, *, check: bool = True) -> PlanarMap:
    """Mobile with sign to the rooted pointed bipartite map.

    Chord ``i`` joins white corner ``c_i`` to its successor corner (or to
    the extra vertex ``rho`` for corners of minimal label) and uses arcs
    ``2i`` (leaving ``c_i``) and ``2i + 1``.  Map vertices are the white
    vertices in lexicographic order followed by ``rho``.
    """
    if check:
        m.check()
    t = m.tree
    n = t.n_edges
    if n == 0:
        raise ValueError("a mobile needs at least one edge")
    corners, _ = _white_contour(t)
    lab = m.labels[corners]
    succ = K.successors(lab)
    vid = np.cumsum(t.is_white) - 1
    rho = int(vid[-1] + 1) if t.is_white[-1] else int(vid.max() + 1)
    cvert = vid[corners]

    idx = np.arange(n)
    is_min = succ < 0
    vertex_of = np.empty(2 * n, dtype=np.int64)
    vertex_of[0::2] = cvert
    vertex_of[1::2] = np.where(is_min, rho, cvert[np.maximum(succ, 0)])

    # sort keys: (vertex, corner, kind, offset); outgoing chord last in its corner
    corner_key = np.empty(2 * n, dtype=np.int64)
    kind = np.empty(2 * n, dtype=np.int64)
    offset = np.empty(2 * n, dtype=np.int64)
    corner_key[0::2] = idx
    kind[0::2] = 1
    offset[0::2] = 0
    corner_key[1::2] = np.where(is_min, -idx, succ)
    kind[1::2] = 0
    offset[1::2] = (succ - idx) % n
    order = np.lexsort((offset, kind, corner_key, vertex_of))
    nxt = np.empty(2 * n, dtype=np.int64)
    vs = vertex_of[order]
    starts = np.flatnonzero(np.r_[True, vs[1:] != vs[:-1]])
    ends = np.r_[starts[1:], order.size]
    for s, e in zip(starts, ends):
        grp = order[s:e]
        nxt[grp] = np.roll(grp, -1)
    root_arc = 1 if m.epsilon == 1 else 0
    return PlanarMap(nxt, vertex_of, root_arc, rho, n_vertices=rho + 1)


def bdg_forward(pm: PlanarMap) -> Mobile:
    """Rooted pointed bipartite map to its mobile and sign.

    Labels are distances to ``rho`` shifted so the mobile root has label 0;
    each face becomes a black vertex joined to the tail of every arc of the
    face that steps one unit closer to ``rho``.
    """
    d = pm.bfs(pm.rho)
    tails = pm.vertex_of
    heads = pm.vertex_of[pm.twin]
    if np.any((d[tails] - d[heads]) % 2 == 0):
        raise ValueError("map is not bipartite")
    down = d[heads] == d[tails] - 1
    face = pm.face_of
    _, fpos, _ = K.perm_cycles(pm.face_next)
    vcid, vpos, _ = K.perm_cycles(pm.next_around_vertex)

    arcs = np.flatnonzero(down)
    # around each vertex: down arcs in rotation order; around each face: in face order
    by_vertex: dict[int, list[int]] = {}
    for a in arcs[np.lexsort((vpos[arcs], vcid[arcs]))]:
        by_vertex.setdefault(int(tails[a]), []).append(int(a))
    by_face: dict[int, list[int]] = {}
    for a in arcs[np.lexsort((fpos[arcs], face[arcs]))]:
        by_face.setdefault(int(face[a]), []).append(int(a))
    vidx = {a: i for lst in by_vertex.values() for i, a in enumerate(lst)}
    fidx = {a: i for lst in by_face.values() for i, a in enumerate(lst)}

    ra = pm.root_arc
    if down[ra]:
        eps, a0 = -1, int(ra)
    else:
        eps, a0 = 1, int(pm.twin[ra])
    root = int(tails[a0])

    # iterative preorder build; nodes are ("w", vertex, entry arc) / ("b", face, entry arc)
    outdeg = []
    labels = []
    stack = [(0, root, a0, True)]
    while stack:
        is_w, key, a, is_root = stack.pop()
        if is_w == 0:
            lst = by_vertex[key]
            i = vidx[a]
            k = len(lst)
            kids = [lst[(i + j) % k] for j in range(k)] if is_root else \
                   [lst[(i + j) % k] for j in range(1, k)]
            outdeg.append(len(kids))
            labels.append(int(d[key] - d[root]))
            for c in reversed(kids):
                stack.append((1, int(face[c]), c, False))
        else:
            lst = by_face[key]
            i = fidx[a]
            k = len(lst)
            # the face boundary runs against the planar order of the black vertex
            kids = [lst[(i - j) % k] for j in range(1, k)]
            outdeg.append(len(kids))
            labels.append(0)
            for c in reversed(kids):
                stack.append((0, int(tails[c]), c, False))
    t = PlanarTree(outdeg)
    return Mobile(t, np.array(labels, dtype=np.int64), eps)
