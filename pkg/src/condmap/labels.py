"""Counting, sampling and process views of mobile labels."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _kernels as K
from .bijections import Mobile, gn_inverse
from .trees import CondensateView, PlanarTree, sample_tree
from .weights import WeightSequence

__all__ = [
    "ProcessTrace",
    "count_labelings",
    "enumerate_labelings",
    "sample_labels",
    "sample_mobile",
    "geometric_jumps",
    "conditioned_walk_labels",
    "label_process",
    "star_label_process",
    "distance_process",
]

REJECTION_MAX_DEGREE = 12


@dataclass(frozen=True)
class ProcessTrace:
    """Integer-indexed path with its rescaling constants.

    ``values[i]`` is the value at index ``i`` for ``i = 0..index_scale``;
    the rescaled path is ``t -> value(t * index_scale) / amplitude_scale``
    with linear interpolation.
    """

    values: np.ndarray
    index_scale: int
    amplitude_scale: float
    kind: str

    def at(self, t) -> np.ndarray:
        x = np.asarray(t, dtype=float) * self.index_scale
        return np.interp(x, np.arange(self.values.size), self.values)

    def rescaled(self, t) -> np.ndarray:
        return self.at(t) / self.amplitude_scale

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "value"])
        for i, v in enumerate(self.values.tolist()):
            w.writerow([i, v])
        return buf.getvalue()

    def header(self) -> str:
        return json.dumps({"kind": self.kind, "index_scale": self.index_scale,
                           "amplitude_scale": self.amplitude_scale})


def _scale(n: int, kappa: float | None) -> float:
    return 1.0 if kappa is None else math.sqrt(2 * (1 - kappa) * n)


# -- counting and sampling --------------------------------------------------


def count_labelings(t: PlanarTree) -> int:
    """Number of valid labellings: the product of ``C(2d-1, d-1)`` over
    black vertices of degree ``d``."""
    out = 1
    for k in t.outdeg[t.black_vertices].tolist():
        d = k + 1
        out *= math.comb(2 * d - 1, d - 1)
    return out


def _compositions(d: int) -> list[list[int]]:
    """Increment vectors ``x_0..x_{d-2}`` from compositions of ``d`` into ``d`` parts."""
    out = []
    for bars in itertools.combinations(range(2 * d - 1), d - 1):
        prev, xs = -1, []
        for s in bars:
            xs.append(s - prev - 2)
            prev = s
        out.append(xs)
    return out


def enumerate_labelings(t: PlanarTree) -> Iterator[np.ndarray]:
    """Every valid labelling of ``t`` (root label 0) as a full label vector."""
    blacks = t.black_vertices.tolist()
    opts = [_compositions(int(t.outdeg[b]) + 1) for b in blacks]
    for choice in itertools.product(*opts):
        lab = np.zeros(t.n_vertices, dtype=np.int64)
        for b, xs in zip(blacks, choice):  # blacks come in preorder
            cur = lab[t.parent[b]]
            for c, x in zip(t.children(b), xs):
                cur += x
                lab[c] = cur
        yield lab


def sample_labels(t: PlanarTree, rng: np.random.Generator) -> np.ndarray:
    """Uniform valid labelling of a coloured tree (black entries are 0)."""
    ptr, kids = t._csr
    u = rng.random(int(K.label_uniform_count(t.outdeg, t.depth)))
    lab, _ = K.sample_labels_kernel(t.outdeg, t.parent, t.depth, ptr, kids, u)
    return lab


def sample_mobile(n: int, w: WeightSequence, rng: np.random.Generator) -> Mobile:
    """Random labelled mobile: the tree is the image of a ``nu_n`` tree
    under the inverse of ``G_n``, labels are uniform and the sign is fair."""
    tree = gn_inverse(sample_tree(n, w, rng))
    lab = sample_labels(tree, rng)
    eps = 1 if rng.random() < 0.5 else -1
    return Mobile(tree, lab, eps)


def geometric_jumps(size: int, rng: np.random.Generator) -> np.ndarray:
    """IID jumps with ``P(xi = i) = 2^{-i-2}`` for ``i >= -1`` (mean 0, variance 2)."""
    return rng.geometric(0.5, size=size) - 2


def _conditioned_block(d: int, rng: np.random.Generator) -> np.ndarray:
    """``d`` geometric jumps conditioned to sum to 0."""
    if d == 1:
        return np.zeros(1, dtype=np.int64)
    if d <= REJECTION_MAX_DEGREE:
        while True:
            xi = geometric_jumps(d, rng)
            if xi.sum() == 0:
                return xi
    # Conditioned on the total, y = xi + 1 is a uniform composition of d.
    bars = np.sort(rng.choice(2 * d - 1, size=d - 1, replace=False))
    y = np.diff(np.concatenate([[-1], bars, [2 * d - 1]])) - 1
    return y - 1


def conditioned_walk_labels(t: PlanarTree, rng: np.random.Generator) -> np.ndarray:
    """Labels from the contour walk with geometric jumps, conditioned to
    return to its starting value around every black vertex.

    An independent route to the law of :func:`sample_labels`.
    """
    lab = np.zeros(t.n_vertices, dtype=np.int64)
    for b in t.black_vertices.tolist():
        kids = t.children(b)
        xi = _conditioned_block(kids.size + 1, rng)
        lab[kids] = lab[t.parent[b]] + np.cumsum(xi[:-1])
    return lab


# -- processes --------------------------------------------------------------


def label_process(m: Mobile, kappa: float | None = None) -> ProcessTrace:
    """Labels of the white vertices in lexicographic order, closed at 0.

    With ``kappa`` the amplitude scale is ``sqrt(2 (1 - kappa) n)``;
    without it the trace is unscaled.
    """
    wl = m.white_labels()
    vals = np.append(wl, wl[0])
    return ProcessTrace(vals, int(wl.size), _scale(m.n, kappa), "L")


def star_label_process(m: Mobile, cv: CondensateView, kappa: float | None = None) -> ProcessTrace:
    """Labels around the condensate ``s`` from its parent, closed at ``s_0``."""
    vals = m.labels[np.append(cv.neighbors, cv.neighbors[0])]
    return ProcessTrace(vals, cv.delta_n, _scale(m.n, kappa), "Lstar")


def distance_process(m: Mobile, kappa: float | None = None) -> tuple[ProcessTrace, int]:
    """Distances to ``rho`` along the white vertices, rotated to start at the
    first vertex of minimal label.  Returns the trace and that index."""
    wl = m.white_labels()
    D = wl - wl.min() + 1
    ix = int(np.argmin(wl))
    vals = np.append(np.roll(D, -ix), D[ix])
    return ProcessTrace(vals, int(wl.size), _scale(m.n, kappa), "D"), ix
