"""scikit-learn style front end.

``fit`` resolves the weight family, classifies its regime and builds the
exact sampling tables; ``sample`` then draws trees, mobiles or maps from
per-replicate streams.  :class:`LabelProcessTransformer` turns mobiles
into rows of rescaled process values so they can feed ordinary pipelines.
"""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .bijections import Mobile, bdg_inverse, gn_inverse
from .labels import distance_process, label_process, sample_labels, star_label_process
from .rng import replicate_rng
from .trees import DegreeSampler, condensate_view, cycle_lemma_rotate
from .weights import Regime, WeightSequence, analyze

__all__ = ["SimplyGeneratedTreeSampler", "BoltzmannMapSampler", "LabelProcessTransformer"]


def _check_int(name, value, low):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < low:
        raise ValueError(f"{name} must be an integer >= {low}, got {value!r}")
    return int(value)


class SimplyGeneratedTreeSampler(BaseEstimator):
    """Exact sampler of simply generated trees with ``n`` edges.

    Parameters
    ----------
    family : str or WeightSequence
        Weight family, e.g. ``"powerlaw:beta=3"`` or ``"factorial:alpha=1"``.
    n : int
        Number of edges.
    cap : int or None
        Largest admissible ``n``; defaults to ``CONDMAP_CAP_N`` or 30000.

    Attributes
    ----------
    weights_ : WeightSequence
    regime_ : RegimeReport
    sampler_ : DegreeSampler
    """

    def __init__(self, family="powerlaw:beta=3", n=1000, cap=None):
        self.family = family
        self.n = n
        self.cap = cap

    def _validate(self):
        _check_int("n", self.n, 1)
        if self.cap is not None:
            _check_int("cap", self.cap, 1)
        if isinstance(self.family, WeightSequence):
            return self.family
        if not isinstance(self.family, str):
            raise TypeError("family must be a spec string or a WeightSequence")
        return WeightSequence.from_spec(self.family)

    def fit(self, X=None, y=None):
        """Build the sampling tables.  ``X`` and ``y`` are ignored."""
        ws = self._validate()
        self.weights_ = ws
        self.regime_ = analyze(ws)
        self.sampler_ = DegreeSampler(self.n, ws, cap=self.cap)
        self.log_partition_ = self.sampler_.log_partition
        return self

    def _draw_tree(self, rng):
        return cycle_lemma_rotate(self.sampler_.sample(rng))

    def sample(self, n_samples=1, random_state=0):
        """``n_samples`` trees; sample ``r`` uses stream ``(random_state, r)``."""
        check_is_fitted(self, "sampler_")
        _check_int("n_samples", n_samples, 1)
        _check_int("random_state", random_state, 0)
        return [self._draw_tree(replicate_rng(random_state, r)) for r in range(n_samples)]


class BoltzmannMapSampler(SimplyGeneratedTreeSampler):
    """Random rooted pointed bipartite maps with ``n`` edges.

    Each draw is a tree from the fitted sampler carried through the inverse
    of ``G_n``, labelled uniformly, given a fair sign and mapped with
    :func:`~condmap.bijections.bdg_inverse`.

    ``return_mobiles=True`` makes :meth:`sample` return ``(mobile, map)``
    pairs.
    """

    def __init__(self, family="powerlaw:beta=3", n=1000, cap=None, return_mobiles=False):
        super().__init__(family=family, n=n, cap=cap)
        self.return_mobiles = return_mobiles

    @property
    def condensation_(self) -> bool:
        check_is_fitted(self, "regime_")
        return self.regime_.regime in (Regime.C1_CONDENSATION, Regime.C2_CONDENSATION)

    def sample_mobiles(self, n_samples=1, random_state=0):
        check_is_fitted(self, "sampler_")
        _check_int("n_samples", n_samples, 1)
        _check_int("random_state", random_state, 0)
        out = []
        for r in range(n_samples):
            rng = replicate_rng(random_state, r)
            tree = gn_inverse(self._draw_tree(rng))
            lab = sample_labels(tree, rng)
            eps = 1 if rng.random() < 0.5 else -1
            out.append(Mobile(tree, lab, eps))
        return out

    def sample(self, n_samples=1, random_state=0):
        mobiles = self.sample_mobiles(n_samples, random_state)
        maps = [bdg_inverse(m, check=False) for m in mobiles]
        return list(zip(mobiles, maps)) if self.return_mobiles else maps


class LabelProcessTransformer(BaseEstimator, TransformerMixin):
    """Rescaled label (``"L"``), star (``"Lstar"``) or distance (``"D"``)
    process of each mobile, evaluated on ``t_grid``.

    ``kappa`` sets the amplitude ``sqrt(2 (1 - kappa) n)``; ``"auto"`` takes
    it from ``family`` at fit time and ``None`` leaves the values unscaled.
    """

    _KINDS = ("L", "Lstar", "D")

    def __init__(self, kind="L", t_grid=(0.25, 0.5, 0.75), kappa="auto",
                 family="powerlaw:beta=3"):
        self.kind = kind
        self.t_grid = t_grid
        self.kappa = kappa
        self.family = family

    @staticmethod
    def _check_X(X):
        X = list(X) if not isinstance(X, Mobile) else [X]
        if not X:
            raise ValueError("X must contain at least one mobile")
        for m in X:
            if not isinstance(m, Mobile):
                raise TypeError(f"expected Mobile instances, got {type(m).__name__}")
            if m.n < 1:
                raise ValueError("mobiles need at least one edge")
        return X

    def fit(self, X=None, y=None):
        if self.kind not in self._KINDS:
            raise ValueError(f"kind must be one of {self._KINDS}")
        grid = np.asarray(self.t_grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0 or np.any((grid < 0) | (grid > 1)):
            raise ValueError("t_grid must be a non-empty list of times in [0, 1]")
        if X is not None:
            self._check_X(X)
        if self.kappa == "auto":
            ws = self.family if isinstance(self.family, WeightSequence) \
                else WeightSequence.from_spec(self.family)
            self.kappa_ = analyze(ws).kappa
        elif self.kappa is None:
            self.kappa_ = None
        else:
            k = float(self.kappa)
            if not 0 <= k < 1:
                raise ValueError("kappa must lie in [0, 1)")
            self.kappa_ = k
        self.grid_ = grid
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = self._check_X(X)
        out = np.empty((len(X), self.grid_.size))
        for i, m in enumerate(X):
            if self.kind == "L":
                tr = label_process(m, self.kappa_)
            elif self.kind == "Lstar":
                tr = star_label_process(m, condensate_view(m.tree), self.kappa_)
            else:
                tr, _ = distance_process(m, self.kappa_)
            out[i] = tr.rescaled(self.grid_)
        return out

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "grid_")
        return np.array([f"{self.kind}@{t:g}" for t in self.grid_], dtype=object)
