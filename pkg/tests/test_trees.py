import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as sps

from condmap.bijections import gn_forward, gn_inverse
from condmap.rng import replicate_rng
from condmap.trees import (PlanarTree, SamplerCapError, DegreeSampler, condensate_view,
                           cycle_lemma_rotate, enumerate_trees, exact_nu_distribution,
                           sample_degree_sequence, sample_tree, sample_trees, tree_weight)
from condmap.weights import WeightSequence


def catalan(n):
    return math.comb(2 * n, n) // (n + 1)


@pytest.mark.parametrize("n", range(0, 9))
def test_enumeration_counts(n):
    trees = enumerate_trees(n)
    assert len(trees) == catalan(n)
    assert len(set(trees)) == len(trees)
    assert [t.outdeg.tolist() for t in trees] == sorted(t.outdeg.tolist() for t in trees)


def test_enumeration_n2():
    assert [t.outdeg.tolist() for t in enumerate_trees(2)] == [[1, 1, 0], [2, 0, 0]]


def test_enumeration_cap():
    with pytest.raises(ValueError):
        enumerate_trees(11)


def test_lukasiewicz_validation():
    with pytest.raises(ValueError):
        PlanarTree([0, 1])
    with pytest.raises(ValueError):
        PlanarTree([1, 0, 1, 0])
    t = PlanarTree([2, 0, 1, 0])
    assert t.n_edges == 3 and t.n_vertices == 4
    assert t.parent.tolist() == [-1, 0, 0, 2]


def test_tree_weight_examples():
    w = WeightSequence.power_law(3)
    assert tree_weight(PlanarTree([1, 1, 0]), w) == 0
    assert tree_weight(PlanarTree([2, 0, 0]), w) == pytest.approx(math.log(1 / 8))
    zero = WeightSequence.explicit([1, 0, 1])
    assert tree_weight(PlanarTree([1, 1, 0]), zero) == -math.inf


def test_exact_nu_examples():
    nu = exact_nu_distribution(2, WeightSequence.power_law(3))
    assert nu[PlanarTree([1, 1, 0])] == pytest.approx(8 / 9, abs=1e-15)
    assert nu[PlanarTree([2, 0, 0])] == pytest.approx(1 / 9, abs=1e-15)
    collapse = exact_nu_distribution(2, WeightSequence.explicit([1, 0, 1]))
    assert collapse[PlanarTree([2, 0, 0])] == 1
    assert list(exact_nu_distribution(1, WeightSequence.power_law(3)).values()) == [1.0]
    for n in range(1, 8):
        assert math.fsum(exact_nu_distribution(n, WeightSequence.factorial(1)).values()) \
            == pytest.approx(1, abs=1e-12)


def test_cycle_lemma_examples():
    assert cycle_lemma_rotate([0, 2, 0]).outdeg.tolist() == [2, 0, 0]
    assert cycle_lemma_rotate([1, 1, 0]).outdeg.tolist() == [1, 1, 0]
    # (1,0,1,0) sums to 2, not len-1 = 3: it is not a degree sequence at all
    with pytest.raises(ValueError):
        cycle_lemma_rotate([1, 0, 1, 0])


def _valid(d):
    return all(s >= 0 for s in itertools.accumulate(x - 1 for x in d[:-1])) and sum(d) == len(d) - 1


@pytest.mark.parametrize("length", range(1, 6))
def test_cycle_lemma_unique_rotation(length):
    n = length - 1
    for d in itertools.product(range(n + 1), repeat=length):
        if sum(d) != n:
            continue
        rots = [d[k:] + d[:k] for k in range(length)]
        valid = [r for r in rots if _valid(r)]
        assert len(set(valid)) == 1 or (len(set(rots)) < length and len(set(valid)) == 1)
        assert cycle_lemma_rotate(d).outdeg.tolist() == list(valid[0])


@given(st.lists(st.integers(0, 6), min_size=1, max_size=40))
def test_cycle_lemma_property(raw):
    d = list(raw)
    diff = sum(d) - (len(d) - 1)
    if diff > 0:  # trim excess mass from the largest entries
        for i in np.argsort(d)[::-1]:
            take = min(diff, d[i])
            d[i] -= take
            diff -= take
    else:
        d[0] -= diff
    t = cycle_lemma_rotate(d)
    assert _valid(t.outdeg.tolist())
    assert cycle_lemma_rotate(t.outdeg).outdeg.tolist() == t.outdeg.tolist()


def test_sampler_small_support_uniform():
    # w_k > 0 for some k >= 2 is required, so w_2 gets a negligible weight
    w = WeightSequence.explicit([1, 1, 1e-300], allow_w0=True)
    counts = Counter()
    for r in range(4000):
        d = sample_degree_sequence(3, w, replicate_rng(5, r))
        assert sorted(d.tolist()) == [0, 1, 1, 1]
        counts[tuple(d)] += 1
    assert len(counts) == 4
    assert sps.chisquare(list(counts.values())).pvalue > 0.001


def test_sampler_deterministic():
    w = WeightSequence.power_law(3)
    a = sample_tree(300, w, replicate_rng(1, 3))
    b = sample_tree(300, w, replicate_rng(1, 3))
    assert a == b


def test_sampler_cap(monkeypatch):
    monkeypatch.setenv("CONDMAP_CAP_N", "50")
    with pytest.raises(SamplerCapError, match="CONDMAP_CAP_N"):
        DegreeSampler(51, WeightSequence.power_law(3))


def test_sampler_partition_matches_enumeration():
    for spec in ("powerlaw:beta=3", "factorial:alpha=1"):
        w = WeightSequence.from_spec(spec)
        for n in range(1, 8):
            logs = [tree_weight(t, w) for t in enumerate_trees(n)]
            # n+1 exchangeable slots: each tree appears once per rotation
            expected = math.log(math.fsum(math.exp(x) for x in logs) * (n + 1))
            assert DegreeSampler(n, w).log_partition == pytest.approx(expected, rel=1e-12)


def test_partition_exact_rational_dp():
    w = WeightSequence.power_law(3)
    n = 64
    ex = w.exact_prefix(n)
    poly = [1] + [0] * n
    base = list(ex)
    for _ in range(n + 1):
        new = [0] * (n + 1)
        for a, x in enumerate(poly):
            if x:
                for b in range(n + 1 - a):
                    new[a + b] += x * base[b]
        poly = new
    exact = poly[n]
    assert DegreeSampler(n, w).log_partition == pytest.approx(
        math.log(exact.numerator) - math.log(exact.denominator), rel=1e-12)


def test_factorial_max_degree_law():
    # exact P(max d >= 15) for factorial(1), n = 20 from the rational DP
    n, thr = 20, 15
    w = WeightSequence.factorial(1)
    ex = [math.factorial(i) for i in range(n + 1)]

    def z(k):
        poly = [1] + [0] * n
        for _ in range(n + 1):
            new = [0] * (n + 1)
            for a, x in enumerate(poly):
                if x:
                    for b in range(min(k, n - a) + 1):
                        new[a + b] += x * ex[b]
            poly = new
        return poly[n]

    exact = 1 - z(thr - 1) / z(n)
    assert exact == pytest.approx(0.98437311, abs=1e-8)
    draws = 10_000
    rng = replicate_rng(20, 0)
    s = DegreeSampler(n, w)
    hits = sum(int(s.sample(rng).max() >= thr) for _ in range(draws))
    se = math.sqrt(exact * (1 - exact) / draws)
    assert abs(hits / draws - exact) < 4 * se


def test_factorial_large_condensate():
    w = WeightSequence.factorial(1)
    n = 2000
    trees = sample_trees(n, w, replicate_rng(3, 0), 200)
    frac = np.mean([t.outdeg.max() >= n - 20 for t in trees])
    assert frac >= 0.95


def test_sample_tree_single_edge():
    assert sample_tree(1, WeightSequence.power_law(3), replicate_rng(0)).outdeg.tolist() == [1, 0]


def test_condensate_path_mobile():
    t = PlanarTree([1, 1, 0])
    cv = condensate_view(t)
    assert cv.s_index == 1 and cv.delta_n == 2
    assert cv.subtree_sizes.tolist() == [0, 0]
    assert cv.white_counts.tolist() == [1, 1]


def test_condensate_star():
    d = 5
    t = PlanarTree([1, d - 1] + [0] * (d - 1))
    cv = condensate_view(t)
    assert cv.delta_n == d
    assert cv.subtree_sizes.tolist() == [0] * d


def test_condensate_first_maximiser():
    # two black vertices of degree 2: the lexicographically first wins
    t = PlanarTree([2, 1, 0, 1, 0])
    assert condensate_view(t).s_index == 1


def test_condensate_requires_black():
    with pytest.raises(ValueError):
        condensate_view(PlanarTree([0]))


@pytest.mark.parametrize("n", range(1, 8))
def test_mass_sum_identity(n):
    for tp in enumerate_trees(n):
        tau = gn_inverse(tp)
        cv = condensate_view(tau)
        assert cv.delta_n + int(cv.subtree_sizes.sum()) == n
        fwd, order = gn_forward(tau, return_order=True)
        assert fwd == tp
        s_new = int(np.flatnonzero(order == cv.s_index)[0])
        kids = fwd.children(s_new)
        assert kids.size == cv.delta_n
        sub = fwd.subtree_size[kids] - 1
        outside = n - int(fwd.subtree_size[s_new])
        assert cv.subtree_sizes[0] == outside + sub[-1] + 1
        assert cv.subtree_sizes[1:].tolist() == sub[:-1].tolist()
