import math
from fractions import Fraction

import numpy as np
import pytest

from condmap import gw
from condmap.rng import replicate_rng
from condmap.trees import PlanarTree, enumerate_trees
from condmap.weights import WeightSequence, analyze

KAPPA = 0.74699889203
P0 = 0.45412087152


@pytest.fixture(scope="module")
def pl3():
    return gw.tilt(gw.probability_tilt(WeightSequence.power_law(3)))


def test_solve_z_geometric():
    w = WeightSequence.geometric_tilt(0.5)
    Z = gw.solve_Z(w)
    assert abs(Z - 2) < 2e-12
    assert abs(gw._g(w, Z, 1) - 1) < 1e-10


def test_solve_z_not_admissible():
    with pytest.raises(gw.NotAdmissibleError):
        gw.solve_Z(WeightSequence.power_law(3))
    # g(z) = 1 + 4 z^2 stays above z everywhere
    with pytest.raises(gw.NotAdmissibleError):
        gw.solve_Z(WeightSequence.explicit([1, 0, 4]))


def test_solve_z_residual_probability_tilt():
    w = gw.probability_tilt(WeightSequence.power_law(3))
    Z = gw.solve_Z(w)
    assert abs(gw._g(w, Z) - Z) < 1e-12 * Z
    assert Z == pytest.approx(1 / P0, rel=1e-10)


def test_tilt_geometric_is_critical():
    spec = gw.tilt(WeightSequence.geometric_tilt(0.5))
    assert spec.critical
    assert spec.offspring[:4] == pytest.approx([0.5, 0.25, 0.125, 0.0625])
    assert spec.exact[:3] == (Fraction(1, 2), Fraction(1, 4), Fraction(1, 8))
    assert spec.variance == pytest.approx(2.0, rel=1e-10)


def test_tilt_power_law(pl3):
    assert abs(math.fsum(pl3.offspring) + pl3.tail_mass - 1) < 1e-12
    assert pl3.tail_mass < 1e-12
    assert pl3.subcritical and pl3.mean == pytest.approx(KAPPA, abs=1e-6)
    assert pl3.p0 == pytest.approx(P0, abs=1e-10)


def test_two_type_laws_geometric():
    spec = gw.tilt(WeightSequence.geometric_tilt(0.5))
    white, black = gw.two_type_offspring(spec)
    k = np.arange(10)
    assert white[:10] == pytest.approx(2.0 ** (-k - 1))
    assert math.fsum(black) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("n", range(1, 6))
def test_two_type_image(pl3, n):
    assert gw.two_type_check(pl3, n) < 1e-10
    # the two-type probabilities of all coloured trees with n edges sum like GW(p^)
    total = math.fsum(gw.gw_probability(t, pl3) for t in enumerate_trees(n))
    assert total < 1


def test_xi0_mean(pl3):
    law = gw.xi0_law(pl3)
    assert law.tail_mass < 1e-10
    target = 1 - (1 - analyze(WeightSequence.power_law(3)).kappa) / P0
    assert target == pytest.approx(0.4428, abs=1e-3)
    assert law.mean == pytest.approx(target, abs=1e-3)
    assert law.pmf[0] >= pl3.p0
    assert law.mean < 1


def test_xi0_sampler(pl3):
    law = gw.xi0_law(pl3)
    x = law.sample(replicate_rng(1), 100_000)
    # heavy tail: compare medians of the law rather than the mean
    assert abs(x.mean() - law.mean) < 3 * x.std() / math.sqrt(x.size)
    assert np.mean(x == 0) == pytest.approx(law.pmf[0], abs=0.005)


def test_twig_examples():
    assert gw.twig_decompose(PlanarTree([1, 1, 1, 0])).n_vertices == 1
    cherry = gw.twig_decompose(PlanarTree([2, 0, 0]))
    assert cherry.n_vertices == 2 and cherry.outdeg.tolist() == [1, 0]
    t = PlanarTree([2, 1, 0, 0])
    assert gw.twig_decompose(t) == gw.twig_decompose(t)


@pytest.mark.parametrize("n", range(0, 9))
def test_twig_count(n):
    for t in enumerate_trees(n):
        assert gw.twig_decompose(t).n_vertices == t.leaves.size


def test_minami_exact_rational():
    spec = gw.tilt(WeightSequence.geometric_tilt(0.25))
    assert spec.exact is not None
    a = gw.leaf_law(spec, 8, exact=True)
    b = gw.xi0_progeny_law(spec, 8, exact=True)
    assert a[1:] == b[1:]
    assert all(isinstance(x, Fraction) for x in a[1:])


def test_leaf_law_against_enumeration():
    # P(N0 = m) summed over trees with at most 6 edges bounds the series from below
    spec = gw.tilt(WeightSequence.geometric_tilt(0.25))
    a = gw.leaf_law(spec, 3, exact=True)
    p = list(spec.exact)
    partial = [Fraction(0)] * 4
    for n in range(0, 9):
        for t in enumerate_trees(n):
            m = int(t.leaves.size)
            if m <= 3:
                partial[m] += math.prod(p[d] for d in t.outdeg.tolist())
    for m in range(1, 4):
        assert partial[m] <= a[m]
        assert float(a[m] - partial[m]) < 0.05


def test_leaf_count_checks(pl3):
    rep = gw.leaf_count_checks(pl3, 8, draws=20_000, rng=replicate_rng(2), beta=3,
                               tail_ns=(50, 200))
    assert rep["minami_tv"] < 1e-10
    assert rep["EN"]["target"] == pytest.approx(3.9526, abs=1e-4)
    assert rep["EN0"]["target"] == pytest.approx(1.7949, abs=1e-4)
    assert len(rep["tail"]) == 2 and all(r["P"] > 0 for r in rep["tail"])


def test_leaf_count_supercritical_rejected():
    spec = gw.GWSpec(np.array([0.2, 0.2, 0.6]), 0.0, 1.4, 0.64, 1.0, "test")
    with pytest.raises(ValueError):
        gw.leaf_count_checks(spec, 4)


@pytest.mark.parametrize("spec", ["powerlaw:beta=3", "powerlaw:beta=4", "geomtilt:r=0.5"])
def test_tilt_preserves_conditional_law(spec):
    w = WeightSequence.from_spec(spec)
    base = w if spec.startswith("geomtilt") else gw.probability_tilt(w)
    s = gw.tilt(base)
    for n in range(1, 7):
        assert gw.tilt_conditional_check(w, n, s) < 1e-10
