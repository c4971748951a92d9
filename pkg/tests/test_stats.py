import json
import math

import numpy as np
import pytest

from condmap.bijections import Mobile, bdg_inverse
from condmap.labels import sample_mobile
from condmap.planarmap import all_pairs_distances
from condmap.rng import replicate_rng
from condmap.stats import (Correspondence, RegimeError, correspondence, distortion_K,
                           exact_distortion, excursion_oracle, lemma_dis_instance, oracle_rng,
                           pi_map, run_degree_profile, run_lemma_dis, run_prop_scgw,
                           run_prop_super, run_thm_inv, star_map)
from condmap.trees import PlanarTree, condensate_view
from condmap.weights import WeightSequence

PATH = Mobile(PlanarTree([1, 1, 0]), [0, 0, -1])


def test_pi_map_path():
    cv = condensate_view(PATH.tree)
    pi = pi_map(cv, PATH.tree)
    assert pi.tolist() == [0, 1, 2]  # root -> 0, leaf -> 1, closing v_N -> Delta


def test_pi_preimage_counts():
    w = WeightSequence.power_law(3)
    for r in range(30):
        m = sample_mobile(300, w, replicate_rng(1, r))
        cv = condensate_view(m.tree)
        pi = pi_map(cv, m.tree)
        assert pi[0] == 0 and pi[-1] == cv.delta_n
        counts = np.bincount(pi[:-1], minlength=cv.delta_n + 1)
        assert counts[1:cv.delta_n].tolist() == cv.white_counts[1:].tolist()
        assert counts[0] + counts[cv.delta_n] == cv.white_counts[0]


def test_star_map_shape():
    w = WeightSequence.power_law(3)
    for r in range(100):
        m = sample_mobile(1000, w, replicate_rng(2, r))
        cv = condensate_view(m.tree)
        trimmed, star = star_map(m, cv)
        assert int(trimmed.tree.outdeg[1]) + 1 == cv.delta_n
        assert star.n_faces == 1 and star.n_vertices == cv.delta_n + 1
        assert star.n_edges == cv.delta_n
        assert np.all(star.bfs(0) >= 0)


def _brute_K(m, cv):
    t = m.tree
    best = 0
    comp = cv.component_of(t)
    for v in t.white_vertices:
        i = comp[v]
        best = max(best, abs(int(m.labels[v]) - int(m.labels[cv.neighbors[max(i, 0)]])))
    return best


def test_K_examples():
    assert distortion_K(PATH, condensate_view(PATH.tree)) == 0
    t = PlanarTree([1, 4, 0, 0, 0, 0])
    m = Mobile(t, [0, 0, 1, 1, 0, -1])
    assert distortion_K(m, condensate_view(t)) == 0


def test_K_brute_force():
    w = WeightSequence.power_law(3)
    for r in range(50):
        m = sample_mobile(500, w, replicate_rng(3, r))
        cv = condensate_view(m.tree)
        assert distortion_K(m, cv) == _brute_K(m, cv)


def test_distortion_identity_and_symmetry():
    m = sample_mobile(60, WeightSequence.power_law(3), replicate_rng(4))
    pm = bdg_inverse(m)
    ident = Correspondence(np.arange(pm.n_vertices), np.arange(pm.n_vertices))
    assert exact_distortion(pm, pm, ident) == 0
    cv = condensate_view(m.tree)
    _, star = star_map(m, cv)
    c = correspondence(m, cv)
    swapped = Correspondence(c.right, c.left)
    assert exact_distortion(pm, star, c) == exact_distortion(star, pm, swapped)


def test_distortion_covers_both_sides():
    m = sample_mobile(100, WeightSequence.power_law(3), replicate_rng(5))
    cv = condensate_view(m.tree)
    full = bdg_inverse(m)
    _, star = star_map(m, cv)
    c = correspondence(m, cv)
    assert set(c.left.tolist()) == set(range(full.n_vertices))
    assert set(c.right.tolist()) == set(range(star.n_vertices))


def test_distortion_cap():
    m = sample_mobile(600, WeightSequence.power_law(3), replicate_rng(6))
    cv = condensate_view(m.tree)
    with pytest.raises(ValueError):
        exact_distortion(bdg_inverse(m), star_map(m, cv)[1], correspondence(m, cv))


def test_distortion_invariant_under_vertex_relabelling():
    m = sample_mobile(40, WeightSequence.power_law(3), replicate_rng(7))
    cv = condensate_view(m.tree)
    full = bdg_inverse(m)
    _, star = star_map(m, cv)
    c = correspondence(m, cv)
    d1 = all_pairs_distances(full)
    d2 = all_pairs_distances(star)
    perm = np.random.default_rng(1).permutation(full.n_vertices)
    inv = np.argsort(perm)
    d1p = d1[np.ix_(inv, inv)]  # distances indexed by permuted ids
    left = perm[c.left]
    direct = np.max(np.abs(d1p[np.ix_(left, left)] - d2[np.ix_(c.right, c.right)]))
    assert direct == exact_distortion(full, star, c)


def test_lemma_dis_star_and_additive_bound():
    w = WeightSequence.factorial(1)
    for r in range(50):
        res = lemma_dis_instance(sample_mobile(50, w, replicate_rng(8, r)))
        assert res["star_ok"]
        assert res["dis"] <= 10 * res["K"] + 2


def test_lemma_dis_bare_bound_has_small_counterexample():
    # K = 0 but two whites of tau_{n,0} with the label of s_0 sit at distance 2
    m = Mobile(PlanarTree([2, 1, 0, 1, 0]), [0, 0, -1, 0, 0])
    res = lemma_dis_instance(m)
    assert (res["K"], res["dis"]) == (0, 2)
    assert not res["bound_holds"]


def test_excursion_oracle_shape():
    out = excursion_oracle(500, 200, oracle_rng(0))
    assert np.all(out["max"] > 0) and np.all(out["at_t"] >= 0)
    assert np.all(out["at_t"] <= out["max"])


def test_excursion_oracle_mean_max():
    a = excursion_oracle(1000, 20_000, oracle_rng(1))["max"].mean()
    b = excursion_oracle(10_000, 5_000, oracle_rng(2))["max"].mean()
    assert abs(a - b) < 0.02
    assert b == pytest.approx(math.sqrt(math.pi / 2), abs=0.02)


def test_experiments_are_deterministic():
    a = run_lemma_dis("powerlaw:beta=3", 30, 5, seed=11)
    b = run_lemma_dis("powerlaw:beta=3", 30, 5, seed=11)
    assert a.to_json() == b.to_json()
    assert a.rows_csv() == b.rows_csv()
    json.loads(a.to_json())


def test_threads_do_not_change_results():
    a = run_prop_scgw("powerlaw:beta=3", 300, 8, seed=3)
    b = run_prop_scgw("powerlaw:beta=3", 300, 8, seed=3, threads=3)
    assert a.to_json() == b.to_json()


def test_regime_mismatch():
    with pytest.raises(RegimeError):
        run_prop_scgw("factorial:alpha=1", 100, 2, seed=0)
    with pytest.raises(RegimeError):
        run_thm_inv("geomtilt:r=0.5", 100, 2, [0.5], seed=0)


def test_prop_super_alpha2():
    res = run_prop_super(2.0, 2000, 40, seed=5)
    assert res.stats["gap_zero_freq"].estimate >= 0.95


def test_thm_inv_small_t_degenerate():
    res = run_thm_inv("powerlaw:beta=3", 2000, 60, [0.01, 0.25, 0.75], seed=9)
    assert res.stats["L@0.01"].estimate < 0.02
    s1, s3 = res.stats["L@0.25"], res.stats["L@0.75"]
    assert 0 <= s1.p_value <= 1


def test_degree_profile_runner():
    res = run_degree_profile("powerlaw:beta=3", 2000, 20, seed=1)
    assert abs(res.stats["max_face_over_2n"].estimate - 0.2530) < 0.05
