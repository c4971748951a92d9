import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from condmap.bijections import Mobile, bdg_inverse
from condmap.labels import sample_mobile
from condmap.planarmap import (PlanarMap, all_pairs_distances, bfs_distances, degree_profile,
                               face_degrees, validate)
from condmap.rng import replicate_rng
from condmap.trees import PlanarTree
from condmap.weights import WeightSequence


def path_map():
    return bdg_inverse(Mobile(PlanarTree([1, 1, 0]), [0, 0, -1]))


def test_path_distances():
    pm = path_map()
    assert bfs_distances(pm, pm.rho).tolist() == [2, 1, 0]


def test_single_edge_faces():
    pm = bdg_inverse(Mobile(PlanarTree([1, 0]), [0, 0]))
    assert face_degrees(pm).tolist() == [2]
    assert degree_profile(pm) == ({2: 1}, 2, 1)


def test_path_face_degree():
    assert face_degrees(path_map()).tolist() == [4]


def _floyd(pm):
    rows = pm.vertex_of
    cols = pm.vertex_of[pm.twin]
    g = csr_matrix((np.ones(rows.size), (rows, cols)), shape=(pm.n_vertices,) * 2)
    return shortest_path(g, unweighted=True, directed=False)


def test_distances_against_all_pairs_oracle():
    w = WeightSequence.power_law(3)
    for r in range(10):
        pm = bdg_inverse(sample_mobile(40, w, replicate_rng(1, r)))
        d = all_pairs_distances(pm)
        assert np.array_equal(d, _floyd(pm).astype(np.int64))
        assert np.array_equal(d, d.T)


def test_handshake_and_euler_sampled():
    w = WeightSequence.power_law(3)
    for r in range(20):
        pm = bdg_inverse(sample_mobile(1000, w, replicate_rng(2, r)))
        assert int(face_degrees(pm).sum()) == 2 * pm.n_edges
        assert pm.n_vertices - pm.n_edges + pm.n_faces == 2


def test_validate_corrupted_twin():
    pm = path_map()
    twin = pm.twin.copy()
    twin[0], twin[1] = 0, 1
    bad = PlanarMap(pm.next_around_vertex, pm.vertex_of, pm.root_arc, pm.rho, twin=twin)
    rep = validate(bad)
    assert not rep.ok and "twin_involution" in rep.failures()


def test_validate_odd_face():
    # triangle: one odd cycle, two faces of degree 3
    pm = PlanarMap([5, 2, 1, 4, 3, 0], [0, 1, 1, 2, 2, 0], 0, 0)
    rep = validate(pm)
    assert rep.checks["euler"]
    assert not rep.checks["bipartite"] and not rep.checks["even_faces"]


def test_serialisation_round_trip():
    pm = bdg_inverse(sample_mobile(50, WeightSequence.power_law(3), replicate_rng(3)))
    d = pm.to_dict()
    assert d["schema_version"] == 1
    assert PlanarMap.from_dict(d) == pm
    assert len(pm.adjacency()) == pm.n_vertices


def test_canonical_code_invariant_under_relabelling():
    pm = bdg_inverse(sample_mobile(30, WeightSequence.power_law(3), replicate_rng(4)))
    rng = np.random.default_rng(0)
    perm_v = rng.permutation(pm.n_vertices)
    # relabel arcs by swapping whole edges so twin stays a ^ 1
    edges = rng.permutation(pm.n_edges)
    new_of_old = np.empty(pm.n_arcs, dtype=np.int64)
    new_of_old[0::2] = 2 * edges
    new_of_old[1::2] = 2 * edges + 1
    nxt = np.empty(pm.n_arcs, dtype=np.int64)
    nxt[new_of_old] = new_of_old[pm.next_around_vertex]
    vo = np.empty(pm.n_arcs, dtype=np.int64)
    vo[new_of_old] = perm_v[pm.vertex_of]
    other = PlanarMap(nxt, vo, new_of_old[pm.root_arc], perm_v[pm.rho], n_vertices=pm.n_vertices)
    assert validate(other).ok
    assert other.canonical_code() == pm.canonical_code()


def test_all_pairs_cap():
    pm = bdg_inverse(sample_mobile(60, WeightSequence.power_law(3), replicate_rng(5)))
    with pytest.raises(ValueError):
        all_pairs_distances(pm, cap=10)


def test_sparse_example_two_large_faces():
    w = WeightSequence.sparse_example(1.0)
    n = 2 * 3 ** 5
    for r in range(5):
        pm = bdg_inverse(sample_mobile(n, w, replicate_rng(6, r)))
        assert validate(pm).ok
        top = np.sort(face_degrees(pm))[::-1][:2]
        assert np.all(np.abs(top / (2 * n) - 0.5) < 0.05)
