import random

import pytest

from simi.graphs import (DecoratedTree, GraphError, Lattice, Line, RegularTree, graph_distance, graph_from_dict,
                         neighbors)

from oracles import bfs_distance

FAMILIES = [Lattice(1), Lattice(2), Lattice(3), Line(), RegularTree(3), RegularTree(4), DecoratedTree(1),
            DecoratedTree(4)]


def random_vertex(g, rng, depth=6):
    """A random vertex reached by a short walk from the origin."""
    v = g.origin()
    for _ in range(rng.randrange(depth + 1)):
        v = rng.choice(g.neighbors(v))
    return v


def test_lattice_neighbor_order():
    assert neighbors(Lattice(2), (0, 0)) == [(1, 0), (-1, 0), (0, 1), (0, -1)]


def test_tree_root_neighbors():
    nb = RegularTree(3).neighbors(())
    assert nb == [(0,), (1,), (2,)]


def test_tree_parent_first():
    assert RegularTree(4).neighbors((2, 1)) == [(2,), (2, 1, 0), (2, 1, 1), (2, 1, 2)]


def test_decorated_root_neighbors():
    g = DecoratedTree(5)
    nb = g.neighbors(((), 0))
    assert len(nb) == 8 == g.degree(((), 0))
    assert nb[:3] == [((0,), 0), ((1,), 0), ((2,), 0)]
    assert nb[3:] == [((), k) for k in range(1, 6)]


def test_decorated_clique_vertex():
    g = DecoratedTree(4)
    assert g.neighbors(((1,), 2)) == [((1,), 0), ((1,), 1), ((1,), 3), ((1,), 4)]


@pytest.mark.parametrize("g", FAMILIES, ids=str)
def test_symmetry_and_degree(g):
    rng = random.Random(7)
    for _ in range(10_000 if isinstance(g, (Lattice, Line)) else 2000):
        v = random_vertex(g, rng)
        nb = g.neighbors(v)
        assert len(nb) == len(set(nb)) == g.degree(v)
        for j, u in enumerate(nb):
            assert g.neighbor(v, j) == u
            assert v in g.neighbors(u)


@pytest.mark.parametrize("g", FAMILIES, ids=str)
def test_encode_roundtrip(g):
    rng = random.Random(3)
    seen = {}
    for _ in range(500):
        v = random_vertex(g, rng, depth=8)
        b = g.encode(v)
        assert g.decode(b) == v
        assert seen.setdefault(b, v) == v


def test_degree_formulas():
    assert Lattice(3).degree((5, -1, 2)) == 6
    assert Line().degree(-9) == 2
    assert RegularTree(7).degree((3, 0)) == 7
    g = DecoratedTree(6)
    assert g.degree(((0,), 0)) == 9 and g.degree(((0,), 3)) == 6


def test_distance_examples():
    assert graph_distance(Lattice(2), (0, 0), (3, -4)) == 7
    assert graph_distance(RegularTree(3), (), (0, 1)) == 2
    assert graph_distance(DecoratedTree(2), ((), 1), ((0,), 2)) == 3


@pytest.mark.parametrize("g", [Lattice(1), Lattice(2), Lattice(3), Line(), RegularTree(3), DecoratedTree(2),
                               DecoratedTree(4)], ids=str)
def test_distance_matches_bfs(g):
    rng = random.Random(11)
    for _ in range(150):
        u = random_vertex(g, rng, depth=3)
        v = random_vertex(g, rng, depth=3)
        if g.radius(u) + g.radius(v) > 6:
            continue
        assert g.distance(u, v) == bfs_distance(g, u, v, limit=12)


def test_invalid_vertices():
    with pytest.raises(GraphError):
        RegularTree(3).neighbors((0, 2))  # second symbol must be < d-1
    with pytest.raises(GraphError):
        Lattice(2).neighbors((0, 0, 0))
    with pytest.raises(GraphError):
        DecoratedTree(3).neighbors(((), 4))


def test_family_parameter_checks():
    with pytest.raises(GraphError):
        RegularTree(2)
    with pytest.raises(GraphError):
        DecoratedTree(0)
    with pytest.raises(GraphError):
        Lattice(0)


def test_from_dict_roundtrip():
    for g in FAMILIES:
        assert graph_from_dict(g.to_dict()) == g


def test_vectorised_fingerprints():
    import numpy as np

    g = Lattice(2)
    pts = np.array([[0, 0], [3, -4], [-7, 12], [100, 1]])
    assert [int(x) for x in g.fingerprints(pts)] == [g.fingerprint(tuple(map(int, r))) for r in pts]
