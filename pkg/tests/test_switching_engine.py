import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from models.errors import SwitchingError
from models.flux_model import BoundarySpec, FluxConfig, satisfies
from models.lattice_model import GHOST, site, square_with_ghost
from models.switching_engine import (DPath, GraphPair, UPath, adverse_example, canonical_partition,
                                     contains, directed_paths, directed_switch, odd_sites,
                                     undirected_paths, undirected_switch, verify_directed_switch,
                                     verify_undirected_bijection)

SQUARE = square_with_ghost()
X, Y = site(0, 0), site(1, 1)
SIDE = UPath.from_sites([X, site(1, 0), Y])
INNER_BONDS = [b for b in SQUARE.bonds if GHOST not in b]

edge_sets = st.frozensets(st.sampled_from(SQUARE.bonds))


@given(edge_sets, edge_sets)
def test_undirected_switch_is_an_involution(A, B):
    pair = GraphPair(A | SIDE.edge_set, B)
    image = undirected_switch(pair, SIDE)
    assert image.union() == pair.union()
    assert undirected_switch(image, SIDE) == pair


def test_undirected_switch_moves_odd_sites():
    # toutes les paires disjointes de sous-graphes de la plaquette
    checked = 0
    for labels in itertools.product((0, 1, 2), repeat=len(INNER_BONDS)):
        A = frozenset(b for b, k in zip(INNER_BONDS, labels) if k == 1)
        B = frozenset(b for b, k in zip(INNER_BONDS, labels) if k == 2)
        if odd_sites(A) != {X, Y} or odd_sites(B) or not SIDE.edge_set <= A | B:
            continue
        image = undirected_switch(GraphPair(A, B), SIDE)
        assert not odd_sites(image.first)
        assert odd_sites(image.second) == {X, Y}
        checked += 1
    assert checked > 0


def test_undirected_switch_rejects_ghost_paths():
    through_ghost = UPath.from_sites([X, GHOST, Y])
    pair = GraphPair(through_ghost.edge_set, frozenset())
    with pytest.raises(SwitchingError):
        undirected_switch(pair, through_ghost)


def test_path_must_lie_in_union():
    with pytest.raises(SwitchingError):
        undirected_switch(GraphPair(frozenset(), frozenset()), SIDE)


def test_paths_are_sorted_and_avoid_ghost():
    paths = undirected_paths(SQUARE, X, Y)
    assert len(paths) == 2
    assert all(p.delta_avoiding for p in paths)
    assert paths[0].order_key() < paths[1].order_key()


def test_canonical_partition_uses_first_contained_path():
    paths = undirected_paths(SQUARE, X, Y)
    both = GraphPair(paths[0].edge_set | paths[1].edge_set, frozenset())
    only_second = GraphPair(paths[1].edge_set, frozenset())
    blocks = canonical_partition([both, only_second], paths)
    assert blocks == {0: [both], 1: [only_second]}


@pytest.mark.parametrize("max_edges", [4, 5, 6])
def test_undirected_bijection_on_square(max_edges):
    report = verify_undirected_bijection(SQUARE, X, Y, max_edges, Fraction(1, 2))
    assert report.passed
    assert report.lambda_count == report.gamma_count > 0
    assert all(b.bijective for b in report.blocks)


def test_directed_switch_reverses_the_source_path():
    P = DPath.from_sites([X, site(1, 0), Y])
    free = SQUARE.free_counterpart()
    pair = GraphPair(FluxConfig.from_edges(P.edges, SQUARE), FluxConfig.empty(free))
    image = directed_switch(pair, P)
    assert image.first.total_edges == 0
    assert image.second == P.reverse().as_flux()
    assert satisfies(image.second, BoundarySpec.source_sink(Y, X))
    assert directed_switch(image, P.reverse()) == pair


def test_directed_path_helpers():
    P = DPath.from_sites([X, site(0, 1), Y])
    assert (P.x, P.y) == (X, Y)
    assert P.reverse().reverse() == P
    assert contains(P.as_flux(), P)
    assert not contains(FluxConfig.empty(), P)
    assert len(directed_paths(SQUARE, X, Y)) == 2
    with pytest.raises(SwitchingError):
        DPath(((X, site(1, 0)), (site(0, 1), Y)))


def test_directed_switch_on_square():
    report = verify_directed_switch(SQUARE, X, Y, 4)
    assert report.passed
    assert report.checked > 0


@pytest.mark.slow
def test_adverse_witness_breaks_injectivity():
    witness = adverse_example()
    assert witness.verify()
    assert witness.G != witness.F
    assert directed_switch(witness.G, witness.P) == directed_switch(witness.F, witness.Q)
