import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from models.errors import BoundaryError, NotSwitchableError
from models.flux_model import BoundarySpec, FluxConfig
from models.lattice_model import GHOST, BoundaryCondition, Lattice, dumbbell, site, square_with_ghost
from models.ledger_engine import random_walk_flux, verify_paired_switch, verify_psi
from models.pairing_model import (Label, PairedGraph, Pairing, SlotGraph, decompose, enumerate_pairings,
                                  euler_decompose, extract_switch_graph, pairing_count, paired_switch,
                                  paired_weight, random_pairing, site_matchings, total_pairing_count)

SQUARE = square_with_ghost()
BOX = Lattice(1, BoundaryCondition.PERIODIC)
X, Y = site(0, 0), site(1, 1)
SOURCE = BoundarySpec.source_sink(X, Y)


def _loop_through_ghost():
    walk = [X, site(1, 0), Y, site(0, 1), X, GHOST, X]
    return FluxConfig.from_edges(zip(walk, walk[1:]), SQUARE)


@pytest.mark.parametrize("d", range(5))
def test_pairing_count_is_factorial(d):
    lat = dumbbell()
    a, b = lat.sites
    flux = FluxConfig({(a, b): d, (b, a): d}, lat)
    graph = SlotGraph.from_flux(flux)
    assert pairing_count(flux, a) == math.factorial(d) == len(site_matchings(graph, a))


def test_psi_check_against_brute_force():
    assert verify_psi(4).passed


def test_pairing_count_rejects_unbalanced_and_endpoints():
    flux = FluxConfig.from_edges([(X, site(1, 0)), (site(1, 0), Y)], SQUARE)
    with pytest.raises(BoundaryError):
        pairing_count(flux, X)
    with pytest.raises(BoundaryError):
        pairing_count(flux, X, SOURCE)
    assert total_pairing_count(flux, SOURCE) == 1


def test_enumerate_pairings_lists_each_once():
    flux = _loop_through_ghost()
    found = list(enumerate_pairings(flux, BoundarySpec.empty()))
    assert len(found) == len(set(found)) == total_pairing_count(flux, BoundarySpec.empty()) == 2
    for pg in found:
        pg.validate()


def test_slot_graph_projection_and_switch():
    flux = _loop_through_ghost()
    graph = SlotGraph.from_flux(flux, Label.DELTA)
    assert len(graph) == flux.total_edges
    assert graph.flux() == flux
    assert graph.flux(Label.FREE).total_edges == 0
    reversed_graph = graph.switched(graph.slots())
    assert reversed_graph.flux() == flux.reversed()
    assert all(reversed_graph.label(s) is Label.FREE for s in reversed_graph.slots())


def test_individuations_count_arrangements(bar):
    a, b = bar.sites
    nd = FluxConfig({(a, b): 1}, bar)
    n0 = FluxConfig({(a, b): 1, (b, a): 1}, bar)
    graphs = list(SlotGraph.individuations(nd, n0))
    # trois jetons distincts sur une seule liaison
    assert len(graphs) == 6
    assert all(g.flux(Label.DELTA) == nd and g.flux(Label.FREE) == n0 for g in graphs)


def test_validate_rejects_pairing_at_endpoints():
    flux = FluxConfig.from_edges([(X, site(1, 0)), (site(1, 0), Y)], SQUARE)
    graph = SlotGraph.from_flux(flux)
    stray = Pairing({X: [(graph.outgoing(X)[0], graph.outgoing(site(1, 0))[0])]})
    with pytest.raises(BoundaryError):
        PairedGraph(graph, stray, SOURCE).validate()


def test_paired_weight_sums_to_bond_weights(beta):
    flux = _loop_through_ghost()
    total = sum(paired_weight(pg, beta) for pg in enumerate_pairings(flux, BoundarySpec.empty()))
    expected = Fraction(1)
    for bond, n in flux.bond_totals().items():
        expected *= (beta * SQUARE.bond_coupling(bond)) ** n / math.factorial(n)
    assert total == expected


def test_paired_weight_halves_with_source(beta):
    flux = FluxConfig.from_edges([(X, site(1, 0)), (site(1, 0), Y)], SQUARE)
    (pg,) = enumerate_pairings(flux, SOURCE)
    assert paired_weight(pg, beta) == Fraction(1, 2) * (beta / 6) ** 2


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 10))
@settings(max_examples=60, deadline=None)
def test_decompose_partitions_closed_graphs(seed, steps):
    rng = np.random.default_rng(seed)
    flux = random_walk_flux(BOX, rng, steps)
    pg = random_pairing(SlotGraph.from_flux(flux), BoundarySpec.empty(), rng).validate()
    dec = decompose(pg)
    assert dec.trail is None
    assert dec.covers_exactly()
    assert dec.reassemble() == flux
    assert all(sites[0] == sites[-1] for sites in dec.loop_sites)


@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 10))
@settings(max_examples=60, deadline=None)
def test_decompose_finds_single_trail(seed, steps):
    rng = np.random.default_rng(seed)
    x, y = site(0, 0, 0), site(1, 1, 0)
    flux = random_walk_flux(BOX, rng, steps, start=x, stop=y)
    pg = random_pairing(SlotGraph.from_flux(flux), BoundarySpec.source_sink(x, y), rng)
    dec = decompose(pg)
    assert dec.trail_sites[0] == x and dec.trail_sites[-1] == y
    assert sum(dec.loop_lengths()) + len(dec.trail) == flux.total_edges
    assert dec.reassemble() == flux


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 10))
@settings(max_examples=60, deadline=None)
def test_euler_peels_simple_cycles(seed, steps):
    flux = random_walk_flux(BOX, np.random.default_rng(seed), steps)
    dec = euler_decompose(flux)
    assert dec.covers_exactly()
    assert dec.reassemble() == flux
    for sites in dec.loop_sites:
        assert sites[0] == sites[-1]
        assert len(set(sites[:-1])) == len(sites) - 1


def test_euler_requires_closed_graph():
    with pytest.raises(BoundaryError):
        euler_decompose(FluxConfig.from_edges([(X, site(1, 0))], SQUARE))


def test_decompose_requires_full_pairing():
    flux = FluxConfig.from_edges([(X, site(1, 0)), (site(1, 0), Y)], SQUARE)
    pg = PairedGraph(SlotGraph.from_flux(flux), Pairing({}), SOURCE, region=1)
    with pytest.raises(BoundaryError):
        decompose(pg)


def test_paired_switch_reverses_the_trail(beta):
    flux = FluxConfig.from_edges([(X, site(1, 0)), (site(1, 0), Y), (Y, site(0, 1)), (site(0, 1), Y)],
                                 SQUARE)
    for pg in enumerate_pairings(flux, SOURCE):
        sg = extract_switch_graph(pg)
        assert sg.switchable
        switched = paired_switch(pg, sg)
        assert switched.boundary == SOURCE.reversed()
        assert switched.pairing == pg.pairing
        assert paired_switch(switched) == pg
        assert paired_weight(switched, beta) == paired_weight(pg, beta)


def test_paired_switch_refuses_ghost_components():
    flux = FluxConfig.from_edges([(X, GHOST), (GHOST, Y)], SQUARE)
    (pg,) = enumerate_pairings(flux, SOURCE)
    assert not extract_switch_graph(pg).switchable
    with pytest.raises(NotSwitchableError):
        paired_switch(pg)


def test_paired_switch_exhaustive_on_square(beta):
    report = verify_paired_switch(SQUARE, X, Y, beta, 4)
    assert report.passed
    assert report.checked > 0 and report.skipped > 0
