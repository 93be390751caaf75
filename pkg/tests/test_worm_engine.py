from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from models.flux_model import FluxConfig, boundary
from models.lattice_model import BoundaryCondition, Lattice, dumbbell, site
from models.worm_engine import (WormSampler, WormState, acceptance_ratio, elementary_loops, loop_edges,
                                loop_structure_probe, worm_sample)

BOX = Lattice(2, BoundaryCondition.FREE)
BAR = dumbbell()


def test_elementary_loops_on_square(square):
    loops = elementary_loops(square)
    two_cycles = [l for l in loops if len(l) == 2]
    four_cycles = [l for l in loops if len(l) == 4]
    assert len(two_cycles) == square.bond_count()
    # la plaquette et quatre cycles passant par δ
    assert len(four_cycles) == 5
    assert len(set(map(frozenset, four_cycles))) == len(four_cycles)


def test_loop_edges_orientations():
    loop = (site(0), site(1), site(2), site(3))
    forward = loop_edges(loop)
    assert forward[-1] == (site(3), site(0))
    assert loop_edges(loop, -1) == [(b, a) for a, b in reversed(forward)]


@given(st.integers(0, 3), st.integers(0, 3), st.fractions(min_value=Fraction(1, 10), max_value=3))
@settings(max_examples=50)
def test_insert_then_delete_ratio_is_one(m, k, beta):
    a, b = BAR.sites
    flux = FluxConfig({(a, b): m, (b, a): k}, BAR)
    edges = loop_edges((a, b))
    up = acceptance_ratio(flux, edges, True, beta)
    after = flux + FluxConfig.from_edges(edges, BAR)
    down = acceptance_ratio(after, edges, False, beta)
    assert up * down == 1
    assert up == (beta / 6) ** 2 / ((m + 1) * (k + 1))


def test_delete_from_missing_edge_is_rejected(bar):
    a, b = bar.sites
    assert acceptance_ratio(FluxConfig.empty(bar), loop_edges((a, b)), False, Fraction(1)) == 0


def test_exact_and_sampler_ratios_share_one_kernel(bar):
    a, b = bar.sites
    edges = loop_edges((a, b))
    sampler = WormSampler(bar, 0.5, seed=0)
    exact = acceptance_ratio(FluxConfig.empty(bar), edges, True, Fraction(1, 2))
    assert isinstance(exact, Fraction) and exact == Fraction(1, 144)
    assert sampler._ratio(edges, True) == pytest.approx(float(exact), rel=1e-12)
    assert isinstance(sampler._ratio(edges, False), float) and sampler._ratio(edges, False) == 0.0


def test_float_ratio_matches_exact_ratio(square):
    sampler = WormSampler(square, 0.75, seed=0)
    for _ in range(500):
        sampler.step()
    flux = sampler.flux()
    for loop in elementary_loops(square)[:6]:
        edges = loop_edges(loop)
        for insert in (True, False):
            exact = acceptance_ratio(flux, edges, insert, Fraction(3, 4), square)
            assert sampler._ratio(edges, insert) == pytest.approx(float(exact), rel=1e-12)


def test_states_stay_balanced_and_seeded():
    first = list(worm_sample(BOX, 0.6, 2000, seed=5, every=100))
    second = list(worm_sample(BOX, 0.6, 2000, seed=5, every=100))
    assert [s.flux for s in first] == [s.flux for s in second]
    assert [s.step for s in first] == list(range(100, 2001, 100))
    for state in first:
        assert not any(boundary(state.flux).values())
    assert first[-1].accepted > 0


def test_dumbbell_probe_sees_only_two_cycles(bar):
    report = loop_structure_probe(worm_sample(bar, 3.0, 3000, seed=9, every=10), cap=2, seed=1)
    assert report.total_edges > 0
    assert list(report.histogram["length"]) == [2]
    assert list(report.fraction["fraction"]) == [0.0, 1.0]
    assert report.fraction_at_cap == 1.0
    assert report.median_length == 2.0
    assert report.passed


@pytest.mark.parametrize("method", ["pairing", "euler"])
def test_probe_fraction_is_a_distribution(method):
    report = loop_structure_probe(worm_sample(BOX, 0.8, 5000, seed=3, every=50), cap=4, method=method)
    assert report.states == 100
    assert report.unbalanced == 0
    assert report.monotone and report.terminal_one
    assert report.histogram["edges"].sum() == report.total_edges
    assert 0.0 <= report.fraction_at_cap <= 1.0


def test_empty_probe_is_trivially_complete():
    report = loop_structure_probe([WormState(FluxConfig.empty(BOX), 1, 0)], cap=3)
    assert report.total_edges == 0
    assert report.fraction_at_cap == 1.0
    assert report.passed


def test_unbalanced_states_are_counted(bar):
    a, b = bar.sites
    report = loop_structure_probe([WormState(FluxConfig({(a, b): 1}, bar), 1, 0)], cap=2)
    assert report.unbalanced == 1
    assert not report.passed
