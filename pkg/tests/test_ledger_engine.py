from fractions import Fraction

import pytest

from models.errors import BoundaryError, CostGuardError
from models.flux_model import BoundarySpec, FluxConfig
from models.lattice_model import BoundaryCondition, Lattice, ladder, site, square_with_ghost
from models.ledger_engine import (PairedEnsemble, WeightLedger, check_region, figure_instance,
                                  finitely_paired, paired_from_walks, pairing_total_identity, restrict,
                                  surgical_sets, verify_decompose,
                                  verify_figure, verify_surgical_involution,
                                  verify_surgical_weight_equality)
from models.pairing_model import canonical_components, reverse_components, surgical_switch

X, Y = site(0, 0), site(0, 1)
BETA = Fraction(1, 2)


@pytest.fixture(scope="module")
def ensemble():
    return PairedEnsemble.build(ladder(4), X, Y, BETA, 4)


@pytest.fixture(scope="module")
def ledgers(ensemble):
    return {n: WeightLedger.from_ensemble(ensemble, n) for n in (2, 3)}


def test_region_constraints():
    lat = ladder(4)
    check_region(lat, X, Y, 2)
    with pytest.raises(BoundaryError):
        check_region(lat, X, Y, 1)
    with pytest.raises(BoundaryError):
        check_region(lat, X, Y, 4)
    with pytest.raises(BoundaryError):
        check_region(square_with_ghost(), site(0, 0), site(1, 1), 3)


def test_ensemble_holds_both_sides(ensemble):
    deltas = list(ensemble.side(BoundarySpec.source_sink(X, Y)))
    frees = list(ensemble.side(BoundarySpec.source_sink(Y, X)))
    assert deltas and frees
    assert len(deltas) + len(frees) == len(ensemble.members)
    assert all(w > 0 for _, w in ensemble.members)


def test_pairing_total_identity(ensemble):
    report = pairing_total_identity(ladder(4), X, Y, BETA, 4, ensemble)
    assert report.passed
    assert report.checked == 2


@pytest.mark.parametrize("region", [2, 3])
def test_ledger_is_constant_on_classes(ledgers, region):
    report = ledgers[region].check()
    assert report.passed, report.counterexamples
    assert report.details["classes"] <= report.details["entries"]


def test_ledgers_are_consistent_across_regions(ledgers):
    report = ledgers[2].consistency(ledgers[3])
    assert report.passed, report.counterexamples
    with pytest.raises(BoundaryError):
        ledgers[3].consistency(ledgers[2])


def test_total_weight_is_preserved_by_restriction(ensemble, ledgers):
    total = sum(w for _, w in ensemble.members)
    for ledger in ledgers.values():
        assert sum(ledger.C.values()) == total


def test_restricted_graphs_are_finitely_paired(ensemble):
    for pg, _ in ensemble.members[:200]:
        assert finitely_paired(restrict(pg, 2))


def test_surgical_switch_preserves_ledger_weights(ledgers):
    report = verify_surgical_weight_equality(ladder(4), X, Y, BETA, 2, 4, ledgers[2])
    assert report.passed, report.counterexamples
    assert report.checked > 0


def test_surgical_switch_round_trip(ledgers):
    report = verify_surgical_involution(ledgers[2], X, Y)
    assert report.passed
    assert report.checked > 0



def test_surgical_sets_cover_paths_with_loops(ledgers):
    report = verify_surgical_weight_equality(ladder(4), X, Y, BETA, 2, 4, ledgers[2])
    assert report.details["with_loops"] > 0
    assert report.passed, report.counterexamples


def test_surgical_switch_along_path_and_loop():
    a, b = site(1, 0), site(1, 1)
    lat = ladder(4)
    pg, walks = paired_from_walks(lat, [[X, Y], [a, b, a]], BoundarySpec.source_sink(X, Y))
    components = canonical_components(pg.graph, [*walks[0], *walks[1]], X, Y)
    assert components[0] == walks[0]
    assert sorted(components[1]) == sorted(walks[1])
    after = surgical_switch(pg, components)
    assert after.boundary == BoundarySpec.source_sink(Y, X)
    assert after.flux == FluxConfig.from_edges([(Y, X), (a, b), (b, a)], lat)
    assert surgical_switch(after, reverse_components(components)) == pg
    assert [walks[0]] in surgical_sets(pg.graph, X, Y, 2)

def test_figure_instance_is_reproduced():
    before, P, expected = figure_instance()
    assert surgical_switch(before, [P]) == expected
    report = verify_figure()
    assert report.passed
    assert report.upsilon_before == report.upsilon_after


def test_decompose_sampling_on_periodic_box():
    lat = Lattice(1, BoundaryCondition.PERIODIC)
    report = verify_decompose(lat, 200, seed=7, x=site(0, 0, 0), y=site(1, 0, 0))
    assert report.passed
    assert report.checked == 200


def test_ensemble_guard():
    with pytest.raises(CostGuardError):
        PairedEnsemble.build(ladder(4), X, Y, BETA, 4, guard=10)
