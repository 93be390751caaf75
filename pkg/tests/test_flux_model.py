from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from models.errors import BoundaryError, CostGuardError, LatticeError
from models.flux_model import (BoundarySpec, FluxConfig, as_fraction, boundary, difference_terms, dominant_configs,
                               embedding_count, enumerate_flux, merge, pair_expansion, satisfies, sigma_split,
                               split_terms, truncated_F, truncated_Z, weight)
from models.lattice_model import GHOST, BoundaryCondition, Lattice, site, square_with_ghost
from models.oracle_engine import QuadratureSpec, quadrature_two_point, quadrature_Z

SQUARE = square_with_ghost()
ORIENTED = [(a, b) for a, b in SQUARE.bonds] + [(b, a) for a, b in SQUARE.bonds]


@st.composite
def square_flux(draw):
    mult = draw(st.dictionaries(st.sampled_from(ORIENTED), st.integers(0, 3), max_size=len(ORIENTED)))
    return FluxConfig(mult, SQUARE)


@given(square_flux())
def test_boundary_sums_to_zero(n):
    assert sum(boundary(n).values()) == 0
    assert n.total_edges == len(n.edges())


@given(square_flux())
def test_reversal_negates_boundary(n):
    back = boundary(n.reversed())
    assert all(back[s] == -v for s, v in boundary(n).items())
    assert n.reversed().reversed() == n


@given(square_flux(), square_flux())
@settings(max_examples=50)
def test_weight_of_disjoint_union_factorises(n, m):
    # multiplicités sur des liaisons disjointes: le poids est multiplicatif
    shared = set(n.bond_totals()) & set(m.bond_totals())
    if shared:
        return
    beta = Fraction(1, 3)
    assert weight(n + m, beta).value == weight(n, beta).value * weight(m, beta).value


def test_weight_of_empty_graph_is_one(bar):
    assert weight(FluxConfig.empty(bar), Fraction(7, 3)).value == 1


def test_dumbbell_truncated_sums_are_exact(bar, beta):
    x, y = site(0), site(1)
    bj = beta / 6
    assert truncated_Z(bar, beta, 2) == 1 + bj ** 2
    assert truncated_F(bar, beta, x, y, 3) == (bj + bj ** 3 / 2) / 2


def test_enumeration_is_unique_and_satisfies_boundary(square):
    spec = BoundarySpec.source_sink(site(0, 0), site(1, 1))
    found = list(enumerate_flux(square, spec, 5))
    assert len(found) == len(set(found))
    assert all(satisfies(n, spec) and n.total_edges <= 5 for n in found)
    # chemins de longueur 2 par les deux côtés de la plaquette et par le fantôme
    assert sum(1 for n in found if n.total_edges == 2) == 3


def test_enumeration_counts_dumbbell_loops(bar):
    found = list(enumerate_flux(bar, BoundarySpec.empty(), 4))
    assert [n.total_edges for n in found] == [0, 2, 4]


def test_enumeration_guards():
    with pytest.raises(CostGuardError):
        list(enumerate_flux(Lattice(2, BoundaryCondition.FREE), BoundarySpec.empty(), 2))
    with pytest.raises(CostGuardError):
        list(enumerate_flux(SQUARE, BoundarySpec.empty(), 17))


@pytest.mark.parametrize("name", ["bar", "path3", "cycle4"])
@pytest.mark.parametrize("beta", [0.1, 0.3, 0.5])
def test_series_matches_oracle(request, name, beta):
    lat = request.getfixturevalue(name)
    x, y = lat.sites[0], lat.sites[1]
    z = truncated_Z(lat, beta, 12)
    f = truncated_F(lat, beta, x, y, 12)
    spec = QuadratureSpec(beta)
    assert abs(float(z) - quadrature_Z(lat, spec)) / float(z) <= 1e-8
    assert abs(float(2 * f / z) - quadrature_two_point(lat, spec, x, y)) <= 1e-8


def test_boundary_spec_validation():
    with pytest.raises(BoundaryError):
        BoundarySpec(site(0), site(0))
    with pytest.raises(BoundaryError):
        BoundarySpec(site(0), GHOST)
    with pytest.raises(BoundaryError):
        BoundarySpec(site(0), None)
    assert BoundarySpec.source_sink(site(0), site(1)).reversed() == BoundarySpec(site(1), site(0))


def test_flux_rejects_non_bonds_and_negative_counts(bar):
    with pytest.raises(LatticeError):
        FluxConfig({(site(0), site(2)): 1}, bar)
    with pytest.raises(BoundaryError):
        FluxConfig({(site(0), site(1)): -1}, bar)


def test_as_fraction_reads_decimal_text():
    assert as_fraction(0.3) == Fraction(3, 10)
    assert as_fraction(Fraction(1, 7)) == Fraction(1, 7)


def test_merge_and_embedding_count(square):
    free = square.free_counterpart()
    a, b = site(0, 0), site(1, 0)
    nd = FluxConfig({(a, b): 1}, square)
    n0 = FluxConfig({(a, b): 1, (b, a): 1}, free)
    assert merge(nd, n0).total_edges == 3
    assert embedding_count(nd, n0) == 6


def test_dominant_dumbbell_terms_and_sigma_split(bar):
    x, y = site(0), site(1)
    beta = Fraction(1, 2)
    top = dominant_configs(bar, beta, x, y, 8, count=3)
    assert [n[(x, y)] - n[(y, x)] for n, _ in top] == [1, 1, 1]
    assert [w for _, w in top] == sorted((w for _, w in top), reverse=True)
    assert top[0][1] == weight(FluxConfig({(x, y): 1}, bar), beta).value
    order = bar.site_order()
    assert [sigma_split(n, order) for n, _ in top] == [{(y, x): (0, 1)}, {(y, x): (1, 2)}, {(y, x): (2, 3)}]


def test_sigma_split_orients_pairs_by_rank(square):
    a, b, c = site(0, 0), site(1, 0), site(1, 1)
    n = FluxConfig({(a, b): 2, (b, a): 1, (c, b): 1}, square)
    assert sigma_split(n, square.site_order()) == {(b, a): (1, 2), (c, b): (1, 0)}


def test_difference_terms_split(square, beta):
    x, y = site(0, 0), site(1, 1)
    terms = split_terms(square, square.free_counterpart(), beta, x, y, 4)
    assert terms.D1 == terms.E1 - terms.E2
    assert terms.D2 == terms.E1_reverse - terms.E2_reverse
    assert terms.E1 > 0 and terms.E2 > 0


def test_difference_terms_vanish_at_zero_beta(square):
    assert difference_terms(square, square.free_counterpart(), 0, site(0, 0), site(1, 1), 4) == (0, 0)


def test_difference_terms_are_symmetric_under_reversal(square):
    d1, d2 = difference_terms(square, square.free_counterpart(), Fraction(3, 10), site(0, 0), site(1, 1), 6)
    assert d1 == d2


def test_difference_terms_reject_equal_endpoints(square):
    with pytest.raises(BoundaryError):
        difference_terms(square, square.free_counterpart(), Fraction(3, 10), site(0, 0), site(0, 0), 4)


def test_pair_expansion_regroups_consistently(square, beta):
    expansion = pair_expansion(square, square.free_counterpart(), beta, site(0, 0), site(1, 1), 4)
    assert expansion.consistent
    assert expansion.pairs >= expansion.groups > 0
