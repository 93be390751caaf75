from fractions import Fraction

import pytest

from models.errors import LatticeError
from models.lattice_model import (GHOST, BoundaryCondition, Lattice, parse_lattice_config, parse_site,
                                  site, validate_coupling_table)


def test_plus_box_radius_one_couples_origin_to_ghost():
    lat = Lattice(1, BoundaryCondition.PLUS)
    assert lat.sites == (site(0, 0, 0), GHOST)
    assert lat.coupling(site(0, 0, 0), GHOST) == Fraction(1)
    assert lat.spin_sites == (site(0, 0, 0), GHOST)
    assert lat.interior_sites == (site(0, 0, 0),)


def test_free_box_keeps_boundary_sites_isolated():
    lat = Lattice(2, BoundaryCondition.FREE)
    assert len(lat.sites) == 125
    assert len(lat.spin_sites) == 27
    assert lat.bond_count() == 54
    assert lat.neighbors(site(2, 0, 0)) == ()
    assert not lat.has_ghost


def test_periodic_box_wraps_and_merges_couplings():
    small = Lattice(1, BoundaryCondition.PERIODIC)
    assert len(small.sites) == 8
    assert small.coupling(site(0, 0, 0), site(1, 0, 0)) == Fraction(1, 3)
    assert small.bond_count() == 12

    lat = Lattice(2, BoundaryCondition.PERIODIC)
    assert len(lat.sites) == 64
    assert lat.coupling(site(2, 0, 0), site(-1, 0, 0)) == Fraction(1, 6)
    assert lat.bond_count() == 192


def test_coupling_is_symmetric_and_zero_off_bonds():
    lat = Lattice(2, BoundaryCondition.PLUS)
    for a, b in lat.bonds:
        assert lat.coupling(a, b) == lat.coupling(b, a) > 0
    assert lat.coupling(site(0, 0, 0), site(1, 1, 0)) == 0


def test_site_order_puts_ghost_last():
    lat = Lattice(1, BoundaryCondition.PLUS)
    order = lat.site_order()
    assert order.sigma(GHOST) == len(order) - 1
    with pytest.raises(LatticeError):
        order.sigma(site(5, 5, 5))


def test_site_outside_box_is_rejected():
    lat = Lattice(1, BoundaryCondition.PLUS)
    with pytest.raises(LatticeError):
        lat.neighbors(site(3, 0, 0))


@pytest.mark.parametrize("table", [
    {(0, 0, 0): Fraction(1)},
    {(1, 0, 0): Fraction(1, 6)},
    {(1, 0, 0): Fraction(-1), (-1, 0, 0): Fraction(-1)},
])
def test_invalid_coupling_tables(table):
    with pytest.raises(LatticeError):
        validate_coupling_table(table)


def test_free_counterpart_drops_ghost(square):
    free = square.free_counterpart()
    assert GHOST not in free
    assert free.bond_count() == 4
    assert free.interior_couplings() == square.interior_couplings()


def test_parse_site():
    assert parse_site("1,0,-1") == site(1, 0, -1)
    assert parse_site("ghost") == GHOST
    with pytest.raises(LatticeError):
        parse_site("1,2")


def test_parse_lattice_config_box_with_sites():
    spec = parse_lattice_config("# boîte\nL = 1\nbc = plus\nx = 0,0,0\ny = ghost\n")
    assert spec.lattice.bc == BoundaryCondition.PLUS
    assert spec.x == site(0, 0, 0)
    assert spec.y == GHOST


def test_parse_lattice_config_coupling_lines():
    text = "L = 1\nbc = periodic\ncoupling = 1 0 0 1/4\ncoupling = -1 0 0 1/4\n"
    lat = parse_lattice_config(text).lattice
    assert lat.coupling(site(0, 0, 0), site(1, 0, 0)) == Fraction(1, 2)
    assert lat.coupling(site(0, 0, 0), site(0, 1, 0)) == 0


def test_parse_lattice_config_topologies():
    assert parse_lattice_config("topology = dumbbell\nJ = 1/4").lattice.coupling(site(0), site(1)) == Fraction(1, 4)
    assert parse_lattice_config("topology = cycle\nsites = 5").lattice.bond_count() == 5


@pytest.mark.parametrize("text", [
    "L = 1\ncolour = red\n",
    "bc = free\n",
    "L = x\n",
    "L = 1\nbc = twisted\n",
    "topology = torus\n",
    "L = 1\nbc = plus\nx = 4,0,0\n",
    "L 1\n",
])
def test_parse_lattice_config_errors(text):
    with pytest.raises(LatticeError):
        parse_lattice_config(text)


def test_from_bonds_rejects_self_loops():
    with pytest.raises(LatticeError):
        Lattice.from_bonds([(site(0), site(0), Fraction(1))])
