"""
Oracles de vérité terrain sur petits systèmes:
quadrature directe des angles et sommes de Bessel liaison par liaison
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .errors import CostGuardError, LatticeError, QuadratureError
from .lattice_model import GHOST, BoundaryCondition, Lattice, Site

logger = logging.getLogger(__name__)

MAX_ORACLE_SITES = 8
MAX_CYCLE_BONDS = 12
WINDING_CUTOFF = 20


@dataclass(frozen=True)
class QuadratureSpec:
    """Règle des trapèzes sur le cercle, points_per_angle >= 8"""
    beta: float
    points_per_angle: int = 64
    max_sites: int = MAX_ORACLE_SITES

    def validate(self):
        if self.points_per_angle < 8:
            raise QuadratureError(f"points_per_angle={self.points_per_angle} < 8")
        if self.beta < 0:
            raise QuadratureError(f"beta négatif: {self.beta}")

    @property
    def grid(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.points_per_angle) / self.points_per_angle


@dataclass
class OracleResult:
    """Z normalisé, corrélations à deux points et aimantation (bord plus)"""
    Z: float
    two_point: Dict[Tuple[Site, Site], float] = field(default_factory=dict)
    magnetization: Optional[float] = None


def _contract(lat: Lattice, spec: QuadratureSpec, site_vectors: Dict[Site, np.ndarray]) -> complex:
    """Σ sur la grille de Π_liaisons e^{2βJ cos(θa-θb)} Π_sites v_s(θ_s), mesure dθ/2π"""
    spec.validate()
    spins = lat.spin_sites
    if len(spins) > spec.max_sites:
        raise CostGuardError("oracle_max_sites", spec.max_sites, len(spins))

    theta = spec.grid
    p = spec.points_per_angle
    index = {s: i for i, s in enumerate(spins)}
    diff = theta[:, None] - theta[None, :]
    weight_vec = np.full(p, 1.0 / p)

    operands: List = []
    for a, b in lat.bonds:
        j = float(lat.bond_coupling((a, b)))
        operands += [np.exp(2.0 * spec.beta * j * np.cos(diff)), [index[a], index[b]]]
    for s in spins:
        vec = weight_vec
        if s in site_vectors:
            vec = weight_vec * site_vectors[s]
        operands += [vec, [index[s]]]

    return complex(np.einsum(*operands, [], optimize=True))


def quadrature_Z(lat: Lattice, spec: QuadratureSpec) -> float:
    """Fonction de partition normalisée (Z=1 à β=0)"""
    Z = _contract(lat, spec, {}).real
    logger.debug("quadrature Z=%.15g sur %s (p=%d)", Z, lat.name, spec.points_per_angle)
    return Z


def _require_spin(lat: Lattice, s: Site):
    lat.check_site(s)
    if s not in lat.spin_sites:
        raise LatticeError(f"le site {s!r} ne porte pas de spin ({lat.bc.value})")


def quadrature_two_point(lat: Lattice, spec: QuadratureSpec, x: Site, y: Site,
                         Z: Optional[float] = None) -> float:
    """<S_x·S_y> = <cos(θx-θy)>"""
    _require_spin(lat, x)
    _require_spin(lat, y)
    if x == y:
        return 1.0
    theta = spec.grid
    numerator = _contract(lat, spec, {x: np.exp(1j * theta), y: np.exp(-1j * theta)}).real
    if Z is None:
        Z = quadrature_Z(lat, spec)
    return numerator / Z


def quadrature_magnetization(lat: Lattice, spec: QuadratureSpec, x: Site,
                             Z: Optional[float] = None) -> float:
    """Aimantation sous bord plus: <S_x·S_δ>"""
    if lat.bc != BoundaryCondition.PLUS and not lat.has_ghost:
        raise LatticeError("l'aimantation demande un site fantôme")
    return quadrature_two_point(lat, spec, x, GHOST, Z=Z)


def run_oracle(lat: Lattice, spec: QuadratureSpec,
               pairs: Iterable[Tuple[Site, Site]] = (),
               magnetization_site: Optional[Site] = None) -> OracleResult:
    Z = quadrature_Z(lat, spec)
    result = OracleResult(Z=Z)
    for x, y in pairs:
        result.two_point[(x, y)] = quadrature_two_point(lat, spec, x, y, Z=Z)
    if magnetization_site is not None:
        result.magnetization = quadrature_magnetization(lat, spec, magnetization_site, Z=Z)
    return result


# ---------------------------------------------------------------- Bessel

def bessel_bond_sum(m: int, x: float, cutoff: int) -> float:
    """Σ_{a-b=m, a<=cutoff} x^(a+b)/(a! b!), somme partielle de I_m(2x)"""
    m = abs(int(m))
    if cutoff < m:
        raise QuadratureError(f"cutoff={cutoff} < |m|={m}")
    total = 0.0
    for b in range(cutoff - m + 1):
        a = b + m
        total += x ** (a + b) / (math.factorial(a) * math.factorial(b))
    return total


def bessel_Z(lat: Lattice, beta: float, cutoff: int = 80) -> float:
    """Z par sommes de flux: arbres (Π I_0) et composantes à un seul cycle (Σ_m Π I_m)"""
    graph = lat.to_networkx()
    graph = graph.subgraph(lat.spin_sites).copy()
    Z = 1.0
    for nodes in nx.connected_components(graph):
        component = graph.subgraph(nodes)
        n_edges = component.number_of_edges()
        n_nodes = component.number_of_nodes()

        def bond_x(a, b) -> float:
            return beta * float(component.edges[a, b]["J"])

        if n_edges == n_nodes - 1:
            for a, b in component.edges:
                Z *= bessel_bond_sum(0, bond_x(a, b), cutoff)
            continue
        if n_edges != n_nodes:
            raise QuadratureError(f"topologie non supportée: {n_edges} liaisons pour {n_nodes} sites")

        cycle = nx.find_cycle(component)
        if len(cycle) > MAX_CYCLE_BONDS:
            raise QuadratureError(f"cycle de {len(cycle)} liaisons > {MAX_CYCLE_BONDS}")
        cycle_bonds = {frozenset(e[:2]) for e in cycle}
        tree_factor = 1.0
        for a, b in component.edges:
            if frozenset((a, b)) not in cycle_bonds:
                tree_factor *= bessel_bond_sum(0, bond_x(a, b), cutoff)
        winding = 0.0
        for m in range(-WINDING_CUTOFF, WINDING_CUTOFF + 1):
            term = 1.0
            for e in cycle:
                term *= bessel_bond_sum(m, bond_x(e[0], e[1]), cutoff)
            winding += term
        Z *= tree_factor * winding
    logger.debug("Bessel Z=%.15g sur %s", Z, lat.name)
    return Z
