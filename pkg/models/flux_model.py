"""
Représentation par flux: multigraphes orientés n, opérateur de bord ∂,
poids exacts (βJ)^n/n!, énumération exhaustive et séries tronquées
"""

import heapq
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Mapping, Optional, Tuple, Union

from .errors import BoundaryError, CostGuardError, LatticeError
from .lattice_model import Lattice, Site, SiteOrder

logger = logging.getLogger(__name__)

Pair = Tuple[Site, Site]
Rational = Union[Fraction, int, float, str]

MAX_ENUM_EDGES = 16
MAX_ENUM_BONDS = 12


def as_fraction(value: Rational) -> Fraction:
    """Convertit β en rationnel exact (les flottants passent par leur écriture décimale)"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


class FluxConfig:
    """Multiplicités n_{a→b} sur les paires ordonnées de sites voisins

    Valeur immuable; l'égalité ignore la référence au réseau.
    """

    __slots__ = ("_mult", "_key", "lattice")

    def __init__(self, mult: Mapping[Pair, int], lattice: Optional[Lattice] = None):
        clean = {}
        for (a, b), n in mult.items():
            n = int(n)
            if n < 0:
                raise BoundaryError(f"multiplicité négative sur {a!r}→{b!r}")
            if n == 0:
                continue
            if lattice is not None and lattice.bond_coupling((a, b)) == 0:
                raise LatticeError(f"{a!r}→{b!r} n'est pas une liaison de {lattice.name}")
            clean[(a, b)] = n
        self._mult: Dict[Pair, int] = clean
        self._key = tuple(sorted(clean.items()))
        self.lattice = lattice

    @classmethod
    def empty(cls, lattice: Optional[Lattice] = None) -> "FluxConfig":
        return cls({}, lattice)

    @classmethod
    def from_edges(cls, edges, lattice: Optional[Lattice] = None) -> "FluxConfig":
        """Construit depuis une suite d'arêtes (a, b), répétitions comprises"""
        mult: Dict[Pair, int] = defaultdict(int)
        for a, b in edges:
            mult[(a, b)] += 1
        return cls(mult, lattice)

    def __getitem__(self, pair: Pair) -> int:
        return self._mult.get(pair, 0)

    def items(self):
        return self._key

    def pairs(self) -> Tuple[Pair, ...]:
        return tuple(p for p, _ in self._key)

    @property
    def total_edges(self) -> int:
        return sum(self._mult.values())

    def sites(self) -> Tuple[Site, ...]:
        touched = set()
        for a, b in self._mult:
            touched.update((a, b))
        return tuple(sorted(touched))

    def out_degree(self, z: Site) -> int:
        return sum(n for (a, _), n in self._mult.items() if a == z)

    def in_degree(self, z: Site) -> int:
        return sum(n for (_, b), n in self._mult.items() if b == z)

    def bond_totals(self) -> Dict[Pair, int]:
        """n par liaison non orientée (a < b)"""
        totals: Dict[Pair, int] = defaultdict(int)
        for (a, b), n in self._mult.items():
            totals[(a, b) if a < b else (b, a)] += n
        return dict(totals)

    def reversed(self) -> "FluxConfig":
        return FluxConfig({(b, a): n for (a, b), n in self._mult.items()}, self.lattice)

    def edges(self) -> List[Pair]:
        """Arêtes individuelles dans l'ordre canonique"""
        return [p for p, n in self._key for _ in range(n)]

    def __add__(self, other: "FluxConfig") -> "FluxConfig":
        mult: Dict[Pair, int] = defaultdict(int)
        for p, n in self._key + other._key:
            mult[p] += n
        return FluxConfig(mult, self.lattice or other.lattice)

    def __eq__(self, other) -> bool:
        return isinstance(other, FluxConfig) and self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        body = ", ".join(f"{a!r}→{b!r}" + (f"×{n}" if n > 1 else "") for (a, b), n in self._key)
        return "FluxConfig{" + body + "}"


@dataclass(frozen=True)
class BoundarySpec:
    """∂n = ∅ (x = y = None) ou ∂n = {x→y}"""
    x: Optional[Site] = None
    y: Optional[Site] = None

    def __post_init__(self):
        if (self.x is None) != (self.y is None):
            raise BoundaryError("source et puits doivent être donnés ensemble")
        if self.x is not None:
            if self.x == self.y:
                raise BoundaryError(f"x = y = {self.x!r}")
            if self.x.ghost or self.y.ghost:
                raise BoundaryError("le fantôme ne peut être ni source ni puits")

    @classmethod
    def empty(cls) -> "BoundarySpec":
        return cls()

    @classmethod
    def source_sink(cls, x: Site, y: Site) -> "BoundarySpec":
        return cls(x, y)

    @property
    def is_empty(self) -> bool:
        return self.x is None

    @property
    def kind(self) -> str:
        return "empty" if self.is_empty else "source_sink"

    def expected(self) -> Dict[Site, int]:
        if self.is_empty:
            return {}
        return {self.x: 1, self.y: -1}

    def reversed(self) -> "BoundarySpec":
        if self.is_empty:
            return self
        return BoundarySpec(self.y, self.x)

    @property
    def endpoints(self) -> Tuple[Site, ...]:
        return () if self.is_empty else (self.x, self.y)


@dataclass(frozen=True)
class GraphWeight:
    value: Fraction
    beta: Fraction


def boundary(n: FluxConfig) -> Dict[Site, int]:
    """Degré sortant moins degré entrant, par site"""
    result: Dict[Site, int] = defaultdict(int)
    if n.lattice is not None:
        for s in n.lattice.sites:
            result[s] = 0
    for (a, b), m in n.items():
        result[a] += m
        result[b] -= m
    return dict(result)


def satisfies(n: FluxConfig, b: BoundarySpec) -> bool:
    actual = {s: v for s, v in boundary(n).items() if v != 0}
    return actual == b.expected()


def _bond_factor(beta_j: Fraction, n: int) -> Fraction:
    return beta_j ** n / math.factorial(n)


def weight(n: FluxConfig, beta: Rational, lattice: Optional[Lattice] = None) -> GraphWeight:
    """Π (βJ_{a,b})^{n_{a→b}} / n_{a→b}!"""
    beta = as_fraction(beta)
    if beta < 0:
        raise BoundaryError(f"beta négatif: {beta}")
    lat = lattice or n.lattice
    if lat is None and n.total_edges:
        raise LatticeError("poids sans réseau")
    value = Fraction(1)
    for pair, m in n.items():
        value *= _bond_factor(beta * lat.bond_coupling(pair), m)
    return GraphWeight(value, beta)


def _check_same_interior(a: Optional[Lattice], b: Optional[Lattice]):
    if a is None or b is None or a is b:
        return
    shared = set(a.bonds) & set(b.bonds)
    for bond in shared:
        if a.bond_coupling(bond) != b.bond_coupling(bond):
            raise LatticeError(f"couplages différents sur {bond!r}")
    inner_a = a.interior_couplings()
    inner_b = b.interior_couplings()
    if inner_a != inner_b:
        raise LatticeError(f"réseaux incompatibles: {a.name} / {b.name}")


def merge(n_delta: FluxConfig, n_zero: FluxConfig) -> FluxConfig:
    """Somme des quatre multiplicités par liaison, portée par la paire (k,l) avec σ(k) > σ(l)"""
    _check_same_interior(n_delta.lattice, n_zero.lattice)
    lats = [l for l in (n_delta.lattice, n_zero.lattice) if l is not None]
    lattice = max(lats, key=lambda l: l.bond_count()) if lats else None
    totals: Dict[Pair, int] = defaultdict(int)
    for cfg in (n_delta, n_zero):
        for (a, b), n in cfg.bond_totals().items():
            totals[(b, a)] += n
    return FluxConfig(totals, lattice)


def embedding_count(n_delta: FluxConfig, n_zero: FluxConfig) -> int:
    """Π_liaisons n! / (n_δ,1! n_0,1! n_δ,2! n_0,2!)"""
    _check_same_interior(n_delta.lattice, n_zero.lattice)
    count = 1
    bonds = set(n_delta.bond_totals()) | set(n_zero.bond_totals())
    for a, b in bonds:
        parts = [n_delta[(a, b)], n_delta[(b, a)], n_zero[(a, b)], n_zero[(b, a)]]
        count *= math.factorial(sum(parts)) // math.prod(math.factorial(p) for p in parts)
    return count


def sigma_split(n: FluxConfig, order: SiteOrder) -> Dict[Pair, Tuple[int, int]]:
    """(n_{k→l}, n_{k←l}) pour chaque paire σ(k) > σ(l) du support"""
    split: Dict[Pair, Tuple[int, int]] = {}
    for a, b in n.bond_totals():
        k, l = (a, b) if order.sigma(a) > order.sigma(b) else (b, a)
        split[(k, l)] = (n[(k, l)], n[(l, k)])
    return split


# ---------------------------------------------------------------- énumération

def check_enumeration_guard(lat: Lattice, max_edges: int):
    if max_edges > MAX_ENUM_EDGES:
        raise CostGuardError("max_edges", MAX_ENUM_EDGES, max_edges)
    if lat.bond_count() > MAX_ENUM_BONDS:
        raise CostGuardError("bonds", MAX_ENUM_BONDS, lat.bond_count())


def enumerate_flux(lat: Lattice, b: BoundarySpec, max_edges: int) -> Iterator[FluxConfig]:
    """Toutes les configurations de total <= max_edges satisfaisant b, une seule fois

    Ordre lexicographique (ordre des liaisons, puis multiplicités).
    """
    check_enumeration_guard(lat, max_edges)
    for s in b.endpoints:
        lat.check_site(s)

    sites = lat.sites
    idx = {s: i for i, s in enumerate(sites)}
    bonds = [(idx[a], idx[c]) for a, c in lat.bonds]
    excess = [0] * len(sites)
    for s, v in b.expected().items():
        excess[idx[s]] = -v
    remaining = [0] * len(sites)
    for i, j in bonds:
        remaining[i] += 1
        remaining[j] += 1
    if any(e != 0 and r == 0 for e, r in zip(excess, remaining)):
        return
    chosen: List[Tuple[int, int]] = [(0, 0)] * len(bonds)

    def rec(k: int, budget: int) -> Iterator[FluxConfig]:
        if sum(abs(e) for e in excess) > 2 * budget:
            return
        if k == len(bonds):
            mult = {}
            for (i, j), (p, q) in zip(bonds, chosen):
                if p:
                    mult[(sites[i], sites[j])] = p
                if q:
                    mult[(sites[j], sites[i])] = q
            yield FluxConfig(mult, lat)
            return
        i, j = bonds[k]
        remaining[i] -= 1
        remaining[j] -= 1
        for p in range(budget + 1):
            for q in range(budget - p + 1):
                excess[i] += p - q
                excess[j] += q - p
                if not ((remaining[i] == 0 and excess[i]) or (remaining[j] == 0 and excess[j])):
                    chosen[k] = (p, q)
                    yield from rec(k + 1, budget - p - q)
                excess[i] -= p - q
                excess[j] -= q - p
        remaining[i] += 1
        remaining[j] += 1

    yield from rec(0, max_edges)


def truncated_Z(lat: Lattice, beta: Rational, max_edges: int) -> Fraction:
    """Σ des poids sur ∂n = ∅, total <= max_edges"""
    total = sum((weight(n, beta).value for n in enumerate_flux(lat, BoundarySpec.empty(), max_edges)),
                Fraction(0))
    logger.debug("Z tronqué (%d arêtes) sur %s: %s", max_edges, lat.name, float(total))
    return total


def truncated_F(lat: Lattice, beta: Rational, x: Site, y: Site, max_edges: int) -> Fraction:
    """Demi-somme (1/2) Σ_{∂n = {x→y}} des poids"""
    spec = BoundarySpec.source_sink(x, y)
    total = sum((weight(n, beta).value for n in enumerate_flux(lat, spec, max_edges)), Fraction(0))
    return total / 2


def dominant_configs(lat: Lattice, beta: Rational, x: Site, y: Site, max_edges: int,
                     count: int = 3) -> List[Tuple[FluxConfig, Fraction]]:
    """Les count configurations ∂n = {x→y} de plus grand poids, ordre d'énumération en cas d'égalité"""
    spec = BoundarySpec.source_sink(x, y)
    weighted = ((n, weight(n, beta).value) for n in enumerate_flux(lat, spec, max_edges))
    return heapq.nlargest(count, weighted, key=lambda item: item[1])


@dataclass(frozen=True)
class DifferenceTerms:
    """D1, D2 et leurs moitiés E1 - E2"""
    D1: Fraction
    D2: Fraction
    E1: Fraction
    E2: Fraction
    E1_reverse: Fraction
    E2_reverse: Fraction
    Z_plus: Fraction
    Z_free: Fraction


def split_terms(lat_plus: Lattice, lat_free: Lattice, beta: Rational,
                x: Site, y: Site, max_edges: int) -> DifferenceTerms:
    """E1 = F̃δ(x→y)/Z̃δ, E2 = F0(y→x)/Z0 et les termes symétriques de D2"""
    BoundarySpec.source_sink(x, y)
    _check_same_interior(lat_plus, lat_free)
    if lat_free.has_ghost:
        raise LatticeError(f"le réseau libre {lat_free.name} porte un fantôme")
    z_plus = truncated_Z(lat_plus, beta, max_edges)
    z_free = truncated_Z(lat_free, beta, max_edges)
    f_plus_xy = truncated_F(lat_plus, beta, x, y, max_edges)
    f_plus_yx = truncated_F(lat_plus, beta, y, x, max_edges)
    f_free_xy = truncated_F(lat_free, beta, x, y, max_edges)
    f_free_yx = truncated_F(lat_free, beta, y, x, max_edges)
    e1, e2 = f_plus_xy / z_plus, f_free_yx / z_free
    e1r, e2r = f_plus_yx / z_plus, f_free_xy / z_free
    return DifferenceTerms(D1=e1 - e2, D2=e1r - e2r, E1=e1, E2=e2,
                           E1_reverse=e1r, E2_reverse=e2r, Z_plus=z_plus, Z_free=z_free)


def difference_terms(lat_plus: Lattice, lat_free: Lattice, beta: Rational,
                     x: Site, y: Site, max_edges: int) -> Tuple[Fraction, Fraction]:
    """(D1, D2) avec numérateurs et dénominateurs tronqués"""
    terms = split_terms(lat_plus, lat_free, beta, x, y, max_edges)
    return terms.D1, terms.D2


@dataclass
class PairExpansion:
    groups: int
    pairs: int
    by_pairs: Fraction
    by_merged: Fraction

    @property
    def consistent(self) -> bool:
        return self.by_pairs == self.by_merged


def pair_expansion(lat_plus: Lattice, lat_free: Lattice, beta: Rational,
                   x: Site, y: Site, max_edges: int) -> PairExpansion:
    """Regroupe les couples (n_δ, n_0) par graphe fusionné et compare les deux sommes"""
    beta = as_fraction(beta)
    spec = BoundarySpec.source_sink(x, y)
    free_by_size: Dict[int, List[FluxConfig]] = defaultdict(list)
    for n0 in enumerate_flux(lat_free, BoundarySpec.empty(), max_edges):
        free_by_size[n0.total_edges].append(n0)

    groups: Dict[FluxConfig, int] = defaultdict(int)
    by_pairs = Fraction(0)
    n_pairs = 0
    for nd in enumerate_flux(lat_plus, spec, max_edges):
        wd = weight(nd, beta).value
        for size in range(max_edges - nd.total_edges + 1):
            for n0 in free_by_size.get(size, ()):
                by_pairs += wd * weight(n0, beta).value
                groups[merge(nd, n0)] += embedding_count(nd, n0)
                n_pairs += 1
    by_merged = sum((weight(m, beta).value * c for m, c in groups.items()), Fraction(0))
    return PairExpansion(groups=len(groups), pairs=n_pairs, by_pairs=by_pairs, by_merged=by_merged)
