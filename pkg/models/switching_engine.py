"""
Commutations non appariées: bijection du lemme de commutation non orienté,
commutation orientée le long d'un chemin et recherche du contre-exemple orienté
"""

import itertools
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx

from .errors import BoundaryError, SwitchingError
from .flux_model import (BoundarySpec, FluxConfig, Rational, as_fraction, boundary,
                         check_enumeration_guard, enumerate_flux, satisfies)
from .lattice_model import Lattice, Site, square_with_ghost, site

logger = logging.getLogger(__name__)

Bond = Tuple[Site, Site]
Pair = Tuple[Site, Site]
EdgeSet = FrozenSet[Bond]

MAX_COUNTEREXAMPLES = 10


def bond(a: Site, b: Site) -> Bond:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class UPath:
    """Chemin non orienté x↔y, liaisons dans l'ordre de parcours"""
    edges: Tuple[Bond, ...]
    x: Site
    y: Site

    def __post_init__(self):
        here = self.x
        for a, b in self.edges:
            if here not in (a, b):
                raise SwitchingError(f"chemin discontinu en {here!r}")
            here = b if here == a else a
        if here != self.y:
            raise SwitchingError(f"le chemin finit en {here!r} au lieu de {self.y!r}")

    @classmethod
    def from_sites(cls, sites: Sequence[Site]) -> "UPath":
        return cls(tuple(bond(a, b) for a, b in zip(sites, sites[1:])), sites[0], sites[-1])

    @property
    def delta_avoiding(self) -> bool:
        return not any(a.ghost or b.ghost for a, b in self.edges)

    @property
    def edge_set(self) -> EdgeSet:
        return frozenset(self.edges)

    def order_key(self):
        return (len(self.edges), self.edges)


@dataclass(frozen=True)
class DPath:
    """Chemin orienté x→…→y"""
    edges: Tuple[Pair, ...]

    def __post_init__(self):
        if not self.edges:
            raise SwitchingError("chemin orienté vide")
        for (_, head), (tail, _) in zip(self.edges, self.edges[1:]):
            if head != tail:
                raise SwitchingError(f"chemin orienté discontinu en {head!r}/{tail!r}")

    @classmethod
    def from_sites(cls, sites: Sequence[Site]) -> "DPath":
        return cls(tuple(zip(sites, sites[1:])))

    @property
    def x(self) -> Site:
        return self.edges[0][0]

    @property
    def y(self) -> Site:
        return self.edges[-1][1]

    @property
    def delta_avoiding(self) -> bool:
        return not any(a.ghost or b.ghost for a, b in self.edges)

    def reverse(self) -> "DPath":
        return DPath(tuple((b, a) for a, b in reversed(self.edges)))

    def as_flux(self) -> FluxConfig:
        return FluxConfig.from_edges(self.edges)


@dataclass(frozen=True)
class GraphPair:
    """Couple de graphes (ensembles de liaisons ou multigraphes orientés)"""
    first: Union[EdgeSet, FluxConfig]
    second: Union[EdgeSet, FluxConfig]

    @property
    def directed(self) -> bool:
        return isinstance(self.first, FluxConfig)

    def union(self):
        if self.directed:
            return self.first + self.second
        return self.first | self.second

    def carrier(self) -> Optional[str]:
        """Composante portant la source et le puits"""
        if self.directed:
            if any(v for v in boundary(self.first).values()):
                return "first"
            if any(v for v in boundary(self.second).values()):
                return "second"
            return None
        if odd_sites(self.first):
            return "first"
        if odd_sites(self.second):
            return "second"
        return None


def odd_sites(edges: Iterable[Bond]) -> FrozenSet[Site]:
    """Sites de degré impair"""
    parity: Counter = Counter()
    for a, b in edges:
        parity[a] += 1
        parity[b] += 1
    return frozenset(s for s, d in parity.items() if d % 2)


def touches_ghost(edges: Iterable[Bond]) -> bool:
    return any(a.ghost or b.ghost for a, b in edges)


def set_weight(edges: Iterable[Bond], lat: Lattice, beta: Fraction) -> Fraction:
    value = Fraction(1)
    for e in edges:
        value *= beta * lat.bond_coupling(e)
    return value


# ---------------------------------------------------------------- non orienté

def undirected_switch(pair: GraphPair, P: UPath) -> GraphPair:
    """(A,B) -> ((A\\P) ∪ (B∩P), (B\\P) ∪ (A∩P))"""
    if pair.directed:
        raise SwitchingError("commutation non orientée sur un couple orienté")
    if not P.delta_avoiding:
        raise SwitchingError("le chemin touche le fantôme")
    path = P.edge_set
    if not path <= pair.union():
        raise SwitchingError("chemin non contenu dans A ∪ B")
    A, B = pair.first, pair.second
    return GraphPair((A - path) | (B & path), (B - path) | (A & path))


def canonical_partition(pairs: Iterable[GraphPair], paths: Sequence[UPath]) -> Dict[int, List[GraphPair]]:
    """Chaque couple va au premier chemin de la liste contenu dans son union"""
    blocks: Dict[int, List[GraphPair]] = defaultdict(list)
    path_sets = [p.edge_set for p in paths]
    for pair in pairs:
        union = pair.union()
        for k, path in enumerate(path_sets):
            if path <= union:
                blocks[k].append(pair)
                break
        else:
            raise SwitchingError(f"aucun chemin listé dans l'union de {pair!r}")
    return dict(blocks)


def undirected_paths(lat: Lattice, x: Site, y: Site) -> List[UPath]:
    """Chemins simples x↔y évitant δ, triés par (longueur, ordre lexicographique)"""
    graph = lat.to_networkx(include_ghost=False)
    paths = [UPath.from_sites(p) for p in nx.all_simple_paths(graph, x, y)]
    return sorted(paths, key=UPath.order_key)


@dataclass
class BlockReport:
    path: Tuple[Bond, ...]
    lambda_size: int
    gamma_size: int
    bijective: bool


@dataclass
class UndirectedReport:
    lambda_count: int = 0
    gamma_count: int = 0
    blocks: List[BlockReport] = field(default_factory=list)
    images_disjoint: bool = True
    weights_equal: bool = True
    counterexamples: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (not self.counterexamples and self.images_disjoint and self.weights_equal
                and self.lambda_count == self.gamma_count
                and all(b.bijective for b in self.blocks))


def _undirected_families(lat: Lattice, x: Site, y: Site, max_edges: int,
                         paths: Sequence[UPath]) -> Tuple[List[GraphPair], List[GraphPair]]:
    """Λ (source dans la première composante) et Γ (source dans la seconde)"""
    endpoints = frozenset((x, y))
    path_sets = [p.edge_set for p in paths]
    lam, gam = [], []
    for assignment in itertools.product((0, 1, 2), repeat=len(lat.bonds)):
        if sum(1 for a in assignment if a) > max_edges:
            continue
        first = frozenset(b for b, a in zip(lat.bonds, assignment) if a == 1)
        second = frozenset(b for b, a in zip(lat.bonds, assignment) if a == 2)
        if touches_ghost(second):
            continue
        if not any(p <= first | second for p in path_sets):
            continue
        odd_first, odd_second = odd_sites(first), odd_sites(second)
        if odd_first == endpoints and not odd_second:
            lam.append(GraphPair(first, second))
        elif not odd_first and odd_second == endpoints:
            gam.append(GraphPair(first, second))
    return lam, gam


def verify_undirected_bijection(lat: Lattice, x: Site, y: Site, max_edges: int,
                                beta: Rational = Fraction(1)) -> UndirectedReport:
    """Vérifie exhaustivement la bijection Λ_{x,y} ↔ Γ_{x,y} bloc par bloc"""
    check_enumeration_guard(lat, max_edges)
    BoundarySpec.source_sink(x, y)
    beta = as_fraction(beta)
    paths = undirected_paths(lat, x, y)
    lam, gam = _undirected_families(lat, x, y, max_edges, paths)
    report = UndirectedReport(lambda_count=len(lam), gamma_count=len(gam))
    logger.debug("Λ=%d, Γ=%d, %d chemins", len(lam), len(gam), len(paths))
    if not lam and not gam:
        return report

    lam_blocks = canonical_partition(lam, paths)
    gam_blocks = canonical_partition(gam, paths)
    gam_set = set(gam)
    all_images = set()
    for k in sorted(set(lam_blocks) | set(gam_blocks)):
        block = lam_blocks.get(k, [])
        target = set(gam_blocks.get(k, []))
        images = set()
        for pair in block:
            image = undirected_switch(pair, paths[k])
            if image not in gam_set or image not in target:
                if len(report.counterexamples) < MAX_COUNTEREXAMPLES:
                    report.counterexamples.append(f"bloc {k}: image hors de Γ_k pour {pair!r}")
            images.add(image)
        bijective = len(images) == len(block) and images == target
        report.blocks.append(BlockReport(paths[k].edges, len(block), len(target), bijective))
        if all_images & images:
            report.images_disjoint = False
        all_images |= images

    lam_weights = Counter(set_weight(p.union(), lat, beta) for p in lam)
    gam_weights = Counter(set_weight(p.union(), lat, beta) for p in gam)
    report.weights_equal = lam_weights == gam_weights
    return report


# ---------------------------------------------------------------- orienté

def _split_along(A: FluxConfig, B: FluxConfig, P: DPath) -> Tuple[FluxConfig, FluxConfig]:
    """Sépare P en A∩P et B∩P; chaque arête de P doit appartenir à une seule composante"""
    from_a, from_b = [], []
    for e, k in P.as_flux().items():
        if A[e] >= k and B[e] == 0:
            from_a += [e] * k
        elif B[e] >= k and A[e] == 0:
            from_b += [e] * k
        elif A[e] + B[e] < k:
            raise SwitchingError(f"arête {e[0]!r}→{e[1]!r} absente de l'union")
        else:
            raise SwitchingError(f"arête {e[0]!r}→{e[1]!r} présente dans les deux composantes")
    return FluxConfig.from_edges(from_a), FluxConfig.from_edges(from_b)


def _subtract(n: FluxConfig, part: FluxConfig) -> FluxConfig:
    return FluxConfig({p: n[p] - part[p] for p in n.pairs()}, n.lattice)


def directed_switch(pair: GraphPair, P: DPath) -> GraphPair:
    """((A\\P) ∪ rev(B∩P), (B\\P) ∪ rev(A∩P))"""
    if not pair.directed:
        raise SwitchingError("commutation orientée sur un couple non orienté")
    if not P.delta_avoiding:
        raise SwitchingError("le chemin touche le fantôme")
    A, B = pair.first, pair.second
    a_part, b_part = _split_along(A, B, P)
    C = _subtract(A, a_part) + b_part.reversed()
    D = _subtract(B, b_part) + a_part.reversed()
    return GraphPair(FluxConfig(dict(C.items()), A.lattice), FluxConfig(dict(D.items()), B.lattice))


def contains(n: FluxConfig, P: DPath) -> bool:
    return all(n[e] >= k for e, k in P.as_flux().items())


def directed_paths(lat: Lattice, x: Site, y: Site) -> List[DPath]:
    graph = lat.to_networkx(include_ghost=False)
    paths = [DPath.from_sites(p) for p in nx.all_simple_paths(graph, x, y)]
    return sorted(paths, key=lambda p: (len(p.edges), p.edges))


@dataclass
class DirectedReport:
    checked: int = 0
    ambiguous: int = 0
    union_changed: int = 0
    counterexamples: List[str] = field(default_factory=list)

    def fail(self, message: str):
        if len(self.counterexamples) < MAX_COUNTEREXAMPLES:
            self.counterexamples.append(message)

    @property
    def passed(self) -> bool:
        return not self.counterexamples


def verify_directed_switch(lat: Lattice, x: Site, y: Site, max_edges: int) -> DirectedReport:
    """Sur tous les couples (A, B), ∂A = {x→y}, ∂B = ∅ hors fantôme, et chaque P contenu:
    nombre d'arêtes conservé, bords échangés vers (∅, {y→x}), retour par P renversé"""
    check_enumeration_guard(lat, max_edges)
    source = BoundarySpec.source_sink(x, y)
    free = lat.free_counterpart()
    paths = directed_paths(lat, x, y)
    loops: Dict[int, List[FluxConfig]] = defaultdict(list)
    for n in enumerate_flux(free, BoundarySpec.empty(), max_edges):
        loops[n.total_edges].append(FluxConfig(dict(n.items()), lat))
    report = DirectedReport()
    for A in enumerate_flux(lat, source, max_edges):
        for size in range(max_edges - A.total_edges + 1):
            for B in loops.get(size, ()):
                pair = GraphPair(A, B)
                union = pair.union()
                for P in paths:
                    if not contains(union, P):
                        continue
                    try:
                        image = directed_switch(pair, P)
                    except SwitchingError:
                        report.ambiguous += 1
                        continue
                    report.checked += 1
                    if image.first.total_edges + image.second.total_edges != A.total_edges + B.total_edges:
                        report.fail(f"nombre d'arêtes modifié: {pair!r} le long de {P.edges!r}")
                    if not (satisfies(image.first, BoundarySpec.empty())
                            and satisfies(image.second, source.reversed())):
                        report.fail(f"bords non échangés: {pair!r} le long de {P.edges!r}")
                    if image.union() != union:
                        report.union_changed += 1
                    try:
                        back = directed_switch(image, P.reverse())
                    except SwitchingError:
                        report.ambiguous += 1
                        continue
                    if back != pair:
                        report.fail(f"retour différent: {pair!r} le long de {P.edges!r}")
    logger.debug("commutation orientée: %d cas, %d ambigus", report.checked, report.ambiguous)
    return report


@dataclass
class AdverseWitness:
    """G^(P) = F^(Q) avec (G,P) ≠ (F,Q)"""
    G: GraphPair
    F: GraphPair
    P: DPath
    Q: DPath
    image: GraphPair

    def verify(self) -> bool:
        x, y = self.P.x, self.P.y
        source = BoundarySpec.source_sink(x, y)
        ok = (self.G != self.F and self.P != self.Q
              and directed_switch(self.G, self.P) == self.image
              and directed_switch(self.F, self.Q) == self.image)
        for pair in (self.G, self.F):
            ok = ok and satisfies(pair.first, source) and satisfies(pair.second, BoundarySpec.empty())
            ok = ok and not any(a.ghost or b.ghost for a, b in pair.second.pairs())
        ok = ok and contains(self.G.union(), self.P) and not contains(self.G.union(), self.Q)
        ok = ok and contains(self.F.union(), self.Q) and not contains(self.F.union(), self.P)
        return ok


def adverse_example(lat: Optional[Lattice] = None, x: Optional[Site] = None,
                    y: Optional[Site] = None, max_edges: int = 8) -> AdverseWitness:
    """Recherche, par taille croissante, deux couples distincts de même image"""
    lat = lat or square_with_ghost()
    x = x or site(0, 0)
    y = y or site(1, 1)
    free = lat.free_counterpart()
    paths = directed_paths(lat, x, y)
    loops: Dict[int, List[FluxConfig]] = defaultdict(list)
    for n in enumerate_flux(lat, BoundarySpec.empty(), max_edges):
        loops[n.total_edges].append(n)
    returns: Dict[int, List[FluxConfig]] = defaultdict(list)
    for n in enumerate_flux(free, BoundarySpec.source_sink(y, x), max_edges):
        returns[n.total_edges].append(FluxConfig(dict(n.items()), lat))

    for total in range(2, max_edges + 1):
        for d_size in range(1, total + 1):
            for C in loops.get(total - d_size, ()):
                for D in returns.get(d_size, ()):
                    image = GraphPair(C, D)
                    for P, Q in itertools.permutations(paths, 2):
                        try:
                            G = directed_switch(image, P.reverse())
                            F = directed_switch(image, Q.reverse())
                        except SwitchingError:
                            continue
                        witness = AdverseWitness(G, F, P, Q, image)
                        if witness.verify():
                            logger.debug("témoin trouvé à %d arêtes", total)
                            return witness
    raise SwitchingError(f"aucun témoin jusqu'à {max_edges} arêtes")
