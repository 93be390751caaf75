"""
Registres de poids sur graphes partiellement appariés dans une région |z| < N:
poids C et D par classe de projection, cohérence entre régions, balayage de la
commutation chirurgicale et vérifications exhaustives de l'appariement
"""

import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np

from .errors import BoundaryError, CostGuardError, SwitchingError
from .flux_model import (BoundarySpec, FluxConfig, Rational, as_fraction, enumerate_flux,
                         check_enumeration_guard, weight)
from .lattice_model import FIGURE_SITES, GHOST, Lattice, Site, dumbbell, figure_graph
from .pairing_model import (PAIRING_GUARD, PairedGraph, Pairing, Slot, SlotGraph, canonical_components,
                            decompose, enumerate_pairings, euler_decompose, extract_switch_graph,
                            pairing_count, pairings_of, paired_switch, paired_weight, random_pairing,
                            reverse_components, site_matchings, slots_along, surgical_switch)
from .switching_engine import MAX_COUNTEREXAMPLES

logger = logging.getLogger(__name__)

Projection = Tuple[BoundarySpec, Optional[int], SlotGraph]


@dataclass
class CheckReport:
    """Compte des cas vérifiés et contre-exemples (au plus 10)"""
    name: str
    checked: int = 0
    failures: int = 0
    skipped: int = 0
    counterexamples: List[str] = field(default_factory=list)
    details: Dict[str, object] = field(default_factory=dict)

    def fail(self, message: str):
        self.failures += 1
        if len(self.counterexamples) < MAX_COUNTEREXAMPLES:
            self.counterexamples.append(message)

    @property
    def passed(self) -> bool:
        return self.failures == 0


# ---------------------------------------------------------------- régions

def check_region(lat: Lattice, x: Site, y: Site, region: int):
    """|x| + |y| < N et aucun site |z| < N relié au fantôme"""
    BoundarySpec.source_sink(x, y)
    if x.radius + y.radius >= region:
        raise BoundaryError(f"|x|+|y| = {x.radius + y.radius} >= N = {region}")
    if lat.has_ghost:
        for z in lat.sites:
            if not z.ghost and z.radius < region and GHOST in lat.neighbors(z):
                raise BoundaryError(f"le site {z!r} de la région {region} touche le fantôme")


def restrict(pg: PairedGraph, region: int) -> PairedGraph:
    """Graphe partiellement apparié induit dans |z| <= N"""
    ends = set(pg.boundary.endpoints)

    def keep_bond(bond) -> bool:
        a, b = bond
        return not (a.ghost or b.ghost) and a.radius <= region and b.radius <= region

    graph = pg.graph.restricted(keep_bond)
    pairing = pg.pairing.restricted(lambda z: not z.ghost and z.radius < region and z not in ends)
    return PairedGraph(graph, pairing, pg.boundary, region)


def finitely_paired(pg: PairedGraph) -> bool:
    """Chaque position, suivie par appariement, se referme ou sort par un site non apparié"""
    graph = pg.graph
    for start in graph.slots():
        slot, steps = start, 0
        while True:
            z = graph.head(slot)
            if not pg.is_paired_site(z):
                break
            slot = pg.pairing.partner(z, slot)
            steps += 1
            if slot == start:
                break
            if slot is None or steps > len(graph):
                return False
    return True


# ---------------------------------------------------------------- ensembles

def labeled_graphs(lat_plus: Lattice, x: Site, y: Site, max_edges: int,
                   side: str = "delta") -> Iterator[Tuple[SlotGraph, BoundarySpec]]:
    """Graphes étiquetés individualisés n(n_δ, n_0) d'un côté de la différence

    delta: ∂n_δ = {x→y} sur le réseau plus, ∂n_0 = ∅ sur le réseau libre.
    free:  ∂n_δ = ∅, ∂n_0 = {y→x}.
    """
    lat_free = lat_plus.free_counterpart()
    check_enumeration_guard(lat_plus, max_edges)
    if side == "delta":
        b_delta, b_zero = BoundarySpec.source_sink(x, y), BoundarySpec.empty()
    elif side == "free":
        b_delta, b_zero = BoundarySpec.empty(), BoundarySpec.source_sink(y, x)
    else:
        raise BoundaryError(f"côté inconnu: {side!r}")
    merged = BoundarySpec.source_sink(x, y) if side == "delta" else BoundarySpec.source_sink(y, x)

    zeros: Dict[int, List[FluxConfig]] = defaultdict(list)
    for n0 in enumerate_flux(lat_free, b_zero, max_edges):
        zeros[n0.total_edges].append(n0)
    for nd in enumerate_flux(lat_plus, b_delta, max_edges):
        for size in range(max_edges - nd.total_edges + 1):
            for n0 in zeros.get(size, ()):
                for graph in SlotGraph.individuations(nd, n0, lat_plus):
                    yield graph, merged


@dataclass
class PairedEnsemble:
    """Tous les graphes appariés complets des deux côtés, avec leur poids W"""
    lattice: Lattice
    x: Site
    y: Site
    beta: Fraction
    max_edges: int
    members: List[Tuple[PairedGraph, Fraction]] = field(default_factory=list, repr=False)

    @classmethod
    def build(cls, lat_plus: Lattice, x: Site, y: Site, beta: Rational, max_edges: int,
              guard: int = PAIRING_GUARD) -> "PairedEnsemble":
        beta = as_fraction(beta)
        ensemble = cls(lat_plus, x, y, beta, max_edges)
        for side in ("delta", "free"):
            for graph, b in labeled_graphs(lat_plus, x, y, max_edges, side):
                for pg in pairings_of(graph, b, guard=guard):
                    ensemble.members.append((pg, paired_weight(pg, beta)))
                if len(ensemble.members) > guard:
                    raise CostGuardError("pairing_guard", guard, len(ensemble.members))
        logger.debug("ensemble apparié: %d graphes (%d arêtes max)", len(ensemble.members), max_edges)
        return ensemble

    def side(self, boundary_spec: BoundarySpec) -> Iterator[Tuple[PairedGraph, Fraction]]:
        return ((pg, w) for pg, w in self.members if pg.boundary == boundary_spec)


class WeightLedger:
    """Poids C (somme des W représentés) et D (répartition uniforme sur la classe)"""

    def __init__(self, region: int, C: Dict[PairedGraph, Fraction]):
        self.region = region
        self.C = C
        self.classes: Dict[Projection, List[PairedGraph]] = defaultdict(list)
        for g in C:
            self.classes[g.projection].append(g)
        self._D: Dict[Projection, Fraction] = {}

    @classmethod
    def from_ensemble(cls, ensemble: PairedEnsemble, region: int) -> "WeightLedger":
        check_region(ensemble.lattice, ensemble.x, ensemble.y, region)
        C: Dict[PairedGraph, Fraction] = defaultdict(Fraction)
        for pg, w in ensemble.members:
            C[restrict(pg, region)] += w
        ledger = cls(region, dict(C))
        logger.debug("registre N=%d: %d graphes, %d classes", region, len(ledger.C), len(ledger.classes))
        return ledger

    @classmethod
    def refine_from(cls, fine: "WeightLedger", region: int) -> "WeightLedger":
        """Registre N1 obtenu en sommant les raffinements d'un registre N2 > N1"""
        C: Dict[PairedGraph, Fraction] = defaultdict(Fraction)
        for g, c in fine.C.items():
            C[restrict(g, region)] += c
        return cls(region, dict(C))

    def members(self, g: PairedGraph) -> List[PairedGraph]:
        return self.classes.get(g.projection, [])

    def upsilon(self, g: PairedGraph) -> int:
        """Υ: nombre d'appariements intérieurs sur la projection de g"""
        return math.prod(math.factorial(len(g.graph.outgoing(z))) for z in g.paired_sites())

    def D(self, g: PairedGraph) -> Fraction:
        key = g.projection
        if key not in self._D:
            members = [m for m in self.classes.get(key, []) if finitely_paired(m)]
            if not members:
                raise BoundaryError(f"classe vide pour {g.graph!r}")
            self._D[key] = sum((self.C[m] for m in members), Fraction(0)) / len(members)
        return self._D[key]

    def check(self) -> CheckReport:
        """C constant par classe, Σ D = Σ C, D = C, |classe| = Υ"""
        report = CheckReport(f"ledger N={self.region}")
        for key, members in self.classes.items():
            report.checked += 1
            values = {self.C[m] for m in members}
            if len(values) != 1:
                report.fail(f"C non constant sur {key[2]!r}: {sorted(values)}")
            d = self.D(members[0])
            if d * len(members) != sum((self.C[m] for m in members), Fraction(0)):
                report.fail(f"Σ D != Σ C sur {key[2]!r}")
            if any(self.D(m) != self.C[m] for m in members):
                report.fail(f"D != C sur {key[2]!r}")
            if len(members) != self.upsilon(members[0]):
                report.fail(f"|classe| = {len(members)} != Υ = {self.upsilon(members[0])} sur {key[2]!r}")
        report.details.update(entries=len(self.C), classes=len(self.classes))
        return report

    def consistency(self, fine: "WeightLedger") -> CheckReport:
        """Σ des raffinements N2 = valeur N1, pour C et D"""
        report = CheckReport(f"consistency N={self.region}<{fine.region}")
        if fine.region <= self.region:
            raise BoundaryError("le registre fin doit avoir un rayon plus grand")
        coarse = WeightLedger.refine_from(fine, self.region)
        for g, c in self.C.items():
            report.checked += 1
            if coarse.C.get(g) != c:
                report.fail(f"C incohérent pour {g.graph!r}: {c} != {coarse.C.get(g)}")
        extra = set(coarse.C) - set(self.C)
        for g in extra:
            report.fail(f"raffinement sans graphe grossier: {g.graph!r}")
        d_sums: Dict[PairedGraph, Fraction] = defaultdict(Fraction)
        for g in fine.C:
            d_sums[restrict(g, self.region)] += fine.D(g)
        for g in self.C:
            if d_sums[g] != self.D(g):
                report.fail(f"D incohérent pour {g.graph!r}")
        return report


def build_ledgers(lat_plus: Lattice, x: Site, y: Site, beta: Rational, max_edges: int,
                  regions: Sequence[int] = (2, 3),
                  ensemble: Optional[PairedEnsemble] = None) -> Dict[int, WeightLedger]:
    ensemble = ensemble or PairedEnsemble.build(lat_plus, x, y, beta, max_edges)
    return {n: WeightLedger.from_ensemble(ensemble, n) for n in sorted(regions)}


def pairing_total_identity(lat_plus: Lattice, x: Site, y: Site, beta: Rational,
                           max_edges: int, ensemble: Optional[PairedEnsemble] = None) -> CheckReport:
    """Σ W sur tous les graphes appariés du côté δ = (1/2) Σ w(n_δ) w(n_0)"""
    beta = as_fraction(beta)
    ensemble = ensemble or PairedEnsemble.build(lat_plus, x, y, beta, max_edges)
    lat_free = lat_plus.free_counterpart()
    report = CheckReport("pairing total")
    for b_delta, b_zero, merged in ((BoundarySpec.source_sink(x, y), BoundarySpec.empty(),
                                     BoundarySpec.source_sink(x, y)),
                                    (BoundarySpec.empty(), BoundarySpec.source_sink(y, x),
                                     BoundarySpec.source_sink(y, x))):
        zeros = [(n0.total_edges, weight(n0, beta).value)
                 for n0 in enumerate_flux(lat_free, b_zero, max_edges)]
        expected = Fraction(0)
        for nd in enumerate_flux(lat_plus, b_delta, max_edges):
            wd = weight(nd, beta).value
            expected += sum((wd * w0 for size, w0 in zeros if size + nd.total_edges <= max_edges),
                            Fraction(0))
        expected /= 2
        actual = sum((w for _, w in ensemble.side(merged)), Fraction(0))
        report.checked += 1
        report.details[repr(merged)] = {"paired": actual, "pairs": expected}
        if actual != expected:
            report.fail(f"{merged!r}: Σ W = {actual} != {expected}")
    return report


# ---------------------------------------------------------------- commutation chirurgicale

def surgical_paths(graph: SlotGraph, x: Site, y: Site, region: int) -> List[Tuple[Slot, ...]]:
    """Chemins orientés auto-évitants x→y de positions, dans |z| < N, hors fantôme"""
    found: List[Tuple[Slot, ...]] = []

    def allowed(z: Site) -> bool:
        return not z.ghost and z.radius < region

    def dfs(here: Site, visited: set, walk: List[Slot]):
        if here == y:
            found.append(tuple(walk))
            return
        for slot in graph.outgoing(here):
            nxt = graph.head(slot)
            if nxt in visited or not allowed(nxt):
                continue
            visited.add(nxt)
            walk.append(slot)
            dfs(nxt, visited, walk)
            walk.pop()
            visited.discard(nxt)

    if allowed(x) and allowed(y):
        dfs(x, {x}, [])
    return found


def surgical_loops(graph: SlotGraph, allowed_slots: Set[Slot]) -> List[Tuple[Slot, ...]]:
    """Boucles orientées simples parmi allowed_slots, chacune commençant par sa plus petite position"""
    loops: List[Tuple[Slot, ...]] = []
    for first in sorted(allowed_slots):
        start = graph.tail(first)

        def dfs(here: Site, visited: set, walk: List[Slot]):
            for slot in graph.outgoing(here):
                if slot not in allowed_slots or slot <= first:
                    continue
                nxt = graph.head(slot)
                if nxt == start:
                    loops.append(tuple(walk) + (slot,))
                elif nxt not in visited:
                    visited.add(nxt)
                    walk.append(slot)
                    dfs(nxt, visited, walk)
                    walk.pop()
                    visited.discard(nxt)

        dfs(graph.head(first), {start, graph.head(first)}, [first])
    return loops


def surgical_sets(graph: SlotGraph, x: Site, y: Site, region: int,
                  with_loops: bool = True) -> List[List[Tuple[Slot, ...]]]:
    """Ensembles P en composantes canoniques: chemin seul, puis chemin ∪ une boucle disjointe"""
    paths = surgical_paths(graph, x, y, region)
    sets = [[P] for P in paths]
    if not with_loops:
        return sets
    allowed = {s for s in graph.slots()
               if not s.touches_ghost() and all(z.radius < region for z in s.bond)}
    seen = set()
    for P in paths:
        for loop in surgical_loops(graph, allowed - set(P)):
            slots = frozenset(P) | frozenset(loop)
            if slots in seen:
                continue
            seen.add(slots)
            sets.append(canonical_components(graph, slots, x, y))
    return sets


def verify_surgical_weight_equality(lat_plus: Lattice, x: Site, y: Site, beta: Rational,
                                    region: int, max_edges: int,
                                    ledger: Optional[WeightLedger] = None) -> CheckReport:
    """C(G) = C(F), D(G) = D(F) et Υ_G = Υ_F pour chaque F = commutation chirurgicale de G"""
    if ledger is None:
        ledger = build_ledgers(lat_plus, x, y, beta, max_edges, regions=(region,))[region]
    source = BoundarySpec.source_sink(x, y)
    report = CheckReport(f"surgical N={region}")
    pairs_checked = looped = 0
    for key, members in ledger.classes.items():
        boundary_spec, _, graph = key
        if boundary_spec != source:
            continue
        for components in surgical_sets(graph, x, y, region):
            report.checked += 1
            looped += len(components) > 1
            images = set()
            for g in members:
                pairs_checked += 1
                try:
                    f = surgical_switch(g, components)
                except SwitchingError as e:
                    report.fail(f"commutation impossible sur {g.graph!r}: {e}")
                    continue
                images.add(f)
                if f not in ledger.C:
                    report.fail(f"image absente du registre: {f.graph!r}")
                    continue
                if ledger.C[f] != ledger.C[g]:
                    report.fail(f"C(G) = {ledger.C[g]} != C(F) = {ledger.C[f]} pour {g.graph!r}")
                if ledger.D(f) != ledger.D(g):
                    report.fail(f"D(G) != D(F) pour {g.graph!r}")
            if len(images) != len(members):
                report.fail(f"commutation non injective sur {graph!r}")
            target = ledger.members(next(iter(images))) if images else []
            if images != set(target):
                report.fail(f"Υ_G = {len(members)} != Υ_F = {len(target)} sur {graph!r}")
    report.details.update(pairs=pairs_checked, classes=len(ledger.classes), with_loops=looped)
    logger.debug("balayage chirurgical N=%d: %d couples (G, P)", region, report.checked)
    return report


def paired_from_walks(lat: Lattice, walks: Sequence[Sequence[Site]],
                      boundary_spec: BoundarySpec) -> Tuple[PairedGraph, List[Tuple[Slot, ...]]]:
    """Graphe apparié dont chaque marche (chemin ou boucle fermée) suit ses appariements"""
    edges = [(a, b) for w in walks for a, b in zip(w, w[1:])]
    graph = SlotGraph.from_flux(FluxConfig.from_edges(edges, lat))
    used: List[Slot] = []
    slot_walks = []
    for w in walks:
        slots = slots_along(graph, w, exclude=used)
        used.extend(slots)
        slot_walks.append(slots)
    pairs: Dict[Site, List[Tuple[Slot, Slot]]] = defaultdict(list)
    for w, slots in zip(walks, slot_walks):
        closed = w[0] == w[-1]
        steps = list(zip(slots, slots[1:]))
        if closed:
            steps.append((slots[-1], slots[0]))
        for s_in, s_out in steps:
            z = graph.tail(s_out)
            if z not in boundary_spec.endpoints:
                pairs[z].append((s_in, s_out))
    return PairedGraph(graph, Pairing(pairs), boundary_spec).validate(), slot_walks


@dataclass
class FigureReport:
    reproduced: bool
    upsilon_before: int
    upsilon_after: int
    bijective: bool

    @property
    def passed(self) -> bool:
        return self.reproduced and self.bijective and self.upsilon_before == self.upsilon_after


def figure_instance():
    """Chemin x→a1→a2→y et boucle b1→a1→b2→b3→a2→b4→b1; P = x→a1→b2→b3→a2→y"""
    f = FIGURE_SITES
    lat = figure_graph()
    path = [f["x"], f["a1"], f["a2"], f["y"]]
    loop = [f["b1"], f["a1"], f["b2"], f["b3"], f["a2"], f["b4"], f["b1"]]
    before, _ = paired_from_walks(lat, [path, loop], BoundarySpec.source_sink(f["x"], f["y"]))
    P = slots_along(before.graph, [f["x"], f["a1"], f["b2"], f["b3"], f["a2"], f["y"]])
    after_path = [f["y"], f["a2"], f["b4"], f["b1"], f["a1"], f["x"]]
    after_loop = [f["a1"], f["a2"], f["b3"], f["b2"], f["a1"]]
    expected, _ = paired_from_walks(lat, [after_path, after_loop], BoundarySpec.source_sink(f["y"], f["x"]))
    return before, P, expected


def verify_figure() -> FigureReport:
    before, P, expected = figure_instance()
    after = surgical_switch(before, [P])
    class_before = set(pairings_of(before.graph, before.boundary))
    class_after = set(pairings_of(after.graph, after.boundary))
    images = {surgical_switch(g, [P]) for g in class_before}
    return FigureReport(
        reproduced=after == expected,
        upsilon_before=len(class_before),
        upsilon_after=len(class_after),
        bijective=len(images) == len(class_before) and images == class_after,
    )


# ---------------------------------------------------------------- vérifications

def verify_psi(max_degree: int = 4) -> CheckReport:
    """Ψ(z) = d! contre un comptage brut des couplages parfaits bipartis"""
    report = CheckReport("psi")
    lat = dumbbell()
    a, b = lat.sites
    for d in range(max_degree + 1):
        flux = FluxConfig({(a, b): d, (b, a): d}, lat)
        graph = SlotGraph.from_flux(flux)
        ins, outs = graph.incoming(a), graph.outgoing(a)
        candidates = list(itertools.product(ins, outs))
        brute = sum(1 for chosen in itertools.combinations(candidates, d)
                    if len({i for i, _ in chosen}) == d and len({o for _, o in chosen}) == d)
        listed = len(site_matchings(graph, a))
        report.checked += 1
        if not pairing_count(flux, a) == brute == listed == math.factorial(d):
            report.fail(f"degré {d}: Ψ={pairing_count(flux, a)}, brut={brute}, listé={listed}")
    return report


def random_walk_flux(lat: Lattice, rng: np.random.Generator, steps: int,
                     start: Optional[Site] = None, stop: Optional[Site] = None) -> FluxConfig:
    """Marche aléatoire de start, refermée (ou conduite jusqu'à stop) par un plus court chemin"""
    graph = lat.to_networkx()
    nodes = [s for s in lat.sites if lat.neighbors(s)]
    start = start if start is not None else nodes[rng.integers(len(nodes))]
    stop = stop if stop is not None else start
    walk = [start]
    for _ in range(steps):
        nbrs = lat.neighbors(walk[-1])
        walk.append(nbrs[rng.integers(len(nbrs))])
    walk += nx.shortest_path(graph, walk[-1], stop)[1:]
    return FluxConfig.from_edges(zip(walk, walk[1:]), lat)


def verify_decompose(lat: Lattice, samples: int, seed: int = 0, max_steps: int = 8,
                     x: Optional[Site] = None, y: Optional[Site] = None) -> CheckReport:
    """Partition exacte et réassemblage sur des graphes appariés aléatoires"""
    rng = np.random.default_rng(seed)
    report = CheckReport("decompose")
    for k in range(samples):
        with_source = x is not None and y is not None and k % 2 == 1
        steps = int(rng.integers(0, max_steps + 1))
        if with_source:
            flux = random_walk_flux(lat, rng, steps, start=x, stop=y)
            b = BoundarySpec.source_sink(x, y)
        else:
            flux = random_walk_flux(lat, rng, max(steps, 1))
            b = BoundarySpec.empty()
        pg = random_pairing(SlotGraph.from_flux(flux), b, rng)
        dec = decompose(pg)
        report.checked += 1
        if not dec.covers_exactly() or dec.reassemble() != flux:
            report.fail(f"partition inexacte pour {flux!r}")
            continue
        if any(dec.sites_of(loop)[0] != dec.sites_of(loop)[-1] for loop in dec.loops):
            report.fail(f"boucle ouverte pour {flux!r}")
        trail = dec.trail_sites
        if with_source and (trail is None or trail[0] != x or trail[-1] != y):
            report.fail(f"trajet x→y absent pour {flux!r}")
        if not with_source and dec.trail is not None:
            report.fail(f"trajet inattendu pour {flux!r}")
        if not with_source:
            euler = euler_decompose(flux)
            if sum(euler.loop_lengths()) != flux.total_edges or euler.reassemble() != flux:
                report.fail(f"épluchage incomplet pour {flux!r}")
    return report


def verify_paired_switch(lat: Lattice, x: Site, y: Site, beta: Rational, max_edges: int) -> CheckReport:
    """Involution, poids exact et échange source/puits sur tous les graphes appariés"""
    beta = as_fraction(beta)
    report = CheckReport("switch")
    b = BoundarySpec.source_sink(x, y)
    for flux in enumerate_flux(lat, b, max_edges):
        for pg in enumerate_pairings(flux, b):
            sg = extract_switch_graph(pg)
            if not sg.switchable:
                report.skipped += 1
                continue
            report.checked += 1
            switched = paired_switch(pg, sg)
            if paired_switch(switched) != pg:
                report.fail(f"pas une involution: {pg.graph!r}")
            if paired_weight(switched, beta) != paired_weight(pg, beta):
                report.fail(f"poids modifié: {pg.graph!r}")
            if switched.boundary != b.reversed():
                report.fail(f"bord non échangé: {pg.graph!r}")
    return report


def verify_surgical_involution(ledger: WeightLedger, x: Site, y: Site) -> CheckReport:
    """Commutation chirurgicale puis commutation le long de P renversé = identité"""
    report = CheckReport("surgical involution")
    source = BoundarySpec.source_sink(x, y)
    for key, members in ledger.classes.items():
        if key[0] != source:
            continue
        for components in surgical_sets(key[2], x, y, ledger.region):
            for g in members:
                report.checked += 1
                back = surgical_switch(surgical_switch(g, components), reverse_components(components))
                if back != g:
                    report.fail(f"aller-retour différent pour {g.graph!r}")
    return report
