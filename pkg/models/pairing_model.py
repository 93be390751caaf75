"""
Appariement des arêtes: positions individualisées sur les liaisons, comptage Ψ,
décomposition en boucles et trajet, graphe de commutation, commutation appariée
et commutation chirurgicale
"""

import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import (Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional,
                    Sequence, Set, Tuple)

import numpy as np
from sympy.utilities.iterables import multiset_permutations

from .errors import BoundaryError, CostGuardError, LatticeError, NotSwitchableError, SwitchingError
from .flux_model import BoundarySpec, FluxConfig, Rational, as_fraction, boundary
from .lattice_model import Lattice, Site

logger = logging.getLogger(__name__)

Bond = Tuple[Site, Site]

PAIRING_GUARD = 10 ** 6


class Label(str, Enum):
    """Composante d'origine d'une arête: n_δ ou n_0"""
    DELTA = "delta"
    FREE = "free"

    def flipped(self) -> "Label":
        return Label.FREE if self is Label.DELTA else Label.DELTA


@dataclass(frozen=True, order=True)
class Slot:
    """Position individuelle sur une liaison non orientée (a < b)"""
    bond: Bond
    position: int

    def other(self, s: Site) -> Site:
        a, b = self.bond
        return b if s == a else a

    def touches_ghost(self) -> bool:
        return self.bond[0].ghost or self.bond[1].ghost

    def __repr__(self) -> str:
        return f"{self.bond[0]!r}-{self.bond[1]!r}#{self.position}"


@dataclass(frozen=True)
class SlotState:
    tail: Site
    label: Optional[Label] = None


class SlotGraph:
    """Graphe orienté non apparié dont chaque arête occupe une position de liaison"""

    __slots__ = ("_states", "_key", "_in", "_out", "_hash", "lattice")

    def __init__(self, states: Mapping[Slot, SlotState], lattice: Optional[Lattice] = None):
        self._states: Dict[Slot, SlotState] = dict(states)
        self._key = tuple(sorted(self._states.items(), key=lambda kv: kv[0]))
        incoming: Dict[Site, List[Slot]] = defaultdict(list)
        outgoing: Dict[Site, List[Slot]] = defaultdict(list)
        for slot, state in self._key:
            if state.tail not in slot.bond:
                raise LatticeError(f"origine {state.tail!r} hors de la liaison {slot!r}")
            outgoing[state.tail].append(slot)
            incoming[slot.other(state.tail)].append(slot)
        self._in = {s: tuple(v) for s, v in incoming.items()}
        self._out = {s: tuple(v) for s, v in outgoing.items()}
        self._hash = hash(self._key)
        self.lattice = lattice

    @classmethod
    def from_flux(cls, flux: FluxConfig, label: Optional[Label] = None) -> "SlotGraph":
        """Individualisation canonique: a→b puis b→a sur chaque liaison"""
        states: Dict[Slot, SlotState] = {}
        for (a, b) in sorted(flux.bond_totals()):
            pos = 0
            for tail, head in ((a, b), (b, a)):
                for _ in range(flux[(tail, head)]):
                    states[Slot((a, b), pos)] = SlotState(tail, label)
                    pos += 1
        return cls(states, flux.lattice)

    @classmethod
    def individuations(cls, n_delta: FluxConfig, n_zero: FluxConfig,
                       lattice: Optional[Lattice] = None) -> Iterator["SlotGraph"]:
        """Toutes les répartitions (sens, étiquette) sur les positions de chaque liaison"""
        lattice = lattice or n_delta.lattice or n_zero.lattice
        per_bond = []
        bonds = sorted(set(n_delta.bond_totals()) | set(n_zero.bond_totals()))
        for a, b in bonds:
            tokens = ([(a, Label.DELTA)] * n_delta[(a, b)] + [(b, Label.DELTA)] * n_delta[(b, a)]
                      + [(a, Label.FREE)] * n_zero[(a, b)] + [(b, Label.FREE)] * n_zero[(b, a)])
            per_bond.append([tuple(p) for p in multiset_permutations(sorted(tokens))])
        for choice in itertools.product(*per_bond):
            states = {}
            for (a, b), arrangement in zip(bonds, choice):
                for pos, (tail, label) in enumerate(arrangement):
                    states[Slot((a, b), pos)] = SlotState(tail, label)
            yield cls(states, lattice)

    # ------------------------------------------------------------ accès

    def __len__(self) -> int:
        return len(self._key)

    def __contains__(self, slot: Slot) -> bool:
        return slot in self._states

    def __eq__(self, other) -> bool:
        return isinstance(other, SlotGraph) and self._key == other._key

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        body = ", ".join(f"{s.tail!r}→{slot.other(s.tail)!r}" + (f"[{s.label.value}]" if s.label else "")
                         for slot, s in self._key)
        return "SlotGraph{" + body + "}"

    def slots(self) -> Tuple[Slot, ...]:
        return tuple(slot for slot, _ in self._key)

    def items(self):
        return self._key

    def state(self, slot: Slot) -> SlotState:
        return self._states[slot]

    def tail(self, slot: Slot) -> Site:
        return self._states[slot].tail

    def head(self, slot: Slot) -> Site:
        return slot.other(self._states[slot].tail)

    def label(self, slot: Slot) -> Optional[Label]:
        return self._states[slot].label

    def incoming(self, z: Site) -> Tuple[Slot, ...]:
        return self._in.get(z, ())

    def outgoing(self, z: Site) -> Tuple[Slot, ...]:
        return self._out.get(z, ())

    def sites(self) -> Tuple[Site, ...]:
        return tuple(sorted(set(self._in) | set(self._out)))

    def flux(self, label: Optional[Label] = None) -> FluxConfig:
        """Multigraphe orienté projeté (toutes étiquettes si label est None)"""
        mult: Dict[Tuple[Site, Site], int] = defaultdict(int)
        for slot, state in self._key:
            if label is None or state.label is label:
                mult[(state.tail, slot.other(state.tail))] += 1
        return FluxConfig(mult, self.lattice)

    def switched(self, slots: Iterable[Slot]) -> "SlotGraph":
        """Inverse le sens et l'étiquette des positions données"""
        states = dict(self._states)
        for slot in slots:
            old = states[slot]
            states[slot] = SlotState(slot.other(old.tail), old.label.flipped() if old.label else None)
        return SlotGraph(states, self.lattice)

    def restricted(self, keep_bond) -> "SlotGraph":
        return SlotGraph({s: st for s, st in self._key if keep_bond(s.bond)}, self.lattice)


class Pairing:
    """Appariements non ordonnés {entrante, sortante} par site"""

    __slots__ = ("_pairs", "_partner", "_key", "_hash")

    def __init__(self, pairs: Mapping[Site, Iterable[Iterable[Slot]]]):
        self._pairs: Dict[Site, FrozenSet[FrozenSet[Slot]]] = {}
        self._partner: Dict[Tuple[Site, Slot], Slot] = {}
        for z, matches in pairs.items():
            frozen = frozenset(frozenset(m) for m in matches)
            if not frozen:
                continue
            self._pairs[z] = frozen
            for match in frozen:
                if len(match) != 2:
                    raise BoundaryError(f"appariement dégénéré en {z!r}")
                s1, s2 = tuple(match)
                self._partner[(z, s1)] = s2
                self._partner[(z, s2)] = s1
        self._key = frozenset((z, m) for z, ms in self._pairs.items() for m in ms)
        self._hash = hash(self._key)

    def partner(self, z: Site, slot: Slot) -> Optional[Slot]:
        return self._partner.get((z, slot))

    def at(self, z: Site) -> FrozenSet[FrozenSet[Slot]]:
        return self._pairs.get(z, frozenset())

    def sites(self) -> Tuple[Site, ...]:
        return tuple(sorted(self._pairs))

    def as_dict(self) -> Dict[Site, FrozenSet[FrozenSet[Slot]]]:
        return dict(self._pairs)

    def restricted(self, keep_site) -> "Pairing":
        return Pairing({z: m for z, m in self._pairs.items() if keep_site(z)})

    def __eq__(self, other) -> bool:
        return isinstance(other, Pairing) and self._key == other._key

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Pairing({len(self._key)} paires sur {len(self._pairs)} sites)"


@dataclass(frozen=True)
class PairedGraph:
    """Graphe à positions + appariement hors des sites non appariés

    Sans région: non apparié en x, y. Avec région N: apparié seulement aux
    sites |z| < N hors de {x, y}, positions limitées à |z| <= N.
    """
    graph: SlotGraph
    pairing: Pairing
    boundary: BoundarySpec
    region: Optional[int] = None

    @property
    def flux(self) -> FluxConfig:
        return self.graph.flux()

    @property
    def projection(self) -> Tuple[BoundarySpec, Optional[int], SlotGraph]:
        return (self.boundary, self.region, self.graph)

    def is_paired_site(self, z: Site) -> bool:
        if z in self.boundary.endpoints:
            return False
        if self.region is None:
            return True
        return not z.ghost and z.radius < self.region

    def paired_sites(self) -> Tuple[Site, ...]:
        return tuple(z for z in self.graph.sites() if self.is_paired_site(z))

    def validate(self):
        """Chaque site apparié porte un couplage parfait entrantes/sortantes"""
        for z in self.graph.sites():
            ins, outs = set(self.graph.incoming(z)), set(self.graph.outgoing(z))
            matches = self.pairing.at(z)
            if not self.is_paired_site(z):
                if matches:
                    raise BoundaryError(f"appariement au site non apparié {z!r}")
                continue
            if len(ins) != len(outs) or len(matches) != len(ins):
                raise BoundaryError(f"appariement incomplet en {z!r}")
            for m in matches:
                if len(m & ins) != 1 or len(m & outs) != 1:
                    raise BoundaryError(f"paire invalide en {z!r}: {sorted(m)!r}")
        stray = set(self.pairing.sites()) - set(self.graph.sites())
        if stray:
            raise BoundaryError(f"appariement sur des sites sans arête: {sorted(stray)!r}")
        return self


# ---------------------------------------------------------------- Ψ et énumération

def pairing_count(flux: FluxConfig, z: Site, boundary_spec: Optional[BoundarySpec] = None) -> int:
    """Ψ(z) = (degré sortant)!"""
    if boundary_spec is not None and z in boundary_spec.endpoints:
        raise BoundaryError(f"{z!r} est une extrémité, non appariée")
    out_deg, in_deg = flux.out_degree(z), flux.in_degree(z)
    if out_deg != in_deg:
        raise BoundaryError(f"site déséquilibré {z!r}: {in_deg} entrantes, {out_deg} sortantes")
    return math.factorial(out_deg)


def total_pairing_count(flux: FluxConfig, boundary_spec: BoundarySpec) -> int:
    count = 1
    for z in flux.sites():
        if z not in boundary_spec.endpoints:
            count *= pairing_count(flux, z, boundary_spec)
    return count


def site_matchings(graph: SlotGraph, z: Site) -> List[Tuple[FrozenSet[Slot], ...]]:
    """Tous les couplages parfaits entrantes → sortantes en z"""
    ins, outs = graph.incoming(z), graph.outgoing(z)
    if len(ins) != len(outs):
        raise BoundaryError(f"site déséquilibré {z!r}")
    return [tuple(frozenset((i, o)) for i, o in zip(ins, perm)) for perm in itertools.permutations(outs)]


def class_size(graph: SlotGraph, paired_sites: Iterable[Site]) -> int:
    return math.prod(math.factorial(len(graph.outgoing(z))) for z in paired_sites)


def pairings_of(graph: SlotGraph, boundary_spec: BoundarySpec, region: Optional[int] = None,
                guard: int = PAIRING_GUARD) -> Iterator[PairedGraph]:
    """Tous les graphes appariés de projection donnée"""
    probe = PairedGraph(graph, Pairing({}), boundary_spec, region)
    sites = probe.paired_sites()
    total = class_size(graph, sites) if all(
        len(graph.incoming(z)) == len(graph.outgoing(z)) for z in sites) else None
    if total is None:
        bad = [z for z in sites if len(graph.incoming(z)) != len(graph.outgoing(z))]
        raise BoundaryError(f"sites déséquilibrés hors de x, y: {bad!r}")
    if total > guard:
        raise CostGuardError("pairings", guard, total)
    options = [site_matchings(graph, z) for z in sites]
    for choice in itertools.product(*options):
        yield PairedGraph(graph, Pairing(dict(zip(sites, choice))), boundary_spec, region)


def enumerate_pairings(flux: FluxConfig, boundary_spec: BoundarySpec,
                       guard: int = PAIRING_GUARD) -> Iterator[PairedGraph]:
    """Chaque appariement de flux exactement une fois; nombre = Π Ψ(z)"""
    yield from pairings_of(SlotGraph.from_flux(flux), boundary_spec, guard=guard)


def random_pairing(graph: SlotGraph, boundary_spec: BoundarySpec,
                   rng: np.random.Generator, region: Optional[int] = None) -> PairedGraph:
    probe = PairedGraph(graph, Pairing({}), boundary_spec, region)
    pairs = {}
    for z in probe.paired_sites():
        ins, outs = graph.incoming(z), graph.outgoing(z)
        if len(ins) != len(outs):
            raise BoundaryError(f"site déséquilibré {z!r}")
        perm = rng.permutation(len(outs))
        pairs[z] = [(i, outs[k]) for i, k in zip(ins, perm)]
    return PairedGraph(graph, Pairing(pairs), boundary_spec, region)


def paired_weight(pg: PairedGraph, beta: Rational) -> Fraction:
    """W = (1/2)^s Π_liaisons (βJ)^n/n! / Ψ, s = 1 en présence d'une source"""
    beta = as_fraction(beta)
    lat = pg.graph.lattice
    if lat is None:
        raise LatticeError("poids apparié sans réseau")
    value = Fraction(1) if pg.boundary.is_empty else Fraction(1, 2)
    for bond, n in pg.flux.bond_totals().items():
        value *= (beta * lat.bond_coupling(bond)) ** n / math.factorial(n)
    return value / class_size(pg.graph, pg.paired_sites())


# ---------------------------------------------------------------- décompositions

@dataclass
class TrailDecomposition:
    """Partition des positions en boucles orientées et au plus un trajet x→y"""
    loops: Tuple[Tuple[Slot, ...], ...]
    trail: Optional[Tuple[Slot, ...]]
    graph: SlotGraph = field(repr=False, compare=False)

    def sites_of(self, walk: Sequence[Slot]) -> Tuple[Site, ...]:
        if not walk:
            return ()
        return (self.graph.tail(walk[0]),) + tuple(self.graph.head(s) for s in walk)

    @property
    def loop_sites(self) -> List[Tuple[Site, ...]]:
        return [self.sites_of(loop) for loop in self.loops]

    @property
    def trail_sites(self) -> Optional[Tuple[Site, ...]]:
        return None if self.trail is None else self.sites_of(self.trail)

    def loop_lengths(self) -> List[int]:
        return [len(loop) for loop in self.loops]

    def covers_exactly(self) -> bool:
        used = [s for loop in self.loops for s in loop] + list(self.trail or ())
        return len(used) == len(set(used)) and set(used) == set(self.graph.slots())

    def reassemble(self) -> FluxConfig:
        edges = [(self.graph.tail(s), self.graph.head(s))
                 for walk in list(self.loops) + ([self.trail] if self.trail else []) for s in walk]
        return FluxConfig.from_edges(edges, self.graph.lattice)


def _successor_map(pg: PairedGraph) -> Tuple[Dict[Slot, Optional[Slot]], Optional[Slot]]:
    """Position suivante après chaque position; appariement virtuel par ordre en x, y"""
    graph = pg.graph
    succ: Dict[Slot, Optional[Slot]] = {}
    start = None
    for z in graph.sites():
        ins, outs = graph.incoming(z), graph.outgoing(z)
        if pg.is_paired_site(z):
            for i in ins:
                succ[i] = pg.pairing.partner(z, i)
            continue
        if z == pg.boundary.x:
            if len(outs) != len(ins) + 1:
                raise BoundaryError(f"la source {z!r} n'a pas un excédent sortant de 1")
            start = outs[0]
            for i, o in zip(ins, outs[1:]):
                succ[i] = o
        elif z == pg.boundary.y:
            if len(ins) != len(outs) + 1:
                raise BoundaryError(f"le puits {z!r} n'a pas un excédent entrant de 1")
            for i, o in zip(ins, outs):
                succ[i] = o
            succ[ins[-1]] = None
        else:
            raise BoundaryError(f"site non apparié inattendu {z!r}")
    return succ, start


def decompose(pg: PairedGraph) -> TrailDecomposition:
    """Suit les appariements: boucles fermées et, avec une source, un trajet x→y"""
    if pg.region is not None:
        raise BoundaryError("décomposition réservée aux graphes entièrement appariés")
    succ, start = _successor_map(pg)
    used: Set[Slot] = set()
    trail = None
    if start is not None:
        walk = [start]
        used.add(start)
        nxt = succ[start]
        while nxt is not None:
            walk.append(nxt)
            used.add(nxt)
            nxt = succ[nxt]
        trail = tuple(walk)
    loops = []
    for slot in pg.graph.slots():
        if slot in used:
            continue
        loop = [slot]
        used.add(slot)
        nxt = succ[slot]
        while nxt != slot:
            if nxt is None or nxt in used:
                raise BoundaryError(f"appariement incohérent autour de {slot!r}")
            loop.append(nxt)
            used.add(nxt)
            nxt = succ[nxt]
        loops.append(tuple(loop))
    return TrailDecomposition(tuple(loops), trail, pg.graph)


def euler_decompose(flux: FluxConfig) -> TrailDecomposition:
    """Épluchage déterministe en cycles orientés simples"""
    if any(boundary(flux).values()):
        raise BoundaryError("euler_decompose demande ∂n = ∅")
    graph = SlotGraph.from_flux(flux)
    available: Dict[Site, List[Slot]] = {z: list(graph.outgoing(z)) for z in graph.sites()}
    loops = []
    remaining = len(graph)
    while remaining:
        first = min(s for outs in available.values() for s in outs)
        start = graph.tail(first)
        walk_sites = [start]
        walk_slots: List[Slot] = []
        position = {start: 0}
        available[start].remove(first)
        walk_slots.append(first)
        here = graph.head(first)
        while here not in position:
            position[here] = len(walk_sites)
            walk_sites.append(here)
            slot = available[here].pop(0)
            walk_slots.append(slot)
            here = graph.head(slot)
        cut = position[here]
        for slot in walk_slots[:cut]:
            available[graph.tail(slot)].append(slot)
            available[graph.tail(slot)].sort()
        cycle = tuple(walk_slots[cut:])
        loops.append(cycle)
        remaining -= len(cycle)
    return TrailDecomposition(tuple(loops), None, graph)


# ---------------------------------------------------------------- commutation appariée

@dataclass(frozen=True)
class SwitchGraph:
    """Union des composantes passant par x ou y"""
    slots: FrozenSet[Slot]
    switchable: bool


def extract_switch_graph(pg: PairedGraph) -> SwitchGraph:
    if pg.boundary.is_empty:
        raise BoundaryError("graphe de commutation sans source")
    dec = decompose(pg)
    ends = set(pg.boundary.endpoints)
    chosen: Set[Slot] = set(dec.trail or ())
    for loop in dec.loops:
        if any(pg.graph.tail(s) in ends for s in loop):
            chosen.update(loop)
    switchable = not any(s.touches_ghost() for s in chosen)
    return SwitchGraph(frozenset(chosen), switchable)


def paired_switch(pg: PairedGraph, P: Optional[SwitchGraph] = None) -> PairedGraph:
    """Renverse P en gardant les appariements; source et puits échangés"""
    actual = extract_switch_graph(pg)
    if P is not None and P.slots != actual.slots:
        raise SwitchingError("P n'est pas le graphe de commutation de pg")
    if not actual.switchable:
        raise NotSwitchableError("une composante passe par le fantôme")
    return PairedGraph(pg.graph.switched(actual.slots), pg.pairing, pg.boundary.reversed(), pg.region)


# ---------------------------------------------------------------- commutation chirurgicale

def slots_along(graph: SlotGraph, sites: Sequence[Site], exclude: Iterable[Slot] = ()) -> Tuple[Slot, ...]:
    """Plus petite position disponible pour chaque pas de la suite de sites"""
    taken = set(exclude)
    walk = []
    for a, b in zip(sites, sites[1:]):
        candidates = [s for s in graph.outgoing(a) if graph.head(s) == b and s not in taken]
        if not candidates:
            raise SwitchingError(f"aucune arête {a!r}→{b!r} disponible")
        walk.append(candidates[0])
        taken.add(candidates[0])
    return tuple(walk)


def _check_component(graph: SlotGraph, component: Sequence[Slot]) -> bool:
    """Vérifie la continuité; renvoie True pour une boucle"""
    if not component:
        raise SwitchingError("composante vide")
    for slot in component:
        if slot not in graph:
            raise SwitchingError(f"{slot!r} absent de la projection")
        if slot.touches_ghost():
            raise SwitchingError("la commutation chirurgicale évite le fantôme")
    for s1, s2 in zip(component, component[1:]):
        if graph.head(s1) != graph.tail(s2):
            raise SwitchingError(f"composante discontinue en {s1!r}")
    sites = [graph.tail(s) for s in component]
    if len(set(sites)) != len(sites):
        raise SwitchingError("composante non auto-évitante")
    closed = graph.head(component[-1]) == graph.tail(component[0])
    if not closed and graph.head(component[-1]) in sites:
        raise SwitchingError("composante non auto-évitante")
    return closed


def surgical_switch(pg: PairedGraph, components: Sequence[Sequence[Slot]]) -> PairedGraph:
    """Renverse les composantes de P une à une et réapparie selon les règles locales

    Aux sites internes appariés: inchangé si l'arête entrante de P est appariée à
    la sortante de P; sinon les partenaires des deux arêtes de P sont échangés.
    """
    graph = pg.graph
    pairs = pg.pairing.as_dict()
    seen: Set[Slot] = set()
    delta_p: Dict[Site, int] = defaultdict(int)

    for component in components:
        component = tuple(component)
        if seen & set(component):
            raise SwitchingError("composantes de P non disjointes")
        seen.update(component)
        closed = _check_component(graph, component)
        inner = range(len(component)) if closed else range(1, len(component))
        for k in inner:
            p_in, p_out = component[k - 1], component[k]
            z = graph.tail(p_out)
            if not pg.is_paired_site(z):
                continue
            current = Pairing({z: pairs[z]})
            partner_in = current.partner(z, p_in)
            partner_out = current.partner(z, p_out)
            if partner_in == p_out:
                continue
            kept = {m for m in pairs[z] if p_in not in m and p_out not in m}
            kept.add(frozenset((p_in, partner_out)))
            kept.add(frozenset((p_out, partner_in)))
            pairs[z] = frozenset(kept)
        if not closed:
            delta_p[graph.tail(component[0])] += 1
            delta_p[graph.head(component[-1])] -= 1
        graph = graph.switched(component)

    delta_p = {z: v for z, v in delta_p.items() if v}
    if not delta_p:
        new_boundary = pg.boundary
    elif delta_p == pg.boundary.expected():
        new_boundary = pg.boundary.reversed()
    else:
        raise SwitchingError(f"le bord de P {delta_p!r} ne correspond pas à {pg.boundary!r}")
    return PairedGraph(graph, Pairing(pairs), new_boundary, pg.region)


def reverse_components(components: Sequence[Sequence[Slot]]) -> List[Tuple[Slot, ...]]:
    """Composantes de l'inverse: ordre inversé, chaque composante renversée"""
    return [tuple(reversed(c)) for c in reversed(components)]


def canonical_components(graph: SlotGraph, slots: Iterable[Slot], x: Site, y: Site) -> List[Tuple[Slot, ...]]:
    """Découpe P (∂P = {x→y}) en un chemin auto-évitant et des boucles, ordre (longueur, lex)"""
    pool = set(slots)
    out: Dict[Site, List[Slot]] = defaultdict(list)
    for s in sorted(pool):
        out[graph.tail(s)].append(s)
    components: List[Tuple[Slot, ...]] = []

    def walk_from(start: Site, stop: Optional[Site]) -> Tuple[Slot, ...]:
        sites, walk = [start], []
        while True:
            here = sites[-1]
            if stop is not None and here == stop and walk:
                return tuple(walk)
            if not out[here]:
                raise SwitchingError(f"P se bloque en {here!r}")
            slot = out[here].pop(0)
            nxt = graph.head(slot)
            walk.append(slot)
            if nxt in sites:
                cut = sites.index(nxt)
                components.append(tuple(walk[cut:]))
                del walk[cut:]
                del sites[cut + 1:]
                if stop is None and not walk:
                    return ()
                continue
            sites.append(nxt)

    path = walk_from(x, y)
    while any(out.values()):
        start = min(s for v in out.values() for s in v)
        walk_from(graph.tail(start), None)
    return [path] + sorted(components, key=lambda c: (len(c), c))
