"""
Échantillonneur de flux sans source (boucles élémentaires) et sonde de la
structure en boucles par appariement aléatoire
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import BoundaryError
from .flux_model import BoundarySpec, FluxConfig, Rational, as_fraction, boundary
from .lattice_model import Lattice, Site
from .pairing_model import SlotGraph, decompose, euler_decompose, random_pairing

logger = logging.getLogger(__name__)

Loop = Tuple[Site, ...]
Edge = Tuple[Site, Site]


@dataclass(frozen=True)
class WormState:
    """Configuration équilibrée après `step` propositions"""
    flux: FluxConfig
    step: int
    accepted: int


def elementary_loops(lat: Lattice) -> List[Loop]:
    """Allers-retours sur chaque liaison puis plaquettes (4-cycles), orientation canonique"""
    loops: List[Loop] = [(a, b) for a, b in lat.bonds]
    seen = set()
    for a in lat.sites:
        nbrs = lat.neighbors(a)
        for i, b in enumerate(nbrs):
            for d in nbrs[i + 1:]:
                for c in set(lat.neighbors(b)) & set(lat.neighbors(d)):
                    if c == a:
                        continue
                    cycle = (a, b, c, d)
                    key = frozenset(((a, b), (b, c), (c, d), (d, a))) | frozenset(
                        ((b, a), (c, b), (d, c), (a, d)))
                    if key in seen:
                        continue
                    seen.add(key)
                    start = cycle.index(min(cycle))
                    loops.append(cycle[start:] + cycle[:start])
    return loops


def loop_edges(loop: Loop, orientation: int = 1) -> List[Tuple[Site, Site]]:
    """Arêtes orientées de la boucle fermée (sens inverse si orientation = -1)"""
    sites = loop if orientation > 0 else tuple(reversed(loop))
    return [(sites[k], sites[(k + 1) % len(sites)]) for k in range(len(sites))]


def _edge_ratio(count: Callable[[Edge], int], bond: Callable[[Edge], Any], edges: Sequence[Edge],
                insert: bool, one):
    """Produit des facteurs βJ/(n+1) ou n/βJ arête par arête; one fixe le type (Fraction ou float)"""
    ratio = one
    added: Dict[Edge, int] = defaultdict(int)
    for e in edges:
        if insert:
            added[e] += 1
            ratio *= bond(e) / (count(e) + added[e])
        else:
            have = count(e) - added[e]
            if have <= 0:
                return one * 0
            ratio *= have / bond(e)
            added[e] += 1
    return ratio


def acceptance_ratio(flux: FluxConfig, edges: Sequence[Edge], insert: bool,
                     beta: Rational, lattice: Optional[Lattice] = None) -> Fraction:
    """w(n')/w(n) exact pour l'ajout ou le retrait des arêtes données"""
    beta = as_fraction(beta)
    lat = lattice or flux.lattice
    return _edge_ratio(flux.__getitem__, lambda e: beta * lat.bond_coupling(e), edges, insert, Fraction(1))


class WormSampler:
    """Metropolis sur les boucles élémentaires: boucle et orientation uniformes, ajout ou retrait à 1/2"""

    def __init__(self, lat: Lattice, beta: float, seed):
        self.lattice = lat
        self.beta = float(beta)
        self.loops = elementary_loops(lat)
        self.rng = np.random.default_rng(seed)
        self.counts: Dict[Tuple[Site, Site], int] = defaultdict(int)
        self.bj = {e: self.beta * float(lat.bond_coupling(e))
                   for a, b in lat.bonds for e in ((a, b), (b, a))}
        self.accepted = 0
        logger.debug("%d boucles élémentaires sur %s", len(self.loops), lat.name)

    def _ratio(self, edges, insert: bool) -> float:
        return _edge_ratio(self.counts.__getitem__, self.bj.__getitem__, edges, insert, 1.0)

    def _check_balanced(self, sites: Iterable[Site]):
        for z in sites:
            out_deg = sum(self.counts[(z, w)] for w in self.lattice.neighbors(z))
            in_deg = sum(self.counts[(w, z)] for w in self.lattice.neighbors(z))
            if out_deg != in_deg:
                raise BoundaryError(f"site déséquilibré {z!r} après une mise à jour")

    def step(self) -> bool:
        loop = self.loops[self.rng.integers(len(self.loops))]
        edges = loop_edges(loop, 1 if self.rng.random() < 0.5 else -1)
        insert = self.rng.random() < 0.5
        ratio = self._ratio(edges, insert)
        if ratio <= 0.0 or (ratio < 1.0 and self.rng.random() >= ratio):
            return False
        for e in edges:
            self.counts[e] += 1 if insert else -1
        self._check_balanced(loop)
        self.accepted += 1
        return True

    def flux(self) -> FluxConfig:
        return FluxConfig({e: n for e, n in self.counts.items() if n}, self.lattice)


def worm_sample(lat: Lattice, beta: float, steps: int, seed, every: int = 1) -> Iterator[WormState]:
    """Un état toutes les `every` propositions; ∂n = ∅ vérifié à chaque acceptation"""
    sampler = WormSampler(lat, beta, seed)
    for k in range(1, steps + 1):
        sampler.step()
        if k % every == 0:
            yield WormState(sampler.flux(), k, sampler.accepted)


@dataclass
class ProbeReport:
    """Histogramme des longueurs de boucles et fraction des arêtes en boucles de longueur <= ℓ"""
    states: int
    total_edges: int
    cap: int
    histogram: pd.DataFrame
    fraction: pd.DataFrame
    unbalanced: int = 0
    details: Dict[str, float] = field(default_factory=dict)

    @property
    def fraction_at_cap(self) -> float:
        if self.fraction.empty:
            return 1.0
        within = self.fraction[self.fraction["ell"] <= self.cap]
        return float(within["fraction"].iloc[-1]) if not within.empty else 0.0

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.fraction["fraction"].to_numpy()) >= 0))

    @property
    def terminal_one(self) -> bool:
        return self.fraction.empty or float(self.fraction["fraction"].iloc[-1]) == 1.0

    @property
    def median_length(self) -> float:
        if self.histogram.empty:
            return 0.0
        lengths = np.repeat(self.histogram["length"].to_numpy(), self.histogram["loops"].to_numpy())
        return float(np.median(lengths))

    @property
    def passed(self) -> bool:
        return self.monotone and self.terminal_one and self.unbalanced == 0


def loop_structure_probe(states: Iterable[WormState], cap: int, seed: int = 0,
                         method: str = "pairing") -> ProbeReport:
    """Décompose chaque état (appariement aléatoire ou épluchage) et agrège les longueurs"""
    rng = np.random.default_rng(seed)
    lengths: List[int] = []
    n_states = total = unbalanced = 0
    for state in states:
        n_states += 1
        if any(boundary(state.flux).values()):
            unbalanced += 1
            continue
        total += state.flux.total_edges
        if not state.flux.total_edges:
            continue
        if method == "euler":
            dec = euler_decompose(state.flux)
        else:
            graph = SlotGraph.from_flux(state.flux)
            dec = decompose(random_pairing(graph, BoundarySpec.empty(), rng))
        lengths.extend(dec.loop_lengths())

    counts = pd.Series(lengths, dtype=int).value_counts().sort_index()
    histogram = pd.DataFrame({"length": counts.index.astype(int), "loops": counts.to_numpy(dtype=int)})
    histogram["edges"] = histogram["length"] * histogram["loops"]
    if total:
        ells = list(range(1, int(histogram["length"].max()) + 1))
        cumulative = histogram.set_index("length")["edges"].reindex(ells, fill_value=0).cumsum()
        fractions = [float(Fraction(int(c), total)) for c in cumulative.to_numpy()]
        fraction = pd.DataFrame({"ell": ells, "fraction": fractions})
    else:
        fraction = pd.DataFrame({"ell": pd.Series([], dtype=int), "fraction": pd.Series([], dtype=float)})
    report = ProbeReport(n_states, total, cap, histogram, fraction, unbalanced)
    logger.debug("sonde: %d états, %d arêtes, %d boucles", n_states, total, len(lengths))
    return report

