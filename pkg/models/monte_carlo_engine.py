"""
Moteur Monte Carlo du modèle XY: bain thermique par classes de couleur,
estimateurs par moyennes de lots et inégalités de corrélation
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import pandas as pd
from scipy import sparse

from .errors import EstimateError
from .lattice_model import GHOST, BoundaryCondition, Lattice, Site, site

logger = logging.getLogger(__name__)

MIN_SWEEPS = 1000
MIN_BATCHES = 100
SIGMAS = 3.0
SEED_REPEATS = 20
ALLOWED_EXCEEDANCES = 2


@dataclass
class SpinState:
    """Angles θ_k ∈ [0, 2π) des spins dynamiques; le fantôme reste à l'angle 0"""
    sites: Tuple[Site, ...]
    angles: np.ndarray
    bc: BoundaryCondition
    sweep: int = 0

    def angle(self, s: Site) -> float:
        if s.ghost:
            return 0.0
        return float(self.angles[self.sites.index(s)])

    def spin(self, s: Site) -> np.ndarray:
        a = self.angle(s)
        return np.array([math.cos(a), math.sin(a)])


@dataclass
class Estimate:
    """Moyenne de lots: stderr = écart-type des lots / sqrt(lots)"""
    mean: float
    stderr: float
    samples: int
    seed: int

    def agrees_with(self, value: float, sigmas: float = SIGMAS) -> bool:
        return abs(self.mean - value) <= sigmas * self.stderr + 1e-12


class SpinSystem:
    """Couplages 2βJ entre spins dynamiques et champ 2βJ_{k,δ} du fantôme"""

    def __init__(self, lat: Lattice, beta: float):
        if beta < 0:
            raise EstimateError(f"beta négatif: {beta}")
        self.lattice = lat
        self.beta = float(beta)
        self.sites: Tuple[Site, ...] = tuple(s for s in lat.spin_sites if not s.ghost)
        self.index = {s: i for i, s in enumerate(self.sites)}
        n = len(self.sites)
        rows, cols, vals = [], [], []
        field_ = np.zeros(n)
        for a, b in lat.bonds:
            j = 2.0 * self.beta * float(lat.bond_coupling((a, b)))
            if b.ghost:
                if a in self.index:
                    field_[self.index[a]] += j
                continue
            if a in self.index and b in self.index:
                rows += [self.index[a], self.index[b]]
                cols += [self.index[b], self.index[a]]
                vals += [j, j]
        self.couplings = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
        self.field = field_

        graph = nx.Graph()
        graph.add_nodes_from(range(n))
        graph.add_edges_from(zip(rows, cols))
        colouring = nx.greedy_color(graph, strategy="largest_first")
        classes: Dict[int, List[int]] = {}
        for node, colour in colouring.items():
            classes.setdefault(colour, []).append(node)
        self.classes = [np.array(sorted(classes[c]), dtype=int) for c in sorted(classes)]
        self._blocks = [self.couplings[cls] for cls in self.classes]
        logger.debug("%d spins, %d classes de couleur", n, len(self.classes))

    def sweep(self, theta: np.ndarray, rng: np.random.Generator):
        """Un balayage: tirage de von Mises exact, classe par classe"""
        for cls, block in zip(self.classes, self._blocks):
            fx = block @ np.cos(theta) + self.field[cls]
            fy = block @ np.sin(theta)
            theta[cls] = np.mod(rng.vonmises(np.arctan2(fy, fx), np.hypot(fx, fy)), 2.0 * np.pi)

    def indices(self, sites: Sequence[Site]) -> np.ndarray:
        """Indices des sites; -1 pour le fantôme"""
        out = []
        for s in sites:
            if s.ghost:
                out.append(-1)
            elif s in self.index:
                out.append(self.index[s])
            else:
                raise EstimateError(f"{s!r} n'est pas un spin de {self.lattice.name}")
        return np.array(out, dtype=int)


def spin_sample(lat: Lattice, beta: float, sweeps: int, seed, burn_in: int = MIN_SWEEPS,
                min_sweeps: int = MIN_SWEEPS) -> Iterator[SpinState]:
    """Flux d'états après thermalisation, déterministe pour une graine donnée"""
    if sweeps < min_sweeps or burn_in < min_sweeps:
        raise EstimateError(f"balayages insuffisants: {sweeps} (thermalisation {burn_in}) < {min_sweeps}")
    system = SpinSystem(lat, beta)
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, len(system.sites))
    for _ in range(burn_in):
        system.sweep(theta, rng)
    for k in range(sweeps):
        system.sweep(theta, rng)
        yield SpinState(system.sites, theta.copy(), lat.bc, k)


# ---------------------------------------------------------------- observables

@dataclass(frozen=True)
class Observable:
    """kind ∈ {cos_diff, cos_cos, sin_sin, cos, block}; indice -1 = fantôme"""
    name: str
    kind: str
    indices: Tuple[int, ...]

    def evaluate(self, theta: np.ndarray) -> float:
        def angle(i):
            return 0.0 if i < 0 else theta[i]

        if self.kind == "cos_diff":
            return math.cos(angle(self.indices[0]) - angle(self.indices[1]))
        if self.kind == "cos_cos":
            return math.cos(angle(self.indices[0])) * math.cos(angle(self.indices[1]))
        if self.kind == "sin_sin":
            return math.sin(angle(self.indices[0])) * math.sin(angle(self.indices[1]))
        if self.kind == "cos":
            return math.cos(angle(self.indices[0]))
        if self.kind == "block":
            block = theta[list(self.indices)]
            return float(np.abs(np.exp(1j * block).sum()) ** 2) / len(block) ** 2
        raise EstimateError(f"observable inconnue: {self.kind!r}")


def _run_chain(args) -> Dict[str, np.ndarray]:
    lat, beta, observables, sweeps, burn_in, seed_seq, min_sweeps = args
    series = {o.name: np.empty(sweeps) for o in observables}
    for k, state in enumerate(spin_sample(lat, beta, sweeps, seed_seq, burn_in, min_sweeps)):
        for o in observables:
            series[o.name][k] = o.evaluate(state.angles)
    return series


def batch_means(series: np.ndarray, batches: int) -> np.ndarray:
    if len(series) < batches:
        raise EstimateError(f"{len(series)} mesures pour {batches} lots")
    size = len(series) // batches
    return series[: size * batches].reshape(batches, size).mean(axis=1)


def estimate_from_batches(means: np.ndarray, seed: int) -> Estimate:
    if len(means) < MIN_BATCHES:
        raise EstimateError(f"{len(means)} lots < {MIN_BATCHES}")
    stderr = float(np.std(means, ddof=1) / math.sqrt(len(means)))
    return Estimate(float(np.mean(means)), stderr, len(means), seed)


@dataclass
class InequalityCheck:
    name: str
    lower: float
    upper: float
    stderr: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.upper - self.lower


@dataclass
class InequalityReport:
    beta_grid: Tuple[float, ...]
    sizes: Tuple[int, ...]
    checks: List[InequalityCheck] = field(default_factory=list)

    @property
    def violations(self) -> List[InequalityCheck]:
        return [c for c in self.checks if not c.passed]

    @property
    def passed(self) -> bool:
        return not self.violations


class MonteCarloEngine:
    """Chaînes indépendantes (une graine dérivée par chaîne), fusion par moyennes de lots

    Le nombre de chaînes fixe le résultat; workers ne change que l'exécution.
    """

    def __init__(self, sweeps: int = 4000, burn_in: int = MIN_SWEEPS, batches: int = MIN_BATCHES,
                 chains: int = 4, workers: int = 1, min_sweeps: int = MIN_SWEEPS):
        self.sweeps = sweeps
        self.burn_in = burn_in
        self.batches = batches
        self.chains = max(1, chains)
        self.workers = max(1, workers)
        self.min_sweeps = min_sweeps

    # 1. échantillonnage

    def sample(self, lat: Lattice, beta: float, observables: Sequence[Observable],
               seed: int) -> List[Dict[str, np.ndarray]]:
        per_chain = max(self.min_sweeps, math.ceil(self.sweeps / self.chains))
        seeds = np.random.SeedSequence(seed).spawn(self.chains)
        jobs = [(lat, beta, tuple(observables), per_chain, self.burn_in, s, self.min_sweeps) for s in seeds]
        if self.workers > 1 and self.chains > 1:
            with ProcessPoolExecutor(max_workers=min(self.workers, self.chains)) as pool:
                return list(pool.map(_run_chain, jobs))
        return [_run_chain(job) for job in jobs]

    # 2. estimation

    def _pooled(self, chains: List[Dict[str, np.ndarray]], name: str, seed: int) -> Estimate:
        per_chain = math.ceil(self.batches / self.chains)
        means = np.concatenate([batch_means(c[name], per_chain) for c in chains])
        return estimate_from_batches(means, seed)

    def estimate(self, lat: Lattice, beta: float, observables: Sequence[Observable],
                 seed: int) -> Dict[str, Estimate]:
        chains = self.sample(lat, beta, observables, seed)
        return {o.name: self._pooled(chains, o.name, seed) for o in observables}

    def estimate_two_point(self, lat: Lattice, beta: float, x: Site, y: Site, seed: int) -> Estimate:
        """<S_x·S_y>; le fantôme vaut le spin (1, 0)"""
        if x == y:
            return Estimate(1.0, 0.0, self.batches, seed)
        system = SpinSystem(lat, beta)
        i, j = system.indices([x, y])
        obs = Observable("two_point", "cos_diff", (int(i), int(j)))
        return self.estimate(lat, beta, [obs], seed)["two_point"]

    def estimate_Mn(self, lat: Lattice, beta: float, n: int, seed: int) -> Estimate:
        """M̃_n = |Σ_{B_n} e^{iθ}|² / |B_n|², B_n = [-n, n]³"""
        box = block_sites(lat, n)
        system = SpinSystem(lat, beta)
        obs = Observable("mn", "block", tuple(int(i) for i in system.indices(box)))
        return self.estimate(lat, beta, [obs], seed)["mn"]

    def estimate_mag(self, lat_plus: Lattice, beta: float, seed: int, x: Optional[Site] = None) -> Estimate:
        """<S_x·S_δ> = <cos θ_x> sous bord plus"""
        if not lat_plus.has_ghost:
            raise EstimateError("l'aimantation demande un bord plus")
        return self.estimate_two_point(lat_plus, beta, x or site(0, 0, 0), GHOST, seed)

    # 3. inégalités

    def _correlations(self, lat: Lattice, beta: float, x: Site, y: Site, seed: int) -> Dict[str, Estimate]:
        system = SpinSystem(lat, beta)
        i, j = (int(v) for v in system.indices([x, y]))
        observables = [Observable("two_point", "cos_diff", (i, j)),
                       Observable("cos_cos", "cos_cos", (i, j)),
                       Observable("sin_sin", "sin_sin", (i, j)),
                       Observable("cos_x", "cos", (i,)),
                       Observable("cos_y", "cos", (j,))]
        chains = self.sample(lat, beta, observables, seed)
        result = {o.name: self._pooled(chains, o.name, seed) for o in observables}
        # covariance centrée sur les moyennes globales, même chaîne de lots
        mx, my = result["cos_x"].mean, result["cos_y"].mean
        for c in chains:
            c["covariance"] = (c["cos_x"] - mx) * (c["cos_y"] - my)
        result["covariance"] = self._pooled(chains, "covariance", seed)
        return result

    def inequality_suite(self, sizes: Sequence[int] = (2, 3), betas: Sequence[float] = (0.2, 0.4, 0.6),
                         x: Optional[Site] = None, y: Optional[Site] = None, seed: int = 0,
                         coupling_table=None) -> InequalityReport:
        """Libre <= périodique, Griffiths sous bord plus, croissance en β et en L"""
        x = x or site(-1, 0, 0)
        y = y or site(1, 0, 0)
        report = InequalityReport(tuple(betas), tuple(sizes))
        free: Dict[Tuple[int, float], Estimate] = {}
        for L in sizes:
            lattices = {bc: Lattice(L, bc, coupling_table) for bc in
                        (BoundaryCondition.FREE, BoundaryCondition.PERIODIC, BoundaryCondition.PLUS)}
            for beta in betas:
                f = self.estimate_two_point(lattices[BoundaryCondition.FREE], beta, x, y, seed)
                p = self.estimate_two_point(lattices[BoundaryCondition.PERIODIC], beta, x, y, seed)
                free[(L, beta)] = f
                report.checks.append(_ordered(f"free<=periodic L={L} β={beta}", f, p))
                plus = self._correlations(lattices[BoundaryCondition.PLUS], beta, x, y, seed)
                zero = Estimate(0.0, 0.0, plus["covariance"].samples, seed)
                report.checks.append(_ordered(f"griffiths L={L} β={beta}", zero, plus["covariance"]))
                report.checks.append(_ordered(f"sin·sin>=0 L={L} β={beta}", zero, plus["sin_sin"]))
                if beta == 0:
                    report.checks.append(InequalityCheck(
                        f"β=0 L={L}", -SIGMAS * f.stderr, f.mean, f.stderr, f.agrees_with(0.0)))
            for b1, b2 in zip(betas, betas[1:]):
                report.checks.append(_ordered(f"croissance en β L={L} {b1}->{b2}",
                                              free[(L, b1)], free[(L, b2)]))
        for L1, L2 in zip(sizes, sizes[1:]):
            for beta in betas:
                report.checks.append(_ordered(f"croissance en L β={beta} {L1}->{L2}",
                                              free[(L1, beta)], free[(L2, beta)]))
        for c in report.violations:
            logger.warning("inégalité violée: %s (marge %.3g)", c.name, c.margin)
        return report


def _ordered(name: str, lower: Estimate, upper: Estimate) -> InequalityCheck:
    """lower <= upper à 3σ combinés"""
    stderr = math.hypot(lower.stderr, upper.stderr)
    return InequalityCheck(name, lower.mean, upper.mean, stderr,
                           lower.mean - upper.mean <= SIGMAS * stderr + 1e-12)


def block_sites(lat: Lattice, n: int) -> List[Site]:
    """B_n = [-n, n]³ dans les spins: n <= L - 1 pour une boîte (rayon L = bord ou image périodique)"""
    limit = lat.L if lat.bc == BoundaryCondition.GRAPH else lat.L - 1
    if n < 0 or n > limit:
        raise EstimateError(f"n={n} hors de [0, {limit}]: B_n doit tenir dans les spins de {lat.name}")
    box = [site(a, b, c) for a in range(-n, n + 1) for b in range(-n, n + 1) for c in range(-n, n + 1)]
    spins = set(lat.spin_sites)
    missing = [s for s in box if s not in spins]
    if missing:
        raise EstimateError(f"B_{n} dépasse les spins de {lat.name}: {missing[0]!r}")
    return box


# ---------------------------------------------------------------- répétition sur graines

def spawn_seeds(seed: int, count: int) -> List[int]:
    """Graines entières indépendantes dérivées de seed"""
    return [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(count)]


# (cible, marge, dans le seuil) pour une estimation
Judge = Callable[[Estimate], Tuple[float, float, bool]]


def oracle_judge(exact: float, sigmas: float = SIGMAS) -> Judge:
    """Écart à une valeur exacte; marge = seuil 3σ moins l'écart"""
    def judge(est: Estimate) -> Tuple[float, float, bool]:
        margin = sigmas * est.stderr + 1e-12 - abs(est.mean - exact)
        return exact, margin, est.agrees_with(exact, sigmas)
    return judge


@dataclass
class SeedSweep:
    """Une ligne par graine; la suite tolère `allowed` dépassements du seuil"""
    table: pd.DataFrame
    allowed: int = ALLOWED_EXCEEDANCES

    @property
    def repeats(self) -> int:
        return len(self.table)

    @property
    def exceedances(self) -> int:
        return int(self.table["exceeded"].sum())

    @property
    def passed(self) -> bool:
        return self.exceedances <= self.allowed


def seed_sweep(estimate: Callable[[int], Estimate], judge: Judge, seed: int,
               repeats: int = SEED_REPEATS, allowed: int = ALLOWED_EXCEEDANCES) -> SeedSweep:
    """Répète estimate sur `repeats` graines dérivées et compte les dépassements"""
    if repeats < 1 or allowed < 0:
        raise EstimateError(f"répétitions {repeats}, dépassements tolérés {allowed}")
    rows = []
    for s in spawn_seeds(seed, repeats):
        est = estimate(s)
        target, margin, within = judge(est)
        rows.append({"seed": s, "mean": est.mean, "stderr": est.stderr, "target": target,
                     "margin": margin, "exceeded": not within})
    sweep = SeedSweep(pd.DataFrame(rows, columns=["seed", "mean", "stderr", "target", "margin", "exceeded"]),
                      allowed)
    logger.info("%d graines, %d dépassements (tolérés: %d)", sweep.repeats, sweep.exceedances, allowed)
    return sweep


# ---------------------------------------------------------------- fonctions de module

def estimate_two_point(lat: Lattice, beta: float, x: Site, y: Site, seed: int = 0,
                       engine: Optional[MonteCarloEngine] = None) -> Estimate:
    return (engine or MonteCarloEngine()).estimate_two_point(lat, beta, x, y, seed)


def estimate_Mn(lat: Lattice, beta: float, n: int, seed: int = 0,
                engine: Optional[MonteCarloEngine] = None) -> Estimate:
    return (engine or MonteCarloEngine()).estimate_Mn(lat, beta, n, seed)


def estimate_mag(lat_plus: Lattice, beta: float, seed: int = 0, x: Optional[Site] = None,
                 engine: Optional[MonteCarloEngine] = None) -> Estimate:
    return (engine or MonteCarloEngine()).estimate_mag(lat_plus, beta, seed, x)


def inequality_suite(sizes: Sequence[int] = (2, 3), betas: Sequence[float] = (0.2, 0.4, 0.6),
                     seed: int = 0, engine: Optional[MonteCarloEngine] = None, **kwargs) -> InequalityReport:
    return (engine or MonteCarloEngine()).inequality_suite(sizes, betas, seed=seed, **kwargs)
