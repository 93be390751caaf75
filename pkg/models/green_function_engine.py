"""
Fonction de Green du réseau cubique simple et borne infrarouge

G(r) = (2π)^-3 ∫ e^{ik·r} / (1 - Ĵ(k)) d³k, évaluée par deux schémas
indépendants: grille de points milieux extrapolée (Richardson) et intégrale
de Bessel G(r) = ∫_0^∞ Π_i e^{-t/3} I_{r_i}(t/3) dt.
"""

import functools
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import integrate, special

from .errors import EstimateError, QuadratureError
from .lattice_model import Site

logger = logging.getLogger(__name__)

SCHEMES = ("midpoint", "bessel")
WATSON_G0 = 1.516386059151978
BESSEL_BREAKS = (0.0, 1.0, 10.0, 100.0, 1000.0, 10000.0)
MIN_BATCHES = 100

Vector = Union[Site, Sequence[int]]


def j_hat(k) -> Union[float, np.ndarray]:
    """Ĵ(k) = (cos k1 + cos k2 + cos k3)/3, vectorisé sur le dernier axe"""
    k = np.asarray(k, dtype=float)
    value = np.cos(k).sum(axis=-1) / 3.0
    return float(value) if value.ndim == 0 else value


def _coords(v: Vector) -> Tuple[int, int, int]:
    if isinstance(v, Site):
        if v.ghost:
            raise QuadratureError("le fantôme n'a pas de coordonnées")
        return v.coords
    coords = tuple(int(c) for c in v)
    if len(coords) != 3:
        raise QuadratureError(f"vecteur 3D attendu: {v!r}")
    return coords


def canonical_offset(x: Vector, y: Vector = (0, 0, 0)) -> Tuple[int, int, int]:
    """|x - y| trié: G ne dépend que de cette classe de symétrie"""
    return tuple(sorted(abs(a - b) for a, b in zip(_coords(x), _coords(y))))


@dataclass(frozen=True)
class GreenSpec:
    """grid: points par axe du niveau le plus grossier (pair, >= 32)"""
    grid: int = 64
    scheme: str = "midpoint"
    levels: int = 3
    tolerance: float = 1e-4
    slab: int = 16

    def validate(self):
        if self.grid < 32 or self.grid % 2:
            raise QuadratureError(f"grille invalide: {self.grid} (paire, >= 32)")
        if self.scheme not in SCHEMES:
            raise QuadratureError(f"schéma inconnu: {self.scheme!r}")
        if self.levels < 1:
            raise QuadratureError("au moins un niveau de grille")
        return self


# ---------------------------------------------------------------- schéma points milieux

def _midpoint_grid(n: int) -> np.ndarray:
    h = 2.0 * np.pi / n
    return -np.pi + (np.arange(n) + 0.5) * h


def midpoint_level(n: int, r_max: int, slab: int = 16) -> np.ndarray:
    """Moyenne de Π cos(k_i r_i)/(1-Ĵ) sur la grille n³ pour 0 <= r_i <= r_max

    Grille paire: k = 0 n'est jamais un point. Sommation par tranches en k1.
    """
    k = _midpoint_grid(n)
    cos_k = np.cos(k)
    waves = np.cos(np.outer(k, np.arange(r_max + 1)))
    total = np.zeros((r_max + 1,) * 3)
    for start in range(0, n, slab):
        part = cos_k[start:start + slab]
        denom = 1.0 - (part[:, None, None] + cos_k[None, :, None] + cos_k[None, None, :]) / 3.0
        total += np.einsum("abc,ai,bj,ck->ijk", 1.0 / denom, waves[start:start + slab], waves, waves,
                           optimize=True)
    return total / n ** 3


def richardson(values: Sequence[np.ndarray]) -> np.ndarray:
    """Élimine successivement h, h³, h⁵ ... sur des grilles doublées"""
    table = [np.asarray(v) for v in values]
    power = 1
    while len(table) > 1:
        factor = 2.0 ** power
        table = [(factor * fine - coarse) / (factor - 1.0) for coarse, fine in zip(table, table[1:])]
        power += 2
    return table[0]


@functools.lru_cache(maxsize=16)
def _midpoint_values(grid: int, levels: int, r_max: int, slab: int) -> np.ndarray:
    estimates = [midpoint_level(grid * 2 ** j, r_max, slab) for j in range(levels)]
    logger.debug("points milieux: grilles %s, r_max=%d", [grid * 2 ** j for j in range(levels)], r_max)
    return richardson(estimates)


# ---------------------------------------------------------------- schéma Bessel

@functools.lru_cache(maxsize=4096)
def bessel_green(offset: Tuple[int, int, int]) -> float:
    """∫ Π ive(r_i, t/3) dt par morceaux, plus la queue asymptotique au-delà de T"""
    nu = tuple(abs(int(c)) for c in offset)

    def integrand(t: float) -> float:
        return float(np.prod(special.ive(nu, t / 3.0)))

    total = 0.0
    for a, b in zip(BESSEL_BREAKS, BESSEL_BREAKS[1:]):
        value, _ = integrate.quad(integrand, a, b, epsabs=1e-13, epsrel=1e-11, limit=200)
        total += value
    T = BESSEL_BREAKS[-1]
    s = sum(4 * n * n - 1 for n in nu) / 4.0
    tail = (3.0 / (2.0 * np.pi)) ** 1.5 * (2.0 * T ** -0.5 - s * T ** -1.5)
    return total + tail


# ---------------------------------------------------------------- interface

class GreenFunction:
    """G(x, y) selon un schéma, avec cache par classe de symétrie"""

    def __init__(self, spec: Optional[GreenSpec] = None):
        self.spec = (spec or GreenSpec()).validate()
        self._r_max = -1
        self._table: Optional[np.ndarray] = None

    def prepare(self, r_max: int):
        if r_max > self._r_max:
            s = self.spec
            self._table = _midpoint_values(s.grid, s.levels, max(r_max, 2), s.slab)
            self._r_max = max(r_max, 2)

    def value(self, offset: Tuple[int, int, int], scheme: Optional[str] = None) -> float:
        offset = canonical_offset(offset)
        scheme = scheme or self.spec.scheme
        if scheme == "bessel":
            return bessel_green(offset)
        self.prepare(offset[-1])
        return float(self._table[offset])

    def __call__(self, x: Vector, y: Vector = (0, 0, 0)) -> float:
        return self.value(canonical_offset(x, y))

    def cross_check(self, offset: Tuple[int, int, int] = (0, 0, 0)) -> float:
        """|midpoint - bessel|; QuadratureError au-delà de la tolérance"""
        delta = abs(self.value(offset, "midpoint") - self.value(offset, "bessel"))
        if delta > self.spec.tolerance:
            raise QuadratureError(f"schémas en désaccord en {offset}: écart {delta:.3e}")
        return delta

    def box_average(self, n: int) -> float:
        """(1/|B_n|²) Σ_{x,y ∈ B_n} G(x, y), B_n = [-n, n]³"""
        side = 2 * n + 1
        total = 0.0
        for r in itertools.product(range(2 * n + 1), repeat=3):
            mult = 1
            for c in r:
                mult *= (side - c) * (2 if c else 1)
            total += mult * self.value(r)
        return total / side ** 6

    def positivity_margin(self) -> float:
        """min de 1 - Ĵ sur la grille la plus fine (k = 0 exclu)"""
        n = self.spec.grid * 2 ** (self.spec.levels - 1)
        cos_k = np.cos(_midpoint_grid(n))
        return float(1.0 - cos_k.max())


def green(spec: GreenSpec, x: Vector, y: Vector, cross_check: bool = False) -> float:
    gf = _shared(spec)
    if cross_check:
        gf.cross_check(canonical_offset(x, y))
    return gf(x, y)


@functools.lru_cache(maxsize=8)
def _shared(spec: GreenSpec) -> GreenFunction:
    return GreenFunction(spec)


def laplacian_residual(spec: GreenSpec, scheme: Optional[str] = None) -> float:
    """G(0) - Σ_{|e|=1} G(e)/6 - 1 (nul pour la solution exacte)"""
    gf = _shared(spec)
    return gf.value((0, 0, 0), scheme) - gf.value((0, 0, 1), scheme) - 1.0


@dataclass
class GreenTable:
    G00: float
    scheme_delta: float
    axis: pd.DataFrame
    box_averages: pd.DataFrame
    laplacian_residual: float

    @property
    def axis_decreasing(self) -> bool:
        g = self.axis["G"].to_numpy()
        return bool(np.all(np.diff(g[1:]) < 0))

    @property
    def averages_nonincreasing(self) -> bool:
        g = self.box_averages["avg_G"].to_numpy()
        return bool(np.all(np.diff(g) <= 0))


def green_table(spec: GreenSpec, r_max: int = 6, n_max: int = 4) -> GreenTable:
    """G(0, r·e1) pour r = 0..r_max et moyennes sur B_n² pour n = 1..n_max"""
    gf = _shared(spec)
    if spec.scheme == "midpoint":
        gf.prepare(max(r_max, 2 * n_max))
    axis = pd.DataFrame({"r": list(range(r_max + 1)),
                         "G": [gf.value((r, 0, 0)) for r in range(r_max + 1)]})
    averages = pd.DataFrame({"n": list(range(1, n_max + 1)),
                             "avg_G": [gf.box_average(n) for n in range(1, n_max + 1)]})
    delta = abs(gf.value((0, 0, 0), "midpoint") - gf.value((0, 0, 0), "bessel"))
    return GreenTable(G00=gf.value((0, 0, 0)), scheme_delta=delta, axis=axis,
                      box_averages=averages, laplacian_residual=laplacian_residual(spec))


# ---------------------------------------------------------------- borne infrarouge

@dataclass
class BoundReport:
    """LHS = moyenne des corrélations sur B_n², RHS = moyenne de G / (2β)"""
    beta: float
    n: int
    lhs: float
    lhs_stderr: float
    rhs: float
    samples: int = 0
    details: Dict[str, float] = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.lhs - 3.0 * self.lhs_stderr <= self.rhs


def bound_rhs(beta: float, n: int, spec: Optional[GreenSpec] = None) -> float:
    if beta <= 0:
        raise QuadratureError(f"beta doit être positif: {beta}")
    return _shared(spec or GreenSpec()).box_average(n) / (2.0 * beta)


def bound_report(beta: float, n: int, mc_estimate, spec: Optional[GreenSpec] = None) -> BoundReport:
    """Compare l'estimation Monte Carlo de M̃_n à la borne (1/2β)·avg G"""
    if mc_estimate.samples < MIN_BATCHES:
        raise EstimateError(f"{mc_estimate.samples} lots < {MIN_BATCHES}")
    rhs = bound_rhs(beta, n, spec)
    report = BoundReport(beta=beta, n=n, lhs=mc_estimate.mean, lhs_stderr=mc_estimate.stderr,
                         rhs=rhs, samples=mc_estimate.samples)
    logger.debug("borne infrarouge n=%d β=%s: %.6g <= %.6g", n, beta, report.lhs, rhs)
    return report
