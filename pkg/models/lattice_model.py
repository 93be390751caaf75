"""
Modèle de réseau: boîtes 3D avec conditions de bord libres, plus (site fantôme)
ou périodiques, couplages rationnels exacts et ordre σ des sites
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from .errors import LatticeError

logger = logging.getLogger(__name__)

Offset = Tuple[int, int, int]

UNIT_OFFSETS: Tuple[Offset, ...] = (
    (1, 0, 0), (-1, 0, 0),
    (0, 1, 0), (0, -1, 0),
    (0, 0, 1), (0, 0, -1),
)


class BoundaryCondition(str, Enum):
    """Conditions de bord supportées"""
    FREE = "free"
    PLUS = "plus"
    PERIODIC = "periodic"
    GRAPH = "graph"


@dataclass(frozen=True, order=True)
class Site:
    """Site intérieur (coordonnées entières) ou site fantôme δ

    L'ordre (ghost, coords) place le fantôme en dernier.
    """
    ghost: bool = False
    coords: Offset = (0, 0, 0)

    @property
    def radius(self) -> int:
        if self.ghost:
            raise LatticeError("le fantôme n'a pas de rayon")
        return max(abs(c) for c in self.coords)

    def shifted(self, offset: Offset) -> "Site":
        return Site(False, tuple(c + d for c, d in zip(self.coords, offset)))

    def __repr__(self) -> str:
        if self.ghost:
            return "δ"
        return "(%d,%d,%d)" % self.coords


GHOST = Site(ghost=True)


def site(x: int, y: int = 0, z: int = 0) -> Site:
    """Construit un site intérieur"""
    return Site(False, (int(x), int(y), int(z)))


def parse_site(text: str) -> Site:
    """'a,b,c' ou 'ghost' -> Site"""
    text = text.strip()
    if text.lower() in ("ghost", "delta", "δ"):
        return GHOST
    parts = [p for p in text.replace("(", "").replace(")", "").split(",") if p.strip()]
    if len(parts) != 3:
        raise LatticeError(f"site illisible: {text!r}")
    try:
        return site(*(int(p) for p in parts))
    except ValueError as e:
        raise LatticeError(f"site illisible: {text!r}") from e


def default_coupling_table() -> Dict[Offset, Fraction]:
    """Table plus-proches voisins: J = 1/6 si |k-l| = 1"""
    return {d: Fraction(1, 6) for d in UNIT_OFFSETS}


def validate_coupling_table(table: Mapping[Offset, Fraction]) -> Dict[Offset, Fraction]:
    """Vérifie une table de couplage ferromagnétique symétrique"""
    clean: Dict[Offset, Fraction] = {}
    for offset, value in table.items():
        offset = tuple(int(c) for c in offset)
        if len(offset) != 3:
            raise LatticeError(f"décalage non tridimensionnel: {offset}")
        if offset == (0, 0, 0):
            raise LatticeError("J_kk doit être nul")
        value = Fraction(value)
        if value < 0:
            raise LatticeError(f"couplage négatif pour {offset}")
        if value > 0:
            clean[offset] = value
    for offset, value in clean.items():
        mirror = tuple(-c for c in offset)
        if clean.get(mirror) != value:
            raise LatticeError(f"table non symétrique: {offset} sans miroir égal")
    if not clean:
        raise LatticeError("table de couplage vide")
    return clean


@dataclass(frozen=True)
class SiteOrder:
    """Application injective σ: Site -> entier"""
    rank: Mapping[Site, int]

    def sigma(self, s: Site) -> int:
        try:
            return self.rank[s]
        except KeyError:
            raise LatticeError(f"site {s!r} absent de l'ordre") from None

    def __len__(self) -> int:
        return len(self.rank)


class Lattice:
    """Réseau fini avec couplages J symétriques exacts

    Les sites sont stockés dans l'ordre σ (lexicographique, fantôme en dernier).
    Sous bord libre, les sites de ∂L existent mais n'ont aucune liaison.
    """

    def __init__(self, L: int, bc: BoundaryCondition,
                 coupling_table: Optional[Mapping[Offset, Fraction]] = None,
                 name: Optional[str] = None):
        bc = BoundaryCondition(bc)
        if bc == BoundaryCondition.GRAPH:
            raise LatticeError("utiliser Lattice.from_bonds pour un graphe générique")
        if int(L) < 1:
            raise LatticeError(f"rayon de boîte invalide: L={L}")
        self.L = int(L)
        self.bc = bc
        self.coupling_table = validate_coupling_table(coupling_table or default_coupling_table())
        self.name = name or f"box L={self.L} {bc.value}"

        sites, couplings = self._build_box()
        self._init_tables(sites, couplings)

    @classmethod
    def from_bonds(cls, bonds: Iterable[Tuple[Site, Site, Fraction]], name: str = "graph") -> "Lattice":
        """Petit graphe générique via la règle de couplage enfichable"""
        lat = cls.__new__(cls)
        lat.bc = BoundaryCondition.GRAPH
        lat.coupling_table = {}
        lat.name = name
        couplings: Dict[Tuple[Site, Site], Fraction] = {}
        sites = set()
        for a, b, j in bonds:
            j = Fraction(j)
            if a == b:
                raise LatticeError(f"boucle sur {a!r}: J_kk doit être nul")
            if j <= 0:
                raise LatticeError(f"couplage non positif sur {a!r}-{b!r}")
            couplings[(a, b)] = couplings.get((a, b), Fraction(0)) + j
            couplings[(b, a)] = couplings.get((b, a), Fraction(0)) + j
            sites.update((a, b))
        if not sites:
            raise LatticeError("graphe vide")
        interior = [s for s in sites if not s.ghost]
        lat.L = max((s.radius for s in interior), default=0)
        lat._init_tables(sorted(sites), couplings)
        return lat

    def _build_box(self) -> Tuple[List[Site], Dict[Tuple[Site, Site], Fraction]]:
        L = self.L
        couplings: Dict[Tuple[Site, Site], Fraction] = {}

        def add(a: Site, b: Site, j: Fraction):
            couplings[(a, b)] = couplings.get((a, b), Fraction(0)) + j

        if self.bc == BoundaryCondition.PERIODIC:
            size = 2 * L
            coords = range(-L + 1, L + 1)
            sites = [site(a, b, c) for a in coords for b in coords for c in coords]

            def wrap(s: Site) -> Site:
                return Site(False, tuple(((c + L - 1) % size) - L + 1 for c in s.coords))

            for k in sites:
                for offset, j in self.coupling_table.items():
                    l = wrap(k.shifted(offset))
                    if l != k:
                        add(k, l, j)
            return sites, couplings

        coords = range(-L, L + 1)
        box = [site(a, b, c) for a in coords for b in coords for c in coords]
        interior = [s for s in box if s.radius < L]
        interior_set = set(interior)
        for k in interior:
            for offset, j in self.coupling_table.items():
                l = k.shifted(offset)
                if l in interior_set:
                    add(k, l, j)
                elif self.bc == BoundaryCondition.PLUS and l.radius == L:
                    add(k, GHOST, j)
                    add(GHOST, k, j)

        if self.bc == BoundaryCondition.PLUS:
            return interior + [GHOST], couplings
        return box, couplings

    def _init_tables(self, sites: Sequence[Site], couplings: Dict[Tuple[Site, Site], Fraction]):
        self.sites: Tuple[Site, ...] = tuple(sorted(sites))
        self._site_set = frozenset(self.sites)
        self._coupling = {k: v for k, v in couplings.items() if v > 0}
        adjacency: Dict[Site, List[Site]] = {s: [] for s in self.sites}
        for a, b in self._coupling:
            adjacency[a].append(b)
        self._adjacency = {s: tuple(sorted(nbrs)) for s, nbrs in adjacency.items()}
        self.bonds: Tuple[Tuple[Site, Site], ...] = tuple(
            sorted((a, b) for a, b in self._coupling if a < b)
        )
        self.has_ghost = GHOST in self._site_set
        logger.debug("réseau %s: %d sites, %d liaisons", self.name, len(self.sites), len(self.bonds))

    # ------------------------------------------------------------------ requêtes

    def __contains__(self, s: Site) -> bool:
        return s in self._site_set

    def __repr__(self) -> str:
        return f"Lattice({self.name})"

    def check_site(self, s: Site):
        if s not in self._site_set:
            raise LatticeError(f"site {s!r} hors du réseau {self.name}")

    def neighbors(self, s: Site) -> Tuple[Site, ...]:
        """Sites t avec J_{s,t} > 0, ordre déterministe"""
        self.check_site(s)
        return self._adjacency[s]

    def coupling(self, a: Site, b: Site) -> Fraction:
        """J_{a,b} exact, symétrique, nul hors voisinage"""
        self.check_site(a)
        self.check_site(b)
        return self._coupling.get((a, b), Fraction(0))

    def bond_coupling(self, bond: Tuple[Site, Site]) -> Fraction:
        return self._coupling.get(bond, Fraction(0))

    def site_order(self) -> SiteOrder:
        """Ordre σ lexicographique, fantôme de rang maximal"""
        return SiteOrder({s: i for i, s in enumerate(self.sites)})

    @property
    def spin_sites(self) -> Tuple[Site, ...]:
        """Sites dont l'angle est intégré (bord libre: intérieur seulement)"""
        if self.bc == BoundaryCondition.FREE:
            return tuple(s for s in self.sites if s.radius < self.L)
        return self.sites

    @property
    def interior_sites(self) -> Tuple[Site, ...]:
        return tuple(s for s in self.spin_sites if not s.ghost)

    def bond_count(self) -> int:
        return len(self.bonds)

    def free_counterpart(self) -> "Lattice":
        """Même intérieur, sans fantôme (réseau du graphe n_0)"""
        if self.bc == BoundaryCondition.PLUS:
            return Lattice(self.L, BoundaryCondition.FREE, self.coupling_table)
        if self.bc == BoundaryCondition.GRAPH and self.has_ghost:
            return Lattice.from_bonds(
                ((a, b, self._coupling[(a, b)]) for a, b in self.bonds if not (a.ghost or b.ghost)),
                name=f"{self.name} sans fantôme",
            )
        return self

    def interior_couplings(self) -> Dict[Tuple[Site, Site], Fraction]:
        return {bond: self._coupling[bond] for bond in self.bonds if not (bond[0].ghost or bond[1].ghost)}

    def to_networkx(self, include_ghost: bool = True) -> nx.Graph:
        """Graphe non orienté des liaisons, poids = J exact"""
        graph = nx.Graph()
        for s in self.sites:
            if include_ghost or not s.ghost:
                graph.add_node(s)
        for a, b in self.bonds:
            if include_ghost or not (a.ghost or b.ghost):
                graph.add_edge(a, b, J=self._coupling[(a, b)])
        return graph


def neighbors(lat: Lattice, s: Site) -> Tuple[Site, ...]:
    return lat.neighbors(s)


def coupling(lat: Lattice, a: Site, b: Site) -> Fraction:
    return lat.coupling(a, b)


def site_order(lat: Lattice) -> SiteOrder:
    return lat.site_order()


# ---------------------------------------------------------------- topologies

def dumbbell(J: Fraction = Fraction(1, 6)) -> Lattice:
    """Deux sites, une liaison"""
    return Lattice.from_bonds([(site(0), site(1), J)], name="dumbbell")


def path_graph(n: int = 3, J: Fraction = Fraction(1, 6)) -> Lattice:
    if n < 2:
        raise LatticeError("un chemin demande au moins 2 sites")
    return Lattice.from_bonds(((site(i), site(i + 1), J) for i in range(n - 1)), name=f"path{n}")


def cycle_graph(n: int = 4, J: Fraction = Fraction(1, 6)) -> Lattice:
    if n < 3:
        raise LatticeError("un cycle demande au moins 3 sites")
    return Lattice.from_bonds(((site(i), site((i + 1) % n), J) for i in range(n)), name=f"cycle{n}")


def square_with_ghost(J: Fraction = Fraction(1, 6)) -> Lattice:
    """Plaquette (0,0)-(1,0)-(1,1)-(0,1) reliée au fantôme par chaque sommet"""
    corners = [site(0, 0), site(1, 0), site(1, 1), site(0, 1)]
    bonds = [(corners[i], corners[(i + 1) % 4], J) for i in range(4)]
    bonds += [(c, GHOST, J) for c in corners]
    return Lattice.from_bonds(bonds, name="square+ghost")


def ladder(length: int = 4, J: Fraction = Fraction(1, 6), ghost: bool = True) -> Lattice:
    """Échelle (i, j) avec 0 <= i < length, j in {0,1}; fantôme sur le dernier barreau"""
    if length < 2:
        raise LatticeError("une échelle demande au moins 2 barreaux")
    bonds = []
    for i in range(length):
        bonds.append((site(i, 0), site(i, 1), J))
        if i + 1 < length:
            bonds.append((site(i, 0), site(i + 1, 0), J))
            bonds.append((site(i, 1), site(i + 1, 1), J))
    if ghost:
        bonds.append((site(length - 1, 0), GHOST, J))
        bonds.append((site(length - 1, 1), GHOST, J))
    return Lattice.from_bonds(bonds, name=f"ladder{length}" + ("+ghost" if ghost else ""))


FIGURE_SITES = {
    "x": site(0, 0), "a1": site(1, 0), "a2": site(2, 0), "y": site(3, 0),
    "b1": site(1, -1), "b2": site(1, 1), "b3": site(2, 1), "b4": site(2, -1),
}


def figure_graph(J: Fraction = Fraction(1, 6)) -> Lattice:
    """Graphe portant le chemin x→a1→a2→y et la boucle b1→a1→b2→b3→a2→b4→b1"""
    f = FIGURE_SITES
    pairs = [("x", "a1"), ("a1", "a2"), ("a2", "y"), ("b1", "a1"), ("a1", "b2"),
             ("b2", "b3"), ("b3", "a2"), ("a2", "b4"), ("b4", "b1")]
    return Lattice.from_bonds(((f[a], f[b], J) for a, b in pairs), name="figure")


# ---------------------------------------------------------------- configuration

@dataclass
class LatticeSpec:
    """Réseau lu depuis un fichier 'clé = valeur' avec sites x, y optionnels"""
    lattice: Lattice
    x: Optional[Site] = None
    y: Optional[Site] = None
    raw: Dict[str, str] = field(default_factory=dict)


_KNOWN_KEYS = {"L", "bc", "topology", "sites", "J", "coupling", "x", "y"}


def parse_lattice_config(text: str) -> LatticeSpec:
    """Analyse le format ligne à ligne `clé = valeur`"""
    raw: Dict[str, str] = {}
    table: Dict[Offset, Fraction] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise LatticeError(f"ligne {lineno}: '=' attendu")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise LatticeError(f"ligne {lineno}: clé inconnue {key!r}")
        if key == "coupling":
            fields_ = value.split()
            if len(fields_) != 4:
                raise LatticeError(f"ligne {lineno}: 'coupling = dx dy dz p/q' attendu")
            try:
                offset = tuple(int(c) for c in fields_[:3])
                table[offset] = Fraction(fields_[3])
            except ValueError as e:
                raise LatticeError(f"ligne {lineno}: {e}") from e
            continue
        raw[key] = value

    try:
        J = Fraction(raw.get("J", "1/6"))
    except ValueError as e:
        raise LatticeError(f"J illisible: {raw['J']!r}") from e
    topology = raw.get("topology", "box")
    n_sites = int(raw.get("sites", "0") or 0)

    if topology == "box":
        if "L" not in raw:
            raise LatticeError("clé 'L' requise pour une boîte")
        try:
            L = int(raw["L"])
        except ValueError as e:
            raise LatticeError(f"L illisible: {raw['L']!r}") from e
        try:
            bc = BoundaryCondition(raw.get("bc", "free"))
        except ValueError as e:
            raise LatticeError(f"condition de bord inconnue: {raw.get('bc')!r}") from e
        lattice = Lattice(L, bc, table or None)
    elif topology == "dumbbell":
        lattice = dumbbell(J)
    elif topology == "path":
        lattice = path_graph(n_sites or 3, J)
    elif topology == "cycle":
        lattice = cycle_graph(n_sites or 4, J)
    elif topology == "square_ghost":
        lattice = square_with_ghost(J)
    elif topology == "ladder":
        lattice = ladder(n_sites or 4, J)
    elif topology == "figure":
        lattice = figure_graph(J)
    else:
        raise LatticeError(f"topologie inconnue: {topology!r}")

    spec = LatticeSpec(lattice=lattice, raw=raw)
    for key in ("x", "y"):
        if key in raw:
            s = parse_site(raw[key])
            lattice.check_site(s)
            setattr(spec, key, s)
    return spec


def load_lattice_config(path: str) -> LatticeSpec:
    """Lit un fichier de configuration de réseau"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise LatticeError(f"configuration illisible: {path}: {e}") from e
    return parse_lattice_config(text)
