"""
Exceptions levées par les moteurs loopflux
Les contrôleurs les transforment en entrées de rapport
"""


class LoopfluxError(Exception):
    """Erreur de base de loopflux"""


class LatticeError(LoopfluxError):
    """Réseau invalide ou site hors de la boîte"""


class CostGuardError(LoopfluxError):
    """Garde de coût dépassée"""

    def __init__(self, guard: str, limit, value=None):
        self.guard = guard
        self.limit = limit
        self.value = value
        detail = f" (valeur {value})" if value is not None else ""
        super().__init__(f"garde '{guard}' dépassée: limite {limit}{detail}")


class BoundaryError(LoopfluxError):
    """Contrainte de bord incohérente (x=y, fantôme, site déséquilibré)"""


class SwitchingError(LoopfluxError):
    """Chemin non contenu dans le graphe ou passant par le fantôme"""


class NotSwitchableError(SwitchingError):
    """Une composante du graphe de commutation touche le fantôme"""


class QuadratureError(LoopfluxError):
    """Quadrature mal spécifiée ou schémas en désaccord"""


class EstimateError(LoopfluxError):
    """Estimation Monte Carlo impossible"""


class ConfigError(LoopfluxError):
    """Paramètre invalide ou fichier de configuration illisible"""
