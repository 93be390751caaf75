import json
import logging
import os
from copy import deepcopy
from typing import Any, Dict, List, Optional

from models.errors import ConfigError
from models.lattice_model import BoundaryCondition, Lattice, LatticeSpec, load_lattice_config, parse_site
from .combinatorics_controller import PAIRING_CHECKS, CombinatoricsController
from .series_controller import SeriesController
from .simulation_controller import SimulationController
from .suite_result import EXIT_OK, EXIT_USAGE, SuiteResult, guarded

logger = logging.getLogger(__name__)

DEFAULT_CONFIG: Dict[str, Any] = {
    "log_level": "WARNING",
    "workers": None,
    "seed": None,
    "beta": 0.3,
    "oracle_points": 64,
    "oracle_max_sites": 8,
    "max_edges": 6,
    "series_max_edges": 16,
    "region": 2,
    "grid": 64,
    "green_levels": 3,
    "sweeps": 4000,
    "burn_in": 1000,
    "batches": 100,
    "chains": 4,
    "worm_steps": 100000,
    "worm_every": 100,
    "probe_L": 3,
    "probe_cap": 8,
    "table_r": 6,
    "decompose_samples": 10000,
    "bound_L": 4,
    "bound_beta": 0.6,
    "seed_repeats": 20,
    "seed_exceedances": 2,
    "inequality_sizes": [2, 3],
    "inequality_betas": [0.2, 0.4, 0.6],
    "tolerances": {"series": 1e-8, "bessel": 1e-10, "scheme": 1e-4},
    "pairing_guard": 10 ** 6,
    "n": 1,
}

STOCHASTIC = ("mc", "probe", "report")


class MainController:
    """Contrôleur principal: configuration, validation et répartition vers les suites"""

    def __init__(self, config_path: str = "config.json"):
        self.config_path = config_path
        self.config = self._load_config()
        self.series_controller = SeriesController(self.config)
        self.combinatorics_controller = CombinatoricsController(self.config)
        self.simulation_controller = SimulationController(self.config)

    def _load_config(self) -> Dict:
        """Charge la configuration de l'application"""
        config = deepcopy(DEFAULT_CONFIG)
        if os.path.exists(self.config_path):
            try:
                with open(self.config_path, "r", encoding="utf-8") as f:
                    loaded = json.load(f)
                tolerances = {**config["tolerances"], **loaded.pop("tolerances", {})}
                config.update(loaded)
                config["tolerances"] = tolerances
            except (OSError, ValueError) as e:
                logger.error("Erreur chargement config: %s", e)
        return config

    # 1. validation

    def resolve(self, options: Dict[str, Any]) -> Dict[str, Any]:
        """Options CLI par-dessus la configuration, validées avant tout calcul"""
        params = {k: v for k, v in self.config.items()}
        params.update({k: v for k, v in options.items() if v is not None})
        if not params.get("workers"):
            params["workers"] = os.cpu_count() or 1
        command = options.get("command")
        if command in STOCHASTIC and params.get("seed") is None:
            raise ConfigError(f"--seed obligatoire pour '{command}'")
        if command == "infrared-bound" and not options.get("mc") and params.get("seed") is None:
            raise ConfigError("--seed obligatoire sans --mc")
        self._validate(params)
        return params

    @staticmethod
    def _validate(p: Dict[str, Any]):
        def require(cond: bool, message: str):
            if not cond:
                raise ConfigError(message)

        require(int(p["workers"]) >= 1, "workers >= 1")
        require(float(p["beta"]) >= 0, "beta >= 0")
        require(int(p["oracle_points"]) >= 8, "points >= 8")
        require(int(p["max_edges"]) >= 0 and int(p["series_max_edges"]) >= 0, "max_edges >= 0")
        require(float(p["bound_beta"]) > 0, "beta > 0 pour la borne infrarouge")
        require(int(p["n"]) >= 1, "n >= 1")
        require(int(p["region"]) >= 1, "region >= 1")
        require(int(p["grid"]) >= 32 and int(p["grid"]) % 2 == 0, "grid pair et >= 32")
        require(int(p["sweeps"]) >= 1000, "sweeps >= 1000")
        require(int(p["batches"]) >= 100, "batches >= 100")
        require(int(p["worm_steps"]) >= 1 and int(p["worm_every"]) >= 1, "steps et every >= 1")
        require(int(p["probe_cap"]) >= 1, "cap >= 1")
        require(int(p["table_r"]) >= 1, "table_r >= 1")
        require(int(p["seed_repeats"]) >= 1, "repeats >= 1")
        require(int(p["seed_exceedances"]) >= 0, "dépassements tolérés >= 0")
        checks = p.get("checks")
        if checks:
            unknown = [c for c in checks if c not in PAIRING_CHECKS]
            require(not unknown, f"vérifications inconnues: {unknown}")

    @staticmethod
    def lattice_spec(path: Optional[str], required: bool = True) -> Optional[LatticeSpec]:
        if path is None:
            if required:
                raise ConfigError("--config <fichier> requis")
            return None
        return load_lattice_config(path)

    # 2. répartition

    def run(self, options: Dict[str, Any]) -> List[SuiteResult]:
        command = options["command"]
        result = SuiteResult(command)
        with guarded(result):
            params = self.resolve(options)
            logger.info("suite %s", command)
            return self._dispatch(command, params)
        return [result]

    def _dispatch(self, command: str, p: Dict[str, Any]) -> List[SuiteResult]:
        series, combi, sim = self.series_controller, self.combinatorics_controller, self.simulation_controller
        two_point = [parse_site(s) for s in p["two_point"]] if p.get("two_point") else None
        if command == "oracle":
            spec = self.lattice_spec(p.get("config"))
            return [series.oracle(spec, float(p["beta"]), int(p["oracle_points"]),
                                  int(p["oracle_max_sites"]))]
        if command == "series":
            spec = self.lattice_spec(p.get("config"))
            return [series.series(spec, p["beta"], int(p["series_max_edges"]),
                                  int(p["oracle_points"]), two_point)]
        if command == "switch-verify":
            spec = self.lattice_spec(p.get("config"), required=False)
            return [combi.switch_verify(p.get("mode") or "undirected", int(p["max_edges"]), p["beta"], spec)]
        if command == "pairing-verify":
            spec = self.lattice_spec(p.get("config"), required=False)
            checks = p.get("checks") or list(PAIRING_CHECKS)
            return [combi.pairing_verify(int(p["region"]), int(p["max_edges"]), checks, p["beta"],
                                         int(p["seed"] or 0), int(p["decompose_samples"]), spec)]
        if command == "infrared":
            return [sim.infrared(int(p["grid"]), int(p["table_r"]))]
        if command == "infrared-bound":
            return [sim.infrared_bound(float(p["bound_beta"]), int(p["n"]), int(p["grid"]), p.get("seed"),
                                       int(p["workers"]), p.get("mc"), int(p["bound_L"]),
                                       repeats=int(p["seed_repeats"]))]
        if command == "mc":
            spec = self.lattice_spec(p.get("config"))
            return [sim.mc(spec, float(p["beta"]), int(p["sweeps"]), int(p["seed"]),
                           p.get("estimator") or "twopoint", int(p["workers"]), int(p["n"]),
                           two_point, int(p["seed_repeats"]))]
        if command == "probe":
            return [sim.probe(float(p["beta"]), int(p["worm_steps"]), int(p["probe_cap"]), int(p["seed"]),
                              int(p["probe_L"]), int(p["worm_every"]), p.get("method") or "pairing")]
        if command == "report":
            return self.report_all(p)
        raise ConfigError(f"commande inconnue: {command!r}")

    def report_all(self, p: Dict[str, Any]) -> List[SuiteResult]:
        """Toutes les suites avec leurs paramètres par défaut et la graine donnée"""
        series, combi, sim = self.series_controller, self.combinatorics_controller, self.simulation_controller
        seed, workers = int(p["seed"]), int(p["workers"])
        results = series.triangle(max_edges=int(p["series_max_edges"]), points=int(p["oracle_points"]))
        for mode in ("undirected", "directed", "adverse"):
            results.append(combi.switch_verify(mode, int(p["max_edges"]), p["beta"]))
        results.append(combi.pairing_verify(int(p["region"]), int(p["max_edges"]), list(PAIRING_CHECKS),
                                            p["beta"], seed, int(p["decompose_samples"])))
        results.append(sim.infrared(int(p["grid"]), int(p["table_r"])))
        results.append(sim.infrared_bound(float(p["bound_beta"]), 1, int(p["grid"]), seed, workers,
                                          L=int(p["bound_L"]), repeats=int(p["seed_repeats"])))
        results.append(sim.mc(LatticeSpec(Lattice(2, BoundaryCondition.FREE)), float(p["beta"]), int(p["sweeps"]), seed,
                              "inequalities", workers))
        results.append(sim.probe(float(p["beta"]), int(p["worm_steps"]), int(p["probe_cap"]), seed,
                                 int(p["probe_L"]), int(p["worm_every"])))
        return results


def aggregate(results: List[SuiteResult]) -> Dict[str, Any]:
    """Rapport unique; un seul résultat est rendu tel quel"""
    if len(results) == 1:
        return results[0].as_dict()
    status = "pass" if all(r.status == "pass" for r in results) else \
        ("error" if any(r.status == "error" for r in results) else "fail")
    return {"command": "report", "status": status, "suites": [r.as_dict() for r in results]}


def exit_code(results: List[SuiteResult]) -> int:
    codes = [r.code for r in results]
    if EXIT_USAGE in codes:
        return EXIT_USAGE
    return max(codes, default=EXIT_OK)
