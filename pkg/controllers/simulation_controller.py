"""
Suites numériques: Monte Carlo de spins, sonde de boucles, fonction de Green
et borne infrarouge
"""

import json
import logging
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from models.errors import ConfigError
from models.green_function_engine import (WATSON_G0, GreenFunction, GreenSpec, bound_report,
                                          green_table, j_hat)
from models.lattice_model import BoundaryCondition, GHOST, Lattice, LatticeSpec, Site, site
from models.monte_carlo_engine import Estimate, Judge, MonteCarloEngine, SeedSweep, oracle_judge, seed_sweep
from models.oracle_engine import QuadratureSpec, quadrature_two_point
from models.worm_engine import loop_structure_probe, worm_sample

from .suite_result import SuiteResult, guarded

logger = logging.getLogger(__name__)

ESTIMATORS = ("twopoint", "mn", "mag", "inequalities")


def _estimate_dict(est: Estimate) -> Dict[str, Any]:
    return {"mean": est.mean, "stderr": est.stderr, "samples": est.samples, "seed": est.seed}


class SimulationController:
    """Chaînes de Markov et quadratures; chaque suite reçoit une graine explicite"""

    def __init__(self, config: Dict[str, Any]):
        self.config = config

    def engine(self, sweeps: int, workers: int) -> MonteCarloEngine:
        return MonteCarloEngine(sweeps=sweeps, burn_in=self.config["burn_in"],
                                batches=self.config["batches"], chains=self.config["chains"],
                                workers=workers)

    # 1. Monte Carlo de spins

    def mc(self, spec: LatticeSpec, beta: float, sweeps: int, seed: int, estimator: str,
           workers: int, n: int = 1, two_point: Optional[Sequence[Site]] = None,
           repeats: Optional[int] = None) -> SuiteResult:
        lat = spec.lattice
        result = SuiteResult("mc", {"lattice": lat.name, "beta": beta, "sweeps": sweeps, "seed": seed,
                                    "estimator": estimator})
        with guarded(result):
            if estimator not in ESTIMATORS:
                raise ConfigError(f"estimateur inconnu: {estimator!r}")
            engine = self.engine(sweeps, workers)
            logger.info("mc %s sur %s, β=%s", estimator, lat.name, beta)
            if estimator == "inequalities":
                self._inequalities(result, engine, spec, seed)
                return result
            exact = None
            if estimator == "twopoint":
                x, y = two_point or (spec.x or site(0, 0, 0), spec.y or site(1, 0, 0))
                result.parameters.update(x=x, y=y)

                def run(s: int) -> Estimate:
                    return engine.estimate_two_point(lat, beta, x, y, s)
                exact = self._oracle(lat, beta, x, y)
            elif estimator == "mn":
                result.parameters["n"] = n

                def run(s: int) -> Estimate:
                    return engine.estimate_Mn(lat, beta, n, s)
                if beta == 0:
                    exact = 1.0 / (2 * n + 1) ** 3
            else:
                x = spec.x or site(0, 0, 0)
                result.parameters["x"] = x

                def run(s: int) -> Estimate:
                    return engine.estimate_mag(lat, beta, s, x)
                exact = self._oracle(lat, beta, x, GHOST)
            est = run(seed)
            result.values["estimate"] = _estimate_dict(est)
            if exact is not None:
                result.values["oracle"] = exact
                self._repeat(result, run, oracle_judge(exact), seed, repeats)
        return result

    def _oracle(self, lat: Lattice, beta: float, x: Site, y: Site) -> Optional[float]:
        if len(lat.spin_sites) > self.config["oracle_max_sites"]:
            return None
        return quadrature_two_point(lat, QuadratureSpec(beta, self.config["oracle_points"]), x, y)

    def _repeat(self, result: SuiteResult, run: Callable[[int], Estimate], judge: Judge, seed: int,
                repeats: Optional[int]) -> SeedSweep:
        """Même mesure sur des graines dérivées; échec au-delà des dépassements tolérés"""
        repeats = repeats or self.config["seed_repeats"]
        sweep = seed_sweep(run, judge, seed, repeats, self.config["seed_exceedances"])
        result.parameters.update(repeats=repeats, allowed=sweep.allowed)
        result.values.update(exceedances=sweep.exceedances, per_seed=sweep.table)
        result.table = sweep.table
        result.check(f"3σ sur {repeats} graines", sweep.passed, exceedances=sweep.exceedances,
                     allowed=sweep.allowed)
        return sweep

    def _inequalities(self, result: SuiteResult, engine: MonteCarloEngine, spec: LatticeSpec, seed: int):
        sizes = tuple(self.config["inequality_sizes"])
        betas = tuple(self.config["inequality_betas"])
        x = spec.x or site(-1, 0, 0)
        y = spec.y or site(1, 0, 0)
        result.parameters.update(sizes=list(sizes), betas=list(betas), x=x, y=y)
        report = engine.inequality_suite(sizes, betas, x=x, y=y, seed=seed,
                                         coupling_table=spec.lattice.coupling_table
                                         if spec.lattice.bc != BoundaryCondition.GRAPH else None)
        for c in report.checks:
            result.check(c.name, c.passed, lower=c.lower, upper=c.upper, stderr=c.stderr, margin=c.margin)

    # 2. sonde de boucles

    def probe(self, beta: float, steps: int, cap: int, seed: int, L: int, every: int,
              method: str = "pairing") -> SuiteResult:
        result = SuiteResult("probe", {"beta": beta, "steps": steps, "cap": cap, "seed": seed, "L": L,
                                       "every": every, "method": method})
        with guarded(result):
            if method not in ("pairing", "euler"):
                raise ConfigError(f"méthode inconnue: {method!r}")
            lat = Lattice(L, BoundaryCondition.FREE)
            logger.info("sonde de boucles sur %s, %d pas", lat.name, steps)
            states = worm_sample(lat, beta, steps, seed, every)
            report = loop_structure_probe(states, cap, seed, method)
            result.values.update(states=report.states, total_edges=report.total_edges,
                                 median_length=report.median_length,
                                 fraction_at_cap=report.fraction_at_cap)
            result.table = report.histogram
            result.values["histogram"] = report.histogram
            result.check("balanced", report.unbalanced == 0, unbalanced=report.unbalanced)
            result.check("fraction nondecreasing", report.monotone)
            result.check("terminal fraction = 1", report.terminal_one)
            result.artifact = report
        return result

    # 3. fonction de Green

    def green_spec(self, grid: int) -> GreenSpec:
        return GreenSpec(grid=grid, levels=self.config["green_levels"],
                         tolerance=self.config["tolerances"]["scheme"]).validate()

    def infrared(self, grid: int, table_r: int) -> SuiteResult:
        result = SuiteResult("infrared", {"grid": grid, "table_r": table_r,
                                          "levels": self.config["green_levels"]})
        with guarded(result):
            spec = self.green_spec(grid)
            table = green_table(spec, r_max=table_r, n_max=4)
            result.values.update(G00=table.G00, scheme_delta=table.scheme_delta,
                                 laplacian_residual=table.laplacian_residual,
                                 box_averages=table.box_averages)
            result.table = table.axis
            result.artifact = table
            tol = self.config["tolerances"]["scheme"]
            result.check("schemes agree", table.scheme_delta <= tol, delta=table.scheme_delta)
            result.check("G00 vs Watson", abs(table.G00 - WATSON_G0) <= 1e-3, reference=WATSON_G0)
            result.check("axis decreasing", table.axis_decreasing)
            result.check("box averages nonincreasing", table.averages_nonincreasing)
            result.check("lattice equation", abs(table.laplacian_residual) <= tol)
            result.check("1 - Ĵ > 0 off k=0", GreenFunction(spec).positivity_margin() > 0)
            result.check("Ĵ(0) = 1, Ĵ(π,π,π) = -1",
                         j_hat(np.zeros(3)) == 1.0 and j_hat(np.full(3, np.pi)) == -1.0)
        return result

    # 4. borne infrarouge

    def infrared_bound(self, beta: float, n: int, grid: int, seed: Optional[int], workers: int,
                       mc_path: Optional[str] = None, L: int = 4, sweeps: Optional[int] = None,
                       repeats: Optional[int] = None) -> SuiteResult:
        """LHS depuis un rapport mc (--mc, une seule graine) ou des chaînes L périodiques répétées ici"""
        result = SuiteResult("infrared-bound", {"beta": beta, "n": n, "grid": grid})
        with guarded(result):
            spec = self.green_spec(grid)

            def judge(est: Estimate) -> Tuple[float, float, bool]:
                report = bound_report(beta, n, est, spec)
                return report.rhs, report.margin, report.passed

            if mc_path:
                est = self._load_estimate(mc_path)
                result.parameters["mc"] = mc_path
            else:
                if seed is None:
                    raise ConfigError("graine obligatoire pour la chaîne Monte Carlo")
                lat = Lattice(L, BoundaryCondition.PERIODIC)
                result.parameters.update(L=L, seed=seed, lattice=lat.name)
                engine = self.engine(sweeps or self.config["sweeps"], workers)

                def run(s: int) -> Estimate:
                    return engine.estimate_Mn(lat, beta, n, s)
                est = run(seed)
                self._repeat(result, run, judge, seed, repeats)
            report = bound_report(beta, n, est, spec)
            result.values.update(lhs=report.lhs, lhs_stderr=report.lhs_stderr, rhs=report.rhs,
                                 margin=report.margin, samples=report.samples)
            if mc_path:
                result.check("infrared bound 3σ", report.passed, margin=report.margin)
        return result

    @staticmethod
    def _load_estimate(path: str) -> Estimate:
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
            est = data["estimate"]
            if data.get("parameters", {}).get("estimator") != "mn":
                raise ConfigError(f"{path}: rapport mc attendu avec --estimator mn")
            return Estimate(float(est["mean"]), float(est["stderr"]), int(est["samples"]), int(est["seed"]))
        except (OSError, ValueError, KeyError, TypeError) as e:
            raise ConfigError(f"rapport mc illisible: {path}: {e}") from e
