"""
Suites combinatoires: commutations non appariées (switch-verify) et
vérifications de l'appariement, des registres et de la commutation chirurgicale
"""

import logging
from typing import Any, Dict, Optional, Sequence

from models.errors import ConfigError
from models.flux_model import as_fraction
from models.lattice_model import Lattice, LatticeSpec, Site, ladder, site, square_with_ghost
from models.ledger_engine import (PairedEnsemble, WeightLedger, check_region, pairing_total_identity,
                                  verify_decompose, verify_figure, verify_paired_switch, verify_psi,
                                  verify_surgical_involution, verify_surgical_weight_equality)
from models.switching_engine import adverse_example, verify_directed_switch, verify_undirected_bijection

from .suite_result import SuiteResult, guarded

logger = logging.getLogger(__name__)

SWITCH_MODES = ("undirected", "directed", "adverse")
PAIRING_CHECKS = ("psi", "decompose", "switch", "surgical", "ledger", "upsilon")


class CombinatoricsController:
    """Balayages exhaustifs exacts sur petits graphes"""

    def __init__(self, config: Dict[str, Any]):
        self.config = config

    # 1. commutations non appariées

    def switch_verify(self, mode: str, max_edges: int, beta,
                      spec: Optional[LatticeSpec] = None) -> SuiteResult:
        result = SuiteResult("switch-verify", {"mode": mode, "max_edges": max_edges})
        with guarded(result):
            if mode not in SWITCH_MODES:
                raise ConfigError(f"mode inconnu: {mode!r}")
            lat = spec.lattice if spec else square_with_ghost()
            x = spec.x if spec and spec.x else site(0, 0)
            y = spec.y if spec and spec.y else site(1, 1)
            result.parameters.update(lattice=lat.name, x=x, y=y)
            logger.info("switch-verify %s sur %s", mode, lat.name)
            if mode == "undirected":
                self._undirected(result, lat, x, y, max_edges, beta)
            elif mode == "directed":
                self._directed(result, lat, x, y, max_edges)
            else:
                self._adverse(result, lat, x, y)
        return result

    def _undirected(self, result: SuiteResult, lat: Lattice, x: Site, y: Site, max_edges: int, beta):
        report = verify_undirected_bijection(lat, x, y, max_edges, as_fraction(beta))
        result.values.update(
            lambda_count=report.lambda_count, gamma_count=report.gamma_count,
            blocks=[{"path": list(b.path), "lambda": b.lambda_size, "gamma": b.gamma_size,
                     "bijective": b.bijective} for b in report.blocks])
        result.check("blocks bijective", all(b.bijective for b in report.blocks),
                     counterexamples=report.counterexamples)
        result.check("images disjoint", report.images_disjoint)
        result.check("|Λ| = |Γ|", report.lambda_count == report.gamma_count)
        result.check("weight multisets", report.weights_equal)

    def _directed(self, result: SuiteResult, lat: Lattice, x: Site, y: Site, max_edges: int):
        report = verify_directed_switch(lat, x, y, max_edges)
        result.values.update(checked=report.checked, ambiguous=report.ambiguous,
                             union_changed=report.union_changed)
        result.check("directed switch", report.passed, counterexamples=report.counterexamples)

    def _adverse(self, result: SuiteResult, lat: Lattice, x: Site, y: Site):
        witness = adverse_example(lat, x, y)
        result.values["witness"] = {"G": [repr(witness.G.first), repr(witness.G.second)],
                                    "F": [repr(witness.F.first), repr(witness.F.second)],
                                    "P": list(witness.P.edges), "Q": list(witness.Q.edges),
                                    "image": [repr(witness.image.first), repr(witness.image.second)]}
        result.check("adverse witness", witness.verify())

    # 2. appariements

    def pairing_verify(self, region: int, max_edges: int, checks: Sequence[str], beta, seed: int,
                       samples: int, spec: Optional[LatticeSpec] = None) -> SuiteResult:
        result = SuiteResult("pairing-verify", {"region": region, "max_edges": max_edges,
                                                "checks": list(checks)})
        with guarded(result):
            unknown = [c for c in checks if c not in PAIRING_CHECKS]
            if unknown:
                raise ConfigError(f"vérifications inconnues: {unknown}")
            if spec:
                lat = spec.lattice
                first, second = [s for s in lat.spin_sites if not s.ghost][:2]
                x, y = spec.x or first, spec.y or second
                switch_lat, switch_x, switch_y = lat, x, y
            else:
                lat, x, y = ladder(4), site(0, 0), site(0, 1)
                switch_lat, switch_x, switch_y = square_with_ghost(), site(0, 0), site(1, 1)
            exact_beta = as_fraction(beta)
            result.parameters.update(lattice=lat.name, x=x, y=y, beta=exact_beta, switch_lattice=switch_lat.name)
            regions = (region, region + 1)
            ledgers: Dict[int, WeightLedger] = {}
            ensemble: Optional[PairedEnsemble] = None

            def ledger(n: int) -> WeightLedger:
                nonlocal ensemble
                if n not in ledgers:
                    check_region(lat, x, y, n)
                    if ensemble is None:
                        ensemble = PairedEnsemble.build(lat, x, y, exact_beta, max_edges,
                                                        self.config["pairing_guard"])
                    ledgers[n] = WeightLedger.from_ensemble(ensemble, n)
                return ledgers[n]

            for name in checks:
                logger.info("pairing-verify: %s", name)
                if name == "psi":
                    result.add_report(verify_psi(4))
                elif name == "decompose":
                    result.add_report(verify_decompose(lat, samples, seed, x=x, y=y))
                elif name == "switch":
                    result.add_report(verify_paired_switch(switch_lat, switch_x, switch_y, exact_beta, max_edges))
                elif name == "ledger":
                    coarse, fine = ledger(regions[0]), ledger(regions[1])
                    result.add_report(coarse.check())
                    result.add_report(fine.check())
                    result.add_report(coarse.consistency(fine))
                    result.add_report(pairing_total_identity(lat, x, y, exact_beta, max_edges, ensemble))
                elif name == "surgical":
                    current = ledger(region)
                    result.add_report(verify_surgical_weight_equality(lat, x, y, exact_beta, region,
                                                                      max_edges, current))
                    result.add_report(verify_surgical_involution(current, x, y))
                elif name == "upsilon":
                    figure = verify_figure()
                    result.check("figure instance", figure.passed, reproduced=figure.reproduced,
                                 upsilon_before=figure.upsilon_before, upsilon_after=figure.upsilon_after,
                                 bijective=figure.bijective)
        return result
