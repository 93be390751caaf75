#!/usr/bin/env python3
"""
loopflux - vérification des représentations en flux du modèle XY sur réseau
Point d'entrée en ligne de commande (architecture MVC)
"""

import argparse
import logging
import os
import sys
from fractions import Fraction
from typing import List, Optional

# Ajouter le répertoire racine au path Python
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from controllers.combinatorics_controller import PAIRING_CHECKS, SWITCH_MODES
from controllers.main_controller import MainController, aggregate, exit_code
from controllers.simulation_controller import ESTIMATORS
from views.report_view import ReportWriter

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _checks(text: str) -> List[str]:
    names = [c.strip() for c in text.split(",") if c.strip()]
    unknown = [c for c in names if c not in PAIRING_CHECKS]
    if unknown:
        raise argparse.ArgumentTypeError(f"vérifications inconnues: {', '.join(unknown)}")
    return names


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workers", type=int, help="parallélisme maximal (défaut: cœurs disponibles)")
    common.add_argument("--seed", type=int, help="graine (obligatoire pour les suites stochastiques)")
    common.add_argument("--log-level", dest="log_level",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--settings", default="config.json", help="fichier de configuration JSON")
    common.add_argument("--output", help="fichier de sortie (défaut: stdout)")
    common.add_argument("--format", dest="fmt", choices=["json", "csv"], default="json")

    parser = argparse.ArgumentParser(prog="loopflux", description="Suites de vérification loopflux")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oracle", parents=[common], help="Z et corrélations par quadrature")
    p.add_argument("--config", required=True, help="fichier réseau 'clé = valeur'")
    p.add_argument("--beta", type=Fraction)
    p.add_argument("--points", dest="oracle_points", type=int)

    p = sub.add_parser("series", parents=[common], help="série tronquée contre l'oracle")
    p.add_argument("--config", required=True)
    p.add_argument("--beta", type=Fraction)
    p.add_argument("--max-edges", dest="series_max_edges", type=int)
    p.add_argument("--two-point", dest="two_point", nargs=2, metavar=("X", "Y"))

    p = sub.add_parser("switch-verify", parents=[common], help="commutations non appariées")
    p.add_argument("--mode", choices=SWITCH_MODES, default="undirected")
    p.add_argument("--max-edges", dest="max_edges", type=int)
    p.add_argument("--beta", type=Fraction)
    p.add_argument("--config")

    p = sub.add_parser("pairing-verify", parents=[common], help="appariements et registres de poids")
    p.add_argument("--region", type=int)
    p.add_argument("--max-edges", dest="max_edges", type=int)
    p.add_argument("--checks", type=_checks, help=f"liste parmi {','.join(PAIRING_CHECKS)}")
    p.add_argument("--samples", dest="decompose_samples", type=int)
    p.add_argument("--beta", type=Fraction)
    p.add_argument("--config")

    p = sub.add_parser("infrared", parents=[common], help="fonction de Green du réseau cubique")
    p.add_argument("--grid", type=int)
    p.add_argument("--table-r", dest="table_r", type=int)
    p.add_argument("--plot", help="image PNG")

    p = sub.add_parser("infrared-bound", parents=[common], help="borne infrarouge contre Monte Carlo")
    p.add_argument("--beta", dest="bound_beta", type=Fraction)
    p.add_argument("--n", type=int)
    p.add_argument("--mc", help="rapport JSON de 'mc --estimator mn'")
    p.add_argument("--grid", type=int)
    p.add_argument("--L", dest="bound_L", type=int)
    p.add_argument("--repeats", dest="seed_repeats", type=int, help="graines répétées (défaut: 20)")

    p = sub.add_parser("mc", parents=[common], help="Monte Carlo de spins")
    p.add_argument("--config", required=True)
    p.add_argument("--beta", type=Fraction)
    p.add_argument("--sweeps", type=int)
    p.add_argument("--estimator", choices=ESTIMATORS, default="twopoint")
    p.add_argument("--n", type=int)
    p.add_argument("--two-point", dest="two_point", nargs=2, metavar=("X", "Y"))
    p.add_argument("--repeats", dest="seed_repeats", type=int, help="graines répétées (défaut: 20)")

    p = sub.add_parser("probe", parents=[common], help="sonde de la structure en boucles")
    p.add_argument("--beta", type=Fraction)
    p.add_argument("--steps", dest="worm_steps", type=int)
    p.add_argument("--cap", dest="probe_cap", type=int)
    p.add_argument("--every", dest="worm_every", type=int)
    p.add_argument("--L", dest="probe_L", type=int)
    p.add_argument("--method", choices=["pairing", "euler"], default="pairing")
    p.add_argument("--plot", help="image PNG")

    p = sub.add_parser("report", parents=[common], help="toutes les suites")
    p.add_argument("--all", action="store_true", required=True)
    return parser


def _plot(results, path: str):
    from views.charts_view import plot_green_table, plot_probe
    for r in results:
        if r.artifact is None:
            continue
        if r.command == "infrared":
            plot_green_table(r.artifact, path)
        elif r.command == "probe":
            plot_probe(r.artifact, path)


def main(argv: Optional[List[str]] = None) -> int:
    """Point d'entrée principal; renvoie le code de sortie"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    controller = MainController(args.settings)
    logging.basicConfig(level=args.log_level or controller.config["log_level"], format=LOG_FORMAT,
                        stream=sys.stderr)
    options = {k: v for k, v in vars(args).items() if k not in ("settings", "output", "fmt", "plot", "all")}

    results = controller.run(options)
    table = results[0].table if len(results) == 1 else None
    ReportWriter(args.output, args.fmt).write(aggregate(results), table)
    if getattr(args, "plot", None):
        _plot(results, args.plot)
    code = exit_code(results)
    if code == 2 and any(r.error and "--config" in r.error for r in results):
        parser.print_usage(sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
