"""
Résultat commun des suites: paramètres, vérifications, table optionnelle, statut
"""

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import pandas as pd

from models.errors import ConfigError, CostGuardError, LatticeError, LoopfluxError
from models.ledger_engine import CheckReport

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURES = 1
EXIT_USAGE = 2


@dataclass
class SuiteResult:
    command: str
    parameters: Dict[str, Any] = field(default_factory=dict)
    values: Dict[str, Any] = field(default_factory=dict)
    checks: List[Dict[str, Any]] = field(default_factory=list)
    table: Optional[pd.DataFrame] = None
    artifact: Any = None
    error: Optional[str] = None
    exit_code: int = EXIT_OK

    # 1. vérifications

    def check(self, name: str, passed: bool, **fields) -> bool:
        entry = {"name": name, "passed": bool(passed)}
        entry.update(fields)
        self.checks.append(entry)
        if not passed:
            logger.warning("vérification échouée: %s %s", self.command, name)
        return bool(passed)

    def add_report(self, report: CheckReport) -> bool:
        return self.check(report.name, report.passed, checked=report.checked, failures=report.failures,
                          skipped=report.skipped, counterexamples=report.counterexamples,
                          details=report.details)

    # 2. statut

    @property
    def status(self) -> str:
        if self.error is not None:
            return "error"
        return "pass" if all(c["passed"] for c in self.checks) else "fail"

    @property
    def code(self) -> int:
        if self.error is not None:
            return self.exit_code
        return EXIT_OK if self.status == "pass" else EXIT_FAILURES

    def as_dict(self) -> Dict[str, Any]:
        body: Dict[str, Any] = {"command": self.command, "status": self.status,
                                "parameters": self.parameters}
        body.update(self.values)
        body["checks"] = self.checks
        if self.error is not None:
            body["error"] = self.error
        return body


@contextmanager
def guarded(result: SuiteResult):
    """LoopfluxError -> entrée 'error'; garde de coût et configuration -> code 2"""
    try:
        yield result
    except CostGuardError as e:
        result.error = str(e)
        result.values["guard"] = e.guard
        result.exit_code = EXIT_USAGE
        logger.error("%s: %s", result.command, e)
    except (LatticeError, ConfigError) as e:
        result.error = str(e)
        result.exit_code = EXIT_USAGE
        logger.error("%s: %s", result.command, e)
    except LoopfluxError as e:
        result.error = f"{type(e).__name__}: {e}"
        result.exit_code = EXIT_FAILURES
        logger.error("%s: %s", result.command, e)
