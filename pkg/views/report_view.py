"""
Rendu des rapports: JSON à ordre de champs fixe (flottants à 12 chiffres
significatifs, rationnels exacts "p/q") et tables CSV via pandas
"""

import dataclasses
import json
import logging
import sys
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Optional, TextIO

import numpy as np
import pandas as pd

from models.lattice_model import Site

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.12g"


def format_float(value: float) -> Any:
    """12 chiffres significatifs; inf et nan deviennent des chaînes"""
    value = float(value)
    if not np.isfinite(value):
        return str(value)
    return float(FLOAT_FORMAT % value)


def to_jsonable(obj: Any) -> Any:
    """Conversion récursive vers des types JSON en conservant l'ordre d'insertion"""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, np.bool_):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Fraction):
        return {"exact": f"{obj.numerator}/{obj.denominator}", "value": format_float(obj)}
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, Site):
        return repr(obj)
    if isinstance(obj, pd.DataFrame):
        return [to_jsonable(row) for row in obj.to_dict(orient="records")]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {_key(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj, key=repr) if isinstance(obj, (set, frozenset)) else obj
        return [to_jsonable(v) for v in items]
    return repr(obj)


def _key(k: Any) -> str:
    if isinstance(k, str):
        return k
    if isinstance(k, tuple):
        return "->".join(repr(v) if isinstance(v, Site) else str(v) for v in k)
    return repr(k) if isinstance(k, Site) else str(k)


def render_json(report: Dict[str, Any]) -> str:
    """Enveloppe {schema, ...} puis JSON indenté, déterministe"""
    body = {"schema": SCHEMA_VERSION}
    body.update(report)
    return json.dumps(to_jsonable(body), indent=2, ensure_ascii=False) + "\n"


def render_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


class ReportWriter:
    """Écrit un rapport sur stdout ou dans un fichier, en JSON ou en CSV"""

    def __init__(self, output: Optional[str] = None, fmt: str = "json", stream: Optional[TextIO] = None):
        self.output = output
        self.fmt = fmt
        self.stream = stream

    def write(self, report: Dict[str, Any], table: Optional[pd.DataFrame] = None):
        """En CSV, la table est écrite et le JSON accompagne sur le flux si un fichier est donné"""
        if self.fmt == "csv" and table is not None:
            self._emit(render_csv(table), self.output)
            if self.output:
                self._emit(render_json(report), None)
            return
        self._emit(render_json(report), self.output)

    def _emit(self, text: str, path: Optional[str]):
        if path:
            with open(path, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            logger.info("rapport écrit: %s", path)
        else:
            (self.stream or sys.stdout).write(text)
