"""Report assembly and serialization (JSON with sorted keys, CSV with frozen columns)."""

from __future__ import annotations

import csv
import io
import json
import math
from functools import lru_cache
from importlib import resources

from .measures import entropy_report, frobenius_norm, cumulant_block
from .rdm import SpinDensities, spin_squared

SCHEMA_ID = "kickcorr.report/1"
SIG_DIGITS = 12


@lru_cache(maxsize=None)
def load_schema() -> dict:
    text = resources.files("kickcorr").joinpath("schema/report.schema.json").read_text("utf-8")
    return json.loads(text)


def csv_columns() -> list[str]:
    return list(load_schema()["x-csv-columns"])


def _round(x):
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        return x
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r} in report")
        y = float(format(x, f".{SIG_DIGITS}g"))
        return 0.0 if y == 0 else y
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    # numpy scalars
    if hasattr(x, "item"):
        return _round(x.item())
    raise TypeError(f"cannot serialize {type(x).__name__}")


def density_sections(dens: SpinDensities) -> tuple[dict, dict, float]:
    """``(entropies, norms, <S^2>)`` for one state's densities."""
    ent = entropy_report(dens).as_dict()
    ent["ds_aa"] = None if ent["s_aa"] is None else ent["s_aa"] - ent["s0_aa"]
    ent["ds_ab"] = None if ent["s_ab"] is None else ent["s_ab"] - ent["s0_ab"]
    norms = {
        "aa": frobenius_norm(cumulant_block(dens.aa, dens.d1a)),
        "bb": frobenius_norm(cumulant_block(dens.bb, dens.d1b)),
        "ab": frobenius_norm(cumulant_block(dens.ab, dens.d1a, dens.d1b)),
    }
    return ent, norms, spin_squared(dens.ab)


def make_report(system: str, geometry=None, energy=None, entropies=None, norms=None,
                kick=None, diagnostics=None) -> dict:
    """Build a report dict; floats are rounded to 12 significant digits."""
    rep = {
        "schema": SCHEMA_ID,
        "system": system,
        "geometry": None if geometry is None else str(geometry),
        "energy": energy,
        "entropies": entropies or {},
        "norms": norms or {},
        "kick": kick,
        "diagnostics": diagnostics or {},
    }
    return _round(rep)


def dumps(report, indent: int | None = 2) -> str:
    return json.dumps(report, sort_keys=True, indent=indent, ensure_ascii=False, allow_nan=False)


def flatten(report: dict) -> dict:
    row = {"system": report["system"], "geometry": report["geometry"], "energy": report["energy"]}
    row.update(report["entropies"])
    row.update({f"norm_{k}": v for k, v in report["norms"].items()})
    if report["kick"]:
        row.update({k: v for k, v in report["kick"].items() if not isinstance(v, list)})
    row.update(report["diagnostics"])
    return row


def to_csv(reports, header: bool = True) -> str:
    cols = csv_columns()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(cols)
    for rep in reports:
        row = flatten(rep)
        w.writerow(["" if row.get(c) is None else row[c] for c in cols])
    return buf.getvalue()
