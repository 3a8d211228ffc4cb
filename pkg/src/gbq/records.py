"""Run records, versioned output directories, CSV emission."""

from __future__ import annotations

import csv
import json
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import __version__

SCHEMA_VERSION = 1


def fmt(v: Any) -> str:
    """17 significant digits for floats; plain text otherwise."""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _jsonable(v: Any) -> Any:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):
        return _jsonable(v.item())
    return v


@dataclass
class Criterion:
    name: str
    value: float
    threshold: float
    comparison: str  # "<=" or ">="
    passed: bool
    note: str = ""


@dataclass
class RunRecord:
    experiment: str
    config: dict[str, Any]
    seed_lineage: dict[str, Any] = field(default_factory=dict)
    series: dict[str, list] = field(default_factory=dict)
    fits: dict[str, Any] = field(default_factory=dict)
    criteria: list[Criterion] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    files: list[str] = field(default_factory=list)
    started: float = field(default_factory=time.time)
    finished: float | None = None

    def check(self, name: str, value: float, threshold: float, comparison: str = "<=",
              note: str = "") -> bool:
        if comparison == "<=":
            ok = value <= threshold
        elif comparison == ">=":
            ok = value >= threshold
        else:
            raise ValueError(f"unknown comparison {comparison!r}")
        ok = bool(ok) and not (isinstance(value, float) and math.isnan(value))
        self.criteria.append(Criterion(name, float(value), float(threshold), comparison, ok, note))
        return ok

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> dict[str, Any]:
        return _jsonable({
            "schema_version": SCHEMA_VERSION,
            "tool": "gbq",
            "tool_version": __version__,
            "platform": platform.platform(),
            "experiment": self.experiment,
            "status": self.status,
            "config": self.config,
            "seed_lineage": self.seed_lineage,
            "started": self.started,
            "finished": self.finished,
            "criteria": [c.__dict__ for c in self.criteria],
            "fits": self.fits,
            "warnings": self.warnings,
            "files": self.files,
            "series": self.series,
        })

    def write(self, outdir: Path) -> Path:
        self.finished = time.time()
        path = outdir / "run.json"
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        return path


def versioned_dir(root: str | Path, experiment: str) -> Path:
    """Fresh ``root/<experiment>-NNN`` directory; existing ones are never reused."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    i = 1
    while True:
        d = root / f"{experiment}-{i:03d}"
        try:
            d.mkdir()
            return d
        except FileExistsError:
            i += 1
