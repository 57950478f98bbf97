"""Check records and machine-readable verification reports.

Every verification routine emits CheckRecord entries with a signed margin:
nonnegative means the checked inequality held with room to spare, and a
record passes iff margin >= -tol.  Equality checks store margin = -|residual|
so the same rule applies.  Reports serialize to a canonical JSON byte string
so identical runs are comparable byte for byte.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable


@dataclass(frozen=True)
class CheckRecord:
    check_id: str
    params: dict
    margin: float
    tol: float
    passed: bool


def _jsonable(value):
    if isinstance(value, (bool, int, str)) or value is None:
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value in record: {value}")
        return value
    if hasattr(value, "item"):
        return _jsonable(value.item())
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    raise TypeError(f"cannot serialize {type(value).__name__} in a check record")


def make_record(check_id: str, margin: float, tol: float, **params) -> CheckRecord:
    """Build a record; pass iff margin >= -tol."""
    margin = float(margin)
    tol = float(tol)
    if not math.isfinite(margin):
        raise ValueError(f"{check_id}: margin must be finite, got {margin}")
    return CheckRecord(
        check_id=check_id,
        params=_jsonable(params),
        margin=margin,
        tol=tol,
        passed=bool(margin >= -tol),
    )


@dataclass
class VerificationReport:
    records: list[CheckRecord] = field(default_factory=list)
    seed: int | None = None

    def add(self, record: CheckRecord) -> None:
        self.records.append(record)

    def extend(self, records: Iterable[CheckRecord]) -> None:
        self.records.extend(records)

    @property
    def total(self) -> int:
        return len(self.records)

    @property
    def passed_count(self) -> int:
        return sum(1 for r in self.records if r.passed)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.records)

    @property
    def worst_margin(self) -> float:
        if not self.records:
            raise ValueError("empty report has no worst margin")
        return min(r.margin for r in self.records)

    @property
    def failures(self) -> list[CheckRecord]:
        return [r for r in self.records if not r.passed]

    def summary_line(self, name: str) -> str:
        return (f"SUITE {name}: {self.passed_count}/{self.total} "
                f"worst_margin={self.worst_margin!r}")

    def to_json_bytes(self) -> bytes:
        rows = [
            {
                "check_id": r.check_id,
                "params": r.params,
                "margin": r.margin,
                "pass": r.passed,
                "tol": r.tol,
            }
            for r in self.records
        ]
        text = json.dumps(rows, sort_keys=True, indent=2,
                          separators=(",", ": "), allow_nan=False)
        return (text + "\n").encode("ascii")

    def write_json(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_json_bytes())

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["check_id", "margin", "tol", "pass", "params"])
            for r in self.records:
                writer.writerow([
                    r.check_id,
                    repr(r.margin),
                    repr(r.tol),
                    str(r.passed).lower(),
                    json.dumps(r.params, sort_keys=True, separators=(",", ":")),
                ])
