"""Inequality reports and their JSON / CSV forms."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field

__all__ = ["GapReport", "make_report", "digest_of", "reports_to_csv", "DEFAULT_TOLERANCE"]

DEFAULT_TOLERANCE = 1e-3

_CSV_FIELDS = ["name", "lhs", "rhs", "slack", "tolerance", "satisfied", "inputs_digest"]


@dataclass(frozen=True)
class GapReport:
    """One verified inequality instance ``lhs >= rhs``.

    ``slack`` is ``lhs - rhs`` and the instance counts as satisfied when
    ``slack >= -tolerance``. ``details`` carries check-specific extras such as
    the active branch of a maximum or whether a grid refinement was needed.
    """

    name: str
    lhs: float
    rhs: float
    slack: float
    tolerance: float
    satisfied: bool
    inputs_digest: str = ""
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        if not self.details:
            del d["details"]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GapReport":
        return cls(
            name=d["name"],
            lhs=float(d["lhs"]),
            rhs=float(d["rhs"]),
            slack=float(d["slack"]),
            tolerance=float(d["tolerance"]),
            satisfied=bool(d["satisfied"]),
            inputs_digest=d.get("inputs_digest", ""),
            details=dict(d.get("details", {})),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def csv_row(self) -> list:
        return [getattr(self, k) for k in _CSV_FIELDS]


def make_report(name: str, lhs: float, rhs: float, tolerance: float = DEFAULT_TOLERANCE, digest: str = "", **details) -> GapReport:
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    lhs = float(lhs)
    rhs = float(rhs)
    slack = lhs - rhs
    ok = bool(slack >= -tolerance) if math.isfinite(slack) else False
    return GapReport(name, lhs, rhs, slack, float(tolerance), ok, digest, details)


def digest_of(*items) -> str:
    """Combine the digests of grids (or anything with ``digest()``) into one tag."""
    h = hashlib.sha256()
    for it in items:
        h.update((it.digest() if hasattr(it, "digest") else repr(it)).encode())
    return h.hexdigest()[:16]


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_FIELDS)
    for r in reports:
        writer.writerow(r.csv_row())
    return buf.getvalue()
