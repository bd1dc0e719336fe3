"""Verification reports and deterministic CSV emission.

Every inequality check produces a VerificationReport that retains the raw
numbers; pass/fail is always lhs <= rhs * (1 + slack). CSV files carry a
versioned header comment and fixed column order, and floats are formatted
with a fixed precision so a fixed seed yields byte-identical output.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

CSV_VERSION = "carnotcap csv v1"

__all__ = ["VerificationReport", "format_float", "write_rows_csv", "write_reports_csv"]


def format_float(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


@dataclass
class VerificationReport:
    """One checked statement: lhs vs rhs with slack and raw diagnostics."""

    check: str
    lhs: float
    rhs: float
    slack: float
    passed: bool
    lhs_err: float = 0.0
    rhs_err: float = 0.0
    inputs: dict = field(default_factory=dict)
    notes: str = ""

    @classmethod
    def from_inequality(
        cls,
        check: str,
        lhs: float,
        rhs: float,
        slack: float,
        lhs_err: float = 0.0,
        rhs_err: float = 0.0,
        inputs: dict | None = None,
        notes: str = "",
    ) -> "VerificationReport":
        return cls(
            check=check,
            lhs=lhs,
            rhs=rhs,
            slack=slack,
            passed=bool(lhs <= rhs * (1.0 + slack)),
            lhs_err=lhs_err,
            rhs_err=rhs_err,
            inputs=dict(inputs or {}),
            notes=notes,
        )

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs != 0 else float("inf")

    def digest(self) -> str:
        items = sorted(self.inputs.items())
        return ";".join(f"{k}={format_float(v)}" for k, v in items)

    def to_row(self) -> dict:
        return {
            "check": self.check,
            "passed": int(self.passed),
            "lhs": format_float(self.lhs),
            "rhs": format_float(self.rhs),
            "lhs_err": format_float(self.lhs_err),
            "rhs_err": format_float(self.rhs_err),
            "slack": format_float(self.slack),
            "inputs": self.digest(),
            "notes": self.notes,
        }


REPORT_FIELDS = [
    "check",
    "passed",
    "lhs",
    "rhs",
    "lhs_err",
    "rhs_err",
    "slack",
    "inputs",
    "notes",
]


def write_rows_csv(path, task: str, fieldnames: list[str], rows: list[dict]) -> None:
    """Write rows with the versioned header comment; values pre-formatted."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# {CSV_VERSION} task={task}\n")
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: format_float(row.get(k, "")) for k in fieldnames})


def write_reports_csv(path, task: str, reports) -> None:
    """One CSV row per report, sorted by check id then input digest."""
    ordered = sorted(reports, key=lambda r: (r.check, r.digest()))
    write_rows_csv(path, task, REPORT_FIELDS, [r.to_row() for r in ordered])
