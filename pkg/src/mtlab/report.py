"""Check reports and their JSON/CSV serializations.

Every verification op returns a Report.  The sign convention is fixed
once: margin = rhs * (1 + disc_error) - lhs, and a PASS always means
margin >= 0, i.e. lhs <= rhs * (1 + disc_error).  disc_error carries
the discretization allowance (Richardson estimate or a documented
slack), never a fudge applied to lhs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

PASS = "PASS"
FAIL = "FAIL"
REJECTED = "REJECTED-INPUT"
SATURATED = "SATURATED"
WARN = "WARN"
STATUSES = (PASS, FAIL, REJECTED, SATURATED, WARN)


@dataclass(frozen=True)
class Report:
    check: str
    params: dict
    lhs: float | None
    rhs: float | None
    margin: float | None
    disc_error: float
    status: str
    ln_lhs: float | None = None
    ln_rhs: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if self.status == PASS and self.lhs > self.rhs * (1.0 + self.disc_error):
            raise ValueError(f"{self.check}: PASS with negative margin")

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "params": dict(self.params),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ln_lhs": self.ln_lhs,
            "ln_rhs": self.ln_rhs,
            "margin": self.margin,
            "disc_error": self.disc_error,
            "status": self.status,
            "extra": dict(self.extra),
        }


def make_report(
    check: str,
    params: dict,
    lhs: float,
    rhs: float,
    disc_error: float = 0.0,
    extra: dict | None = None,
    warn: bool = False,
    ln_lhs: float | None = None,
    ln_rhs: float | None = None,
) -> Report:
    """Compare lhs against rhs*(1+disc_error); PASS/FAIL by sign of margin.

    ``warn`` downgrades a nonnegative margin to WARN for checks that
    succeeded but carry an advisory (FAIL is never downgraded).
    """
    margin = rhs * (1.0 + disc_error) - lhs
    status = FAIL if margin < 0.0 else (WARN if warn else PASS)
    return Report(
        check=check,
        params=dict(params),
        lhs=float(lhs),
        rhs=float(rhs),
        margin=float(margin),
        disc_error=float(disc_error),
        status=status,
        ln_lhs=None if ln_lhs is None else float(ln_lhs),
        ln_rhs=None if ln_rhs is None else float(ln_rhs),
        extra=dict(extra or {}),
    )


def rejected_report(check: str, params: dict, reason: str) -> Report:
    """Inputs outside a bound's range of validity: recorded, never an error."""
    return Report(
        check=check,
        params=dict(params),
        lhs=None,
        rhs=None,
        margin=None,
        disc_error=0.0,
        status=REJECTED,
        extra={"reason": reason},
    )


def saturated_report(
    check: str,
    params: dict,
    reason: str,
    extra: dict | None = None,
    ln_lhs: float | None = None,
    ln_rhs: float | None = None,
) -> Report:
    """Overflow guard tripped: the linear values are unrepresentable but the
    comparison stays meaningful in log space, so ln(LHS)/ln(RHS) are kept."""
    return Report(
        check=check,
        params=dict(params),
        lhs=None,
        rhs=None,
        margin=None,
        disc_error=0.0,
        status=SATURATED,
        ln_lhs=None if ln_lhs is None else float(ln_lhs),
        ln_rhs=None if ln_rhs is None else float(ln_rhs),
        extra={"reason": reason, **(extra or {})},
    )


def worst_status(reports: list[Report]) -> str:
    return FAIL if any(r.status == FAIL for r in reports) else PASS


def reports_to_json(reports: list[Report], meta: dict | None = None) -> str:
    payload = {"meta": meta or {}, "reports": [r.to_dict() for r in reports]}
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_reports(path: str | Path, reports: list[Report], meta: dict | None = None) -> None:
    Path(path).write_text(reports_to_json(reports, meta))


def load_reports(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


# ---------------------------------------------------------------------------
# CSV: RFC-4180 quoting, LF endings, floats at 17 significant digits so
# a round-trip parse reproduces every double bit-exactly.


def _csv_cell(value) -> str:
    if isinstance(value, float):
        text = "%.17g" % value
    elif isinstance(value, bool):
        text = "1" if value else "0"
    else:
        text = str(value)
    if any(c in text for c in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def emit_csv(path: str | Path, header: list[str], rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(_csv_cell(c) for c in header) + "\n")
            for row in rows:
                fh.write(",".join(_csv_cell(c) for c in row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV {path}: {exc}") from exc


def reports_csv(path: str | Path, reports: list[Report]) -> None:
    header = ["check", "status", "lhs", "rhs", "ln_lhs", "ln_rhs", "margin", "disc_error", "params"]
    rows = [
        (
            r.check,
            r.status,
            "" if r.lhs is None else r.lhs,
            "" if r.rhs is None else r.rhs,
            "" if r.ln_lhs is None else r.ln_lhs,
            "" if r.ln_rhs is None else r.ln_rhs,
            "" if r.margin is None else r.margin,
            r.disc_error,
            json.dumps(r.params, sort_keys=True),
        )
        for r in reports
    ]
    emit_csv(path, header, rows)
