"""Machine-readable audit records and report serialization.

Every bound check becomes an InequalityAudit carrying both sides, the
margin, and the tolerance it was judged against; every evaluated
functional becomes a FunctionalValue. Infinite functional values are a
tagged state (value None, infinite True), never a floating-point inf, so
reports stay portable JSON.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field


@dataclass(frozen=True)
class InequalityAudit:
    """Record of one checked inequality lhs <= rhs + tolerance."""

    name: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    tolerance: float

    def as_dict(self):
        return {
            "name": self.name,
            "lhs": _portable(self.lhs),
            "rhs": _portable(self.rhs),
            "margin": _portable(self.margin),
            "pass": bool(self.passed),
            "tolerance": self.tolerance,
        }


def audit(name, lhs, rhs, tolerance) -> InequalityAudit:
    lhs = float(lhs)
    rhs = float(rhs)
    margin = rhs - lhs
    return InequalityAudit(
        name=name,
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        passed=bool(margin >= -float(tolerance)),
        tolerance=float(tolerance),
    )


@dataclass(frozen=True)
class FunctionalValue:
    """Named functional evaluation; `infinite` mirrors the extended-value
    convention where a functional is +inf off its admissible set."""

    name: str
    value: float | None
    infinite: bool = False
    lam: float | None = None

    def as_float(self) -> float:
        return math.inf if self.infinite else float(self.value)

    def as_dict(self):
        d = {"name": self.name, "value": self.value, "infinite": self.infinite}
        if self.lam is not None:
            d["lambda"] = self.lam
        return d


def finite_value(name, value, lam=None) -> FunctionalValue:
    value = float(value)
    if math.isinf(value):
        return infinite_value(name, lam)
    return FunctionalValue(name=name, value=value, infinite=False, lam=lam)


def infinite_value(name, lam=None) -> FunctionalValue:
    return FunctionalValue(name=name, value=None, infinite=True, lam=lam)


@dataclass
class BoundsReport:
    """Aggregate of every functional evaluated and inequality audited in
    one run, plus free-form metadata."""

    functionals: list = field(default_factory=list)
    audits: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add_value(self, value: FunctionalValue):
        self.functionals.append(value)

    def add_audit(self, a: InequalityAudit):
        self.audits.append(a)

    def extend_audits(self, audits):
        self.audits.extend(audits)

    def all_passed(self) -> bool:
        return all(a.passed for a in self.audits)

    def as_dict(self):
        return {
            "functionals": [v.as_dict() for v in self.functionals],
            "audits": [a.as_dict() for a in self.audits],
            "metadata": self.metadata,
        }


def _portable(x):
    """Map non-finite floats to tagged strings for strict-JSON output."""
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


def dumps(payload) -> str:
    """Deterministic JSON: sorted keys, fixed separators, no NaN/Inf."""
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False)


def write_json_atomic(path, payload):
    """Write report JSON via temp-file-then-rename."""
    text = dumps(payload)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
