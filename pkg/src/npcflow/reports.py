"""Check reports and the package-wide error type."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any


class DomainError(ValueError):
    """Raised when an argument lies outside an operation's domain."""


@dataclass
class CheckReport:
    """Outcome of one verification run.

    ``worst_violation`` is the largest observed ``lhs - rhs`` for an
    inequality ``lhs <= rhs`` (negative means slack everywhere).  A run
    passes when ``worst_violation <= tolerance`` and no required sample was
    lost.
    """

    name: str
    trials: int
    worst_violation: float
    tolerance: float
    passed: bool
    skipped: int = 0
    details: dict[str, Any] = field(default_factory=dict)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = (f"[{status}] {self.name}: trials={self.trials} "
                f"worst={self.worst_violation:.3e} tol={self.tolerance:.3e}")
        if self.skipped:
            line += f" skipped={self.skipped}"
        return line

    def to_dict(self) -> dict[str, Any]:
        return _jsonable(asdict(self))


def _jsonable(obj):
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def inequality_report(name, lhs, rhs, tolerance, skipped=0, **details):
    """Build a report for the family of inequalities ``lhs <= rhs``."""
    import numpy as np

    lhs = np.atleast_1d(np.asarray(lhs, dtype=float))
    rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
    gaps = lhs - rhs
    if gaps.size == 0:
        worst = float("-inf")
    else:
        worst = float(np.max(gaps))
    passed = bool(gaps.size == 0 or worst <= tolerance) and np.all(np.isfinite(gaps))
    details.setdefault("violations", int(np.sum(gaps > tolerance)))
    return CheckReport(name=name, trials=int(gaps.size), worst_violation=worst,
                       tolerance=float(tolerance), passed=bool(passed),
                       skipped=int(skipped), details=details)
