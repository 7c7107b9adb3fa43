"""Check results and certificate reports produced by the verification layer."""

from dataclasses import dataclass, field


@dataclass
class CheckResult:
    """Outcome of one numerical check.

    margin is the worst-case slack (positive means the inequality held with
    room to spare); worst_index locates that worst case on the sample grid,
    -1 when not applicable.
    """

    name: str
    passed: bool
    margin: float
    worst_index: int = -1
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        loc = f" @ sample {self.worst_index}" if self.worst_index >= 0 else ""
        extra = f" ({self.detail})" if self.detail else ""
        return f"[{status}] {self.name}: margin {self.margin:.6g}{loc}{extra}"

    def to_dict(self):
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "margin": float(self.margin),
            "worst_index": int(self.worst_index),
            "detail": self.detail,
        }


@dataclass
class CertificateReport:
    """Conjunction of individual checks over one trace or design."""

    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, check):
        self.checks.append(check)

    def __iter__(self):
        return iter(self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_text(self):
        lines = [c.line() for c in self.checks]
        verdict = "ALL CHECKS PASSED" if self.passed else "VERIFICATION FAILED"
        return "\n".join(lines + [verdict])

    def to_dict(self):
        return {
            "passed": bool(self.passed),
            "checks": [c.to_dict() for c in self.checks],
        }
