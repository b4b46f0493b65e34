"""Self-contained statistical test reports.

A report stores everything its verdict depends on (statistic, target,
uncertainty, tolerance and the decision rule), so the verdict can be
recomputed from the stored fields alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

# Decision rules.  THREE_SE carries a tiny absolute slack so that exactly
# deterministic checks (SE == 0) do not fail on float summation noise.
RULE_THREE_SE = "abs(statistic-target) <= 3*uncertainty + 1e-12*max(1,abs(target))"
RULE_P_ABOVE = "uncertainty > target (p-value above level)"
RULE_WITHIN_TOL = "abs(statistic-target) <= tolerance"
RULE_BELOW = "statistic < target"
RULE_NONINCREASING = "extra['sequence'] is nonincreasing"
RULE_ALL_COMPONENTS = "all component verdicts hold"
RULE_VACUOUS = "vacuously true"


@dataclass(frozen=True)
class TestReport:
    name: str
    statistic: float
    target: float
    provenance: str
    uncertainty: float
    rule: str
    verdict: bool
    tolerance: float = 0.0
    sample_size: int = 0
    seed: int | None = None
    runtime: float | None = None
    extra: dict = field(default_factory=dict)
    components: tuple = ()

    @classmethod
    def build(cls, name, statistic, target, provenance, uncertainty, rule,
              tolerance=0.0, sample_size=0, seed=None, runtime=None,
              extra=None, components=()):
        rep = cls(name=name, statistic=float(statistic), target=float(target),
                  provenance=provenance, uncertainty=float(uncertainty),
                  rule=rule, verdict=False, tolerance=float(tolerance),
                  sample_size=int(sample_size), seed=seed, runtime=runtime,
                  extra=dict(extra or {}), components=tuple(components))
        object.__setattr__(rep, "verdict", recompute_verdict(rep))
        return rep

    def flattened(self):
        yield self
        for comp in self.components:
            yield from comp.flattened()


def recompute_verdict(report: TestReport) -> bool:
    """Pure function of the stored fields; must reproduce report.verdict."""
    r = report
    if r.rule == RULE_THREE_SE:
        if math.isinf(r.statistic) or math.isnan(r.statistic):
            return False
        slack = 1e-12 * max(1.0, abs(r.target))
        return abs(r.statistic - r.target) <= 3.0 * r.uncertainty + slack
    if r.rule == RULE_P_ABOVE:
        return r.uncertainty > r.target
    if r.rule == RULE_WITHIN_TOL:
        if math.isinf(r.statistic) or math.isnan(r.statistic):
            return False
        return abs(r.statistic - r.target) <= r.tolerance
    if r.rule == RULE_BELOW:
        return r.statistic < r.target
    if r.rule == RULE_NONINCREASING:
        seq = list(r.extra.get("sequence", ()))
        return all(b <= a + 1e-12 * max(1.0, abs(a)) for a, b in zip(seq, seq[1:]))
    if r.rule == RULE_ALL_COMPONENTS:
        return all(c.verdict for c in r.components)
    if r.rule == RULE_VACUOUS:
        return True
    raise ValueError(f"unknown decision rule {r.rule!r}")
