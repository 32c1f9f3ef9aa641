"""Evaluation of a sketch's HHH output against the exact oracle."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, fields
from typing import Sequence

from .oracle import ExactCounts, conditioned_all, exact_hhh
from .sketch import HhhCandidate
from .stats import ConfidenceParams

__all__ = ["EvalReport", "evaluate", "aggregate", "CSV_COLUMNS"]


@dataclass(frozen=True)
class EvalReport:
    """Quality of one output set (or the mean over several runs).

    accuracy_violation_rate: share of output prefixes with |f - f_hat| > eps N.
    mean_abs_error: mean |f - f_hat| / N over output prefixes.
    coverage_violation_rate: share of non-output observed prefixes q whose
        exact conditioned frequency given the output reaches theta N.
    coverage_failure_rate: share of runs with at least one such q.
    false_positive_ratio: |P minus exact HHH| / |P|.
    recall: |P intersect exact HHH| / |exact HHH|.
    """

    accuracy_violation_rate: float
    mean_abs_error: float
    coverage_violation_rate: float
    coverage_failure_rate: float
    false_positive_ratio: float
    recall: float
    output_size: float
    exact_size: float
    n: int
    runs: int = 1

    @property
    def miss_rate(self) -> float:
        return 1.0 - self.recall

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=False)

    def to_csv_row(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerow([getattr(self, c) for c in CSV_COLUMNS])
        return buf.getvalue()


CSV_COLUMNS = tuple(f.name for f in fields(EvalReport))


def evaluate(candidates: Sequence[HhhCandidate], counts: ExactCounts,
             params: ConfidenceParams, theta: float, n: int | None = None) -> EvalReport:
    """Score ``candidates`` against the exact counts of the same stream.

    Args:
        n: packets seen by the sketch; must match ``counts.n`` when given.
    """
    if n is not None and n != counts.n:
        raise ValueError(f"sketch saw {n} packets but the oracle counted {counts.n}")
    if counts.n <= 0:
        raise ValueError("cannot evaluate an empty stream")
    total = counts.n
    spec = counts.spec
    output = {c.prefix for c in candidates}

    errors = [abs(counts.freq(c.prefix) - c.estimate) for c in candidates]
    bound = params.epsilon * total
    if candidates:
        accuracy = sum(e > bound for e in errors) / len(candidates)
        mean_err = sum(errors) / len(candidates) / total
    else:
        accuracy = mean_err = 0.0

    threshold = theta * total
    masses = conditioned_all(counts, output)
    violations = sum(mass >= threshold
                     for pattern in spec.nodes
                     for key, mass in masses[pattern].items()
                     if spec.from_key64(pattern, key) not in output)
    observed = sum(len(counts.per_node[p]) for p in spec.nodes)
    observed -= sum(1 for p in output if counts.freq(p) > 0)
    coverage = violations / observed if observed else 0.0

    exact = exact_hhh(counts, theta)
    fpr = len(output - exact) / len(output) if output else 0.0
    recall = len(output & exact) / len(exact) if exact else 1.0
    return EvalReport(
        accuracy_violation_rate=accuracy,
        mean_abs_error=mean_err,
        coverage_violation_rate=coverage,
        coverage_failure_rate=1.0 if violations else 0.0,
        false_positive_ratio=fpr,
        recall=recall,
        output_size=float(len(output)),
        exact_size=float(len(exact)),
        n=total,
    )


def aggregate(reports: Sequence[EvalReport]) -> EvalReport:
    """Mean of every rate; ``runs`` is summed and ``n`` taken from the first report."""
    if not reports:
        raise ValueError("nothing to aggregate")
    runs = sum(r.runs for r in reports)
    values = {}
    for f in fields(EvalReport):
        if f.name in ("n", "runs"):
            continue
        values[f.name] = sum(getattr(r, f.name) * r.runs for r in reports) / runs
    return EvalReport(n=reports[0].n, runs=runs, **values)
