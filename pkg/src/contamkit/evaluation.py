"""Detection quality evaluation: AUC, ROC curves, cross-domain matrices.

AUC here is the probability that a seen instance scores "better" than an
unseen one, with ties counting half. It is computed from midranks in
O(n log n), but over doubled integer numerators, so the result is the
exact same float the quadratic pairwise definition yields.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .corpus import ContaminationLabel
from .errors import EmptyInputError, ValidationError
from .metrics import MetricId, Orientation, ScoreVector, parse_metric_name

FAMILY_TABLE_ORDER = (
    "ppl",
    "min_p_token",
    "mem",
    "entropy",
    "ref_lm_ratio",
    "zlib_ratio",
    "perturb_delta",
    "keyinfo",
    "metadata_probe",
)

HIGHLIGHT_THRESHOLD = 60.0  # on the x100 display scale, strictly greater


def _oriented(values: np.ndarray, orientation: Orientation) -> np.ndarray:
    """Map scores so that larger always argues seen."""
    if orientation == Orientation.LOWER_MEANS_SEEN:
        return -values
    return values


def _auc_from_arrays(seen: np.ndarray, unseen: np.ndarray) -> float:
    """Midrank AUC with an exact doubled-integer numerator."""
    n_s = len(seen)
    n_u = len(unseen)
    both = np.concatenate([seen, unseen])
    order = np.argsort(both, kind="mergesort")
    sorted_vals = both[order]
    n = len(both)
    # doubled midrank of sorted position i..j (1-based ranks): i+j+2
    doubled = np.empty(n, dtype=np.int64)
    start = 0
    while start < n:
        end = start
        while end + 1 < n and sorted_vals[end + 1] == sorted_vals[start]:
            end += 1
        doubled[start : end + 1] = start + end + 2
        start = end + 1
    is_seen_sorted = order < n_s
    r2_seen = int(doubled[is_seen_sorted].sum())
    numerator2 = r2_seen - n_s * (n_s + 1)
    return numerator2 / (2 * n_s * n_u)


def _roc_from_arrays(
    seen: np.ndarray, unseen: np.ndarray
) -> tuple[tuple[float, float], ...]:
    """ROC points from a descending threshold sweep over distinct scores."""
    n_s = len(seen)
    n_u = len(unseen)
    both = np.concatenate([seen, unseen])
    labels = np.concatenate([np.ones(n_s, dtype=bool), np.zeros(n_u, dtype=bool)])
    order = np.argsort(-both, kind="mergesort")
    vals = both[order]
    labs = labels[order]
    points: list[tuple[float, float]] = [(0.0, 0.0)]
    tp = 0
    fp = 0
    i = 0
    n = len(vals)
    while i < n:
        j = i
        while j + 1 < n and vals[j + 1] == vals[i]:
            j += 1
        run = labs[i : j + 1]
        tp += int(run.sum())
        fp += int((~run).sum())
        points.append((fp / n_u, tp / n_s))
        i = j + 1
    return tuple(points)


@dataclass(frozen=True)
class AucResult:
    """AUC for one metric with its ROC curve and class sizes."""

    metric: MetricId
    auc: float
    n_seen: int
    n_unseen: int
    roc_points: tuple[tuple[float, float], ...]


def _split_scores(scores: ScoreVector) -> tuple[np.ndarray, np.ndarray]:
    seen = scores.values(ContaminationLabel.SEEN)
    unseen = scores.values(ContaminationLabel.UNSEEN)
    if len(seen) == 0 or len(unseen) == 0:
        raise EmptyInputError(
            f"metric {scores.metric.display_name()!r}: AUC needs both seen and "
            f"unseen scores (got {len(seen)} seen, {len(unseen)} unseen)"
        )
    return seen, unseen


def auc(scores: ScoreVector) -> AucResult:
    """Orientation-aware AUC of a labelled score vector."""
    seen, unseen = _split_scores(scores)
    seen_adj = _oriented(seen, scores.orientation)
    unseen_adj = _oriented(unseen, scores.orientation)
    return AucResult(
        metric=scores.metric,
        auc=_auc_from_arrays(seen_adj, unseen_adj),
        n_seen=len(seen),
        n_unseen=len(unseen),
        roc_points=_roc_from_arrays(seen_adj, unseen_adj),
    )


def roc_curve(scores: ScoreVector) -> tuple[tuple[float, float], ...]:
    """(fpr, tpr) points from a descending sweep over distinct scores."""
    seen, unseen = _split_scores(scores)
    return _roc_from_arrays(
        _oriented(seen, scores.orientation),
        _oriented(unseen, scores.orientation),
    )


def roc_trapezoid_area(points: Sequence[tuple[float, float]]) -> float:
    """Trapezoidal area under ROC points ordered by false-positive rate."""
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


@dataclass(frozen=True)
class CrossDomainMatrix:
    """AUC of seen-from-row-domain vs unseen-from-column-domain."""

    metric: MetricId
    domains: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]

    def cell(self, seen_domain: str, unseen_domain: str) -> float:
        i = self.domains.index(seen_domain)
        j = self.domains.index(unseen_domain)
        return self.values[i][j]

    def to_json_dict(self) -> dict:
        return {
            "metric": self.metric.display_name(),
            "domains": list(self.domains),
            "values": [list(row) for row in self.values],
        }


def cross_domain_matrix(
    scores_by_domain: Mapping[str, ScoreVector],
    ppl_means: Mapping[str, float] | None = None,
) -> CrossDomainMatrix:
    """Pair every domain's seen half against every domain's unseen half.

    Rows and columns are ordered by ascending mean seen perplexity when
    ppl_means is given; otherwise by ascending mean seen score of the
    scored metric (identical for perplexity metrics). Diagonal cells are
    the ordinary within-domain AUCs.
    """
    if not scores_by_domain:
        raise EmptyInputError("no domains supplied")
    metrics = {sv.metric for sv in scores_by_domain.values()}
    if len(metrics) > 1:
        names = sorted(m.display_name() for m in metrics)
        raise ValidationError(f"domains carry different metrics: {names}")
    metric = next(iter(metrics))
    halves: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for domain, sv in scores_by_domain.items():
        try:
            halves[domain] = _split_scores(sv)
        except EmptyInputError as exc:
            raise ValidationError(f"domain {domain!r}: {exc}") from exc
    if ppl_means is not None:
        missing = sorted(set(halves) - set(ppl_means))
        if missing:
            raise ValidationError(f"ppl_means missing domains: {missing}")
        sort_key = {d: float(ppl_means[d]) for d in halves}
    else:
        sort_key = {d: float(np.mean(seen)) for d, (seen, _) in halves.items()}
    domains = tuple(sorted(halves, key=lambda d: (sort_key[d], d)))
    rows = []
    for seen_domain in domains:
        seen_adj = _oriented(halves[seen_domain][0], metric.orientation)
        row = []
        for unseen_domain in domains:
            unseen_adj = _oriented(halves[unseen_domain][1], metric.orientation)
            row.append(_auc_from_arrays(seen_adj, unseen_adj))
        rows.append(tuple(row))
    return CrossDomainMatrix(metric=metric, domains=domains, values=tuple(rows))


# -- summary table ------------------------------------------------------------


@dataclass(frozen=True)
class PplStats:
    """Per-domain perplexity mean and standard deviation by class."""

    seen_mean: float
    seen_std: float
    unseen_mean: float
    unseen_std: float


@dataclass(frozen=True)
class SummaryRow:
    name: str
    kind: str  # "metric", "average", or "stat"
    cells: tuple[str, ...]
    highlights: tuple[bool, ...]


@dataclass(frozen=True)
class SummaryTable:
    domains: tuple[str, ...]
    rows: tuple[SummaryRow, ...]

    def to_text(self) -> str:
        """Aligned text table; highlighted cells carry a trailing asterisk."""
        header = ["Metric"] + list(self.domains)
        body = []
        for row in self.rows:
            cells = [
                cell + ("*" if hl else "")
                for cell, hl in zip(row.cells, row.highlights)
            ]
            body.append([row.name] + cells)
        widths = [
            max(len(line[i]) for line in [header] + body)
            for i in range(len(header))
        ]
        lines = []
        for line in [header] + body:
            lines.append(
                "  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip()
            )
        return "\n".join(lines) + "\n"

    def to_csv_rows(self) -> list[list[str]]:
        out = [["row", "kind", "domain", "value", "highlight"]]
        for row in self.rows:
            for domain, cell, hl in zip(self.domains, row.cells, row.highlights):
                out.append([row.name, row.kind, domain, cell, "1" if hl else "0"])
        return out


def _metric_sort_key(name: str) -> tuple[int, float]:
    mid = parse_metric_name(name)
    return (FAMILY_TABLE_ORDER.index(mid.family), mid.param or 0.0)


def summary_table(
    aucs: Mapping[str, Mapping[str, float]],
    ppl_stats: Mapping[str, PplStats] | None = None,
    domains: Sequence[str] | None = None,
) -> SummaryTable:
    """Metric-by-domain AUC table in the canonical row order.

    AUCs come in on [0, 1] already orientation-corrected and are shown
    x100 to one decimal; cells strictly above 60.0 carry the highlight
    flag. An Average AUC row averages the listed metrics per domain, and
    perplexity mean/std rows are appended when stats are given.
    """
    if not aucs:
        raise EmptyInputError("no AUC values supplied")
    if domains is None:
        seen_domains: list[str] = []
        for per_domain in aucs.values():
            for d in per_domain:
                if d not in seen_domains:
                    seen_domains.append(d)
        domains = seen_domains
    domains = tuple(domains)
    metric_names = sorted(aucs, key=_metric_sort_key)
    rows: list[SummaryRow] = []
    sums = {d: 0.0 for d in domains}
    counts = {d: 0 for d in domains}
    for name in metric_names:
        per_domain = aucs[name]
        cells = []
        highlights = []
        for d in domains:
            if d not in per_domain:
                cells.append("-")
                highlights.append(False)
                continue
            a = float(per_domain[d])
            if not 0.0 <= a <= 1.0:
                raise ValidationError(f"AUC for {name!r}/{d!r} out of [0, 1]: {a}")
            shown = a * 100.0
            cells.append(f"{shown:.1f}")
            highlights.append(shown > HIGHLIGHT_THRESHOLD)
            sums[d] += a
            counts[d] += 1
        rows.append(SummaryRow(name, "metric", tuple(cells), tuple(highlights)))
    avg_cells = []
    avg_highlights = []
    for d in domains:
        if counts[d] == 0:
            avg_cells.append("-")
            avg_highlights.append(False)
        else:
            shown = (sums[d] / counts[d]) * 100.0
            avg_cells.append(f"{shown:.1f}")
            avg_highlights.append(shown > HIGHLIGHT_THRESHOLD)
    rows.append(SummaryRow("Average AUC", "average", tuple(avg_cells), tuple(avg_highlights)))
    if ppl_stats is not None:
        for label, pick in (
            ("Seen PPL", lambda s: (s.seen_mean, s.seen_std)),
            ("Unseen PPL", lambda s: (s.unseen_mean, s.unseen_std)),
        ):
            cells = []
            for d in domains:
                if d in ppl_stats:
                    mean, std = pick(ppl_stats[d])
                    cells.append(f"{mean:.1f}±{std:.1f}")
                else:
                    cells.append("-")
            rows.append(
                SummaryRow(label, "stat", tuple(cells), tuple([False] * len(domains)))
            )
    return SummaryTable(domains=domains, rows=tuple(rows))


def score_value_stats(scores: ScoreVector) -> dict[str, float]:
    """Per-class mean and population std of raw metric values."""
    seen, unseen = _split_scores(scores)
    return {
        "seen_mean": float(np.mean(seen)),
        "seen_std": float(np.std(seen)),
        "unseen_mean": float(np.mean(unseen)),
        "unseen_std": float(np.std(unseen)),
    }
