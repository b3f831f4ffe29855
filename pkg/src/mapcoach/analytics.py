"""Outcome measures and scaffold-impact analysis: normalized learning gain,
median-split grouping, scaffold-anchored before/after intervals, map-score
slope, and affect aggregation."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Sequence

from .annotate import ActionKind, AnnotatedEvent
from .engine import ScaffoldDelivery, ScaffoldKind
from .stats import (  # noqa: F401  (re-exported as this module's public surface)
    DegenerateCovariate,
    DegenerateVariance,
    TestResult,
    cohens_d,
    one_way_ancova,
    one_way_anova,
    pooled_t,
    t_two_sided_p,
)


class DegenerateDenominator(Exception):
    pass


class InsufficientEdits(Exception):
    pass


class NoObservationsInSpan(Exception):
    pass


def nlg(pre: float, post: float, max_score: float) -> float:
    """Normalized learning gain: (post - pre) / (max - pre)."""
    if pre >= max_score:
        raise DegenerateDenominator(f"pre {pre} >= max {max_score}")
    return (post - pre) / (max_score - pre)


@dataclass(frozen=True)
class OutcomeRecord:
    student_id: str
    pre: float
    post: float
    max_score: float
    final_map_score: int = 0

    @property
    def nlg(self) -> float:
        return nlg(self.pre, self.post, self.max_score)


# -- grouping ---------------------------------------------------------------


@dataclass(frozen=True)
class MedianSplit:
    median: float
    high: frozenset[str]
    low: frozenset[str]
    excluded: frozenset[str]

    def grouping(self) -> dict[str, str]:
        out = {s: "High" for s in self.high}
        out.update({s: "Low" for s in self.low})
        return out


def median_split(final_scores: Mapping[str, float], band: float = 1.0) -> MedianSplit:
    """Split students on the median of their final map scores.

    Students within `band` of the median are excluded to separate the
    groups; the median is computed on everyone before exclusion.
    """
    if len(final_scores) < 2:
        raise ValueError("need at least 2 students")
    median = statistics.median(final_scores.values())
    high, low, excluded = set(), set(), set()
    for student, score in final_scores.items():
        if abs(score - median) <= band:
            excluded.add(student)
        elif score > median:
            high.add(student)
        else:
            low.add(student)
    return MedianSplit(
        median=median,
        high=frozenset(high),
        low=frozenset(low),
        excluded=frozenset(excluded),
    )


# -- before/after intervals ------------------------------------------------------


class Phase(str, Enum):
    BEFORE = "before"
    AFTER = "after"


@dataclass(frozen=True)
class ScaffoldInterval:
    student_id: str
    kind: ScaffoldKind
    phase: Phase
    span: tuple[float, float]
    ordinal: int  # 1-based occurrence number of this kind for the student


def segment_intervals(
    deliveries: Sequence[ScaffoldDelivery], session_end: float
) -> list[ScaffoldInterval]:
    """Before/after intervals anchored at each delivery.

    A delivery's before interval runs from the previous delivery of any kind
    (or session start) to the delivery; its after interval runs to the next
    delivery of any kind (or session end).
    """
    ordered = sorted(deliveries, key=lambda d: d.timestamp)
    ordinals: dict[ScaffoldKind, int] = {}
    out: list[ScaffoldInterval] = []
    for i, d in enumerate(ordered):
        ordinals[d.kind] = ordinals.get(d.kind, 0) + 1
        before_start = ordered[i - 1].timestamp if i > 0 else 0.0
        after_end = ordered[i + 1].timestamp if i + 1 < len(ordered) else session_end
        out.append(
            ScaffoldInterval(
                student_id=d.student_id,
                kind=d.kind,
                phase=Phase.BEFORE,
                span=(before_start, d.timestamp),
                ordinal=ordinals[d.kind],
            )
        )
        out.append(
            ScaffoldInterval(
                student_id=d.student_id,
                kind=d.kind,
                phase=Phase.AFTER,
                span=(d.timestamp, after_end),
                ordinal=ordinals[d.kind],
            )
        )
    return out


def map_score_slope(scores: Sequence[float]) -> float:
    """OLS slope of map score against edit ordinal 0, 1, 2, ..."""
    n = len(scores)
    if n < 2:
        raise InsufficientEdits(f"need at least 2 edits, got {n}")
    mean_x = (n - 1) / 2.0
    mean_y = statistics.fmean(scores)
    sxy = sum((i - mean_x) * (y - mean_y) for i, y in enumerate(scores))
    sxx = sum((i - mean_x) ** 2 for i in range(n))
    return sxy / sxx


def interval_edit_scores(
    annotated: Sequence[AnnotatedEvent], span: tuple[float, float]
) -> list[int]:
    """Map scores after each map edit falling in [start, end) of a span.

    Half-open spans keep the interval tiling exact: an edit at a delivery
    time belongs to the interval that starts there."""
    start, end = span
    return [
        e.map_score_after
        for e in annotated
        if e.kind is ActionKind.MAP_EDIT and start <= e.timestamp < end
    ]


# -- affect -----------------------------------------------------------------------


class Emotion(str, Enum):
    ENGAGED_CONCENTRATION = "engaged_concentration"
    BOREDOM = "boredom"
    DELIGHT = "delight"
    CONFUSION = "confusion"
    FRUSTRATION = "frustration"


@dataclass(frozen=True)
class AffectObservation:
    timestamp: float
    likelihoods: Mapping[Emotion, float]


def affect_aggregate(
    observations: Sequence[AffectObservation], span: tuple[float, float]
) -> dict[Emotion, float]:
    """Mean likelihood per emotion over observations inside [start, end]."""
    start, end = span
    if end < start:
        raise NoObservationsInSpan(f"empty span ({start}, {end})")
    hits = [o for o in observations if start <= o.timestamp <= end]
    if not hits:
        raise NoObservationsInSpan(f"no observations in ({start}, {end})")
    return {
        emotion: statistics.fmean(o.likelihoods[emotion] for o in hits)
        for emotion in Emotion
    }


# -- scaffold impact --------------------------------------------------------------


@dataclass(frozen=True)
class StudentRecord:
    """One student's complete analyzed session, as the impact analysis needs it."""

    student_id: str
    annotated: Sequence[AnnotatedEvent]
    deliveries: Sequence[ScaffoldDelivery]
    affect: Sequence[AffectObservation] = ()
    session_end: float = 0.0


@dataclass(frozen=True)
class ImpactCell:
    group: str
    kind: ScaffoldKind
    ordinal: Optional[int]  # None = pooled across ordinals
    phase: Phase
    mean_slope: Optional[float]
    n_students: int
    affect_means: dict[Emotion, float] = field(default_factory=dict)


def scaffold_impact(
    records: Sequence[StudentRecord],
    grouping: Mapping[str, str],
    max_ordinal: int = 3,
) -> list[ImpactCell]:
    """Average map-score slope and affect in before/after intervals, per
    scaffold kind, per group, per ordinal (1..max_ordinal) and pooled.

    Slopes average over students with at least two edits in the interval;
    a cell with no eligible students reports mean_slope None.
    """
    # (group, kind, ordinal-or-None, phase) -> accumulators
    slopes: dict[tuple, list[float]] = {}
    affects: dict[tuple, list[dict[Emotion, float]]] = {}
    for record in records:
        group = grouping.get(record.student_id)
        if group is None:
            continue
        intervals = segment_intervals(record.deliveries, record.session_end)
        for iv in intervals:
            keys = [(group, iv.kind, None, iv.phase)]
            if iv.ordinal <= max_ordinal:
                keys.append((group, iv.kind, iv.ordinal, iv.phase))
            scores = interval_edit_scores(record.annotated, iv.span)
            if len(scores) >= 2:
                slope = map_score_slope(scores)
                for key in keys:
                    slopes.setdefault(key, []).append(slope)
            try:
                means = affect_aggregate(record.affect, iv.span)
            except NoObservationsInSpan:
                means = None
            if means is not None:
                for key in keys:
                    affects.setdefault(key, []).append(means)
    cells = []
    for key in sorted(set(slopes) | set(affects), key=_impact_key):
        group, kind, ordinal, phase = key
        slope_values = slopes.get(key, [])
        affect_values = affects.get(key, [])
        affect_means = {}
        if affect_values:
            affect_means = {
                e: statistics.fmean(m[e] for m in affect_values) for e in Emotion
            }
        cells.append(
            ImpactCell(
                group=group,
                kind=kind,
                ordinal=ordinal,
                phase=phase,
                mean_slope=statistics.fmean(slope_values) if slope_values else None,
                n_students=len(slope_values),
                affect_means=affect_means,
            )
        )
    return cells


def _impact_key(key: tuple) -> tuple:
    group, kind, ordinal, phase = key
    return (group, kind.value, ordinal if ordinal is not None else 0, phase.value)
