"""Differential sequence mining over collapsed token streams.

Patterns are ordered label sequences matched with a gap constraint: at most
`max_gap` non-matching tokens may sit between consecutive pattern elements.
Occurrences are counted greedily left to right and never overlap; once a
match is counted, every position up to its last matched token is retired.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import fmean
from typing import Optional, Sequence

from .stats import t_two_sided_p


class EmptyPattern(Exception):
    pass


@dataclass(frozen=True)
class TokenSequence:
    student_id: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class DsmPattern:
    pattern: tuple[str, ...]
    s_support_a: float
    s_support_b: float
    i_support_a: float
    i_support_b: float
    t_statistic: float
    p_value: float
    effect_size: float
    frequent_in: str  # "a", "b", or "both"


def _find_match(
    tokens: Sequence[str], pattern: Sequence[str], start: int, max_gap: int
) -> Optional[tuple[int, ...]]:
    """Earliest (lexicographically smallest) match with all positions >= start."""
    n = len(tokens)

    def extend(positions: list[int], idx: int) -> Optional[tuple[int, ...]]:
        if idx == len(pattern):
            return tuple(positions)
        lo = positions[-1] + 1
        hi = min(n, positions[-1] + max_gap + 2)
        for p in range(lo, hi):
            if tokens[p] == pattern[idx]:
                positions.append(p)
                found = extend(positions, idx + 1)
                if found is not None:
                    return found
                positions.pop()
        return None

    for p0 in range(start, n):
        if tokens[p0] == pattern[0]:
            found = extend([p0], 1)
            if found is not None:
                return found
    return None


def count_occurrences(tokens: Sequence[str], pattern: Sequence[str], max_gap: int) -> int:
    """Greedy non-overlapping occurrence count under the gap constraint."""
    if not pattern:
        raise EmptyPattern("pattern must contain at least one label")
    if max_gap < 0:
        raise ValueError("max_gap must be >= 0")
    count = 0
    start = 0
    while True:
        match = _find_match(tokens, pattern, start, max_gap)
        if match is None:
            return count
        count += 1
        start = match[-1] + 1


def contains_pattern(tokens: Sequence[str], pattern: Sequence[str], max_gap: int) -> bool:
    if not pattern:
        raise EmptyPattern("pattern must contain at least one label")
    return _find_match(tokens, pattern, 0, max_gap) is not None


def _s_support(group: Sequence[TokenSequence], pattern: tuple[str, ...], max_gap: int) -> float:
    hits = sum(1 for seq in group if contains_pattern(seq.tokens, pattern, max_gap))
    return hits / len(group)


def _t_and_p(counts_a: list[int], counts_b: list[int]) -> tuple[float, float, float]:
    """Pooled two-sample t on per-student counts, with |d| as effect size."""
    n_a, n_b = len(counts_a), len(counts_b)
    df = n_a + n_b - 2
    mean_a, mean_b = fmean(counts_a), fmean(counts_b)
    ssw = sum((v - mean_a) ** 2 for v in counts_a) + sum((v - mean_b) ** 2 for v in counts_b)
    diff = mean_a - mean_b
    if df <= 0 or ssw == 0.0:
        if diff == 0.0:
            return 0.0, 1.0, 0.0
        return math.copysign(math.inf, diff), 0.0, math.inf
    sp = math.sqrt(ssw / df)
    t = diff / (sp * math.sqrt(1.0 / n_a + 1.0 / n_b))
    return t, t_two_sided_p(t, df), abs(diff) / sp


def mine(
    group_a: Sequence[TokenSequence],
    group_b: Sequence[TokenSequence],
    max_gap: int = 1,
    s_threshold: float = 0.5,
    max_len: int = 4,
) -> list[DsmPattern]:
    """Mine every pattern of length 2..max_len whose s-support clears the
    threshold in at least one group.

    Patterns grow by appending labels, pruning on the best group s-support
    (appending can only lower it).  Output is ordered by descending |t|,
    then lexicographically, so reports are reproducible.
    """
    if not group_a or not group_b:
        raise ValueError("both groups must be nonempty")
    if not 0.0 < s_threshold <= 1.0:
        raise ValueError("s_threshold must be in (0, 1]")
    if max_len < 2:
        raise ValueError("max_len must be >= 2")
    if any(not seq.tokens for seq in list(group_a) + list(group_b)):
        raise ValueError("token sequences must be nonempty")
    alphabet = sorted(
        {label for seq in list(group_a) + list(group_b) for label in seq.tokens}
    )
    frontier = [
        (label,)
        for label in alphabet
        if max(
            _s_support(group_a, (label,), max_gap),
            _s_support(group_b, (label,), max_gap),
        )
        >= s_threshold
    ]
    results: list[DsmPattern] = []
    length = 1
    while frontier and length < max_len:
        length += 1
        next_frontier: list[tuple[str, ...]] = []
        for stem in frontier:
            for label in alphabet:
                pattern = stem + (label,)
                s_a = _s_support(group_a, pattern, max_gap)
                s_b = _s_support(group_b, pattern, max_gap)
                if max(s_a, s_b) < s_threshold:
                    continue
                next_frontier.append(pattern)
                counts_a = [count_occurrences(seq.tokens, pattern, max_gap) for seq in group_a]
                counts_b = [count_occurrences(seq.tokens, pattern, max_gap) for seq in group_b]
                t, p, d = _t_and_p(counts_a, counts_b)
                frequent = (
                    "both"
                    if s_a >= s_threshold and s_b >= s_threshold
                    else ("a" if s_a >= s_threshold else "b")
                )
                results.append(
                    DsmPattern(
                        pattern=pattern,
                        s_support_a=s_a,
                        s_support_b=s_b,
                        i_support_a=fmean(counts_a),
                        i_support_b=fmean(counts_b),
                        t_statistic=t,
                        p_value=p,
                        effect_size=d,
                        frequent_in=frequent,
                    )
                )
        frontier = next_frontier
    results.sort(key=lambda r: (-abs(r.t_statistic), r.pattern))
    return results
