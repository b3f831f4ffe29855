"""Action-log annotation: map each raw event to its cognitive process,
tag map edits with effectiveness and coherence, collapse repeated actions
into -Mult tokens, and compute per-activity time distributions."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Optional, Sequence

from .causal import (
    CausalLink,
    CausalMap,
    Concept,
    ExpertMap,
    MapError,
    Marking,
    QuizScope,
    map_score,
)


class ActionKind(str, Enum):
    READ = "read"
    MAKE_NOTES = "make_notes"
    MAP_EDIT = "map_edit"
    TAKE_QUIZ = "take_quiz"
    QUIZ_EXPL = "quiz_expl"


class MapEditAction(str, Enum):
    ADD_CONCEPT = "add_concept"
    DELETE_CONCEPT = "delete_concept"
    ADD_LINK = "add_link"
    DELETE_LINK = "delete_link"
    MODIFY_LINK = "modify_link"
    MARK_LINK = "mark_link"


class Process(str, Enum):
    IA = "IA"  # information acquisition: reading, notes
    SC = "SC"  # solution construction: map edits
    SA = "SA"  # solution assessment: quizzes, explanations


class Effectiveness(str, Enum):
    EFF = "eff"
    INEFF = "ineff"
    NEUTRAL = "neutral"


PROCESS_FOR_KIND = {
    ActionKind.READ: Process.IA,
    ActionKind.MAKE_NOTES: Process.IA,
    ActionKind.MAP_EDIT: Process.SC,
    ActionKind.TAKE_QUIZ: Process.SA,
    ActionKind.QUIZ_EXPL: Process.SA,
}


@dataclass(frozen=True)
class MapEdit:
    """One map-edit payload; fields beyond `action` are action-specific."""

    action: MapEditAction
    concept: Optional[Concept] = None          # add_concept
    concept_id: Optional[str] = None           # delete_concept
    link: Optional[CausalLink] = None          # add_link
    source: Optional[str] = None               # delete_link / mark_link
    target: Optional[str] = None
    old: Optional[CausalLink] = None           # modify_link
    new: Optional[CausalLink] = None
    marking: Optional[Marking] = None          # mark_link

    def touched_pair(self) -> Optional[tuple[str, str]]:
        """The (source, target) pair left in the map by an add/modify edit."""
        if self.action is MapEditAction.ADD_LINK:
            return self.link.key
        if self.action is MapEditAction.MODIFY_LINK:
            return self.new.key
        return None


@dataclass(frozen=True)
class ActionEvent:
    student_id: str
    timestamp: float
    kind: ActionKind
    duration: float
    page: Optional[str] = None                 # read
    note_id: Optional[str] = None              # make_notes
    edit: Optional[MapEdit] = None             # map_edit
    quiz_scope: Optional[QuizScope] = None     # take_quiz
    question_ref: Optional[int] = None         # quiz_expl

    @property
    def end(self) -> float:
        return self.timestamp + self.duration


@dataclass(frozen=True)
class AnnotatedEvent:
    base: ActionEvent
    process: Process
    effectiveness: Effectiveness
    long: bool
    map_score_after: int
    coherent: Optional[bool] = None

    @property
    def kind(self) -> ActionKind:
        return self.base.kind

    @property
    def timestamp(self) -> float:
        return self.base.timestamp

    @property
    def duration(self) -> float:
        return self.base.duration


class ReplayError(Exception):
    def __init__(self, index: int, message: str):
        super().__init__(f"event {index}: {message}")
        self.index = index


DEFAULT_LONG_THRESHOLD = 60.0


def apply_edit(cmap: CausalMap, edit: MapEdit) -> CausalMap:
    """Apply one edit to a map, raising MapError on inconsistent edits.

    Deleting a concept drops its incident links; modifying a link keeps the
    old link's marking attached to the replacement."""
    a = edit.action
    if a is MapEditAction.ADD_CONCEPT:
        return cmap.with_concept(edit.concept)
    if a is MapEditAction.DELETE_CONCEPT:
        return cmap.without_concept(edit.concept_id)
    if a is MapEditAction.ADD_LINK:
        link = edit.link
        if not (cmap.has_concept(link.source) and cmap.has_concept(link.target)):
            raise MapError(f"link {link.display()} references a missing concept")
        return cmap.with_link(link)
    if a is MapEditAction.DELETE_LINK:
        return cmap.without_link(edit.source, edit.target)
    if a is MapEditAction.MODIFY_LINK:
        old = cmap.get_link(edit.old.source, edit.old.target)
        if old is None or old.triple != edit.old.triple:
            raise MapError(f"no link {edit.old.display()} to modify")
        new = replace(edit.new, marking=old.marking)
        if not (cmap.has_concept(new.source) and cmap.has_concept(new.target)):
            raise MapError(f"link {new.display()} references a missing concept")
        return cmap.with_replaced_link(old.key, new)
    if a is MapEditAction.MARK_LINK:
        link = cmap.get_link(edit.source, edit.target)
        if link is None:
            raise MapError(f"no link {edit.source}->{edit.target} to mark")
        return cmap.with_replaced_link(link.key, replace(link, marking=edit.marking))
    raise MapError(f"unknown edit action {a}")


class SessionAnnotator:
    """Streaming annotator: replays edits on an evolving map and labels each
    event as it arrives.  Used both for offline log annotation and for
    engine-in-the-loop simulation so the two paths agree exactly."""

    def __init__(self, expert: ExpertMap, long_threshold: float = DEFAULT_LONG_THRESHOLD):
        self.expert = expert
        self.long_threshold = long_threshold
        self.current_map = CausalMap()
        self.score = 0
        self._index = 0
        self._last_timestamp: Optional[float] = None

    def feed(self, event: ActionEvent) -> AnnotatedEvent:
        if self._last_timestamp is not None and event.timestamp < self._last_timestamp:
            raise ReplayError(self._index, "events out of timestamp order")
        self._last_timestamp = event.timestamp
        effectiveness = Effectiveness.NEUTRAL
        if event.kind is ActionKind.MAP_EDIT:
            try:
                new_map = apply_edit(self.current_map, event.edit)
            except MapError as exc:
                raise ReplayError(self._index, str(exc)) from exc
            new_score = map_score(new_map, self.expert)
            if new_score > self.score:
                effectiveness = Effectiveness.EFF
            elif new_score < self.score:
                effectiveness = Effectiveness.INEFF
            self.current_map, self.score = new_map, new_score
        long = event.kind is ActionKind.READ and event.duration >= self.long_threshold
        self._index += 1
        return AnnotatedEvent(
            base=event,
            process=PROCESS_FOR_KIND[event.kind],
            effectiveness=effectiveness,
            long=long,
            map_score_after=self.score,
        )


def annotate_session(
    events: Sequence[ActionEvent],
    expert: ExpertMap,
    long_threshold: float = DEFAULT_LONG_THRESHOLD,
) -> list[AnnotatedEvent]:
    annotator = SessionAnnotator(expert, long_threshold=long_threshold)
    return [annotator.feed(e) for e in events]


def replay_map(events: Sequence[ActionEvent]) -> CausalMap:
    """Replay just the edits of a session and return the final map."""
    cmap = CausalMap()
    for i, event in enumerate(events):
        if event.kind is ActionKind.MAP_EDIT:
            try:
                cmap = apply_edit(cmap, event.edit)
            except MapError as exc:
                raise ReplayError(i, str(exc)) from exc
    return cmap


def tag_coherence(
    annotated: Sequence[AnnotatedEvent],
    expert: ExpertMap,
    lookback: Optional[float] = None,
) -> list[AnnotatedEvent]:
    """Mark add/modify link edits as coherent when an earlier read covered a
    page supporting a link with the same endpoints.

    Endpoints only: a wrong-sign link from a read page still counts as
    supported by that reading.  `lookback` bounds, in seconds, how far back
    reads are considered; None means the whole session.
    """
    out: list[AnnotatedEvent] = []
    reads: list[tuple[float, str]] = []
    for event in annotated:
        if event.kind is ActionKind.READ and event.base.page is not None:
            reads.append((event.timestamp, event.base.page))
        pair = event.base.edit.touched_pair() if event.kind is ActionKind.MAP_EDIT else None
        if pair is None:
            out.append(event)
            continue
        horizon = None if lookback is None else event.timestamp - lookback
        coherent = False
        for ts, page in reads:
            if horizon is not None and ts < horizon:
                continue
            if pair in expert.links_on_page(page):
                coherent = True
                break
        out.append(replace(event, coherent=coherent))
    return out


# -- collapsed token streams -------------------------------------------------


@dataclass(frozen=True)
class CollapsedToken:
    label: str
    count: int
    span: tuple[float, float]


def event_label(event: AnnotatedEvent) -> str:
    """Token label for one annotated event (before -Mult collapsing)."""
    kind = event.kind
    if kind is ActionKind.READ:
        return "Read"
    if kind is ActionKind.MAKE_NOTES:
        return "Note"
    if kind is ActionKind.TAKE_QUIZ:
        return "QuizTaken"
    if kind is ActionKind.QUIZ_EXPL:
        return "QuizExpl"
    action = event.base.edit.action
    if action is MapEditAction.MARK_LINK:
        base = "Mark"
    elif action in (MapEditAction.ADD_CONCEPT, MapEditAction.DELETE_CONCEPT):
        base = "ConceptEdit"
    else:
        base = "LinkEdit"
    if event.effectiveness is Effectiveness.EFF:
        return base + "-Eff"
    if event.effectiveness is Effectiveness.INEFF:
        return base + "-Ineff"
    return base


def collapse_labeled(items: Sequence[tuple[str, float, float]]) -> list[CollapsedToken]:
    """Collapse adjacent identical labels in (label, start, end) triples."""
    tokens: list[CollapsedToken] = []
    for label, start, end in items:
        if tokens and _base_label(tokens[-1].label) == label:
            prev = tokens[-1]
            tokens[-1] = CollapsedToken(
                label=label + "-Mult",
                count=prev.count + 1,
                span=(prev.span[0], end),
            )
        else:
            tokens.append(CollapsedToken(label=label, count=1, span=(start, end)))
    return tokens


def _base_label(label: str) -> str:
    return label[: -len("-Mult")] if label.endswith("-Mult") else label


def collapse(annotated: Sequence[AnnotatedEvent]) -> list[CollapsedToken]:
    """Merge runs of same-labeled events into single tokens tagged -Mult."""
    return collapse_labeled(
        [(event_label(e), e.timestamp, e.base.end) for e in annotated]
    )


# -- time distribution ---------------------------------------------------------


class EmptySession(Exception):
    pass


def time_distribution(annotated: Iterable[AnnotatedEvent]) -> dict[ActionKind, float]:
    """Fraction of total logged time spent in each of the five activities."""
    totals = {kind: 0.0 for kind in ActionKind}
    for event in annotated:
        totals[event.kind] += event.duration
    grand = sum(totals.values())
    if grand <= 0:
        raise EmptySession("no logged time in session")
    return {kind: t / grand for kind, t in totals.items()}
