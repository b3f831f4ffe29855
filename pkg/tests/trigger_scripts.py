"""Scripted event sequences, one per scaffold kind, used by the engine tests
and the acceptance suite.  Each script yields exactly one delivery of its
kind under the stated config when replayed through the pipeline."""

from __future__ import annotations

from mapcoach.annotate import ActionEvent, ActionKind, MapEdit, MapEditAction
from mapcoach.causal import (
    CausalLink,
    CausalMap,
    Concept,
    ExpertMap,
    Marking,
    QuizScope,
    Sign,
)
from mapcoach.engine import EngineConfig, ScaffoldKind

SID = "scripted"


def script_expert() -> ExpertMap:
    concepts = [
        Concept(id="a", name="A", section="s1"),
        Concept(id="b", name="B", section="s1"),
        Concept(id="c", name="C", section="s1"),
        Concept(id="d", name="D", section="s2"),
    ]
    links = [
        CausalLink(source="a", target="b", sign=Sign.INCREASE, source_page="pa"),
        CausalLink(source="b", target="c", sign=Sign.INCREASE, source_page="pb"),
        CausalLink(source="a", target="d", sign=Sign.DECREASE, source_page="pd"),
    ]
    return ExpertMap(CausalMap(concepts, links))


class _Script:
    def __init__(self):
        self.t = 0.0
        self.events: list[ActionEvent] = []

    def _emit(self, kind, duration, *, at=None, **payload):
        if at is not None:
            self.t = at
        event = ActionEvent(
            student_id=SID, timestamp=self.t, kind=kind, duration=duration, **payload
        )
        self.events.append(event)
        self.t = event.end
        return self

    def concepts(self, expert: ExpertMap):
        for concept in expert.map.sorted_concepts():
            self._emit(
                ActionKind.MAP_EDIT, 2.0,
                edit=MapEdit(MapEditAction.ADD_CONCEPT, concept=concept),
            )
        return self

    def read(self, page, duration, at=None):
        return self._emit(ActionKind.READ, duration, at=at, page=page)

    def note(self, duration=5.0):
        return self._emit(ActionKind.MAKE_NOTES, duration, note_id="n1")

    def add(self, source, target, sign):
        return self._emit(
            ActionKind.MAP_EDIT, 5.0,
            edit=MapEdit(
                MapEditAction.ADD_LINK,
                link=CausalLink(source=source, target=target, sign=sign),
            ),
        )

    def modify(self, old, new):
        return self._emit(
            ActionKind.MAP_EDIT, 5.0,
            edit=MapEdit(MapEditAction.MODIFY_LINK, old=old, new=new),
        )

    def mark(self, source, target, marking, at=None):
        return self._emit(
            ActionKind.MAP_EDIT, 3.0, at=at,
            edit=MapEdit(
                MapEditAction.MARK_LINK, source=source, target=target, marking=marking
            ),
        )

    def quiz(self, duration=10.0):
        return self._emit(
            ActionKind.TAKE_QUIZ, duration, quiz_scope=QuizScope.everything()
        )


INC, DEC = Sign.INCREASE, Sign.DECREASE


def _link(source, target, sign):
    return CausalLink(source=source, target=target, sign=sign)


def build_scripts(expert: ExpertMap) -> dict[ScaffoldKind, tuple[list, EngineConfig]]:
    """kind -> (events, engine config) producing exactly one delivery."""
    default = EngineConfig()
    scripts: dict[ScaffoldKind, tuple[list, EngineConfig]] = {}

    s = _Script().concepts(expert).read("pa", 90.0).add("a", "b", DEC)
    scripts[ScaffoldKind.HINT2] = (s.events, default)

    s = _Script().concepts(expert).read("pa", 90.0).add("a", "b", INC)
    scripts[ScaffoldKind.ENC2] = (s.events, default)

    s = _Script().concepts(expert).read("pa", 30.0).add("a", "b", DEC).quiz()
    scripts[ScaffoldKind.HINT3] = (s.events, default)

    s = (
        _Script()
        .concepts(expert)
        .read("pa", 30.0)
        .add("a", "b", INC)
        .mark("a", "b", Marking.MARKED_COULD_BE_WRONG)
        .modify(_link("a", "b", INC), _link("a", "c", INC))
        .quiz()
    )
    scripts[ScaffoldKind.HINT4] = (s.events, default)

    def hint5_events():
        return (
            _Script()
            .concepts(expert)
            .read("pa", 30.0)
            .add("a", "b", INC)
            .mark("a", "b", Marking.MARKED_COULD_BE_WRONG)
            .modify(_link("a", "b", INC), _link("a", "b", DEC))
            .quiz()
            .events
        )

    scripts[ScaffoldKind.HINT5] = (hint5_events(), default)
    scripts[ScaffoldKind.ENC3] = (hint5_events(), EngineConfig(enc3_every=1))

    s = (
        _Script()
        .concepts(expert)
        .read("pa", 30.0)
        .add("a", "b", DEC)
        .note()
        .quiz()
        .read("pb", 90.0)
    )
    scripts[ScaffoldKind.HINT6] = (s.events, default)

    s = _Script().concepts(expert).read("pa", 30.0).add("a", "b", INC).quiz()
    quiz_time = s.events[-1].timestamp
    s.read("pa", 30.0, at=quiz_time + 125.0)
    scripts[ScaffoldKind.HINT1] = (s.events, default)

    s = _Script().concepts(expert).read("pa", 30.0).add("a", "b", INC).quiz()
    s.mark("a", "b", Marking.MARKED_CORRECT)
    s.read("pb", 30.0).add("b", "c", INC).quiz()
    scripts[ScaffoldKind.ENC1] = (s.events, default)

    return scripts


def suppression_script(expert: ExpertMap) -> tuple[list, EngineConfig]:
    """Two back-to-back hint2 triggers inside the inter-scaffold window;
    only the first may deliver."""
    config = EngineConfig(long_threshold=10.0)
    s = (
        _Script()
        .concepts(expert)
        .read("pa", 12.0)
        .add("a", "b", DEC)
        .read("pd", 12.0)
        .add("a", "d", INC)
    )
    return s.events, config
