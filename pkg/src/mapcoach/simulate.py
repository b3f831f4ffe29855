"""Synthetic student sessions from parameterized behavior profiles.

The generator is a steered semi-Markov process: each step draws the next
activity with weights pulled toward the profile's target time mix, then
plays it out against the evolving causal map (reads cover resource pages,
edits add correct or flawed links, quizzes are graded for real).  Run with
a scaffold engine attached, deliveries feed back into behavior through
per-kind compliance probabilities.

Everything is driven by one seeded Mersenne Twister (`random.Random`) per
student, so a (profile, seed) pair reproduces its session bit for bit.
There is no claim of cognitive fidelity; the bundled profiles only imitate
observed group-level statistics (time mix, edit effectiveness, coherence).
"""

from __future__ import annotations

import hashlib
import math
import random
from collections import deque
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .analytics import AffectObservation, Emotion
from .annotate import (
    ActionEvent,
    ActionKind,
    MapEdit,
    MapEditAction,
    SessionAnnotator,
)
from .causal import (
    CausalLink,
    CausalMap,
    EmptyQuiz,
    ExpertMap,
    Grade,
    LinkClass,
    Marking,
    QuizResult,
    QuizScope,
    Sign,
    classify_link,
    generate_quiz,
    grade_quiz,
    _iter_simple_paths,
)
from .engine import (
    ConversationTree,
    EngineConfig,
    ScaffoldDelivery,
    ScaffoldEngine,
    ScaffoldKind,
)

AFFECT_PERIOD = 20.0
CONFUSION_BUMP = 0.05
CONFUSION_BUMP_WINDOW = 120.0


@dataclass(frozen=True)
class DurationModel:
    mean: float
    spread: float

    def __post_init__(self):
        if self.mean <= 0 or self.spread < 0:
            raise ValueError("durations need positive mean and non-negative spread")

    def draw(self, rng: random.Random) -> float:
        return round(max(1.0, rng.gauss(self.mean, self.spread)), 1)


@dataclass(frozen=True)
class StudentProfile:
    student_id: str
    activity_mix: dict[ActionKind, float]
    read_effectiveness: float
    quiz_propensity: float
    scaffold_compliance: dict[ScaffoldKind, float]
    read_duration: DurationModel
    edit_duration: DurationModel
    quiz_duration: DurationModel
    note_duration: DurationModel
    expl_duration: DurationModel
    affect_baseline: dict[Emotion, float]
    wrong_sign_share: float = 0.8   # of non-shortcut flawed links, share that flip a read link's sign
    shortcut_share: float = 0.3     # of flawed links, share drawn as shortcut links
    seed: int = 0

    def __post_init__(self):
        total = sum(self.activity_mix.values())
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"activity_mix sums to {total}, expected 1")
        for name, p in [
            ("read_effectiveness", self.read_effectiveness),
            ("quiz_propensity", self.quiz_propensity),
            ("wrong_sign_share", self.wrong_sign_share),
            ("shortcut_share", self.shortcut_share),
            *[(f"compliance[{k.value}]", v) for k, v in self.scaffold_compliance.items()],
            *[(f"affect[{e.value}]", v) for e, v in self.affect_baseline.items()],
        ]:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} outside [0, 1]")


@dataclass(frozen=True)
class SessionLog:
    student_id: str
    events: tuple[ActionEvent, ...]
    affect: tuple[AffectObservation, ...]
    final_map: CausalMap
    deliveries: tuple[ScaffoldDelivery, ...]
    session_end: float


def bundled_profiles() -> dict[str, StudentProfile]:
    """Two documented default profiles calibrated to observed group rows:

    high: time mix 26.2/0.5/47/23.13/3.2 (IA 26.7, SC 47, SA 26.3),
          edit effectiveness 0.637, read->edit coherence target 0.88
    low:  time mix 37.3/0.7/46.1/14.1/1.8 (IA 38, SC 46.1, SA 15.9),
          edit effectiveness 0.454, coherence target 0.748
    """
    high_mix = _normalized_mix(read=26.2, notes=0.5, edit=47.0, quiz=23.13, expl=3.2)
    low_mix = _normalized_mix(read=37.3, notes=0.7, edit=46.1, quiz=14.1, expl=1.8)
    high = StudentProfile(
        student_id="high-default",
        activity_mix=high_mix,
        read_effectiveness=0.637,
        quiz_propensity=0.15,
        scaffold_compliance={
            ScaffoldKind.HINT1: 0.30,
            ScaffoldKind.HINT2: 0.85,
            ScaffoldKind.HINT3: 0.40,
            ScaffoldKind.HINT4: 0.40,
            ScaffoldKind.HINT5: 0.55,
            ScaffoldKind.HINT6: 0.40,
            ScaffoldKind.ENC2: 0.40,
        },
        read_duration=DurationModel(40.0, 28.0),
        edit_duration=DurationModel(18.0, 8.0),
        quiz_duration=DurationModel(45.0, 15.0),
        note_duration=DurationModel(25.0, 10.0),
        expl_duration=DurationModel(20.0, 8.0),
        affect_baseline={
            Emotion.ENGAGED_CONCENTRATION: 0.60,
            Emotion.BOREDOM: 0.12,
            Emotion.DELIGHT: 0.08,
            Emotion.CONFUSION: 0.08,
            Emotion.FRUSTRATION: 0.07,
        },
        wrong_sign_share=0.96,
    )
    low = StudentProfile(
        student_id="low-default",
        activity_mix=low_mix,
        read_effectiveness=0.454,
        quiz_propensity=0.05,
        scaffold_compliance={
            ScaffoldKind.HINT1: 0.50,
            ScaffoldKind.HINT2: 0.70,
            ScaffoldKind.HINT3: 0.40,
            ScaffoldKind.HINT4: 0.40,
            ScaffoldKind.HINT5: 0.60,
            ScaffoldKind.HINT6: 0.70,
            ScaffoldKind.ENC2: 0.30,
        },
        read_duration=DurationModel(52.0, 30.0),
        edit_duration=DurationModel(18.0, 8.0),
        quiz_duration=DurationModel(40.0, 15.0),
        note_duration=DurationModel(25.0, 10.0),
        expl_duration=DurationModel(20.0, 8.0),
        affect_baseline={
            Emotion.ENGAGED_CONCENTRATION: 0.55,
            Emotion.BOREDOM: 0.15,
            Emotion.DELIGHT: 0.06,
            Emotion.CONFUSION: 0.08,
            Emotion.FRUSTRATION: 0.10,
        },
        wrong_sign_share=0.84,
    )
    return {"high": high, "low": low}


def profiles_to_document(profiles: dict[str, StudentProfile]) -> dict:
    """JSON-ready form of a profiles mapping (durations as [mean, spread])."""
    doc = {}
    for name, p in profiles.items():
        doc[name] = {
            "activity_mix": {k.value: v for k, v in p.activity_mix.items()},
            "read_effectiveness": p.read_effectiveness,
            "quiz_propensity": p.quiz_propensity,
            "scaffold_compliance": {k.value: v for k, v in p.scaffold_compliance.items()},
            "read_duration": [p.read_duration.mean, p.read_duration.spread],
            "edit_duration": [p.edit_duration.mean, p.edit_duration.spread],
            "quiz_duration": [p.quiz_duration.mean, p.quiz_duration.spread],
            "note_duration": [p.note_duration.mean, p.note_duration.spread],
            "expl_duration": [p.expl_duration.mean, p.expl_duration.spread],
            "affect_baseline": {k.value: v for k, v in p.affect_baseline.items()},
            "wrong_sign_share": p.wrong_sign_share,
            "shortcut_share": p.shortcut_share,
        }
    return doc


def profiles_from_document(doc: dict) -> dict[str, StudentProfile]:
    profiles = {}
    for name, p in doc.items():
        profiles[name] = StudentProfile(
            student_id=name,
            activity_mix={ActionKind(k): v for k, v in p["activity_mix"].items()},
            read_effectiveness=p["read_effectiveness"],
            quiz_propensity=p["quiz_propensity"],
            scaffold_compliance={
                ScaffoldKind(k): v for k, v in p.get("scaffold_compliance", {}).items()
            },
            read_duration=DurationModel(*p["read_duration"]),
            edit_duration=DurationModel(*p["edit_duration"]),
            quiz_duration=DurationModel(*p["quiz_duration"]),
            note_duration=DurationModel(*p["note_duration"]),
            expl_duration=DurationModel(*p["expl_duration"]),
            affect_baseline={Emotion(k): v for k, v in p["affect_baseline"].items()},
            wrong_sign_share=p.get("wrong_sign_share", 0.8),
            shortcut_share=p.get("shortcut_share", 0.3),
        )
    return profiles


def _normalized_mix(read, notes, edit, quiz, expl) -> dict[ActionKind, float]:
    total = read + notes + edit + quiz + expl
    return {
        ActionKind.READ: read / total,
        ActionKind.MAKE_NOTES: notes / total,
        ActionKind.MAP_EDIT: edit / total,
        ActionKind.TAKE_QUIZ: quiz / total,
        ActionKind.QUIZ_EXPL: expl / total,
    }


# -- the session generator ----------------------------------------------------


class _Session:
    STEER_GAIN = 3.0

    def __init__(
        self,
        profile: StudentProfile,
        expert: ExpertMap,
        duration_budget: float,
        engine: Optional[ScaffoldEngine],
    ):
        self.profile = profile
        self.expert = expert
        self.budget = duration_budget
        self.engine = engine
        self.rng = random.Random(profile.seed)
        long_threshold = engine.config.long_threshold if engine else 60.0
        self.annotator = SessionAnnotator(expert, long_threshold=long_threshold)
        self.t = 0.0
        self.events: list[ActionEvent] = []
        self.deliveries: list[ScaffoldDelivery] = []
        self.time_per_kind = {kind: 0.0 for kind in ActionKind}
        self.read_pages: list[str] = []
        self.last_quiz: Optional[QuizResult] = None
        self.edits_since_quiz = 0
        self.note_counter = 0
        self.forced: deque = deque()
        self.pages = expert.page_ids()
        self._quiz_cache: dict[str, list] = {}
        self.sections = []
        for section in sorted(expert.sections()):
            try:
                scope = QuizScope.for_section(section)
                self._quiz_cache[scope.display()] = generate_quiz(expert, scope)
                self.sections.append(section)
            except EmptyQuiz:
                continue
        self._shortcuts = _shortcut_candidates(expert)

    # -- activity selection -------------------------------------------------

    def _share(self, kind: ActionKind) -> float:
        total = sum(self.time_per_kind.values())
        return self.time_per_kind[kind] / total if total > 0 else 0.0

    def _mean_duration(self, kind: ActionKind) -> float:
        profile = self.profile
        return {
            ActionKind.READ: profile.read_duration.mean,
            ActionKind.MAKE_NOTES: profile.note_duration.mean,
            ActionKind.MAP_EDIT: profile.edit_duration.mean,
            ActionKind.TAKE_QUIZ: profile.quiz_duration.mean,
            ActionKind.QUIZ_EXPL: profile.expl_duration.mean,
        }[kind]

    def _weight(self, kind: ActionKind) -> float:
        """Choice weight steered toward the target time mix.

        Dividing by the expected duration makes the target mix a fixed
        point of the realized time shares; the deficit term corrects
        drift."""
        mix = self.profile.activity_mix[kind]
        if mix <= 0:
            return 0.0
        steered = max(1e-6, mix + self.STEER_GAIN * (mix - self._share(kind)))
        return steered / self._mean_duration(kind)

    def _choose_activity(self) -> ActionKind:
        kinds = [ActionKind.READ, ActionKind.MAKE_NOTES, ActionKind.MAP_EDIT, ActionKind.TAKE_QUIZ]
        weights = []
        for kind in kinds:
            w = self._weight(kind)
            if kind is ActionKind.MAP_EDIT and not self._has_edit_move():
                w = 0.0
            if kind is ActionKind.TAKE_QUIZ:
                if not self.annotator.current_map.links:
                    w = 0.0
                else:
                    w *= 1.0 + self.profile.quiz_propensity * self.edits_since_quiz
            weights.append(w)
        if sum(weights) <= 0:
            return ActionKind.READ
        return self.rng.choices(kinds, weights=weights)[0]

    # -- edit move selection --------------------------------------------------

    def _correct_candidates(self) -> list[CausalLink]:
        """Expert links from read pages that are absent or wrong-signed on the map."""
        out = []
        current = self.annotator.current_map
        for page in sorted(set(self.read_pages)):
            for key in sorted(self.expert.links_on_page(page)):
                expert_link = self.expert.links[key]
                mine = current.links.get(key)
                if mine is None or mine.sign is not expert_link.sign:
                    out.append(expert_link)
        return out

    def _wrong_sign_candidates(self) -> list[CausalLink]:
        """Read-page expert links, absent from the map, with their sign flipped."""
        current = self.annotator.current_map
        out = []
        for page in sorted(set(self.read_pages)):
            for key in sorted(self.expert.links_on_page(page)):
                if key in current.links:
                    continue
                expert_link = self.expert.links[key]
                out.append(
                    CausalLink(source=key[0], target=key[1], sign=expert_link.sign.flipped())
                )
        return out

    def _open_shortcuts(self) -> list[CausalLink]:
        current = self.annotator.current_map
        return [
            CausalLink(source=s, target=t, sign=sign)
            for (s, t, sign) in self._shortcuts
            if (s, t) not in current.links
        ]

    def _links_by_correctness(self) -> tuple[list[CausalLink], list[CausalLink]]:
        correct, incorrect = [], []
        for link in self.annotator.current_map.sorted_links():
            if classify_link(link, self.expert) is LinkClass.CORRECT:
                correct.append(link)
            else:
                incorrect.append(link)
        return correct, incorrect

    def _has_edit_move(self) -> bool:
        return bool(
            self._correct_candidates()
            or self.annotator.current_map.links
            or self._wrong_sign_candidates()
            or self._open_shortcuts()
        )

    def _choose_edit(self) -> Optional[MapEdit]:
        """Pick the next link edit, or None when the drawn move kind has no
        candidates (the caller reads instead).

        A read_effectiveness draw decides whether the move raises the map
        score (add or sign-fix a read expert link, or delete a flawed link)
        or lowers it (add a flawed link, or delete a correct one), so the
        realized effective-edit share tracks the profile parameter."""
        if self.rng.random() < self.profile.read_effectiveness:
            return self._effective_move()
        return self._ineffective_move()

    def _effective_move(self) -> Optional[MapEdit]:
        current = self.annotator.current_map
        correct = self._correct_candidates()
        _, flawed_on_map = self._links_by_correctness()
        if correct and (not flawed_on_map or self.rng.random() < 0.7):
            expert_link = self.rng.choice(correct)
            link = CausalLink(
                source=expert_link.source, target=expert_link.target, sign=expert_link.sign
            )
            mine = current.links.get(link.key)
            if mine is not None:
                return MapEdit(MapEditAction.MODIFY_LINK, old=mine, new=link)
            return MapEdit(MapEditAction.ADD_LINK, link=link)
        if flawed_on_map:
            victim = self.rng.choice(flawed_on_map)
            return MapEdit(MapEditAction.DELETE_LINK, source=victim.source, target=victim.target)
        # nothing raises the score: keep track of finished work instead
        unmarked = [
            l
            for l in current.sorted_links()
            if l.marking is Marking.UNMARKED
            and classify_link(l, self.expert) is LinkClass.CORRECT
        ]
        if unmarked:
            pick = self.rng.choice(unmarked)
            return MapEdit(
                MapEditAction.MARK_LINK,
                source=pick.source,
                target=pick.target,
                marking=Marking.MARKED_CORRECT,
            )
        return None

    def _ineffective_move(self) -> Optional[MapEdit]:
        correct_on_map, _ = self._links_by_correctness()
        if self.rng.random() < 0.8 or not correct_on_map:
            flawed = self._draw_flawed()
            if flawed is not None:
                return flawed
        if correct_on_map:
            victim = self.rng.choice(correct_on_map)
            return MapEdit(MapEditAction.DELETE_LINK, source=victim.source, target=victim.target)
        return None

    def _wrong_sign_modifies(self) -> list[MapEdit]:
        """Flip the sign of a correctly-mapped read-page link (a coherent
        but score-lowering revision)."""
        current = self.annotator.current_map
        out = []
        for page in sorted(set(self.read_pages)):
            for key in sorted(self.expert.links_on_page(page)):
                mine = current.links.get(key)
                if mine is None or mine.sign is not self.expert.links[key].sign:
                    continue
                flipped = CausalLink(source=key[0], target=key[1], sign=mine.sign.flipped())
                out.append(MapEdit(MapEditAction.MODIFY_LINK, old=mine, new=flipped))
        return out

    def _draw_flawed(self) -> Optional[MapEdit]:
        current = self.annotator.current_map
        shortcuts = self._open_shortcuts()
        wrong_sign = [
            MapEdit(MapEditAction.ADD_LINK, link=l) for l in self._wrong_sign_candidates()
        ] or self._wrong_sign_modifies()
        if self.rng.random() < self.profile.shortcut_share and shortcuts:
            return MapEdit(MapEditAction.ADD_LINK, link=self.rng.choice(shortcuts))
        if self.rng.random() < self.profile.wrong_sign_share and wrong_sign:
            return self.rng.choice(wrong_sign)
        read_concepts = sorted(
            {
                c
                for page in set(self.read_pages)
                for key in self.expert.links_on_page(page)
                for c in key
            }
        )
        wrong_pair = []
        for s in read_concepts:
            for t in read_concepts:
                if s == t or (s, t) in current.links or (s, t) in self.expert.links:
                    continue
                sign = Sign.INCREASE if self.rng.random() < 0.5 else Sign.DECREASE
                candidate = CausalLink(source=s, target=t, sign=sign)
                if classify_link(candidate, self.expert) is LinkClass.INCORRECT:
                    wrong_pair.append(candidate)
                if len(wrong_pair) >= 4:
                    break
            if len(wrong_pair) >= 4:
                break
        if wrong_pair:
            return MapEdit(MapEditAction.ADD_LINK, link=self.rng.choice(wrong_pair))
        if wrong_sign:
            return self.rng.choice(wrong_sign)
        if shortcuts:
            return MapEdit(MapEditAction.ADD_LINK, link=self.rng.choice(shortcuts))
        return None

    # -- event emission ----------------------------------------------------------

    def _emit(self, event: ActionEvent):
        self.events.append(event)
        self.time_per_kind[event.kind] += event.duration
        self.t = event.end
        annotated = self.annotator.feed(event)
        if self.engine is not None:
            released = self.engine.observe(
                annotated, self.annotator.current_map, self.last_quiz
            )
            for delivery in released:
                self.deliveries.append(delivery)
                self._comply(delivery)

    def _do_read(self, page: Optional[str] = None):
        if page is None:
            needed = sorted(
                {
                    l.source_page
                    for l in self._uncovered_expert_links()
                }
            )
            if needed and self.rng.random() < 0.8:
                page = self.rng.choice(needed)
            else:
                page = self.rng.choice(self.pages)
        self.read_pages.append(page)
        self._emit(
            ActionEvent(
                student_id=self.profile.student_id,
                timestamp=self.t,
                kind=ActionKind.READ,
                duration=self.profile.read_duration.draw(self.rng),
                page=page,
            )
        )

    def _uncovered_expert_links(self) -> list[CausalLink]:
        current = self.annotator.current_map
        return [
            l
            for l in self.expert.map.sorted_links()
            if (l.key not in current.links or current.links[l.key].sign is not l.sign)
        ]

    def _do_notes(self):
        self.note_counter += 1
        self._emit(
            ActionEvent(
                student_id=self.profile.student_id,
                timestamp=self.t,
                kind=ActionKind.MAKE_NOTES,
                duration=self.profile.note_duration.draw(self.rng),
                note_id=f"n{self.note_counter}",
            )
        )

    def _do_edit(self, edit: Optional[MapEdit] = None):
        if edit is None:
            edit = self._choose_edit()
        if edit is None:
            self._do_read()
            return
        self.edits_since_quiz += 1
        self._emit(
            ActionEvent(
                student_id=self.profile.student_id,
                timestamp=self.t,
                kind=ActionKind.MAP_EDIT,
                duration=self.profile.edit_duration.draw(self.rng),
                edit=edit,
            )
        )

    def _quiz_questions(self, scope: QuizScope):
        key = scope.display()
        if key not in self._quiz_cache:
            self._quiz_cache[key] = generate_quiz(self.expert, scope)
        return self._quiz_cache[key]

    def _do_quiz(self):
        if self.rng.random() < 0.7 or not self.sections:
            scope = QuizScope.everything()
        else:
            scope = QuizScope.for_section(self.rng.choice(self.sections))
        questions = self._quiz_questions(scope)
        duration = self.profile.quiz_duration.draw(self.rng)
        # grade against the map as it stands when the quiz is requested
        result = grade_quiz(self.annotator.current_map, questions, scope=scope)
        self.last_quiz = result
        self.edits_since_quiz = 0
        self._emit(
            ActionEvent(
                student_id=self.profile.student_id,
                timestamp=self.t,
                kind=ActionKind.TAKE_QUIZ,
                duration=duration,
                quiz_scope=scope,
            )
        )
        self._expl_burst()

    def _expl_burst(self):
        """Review quiz answers until the explanation time share catches up."""
        if self.last_quiz is None:
            return
        mix = self.profile.activity_mix[ActionKind.QUIZ_EXPL]
        n = 0
        while (
            n < 3
            and self.t < self.budget
            and self.time_per_kind[ActionKind.QUIZ_EXPL] < mix * sum(self.time_per_kind.values())
        ):
            incorrect = [
                i for i, item in enumerate(self.last_quiz.items) if item.grade is Grade.INCORRECT
            ]
            question = incorrect[0] if incorrect else 0
            self._emit(
                ActionEvent(
                    student_id=self.profile.student_id,
                    timestamp=self.t,
                    kind=ActionKind.QUIZ_EXPL,
                    duration=self.profile.expl_duration.draw(self.rng),
                    question_ref=question,
                )
            )
            n += 1

    def _do_mark(self, source: str, target: str, marking: Marking):
        link = self.annotator.current_map.get_link(source, target)
        if link is None or link.marking is marking:
            return
        self._emit(
            ActionEvent(
                student_id=self.profile.student_id,
                timestamp=self.t,
                kind=ActionKind.MAP_EDIT,
                duration=round(max(1.0, self.rng.gauss(5.0, 2.0)), 1),
                edit=MapEdit(
                    MapEditAction.MARK_LINK, source=source, target=target, marking=marking
                ),
            )
        )

    def _do_delete(self, source: str, target: str):
        if self.annotator.current_map.get_link(source, target) is None:
            return
        self._do_edit(MapEdit(MapEditAction.DELETE_LINK, source=source, target=target))

    # -- compliance ------------------------------------------------------------

    def _comply(self, delivery: ScaffoldDelivery):
        p = self.profile.scaffold_compliance.get(delivery.kind, 0.0)
        if p <= 0.0 or self.rng.random() >= p:
            return
        kind, hints = delivery.kind, delivery.target_hints
        if kind in (ScaffoldKind.HINT2, ScaffoldKind.ENC2):
            self.forced.append(("quiz",))
        elif kind is ScaffoldKind.HINT1:
            for link in self.annotator.current_map.sorted_links():
                if (
                    link.marking is Marking.UNMARKED
                    and classify_link(link, self.expert) is LinkClass.CORRECT
                ):
                    self.forced.append(("mark", link.source, link.target, Marking.MARKED_CORRECT))
                    break
        elif kind is ScaffoldKind.HINT3 and hints and hints.source and hints.target:
            self.forced.append(("mark", hints.source, hints.target, Marking.MARKED_COULD_BE_WRONG))
        elif kind in (ScaffoldKind.HINT4, ScaffoldKind.HINT5) and hints and hints.source and hints.target:
            self.forced.append(("delete", hints.source, hints.target))
        elif kind is ScaffoldKind.HINT6 and hints and hints.page:
            self.forced.append(("read", hints.page))

    def _run_forced(self, action: tuple):
        name = action[0]
        if name == "quiz":
            if self.annotator.current_map.links:
                self._do_quiz()
        elif name == "mark":
            self._do_mark(action[1], action[2], action[3])
        elif name == "delete":
            self._do_delete(action[1], action[2])
        elif name == "read":
            self._do_read(action[1])

    # -- main loop ----------------------------------------------------------------

    def run(self) -> SessionLog:
        profile = self.profile
        self._do_read()
        if profile.activity_mix[ActionKind.MAP_EDIT] > 0:
            # lay out every concept first so link edits can follow reads directly
            for concept in self.expert.map.sorted_concepts():
                if self.t >= self.budget:
                    break
                self._emit(
                    ActionEvent(
                        student_id=profile.student_id,
                        timestamp=self.t,
                        kind=ActionKind.MAP_EDIT,
                        duration=round(max(1.0, self.rng.gauss(4.0, 1.5)), 1),
                        edit=MapEdit(MapEditAction.ADD_CONCEPT, concept=concept),
                    )
                )
        while self.t < self.budget:
            if self.forced:
                self._run_forced(self.forced.popleft())
                continue
            kind = self._choose_activity()
            if kind is ActionKind.READ:
                self._do_read()
            elif kind is ActionKind.MAKE_NOTES:
                self._do_notes()
            elif kind is ActionKind.MAP_EDIT:
                self._do_edit()
            else:
                self._do_quiz()
        session_end = self.events[-1].end
        if self.engine is not None:
            for delivery in self.engine.finalize(session_end):
                self.deliveries.append(delivery)
        affect = _affect_stream(
            self.rng, profile, session_end, self.deliveries,
            self.engine.config if self.engine else None,
        )
        return SessionLog(
            student_id=profile.student_id,
            events=tuple(self.events),
            affect=tuple(affect),
            final_map=self.annotator.current_map,
            deliveries=tuple(self.deliveries),
            session_end=session_end,
        )


def _shortcut_candidates(expert: ExpertMap) -> list[tuple[str, str, Sign]]:
    """Ordered pairs bridged by a multi-link expert path with no direct link."""
    out = []
    concepts = sorted(expert.concepts)
    for s in concepts:
        for t in concepts:
            if s == t or (s, t) in expert.links:
                continue
            signs = set()
            for path in _iter_simple_paths(expert.map, s, t):
                if len(path) >= 2:
                    sign = 1
                    for link in path:
                        sign *= link.sign.factor
                    signs.add(sign)
            for sign in sorted(signs):
                out.append((s, t, Sign.INCREASE if sign > 0 else Sign.DECREASE))
    return out


def _affect_stream(
    rng: random.Random,
    profile: StudentProfile,
    session_end: float,
    deliveries: Sequence[ScaffoldDelivery],
    engine_config: Optional[EngineConfig],
) -> list[AffectObservation]:
    """One observation per 20 s window: baseline plus jitter, with a small
    confusion bump in the windows after back-to-back deliveries."""
    bump_spans: list[tuple[float, float]] = []
    if engine_config is not None:
        ordered = sorted(deliveries, key=lambda d: d.timestamp)
        for prev, cur in zip(ordered, ordered[1:]):
            if cur.timestamp - prev.timestamp < engine_config.min_inter_scaffold_seconds:
                bump_spans.append((cur.timestamp, cur.timestamp + CONFUSION_BUMP_WINDOW))
    count = math.ceil(session_end / AFFECT_PERIOD)
    observations = []
    for i in range(count):
        ts = i * AFFECT_PERIOD
        likelihoods = {}
        for emotion in Emotion:
            value = profile.affect_baseline[emotion] + rng.uniform(-0.02, 0.02)
            if emotion is Emotion.CONFUSION and any(a <= ts <= b for a, b in bump_spans):
                value += CONFUSION_BUMP
            likelihoods[emotion] = min(1.0, max(0.0, round(value, 4)))
        observations.append(AffectObservation(timestamp=ts, likelihoods=likelihoods))
    return observations


def simulate_session(
    profile: StudentProfile,
    expert: ExpertMap,
    duration_budget: float,
    engine: Optional[ScaffoldEngine] = None,
) -> SessionLog:
    if duration_budget <= 0:
        raise ValueError("duration_budget must be positive")
    return _Session(profile, expert, duration_budget, engine).run()


@dataclass(frozen=True)
class CohortResult:
    sessions: tuple[SessionLog, ...]
    grouping: dict[str, str]


def derive_seed(cohort_seed: int, student_id: str) -> int:
    """Stable per-student seed from the cohort seed (SHA-256 based, so it is
    identical across platforms and runs)."""
    digest = hashlib.sha256(f"{cohort_seed}:{student_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def simulate_cohort(
    n_high: int,
    n_low: int,
    seed: int,
    expert: ExpertMap,
    duration_budget: float = 1500.0,
    engine_config: Optional[EngineConfig] = None,
    profiles: Optional[dict[str, StudentProfile]] = None,
    trees: Optional[dict[ScaffoldKind, ConversationTree]] = None,
) -> CohortResult:
    """Simulate n_high + n_low students with derived per-student seeds.

    Pass an engine_config to run the scaffold engine in the loop; without
    one, sessions contain no deliveries.
    """
    if n_high < 1 or n_low < 1:
        raise ValueError("cohort needs at least one student per group")
    defaults = profiles or bundled_profiles()
    sessions = []
    grouping: dict[str, str] = {}
    for group, base, count in (("High", defaults["high"], n_high), ("Low", defaults["low"], n_low)):
        for i in range(count):
            student_id = f"{group.lower()}-{i:03d}"
            profile = replace(
                base, student_id=student_id, seed=derive_seed(seed, student_id)
            )
            engine = (
                ScaffoldEngine(student_id, expert, engine_config, trees=trees)
                if engine_config is not None
                else None
            )
            sessions.append(simulate_session(profile, expert, duration_budget, engine))
            grouping[student_id] = group
    return CohortResult(sessions=tuple(sessions), grouping=grouping)
