import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mapcoach.annotate import (
    ActionEvent,
    ActionKind,
    Effectiveness,
    EmptySession,
    MapEdit,
    MapEditAction,
    PROCESS_FOR_KIND,
    Process,
    ReplayError,
    annotate_session,
    collapse,
    collapse_labeled,
    replay_map,
    tag_coherence,
    time_distribution,
)
from mapcoach.causal import CausalLink, Concept, Marking, QuizScope, Sign, map_score

INC, DEC = Sign.INCREASE, Sign.DECREASE


def ev(t, kind, duration=5.0, **payload):
    return ActionEvent(student_id="s", timestamp=t, kind=kind, duration=duration, **payload)


def add_concept(t, cid):
    return ev(t, ActionKind.MAP_EDIT, edit=MapEdit(
        MapEditAction.ADD_CONCEPT, concept=Concept(id=cid, name=cid.upper(), section="s1")))


def add_link(t, s, tgt, sign):
    return ev(t, ActionKind.MAP_EDIT, edit=MapEdit(
        MapEditAction.ADD_LINK, link=CausalLink(source=s, target=tgt, sign=sign)))


def delete_link(t, s, tgt):
    return ev(t, ActionKind.MAP_EDIT, edit=MapEdit(MapEditAction.DELETE_LINK, source=s, target=tgt))


def delete_concept(t, cid):
    return ev(t, ActionKind.MAP_EDIT, edit=MapEdit(MapEditAction.DELETE_CONCEPT, concept_id=cid))


def read(t, page="pa", duration=30.0):
    return ev(t, ActionKind.READ, duration=duration, page=page)


def setup_events(expert):
    events = []
    t = 0.0
    for concept in expert.map.sorted_concepts():
        events.append(add_concept(t, concept.id))
        t += 2.0
    return events, t


class TestAnnotateSession:
    def test_correct_add_is_effective(self, tiny_expert):
        events, t = setup_events(tiny_expert)
        events.append(add_link(t, "a", "b", INC))
        annotated = annotate_session(events, tiny_expert)
        assert annotated[-1].effectiveness is Effectiveness.EFF
        assert annotated[-1].map_score_after == 1

    def test_wrong_sign_add_is_ineffective(self, tiny_expert):
        events, t = setup_events(tiny_expert)
        events.append(add_link(t, "a", "b", DEC))
        annotated = annotate_session(events, tiny_expert)
        assert annotated[-1].effectiveness is Effectiveness.INEFF
        assert annotated[-1].map_score_after == -1

    def test_delete_bare_concept_is_neutral(self, tiny_expert):
        events, t = setup_events(tiny_expert)
        events.append(delete_concept(t, "d"))
        annotated = annotate_session(events, tiny_expert)
        assert annotated[-1].effectiveness is Effectiveness.NEUTRAL

    def test_delete_concept_with_incident_links_changes_score(self, tiny_expert):
        events, t = setup_events(tiny_expert)
        events.append(add_link(t, "a", "b", INC))
        events.append(delete_concept(t + 5, "b"))
        annotated = annotate_session(events, tiny_expert)
        assert annotated[-1].effectiveness is Effectiveness.INEFF
        assert annotated[-1].map_score_after == 0

    def test_score_carried_on_non_edit_events(self, tiny_expert):
        events, t = setup_events(tiny_expert)
        events.append(add_link(t, "a", "b", INC))
        events.append(read(t + 5))
        events.append(ev(t + 40, ActionKind.TAKE_QUIZ, quiz_scope=QuizScope.everything()))
        annotated = annotate_session(events, tiny_expert)
        assert [e.map_score_after for e in annotated[-3:]] == [1, 1, 1]

    def test_marking_is_neutral(self, tiny_expert):
        events, t = setup_events(tiny_expert)
        events.append(add_link(t, "a", "b", INC))
        events.append(ev(t + 5, ActionKind.MAP_EDIT, edit=MapEdit(
            MapEditAction.MARK_LINK, source="a", target="b", marking=Marking.MARKED_CORRECT)))
        annotated = annotate_session(events, tiny_expert)
        assert annotated[-1].effectiveness is Effectiveness.NEUTRAL

    def test_long_flag_only_for_reads(self, tiny_expert):
        events = [read(0.0, duration=61.0), read(70.0, duration=59.9),
                  ev(140.0, ActionKind.TAKE_QUIZ, duration=400.0, quiz_scope=QuizScope.everything())]
        annotated = annotate_session(events, tiny_expert)
        assert [e.long for e in annotated] == [True, False, False]

    def test_process_mapping_is_exhaustive(self, tiny_expert):
        events, t = setup_events(tiny_expert)
        events += [
            read(t),
            ev(t + 40, ActionKind.MAKE_NOTES, note_id="n1"),
            ev(t + 50, ActionKind.TAKE_QUIZ, quiz_scope=QuizScope.everything()),
            ev(t + 60, ActionKind.QUIZ_EXPL, question_ref=0),
        ]
        annotated = annotate_session(events, tiny_expert)
        expected = {
            ActionKind.READ: Process.IA,
            ActionKind.MAKE_NOTES: Process.IA,
            ActionKind.MAP_EDIT: Process.SC,
            ActionKind.TAKE_QUIZ: Process.SA,
            ActionKind.QUIZ_EXPL: Process.SA,
        }
        assert PROCESS_FOR_KIND == expected
        for e in annotated:
            assert e.process is expected[e.kind]

    def test_non_edits_keep_neutral_effectiveness(self, tiny_expert):
        annotated = annotate_session([read(0.0)], tiny_expert)
        assert annotated[0].effectiveness is Effectiveness.NEUTRAL

    def test_replay_error_on_deleting_absent_link(self, tiny_expert):
        events, t = setup_events(tiny_expert)
        events.append(delete_link(t, "a", "b"))
        with pytest.raises(ReplayError) as err:
            annotate_session(events, tiny_expert)
        assert err.value.index == len(events) - 1

    def test_replay_error_on_duplicate_add(self, tiny_expert):
        events, t = setup_events(tiny_expert)
        events.append(add_link(t, "a", "b", INC))
        events.append(add_link(t + 5, "a", "b", DEC))
        with pytest.raises(ReplayError):
            annotate_session(events, tiny_expert)

    def test_replay_error_on_out_of_order_timestamps(self, tiny_expert):
        events = [read(10.0), read(5.0)]
        with pytest.raises(ReplayError):
            annotate_session(events, tiny_expert)

    def test_effectiveness_deltas_telescope_to_final_score(self, tiny_expert):
        events, t = setup_events(tiny_expert)
        events += [
            add_link(t, "a", "b", INC),
            add_link(t + 5, "b", "c", DEC),
            delete_link(t + 10, "b", "c"),
            add_link(t + 15, "a", "c", INC),
        ]
        annotated = annotate_session(events, tiny_expert)
        deltas = []
        prev = 0
        for e in annotated:
            deltas.append(e.map_score_after - prev)
            prev = e.map_score_after
        final = replay_map(events)
        assert sum(deltas) == annotated[-1].map_score_after == map_score(final, tiny_expert)


class TestCoherence:
    def test_read_then_matching_add_is_coherent(self, tiny_expert):
        events, t = setup_events(tiny_expert)
        events += [read(t, page="pa"), add_link(t + 40, "a", "b", INC)]
        tagged = tag_coherence(annotate_session(events, tiny_expert), tiny_expert)
        assert tagged[-1].coherent is True

    def test_wrong_sign_from_read_page_still_coherent(self, tiny_expert):
        events, t = setup_events(tiny_expert)
        events += [read(t, page="pa"), add_link(t + 40, "a", "b", DEC)]
        tagged = tag_coherence(annotate_session(events, tiny_expert), tiny_expert)
        assert tagged[-1].coherent is True

    def test_add_without_any_read_is_incoherent(self, tiny_expert):
        events, t = setup_events(tiny_expert)
        events.append(add_link(t, "a", "b", INC))
        tagged = tag_coherence(annotate_session(events, tiny_expert), tiny_expert)
        assert tagged[-1].coherent is False

    def test_add_unsupported_by_read_pages_is_incoherent(self, tiny_expert):
        events, t = setup_events(tiny_expert)
        events += [read(t, page="pa"), add_link(t + 40, "b", "c", INC)]
        tagged = tag_coherence(annotate_session(events, tiny_expert), tiny_expert)
        assert tagged[-1].coherent is False

    def test_non_link_events_stay_untagged(self, tiny_expert):
        events, t = setup_events(tiny_expert)
        events.append(read(t, page="pa"))
        tagged = tag_coherence(annotate_session(events, tiny_expert), tiny_expert)
        assert all(e.coherent is None for e in tagged)

    def test_lookback_bounds_the_window(self, tiny_expert):
        events, t = setup_events(tiny_expert)
        events += [read(t, page="pa"), add_link(t + 500.0, "a", "b", INC)]
        annotated = annotate_session(events, tiny_expert)
        assert tag_coherence(annotated, tiny_expert, lookback=100.0)[-1].coherent is False
        assert tag_coherence(annotated, tiny_expert, lookback=1000.0)[-1].coherent is True

    @settings(max_examples=40, deadline=None)
    @given(st.floats(1.0, 400.0), st.floats(0.0, 400.0))
    def test_lookback_monotonicity(self, tiny_expert, small, extra):
        events, t = setup_events(tiny_expert)
        events += [read(t, page="pa"), add_link(t + 120.0, "a", "b", INC)]
        annotated = annotate_session(events, tiny_expert)
        tight = tag_coherence(annotated, tiny_expert, lookback=small)[-1].coherent
        loose = tag_coherence(annotated, tiny_expert, lookback=small + extra)[-1].coherent
        if tight:
            assert loose

    def test_modify_uses_new_endpoints(self, tiny_expert):
        events, t = setup_events(tiny_expert)
        events += [
            read(t, page="pb"),  # supports b->c
            add_link(t + 40, "a", "b", INC),
            ev(t + 50, ActionKind.MAP_EDIT, edit=MapEdit(
                MapEditAction.MODIFY_LINK,
                old=CausalLink(source="a", target="b", sign=INC),
                new=CausalLink(source="b", target="c", sign=INC))),
        ]
        tagged = tag_coherence(annotate_session(events, tiny_expert), tiny_expert)
        assert tagged[-2].coherent is False  # a->b not on page pb
        assert tagged[-1].coherent is True   # modified into the b->c the page supports


class TestCollapse:
    def test_merges_adjacent_reads(self, tiny_expert):
        pre, t0 = setup_events(tiny_expert)
        shifted = [read(t0), read(t0 + 40), read(t0 + 80), add_link(t0 + 120, "a", "b", INC)]
        tokens = collapse(annotate_session(pre + shifted, tiny_expert))
        assert [t.label for t in tokens][-2:] == ["Read-Mult", "LinkEdit-Eff"]
        assert tokens[-2].count == 3 and tokens[-1].count == 1

    def test_two_ineffective_edits_collapse_with_mult(self, tiny_expert):
        pre, t0 = setup_events(tiny_expert)
        events = pre + [add_link(t0, "a", "b", DEC), add_link(t0 + 5, "b", "c", DEC)]
        tokens = collapse(annotate_session(events, tiny_expert))
        assert tokens[-1].label == "LinkEdit-Ineff-Mult"
        assert tokens[-1].count == 2

    def test_empty_stream(self):
        assert collapse([]) == []

    def test_span_covers_first_start_to_last_end(self, tiny_expert):
        pre, t0 = setup_events(tiny_expert)
        events = pre + [read(t0, duration=30.0), read(t0 + 30, duration=20.0)]
        tokens = collapse(annotate_session(events, tiny_expert))
        assert tokens[-1].span == (t0, t0 + 50.0)

    @settings(max_examples=80)
    @given(st.lists(st.sampled_from(["Read", "Note", "LinkEdit-Eff", "QuizTaken"]), max_size=20))
    def test_mult_iff_count_at_least_two(self, labels):
        tokens = collapse_labeled([(l, float(i), float(i) + 1.0) for i, l in enumerate(labels)])
        for token in tokens:
            assert (token.count >= 2) == token.label.endswith("-Mult")

    @settings(max_examples=80)
    @given(st.lists(st.sampled_from(["Read", "Note", "LinkEdit-Eff", "QuizTaken"]), max_size=20))
    def test_collapse_idempotent_on_token_labels(self, labels):
        tokens = collapse_labeled([(l, float(i), float(i) + 1.0) for i, l in enumerate(labels)])
        again = collapse_labeled([(t.label, *t.span) for t in tokens])
        assert [t.label for t in again] == [t.label for t in tokens]
        assert all(t.count == 1 for t in again)


class TestTimeDistribution:
    def test_single_read_takes_everything(self, tiny_expert):
        dist = time_distribution(annotate_session([read(0.0, duration=10.0)], tiny_expert))
        assert dist[ActionKind.READ] == 1.0
        assert all(v == 0.0 for k, v in dist.items() if k is not ActionKind.READ)

    def test_reference_durations_reproduce_their_shares(self, tiny_expert):
        durations = {
            ActionKind.READ: 26.2,
            ActionKind.MAKE_NOTES: 0.5,
            ActionKind.MAP_EDIT: 47.0,
            ActionKind.TAKE_QUIZ: 23.13,
            ActionKind.QUIZ_EXPL: 3.2,
        }
        pre, t0 = setup_events(tiny_expert)
        events = list(pre)
        t = t0
        events.append(read(t, duration=26.2)); t += 26.2
        events.append(ev(t, ActionKind.MAKE_NOTES, duration=0.5, note_id="n")); t += 0.5
        events.append(add_link(t, "a", "b", INC)); t += 5.0
        events.append(ev(t, ActionKind.TAKE_QUIZ, duration=23.13, quiz_scope=QuizScope.everything())); t += 23.13
        events.append(ev(t, ActionKind.QUIZ_EXPL, duration=3.2, question_ref=0))
        # replace the edit duration and strip the concept-layout time by
        # computing expectations over the full stream instead
        annotated = annotate_session(events, tiny_expert)
        total = sum(e.duration for e in annotated)
        dist = time_distribution(annotated)
        for kind in ActionKind:
            expected = sum(e.duration for e in annotated if e.kind is kind) / total
            assert dist[kind] == pytest.approx(expected, abs=1e-12)
        assert sum(dist.values()) == pytest.approx(1.0, abs=1e-9)

    def test_two_equal_activities_split_evenly(self, tiny_expert):
        events = [read(0.0, duration=30.0),
                  ev(30.0, ActionKind.MAKE_NOTES, duration=30.0, note_id="n")]
        dist = time_distribution(annotate_session(events, tiny_expert))
        assert dist[ActionKind.READ] == pytest.approx(0.5)
        assert dist[ActionKind.MAKE_NOTES] == pytest.approx(0.5)

    def test_empty_session_rejected(self, tiny_expert):
        with pytest.raises(EmptySession):
            time_distribution([])

    def test_exact_table_shape_fractions(self, tiny_expert):
        events = [
            read(0.0, duration=26.2),
            ev(26.2, ActionKind.MAKE_NOTES, duration=0.5, note_id="n"),
            ev(26.7, ActionKind.TAKE_QUIZ, duration=23.13, quiz_scope=QuizScope.everything()),
            ev(49.83, ActionKind.QUIZ_EXPL, duration=3.2, question_ref=0),
        ]
        dist = time_distribution(annotate_session(events, tiny_expert))
        total = 26.2 + 0.5 + 23.13 + 3.2
        assert dist[ActionKind.READ] == pytest.approx(26.2 / total)
        assert dist[ActionKind.TAKE_QUIZ] == pytest.approx(23.13 / total)
