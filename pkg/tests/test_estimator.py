import json
import random

import pytest

from blindtrack.estimator import (
    ELEMENT_AREA, EQUAL_TRANSITIONS, PLAIN_CLICK, SLIDER_DRAG, TEXT_INPUT,
    Estimator, EstimatorConfig, EstimatorError, Evidence, InputModeError,
    TrackerOverflowError, classify_window,
)
from blindtrack.events import (
    ABSOLUTE_TOUCH, ButtonDown, ButtonUp, InputEvent, Key, MouseMove,
    TouchDown, TouchUp, Trace, TraceMeta,
)
from blindtrack.geometry import Delta, Point, Rect, Region, area
from blindtrack.terminal import apply_event, boot_state
from blindtrack.trace import UserProfile, generate, pacemaker_goal, to_touchscreen
from blindtrack.ui_model import (
    BUTTON, SLIDER, TEXT_FIELD, UiElement, UiModel, UiState,
    UnknownStateError, ValueDomain, validate,
)

from oracles import EnumerationPosterior


def toy_model(buttons=((("b1", "B"),)), screen=(20, 20), extra=()):
    """Tiny two-plus-state model: state A holds the given buttons (stacked
    vertically, 6x4 each) plus any extra elements; every destination state
    is empty."""
    els = []
    dests = set()
    for i, (eid, dest) in enumerate(buttons):
        els.append(UiElement(eid, Rect(2, 2 + 5 * i, 6, 4), BUTTON, transition_to=dest))
        dests.add(dest)
    els.extend(extra)
    states = [UiState("A", tuple(els))]
    for dest in sorted(dests):
        states.append(UiState(dest, ()))
    model = UiModel(id="toy", screen_width=screen[0], screen_height=screen[1],
                    states=tuple(states), start_state="A",
                    target_states=frozenset({"A"}))
    assert validate(model) == []
    return model


def probs(est):
    return est.estimate().state_probs


def test_init_known_full_screen(pacemaker):
    est = Estimator.init_known(pacemaker, "menu")
    assert len(est.trackers) == 1
    assert est.trackers[0].prob == 1.0
    assert area(est.trackers[0].region) == 1024 * 768


def test_init_known_with_cursor(pacemaker):
    est = Estimator.init_known(pacemaker, "menu", cursor=Point(0, 0))
    assert area(est.trackers[0].region) == 1
    with pytest.raises(UnknownStateError):
        Estimator.init_known(pacemaker, "missing")


def test_init_unknown(pacemaker):
    est = Estimator.init_unknown(pacemaker)
    assert len(est.trackers) == 10
    for tr in est.trackers:
        assert tr.prob == pytest.approx(0.1)
        assert area(tr.region) == 1024 * 768


def test_init_unknown_single_state_matches_known():
    model_one = UiModel(id="one", screen_width=8, screen_height=8,
                        states=(UiState("A", ()),), start_state="A",
                        target_states=frozenset())
    unk = Estimator.init_unknown(model_one)
    known = Estimator.init_known(model_one, "A")
    assert len(unk.trackers) == len(known.trackers) == 1
    assert unk.trackers[0].prob == known.trackers[0].prob == 1.0


def test_corner_sweep_collapses_regions(pacemaker):
    est = Estimator.init_unknown(pacemaker)
    est.on_move(Delta(pacemaker.screen_width, pacemaker.screen_height))
    for tr in est.trackers:
        assert area(tr.region) == 1
        assert tr.region.contains(Point(1023, 767))
    # probabilities untouched by movement
    assert sum(tr.prob for tr in est.trackers) == pytest.approx(1.0)


def test_on_move_rejected_in_touch_mode(pacemaker):
    est = Estimator.init_unknown(pacemaker, EstimatorConfig(input_mode=ABSOLUTE_TOUCH))
    with pytest.raises(InputModeError):
        est.on_move(Delta(1, 0))


def test_click_split_element_area_scheme():
    model = toy_model()
    s = 20 * 20
    b = 6 * 4
    est = Estimator.init_known(model, "A", cfg=EstimatorConfig(
        transition_scheme=ELEMENT_AREA, element_detection=False))
    est.on_click()
    by_state = probs(est)
    assert by_state["B"] == pytest.approx(b / s)
    assert by_state["A"] == pytest.approx((s - b) / s)
    regions = {tr.state: tr.region for tr in est.trackers}
    assert regions["B"] == Region([Rect(2, 2, 6, 4)])
    assert area(regions["A"]) == s - b


def test_click_split_equal_scheme():
    model = toy_model()
    est = Estimator.init_known(model, "A", cfg=EstimatorConfig(
        transition_scheme=EQUAL_TRANSITIONS, element_detection=False))
    est.on_click()
    by_state = probs(est)
    assert by_state["B"] == pytest.approx(0.5)
    assert by_state["A"] == pytest.approx(0.5)


def test_click_region_inside_button_single_child():
    model = toy_model()
    est = Estimator.init_known(model, "A", cursor=Point(3, 3))
    est.on_click()
    assert len(est.trackers) == 1
    assert est.trackers[0].state == "B"
    assert est.trackers[0].prob == pytest.approx(1.0)


def test_apriori_weighting():
    model = toy_model(buttons=(("b1", "B"), ("b2", "C")))
    from blindtrack.ui_model import apply_weights
    weighted = apply_weights(model, {"A": {"b1": 2.0, "b2": 1.0}})
    est = Estimator.init_known(weighted, "A", cfg=EstimatorConfig(
        transition_scheme=EQUAL_TRANSITIONS, element_detection=False, a_priori=True))
    est.on_click()
    by_state = probs(est)
    # transition mass splits 2:1 between the weighted buttons
    assert by_state["B"] / by_state["C"] == pytest.approx(2.0)

    # equal weights reproduce the unweighted split
    plain = Estimator.init_known(model, "A", cfg=EstimatorConfig(
        transition_scheme=EQUAL_TRANSITIONS, element_detection=False, a_priori=True))
    plain.on_click()
    base = Estimator.init_known(model, "A", cfg=EstimatorConfig(
        transition_scheme=EQUAL_TRANSITIONS, element_detection=False, a_priori=False))
    base.on_click()
    for sid in ("A", "B", "C"):
        assert probs(plain)[sid] == pytest.approx(probs(base)[sid])


def test_apriori_zero_weight_drops_outcome():
    model = toy_model(buttons=(("b1", "B"), ("b2", "C")))
    from blindtrack.ui_model import apply_weights
    weighted = apply_weights(model, {"A": {"b1": 0.0, "b2": 1.0}})
    est = Estimator.init_known(weighted, "A", cfg=EstimatorConfig(
        element_detection=False, a_priori=True))
    est.on_click()
    assert "B" not in probs(est)


def test_evidence_scales_and_never_deletes():
    field = UiElement("f", Rect(10, 10, 6, 4), TEXT_FIELD,
                      value_domain=ValueDomain(0, 9, 1))
    model = UiModel(
        id="ev", screen_width=20, screen_height=20,
        states=(UiState("P", (field,)), UiState("Q", ())),
        start_state="P", target_states=frozenset({"P"}))
    est = Estimator.init_unknown(model)
    before = probs(est)
    est.on_evidence(Evidence(TEXT_INPUT))
    after = probs(est)
    assert after["P"] > before["P"]
    assert 0 < after["Q"] < before["Q"]
    assert len(est.trackers) == 2
    assert sum(after.values()) == pytest.approx(1.0)


def test_evidence_consistent_with_all_is_noop():
    model = toy_model(buttons=(("b1", "B"),))
    est = Estimator.init_unknown(model)
    before = [tr.prob for tr in est.trackers]
    est.on_evidence(Evidence(SLIDER_DRAG))  # nobody has sliders: all scale alike
    assert [tr.prob for tr in est.trackers] == pytest.approx(before)


def test_detection_scale_half_is_noop():
    model = toy_model()
    est = Estimator.init_unknown(model, EstimatorConfig(detection_scale=0.5))
    before = [tr.prob for tr in est.trackers]
    est.on_evidence(Evidence(PLAIN_CLICK))
    assert [tr.prob for tr in est.trackers] == pytest.approx(before)


def test_evidence_requires_detection_enabled():
    model = toy_model()
    est = Estimator.init_unknown(model, EstimatorConfig(element_detection=False))
    with pytest.raises(EstimatorError):
        est.on_evidence(Evidence(PLAIN_CLICK))


def test_classify_windows():
    down = InputEvent(0, ButtonDown())
    up = InputEvent(50, ButtonUp())
    move = InputEvent(10, MouseMove(30, 0))
    assert classify_window([down, move, up]).kind == SLIDER_DRAG
    assert classify_window([down, up]).kind == PLAIN_CLICK
    assert classify_window([InputEvent(0, Key("7"))]).kind == TEXT_INPUT
    assert classify_window([InputEvent(0, MouseMove(5, 5))]) is None
    small = InputEvent(10, MouseMove(4, 9))
    assert classify_window([down, small, up]).kind == PLAIN_CLICK


def test_estimate_shape():
    model = toy_model(buttons=(("b1", "B"), ("b2", "C")))
    est = Estimator.init_unknown(model)
    e = est.estimate()
    assert e.tracker_count == 3
    assert e.top_prob == pytest.approx(1 / 3)
    assert e.top_state == "A"  # tie broken by lowest state id
    assert area(e.combined_region) == 20 * 20
    assert sum(e.state_probs.values()) == pytest.approx(1.0)


def test_attack_ready(pacemaker):
    cfg = EstimatorConfig()
    est = Estimator.init_known(pacemaker, "programming", cursor=Point(600, 300), cfg=cfg)
    assert est.attack_ready("programming")
    est_full = Estimator.init_known(pacemaker, "programming", cfg=cfg)
    assert not est_full.attack_ready("programming")  # full-screen region
    est_menu = Estimator.init_known(pacemaker, "menu", cursor=Point(5, 5), cfg=cfg)
    assert not est_menu.attack_ready("programming")  # prob 0
    with pytest.raises(ValueError):
        est.attack_ready("menu")


def test_attack_ready_threshold():
    # 0.95 probability with a 40x40 region vs 50x50 elements: ready
    target = UiElement("t", Rect(0, 0, 50, 50), SLIDER,
                       is_target=True, value_domain=ValueDomain(0, 1, 1))
    model = UiModel(
        id="ar", screen_width=200, screen_height=200,
        states=(UiState("T", (target,)), UiState("U", ())),
        start_state="T", target_states=frozenset({"T"}))
    est = Estimator.init_unknown(model)
    est.trackers[0].state = "T"
    est.trackers[0].region = Region([Rect(100, 100, 40, 40)])
    est.trackers[0].prob = 0.95
    est.trackers[1].state = "U"
    est.trackers[1].prob = 0.05
    assert est.attack_ready("T")
    est.trackers[0].prob = 0.5
    est.trackers[1].prob = 0.5
    assert not est.attack_ready("T")


def test_collapse():
    model = toy_model(buttons=(("b1", "B"), ("b2", "C")))
    est = Estimator.init_unknown(model)
    est.trackers[0].prob = 0.7
    est.trackers[1].prob = 0.3
    est.trackers[2].prob = 0.0
    est.collapse()
    assert len(est.trackers) == 1 and est.trackers[0].prob == 1.0
    assert est.trackers[0].state == "A"

    est2 = Estimator.init_unknown(model)
    est2.trackers = [t for t in est2.trackers if t.state in ("B", "C")]
    est2.trackers[0].prob = 0.5
    est2.trackers[1].prob = 0.5
    est2.collapse()
    assert est2.trackers[0].state == "B"  # tie: lowest state id wins

    single = Estimator.init_known(model, "A")
    single.collapse()
    assert len(single.trackers) == 1 and single.trackers[0].prob == 1.0


def test_tracker_overflow_reported_and_state_unchanged():
    model = toy_model(buttons=(("b1", "B"), ("b2", "C")))
    est = Estimator.init_unknown(model, EstimatorConfig(max_trackers=3,
                                                        element_detection=False))
    before = [(tr.state, tr.prob) for tr in est.trackers]
    with pytest.raises(TrackerOverflowError):
        est.on_click()
    assert [(tr.state, tr.prob) for tr in est.trackers] == before
    est.collapse()
    est.on_click()  # fits after collapsing


def test_merge_same_state_preserves_aggregates():
    model = toy_model(buttons=(("b1", "B"), ("b2", "B")))
    cfg_plain = EstimatorConfig(element_detection=False)
    cfg_merge = EstimatorConfig(element_detection=False, merge_same_state=True)
    plain = Estimator.init_known(model, "A", cfg=cfg_plain)
    merged = Estimator.init_known(model, "A", cfg=cfg_merge)
    plain.on_click()
    merged.on_click()
    assert len(plain.trackers) == 3   # two B children + stay
    assert len(merged.trackers) == 2  # B union + stay
    for sid in ("A", "B"):
        assert probs(merged)[sid] == pytest.approx(probs(plain)[sid])
    from blindtrack.geometry import union
    assert merged.estimate().combined_region == plain.estimate().combined_region


def test_snapshot_is_deterministic_json():
    model = toy_model()
    est = Estimator.init_unknown(model)
    doc = json.loads(est.snapshot())
    assert doc["snapshot_version"] == 1
    assert doc["event_count"] == 0
    assert len(doc["trackers"]) == 2
    assert est.snapshot() == est.snapshot()


# -- pipeline vs ground truth -------------------------------------------


def drive(est, events):
    for e in events:
        est.observe(e)


def gesture(t0, *, move=None):
    events = [InputEvent(t0, ButtonDown())]
    if move:
        events.append(InputEvent(t0 + 10, MouseMove(*move)))
    events.append(InputEvent(t0 + 60, ButtonUp()))
    return events


def test_drag_consumes_click_no_branching():
    slider = UiElement("s", Rect(2, 10, 12, 4), SLIDER,
                       value_domain=ValueDomain(0, 10, 1))
    model = toy_model(extra=(slider,))
    est = Estimator.init_known(model, "A", cfg=EstimatorConfig(element_detection=False))
    n_before = len(est.trackers)
    drive(est, gesture(0, move=(15, 0)))  # a drag: no click branching
    assert len(est.trackers) == n_before
    est2 = Estimator.init_known(model, "A", cfg=EstimatorConfig(element_detection=False))
    drive(est2, gesture(0))  # a plain click branches
    assert len(est2.trackers) > n_before


def test_soundness_against_oracle(pacemaker):
    cfg = EstimatorConfig(prune_epsilon=0.0, max_trackers=10_000_000)
    for seed in (1, 2):
        trace = generate(pacemaker, UserProfile(), pacemaker_goal(), seed=seed)
        for init in ("known", "unknown"):
            if init == "known":
                est = Estimator.init_known(pacemaker, pacemaker.start_state, cfg=cfg)
            else:
                est = Estimator.init_unknown(pacemaker, cfg=cfg)
            truth = boot_state(pacemaker)
            for e in trace.events:
                truth = apply_event(pacemaker, truth, e)
                est.observe(e)
                assert any(
                    tr.state == truth.state and tr.prob > 0
                    and tr.region.contains(truth.cursor)
                    for tr in est.trackers), f"unsound at t={e.t_ms} ({init})"


def test_monotone_area_under_movement(pacemaker):
    rng = random.Random(9)
    est = Estimator.init_unknown(pacemaker)
    last = area(est.estimate().combined_region)
    for _ in range(60):
        est.on_move(Delta(rng.randint(-300, 300), rng.randint(-300, 300)))
        now = area(est.estimate().combined_region)
        assert now <= last
        last = now


def test_touchscreen_determinism_single_child_per_parent(pacemaker):
    cfg = EstimatorConfig(input_mode=ABSOLUTE_TOUCH, element_detection=False)
    est = Estimator.init_unknown(pacemaker, cfg)
    rng = random.Random(5)
    for t in range(6):
        n_before = len(est.trackers)
        x = rng.randrange(pacemaker.screen_width)
        y = rng.randrange(pacemaker.screen_height)
        drive(est, [InputEvent(t * 100, TouchDown(x, y)),
                    InputEvent(t * 100 + 50, TouchUp(x, y))])
        assert len(est.trackers) == n_before
        for tr in est.trackers:
            assert area(tr.region) == 1


def test_probability_conservation_through_pipeline(pacemaker):
    trace = generate(pacemaker, UserProfile(), pacemaker_goal(), seed=3)
    est = Estimator.init_unknown(pacemaker)
    for e in trace.events:
        est.observe(e)
        total = sum(tr.prob for tr in est.trackers)
        assert abs(total - 1.0) < 1e-9


# -- posterior exactness vs enumeration ----------------------------------


def random_toy(rng):
    n_states = rng.randint(3, 4)
    ids = [f"s{i}" for i in range(n_states)]
    states = []
    for sid in ids:
        elements = []
        cols = [1, 9, 17, 25]
        rng.shuffle(cols)
        for n in range(rng.randint(1, 3)):
            kind = rng.choice([BUTTON, BUTTON, TEXT_FIELD, SLIDER])
            rect = Rect(cols[n], rng.randint(0, 20), rng.randint(4, 7), rng.randint(4, 7))
            elements.append(UiElement(
                id=f"{sid}e{n}", rect=rect, kind=kind,
                transition_to=rng.choice(ids) if kind == BUTTON else None,
                value_domain=ValueDomain(0, 9, 1) if kind != BUTTON else None,
                a_priori_weight=1.0))
        states.append(UiState(sid, tuple(elements)))
    model = UiModel(id="rt", screen_width=32, screen_height=32,
                    states=tuple(states), start_state=ids[0],
                    target_states=frozenset({ids[-1]}))
    assert validate(model) == []
    return model


def random_events(rng, n_clicks, absolute=False):
    events = []
    t = 0
    for _ in range(n_clicks):
        for _ in range(rng.randint(0, 3)):
            t += 10
            events.append(InputEvent(t, MouseMove(rng.randint(-20, 20), rng.randint(-20, 20))))
        if rng.random() < 0.2:
            t += 10
            events.append(InputEvent(t, Key(rng.choice("0123456789"))))
        t += 10
        if absolute:
            x, y = rng.randrange(32), rng.randrange(32)
            events.append(InputEvent(t, TouchDown(x, y)))
            if rng.random() < 0.4:
                t += 10
                events.append(InputEvent(t, TouchUp(min(31, x + 15), y)))
            else:
                t += 10
                events.append(InputEvent(t, TouchUp(x, y)))
        else:
            events.append(InputEvent(t, ButtonDown()))
            if rng.random() < 0.4:
                t += 10
                events.append(InputEvent(t, MouseMove(rng.choice([-15, 15]), 0)))
            t += 10
            events.append(InputEvent(t, ButtonUp()))
    return events


@pytest.mark.parametrize("scheme", [EQUAL_TRANSITIONS, ELEMENT_AREA])
@pytest.mark.parametrize("detection", [False, True])
def test_posterior_matches_enumeration(scheme, detection):
    rng = random.Random(hash((scheme, detection)) & 0xFFFF)
    for case in range(6):
        model = random_toy(rng)
        events = random_events(rng, n_clicks=rng.randint(1, 6))
        cfg = EstimatorConfig(transition_scheme=scheme, element_detection=detection,
                              prune_epsilon=0.0, max_trackers=10_000_000)
        for start in ("known", "unknown"):
            if start == "known":
                est = Estimator.init_known(model, model.start_state, cfg=cfg)
                oracle = EnumerationPosterior(model, known_state=model.start_state,
                                              scheme=scheme, detection=detection)
            else:
                est = Estimator.init_unknown(model, cfg=cfg)
                oracle = EnumerationPosterior(model, scheme=scheme, detection=detection)
            drive(est, events)
            oracle.feed(events)
            got = probs(est)
            want = oracle.state_probs()
            assert set(got) == set(want)
            for sid in want:
                assert got[sid] == pytest.approx(want[sid], abs=1e-9), \
                    f"{scheme}/{detection}/{start} case {case} state {sid}"
