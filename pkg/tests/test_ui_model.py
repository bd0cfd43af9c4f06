import json
import random

import pytest

from blindtrack.geometry import Point, Rect
from blindtrack.ui_model import (
    BUTTON, SLIDER, TEXT_FIELD, ModelSyntaxError, ModelValidationError,
    UiElement, UiModel, UiState, UnknownStateError, ValueDomain,
    apply_weights, bundled_model_path, element_at, load_model,
    load_model_file, serialize_model, validate,
)


@pytest.fixture(scope="module")
def pacemaker():
    return load_model_file(bundled_model_path())


def test_bundled_model_shape(pacemaker):
    assert len(pacemaker.states) == 10
    kinds = {el.kind for st in pacemaker.states for el in st.elements}
    assert kinds == {BUTTON, TEXT_FIELD, SLIDER}
    assert pacemaker.start_state == "menu"
    assert pacemaker.target_states == {"programming"}
    programming = pacemaker.state("programming")
    targets = [el.id for el in programming.elements if el.is_target]
    assert targets == ["threshold_field", "amplitude_slider", "rate_slider"]
    assert any(el.is_confirmation for el in programming.elements)
    assert validate(pacemaker) == []


def test_minimal_model_is_valid():
    doc = {
        "model_version": 1,
        "id": "tiny",
        "screen": {"width": 8, "height": 8},
        "start_state": "only",
        "target_states": ["only"],
        "states": [{"id": "only", "elements": []}],
    }
    model = load_model(json.dumps(doc))
    assert model.state("only").elements == ()


def test_missing_transition_target_is_semantic_error():
    doc = {
        "model_version": 1,
        "id": "bad",
        "screen": {"width": 100, "height": 100},
        "start_state": "a",
        "target_states": [],
        "states": [{"id": "a", "elements": [
            {"id": "b1", "kind": "button", "rect": [0, 0, 10, 10],
             "transition_to": "nowhere"},
        ]}],
    }
    with pytest.raises(ModelValidationError) as err:
        load_model(json.dumps(doc))
    assert any("nowhere" in v and "b1" in v for v in err.value.violations)


def test_malformed_document_is_syntax_error():
    with pytest.raises(ModelSyntaxError):
        load_model(b"not json {")
    with pytest.raises(ModelSyntaxError):
        load_model(json.dumps({"model_version": 2}))


def test_validate_overlapping_transition_buttons():
    model = UiModel(
        id="m", screen_width=100, screen_height=100,
        states=(UiState("a", (
            UiElement("b1", Rect(0, 0, 20, 20), BUTTON, transition_to="a"),
            UiElement("b2", Rect(10, 10, 20, 20), BUTTON, transition_to="a"),
        )),),
        start_state="a", target_states=frozenset())
    violations = validate(model)
    assert len(violations) == 1 and "overlap" in violations[0]


def test_validate_rect_outside_screen():
    model = UiModel(
        id="m", screen_width=50, screen_height=50,
        states=(UiState("a", (
            UiElement("b1", Rect(40, 40, 20, 20), BUTTON),
        )),),
        start_state="a", target_states=frozenset())
    violations = validate(model)
    assert len(violations) == 1 and "not within screen" in violations[0]


def test_value_domain_presence_rule():
    model = UiModel(
        id="m", screen_width=50, screen_height=50,
        states=(UiState("a", (
            UiElement("s", Rect(0, 0, 20, 10), SLIDER),
            UiElement("b", Rect(0, 20, 20, 10), BUTTON,
                      value_domain=ValueDomain(0, 1, 1)),
        )),),
        start_state="a", target_states=frozenset())
    violations = validate(model)
    assert len(violations) == 2
    assert all("value_domain" in v for v in violations)


def test_element_at_picks_transition_bearing(pacemaker):
    menu = pacemaker.state("menu")
    btn = menu.element("btn_patients")
    inside = Point(btn.rect.x + 5, btn.rect.y + 5)
    assert element_at(pacemaker, "menu", inside).id == "btn_patients"
    assert element_at(pacemaker, "menu", Point(5, 5)) is None
    # half-open: the right/bottom edge is outside
    edge = Point(btn.rect.x + btn.rect.w, btn.rect.y)
    assert element_at(pacemaker, "menu", edge) is None or \
        element_at(pacemaker, "menu", edge).id != "btn_patients"
    with pytest.raises(UnknownStateError):
        element_at(pacemaker, "missing", inside)


def test_element_at_transition_unique_everywhere(pacemaker):
    rng = random.Random(3)
    for st in pacemaker.states:
        for _ in range(200):
            p = Point(rng.randrange(pacemaker.screen_width),
                      rng.randrange(pacemaker.screen_height))
            hits = [el for el in st.elements
                    if el.triggers_transition and el.rect.contains(p)]
            assert len(hits) <= 1
            if hits:
                assert element_at(pacemaker, st.id, p) == hits[0]


def _random_model(rng: random.Random) -> UiModel:
    n_states = rng.randint(1, 4)
    ids = [f"s{i}" for i in range(n_states)]
    states = []
    for sid in ids:
        elements = []
        used_cols = list(range(0, 80, 20))
        rng.shuffle(used_cols)
        for n in range(rng.randint(0, 3)):
            kind = rng.choice([BUTTON, TEXT_FIELD, SLIDER])
            x = used_cols[n]
            rect = Rect(x, rng.randint(0, 50), rng.randint(5, 18), rng.randint(5, 18))
            dom = ValueDomain(0.0, 10.0, 0.5) if kind in (TEXT_FIELD, SLIDER) else None
            elements.append(UiElement(
                id=f"{sid}e{n}", rect=rect, kind=kind,
                transition_to=rng.choice(ids) if kind == BUTTON and rng.random() < 0.7 else None,
                is_target=kind != BUTTON and rng.random() < 0.3,
                value_domain=dom,
                a_priori_weight=rng.choice([1.0, 2.0, 0.5]),
                label=rng.choice([None, "label"]),
            ))
        states.append(UiState(sid, tuple(elements)))
    return UiModel(
        id="rnd", screen_width=100, screen_height=100, states=tuple(states),
        start_state=ids[0],
        target_states=frozenset(rng.sample(ids, rng.randint(0, len(ids)))),
        initial_cursor=Point(3, 4) if rng.random() < 0.5 else None,
    )


def test_serialize_load_round_trip_random_models():
    rng = random.Random(17)
    for _ in range(40):
        model = _random_model(rng)
        if validate(model):
            continue
        again = load_model(serialize_model(model))
        assert again == model
        assert serialize_model(again) == serialize_model(model)


def test_bundled_model_round_trips(pacemaker):
    assert load_model(serialize_model(pacemaker)) == pacemaker


def test_apply_weights(pacemaker):
    weighted = apply_weights(pacemaker, {"menu": {"btn_patients": 4.0}})
    assert weighted.state("menu").element("btn_patients").a_priori_weight == 4.0
    assert weighted.state("menu").element("btn_help").a_priori_weight == 1.0
    assert pacemaker.state("menu").element("btn_patients").a_priori_weight == 1.0
