"""Static model of the target terminal's user interface.

The model is the attacker's map: states, the input elements they contain,
and the deterministic transitions element clicks trigger.  Models are
immutable after loading and safe to share between threads.

Model files are JSON documents with ``model_version: 1``; see
``models/pacemaker.model`` for the bundled reference terminal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .geometry import Point, Rect

MODEL_VERSION = 1

BUTTON = "button"
TEXT_FIELD = "text_field"
SLIDER = "slider"
MULTIPLE_CHOICE = "multiple_choice"
ELEMENT_KINDS = (BUTTON, TEXT_FIELD, SLIDER, MULTIPLE_CHOICE)

# element kinds that a click can activate (transitions, confirmation)
CLICKABLE_KINDS = (BUTTON, MULTIPLE_CHOICE)
# element kinds that carry a numeric value domain
VALUED_KINDS = (TEXT_FIELD, SLIDER)

DEFAULT_CLEAR_KEY = "\x01"  # select-all-and-replace convention for text fields


class ModelError(Exception):
    pass


class ModelSyntaxError(ModelError):
    pass


class ModelValidationError(ModelError):
    def __init__(self, violations: list[str]):
        super().__init__("invalid model: " + "; ".join(violations))
        self.violations = violations


class UnknownStateError(ModelError):
    pass


@dataclass(frozen=True)
class ValueDomain:
    lo: float
    hi: float
    step: float

    def contains(self, value: float) -> bool:
        return self.lo - 1e-9 <= value <= self.hi + 1e-9

    def on_grid(self, value: float) -> bool:
        steps = (value - self.lo) / self.step
        return self.contains(value) and abs(steps - round(steps)) < 1e-9

    def clamp(self, value: float) -> float:
        return min(max(value, self.lo), self.hi)


@dataclass(frozen=True)
class UiElement:
    id: str
    rect: Rect
    kind: str
    transition_to: Optional[str] = None
    is_target: bool = False
    is_confirmation: bool = False
    value_domain: Optional[ValueDomain] = None
    a_priori_weight: float = 1.0
    clear_keys: tuple[str, ...] = (DEFAULT_CLEAR_KEY,)
    label: Optional[str] = None

    @property
    def triggers_transition(self) -> bool:
        return self.transition_to is not None


@dataclass(frozen=True)
class UiState:
    id: str
    elements: tuple[UiElement, ...] = ()
    label: Optional[str] = None

    def element(self, element_id: str) -> UiElement:
        for el in self.elements:
            if el.id == element_id:
                return el
        raise KeyError(f"no element {element_id!r} in state {self.id!r}")

    @property
    def transition_elements(self) -> tuple[UiElement, ...]:
        return tuple(el for el in self.elements if el.triggers_transition)


@dataclass(frozen=True)
class UiModel:
    id: str
    screen_width: int
    screen_height: int
    states: tuple[UiState, ...]
    start_state: str
    target_states: frozenset[str]
    initial_cursor: Optional[Point] = None

    @property
    def screen(self) -> Rect:
        return Rect(0, 0, self.screen_width, self.screen_height)

    def state(self, state_id: str) -> UiState:
        for st in self.states:
            if st.id == state_id:
                return st
        raise UnknownStateError(f"unknown state {state_id!r}")

    def has_state(self, state_id: str) -> bool:
        return any(st.id == state_id for st in self.states)

    def state_of_element(self, element_id: str) -> tuple[UiState, UiElement]:
        """First state (in declaration order) containing the element id."""
        for st in self.states:
            for el in st.elements:
                if el.id == element_id:
                    return st, el
        raise KeyError(f"no element {element_id!r} in any state")


def validate(model: UiModel) -> list[str]:
    """All invariant violations, each naming the offending state/element."""
    v: list[str] = []
    if model.screen_width <= 0 or model.screen_height <= 0:
        v.append(f"screen dimensions must be positive, got "
                 f"{model.screen_width}x{model.screen_height}")
    seen_states = set()
    for st in model.states:
        if st.id in seen_states:
            v.append(f"duplicate state id {st.id!r}")
        seen_states.add(st.id)
    if model.start_state not in seen_states:
        v.append(f"start state {model.start_state!r} does not exist")
    for target in sorted(model.target_states):
        if target not in seen_states:
            v.append(f"target state {target!r} does not exist")
    for st in model.states:
        seen_elements = set()
        for el in st.elements:
            where = f"state {st.id!r} element {el.id!r}"
            if el.id in seen_elements:
                v.append(f"duplicate element id {el.id!r} in state {st.id!r}")
            seen_elements.add(el.id)
            if el.kind not in ELEMENT_KINDS:
                v.append(f"{where}: unknown kind {el.kind!r}")
            if el.transition_to is not None:
                if el.kind not in CLICKABLE_KINDS:
                    v.append(f"{where}: kind {el.kind!r} may not carry a transition")
                if el.transition_to not in seen_states:
                    v.append(f"{where}: transition to missing state {el.transition_to!r}")
            if el.is_confirmation and el.kind not in CLICKABLE_KINDS:
                v.append(f"{where}: confirmation element must be clickable")
            if (el.value_domain is not None) != (el.kind in VALUED_KINDS):
                v.append(f"{where}: value_domain must be present exactly for "
                         f"text fields and sliders")
            if el.value_domain is not None:
                dom = el.value_domain
                if dom.step <= 0 or dom.hi < dom.lo:
                    v.append(f"{where}: malformed value domain "
                             f"({dom.lo}, {dom.hi}, {dom.step})")
            if el.a_priori_weight < 0:
                v.append(f"{where}: negative a priori weight")
            if model.screen.intersect(el.rect) != el.rect or el.rect.is_empty:
                v.append(f"{where}: rect {el.rect} not within screen")
        # deterministic transitions: transition-bearing rects must not overlap
        trans = st.transition_elements
        for i, a in enumerate(trans):
            for b in trans[i + 1:]:
                if a.rect.intersects(b.rect):
                    v.append(f"state {st.id!r}: transition elements {a.id!r} "
                             f"and {b.id!r} overlap")
    return v


def element_at(model: UiModel, state_id: str, p: Point) -> Optional[UiElement]:
    """The unique transition-bearing element containing p, else any other
    containing element, else None.  Containment is half-open."""
    st = model.state(state_id)
    fallback = None
    for el in st.elements:
        if el.rect.contains(p):
            if el.triggers_transition:
                return el
            if fallback is None:
                fallback = el
    return fallback


# ---------------------------------------------------------------------------
# serialization


def _domain_to_json(dom: ValueDomain) -> list[float]:
    return [dom.lo, dom.hi, dom.step]


def _element_to_json(el: UiElement) -> dict:
    out: dict = {
        "id": el.id,
        "kind": el.kind,
        "rect": [el.rect.x, el.rect.y, el.rect.w, el.rect.h],
    }
    if el.transition_to is not None:
        out["transition_to"] = el.transition_to
    if el.is_target:
        out["is_target"] = True
    if el.is_confirmation:
        out["is_confirmation"] = True
    if el.value_domain is not None:
        out["value_domain"] = _domain_to_json(el.value_domain)
    if el.a_priori_weight != 1.0:
        out["a_priori_weight"] = el.a_priori_weight
    if el.clear_keys != (DEFAULT_CLEAR_KEY,):
        out["clear_keys"] = list(el.clear_keys)
    if el.label is not None:
        out["label"] = el.label
    return out


def model_to_json(model: UiModel) -> dict:
    doc: dict = {
        "model_version": MODEL_VERSION,
        "id": model.id,
        "screen": {"width": model.screen_width, "height": model.screen_height},
        "start_state": model.start_state,
        "target_states": sorted(model.target_states),
        "states": [],
    }
    if model.initial_cursor is not None:
        doc["initial_cursor"] = {"x": model.initial_cursor.x, "y": model.initial_cursor.y}
    for st in model.states:
        st_doc: dict = {"id": st.id, "elements": [_element_to_json(e) for e in st.elements]}
        if st.label is not None:
            st_doc["label"] = st.label
        doc["states"].append(st_doc)
    return doc


def serialize_model(model: UiModel) -> bytes:
    return (json.dumps(model_to_json(model), indent=2, sort_keys=True,
                       ensure_ascii=True) + "\n").encode()


_ELEMENT_KEYS = {"id", "kind", "rect", "transition_to", "is_target",
                 "is_confirmation", "value_domain", "a_priori_weight",
                 "clear_keys", "label"}
_STATE_KEYS = {"id", "elements", "label"}
_MODEL_KEYS = {"model_version", "id", "screen", "start_state",
               "target_states", "states", "initial_cursor"}


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ModelSyntaxError(message)


def _parse_element(raw: dict, where: str) -> UiElement:
    _require(isinstance(raw, dict), f"{where}: element must be an object")
    unknown = set(raw) - _ELEMENT_KEYS
    _require(not unknown, f"{where}: unknown element keys {sorted(unknown)}")
    _require("id" in raw and "kind" in raw and "rect" in raw,
             f"{where}: element needs id, kind and rect")
    rect_raw = raw["rect"]
    _require(isinstance(rect_raw, list) and len(rect_raw) == 4
             and all(isinstance(c, int) for c in rect_raw),
             f"{where}: rect must be four integers")
    dom = None
    if "value_domain" in raw:
        dr = raw["value_domain"]
        _require(isinstance(dr, list) and len(dr) == 3
                 and all(isinstance(c, (int, float)) for c in dr),
                 f"{where}: value_domain must be [min, max, step]")
        dom = ValueDomain(float(dr[0]), float(dr[1]), float(dr[2]))
    clear_keys = raw.get("clear_keys", [DEFAULT_CLEAR_KEY])
    _require(isinstance(clear_keys, list) and
             all(isinstance(k, str) and len(k) == 1 for k in clear_keys),
             f"{where}: clear_keys must be single-character strings")
    return UiElement(
        id=str(raw["id"]),
        rect=Rect(*rect_raw),
        kind=str(raw["kind"]),
        transition_to=raw.get("transition_to"),
        is_target=bool(raw.get("is_target", False)),
        is_confirmation=bool(raw.get("is_confirmation", False)),
        value_domain=dom,
        a_priori_weight=float(raw.get("a_priori_weight", 1.0)),
        clear_keys=tuple(clear_keys),
        label=raw.get("label"),
    )


def load_model(data: bytes | str) -> UiModel:
    """Parse and validate a model document.

    Raises ModelSyntaxError for malformed documents and
    ModelValidationError (naming each violated rule) for semantic errors.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ModelSyntaxError(f"not valid JSON: {exc}") from exc
    _require(isinstance(doc, dict), "model document must be an object")
    unknown = set(doc) - _MODEL_KEYS
    _require(not unknown, f"unknown model keys {sorted(unknown)}")
    _require(doc.get("model_version") == MODEL_VERSION,
             f"unsupported model_version {doc.get('model_version')!r}")
    screen = doc.get("screen")
    _require(isinstance(screen, dict) and isinstance(screen.get("width"), int)
             and isinstance(screen.get("height"), int),
             "screen must be an object with integer width/height")
    cursor = None
    if "initial_cursor" in doc:
        cr = doc["initial_cursor"]
        _require(isinstance(cr, dict) and isinstance(cr.get("x"), int)
                 and isinstance(cr.get("y"), int),
                 "initial_cursor must have integer x/y")
        cursor = Point(cr["x"], cr["y"])
    states_raw = doc.get("states")
    _require(isinstance(states_raw, list), "states must be a list")
    states = []
    for st_raw in states_raw:
        _require(isinstance(st_raw, dict) and "id" in st_raw,
                 "each state must be an object with an id")
        unknown = set(st_raw) - _STATE_KEYS
        _require(not unknown, f"state {st_raw.get('id')!r}: unknown keys {sorted(unknown)}")
        elements = tuple(
            _parse_element(el, f"state {st_raw['id']!r}")
            for el in st_raw.get("elements", []))
        states.append(UiState(id=str(st_raw["id"]), elements=elements,
                              label=st_raw.get("label")))
    targets = doc.get("target_states", [])
    _require(isinstance(targets, list), "target_states must be a list")
    model = UiModel(
        id=str(doc.get("id", "model")),
        screen_width=screen["width"],
        screen_height=screen["height"],
        states=tuple(states),
        start_state=str(doc.get("start_state")),
        target_states=frozenset(str(t) for t in targets),
        initial_cursor=cursor,
    )
    violations = validate(model)
    if violations:
        raise ModelValidationError(violations)
    return model


def load_model_file(path: str | Path) -> UiModel:
    return load_model(Path(path).read_bytes())


def apply_weights(model: UiModel, weights: dict[str, dict[str, float]]) -> UiModel:
    """New model with per-element a-priori weights replaced from a table
    keyed by state id then element id (missing entries keep weight 1)."""
    states = []
    for st in model.states:
        table = weights.get(st.id, {})
        elements = tuple(
            replace(el, a_priori_weight=float(table.get(el.id, 1.0)))
            for el in st.elements)
        states.append(replace(st, elements=elements))
    return replace(model, states=tuple(states))


def repo_root() -> Path:
    current = Path(__file__).resolve()
    for parent in current.parents:
        if (parent / "pyproject.toml").exists():
            return parent
    raise FileNotFoundError("repository root not found")


def bundled_model_path(name: str = "pacemaker") -> Path:
    return repo_root() / "models" / f"{name}.model"
