"""Blind state and location estimation from intercepted input events.

The estimator maintains a list of tracker hypotheses (state, cursor
uncertainty region, probability).  Movement events translate every
region under screen-edge clamping; each click replaces a parent tracker
with children for every possible outcome (one per transition element the
region touches, plus staying put); classified gestures (slider drags,
text input, plain clicks) rescale tracker probabilities without ever
deleting a hypothesis, so a tracker covering the true terminal state and
cursor always survives.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

from .events import (
    ABSOLUTE_TOUCH, RELATIVE_MOUSE, ButtonDown, ButtonUp, InputEvent, Key,
    MouseMove, TouchDown, TouchMove, TouchUp,
)
from .geometry import (
    Delta, Point, Rect, Region, area, fits_within, intersect, shift_region,
    subtract, translate_clip, union,
)
from .terminal import DRAG_THRESHOLD_PX
from .ui_model import (
    BUTTON, MULTIPLE_CHOICE, SLIDER, TEXT_FIELD, UiElement, UiModel,
)

EQUAL_TRANSITIONS = "equal_transitions"
ELEMENT_AREA = "element_area"

SLIDER_DRAG = "slider_drag"
TEXT_INPUT = "text_input"
PLAIN_CLICK = "plain_click"

# a plain click is consistent with any interactive element: the blind
# classifier cannot tell a button press from a field-focus click
_EVIDENCE_KINDS = {
    SLIDER_DRAG: (SLIDER,),
    TEXT_INPUT: (TEXT_FIELD,),
    PLAIN_CLICK: (BUTTON, MULTIPLE_CHOICE, TEXT_FIELD, SLIDER),
}


class EstimatorError(Exception):
    pass


class InputModeError(EstimatorError):
    pass


class TrackerOverflowError(EstimatorError):
    def __init__(self, count: int, limit: int):
        super().__init__(f"click would grow tracker list to {count} "
                         f"(limit {limit}); collapse() to continue")
        self.count = count
        self.limit = limit


@dataclass(frozen=True)
class Evidence:
    kind: str
    detail: Optional[int] = None  # drag displacement or key count


@dataclass(frozen=True)
class EstimatorConfig:
    transition_scheme: str = EQUAL_TRANSITIONS
    element_detection: bool = True
    detection_scale: float = 0.95
    a_priori: bool = False
    target_prob_threshold: float = 0.9
    input_mode: str = RELATIVE_MOUSE
    prune_epsilon: float = 1e-12
    max_trackers: int = 100_000
    drag_threshold_px: int = DRAG_THRESHOLD_PX
    merge_same_state: bool = False

    def __post_init__(self) -> None:
        if self.transition_scheme not in (EQUAL_TRANSITIONS, ELEMENT_AREA):
            raise ValueError(f"unknown transition scheme {self.transition_scheme!r}")
        if not 0 < self.detection_scale <= 1:
            raise ValueError("detection_scale must be in (0, 1]")
        if not 0 < self.target_prob_threshold <= 1:
            raise ValueError("target_prob_threshold must be in (0, 1]")
        if self.input_mode not in (RELATIVE_MOUSE, ABSOLUTE_TOUCH):
            raise ValueError(f"unknown input mode {self.input_mode!r}")
        if self.prune_epsilon < 0:
            raise ValueError("prune_epsilon must be >= 0")
        if self.max_trackers <= 0:
            raise ValueError("max_trackers must be positive")


@dataclass(slots=True)
class Tracker:
    state: str
    region: Region
    prob: float


@dataclass(frozen=True)
class Estimate:
    state_probs: dict[str, float]
    top_state: str
    top_prob: float
    combined_region: Region
    tracker_count: int


def classify_window(events: Sequence[InputEvent],
                    drag_threshold: int = DRAG_THRESHOLD_PX) -> Optional[Evidence]:
    """Classify a raw gesture window: press/release with large horizontal
    displacement reads as a slider drag, a tight press/release as a plain
    click, printable keys as text input."""
    raw_dx = 0
    last_x: Optional[int] = None
    pressed = False
    released = False
    keys = 0
    for e in events:
        p = e.payload
        if isinstance(p, MouseMove):
            if pressed:
                raw_dx += p.dx
        elif isinstance(p, (TouchMove, TouchUp)):
            if pressed and last_x is not None:
                raw_dx += p.x - last_x
            last_x = p.x
            if isinstance(p, TouchUp):
                released = True
        elif isinstance(p, (ButtonDown, TouchDown)):
            pressed = True
            if isinstance(p, TouchDown):
                last_x = p.x
        elif isinstance(p, ButtonUp):
            released = True
        elif isinstance(p, Key):
            if len(p.char) == 1 and p.char.isprintable():
                keys += 1
    if pressed and released:
        if abs(raw_dx) >= drag_threshold:
            return Evidence(SLIDER_DRAG, detail=raw_dx)
        return Evidence(PLAIN_CLICK)
    if keys:
        return Evidence(TEXT_INPUT, detail=keys)
    return None


class _StateInfo:
    __slots__ = ("transitions", "trans_rects", "kind_rects")

    def __init__(self, model: UiModel, state_id: str):
        st = model.state(state_id)
        self.transitions: tuple[UiElement, ...] = st.transition_elements
        self.trans_rects: tuple[Rect, ...] = tuple(el.rect for el in self.transitions)
        kinds: dict[str, list[Rect]] = {}
        for el in st.elements:
            kinds.setdefault(el.kind, []).append(el.rect)
        self.kind_rects: dict[str, tuple[Rect, ...]] = {
            k: tuple(v) for k, v in kinds.items()}


class Estimator:
    def __init__(self, model: UiModel, cfg: EstimatorConfig,
                 trackers: list[Tracker]):
        self.model = model
        self.cfg = cfg
        # movement applies identically to every tracker, so clamp-free
        # deltas accumulate in one shared offset and regions materialize
        # lazily (regions are immutable values, sharing is safe)
        self._pending_dx = 0
        self._pending_dy = 0
        self._union_bbox: Optional[Rect] = None
        self._trackers = trackers
        self.event_count = 0
        self._screen = model.screen
        self._info: dict[str, _StateInfo] = {
            st.id: _StateInfo(model, st.id) for st in model.states}
        # live gesture window
        self._window_open = False
        self._window_raw_dx = 0
        self._touch_x: Optional[int] = None
        self._touch_y: Optional[int] = None

    @property
    def trackers(self) -> list[Tracker]:
        self._flush()
        self._union_bbox = None  # caller may mutate regions in place
        return self._trackers

    @trackers.setter
    def trackers(self, value: list[Tracker]) -> None:
        self._trackers = value
        self._pending_dx = self._pending_dy = 0
        self._union_bbox = None

    def _flush(self) -> None:
        dx, dy = self._pending_dx, self._pending_dy
        if dx == 0 and dy == 0:
            return
        for tr in self._trackers:
            tr.region = shift_region(tr.region, dx, dy)
        if self._union_bbox is not None:
            bb = self._union_bbox
            self._union_bbox = Rect(bb.x + dx, bb.y + dy, bb.w, bb.h)
        self._pending_dx = self._pending_dy = 0

    def _compute_union_bbox(self) -> Optional[Rect]:
        # bounding box over the materialized (pre-pending) regions
        if self._union_bbox is None and self._trackers:
            x = y = None
            x2 = y2 = None
            for tr in self._trackers:
                bb = tr.region.bounding_box()
                if bb is None:
                    continue
                x = bb.x if x is None else min(x, bb.x)
                y = bb.y if y is None else min(y, bb.y)
                x2 = bb.x2 if x2 is None else max(x2, bb.x2)
                y2 = bb.y2 if y2 is None else max(y2, bb.y2)
            if x is not None:
                self._union_bbox = Rect(x, y, x2 - x, y2 - y)
        return self._union_bbox

    # -- construction -------------------------------------------------

    @classmethod
    def init_known(cls, model: UiModel, state: str,
                   cursor: Optional[Point] = None,
                   cfg: Optional[EstimatorConfig] = None) -> "Estimator":
        cfg = cfg or EstimatorConfig()
        model.state(state)  # raises UnknownStateError
        if cursor is not None:
            region = Region.point(cursor)
        else:
            region = Region.full(model.screen)
        return cls(model, cfg, [Tracker(state, region, 1.0)])

    @classmethod
    def init_unknown(cls, model: UiModel,
                     cfg: Optional[EstimatorConfig] = None) -> "Estimator":
        cfg = cfg or EstimatorConfig()
        n = len(model.states)
        full = Region.full(model.screen)
        trackers = [Tracker(st.id, full, 1.0 / n) for st in model.states]
        return cls(model, cfg, trackers)

    # -- event operations ----------------------------------------------

    @property
    def in_gesture(self) -> bool:
        return self._window_open

    def on_move(self, d: Delta) -> None:
        if self.cfg.input_mode != RELATIVE_MOUSE:
            raise InputModeError("movement deltas are a relative-mouse input")
        screen = self._screen
        ndx = self._pending_dx + d.dx
        ndy = self._pending_dy + d.dy
        bb = self._compute_union_bbox()
        if bb is not None and screen.x <= bb.x + ndx and bb.x2 + ndx <= screen.x2 \
                and screen.y <= bb.y + ndy and bb.y2 + ndy <= screen.y2:
            self._pending_dx, self._pending_dy = ndx, ndy
            return
        self._flush()
        for tr in self._trackers:
            tr.region = translate_clip(tr.region, d, screen)
        self._union_bbox = None

    def _renormalize(self) -> None:
        total = sum(tr.prob for tr in self._trackers)
        if total > 0:
            inv = 1.0 / total
            for tr in self._trackers:
                tr.prob *= inv

    def on_evidence(self, ev: Evidence) -> None:
        """Rescale probabilities by gesture consistency; never deletes."""
        if not self.cfg.element_detection:
            raise EstimatorError("element detection is disabled")
        self._flush()
        s = self.cfg.detection_scale
        anti = 1.0 - s
        # per-state rect lists for the evidence kind, resolved once
        match_rects = {
            sid: tuple(r for kind in _EVIDENCE_KINDS[ev.kind]
                       for r in info.kind_rects.get(kind, ()))
            for sid, info in self._info.items()}
        for tr in self._trackers:
            rects = match_rects[tr.state]
            consistent = False
            if rects:
                for member in tr.region.rects:
                    for rect in rects:
                        if member.x < rect.x2 and rect.x < member.x2 \
                                and member.y < rect.y2 and rect.y < member.y2:
                            consistent = True
                            break
                    if consistent:
                        break
            tr.prob *= s if consistent else anti
        self._renormalize()

    def on_click(self, at: Optional[Point] = None) -> None:
        absolute = self.cfg.input_mode == ABSOLUTE_TOUCH
        if absolute and at is None:
            raise InputModeError("touch clicks carry an absolute position")
        if not absolute and at is not None:
            raise InputModeError("relative-mouse clicks have no position")
        self._flush()
        scheme_area = self.cfg.transition_scheme == ELEMENT_AREA
        apriori = self.cfg.a_priori
        point_region = Region.point(at) if absolute else None
        children: list[Tracker] = []
        for tr in self._trackers:
            region0 = point_region if absolute else tr.region
            info = self._info[tr.state]
            outcomes: list[tuple[str, Region, float]] = []
            for el in info.transitions:
                if not region0.intersects_rect(el.rect):
                    continue
                child_region = intersect(region0, el.rect)
                w = float(area(child_region)) if scheme_area else 1.0
                if apriori:
                    w *= el.a_priori_weight
                outcomes.append((el.transition_to, child_region, w))
            stay = subtract(region0, info.trans_rects)
            if not stay.is_empty:
                w = float(area(stay)) if scheme_area else 1.0
                outcomes.append((tr.state, stay, w))
            total_w = sum(w for _, _, w in outcomes)
            if total_w <= 0:
                continue
            inv = tr.prob / total_w
            for dest, child_region, w in outcomes:
                if w > 0:
                    children.append(Tracker(dest, child_region, w * inv))
        if len(children) > self.cfg.max_trackers:
            raise TrackerOverflowError(len(children), self.cfg.max_trackers)
        self.trackers = children
        self._renormalize()
        if self.cfg.prune_epsilon > 0:
            kept = [tr for tr in self._trackers if tr.prob >= self.cfg.prune_epsilon]
            if kept and len(kept) != len(self._trackers):
                self.trackers = kept
                self._renormalize()
        if self.cfg.merge_same_state:
            self._merge_same_state()

    def _merge_same_state(self) -> None:
        by_state: dict[str, list[Tracker]] = {}
        for tr in self._trackers:
            by_state.setdefault(tr.state, []).append(tr)
        merged = []
        for state_id, group in by_state.items():
            if len(group) == 1:
                merged.append(group[0])
            else:
                merged.append(Tracker(
                    state_id,
                    union(tr.region for tr in group),
                    sum(tr.prob for tr in group)))
        merged.sort(key=lambda tr: tr.state)
        self.trackers = merged

    # -- combined event pipeline ----------------------------------------

    def classify(self, window: Sequence[InputEvent]) -> Optional[Evidence]:
        return classify_window(window, self.cfg.drag_threshold_px)

    def observe(self, e: InputEvent) -> Optional[str]:
        """Feed one raw event through the full pipeline.

        Returns "click" or "drag" when a press/release gesture completes,
        "key" for key events, None otherwise.  Slider-drag gestures consume
        their press/release pair: no click outcome is branched for them.
        """
        self.event_count += 1
        p = e.payload
        if isinstance(p, MouseMove):
            self.on_move(Delta(p.dx, p.dy))
            if self._window_open:
                self._window_raw_dx += p.dx
            return None
        if isinstance(p, TouchMove):
            if self.cfg.input_mode != ABSOLUTE_TOUCH:
                raise InputModeError("touch events in a relative-mouse session")
            if self._window_open and self._touch_x is not None:
                self._window_raw_dx += p.x - self._touch_x
            self._touch_x, self._touch_y = p.x, p.y
            return None
        if isinstance(p, (ButtonDown, TouchDown)):
            if isinstance(p, TouchDown):
                if self.cfg.input_mode != ABSOLUTE_TOUCH:
                    raise InputModeError("touch events in a relative-mouse session")
                self._touch_x, self._touch_y = p.x, p.y
            if not self._window_open:
                self._window_open = True
                self._window_raw_dx = 0
            return None
        if isinstance(p, (ButtonUp, TouchUp)):
            if not self._window_open:
                return None  # stray release
            at: Optional[Point] = None
            if isinstance(p, TouchUp):
                if self._touch_x is not None:
                    self._window_raw_dx += p.x - self._touch_x
                self._touch_x, self._touch_y = p.x, p.y
                at = Point(p.x, p.y)
            self._window_open = False
            if abs(self._window_raw_dx) >= self.cfg.drag_threshold_px:
                if self.cfg.element_detection:
                    self.on_evidence(Evidence(SLIDER_DRAG, detail=self._window_raw_dx))
                return "drag"
            if self.cfg.element_detection:
                self.on_evidence(Evidence(PLAIN_CLICK))
            self.on_click(at=at)
            return "click"
        if isinstance(p, Key):
            if len(p.char) == 1 and p.char.isprintable():
                if self.cfg.element_detection:
                    self.on_evidence(Evidence(TEXT_INPUT, detail=1))
            return "key"
        raise EstimatorError(f"unknown event payload {p!r}")

    # -- estimates ------------------------------------------------------

    def estimate(self) -> Estimate:
        self._flush()
        sums: dict[str, float] = {}
        for tr in self._trackers:
            sums[tr.state] = sums.get(tr.state, 0.0) + tr.prob
        top_state = min(sums, key=lambda sid: (-sums[sid], sid))
        combined = union(tr.region for tr in self._trackers if tr.state == top_state)
        return Estimate(
            state_probs=sums,
            top_state=top_state,
            top_prob=sums[top_state],
            combined_region=combined,
            tracker_count=len(self._trackers),
        )

    def attack_ready(self, target_state: str) -> bool:
        if target_state not in self.model.target_states:
            raise ValueError(f"{target_state!r} is not a target state")
        self._flush()
        prob = sum(tr.prob for tr in self._trackers if tr.state == target_state)
        if prob < self.cfg.target_prob_threshold:
            return False
        gates = [el.rect for el in self.model.state(target_state).elements
                 if el.is_target or el.is_confirmation]
        if not gates:
            return True
        smallest = min(gates, key=lambda r: (r.area, r.w, r.h))
        combined = union(tr.region for tr in self._trackers
                         if tr.state == target_state)
        return fits_within(combined, smallest)

    def collapse(self) -> None:
        """Keep only the most likely tracker and restart tracking from it."""
        self._flush()
        if len(self._trackers) <= 1:
            if self._trackers:
                self._trackers[0].prob = 1.0
            return
        best = min(self._trackers, key=lambda tr: (
            -tr.prob, tr.state, area(tr.region),
            tuple((r.x, r.y, r.w, r.h) for r in tr.region.rects)))
        self.trackers = [Tracker(best.state, best.region, 1.0)]

    def snapshot(self) -> str:
        """Deterministic structured-text dump of the estimator state."""
        self._flush()
        trackers = sorted(
            ({"state": tr.state,
              "prob": tr.prob,
              "rects": [[r.x, r.y, r.w, r.h] for r in tr.region.rects]}
             for tr in self._trackers),
            key=lambda d: (d["state"], d["rects"], -d["prob"]))
        doc = {
            "snapshot_version": 1,
            "event_count": self.event_count,
            "config": asdict(self.cfg),
            "trackers": trackers,
        }
        return json.dumps(doc, sort_keys=True)
