"""Independent brute-force oracles used to check the library bit-exactly.

Everything here works on per-pixel boolean bitmaps and naive loops on
purpose: these implementations must stay structurally independent of the
rectangle algebra and estimator they verify.
"""

from __future__ import annotations

import numpy as np

from blindtrack.geometry import Point, Rect


def mask_for_rect(rect: Rect, screen: Rect) -> np.ndarray:
    mask = np.zeros((screen.h, screen.w), dtype=bool)
    for y in range(screen.h):
        for x in range(screen.w):
            if rect.x <= x + screen.x < rect.x + rect.w and rect.y <= y + screen.y < rect.y + rect.h:
                mask[y, x] = True
    return mask


def mask_translate_clip(mask: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Image of every set pixel under per-axis saturating movement."""
    h, w = mask.shape
    out = np.zeros_like(mask)
    for y in range(h):
        for x in range(w):
            if mask[y, x]:
                nx = min(max(x + dx, 0), w - 1)
                ny = min(max(y + dy, 0), h - 1)
                out[ny, nx] = True
    return out


def mask_intersect(mask: np.ndarray, rect: Rect, screen: Rect) -> np.ndarray:
    return mask & mask_for_rect(rect, screen)


def mask_subtract(mask: np.ndarray, holes: list[Rect], screen: Rect) -> np.ndarray:
    out = mask.copy()
    for hole in holes:
        out &= ~mask_for_rect(hole, screen)
    return out


def mask_area(mask: np.ndarray) -> int:
    return int(mask.sum())


def mask_fits_within(mask: np.ndarray, rect: Rect) -> bool:
    if not mask.any():
        return True
    ys, xs = np.nonzero(mask)
    bw = int(xs.max() - xs.min()) + 1
    bh = int(ys.max() - ys.min()) + 1
    return mask_area(mask) <= rect.w * rect.h and bw <= rect.w and bh <= rect.h


def random_rect(rng, screen: Rect, allow_empty: bool = False) -> Rect:
    lo = 0 if allow_empty else 1
    w = rng.randint(lo, screen.w)
    h = rng.randint(lo, screen.h)
    x = rng.randint(0, screen.w - w) if screen.w > w else 0
    y = rng.randint(0, screen.h - h) if screen.h > h else 0
    return Rect(x + screen.x, y + screen.y, w, h)


def random_mask(rng, screen: Rect, n_rects: int = 3) -> tuple[np.ndarray, list[Rect]]:
    """A random pixel set built from overlapping random rectangles."""
    rects = [random_rect(rng, screen) for _ in range(rng.randint(1, n_rects))]
    mask = np.zeros((screen.h, screen.w), dtype=bool)
    for r in rects:
        mask |= mask_for_rect(r, screen)
    return mask, rects


# ---------------------------------------------------------------------------
# Exhaustive posterior enumeration over pixel bitmaps.  Used to verify the
# estimator's per-state probabilities on small models; deliberately built
# on masks and plain loops, sharing no code with the tracker algebra.

class EnumerationPosterior:
    def __init__(self, model, known_state=None, cursor=None,
                 scheme="equal_transitions", detection=False, scale=0.95,
                 apriori=False, drag_threshold=10, absolute=False):
        self.model = model
        self.screen = model.screen
        self.scheme = scheme
        self.detection = detection
        self.scale = scale
        self.apriori = apriori
        self.drag_threshold = drag_threshold
        self.absolute = absolute
        self.hyps = []  # (state_id, mask, weight)
        if known_state is not None:
            if cursor is not None:
                mask = np.zeros((self.screen.h, self.screen.w), dtype=bool)
                mask[cursor.y, cursor.x] = True
            else:
                mask = np.ones((self.screen.h, self.screen.w), dtype=bool)
            self.hyps.append((known_state, mask, 1.0))
        else:
            for st in model.states:
                self.hyps.append((st.id, np.ones((self.screen.h, self.screen.w), dtype=bool),
                                  1.0 / len(model.states)))
        self._pressed = False
        self._raw_dx = 0
        self._touch_x = None

    def _element_masks(self, state_id, kinds):
        masks = []
        for el in self.model.state(state_id).elements:
            if el.kind in kinds:
                masks.append(mask_for_rect(el.rect, self.screen))
        return masks

    def _reweight(self, kinds):
        new = []
        for state_id, mask, w in self.hyps:
            consistent = any((mask & m).any() for m in self._element_masks(state_id, kinds))
            new.append((state_id, mask, w * (self.scale if consistent else 1.0 - self.scale)))
        self.hyps = new

    def _click(self, at=None):
        new = []
        for state_id, mask, w in self.hyps:
            if self.absolute:
                mask0 = np.zeros_like(mask)
                mask0[at.y, at.x] = True
            else:
                mask0 = mask
            outcomes = []
            stay = mask0.copy()
            for el in self.model.state(state_id).elements:
                if el.transition_to is None:
                    continue
                emask = mask_for_rect(el.rect, self.screen)
                hit = mask0 & emask
                if hit.any():
                    base = float(hit.sum()) if self.scheme == "element_area" else 1.0
                    if self.apriori:
                        base *= el.a_priori_weight
                    outcomes.append((el.transition_to, hit, base))
                stay &= ~emask
            if stay.any():
                base = float(stay.sum()) if self.scheme == "element_area" else 1.0
                outcomes.append((state_id, stay, base))
            total = sum(b for _, _, b in outcomes)
            if total <= 0:
                continue
            for dest, m, b in outcomes:
                if b > 0:
                    new.append((dest, m, w * b / total))
        self.hyps = new

    def feed(self, events):
        from blindtrack.events import (
            ButtonDown, ButtonUp, Key, MouseMove, TouchDown, TouchMove, TouchUp,
        )
        from blindtrack.geometry import Point as GPoint
        for e in events:
            p = e.payload
            if isinstance(p, MouseMove):
                self.hyps = [(s, mask_translate_clip(m, p.dx, p.dy), w)
                             for s, m, w in self.hyps]
                if self._pressed:
                    self._raw_dx += p.dx
            elif isinstance(p, TouchMove):
                if self._pressed and self._touch_x is not None:
                    self._raw_dx += p.x - self._touch_x
                self._touch_x = p.x
            elif isinstance(p, (ButtonDown, TouchDown)):
                if not self._pressed:
                    self._pressed = True
                    self._raw_dx = 0
                if isinstance(p, TouchDown):
                    self._touch_x = p.x
            elif isinstance(p, (ButtonUp, TouchUp)):
                if not self._pressed:
                    continue
                self._pressed = False
                at = None
                if isinstance(p, TouchUp):
                    if self._touch_x is not None:
                        self._raw_dx += p.x - self._touch_x
                    self._touch_x = p.x
                    at = GPoint(p.x, p.y)
                if abs(self._raw_dx) >= self.drag_threshold:
                    if self.detection:
                        self._reweight(("slider",))
                else:
                    if self.detection:
                        # plain clicks are consistent with any interactive element
                        self._reweight(("button", "multiple_choice",
                                        "text_field", "slider"))
                    self._click(at)
            elif isinstance(p, Key):
                if self.detection and len(p.char) == 1 and p.char.isprintable():
                    self._reweight(("text_field",))

    def state_probs(self):
        sums = {}
        for state_id, _, w in self.hyps:
            sums[state_id] = sums.get(state_id, 0.0) + w
        total = sum(sums.values())
        return {k: v / total for k, v in sums.items()}
