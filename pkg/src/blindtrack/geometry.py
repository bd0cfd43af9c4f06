"""Exact integer rectangle-union geometry for cursor uncertainty areas.

A Region is a set of pixels stored as pairwise-disjoint axis-aligned
rectangles in a canonical row-band form: rows are maximally merged, bands
with identical column structure are fused vertically, and the rectangle
list is sorted by (y, x).  Equal point sets therefore always produce
identical rectangle tuples, which the estimator relies on for
deterministic tie-breaking and snapshot comparison.

All coordinates are integer pixels; rectangles are half-open,
covering [x, x+w) x [y, y+h).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np


@dataclass(frozen=True, slots=True)
class Point:
    x: int
    y: int


@dataclass(frozen=True, slots=True)
class Delta:
    dx: int
    dy: int


class Rect:
    """Immutable axis-aligned pixel rectangle covering [x, x+w) x [y, y+h).

    Hand-rolled rather than a dataclass: the estimator performs millions of
    edge comparisons, so x2/y2/area are precomputed attributes.
    """

    __slots__ = ("x", "y", "w", "h", "x2", "y2", "area")

    def __init__(self, x: int, y: int, w: int, h: int):
        if w < 0 or h < 0:
            raise ValueError(f"negative rect size: {w}x{h}")
        self.x = x
        self.y = y
        self.w = w
        self.h = h
        self.x2 = x + w
        self.y2 = y + h
        self.area = w * h

    @property
    def is_empty(self) -> bool:
        return self.w == 0 or self.h == 0

    def contains(self, p: Point) -> bool:
        return self.x <= p.x < self.x2 and self.y <= p.y < self.y2

    def intersects(self, other: "Rect") -> bool:
        return (self.x < other.x2 and other.x < self.x2
                and self.y < other.y2 and other.y < self.y2)

    def intersect(self, other: "Rect") -> Optional["Rect"]:
        x = self.x if self.x > other.x else other.x
        y = self.y if self.y > other.y else other.y
        x2 = self.x2 if self.x2 < other.x2 else other.x2
        y2 = self.y2 if self.y2 < other.y2 else other.y2
        if x2 <= x or y2 <= y:
            return None
        return Rect(x, y, x2 - x, y2 - y)

    def center(self) -> Point:
        return Point(self.x + (self.w - 1) // 2, self.y + (self.h - 1) // 2)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Rect) and self.x == other.x
                and self.y == other.y and self.w == other.w and self.h == other.h)

    def __hash__(self) -> int:
        return hash((self.x, self.y, self.w, self.h))

    def __repr__(self) -> str:
        return f"Rect(x={self.x}, y={self.y}, w={self.w}, h={self.h})"


def _merge_spans(spans: list[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    """Union of 1-D half-open intervals, merged maximally (touching fuse)."""
    if not spans:
        return ()
    spans.sort()
    merged = [spans[0]]
    for a, b in spans[1:]:
        la, lb = merged[-1]
        if a <= lb:
            if b > lb:
                merged[-1] = (la, b)
        else:
            merged.append((a, b))
    return tuple(merged)


def _canonical_rects(rects: Iterable[Rect]) -> tuple[Rect, ...]:
    """Canonicalize an arbitrary (possibly overlapping) rect collection."""
    boxes = [r for r in rects if not r.is_empty]
    if not boxes:
        return ()
    edges = sorted({r.y for r in boxes} | {r.y2 for r in boxes})
    bands: list[tuple[int, int, tuple[tuple[int, int], ...]]] = []
    for ya, yb in zip(edges, edges[1:]):
        spans = _merge_spans([(r.x, r.x2) for r in boxes if r.y <= ya and r.y2 >= yb])
        if not spans:
            continue
        if bands and bands[-1][1] == ya and bands[-1][2] == spans:
            bands[-1] = (bands[-1][0], yb, spans)
        else:
            bands.append((ya, yb, spans))
    out = []
    for ya, yb, spans in bands:
        for xa, xb in spans:
            out.append(Rect(xa, ya, xb - xa, yb - ya))
    return tuple(out)


class Region:
    """Union of disjoint pixel rectangles in canonical form."""

    __slots__ = ("rects", "_area", "_bbox")

    def __init__(self, rects: Iterable[Rect] = ()):
        self.rects: tuple[Rect, ...] = _canonical_rects(rects)
        self._area: int = sum(r.area for r in self.rects)
        self._bbox: Optional[Rect] = None

    @classmethod
    def _wrap(cls, canonical: Sequence[Rect]) -> "Region":
        # internal fast path: caller guarantees canonical form
        reg = object.__new__(cls)
        reg.rects = tuple(canonical)
        reg._area = sum(r.area for r in reg.rects)
        reg._bbox = None
        return reg

    @classmethod
    def empty(cls) -> "Region":
        return cls._wrap(())

    @classmethod
    def full(cls, screen: Rect) -> "Region":
        return cls._wrap((screen,)) if not screen.is_empty else cls.empty()

    @classmethod
    def point(cls, p: Point) -> "Region":
        return cls._wrap((Rect(p.x, p.y, 1, 1),))

    @property
    def is_empty(self) -> bool:
        return not self.rects

    def contains(self, p: Point) -> bool:
        return any(r.contains(p) for r in self.rects)

    def intersects_rect(self, rect: Rect) -> bool:
        return any(r.intersects(rect) for r in self.rects)

    def bounding_box(self) -> Optional[Rect]:
        if not self.rects:
            return None
        if self._bbox is None:
            x = min(r.x for r in self.rects)
            y = self.rects[0].y
            x2 = max(r.x2 for r in self.rects)
            y2 = max(r.y2 for r in self.rects)
            self._bbox = Rect(x, y, x2 - x, y2 - y)
        return self._bbox

    def to_mask(self, screen: Rect) -> np.ndarray:
        """Boolean pixel bitmap of shape (screen.h, screen.w)."""
        mask = np.zeros((screen.h, screen.w), dtype=bool)
        for r in self.rects:
            mask[r.y - screen.y:r.y2 - screen.y, r.x - screen.x:r.x2 - screen.x] = True
        return mask

    @classmethod
    def from_mask(cls, mask: np.ndarray, origin: Point = Point(0, 0)) -> "Region":
        rects = []
        for y, x in zip(*np.nonzero(mask)):
            rects.append(Rect(int(x) + origin.x, int(y) + origin.y, 1, 1))
        return cls(rects)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Region) and self.rects == other.rects

    def __hash__(self) -> int:
        return hash(self.rects)

    def __repr__(self) -> str:
        return f"Region({list(self.rects)!r})"


def area(r: Region) -> int:
    return r._area


def intersect(r: Region, rect: Rect) -> Region:
    clipped = []
    untouched = 0
    for member in r.rects:
        piece = member.intersect(rect)
        if piece is not None:
            clipped.append(piece)
            if piece == member:
                untouched += 1
    if untouched == len(r.rects):
        return r  # rect covers the whole region
    if len(clipped) <= 1:
        return Region._wrap(clipped)
    # clipping can equalize adjacent bands, so re-canonicalize
    return Region(clipped)


def _rect_minus(r: Rect, hole: Rect) -> list[Rect]:
    cut = r.intersect(hole)
    if cut is None:
        return [r]
    parts = []
    if cut.y > r.y:
        parts.append(Rect(r.x, r.y, r.w, cut.y - r.y))
    if cut.y2 < r.y2:
        parts.append(Rect(r.x, cut.y2, r.w, r.y2 - cut.y2))
    if cut.x > r.x:
        parts.append(Rect(r.x, cut.y, cut.x - r.x, cut.h))
    if cut.x2 < r.x2:
        parts.append(Rect(cut.x2, cut.y, r.x2 - cut.x2, cut.h))
    return parts


def subtract(r: Region, holes: Sequence[Rect]) -> Region:
    frags = list(r.rects)
    touched = False
    for hole in holes:
        if hole.is_empty or not any(f.intersects(hole) for f in frags):
            continue
        touched = True
        nxt: list[Rect] = []
        for frag in frags:
            nxt.extend(_rect_minus(frag, hole))
        frags = nxt
        if not frags:
            break
    if not touched:
        return r
    if len(frags) <= 1:
        return Region._wrap(frags)
    return Region(frags)


def _axis_image(a: int, b: int, d: int, lo: int, hi: int) -> tuple[int, int]:
    """Image of half-open [a, b) under x -> clamp(x + d, lo, hi - 1).

    The map is monotone with unit steps, so the image of a contiguous
    range is contiguous: [clamp(a+d), clamp(b-1+d)] inclusive.
    """
    first = min(max(a + d, lo), hi - 1)
    last = min(max(b - 1 + d, lo), hi - 1)
    return first, last + 1


def shift_region(r: Region, dx: int, dy: int) -> Region:
    """Pure translation (caller guarantees no clamping occurs)."""
    if dx == 0 and dy == 0:
        return r
    out = Region._wrap(tuple(Rect(m.x + dx, m.y + dy, m.w, m.h) for m in r.rects))
    out._area = r._area
    return out


def translate_clip(r: Region, d: Delta, screen: Rect) -> Region:
    """Point-set image of r under per-axis saturating cursor movement."""
    if r.is_empty or (d.dx == 0 and d.dy == 0):
        return r
    bb = r.bounding_box()
    assert bb is not None
    if (screen.x <= bb.x + d.dx and bb.x2 + d.dx <= screen.x2
            and screen.y <= bb.y + d.dy and bb.y2 + d.dy <= screen.y2):
        # no clamping anywhere: pure shift preserves canonical form
        return shift_region(r, d.dx, d.dy)
    shifted = []
    for m in r.rects:
        xa, xb = _axis_image(m.x, m.x2, d.dx, screen.x, screen.x2)
        ya, yb = _axis_image(m.y, m.y2, d.dy, screen.y, screen.y2)
        shifted.append(Rect(xa, ya, xb - xa, yb - ya))
    return Region(shifted)


def fits_within(r: Region, rect: Rect) -> bool:
    """Launch-accuracy test: total area fits and the bounding box would
    fit inside a rect-sized window (containment is not required)."""
    if r.is_empty:
        return True
    bb = r.bounding_box()
    assert bb is not None
    return area(r) <= rect.area and bb.w <= rect.w and bb.h <= rect.h


def union(regions: Iterable[Region]) -> Region:
    rects: list[Rect] = []
    for reg in regions:
        rects.extend(reg.rects)
    return Region(rects)
