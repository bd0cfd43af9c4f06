"""Cursor uncertainty regions are exact sets of pixels.

This walk-through shows the three operations the tracker lives on:
clamped translation (mouse movement), intersection (a click landing on an
element) and subtraction (a click that did not transition).
"""

from blindtrack import Delta, Point, Rect, Region, area, intersect, subtract, translate_clip

SCREEN = Rect(0, 0, 24, 12)


def show(title, region):
    mask = region.to_mask(SCREEN)
    print(f"\n{title}  (area {area(region)} px, {len(region.rects)} rects)")
    for row in mask:
        print("  " + "".join("#" if cell else "." for cell in row))


r = Region.full(SCREEN)
show("start: the cursor could be anywhere", r)

# the user moves right by 8: the cursor cannot be in the left 8 columns
r = translate_clip(r, Delta(8, 0), SCREEN)
show("after moving +8 in x (clamping shaves the left side)", r)

# moving into the corner squeezes the region against the screen edges
r = translate_clip(r, Delta(-30, -30), SCREEN)
show("after a corner sweep, only one pixel remains", r)

# a click on a button narrows the region to the overlap
r = Region.full(SCREEN)
button = Rect(4, 3, 8, 4)
clicked = intersect(r, button)
show(f"click outcome: inside the button {button}", clicked)

stayed = subtract(r, [button])
show("click outcome: outside every transition element", stayed)

print("\nareas always balance:",
      area(clicked), "+", area(stayed), "=", area(r))
