"""Touchscreen tracking: absolute coordinates remove location uncertainty.

The same mouse trace is converted to touch events (movement dropped,
press/release coordinates made absolute); each tap then intersects at
most one element per state hypothesis, so the state resolves much faster.
"""

from blindtrack import (
    ABSOLUTE_TOUCH, Estimator, EstimatorConfig, UserProfile, apply_event,
    boot_state, bundled_model_path, generate, load_model_file,
    pacemaker_goal, to_touchscreen,
)

model = load_model_file(bundled_model_path())
mouse = generate(model, UserProfile(), pacemaker_goal(), seed=23)
touch = to_touchscreen(model, mouse)
print(f"mouse trace: {len(mouse.events)} events -> touch trace: "
      f"{len(touch.events)} events (movement dropped)")

cfg = EstimatorConfig(input_mode=ABSOLUTE_TOUCH)
est = Estimator.init_unknown(model, cfg=cfg)
truth = boot_state(model)
click = 0
print(f"{'tap':>4} {'guess':>18} {'p':>6} {'truth':>18}")
for e in touch.events:
    truth = apply_event(model, truth, e)
    if est.observe(e) in ("click", "drag"):
        click += 1
        s = est.estimate()
        print(f"{click:>4} {s.top_state:>18} {s.top_prob:>6.2f} {truth.state:>18}")
        if click >= 8:
            break
print("\nevery tracker region is a single pixel:",
      all(len(tr.region.rects) == 1 and tr.region.rects[0].area == 1
          for tr in est.trackers))
