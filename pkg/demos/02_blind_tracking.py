"""Blind state tracking against the ground-truth terminal.

A synthetic user completes the pacemaker task; the estimator sees only the
raw input events (no screen access) and still pins down the UI state.  The
oracle replay on the right shows what actually happened.
"""

from blindtrack import (
    Estimator, EstimatorConfig, UserProfile, apply_event, boot_state,
    bundled_model_path, generate, load_model_file, pacemaker_goal,
)

model = load_model_file(bundled_model_path())
trace = generate(model, UserProfile(), pacemaker_goal(), seed=11)
print(f"trace: {len(trace.events)} events")

for start in ("known", "unknown"):
    print(f"\n--- tracking from {start} start state ---")
    cfg = EstimatorConfig()  # equal transitions + element detection
    if start == "known":
        est = Estimator.init_known(model, model.start_state, cfg=cfg)
    else:
        est = Estimator.init_unknown(model, cfg=cfg)
    truth = boot_state(model)
    print(f"{'click':>5} {'guess':>18} {'p':>6} {'trackers':>8} {'truth':>18}")
    click = 0
    for e in trace.events:
        truth = apply_event(model, truth, e)
        if est.observe(e) in ("click", "drag"):
            click += 1
            s = est.estimate()
            mark = "" if s.top_state == truth.state else "  <-- wrong"
            print(f"{click:>5} {s.top_state:>18} {s.top_prob:>6.2f} "
                  f"{s.tracker_count:>8} {truth.state:>18}{mark}")
            if click >= 14:
                break
