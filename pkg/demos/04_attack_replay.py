"""Both attack launch techniques replayed against a synthetic user.

The interposer passes events through while tracking blindly.  In the
confirmation-driven variant it swallows the user's confirmation click,
sets the malicious value, confirms with a synthesized click, then puts the
user's value back; the element-driven variant strikes shortly after the
user edits the target element and leaves the value visible.
"""

from blindtrack import (
    AttackSpec, CONFIRMATION_DRIVEN, ELEMENT_DRIVEN, Trace, UserProfile,
    bundled_model_path, generate, load_model_file, pacemaker_goal,
    run_session, run_trace,
)

model = load_model_file(bundled_model_path())
trace = generate(model, UserProfile(), pacemaker_goal(), seed=37)
clean = run_trace(model, trace)[-1]
print(f"clean run commits: {clean.committed}")

for variant, name in ((CONFIRMATION_DRIVEN, "confirmation-driven"),
                      (ELEMENT_DRIVEN, "element-driven")):
    spec = AttackSpec(variant, "rate_slider", 185.0, step_interval_ms=10)
    outcome, log, applied = run_session(model, trace, spec)
    final = run_trace(model, Trace(trace.meta, tuple(applied)))[-1]
    print(f"\n--- {name}, slider target, 10 ms pacing ---")
    print(f"launched={outcome.launched} success={outcome.success} "
          f"injected={outcome.injected_event_count} events, "
          f"malicious value visible {outcome.visible_ms} ms")
    print(f"device committed rate = {final.committed['rate_slider']} "
          f"(user entered 120.0)")
    print(f"slider shows {final.values['rate_slider']} when the task ends")
    injected = [line for line in log.splitlines() if line.startswith("inject")]
    print(f"first injected events of {len(injected)}:")
    for line in injected[:6]:
        print("  " + line)
