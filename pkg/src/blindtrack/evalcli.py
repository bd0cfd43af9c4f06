"""Command-line evaluation harness.

Subcommands reproduce the full evaluation pipeline on synthetic corpora:
trace generation, a-priori weight profiling, accuracy-versus-clicks
tracking sweeps (with a config matrix), per-click latency benchmarks, and
attack batch runs.  All commands are deterministic given their seeds and
emit versioned CSV files plus a JSON summary per run directory.

Set ``BLINDTRACK_THREADS`` to parallelize across traces; output ordering
stays deterministic via post-sorting.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass
from functools import lru_cache
from multiprocessing import Pool
from pathlib import Path
from typing import Optional

from .attack import (
    CONFIRMATION_DRIVEN, ELEMENT_DRIVEN, AttackError, AttackSpec, run_session,
)
from .estimator import ELEMENT_AREA, EQUAL_TRANSITIONS, Estimator, EstimatorConfig
from .events import ABSOLUTE_TOUCH, RELATIVE_MOUSE, ButtonUp, Trace, TraceError
from .terminal import DRAG_THRESHOLD_PX, apply_event, boot_state
from .trace import (
    UserProfile, generate, pacemaker_goal, parse_trace, serialize_trace,
    to_touchscreen,
)
from .ui_model import (
    ModelError, UiModel, apply_weights, element_at, load_model_file,
)

UNKNOWN_START_CUT = 0.10  # fraction of leading events dropped for unknown-start runs


class CliError(Exception):
    pass


def _threads() -> int:
    raw = os.environ.get("BLINDTRACK_THREADS", "").strip()
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def _map_traces(fn, items: list):
    n = _threads()
    if n > 1 and len(items) > 1:
        with Pool(n) as pool:
            return pool.map(fn, items)
    return [fn(item) for item in items]


@lru_cache(maxsize=8)
def _load_model(path: str) -> UiModel:
    return load_model_file(path)


@lru_cache(maxsize=8)
def _load_weights(path: str) -> dict:
    doc = json.loads(Path(path).read_bytes())
    if doc.get("weights_version") != 1:
        raise CliError(f"unsupported weights file {path}")
    return doc["states"]


@lru_cache(maxsize=16)
def _weighted_model(model_path: str, weights_path: str) -> UiModel:
    model = _load_model(model_path)
    if not weights_path:
        return model
    return apply_weights(model, _load_weights(weights_path))


def _trace_paths(traces_arg: str) -> list[Path]:
    p = Path(traces_arg)
    if p.is_file():  # a manifest file
        doc = json.loads(p.read_bytes())
        return [p.parent / name for name in doc["traces"]]
    if p.is_dir():
        found = sorted(p.glob("*.trace"))
        if not found:
            raise CliError(f"no .trace files under {p}")
        return found
    raise CliError(f"no such trace corpus: {traces_arg}")


def _write_csv(path: Path, schema: str, header: list[str], rows: list) -> None:
    with path.open("w", newline="") as fh:
        fh.write(f"# schema: {schema}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# gen-traces


def _goal_for(task: str):
    if task == "pacemaker":
        return pacemaker_goal()
    raise CliError(f"unknown task {task!r}")


def cmd_gen_traces(args) -> int:
    model = _load_model(args.model)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    profile = UserProfile(error_rate=args.error_rate, mean_clicks=args.mean_clicks)
    goal = _goal_for(args.task)
    names = []
    for i in range(args.n):
        trace = generate(model, profile, goal, seed=args.seed + i)
        name = f"trace_{i:05d}.trace"
        (out / name).write_bytes(serialize_trace(trace))
        names.append(name)
    manifests = []
    if args.split:
        try:
            a, b = (int(x) for x in args.split.split("/"))
        except ValueError:
            raise CliError("--split expects e.g. 200/200") from None
        if a + b != args.n:
            raise CliError(f"--split {args.split} does not partition n={args.n}")
        manifests = [("manifest_train.json", "train", names[:a]),
                     ("manifest_eval.json", "eval", names[a:])]
    else:
        manifests = [("manifest.json", "all", names)]
    for fname, split, members in manifests:
        doc = {"manifest_version": 1, "model": model.id, "seed": args.seed,
               "split": split, "count": len(members), "traces": members}
        (out / fname).write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {args.n} traces to {out}")
    return 0


# ---------------------------------------------------------------------------
# profile


def count_element_clicks(model: UiModel, trace: Trace) -> dict[str, dict[str, int]]:
    """Ground-truth click counts per (state, element) from an oracle replay."""
    counts: dict[str, dict[str, int]] = {}
    truth = boot_state(model)
    for e in trace.events:
        prev = truth
        truth = apply_event(model, truth, e)
        if isinstance(e.payload, ButtonUp) and prev.pressed \
                and abs(prev.press_raw_dx) < DRAG_THRESHOLD_PX:
            el = element_at(model, prev.state, truth.cursor)
            if el is not None:
                counts.setdefault(prev.state, {})
                counts[prev.state][el.id] = counts[prev.state].get(el.id, 0) + 1
    return counts


def build_weights(model: UiModel, traces: list[Trace]) -> dict[str, dict[str, float]]:
    """Laplace-smoothed (+1) per-state element click frequencies, scaled to
    mean 1 per state so they neutrally weight transition outcomes."""
    counts: dict[str, dict[str, int]] = {}
    for trace in traces:
        for sid, per in count_element_clicks(model, trace).items():
            bucket = counts.setdefault(sid, {})
            for eid, n in per.items():
                bucket[eid] = bucket.get(eid, 0) + n
    weights: dict[str, dict[str, float]] = {}
    for st in model.states:
        if not st.elements:
            continue
        smoothed = {el.id: counts.get(st.id, {}).get(el.id, 0) + 1.0
                    for el in st.elements}
        mean = sum(smoothed.values()) / len(smoothed)
        weights[st.id] = {eid: v / mean for eid, v in smoothed.items()}
    return weights


def cmd_profile(args) -> int:
    model = _load_model(args.model)
    traces = [parse_trace(p.read_bytes()) for p in _trace_paths(args.traces)]
    weights = build_weights(model, traces)
    doc = {"weights_version": 1, "model": model.id, "states": weights}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"wrote weights for {len(weights)} states to {out}")
    return 0


# ---------------------------------------------------------------------------
# track


@dataclass(frozen=True)
class TrackConfig:
    start: str            # known | unknown
    scheme: str           # equal | area
    detect: bool
    apriori: str          # "off" or a weights file path
    touchscreen: bool
    max_clicks: int

    @property
    def config_id(self) -> str:
        apr = "off" if self.apriori == "off" else Path(self.apriori).stem
        mode = "touch" if self.touchscreen else "mouse"
        det = "on" if self.detect else "off"
        return f"{self.start}|{self.scheme}|det={det}|apriori={apr}|{mode}"


def _estimator_config(cfg: TrackConfig) -> EstimatorConfig:
    return EstimatorConfig(
        transition_scheme=EQUAL_TRANSITIONS if cfg.scheme == "equal" else ELEMENT_AREA,
        element_detection=cfg.detect,
        a_priori=cfg.apriori != "off",
        input_mode=ABSOLUTE_TOUCH if cfg.touchscreen else RELATIVE_MOUSE,
    )


def track_trace(model: UiModel, trace: Trace, cfg: TrackConfig,
                timing: bool = False) -> list[dict]:
    """Per-click measurement rows for one trace under one configuration."""
    if cfg.touchscreen:
        trace = to_touchscreen(model, trace)
    events = trace.events
    ncut = int(len(events) * UNKNOWN_START_CUT) if cfg.start == "unknown" else 0
    truth = boot_state(model)
    for e in events[:ncut]:
        truth = apply_event(model, truth, e)
    est_cfg = _estimator_config(cfg)
    if cfg.start == "known":
        est = Estimator.init_known(model, model.start_state, cfg=est_cfg)
    else:
        est = Estimator.init_unknown(model, cfg=est_cfg)
    screen_area = model.screen_width * model.screen_height
    rows = []
    click = 0
    for e in events[ncut:]:
        truth = apply_event(model, truth, e)
        t0 = time.perf_counter() if timing else 0.0
        gesture = est.observe(e)
        elapsed_ms = (time.perf_counter() - t0) * 1000.0 if timing else 0.0
        if gesture not in ("click", "drag"):
            continue
        click += 1
        estimate = est.estimate()
        wsum = psum = 0.0
        for tr in est.trackers:
            if tr.state == estimate.top_state:
                wsum += tr.prob * sum(r.area for r in tr.region.rects)
                psum += tr.prob
        area_pct = 100.0 * (wsum / psum) / screen_area if psum else 0.0
        union_pct = 100.0 * sum(r.area for r in estimate.combined_region.rects) / screen_area
        rows.append({
            "click": click,
            "correct": int(estimate.top_state == truth.state),
            "top_state": estimate.top_state,
            "true_state": truth.state,
            "top_prob": estimate.top_prob,
            "area_pct": area_pct,
            "area_union_pct": union_pct,
            "tracker_count": estimate.tracker_count,
            "ms": elapsed_ms,
        })
        if cfg.max_clicks and click >= cfg.max_clicks:
            break
    return rows


def _track_worker(payload):
    model_path, trace_path, cfg = payload
    model = _weighted_model(model_path, "" if cfg.apriori == "off" else cfg.apriori)
    trace = parse_trace(Path(trace_path).read_bytes())
    return [dict(row, trace=Path(trace_path).name) for row in track_trace(model, trace, cfg)]


def summarize_track(rows_by_config: dict[str, list[dict]]) -> dict:
    summary = {}
    for cid, rows in rows_by_config.items():
        by_trace: dict[str, list[dict]] = {}
        for row in rows:
            by_trace.setdefault(row["trace"], []).append(row)
        at10 = [max(r["correct"] for r in t if r["click"] == 10)
                for t in by_trace.values() if any(r["click"] == 10 for r in t)]
        at5 = [max(r["correct"] for r in t if r["click"] == 5)
               for t in by_trace.values() if any(r["click"] == 5 for r in t)]
        crossed5 = [int(any(r["area_pct"] <= 1.0 for r in t if r["click"] <= 5))
                    for t in by_trace.values()]
        crossed10 = [int(any(r["area_pct"] <= 1.0 for r in t if r["click"] <= 10))
                     for t in by_trace.values()]
        summary[cid] = {
            "traces": len(by_trace),
            "correct_at_5": sum(at5) / len(at5) if at5 else None,
            "correct_at_10": sum(at10) / len(at10) if at10 else None,
            "area_le_1pct_by_5": sum(crossed5) / len(crossed5) if crossed5 else None,
            "area_le_1pct_by_10": sum(crossed10) / len(crossed10) if crossed10 else None,
        }
    return summary


def cmd_track(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = _trace_paths(args.traces)
    if args.config:
        raw = json.loads(Path(args.config).read_bytes())
        configs = [TrackConfig(**entry) for entry in raw]
    else:
        configs = [
            TrackConfig(start=start, scheme=scheme, detect=det == "on",
                        apriori=apr, touchscreen=args.touchscreen,
                        max_clicks=args.max_clicks)
            for start in (args.start or ["known"])
            for scheme in (args.scheme or ["equal"])
            for det in (args.detect or ["on"])
            for apr in (args.apriori or ["off"])
        ]
    rows_by_config: dict[str, list[dict]] = {}
    for cfg in configs:
        payloads = [(args.model, str(p), cfg) for p in paths]
        results = _map_traces(_track_worker, payloads)
        rows = [row for chunk in results for row in chunk]
        rows.sort(key=lambda r: (r["trace"], r["click"]))
        rows_by_config[cfg.config_id] = rows
    header = ["config", "trace", "click", "correct", "top_state", "true_state",
              "top_prob", "area_pct", "area_union_pct", "tracker_count"]
    csv_rows = [
        [cid, r["trace"], r["click"], r["correct"], r["top_state"],
         r["true_state"], f"{r['top_prob']:.6f}", f"{r['area_pct']:.4f}",
         f"{r['area_union_pct']:.4f}", r["tracker_count"]]
        for cid in sorted(rows_by_config) for r in rows_by_config[cid]]
    _write_csv(out / "per_click.csv", "blindtrack-track-per-click v1", header, csv_rows)
    summary = summarize_track(rows_by_config)
    (out / "summary.json").write_text(json.dumps(
        {"summary_version": 1, "configs": summary}, indent=2, sort_keys=True) + "\n")
    matrix_rows = [[cid, s["correct_at_10"]] for cid, s in sorted(summary.items())]
    _write_csv(out / "matrix.csv", "blindtrack-track-matrix v1",
               ["config", "correct_at_10"], matrix_rows)
    for cid, s in sorted(summary.items()):
        c10 = "n/a" if s["correct_at_10"] is None else f"{s['correct_at_10']:.3f}"
        print(f"{cid}: correct@10={c10}")
    return 0


# ---------------------------------------------------------------------------
# bench


def _bench_worker(payload):
    model_path, trace_path, start, max_clicks = payload
    model = _load_model(model_path)
    trace = parse_trace(Path(trace_path).read_bytes())
    cfg = TrackConfig(start=start, scheme="area", detect=True, apriori="off",
                      touchscreen=False, max_clicks=max_clicks)
    rows = track_trace(model, trace, cfg, timing=True)
    return [{"start": start, "trace": Path(trace_path).name,
             "click": r["click"], "ms": r["ms"],
             "tracker_count": r["tracker_count"]} for r in rows]


def _percentile(values: list[float], q: float) -> float:
    if not values:
        return 0.0
    ordered = sorted(values)
    idx = min(len(ordered) - 1, max(0, int(round(q * (len(ordered) - 1)))))
    return ordered[idx]


def cmd_bench(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = _trace_paths(args.traces)
    all_rows = []
    for start in ("known", "unknown"):
        payloads = [(args.model, str(p), start, args.max_clicks) for p in paths]
        for chunk in _map_traces(_bench_worker, payloads):
            all_rows.extend(chunk)
    all_rows.sort(key=lambda r: (r["start"], r["trace"], r["click"]))
    _write_csv(out / "bench.csv", "blindtrack-bench v1",
               ["start", "trace", "click", "ms", "tracker_count"],
               [[r["start"], r["trace"], r["click"], f"{r['ms']:.3f}",
                 r["tracker_count"]] for r in all_rows])
    summary = {"summary_version": 1, "starts": {}}
    for start in ("known", "unknown"):
        rows = [r for r in all_rows if r["start"] == start]
        ms = [r["ms"] for r in rows]
        at10 = [r["ms"] for r in rows if r["click"] == 10]
        growth = {}
        for r in rows:
            growth.setdefault(r["click"], []).append(r["tracker_count"])
        summary["starts"][start] = {
            "clicks": len(ms),
            "median_ms": _percentile(ms, 0.5),
            "p90_ms": _percentile(ms, 0.9),
            "median_ms_at_click_10": _percentile(at10, 0.5),
            "tracker_growth": {str(k): _percentile([float(v) for v in vs], 0.5)
                               for k, vs in sorted(growth.items())},
        }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for start, s in summary["starts"].items():
        print(f"{start}: median={s['median_ms']:.2f} ms, "
              f"click10 median={s['median_ms_at_click_10']:.2f} ms")
    return 0


# ---------------------------------------------------------------------------
# attack


def _parse_target(raw: str) -> tuple[str, object]:
    if "=" not in raw:
        raise CliError(f"--target expects ELEMENT=VALUE, got {raw!r}")
    eid, _, value = raw.partition("=")
    try:
        return eid, float(value)
    except ValueError:
        return eid, value


def _attack_worker(payload):
    model_path, trace_path, variant, eid, value, speed, wait = payload
    model = _load_model(model_path)
    trace = parse_trace(Path(trace_path).read_bytes())
    spec = AttackSpec(variant=variant, target_element=eid, malicious_value=value,
                      step_interval_ms=speed, element_wait_ms=wait)
    outcome, _, _ = run_session(model, trace, spec)
    return {"trace": Path(trace_path).name, "variant": variant, "target": eid,
            "value": value, "speed_ms": speed, "launched": int(outcome.launched),
            "success": int(outcome.success), "visible_ms": outcome.visible_ms,
            "injected_events": outcome.injected_event_count}


def cmd_attack(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = _trace_paths(args.traces)
    variants = args.variant or ["confirmation"]
    targets = [_parse_target(t) for t in (args.target or [])]
    if not targets:
        raise CliError("at least one --target ELEMENT=VALUE is required")
    speeds = args.speed or [10]
    variant_names = {"confirmation": CONFIRMATION_DRIVEN, "element": ELEMENT_DRIVEN}
    rows = []
    for variant in variants:
        if variant not in variant_names:
            raise CliError(f"unknown variant {variant!r}")
        for eid, value in targets:
            for speed in speeds:
                payloads = [(args.model, str(p), variant_names[variant], eid,
                             value, speed, args.wait) for p in paths]
                rows.extend(_map_traces(_attack_worker, payloads))
    rows.sort(key=lambda r: (r["variant"], r["target"], r["speed_ms"], r["trace"]))
    _write_csv(out / "attacks.csv", "blindtrack-attack v1",
               ["trace", "variant", "target", "value", "speed_ms", "launched",
                "success", "visible_ms", "injected_events"],
               [[r["trace"], r["variant"], r["target"], r["value"], r["speed_ms"],
                 r["launched"], r["success"], r["visible_ms"], r["injected_events"]]
                for r in rows])
    summary: dict = {"summary_version": 1, "groups": {}}
    for r in rows:
        key = f"{r['variant']}|{r['target']}|{r['speed_ms']}ms"
        g = summary["groups"].setdefault(key, {"traces": 0, "launched": 0,
                                               "succeeded": 0, "visible_ms": []})
        g["traces"] += 1
        g["launched"] += r["launched"]
        g["succeeded"] += r["success"]
        if r["launched"]:
            g["visible_ms"].append(r["visible_ms"])
    for key, g in summary["groups"].items():
        vis = g.pop("visible_ms")
        g["launch_rate"] = g["launched"] / g["traces"] if g["traces"] else 0.0
        g["success_rate_launched"] = (g["succeeded"] / g["launched"]) if g["launched"] else 0.0
        g["visible_ms_median"] = _percentile([float(v) for v in vis], 0.5)
        g["visible_ms_max"] = max(vis) if vis else 0
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for key, g in sorted(summary["groups"].items()):
        print(f"{key}: launch={g['launch_rate']:.2f} "
              f"success|launched={g['success_rate_launched']:.2f}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blindtrack",
        description="evaluation harness for blind UI-state tracking and "
                    "input-injection attacks")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-traces", help="generate a synthetic trace corpus")
    gen.add_argument("--model", required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--split", help="train/eval split, e.g. 200/200")
    gen.add_argument("--task", default="pacemaker")
    gen.add_argument("--error-rate", type=float, default=0.07)
    gen.add_argument("--mean-clicks", type=float, default=29.0)
    gen.set_defaults(func=cmd_gen_traces)

    prof = sub.add_parser("profile", help="learn a-priori weights from a corpus")
    prof.add_argument("--model", required=True)
    prof.add_argument("--traces", required=True)
    prof.add_argument("--out", required=True)
    prof.set_defaults(func=cmd_profile)

    track = sub.add_parser("track", help="per-click tracking accuracy sweep")
    track.add_argument("--model", required=True)
    track.add_argument("--traces", required=True)
    track.add_argument("--out", required=True)
    track.add_argument("--start", action="append", choices=["known", "unknown"])
    track.add_argument("--scheme", action="append", choices=["equal", "area"])
    track.add_argument("--detect", action="append", choices=["on", "off"])
    track.add_argument("--apriori", action="append",
                       help="'off' or a weights file path (repeatable)")
    track.add_argument("--touchscreen", action="store_true")
    track.add_argument("--max-clicks", type=int, default=0)
    track.add_argument("--config", help="JSON config matrix override")
    track.add_argument("--seed", type=int, default=0)
    track.set_defaults(func=cmd_track)

    bench = sub.add_parser("bench", help="per-click processing-delay benchmark")
    bench.add_argument("--model", required=True)
    bench.add_argument("--traces", required=True)
    bench.add_argument("--out", required=True)
    bench.add_argument("--max-clicks", type=int, default=0)
    bench.set_defaults(func=cmd_bench)

    atk = sub.add_parser("attack", help="attack batch runs over a corpus")
    atk.add_argument("--model", required=True)
    atk.add_argument("--traces", required=True)
    atk.add_argument("--out", required=True)
    atk.add_argument("--variant", action="append",
                     choices=["confirmation", "element"])
    atk.add_argument("--target", action="append",
                     help="ELEMENT=VALUE (repeatable)")
    atk.add_argument("--speed", action="append", type=int,
                     help="injection pacing in ms (repeatable)")
    atk.add_argument("--wait", type=int, default=1000,
                     help="element-driven strike delay after an edit")
    atk.set_defaults(func=cmd_attack)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, AttackError, ModelError, TraceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
