"""Command-line entry point wiring the toolkit's workflows together.

Subcommands: convert, split, evaluate, simulate, serve, replay, query.
Exit codes: 0 success, 2 usage, 3 malformed input (parse/wire/snapshot),
4 data errors (unknown class/node, bad values), 5 I/O failures.

Settings shared with the ingestion pipeline (listen address, window width,
lateness horizon, confidence cutoff) resolve as: command-line flag, then
TRAFFICLENS_* environment variable, then --config JSON file, then default.
"""

from __future__ import annotations

import argparse
import json
import os
import signal
import sys
import threading
from pathlib import Path

from .annotations import (
    ClassMap,
    DatasetManifest,
    load_yolo_labels,
    read_manifest,
    parse_voc_file,
    split_dataset,
    write_manifest,
    write_yolo_txt,
)
from .errors import (
    InvalidAnnotation,
    InvalidBox,
    InvalidImageSize,
    ParseError,
    SnapshotError,
    TrafficLensError,
    UnknownClass,
    WireError,
)
from .evaluation import EvalConfig, evaluate, format_table, read_detections, write_report_files
from .graph import DEFAULT_LATENESS_MS, DEFAULT_WINDOW_MS, TrafficGraph, load_graph_script
from .ingest import IngestServer, SimulatorConfig, replay_file, simulate_to_file

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_DATA = 4
EXIT_IO = 5

_PARSE_ERRORS = (ParseError, WireError, SnapshotError, InvalidAnnotation, InvalidBox, InvalidImageSize)

DEFAULT_CONFIDENCE_CUTOFF = 0.25


def _ci_mode() -> bool:
    return os.environ.get("TRAFFICLENS_CI", "0") not in ("", "0")


def _resolve(flag_value, env_key: str, config: dict, config_key: str, default, cast):
    """Flag > environment > config file > default."""
    if flag_value is not None:
        return flag_value
    env = os.environ.get(env_key)
    if env is not None and env != "":
        return cast(env)
    if config_key in config:
        return cast(config[config_key])
    return default


def _load_config_file(path) -> dict:
    if path is None:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _print_json(payload, path=None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_convert(args) -> int:
    class_map = ClassMap.from_file(args.classes)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    xml_paths = sorted(Path(args.voc_dir).glob("*.xml"))
    converted = 0
    failed = 0
    unknown_classes: set[str] = set()
    records = []
    for path in xml_paths:
        try:
            record = parse_voc_file(path, class_map)
        except UnknownClass as exc:
            if isinstance(exc.name, str):
                unknown_classes.add(exc.name)
            if not args.skip_bad:
                raise
            failed += 1
            continue
        except _PARSE_ERRORS:
            if not args.skip_bad:
                raise
            failed += 1
            continue
        (out_dir / f"{record.image_id}.txt").write_text(write_yolo_txt(record), encoding="utf-8")
        records.append(record)
        converted += 1

    manifest_path = out_dir / "manifest.csv"
    splits = {r.image_id: "train" for r in records}
    write_manifest(DatasetManifest(records, splits), manifest_path)
    class_map.to_file(out_dir / "classes.txt")

    summary = {
        "converted": converted,
        "failed": failed,
        "unknown_classes": sorted(unknown_classes),
        "manifest": str(manifest_path),
    }
    print(f"converted {converted} failed {failed}")
    if unknown_classes:
        print("unknown classes: " + ", ".join(sorted(unknown_classes)))
    if args.summary_json:
        _print_json(summary, args.summary_json)
    return EXIT_OK


def cmd_split(args) -> int:
    if _ci_mode() and args.seed is None:
        print("error: --seed is required in CI mode (TRAFFICLENS_CI)", file=sys.stderr)
        return EXIT_USAGE
    fractions = tuple(float(f) for f in args.fractions.split(","))
    manifest = read_manifest(args.manifest)
    result = split_dataset(manifest.records, fractions, args.seed if args.seed is not None else 0)
    write_manifest(result, args.out)
    sizes = result.sizes()
    print(f"train {sizes['train']} valid {sizes['valid']} test {sizes['test']}")
    if args.summary_json:
        _print_json({"sizes": sizes, "seed": result.seed, "fractions": list(fractions)}, args.summary_json)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    class_map = ClassMap.from_file(args.classes)
    manifest = read_manifest(args.manifest)
    missing = load_yolo_labels(manifest, args.labels_dir, class_map, split="test")
    detections = read_detections(args.detections, manifest, len(class_map))
    config = EvalConfig(
        iou_threshold=args.iou,
        confusion_confidence=args.conf,
        fixed_confidence=args.fixed_confidence,
    )
    report = evaluate(detections, manifest, class_map, config)
    print(format_table(report))
    if missing:
        print(f"note: {missing} test image(s) had no label file (treated as empty)")
    created = write_report_files(report, args.out_dir)
    print(f"wrote {len(created)} report files to {args.out_dir}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    if _ci_mode() and args.seed is None:
        print("error: --seed is required in CI mode (TRAFFICLENS_CI)", file=sys.stderr)
        return EXIT_USAGE
    config = SimulatorConfig.from_json(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.duration_ms is not None:
        overrides["duration_ms"] = args.duration_ms
    if overrides:
        from dataclasses import replace

        config = replace(config, **overrides)
    summary = simulate_to_file(config, args.out)
    payload = {
        "events": summary.events,
        "total_detections": summary.total_detections,
        "per_camera": {c: [int(x) for x in v] for c, v in summary.per_camera.items()},
        "seed": config.seed,
        "out": str(args.out),
    }
    print(f"emitted {summary.events} events, {summary.total_detections} detections")
    if args.summary_json:
        _print_json(payload, args.summary_json)
    return EXIT_OK


def _build_graph(args, config: dict) -> TrafficGraph:
    class_map = ClassMap.from_file(args.classes)
    window_ms = _resolve(args.window_ms, "TRAFFICLENS_WINDOW_MS", config, "window_ms", DEFAULT_WINDOW_MS, int)
    lateness_ms = _resolve(
        args.lateness_ms, "TRAFFICLENS_LATENESS_MS", config, "lateness_ms", DEFAULT_LATENESS_MS, int
    )
    return load_graph_script(args.graph_file, class_map, window_ms=window_ms, lateness_ms=lateness_ms)


def cmd_serve(args) -> int:
    config = _load_config_file(args.config)
    graph = _build_graph(args, config)
    listen = _resolve(args.listen, "TRAFFICLENS_LISTEN", config, "listen", "127.0.0.1:8787", str)
    host, _, port_s = listen.rpartition(":")
    cutoff = _resolve(
        args.conf_cutoff, "TRAFFICLENS_CONF_CUTOFF", config, "confidence_cutoff", DEFAULT_CONFIDENCE_CUTOFF, float
    )
    server = IngestServer(graph, host=host or "127.0.0.1", port=int(port_s), confidence_cutoff=cutoff)

    stop = threading.Event()
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: stop.set())
    server.start()
    print(f"listening on {server.address[0]}:{server.address[1]} (Ctrl-C to stop)", flush=True)
    stop.wait()
    server.stop()
    if args.snapshot_out:
        graph.snapshot(args.snapshot_out)
        print(f"snapshot written to {args.snapshot_out}")
    _print_json(server.counters())
    return EXIT_OK


def cmd_replay(args) -> int:
    config = _load_config_file(args.config)
    graph = _build_graph(args, config)
    cutoff = _resolve(
        args.conf_cutoff, "TRAFFICLENS_CONF_CUTOFF", config, "confidence_cutoff", DEFAULT_CONFIDENCE_CUTOFF, float
    )
    summary = replay_file(args.events, graph, speed=args.speed, confidence_cutoff=cutoff)
    if args.snapshot_out:
        graph.snapshot(args.snapshot_out)
    payload = {
        "total_lines": summary.total_lines,
        "applied_events": summary.applied_events,
        "counted_vehicles": summary.counted_vehicles,
        "rejected_events": summary.rejected_events,
        "malformed_lines": summary.malformed_lines,
        "duration_seconds": summary.duration_seconds,
        "errors": summary.errors,
    }
    _print_json(payload, args.summary_json)
    if args.summary_json:
        print(
            f"applied {summary.applied_events} events "
            f"({summary.counted_vehicles} vehicles), rejected {summary.rejected_events}, "
            f"malformed {summary.malformed_lines}"
        )
    return EXIT_OK


def _format_window_counts(window, class_names):
    parts = [f"{name}={count}" for name, count in zip(class_names, window.counts) if count]
    return " ".join(parts) if parts else "-"


def cmd_query(args) -> int:
    graph = TrafficGraph.restore(args.snapshot)
    span = graph.window_span(args.node if args.node else None)
    start = args.start if args.start is not None else (span[0] if span else 0)
    end = args.end if args.end is not None else (span[1] - 1 if span else 0)
    names = graph.class_map.names

    if args.top is not None:
        ranking = graph.top_nodes_by_flow(start, end, class_filter=args.cls, limit=args.top)
        if args.json:
            _print_json([{"node": n, "total": t} for n, t in ranking])
        else:
            suffix = f" class={args.cls}" if args.cls else ""
            print(f"top nodes by flow [{start}, {end}]{suffix}")
            for node_id, total in ranking:
                print(f"{node_id}\t{total}")
        return EXIT_OK

    windows = graph.query_flow(args.node, start, end, class_filter=args.cls)
    if args.json:
        _print_json(
            [
                {
                    "node": w.node_id,
                    "start_ms": w.start_ms,
                    "width_ms": w.width_ms,
                    "total": w.total,
                    "counts": {name: c for name, c in zip(names, w.counts) if c},
                }
                for w in windows
            ]
        )
    else:
        print(f"node {args.node} windows [{start}, {end}]")
        print("window_start\ttotal\tcounts")
        for window in windows:
            print(f"{window.start_ms}\t{window.total}\t{_format_window_counts(window, names)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trafficlens",
        description="Vehicle-detection analytics: evaluation, conversion, traffic-flow graph.",
        epilog="exit codes: 0 ok, 2 usage, 3 malformed input, 4 data error, 5 I/O",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert a VOC XML directory to TXT labels")
    p.add_argument("--voc-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--classes", required=True, help="class list file, one name per line")
    p.add_argument("--skip-bad", action="store_true", help="skip unparseable files instead of failing")
    p.add_argument("--summary-json")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("split", help="assign train/valid/test splits in a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fractions", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int)
    p.add_argument("--summary-json")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("evaluate", help="score a detections file against the test split")
    p.add_argument("--detections", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--labels-dir", required=True)
    p.add_argument("--classes", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--conf", type=float, default=DEFAULT_CONFIDENCE_CUTOFF, help="confusion-matrix confidence threshold")
    p.add_argument("--fixed-confidence", type=float, help="report P/R at this confidence instead of the F1 maximum")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="generate a synthetic camera event stream")
    p.add_argument("--config", required=True, help="simulator config JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--duration-ms", type=int)
    p.add_argument("--summary-json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="run the stream-ingestion server")
    p.add_argument("--graph-file", required=True)
    p.add_argument("--classes", required=True)
    p.add_argument("--listen", help="host:port (default 127.0.0.1:8787)")
    p.add_argument("--window-ms", type=int)
    p.add_argument("--lateness-ms", type=int)
    p.add_argument("--conf-cutoff", type=float)
    p.add_argument("--config", help="JSON config file (lowest precedence)")
    p.add_argument("--snapshot-out")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="replay an event file into a graph")
    p.add_argument("--events", required=True)
    p.add_argument("--graph-file", required=True)
    p.add_argument("--classes", required=True)
    p.add_argument("--speed", type=float, default=0.0, help="0 = as fast as possible")
    p.add_argument("--window-ms", type=int)
    p.add_argument("--lateness-ms", type=int)
    p.add_argument("--conf-cutoff", type=float)
    p.add_argument("--config")
    p.add_argument("--snapshot-out")
    p.add_argument("--summary-json")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("query", help="query flow windows or top nodes from a snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--node")
    p.add_argument("--top", type=int)
    p.add_argument("--from", dest="start", type=int)
    p.add_argument("--to", dest="end", type=int)
    p.add_argument("--class", dest="cls")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_query)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "query" and (args.node is None) == (args.top is None):
        parser.error("query needs exactly one of --node or --top")
    try:
        return args.func(args)
    except _PARSE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except TrafficLensError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
