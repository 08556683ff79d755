"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Run `pytest tests/test_acceptance.py -v -s` to see the lines as they print.
Criterion 1 is expected to fail on its mAP50-95 column: the published
per-class values are 3-decimal rounded and their exact mean (0.731467)
sits 0.000533 from the published all-row value 0.732, outside the +-0.0005
band the criterion demands. The test states the criterion faithfully and
reports the miss rather than widening the tolerance.
"""

import time

import numpy as np
import pytest

from trafficlens.annotations import (
    ClassMap,
    DatasetManifest,
    GroundTruth,
    ImageRecord,
    parse_voc,
    parse_yolo_txt,
    split_dataset,
    write_yolo_txt,
)
from trafficlens.boxes import BoundingBox, BoxFormat, convert_box, iou
from trafficlens.evaluation import (
    Detection,
    average_precision,
    evaluate,
    macro_average_rows,
    match_detections,
    pr_curve,
)
from trafficlens.graph import TrafficGraph, parse_graph_script
from trafficlens.ingest import SimulatorConfig, replay_file, simulate_to_file

from .conftest import random_box
from .oracles import ap_101_maxscan
from .reference_table import ALL_ROW_TARGET, REFERENCE_ROWS
from .test_evaluation import random_ranked_instance


def _finish(criterion: str, failures: list[str]) -> None:
    status = "FAIL" if failures else "PASS"
    print(f"[ACCEPTANCE] {criterion}: {status}")
    assert not failures, f"{criterion}: " + "; ".join(failures)


def test_criterion_01_macro_average_identity():
    started = time.perf_counter()
    all_row = macro_average_rows(REFERENCE_ROWS)
    elapsed = time.perf_counter() - started
    failures = []
    for field, target in (
        ("precision", ALL_ROW_TARGET["precision"]),
        ("recall", ALL_ROW_TARGET["recall"]),
        ("ap50", ALL_ROW_TARGET["ap50"]),
        ("ap50_95", ALL_ROW_TARGET["ap50_95"]),
    ):
        got = getattr(all_row, field)
        if abs(got - target) > 0.0005:
            failures.append(f"{field}: {got:.6f} vs {target} (off by {abs(got - target):.6f})")
    if all_row.instances != ALL_ROW_TARGET["instances"]:
        failures.append(f"instances: {all_row.instances}")
    if elapsed >= 1.0:
        failures.append(f"runtime {elapsed:.3f}s >= 1s")
    _finish("criterion 1 (macro-average identity)", failures)


def test_criterion_02_ap_oracle_equivalence():
    rng = np.random.default_rng(2)
    started = time.perf_counter()
    failures = []
    for i in range(1000):
        ranked, total_gt = random_ranked_instance(rng)
        got = average_precision(ranked, total_gt)
        want = ap_101_maxscan([flag for _, flag in ranked], total_gt)
        if abs(got - want) > 1e-9:
            failures.append(f"instance {i}: {got!r} vs oracle {want!r}")
            break
    elapsed = time.perf_counter() - started
    if elapsed >= 10.0:
        failures.append(f"runtime {elapsed:.2f}s >= 10s")
    _finish("criterion 2 (AP oracle equivalence, 1000 instances)", failures)


def test_criterion_03_iou_property_suite():
    rng = np.random.default_rng(3)
    failures = []
    hand = iou(BoundingBox(0, 0, 10, 10), BoundingBox(5, 0, 10, 10))
    if abs(hand - 1.0 / 3.0) > 1e-12:
        failures.append(f"hand case: {hand!r}")
    for i in range(10_000):
        a = random_box(rng)
        b = random_box(rng)
        v = iou(a, b)
        if not 0.0 <= v <= 1.0:
            failures.append(f"pair {i}: range violation {v}")
            break
        if iou(b, a) != v:
            failures.append(f"pair {i}: asymmetric")
            break
        if a.area > 0 and iou(a, a) != 1.0:
            failures.append(f"pair {i}: identity != 1")
            break
        dx, dy = rng.uniform(-300, 300, 2)
        if abs(iou(a.translate(dx, dy), b.translate(dx, dy)) - v) > 1e-9:
            failures.append(f"pair {i}: translation variance")
            break
        # disjoint boxes: shift b fully past a
        far = b.translate(a.x + a.w + b.w + 1.0 - b.x, 0.0)
        if iou(a, far) != 0.0:
            failures.append(f"pair {i}: disjoint != 0")
            break
        # containment chain b inside b_prime inside a
        f1, f2 = sorted(rng.uniform(0.05, 1.0, 2))
        b_prime = BoundingBox(a.x, a.y, a.w * f2, a.h * f2)
        inner = BoundingBox(a.x, a.y, b_prime.w * f1, b_prime.h * f1)
        if iou(a, inner) > iou(a, b_prime) + 1e-12:
            failures.append(f"pair {i}: containment monotonicity")
            break
    _finish("criterion 3 (IoU property suite, 10000 pairs)", failures)


def _random_voc_document(rng, class_map):
    width = int(rng.integers(200, 2000))
    height = int(rng.integers(200, 2000))
    objects = []
    for _ in range(int(rng.integers(0, 6))):
        x1, x2 = sorted(float(v) for v in rng.uniform(0, width, 2))
        y1, y2 = sorted(float(v) for v in rng.uniform(0, height, 2))
        name = class_map.names[int(rng.integers(0, len(class_map)))]
        objects.append(
            f"<object><name>{name}</name><bndbox>"
            f"<xmin>{x1!r}</xmin><ymin>{y1!r}</ymin><xmax>{x2!r}</xmax><ymax>{y2!r}</ymax>"
            f"</bndbox></object>"
        )
    return (
        f"<annotation><filename>r.jpg</filename>"
        f"<size><width>{width}</width><height>{height}</height></size>"
        f"{''.join(objects)}</annotation>"
    )


def test_criterion_04_format_round_trips():
    rng = np.random.default_rng(4)
    class_map = ClassMap.default()
    failures = []

    # worked example, bit-checked
    doc = (
        "<annotation><filename>w.jpg</filename>"
        "<size><width>640</width><height>640</height></size>"
        "<object><name>bus</name><bndbox>"
        "<xmin>0</xmin><ymin>0</ymin><xmax>320</xmax><ymax>320</ymax>"
        "</bndbox></object></annotation>"
    )
    line = write_yolo_txt(parse_voc(doc, class_map)).strip()
    if line.split()[1:] != ["0.25", "0.25", "0.5", "0.5"]:
        failures.append(f"worked example produced {line!r}")

    for i in range(1000):
        document = _random_voc_document(rng, class_map)
        first = parse_voc(document, class_map)
        text = write_yolo_txt(first)
        second = parse_yolo_txt(text, (first.width, first.height), class_map, first.image_id)
        if len(first.annotations) != len(second.annotations):
            failures.append(f"record {i}: annotation count changed")
            break
        size = (first.width, first.height)
        for g1, g2 in zip(first.annotations, second.annotations):
            n1 = convert_box(g1.box.as_tuple(), BoxFormat.TOP_LEFT_WH, BoxFormat.CENTER_WH_NORM, size)
            n2 = convert_box(g2.box.as_tuple(), BoxFormat.TOP_LEFT_WH, BoxFormat.CENTER_WH_NORM, size)
            if g1.class_index != g2.class_index or any(abs(u - v) > 1e-9 for u, v in zip(n1, n2)):
                failures.append(f"record {i}: boxes differ beyond 1e-9")
                break
        if failures:
            break
    _finish("criterion 4 (format round-trips, 1000 records)", failures)


def test_criterion_05_matching_identities():
    rng = np.random.default_rng(5)
    class_map = ClassMap.default()
    failures = []
    for i in range(500):
        n_det, n_gt = rng.integers(0, 14, 2)
        dets = [
            Detection(
                "img",
                int(rng.integers(0, 4)),
                float(rng.uniform(0, 1)),
                BoundingBox(rng.uniform(0, 60), rng.uniform(0, 60), rng.uniform(1, 40), rng.uniform(1, 40)),
            )
            for _ in range(n_det)
        ]
        gts = [
            GroundTruth(
                int(rng.integers(0, 4)),
                BoundingBox(rng.uniform(0, 60), rng.uniform(0, 60), rng.uniform(1, 40), rng.uniform(1, 40)),
            )
            for _ in range(n_gt)
        ]
        result = match_detections(dets, gts, 0.5)
        for cls in range(4):
            tp = sum(1 for j, d in enumerate(dets) if d.class_index == cls and result.matched_gt[j] is not None)
            fp = sum(1 for j, d in enumerate(dets) if d.class_index == cls and result.matched_gt[j] is None)
            fn = sum(1 for j, g in enumerate(gts) if g.class_index == cls and not result.gt_matched[j])
            if tp + fn != sum(1 for g in gts if g.class_index == cls):
                failures.append(f"instance {i}: TP+FN != #GT for class {cls}")
            if tp + fp != sum(1 for d in dets if d.class_index == cls):
                failures.append(f"instance {i}: TP+FP != #detections for class {cls}")
        if failures:
            break

    # perfect detector: all metrics 1.0, purely diagonal confusion matrix
    records = [
        ImageRecord(
            f"img{i}",
            200,
            200,
            [
                GroundTruth(int(rng.integers(0, len(class_map))), BoundingBox(10 * j, 20, 9, 9))
                for j in range(int(rng.integers(1, 5)))
            ],
        )
        for i in range(10)
    ]
    manifest = DatasetManifest(records, {r.image_id: "test" for r in records})
    perfect = [
        Detection(r.image_id, g.class_index, 1.0, g.box) for r in records for g in r.annotations
    ]
    report = evaluate(perfect, manifest, class_map)
    row = report.all_row
    if (row.precision, row.recall, row.ap50, row.ap50_95) != (1.0, 1.0, 1.0, 1.0):
        failures.append(f"perfect detector all-row {row}")
    matrix = report.confusion
    if matrix.sum() != np.trace(matrix) or matrix[-1].sum() or matrix[:, -1].sum():
        failures.append("perfect detector confusion matrix not purely diagonal")
    _finish("criterion 5 (matching identities + perfect detector)", failures)


def test_criterion_06_split_determinism():
    records = [ImageRecord(f"img{i:05d}", 640, 640) for i in range(9058)]
    failures = []
    first = split_dataset(records, (0.8, 0.1, 0.1), seed=117)
    sizes = first.sizes()
    if (sizes["train"], sizes["valid"], sizes["test"]) != (7248, 905, 905):
        failures.append(f"sizes {sizes}")
    second = split_dataset(records, (0.8, 0.1, 0.1), seed=117)
    if first.splits != second.splits:
        failures.append("same seed produced different assignments")
    _finish("criterion 6 (split determinism, N=9058)", failures)


def _conservation_setup(tmp_path, seed=77):
    class_map = ClassMap.default()
    config = SimulatorConfig(
        cameras=("B", "C", "D"),
        rates_per_minute={
            "B": tuple(4.0 for _ in range(len(class_map))),
            "C": tuple(2.0 for _ in range(len(class_map))),
            "D": tuple(1.0 for _ in range(len(class_map))),
        },
        duration_ms=240_000,
        frame_interval_ms=500,
        seed=seed,
    )
    path = tmp_path / "events.ndjson"
    emitted = simulate_to_file(config, path)
    return class_map, config, path, emitted


def _fresh_graph(class_map, config):
    graph = TrafficGraph(class_map, window_ms=60_000, lateness_ms=300_000)
    for camera in config.cameras:
        graph.add_node(camera)
    return graph


def test_criterion_07_end_to_end_conservation(tmp_path):
    class_map, config, path, emitted = _conservation_setup(tmp_path)
    failures = []

    graph = _fresh_graph(class_map, config)
    summary = replay_file(path, graph)
    if summary.rejected_events or summary.malformed_lines:
        failures.append(f"rejects {summary.rejected_events}, malformed {summary.malformed_lines}")
    baseline = {}
    for camera in config.cameras:
        totals = np.array(graph.node_totals(camera))
        baseline[camera] = graph.query_flow(camera, *_span(graph, camera))
        if not np.array_equal(totals, emitted.per_camera[camera]):
            failures.append(f"{camera}: graph totals {totals} != emitted {emitted.per_camera[camera]}")

    # shuffle lines within the lateness horizon and replay into a fresh graph
    rng = np.random.default_rng(78)
    lines = path.read_text(encoding="utf-8").splitlines(keepends=True)
    keys = np.arange(len(lines), dtype=float) + rng.uniform(0, 300, len(lines))
    shuffled = tmp_path / "shuffled.ndjson"
    shuffled.write_text("".join(lines[i] for i in np.argsort(keys)), encoding="utf-8")
    graph2 = _fresh_graph(class_map, config)
    replay_file(shuffled, graph2)
    for camera in config.cameras:
        if graph2.query_flow(camera, *_span(graph2, camera)) != baseline[camera]:
            failures.append(f"{camera}: shuffled replay changed query output")
    _finish("criterion 7 (end-to-end conservation)", failures)


def _span(graph, camera):
    lo, hi = graph.window_span(camera)
    return lo, hi - 1


@pytest.fixture(scope="session")
def events_100k(tmp_path_factory):
    class_map = ClassMap.default()
    cameras = ("A", "B", "C", "D")
    config = SimulatorConfig(
        cameras=cameras,
        rates_per_minute={c: tuple(4.0 for _ in range(len(class_map))) for c in cameras},
        duration_ms=25_000 * 200,
        frame_interval_ms=200,
        seed=88,
    )
    path = tmp_path_factory.mktemp("throughput") / "events100k.ndjson"
    emitted = simulate_to_file(config, path)
    assert emitted.events == 100_000
    return class_map, config, path, emitted


def test_criterion_08_ingestion_throughput(events_100k):
    class_map, config, path, emitted = events_100k
    graph = _fresh_graph(class_map, config)
    failures = []
    started = time.perf_counter()
    summary = replay_file(path, graph, speed=0)
    totals = {camera: graph.node_totals(camera) for camera in config.cameras}
    elapsed = time.perf_counter() - started
    if summary.applied_events != 100_000:
        failures.append(f"applied {summary.applied_events} != 100000")
    if summary.rejected_events:
        failures.append(f"rejects {summary.rejected_events}")
    for camera in config.cameras:
        if not np.array_equal(np.array(totals[camera]), emitted.per_camera[camera]):
            failures.append(f"{camera}: query totals diverge")
    if elapsed >= 10.0:
        failures.append(f"runtime {elapsed:.2f}s >= 10s")
    _finish(f"criterion 8 (100k-event throughput, {elapsed:.2f}s)", failures)


def test_criterion_09_road_edge_semantics():
    rng = np.random.default_rng(9)
    class_map = ClassMap.default()
    failures = []
    for trial in range(100):
        n = int(rng.integers(2, 9))
        ids = [f"n{i}" for i in range(n)]
        script = [f"node {nid} spot{j}" for j, nid in enumerate(ids)]
        roads = []
        used_pairs = set()
        for _ in range(int(rng.integers(1, 10))):
            u, v = rng.choice(n, 2, replace=False)
            pair = (ids[int(u)], ids[int(v)])
            if pair in used_pairs or pair[::-1] in used_pairs:
                continue
            used_pairs.add(pair)
            one_way = bool(rng.integers(0, 2))
            length = float(rng.uniform(50, 2000))
            roads.append((pair, length, one_way))
            script.append(f"edge {pair[0]} {pair[1]} {length!r} {'one_way' if one_way else 'two_way'}")
        graph = parse_graph_script("\n".join(script), class_map)
        edges = {(e.source, e.target): e.length_m for e in graph.edges()}
        for (u, v), length, one_way in roads:
            if one_way:
                if (u, v) not in edges or (v, u) in edges:
                    failures.append(f"trial {trial}: one-way {u}->{v} wrong")
            else:
                if edges.get((u, v)) != edges.get((v, u)) or edges.get((u, v)) != length:
                    failures.append(f"trial {trial}: two-way {u}<->{v} wrong")
        if failures:
            break
    _finish("criterion 9 (road edge semantics, random scripts)", failures)


def test_criterion_10_pr_curve_consistency():
    rng = np.random.default_rng(10)
    failures = []
    for i in range(1000):
        ranked, total_gt = random_ranked_instance(rng)
        curve = pr_curve(ranked, total_gt)
        integral = float(np.mean(curve.envelope_precision))
        ap = average_precision(ranked, total_gt)
        if abs(integral - ap) > 1e-9:
            failures.append(f"instance {i}: integral {integral!r} vs AP {ap!r}")
            break
    _finish("criterion 10 (PR envelope integral equals AP)", failures)
