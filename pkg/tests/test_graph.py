import threading

import numpy as np
import pytest

from trafficlens.errors import (
    ClassMapMismatch,
    DuplicateNode,
    InvalidInput,
    InvalidLength,
    ParseError,
    SelfLoop,
    SnapshotError,
    UnknownNode,
)
from trafficlens.graph import TrafficGraph, parse_graph_script


@pytest.fixture
def graph(class_map):
    g = TrafficGraph(class_map, window_ms=60_000, lateness_ms=300_000)
    g.add_node("B", "Banani")
    g.add_node("C", "Gulshan")
    return g


def counts_for(class_map, **by_name):
    vec = [0] * len(class_map)
    for name, value in by_name.items():
        vec[class_map.index(name)] = value
    return vec


class TestStructure:
    def test_add_nodes(self, class_map):
        g = TrafficGraph(class_map)
        g.add_node("B", "Banani")
        g.add_node("C", "Gulshan")
        assert len(g.nodes()) == 2
        assert g.edges() == []

    def test_duplicate_node(self, graph):
        with pytest.raises(DuplicateNode):
            graph.add_node("B")

    def test_coords_stored_verbatim(self, class_map):
        g = TrafficGraph(class_map)
        node = g.add_node("D", "Dhanmondi", (23.81, 90.41))
        assert node.coords == (23.81, 90.41)

    def test_two_way_road(self, graph):
        graph.add_road("B", "C", 500, one_way=False)
        assert graph.has_edge("B", "C")
        assert graph.has_edge("C", "B")
        lengths = {(e.source, e.target): e.length_m for e in graph.edges()}
        assert lengths[("B", "C")] == lengths[("C", "B")] == 500

    def test_one_way_road(self, graph):
        graph.add_node("A")
        graph.add_road("A", "B", 300, one_way=True)
        assert graph.has_edge("A", "B")
        assert not graph.has_edge("B", "A")

    def test_self_loop_rejected(self, graph):
        with pytest.raises(SelfLoop):
            graph.add_road("B", "B", 100)

    def test_unknown_node_rejected(self, graph):
        with pytest.raises(UnknownNode):
            graph.add_road("B", "Z", 100)

    def test_bad_length_rejected(self, graph):
        with pytest.raises(InvalidLength):
            graph.add_road("B", "C", 0)
        with pytest.raises(InvalidLength):
            graph.add_road("B", "C", -5)

    def test_edge_direction_property_random(self, class_map, rng):
        for _ in range(50):
            g = TrafficGraph(class_map)
            n = int(rng.integers(2, 8))
            ids = [f"n{i}" for i in range(n)]
            for nid in ids:
                g.add_node(nid)
            expected = set()
            for _ in range(int(rng.integers(1, 12))):
                u, v = rng.choice(n, 2, replace=False)
                u, v = ids[int(u)], ids[int(v)]
                one_way = bool(rng.integers(0, 2))
                length = float(rng.uniform(10, 1000))
                g.add_road(u, v, length, one_way=one_way)
                expected.add((u, v))
                if one_way:
                    expected.discard((v, u)) if (v, u) not in expected else None
                else:
                    expected.add((v, u))
            actual = {(e.source, e.target) for e in g.edges()}
            assert expected <= actual


class TestIngest:
    def test_floor_window_placement(self, graph, class_map):
        graph.ingest_counts("B", 61_000, counts_for(class_map, car=2))
        windows = graph.query_flow("B", 60_000, 119_999)
        assert len(windows) == 1
        assert windows[0].start_ms == 60_000
        assert windows[0].counts[class_map.index("car")] == 2

    def test_same_window_sums(self, graph, class_map):
        graph.ingest_counts("B", 61_000, counts_for(class_map, car=2))
        graph.ingest_counts("B", 65_000, counts_for(class_map, car=3))
        windows = graph.query_flow("B", 60_000, 60_000)
        assert windows[0].counts[class_map.index("car")] == 5

    def test_conservation_100_events(self, graph, class_map, rng):
        for _ in range(100):
            ts = int(rng.integers(0, 10_000_000))
            graph.ingest_counts("B", ts, counts_for(class_map, rickshaw=1))
        totals = graph.node_totals("B")
        assert totals[class_map.index("rickshaw")] == 100

    def test_unknown_node(self, graph, class_map):
        with pytest.raises(UnknownNode):
            graph.ingest_counts("Z", 0, [0] * len(class_map))

    def test_wrong_vector_length(self, graph):
        with pytest.raises(ClassMapMismatch):
            graph.ingest_counts("B", 0, [1, 2, 3])

    def test_negative_counts_rejected(self, graph, class_map):
        vec = [0] * len(class_map)
        vec[0] = -1
        with pytest.raises(InvalidInput):
            graph.ingest_counts("B", 0, vec)

    def test_late_within_horizon_lands_in_correct_window(self, graph, class_map):
        graph.ingest_counts("B", 600_000, counts_for(class_map, car=1))
        graph.ingest_counts("B", 400_000, counts_for(class_map, car=1))  # 200s late, within 300s
        windows = {w.start_ms: w for w in graph.query_flow("B", 0, 700_000)}
        assert windows[400_000 // 60_000 * 60_000].counts[class_map.index("car")] == 1
        assert graph.late_event_count("B") == 0

    def test_older_than_horizon_still_lands_but_is_tallied(self, graph, class_map):
        graph.ingest_counts("B", 1_000_000, counts_for(class_map, car=1))
        graph.ingest_counts("B", 100_000, counts_for(class_map, car=4))  # 900s late
        assert graph.node_totals("B")[class_map.index("car")] == 5
        windows = {w.start_ms: w for w in graph.query_flow("B", 0, 1_100_000)}
        assert windows[60_000].counts[class_map.index("car")] == 4
        assert graph.late_event_count("B") == 1

    def test_conservation_under_any_interleaving(self, graph, class_map, rng):
        timestamps = rng.integers(0, 3_600_000, 500)
        emitted = np.zeros(len(class_map), dtype=np.int64)
        for ts in timestamps:
            vec = rng.integers(0, 3, len(class_map))
            emitted += vec
            graph.ingest_counts("B", int(ts), [int(v) for v in vec])
        assert np.array_equal(np.array(graph.node_totals("B")), emitted)

    def test_concurrent_ingest_conserves(self, graph, class_map):
        per_thread = 200
        vec = counts_for(class_map, bus=1)

        def work(base):
            for i in range(per_thread):
                graph.ingest_counts("B", base + i * 1000, vec)

        threads = [threading.Thread(target=work, args=(t * 7_000,)) for t in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert graph.node_totals("B")[class_map.index("bus")] == 8 * per_thread


class TestQuery:
    def test_empty_store_zero_filled(self, graph, class_map):
        windows = graph.query_flow("B", 0, 179_999)
        assert len(windows) == 3
        assert all(w.counts == (0,) * len(class_map) for w in windows)

    def test_read_your_writes(self, graph, class_map):
        graph.ingest_counts("B", 90_000, counts_for(class_map, car=3))
        windows = graph.query_flow("B", 60_000, 119_999)
        assert windows[0].counts[class_map.index("car")] == 3

    def test_class_filter_projects(self, graph, class_map):
        graph.ingest_counts("B", 0, counts_for(class_map, rickshaw=2, car=5))
        windows = graph.query_flow("B", 0, 59_999, class_filter="rickshaw")
        assert windows[0].counts[class_map.index("rickshaw")] == 2
        assert sum(windows[0].counts) == 2

    def test_range_validation(self, graph):
        with pytest.raises(InvalidInput):
            graph.query_flow("B", 100, 50)
        with pytest.raises(UnknownNode):
            graph.query_flow("Z", 0, 100)

    def test_windows_partition_timestamps(self, graph, class_map, rng):
        # every timestamp lands in exactly one window
        for _ in range(200):
            ts = int(rng.integers(0, 10_000_000))
            start = graph.window_start(ts)
            assert start <= ts < start + graph.window_ms
            assert start % graph.window_ms == 0

    def test_query_order_independent_of_ingest_order(self, class_map, rng):
        timestamps = [int(t) for t in rng.integers(0, 240_000, 100)]
        vecs = [counts_for(class_map, car=int(rng.integers(1, 4))) for _ in timestamps]

        def build(order):
            g = TrafficGraph(class_map, window_ms=60_000, lateness_ms=300_000)
            g.add_node("B")
            for i in order:
                g.ingest_counts("B", timestamps[i], vecs[i])
            return g.query_flow("B", 0, 240_000)

        base = build(range(len(timestamps)))
        shuffled_order = list(range(len(timestamps)))
        rng.shuffle(shuffled_order)
        assert build(shuffled_order) == base


class TestTopNodes:
    def test_ranking(self, graph, class_map):
        graph.ingest_counts("B", 0, counts_for(class_map, car=10))
        graph.ingest_counts("C", 0, counts_for(class_map, car=5))
        assert graph.top_nodes_by_flow(0, 60_000, limit=2) == [("B", 10), ("C", 5)]

    def test_tie_breaks_by_id(self, class_map):
        g = TrafficGraph(class_map)
        g.add_node("b")
        g.add_node("a")
        g.ingest_counts("a", 0, counts_for(class_map, car=7))
        g.ingest_counts("b", 0, counts_for(class_map, car=7))
        assert g.top_nodes_by_flow(0, 60_000, limit=2) == [("a", 7), ("b", 7)]

    def test_limit(self, graph, class_map):
        graph.ingest_counts("B", 0, counts_for(class_map, car=10))
        graph.ingest_counts("C", 0, counts_for(class_map, car=5))
        assert graph.top_nodes_by_flow(0, 60_000, limit=1) == [("B", 10)]
        with pytest.raises(InvalidInput):
            graph.top_nodes_by_flow(0, 60_000, limit=0)

    def test_class_filter(self, graph, class_map):
        graph.ingest_counts("B", 0, counts_for(class_map, car=10))
        graph.ingest_counts("C", 0, counts_for(class_map, rickshaw=9))
        top = graph.top_nodes_by_flow(0, 60_000, class_filter="rickshaw", limit=1)
        assert top == [("C", 9)]


class TestSnapshot:
    def test_empty_round_trip(self, class_map, tmp_path):
        g = TrafficGraph(class_map)
        path = tmp_path / "empty.snap"
        g.snapshot(path)
        restored = TrafficGraph.restore(path)
        assert restored.nodes() == []
        assert restored.edges() == []
        assert restored.class_map == class_map

    def test_populated_round_trip(self, graph, class_map, tmp_path):
        graph.add_node("D", "Mohakhali", (23.78, 90.40))
        graph.add_road("B", "C", 500)
        graph.add_road("C", "D", 750, one_way=True)
        for i in range(10):
            graph.ingest_counts("B", i * 45_000, counts_for(class_map, car=i))
        path = tmp_path / "graph.snap"
        graph.snapshot(path)
        restored = TrafficGraph.restore(path)
        assert restored.nodes() == graph.nodes()
        assert restored.edges() == graph.edges()
        assert restored.window_ms == graph.window_ms
        assert restored.query_flow("B", 0, 500_000) == graph.query_flow("B", 0, 500_000)
        assert restored.top_nodes_by_flow(0, 500_000, limit=3) == graph.top_nodes_by_flow(0, 500_000, limit=3)

    def test_round_trip_randomized(self, class_map, tmp_path, rng):
        for trial in range(10):
            g = TrafficGraph(class_map, window_ms=int(rng.integers(1, 5)) * 10_000)
            ids = [f"n{i}" for i in range(int(rng.integers(1, 6)))]
            for nid in ids:
                coords = (float(rng.uniform(-90, 90)), float(rng.uniform(-180, 180)))
                g.add_node(nid, f"label {nid}", coords if rng.integers(0, 2) else None)
            for _ in range(int(rng.integers(0, 30))):
                nid = ids[int(rng.integers(0, len(ids)))]
                vec = [int(v) for v in rng.integers(0, 4, len(class_map))]
                g.ingest_counts(nid, int(rng.integers(0, 1_000_000)), vec)
            path = tmp_path / f"rand{trial}.snap"
            g.snapshot(path)
            restored = TrafficGraph.restore(path)
            for nid in ids:
                assert restored.node_totals(nid) == g.node_totals(nid)
                assert restored.query_flow(nid, 0, 1_000_000) == g.query_flow(nid, 0, 1_000_000)
                assert restored.late_event_count(nid) == g.late_event_count(nid)

    def test_unknown_version_rejected(self, class_map, tmp_path):
        g = TrafficGraph(class_map)
        path = tmp_path / "v9.snap"
        g.snapshot(path)
        text = path.read_text().replace("trafficlens-graph 1", "trafficlens-graph 9", 1)
        path.write_text(text)
        with pytest.raises(SnapshotError) as err:
            TrafficGraph.restore(path)
        assert "9" in str(err.value)

    def test_truncated_rejected(self, graph, class_map, tmp_path):
        path = tmp_path / "trunc.snap"
        graph.snapshot(path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-1]) + "\n")  # drop the end marker
        with pytest.raises(SnapshotError):
            TrafficGraph.restore(path)

    def test_corrupt_counts_rejected(self, graph, class_map, tmp_path):
        graph.ingest_counts("B", 0, counts_for(class_map, car=1))
        path = tmp_path / "bad.snap"
        graph.snapshot(path)
        text = path.read_text().replace("window B 0", "window B zero", 1)
        path.write_text(text)
        with pytest.raises(SnapshotError):
            TrafficGraph.restore(path)

    def test_duplicate_node_line_rejected(self, graph, class_map, tmp_path):
        path = tmp_path / "dup.snap"
        graph.snapshot(path)
        text = path.read_text().replace("node B", "node C\nnode B", 1)
        path.write_text(text)
        with pytest.raises(SnapshotError):
            TrafficGraph.restore(path)


class TestGraphScript:
    SCRIPT = """
    # road layout
    node B "Banani crossing" 23.79 90.40
    node C Gulshan
    node A Airport
    edge B C 500 two_way
    edge A B 300 one_way
    """

    def test_parse(self, class_map):
        g = parse_graph_script(self.SCRIPT, class_map)
        assert {n.node_id for n in g.nodes()} == {"A", "B", "C"}
        assert g.has_edge("B", "C") and g.has_edge("C", "B")
        assert g.has_edge("A", "B") and not g.has_edge("B", "A")
        labels = {n.node_id: n.label for n in g.nodes()}
        assert labels["B"] == "Banani crossing"

    def test_bad_lines_rejected(self, class_map):
        with pytest.raises(ParseError):
            parse_graph_script("edge B C 500 maybe", class_map)
        with pytest.raises(ParseError):
            parse_graph_script("road B C", class_map)
        with pytest.raises(ParseError):
            parse_graph_script("node B label 1.0", class_map)
