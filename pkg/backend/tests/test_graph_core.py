import numpy as np
import pytest

from app.config import params
from app.errors import DisconnectedGraphError, EdgeListParseError, InvalidSourceError
from app.graph.core import (
    Graph,
    SourcePolicy,
    format_edge_list,
    load_edge_list,
    parse_edge_list,
    preprocess,
    read_edge_list_file,
    select_source,
    stats,
    write_edge_list,
)


class TestParseEdgeList:
    def test_comments_duplicates_and_self_loops(self, caplog):
        text = "\n".join([
            "# header",
            "a b",
            "b a",
            "",
            "b c",
            "c c",
            "a b",
        ])
        with caplog.at_level("INFO"):
            g, summary = parse_edge_list(text)
        assert (g.n, g.m) == (3, 2)
        assert g.labels == ("a", "b", "c")
        assert summary.edges_read == 5
        assert summary.duplicates_dropped == 2
        assert summary.self_loops_dropped == 1
        assert "duplicates_dropped=2" in caplog.text

    def test_bad_line_reports_line_number(self):
        with pytest.raises(EdgeListParseError) as exc_info:
            load_edge_list("0 1\n1 2 3\n")
        assert exc_info.value.line_number == 2

    def test_empty_input(self):
        with pytest.raises(EdgeListParseError):
            load_edge_list("# nothing here\n\n")

    def test_accepts_iterable_of_lines(self):
        g = load_edge_list(iter(["0 1", "1 2"]))
        assert (g.n, g.m) == (3, 2)


class TestGraphLayout:
    def test_reverse_is_involution(self, karate):
        e = np.arange(karate.num_directed)
        assert np.array_equal(karate.reverse[karate.reverse], e)
        assert np.array_equal(karate.receivers[karate.reverse], karate.senders)

    def test_incoming_messages_are_contiguous(self, triangle_tail):
        g = triangle_tail
        for i in range(g.n):
            block = g.receivers[g.indptr[i]:g.indptr[i + 1]]
            assert np.all(block == i)
        assert g.directed_pair(g.directed_index(2, 3)) == (2, 3)
        assert not g.has_edge(1, 3)
        with pytest.raises(KeyError):
            g.directed_index(1, 3)

    def test_degrees(self, star):
        assert star.degree(0) == 4
        assert list(star.neighbors(0)) == [1, 2, 3, 4]


class TestPreprocess:
    def test_keeps_largest_component(self):
        g = Graph.from_edges(7, [(0, 1), (2, 3), (3, 4), (4, 2), (5, 6)])
        core = preprocess(g)
        assert (core.n, core.m) == (3, 3)
        assert core.labels == ("2", "3", "4")

    def test_tie_prefers_smallest_node(self):
        g = Graph.from_edges(4, [(2, 3), (0, 1)])
        core = preprocess(g)
        assert core.labels == ("0", "1")

    def test_connected_graph_unchanged(self, karate):
        assert preprocess(karate) is karate


class TestStatsAndSource:
    def test_karate_stats(self, karate):
        s = stats(karate)
        assert (s.n, s.m, s.cyclomatic) == (34, 78, 45)
        assert s.mean_degree == pytest.approx(2 * 78 / 34)

    def test_karate_77_fixture(self):
        g = preprocess(read_edge_list_file(params.get_fixture_path("karate_77.edges")))
        assert stats(g).cyclomatic == 44

    def test_tree_has_zero_cyclomatic(self, cayley):
        s = stats(cayley)
        assert (s.n, s.m, s.cyclomatic) == (94, 93, 0)

    def test_disconnected_rejected(self):
        with pytest.raises(DisconnectedGraphError):
            stats(Graph.from_edges(4, [(0, 1), (2, 3)]))

    def test_highest_degree_source(self, karate):
        x = select_source(karate)
        assert karate.degree(x) == 17
        assert karate.labels[x] == "33"

    def test_degree_tie_takes_smallest_index(self, path4):
        assert select_source(path4) == 1

    def test_explicit_source(self, path4):
        assert select_source(path4, SourcePolicy.explicit(3)) == 3
        with pytest.raises(InvalidSourceError):
            select_source(path4, SourcePolicy.explicit(4))


class TestEdgeListOutput:
    def test_write_then_read(self, tmp_path, triangle_tail):
        target = tmp_path / "g.edges"
        write_edge_list(triangle_tail, target, header="triangle with tail")
        text = target.read_text(encoding="utf-8")
        assert text.startswith("# triangle with tail\n# n=4 m=4\n")
        again = read_edge_list_file(target)
        assert again.edge_set() == triangle_tail.edge_set()

    def test_format_without_header(self, two_node):
        assert format_edge_list(two_node) == "# n=2 m=1\n0 1\n"
