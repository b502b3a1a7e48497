import sys
from pathlib import Path

import pytest

# 确保可以 import app.*
BACKEND_ROOT = Path(__file__).resolve().parents[1]
if str(BACKEND_ROOT) not in sys.path:
    sys.path.insert(0, str(BACKEND_ROOT))

from app.config import params  # noqa: E402
from app.graph.core import Graph, read_edge_list_file  # noqa: E402
from app.graph.netgen import add_random_edges, cayley_tree  # noqa: E402


@pytest.fixture()
def two_node() -> Graph:
    return Graph.from_edges(2, [(0, 1)])


@pytest.fixture()
def path4() -> Graph:
    return Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture()
def triangle_tail() -> Graph:
    # 三角形 0-1-2 加尾巴 2-3
    return Graph.from_edges(4, [(0, 1), (1, 2), (0, 2), (2, 3)])


@pytest.fixture()
def star() -> Graph:
    return Graph.from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)])


@pytest.fixture(scope="session")
def cayley() -> Graph:
    return cayley_tree(3, 5)


@pytest.fixture(scope="session")
def cayley_plus2(cayley) -> Graph:
    return add_random_edges(cayley, 2, seed=7)


@pytest.fixture(scope="session")
def karate() -> Graph:
    return read_edge_list_file(params.get_fixture_path("karate_78.edges"))


@pytest.fixture()
def isolated_settings(tmp_path, monkeypatch):
    """缓存目录指向临时目录，避免读写仓库内的 data/"""
    monkeypatch.setenv("SNBP_CACHE_DIR", str(tmp_path / "cache"))
    monkeypatch.delenv("SNBP_OFFLINE", raising=False)
    from app.config.settings import get_settings

    return get_settings()
