# -*- coding: utf-8 -*-
# backend/app/graph/core.py - 图表示、边表读取、预处理与结构统计
import io
import logging
from dataclasses import dataclass
from typing import Iterable, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from app.errors import DisconnectedGraphError, EdgeListParseError, InvalidSourceError

logger = logging.getLogger(__name__)


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class Graph:
    """
    不可变简单无向图（CSR 布局）

    有向边 (i←j) 的编号即其在 CSR 中的位置：节点 i 的所有入消息
    占据区间 [indptr[i], indptr[i+1])，按邻居编号升序排列。
    - receivers[e] = i，senders[e] = j
    - reverse[e] 为 (j←i) 的编号
    """

    def __init__(self, n: int, edges: np.ndarray, labels: Optional[Sequence[str]] = None):
        self.n = int(n)
        self.edges = _frozen(np.asarray(edges, dtype=np.int64).reshape(-1, 2))
        self.m = int(self.edges.shape[0])
        self.labels: Tuple[str, ...] = (
            tuple(labels) if labels is not None else tuple(str(i) for i in range(self.n))
        )

        heads = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        tails = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        order = np.lexsort((tails, heads))
        self.receivers = _frozen(heads[order])
        self.senders = _frozen(tails[order])
        self.degrees = _frozen(np.bincount(self.receivers, minlength=self.n).astype(np.int64))
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(self.degrees, out=indptr[1:])
        self.indptr = _frozen(indptr)

        # CSR 顺序下 receiver*n + sender 单调递增，(j←i) 的位置可直接二分得到
        keys = self.receivers * max(self.n, 1) + self.senders
        self.reverse = _frozen(np.searchsorted(keys, self.senders * max(self.n, 1) + self.receivers))

    # ------------------------------------------------------------------
    # 构造
    # ------------------------------------------------------------------
    @classmethod
    def from_edges(
        cls,
        n: int,
        pairs: Iterable[Tuple[int, int]],
        labels: Optional[Sequence[str]] = None,
    ) -> "Graph":
        """由任意节点对构造；自环与重复边被静默丢弃"""
        unique = set()
        for a, b in pairs:
            a, b = int(a), int(b)
            if a == b:
                continue
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"节点编号越界: ({a}, {b})，n={n}")
            unique.add((a, b) if a < b else (b, a))
        edges = np.array(sorted(unique), dtype=np.int64).reshape(-1, 2)
        return cls(n, edges, labels)

    def with_edges(self, pairs: Iterable[Tuple[int, int]]) -> "Graph":
        """返回追加若干边后的新图"""
        return Graph.from_edges(self.n, [*map(tuple, self.edges), *pairs], self.labels)

    # ------------------------------------------------------------------
    # 访问
    # ------------------------------------------------------------------
    @property
    def num_directed(self) -> int:
        return 2 * self.m

    @property
    def adjacency(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(tuple(int(j) for j in self.neighbors(i)) for i in range(self.n))

    def neighbors(self, i: int) -> np.ndarray:
        return self.senders[self.indptr[i]:self.indptr[i + 1]]

    def degree(self, i: int) -> int:
        return int(self.degrees[i])

    def directed_index(self, i: int, j: int) -> int:
        """消息 (i←j) 的编号；j 不是 i 的邻居时抛 KeyError"""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        pos = lo + int(np.searchsorted(self.senders[lo:hi], j))
        if pos >= hi or self.senders[pos] != j:
            raise KeyError(f"({i}, {j}) 不是图中的边")
        return int(pos)

    def directed_pair(self, e: int) -> Tuple[int, int]:
        return int(self.receivers[e]), int(self.senders[e])

    def has_edge(self, i: int, j: int) -> bool:
        try:
            self.directed_index(i, j)
            return True
        except KeyError:
            return False

    def to_sparse(self):
        """对称邻接矩阵（scipy COO）"""
        data = np.ones(2 * self.m, dtype=np.int8)
        return coo_matrix((data, (self.receivers, self.senders)), shape=(self.n, self.n))

    def component_labels(self) -> Tuple[int, np.ndarray]:
        if self.n == 0:
            return 0, np.zeros(0, dtype=np.int64)
        count, labels = connected_components(self.to_sparse(), directed=False)
        return int(count), labels

    def is_connected(self) -> bool:
        return self.n > 0 and self.component_labels()[0] == 1

    def edge_set(self) -> set:
        return {(int(a), int(b)) for a, b in self.edges}

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class GraphStats:
    n: int
    m: int
    cyclomatic: int
    mean_degree: float


@dataclass(frozen=True)
class SourcePolicy:
    kind: Literal["highest_degree", "explicit"] = "highest_degree"
    node: Optional[int] = None

    @classmethod
    def explicit(cls, node: int) -> "SourcePolicy":
        return cls("explicit", int(node))


@dataclass(frozen=True)
class ParseSummary:
    lines: int
    edges_read: int
    duplicates_dropped: int
    self_loops_dropped: int
    nodes: int
    edges: int

    def as_text(self) -> str:
        return " ".join(f"{k}={v}" for k, v in self.__dict__.items())


# ============================================================================
# 边表读取
# ============================================================================

def parse_edge_list(text: Union[str, io.TextIOBase, Iterable[str]]) -> Tuple[Graph, ParseSummary]:
    """
    解析边表文本：
    - 每个非注释行恰好两个空白分隔的节点标签
    - 以 '#' 开头的行与空行忽略
    - 标签按首次出现顺序映射为 0..n-1
    - 方向性、自环与重复边被丢弃，并在摘要中计数
    """
    lines = text.splitlines() if isinstance(text, str) else text

    ids: dict = {}
    seen = set()
    pairs = []
    duplicates = self_loops = read = 0
    line_no = 0

    for line_no, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if len(tokens) != 2:
            raise EdgeListParseError(f"需要 2 个节点标签，实际 {len(tokens)} 个: {stripped!r}", line_no)
        read += 1
        a = ids.setdefault(tokens[0], len(ids))
        b = ids.setdefault(tokens[1], len(ids))
        if a == b:
            self_loops += 1
            continue
        key = (a, b) if a < b else (b, a)
        if key in seen:
            duplicates += 1
            continue
        seen.add(key)
        pairs.append(key)

    if not ids:
        raise EdgeListParseError("边表为空")

    labels = [None] * len(ids)
    for label, idx in ids.items():
        labels[idx] = label
    graph = Graph.from_edges(len(ids), pairs, labels)
    summary = ParseSummary(
        lines=line_no,
        edges_read=read,
        duplicates_dropped=duplicates,
        self_loops_dropped=self_loops,
        nodes=graph.n,
        edges=graph.m,
    )
    logger.info(f"📌 边表解析完成: {summary.as_text()}")
    return graph, summary


def load_edge_list(text: Union[str, io.TextIOBase, Iterable[str]]) -> Graph:
    return parse_edge_list(text)[0]


def read_edge_list_file(path) -> Graph:
    with open(path, "r", encoding="utf-8") as f:
        return load_edge_list(f)


def format_edge_list(g: Graph, header: Optional[str] = None) -> str:
    """按仓库边表格式生成文本（使用节点编号）"""
    lines = [f"# {line}" for line in (header.splitlines() if header else [])]
    lines.append(f"# n={g.n} m={g.m}")
    lines.extend(f"{a} {b}" for a, b in g.edges)
    return "\n".join(lines) + "\n"


def write_edge_list(g: Graph, path, header: Optional[str] = None) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_edge_list(g, header))


# ============================================================================
# 预处理与统计
# ============================================================================

def preprocess(g: Graph) -> Graph:
    """
    提取最大连通分量（等大时取包含最小节点编号的分量），
    节点重新稠密编号并保持相对顺序。
    """
    if g.n <= 1:
        return g
    count, labels = g.component_labels()
    if count == 1:
        return g

    sizes = np.bincount(labels, minlength=count)
    first_node = np.full(count, g.n, dtype=np.int64)
    np.minimum.at(first_node, labels, np.arange(g.n))
    best = max(range(count), key=lambda c: (sizes[c], -first_node[c]))

    keep = np.flatnonzero(labels == best)
    remap = np.full(g.n, -1, dtype=np.int64)
    remap[keep] = np.arange(keep.size)
    mask = labels[g.edges[:, 0]] == best
    edges = remap[g.edges[mask]]
    new_labels = [g.labels[i] for i in keep]
    logger.debug(f"🔍 最大连通分量: {keep.size}/{g.n} 个节点，{int(mask.sum())}/{g.m} 条边")
    return Graph(int(keep.size), edges, new_labels)


def stats(g: Graph) -> GraphStats:
    if not g.is_connected():
        raise DisconnectedGraphError("图不连通，圈数公式 M - N + 1 不适用")
    return GraphStats(
        n=g.n,
        m=g.m,
        cyclomatic=g.m - g.n + 1,
        mean_degree=2.0 * g.m / g.n,
    )


def select_source(g: Graph, policy: Optional[SourcePolicy] = None) -> int:
    """最高度节点（并列取最小编号），或显式指定节点"""
    policy = policy or SourcePolicy()
    if policy.kind == "explicit":
        if policy.node is None or not (0 <= policy.node < g.n):
            raise InvalidSourceError(f"源节点 {policy.node} 越界（n={g.n}）")
        return int(policy.node)
    if g.n == 0:
        raise InvalidSourceError("空图没有源节点")
    # argmax 返回首个最大值，即最小编号
    return int(np.argmax(g.degrees))
