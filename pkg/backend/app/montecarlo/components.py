# -*- coding: utf-8 -*-
# backend/app/montecarlo/components.py - 连通分量标记：并查集、BFS 与批量 csgraph
from collections import deque
from typing import Sequence, Tuple

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


class UnionFind:
    """路径压缩 + 按大小合并"""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True

    def labels(self) -> np.ndarray:
        return canonical_labels(np.array([self.find(i) for i in range(len(self.parent))], dtype=np.int64))


def canonical_labels(labels: np.ndarray) -> np.ndarray:
    """按首次出现顺序重新编号，使同一划分得到相同数组"""
    labels = np.asarray(labels)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first)] = np.arange(first.size)
    return rank[inverse.reshape(-1)]


def union_find_labels(n: int, pairs: Sequence[Tuple[int, int]]) -> np.ndarray:
    uf = UnionFind(n)
    for a, b in pairs:
        uf.union(int(a), int(b))
    return uf.labels()


def bfs_labels(n: int, pairs: Sequence[Tuple[int, int]]) -> np.ndarray:
    """参考实现：逐分量广度优先搜索"""
    adjacency = [[] for _ in range(n)]
    for a, b in pairs:
        adjacency[int(a)].append(int(b))
        adjacency[int(b)].append(int(a))
    labels = np.full(n, -1, dtype=np.int64)
    current = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        labels[start] = current
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in adjacency[v]:
                if labels[w] < 0:
                    labels[w] = current
                    queue.append(w)
        current += 1
    return labels


def csgraph_labels(n: int, pairs: np.ndarray) -> np.ndarray:
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    matrix = coo_matrix((np.ones(len(pairs), dtype=np.int8), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(matrix, directed=False)
    return canonical_labels(labels)


def batch_labels(n: int, edges: np.ndarray, occupied: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    occupied: (R, M) 布尔矩阵，每行一次实现。
    将 R 次实现拼成一张块对角图（节点偏移 r·n）做一次分量标记。
    返回 (R, n) 的全局团簇标签与各团簇大小；同时校验每个块内团簇大小之和等于 n。
    """
    realizations = occupied.shape[0]
    total = realizations * n
    rows, cols = np.nonzero(occupied)
    offset = rows * n
    a = edges[cols, 0] + offset
    b = edges[cols, 1] + offset
    matrix = coo_matrix((np.ones(a.size, dtype=np.int8), (a, b)), shape=(total, total))
    count, labels = connected_components(matrix, directed=False)
    sizes = np.bincount(labels, minlength=count)

    cluster_block = np.empty(count, dtype=np.int64)
    cluster_block[labels] = np.repeat(np.arange(realizations), n)
    per_block = np.bincount(cluster_block, weights=sizes, minlength=realizations)
    if not np.all(per_block == n):
        raise AssertionError("团簇划分不完整：块内团簇大小之和 ≠ N")
    return labels.reshape(realizations, n), sizes


def batch_node_cluster_sizes(n: int, edges: np.ndarray, occupied: np.ndarray) -> np.ndarray:
    """(R, n) 数组：每次实现中每个节点所在团簇的大小"""
    labels, sizes = batch_labels(n, edges, occupied)
    return sizes[labels]
