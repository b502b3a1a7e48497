# -*- coding: utf-8 -*-
# backend/app/graph/netgen.py - 可复现的合成网络生成器
"""
随机数统一使用 numpy 的 Philox（基于计数器）位生成器，
密钥由 SeedSequence([seed, stream...]) 派生：相同种子与参数得到逐位相同的图。
"""
import logging
import math
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from app.errors import ParameterError
from app.graph.core import Graph, preprocess

logger = logging.getLogger(__name__)

# 各生成器的独立子流编号
_STREAM_ADD_EDGES = 1
_STREAM_GNM = 2
_STREAM_BA = 3
_STREAM_RGG = 4


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Philox 生成器；seed 为 64 位无符号整数"""
    if seed < 0 or seed >= 2**64:
        raise ParameterError(f"种子必须是 64 位无符号整数: {seed}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *stream])))


def _sample_absent_pairs(g: Graph, k: int, rng: np.random.Generator) -> list:
    """从不相邻的节点对中均匀无放回抽取 k 对（按字典序编号后抽取下标）"""
    n = g.n
    present = g.edge_set()
    absent = [(a, b) for a in range(n) for b in range(a + 1, n) if (a, b) not in present]
    if k > len(absent):
        raise ParameterError(f"无法添加 {k} 条边：仅剩 {len(absent)} 个不相邻节点对")
    picks = rng.choice(len(absent), size=k, replace=False) if k else []
    return [absent[i] for i in picks]


# ============================================================================
# 生成器
# ============================================================================

def cayley_tree(coordination: int, depth: int) -> Graph:
    """根节点有 coordination 个子节点，其余内部节点各有 coordination-1 个子节点"""
    if coordination < 2 or depth < 0:
        raise ParameterError(f"Cayley 树参数非法: coordination={coordination}, depth={depth}")
    edges = []
    frontier = [0]
    next_id = 1
    for level in range(depth):
        children_per_node = coordination if level == 0 else coordination - 1
        new_frontier = []
        for parent in frontier:
            for _ in range(children_per_node):
                edges.append((parent, next_id))
                new_frontier.append(next_id)
                next_id += 1
        frontier = new_frontier
    return Graph.from_edges(next_id, edges)


def add_random_edges(g: Graph, k: int, seed: int) -> Graph:
    if k < 0:
        raise ParameterError(f"k 必须非负: {k}")
    if k == 0:
        return g
    rng = make_rng(seed, _STREAM_ADD_EDGES)
    return g.with_edges(_sample_absent_pairs(g, k, rng))


def erdos_renyi_gnm(n: int, m: int, seed: int, keep_raw: bool = False) -> Graph:
    """G(n, m)：无放回均匀抽取 m 条边，默认返回最大连通分量"""
    total = n * (n - 1) // 2
    if n < 1 or m < 0 or m > total:
        raise ParameterError(f"G(n,m) 参数不可行: n={n}, m={m}（最多 {total} 条边）")
    rng = make_rng(seed, _STREAM_GNM)
    picks = np.sort(rng.choice(total, size=m, replace=False)) if m else np.zeros(0, dtype=np.int64)
    # 将线性下标还原为上三角 (a, b)，a < b
    rows = []
    for idx in picks:
        a = int(n - 2 - math.floor(math.sqrt(-8 * idx + 4 * n * (n - 1) - 7) / 2.0 - 0.5))
        b = int(idx + a + 1 - total + (n - a) * (n - a - 1) // 2)
        rows.append((a, b))
    raw = Graph.from_edges(n, rows)
    return raw if keep_raw else preprocess(raw)


def barabasi_albert(n: int, m_per_node: int, seed: int) -> Graph:
    """种子团为 m_per_node+1 个节点的完全图，之后按度优先连接"""
    if m_per_node < 1 or n <= m_per_node:
        raise ParameterError(f"BA 参数非法: n={n}, m_per_node={m_per_node}")
    rng = make_rng(seed, _STREAM_BA)
    core = m_per_node + 1
    edges = [(a, b) for a in range(core) for b in range(a + 1, core)]
    # 度数加权抽样：每条边两端各出现一次
    endpoints = [v for pair in edges for v in pair]
    for new in range(core, n):
        targets = set()
        while len(targets) < m_per_node:
            targets.add(endpoints[int(rng.integers(len(endpoints)))])
        for t in sorted(targets):
            edges.append((t, new))
            endpoints.extend((t, new))
    return Graph.from_edges(n, edges)


def square_lattice(w: int, h: int) -> Graph:
    """开边界网格，节点编号 y*w + x"""
    if w < 1 or h < 1:
        raise ParameterError(f"网格尺寸非法: {w}x{h}")
    edges = []
    for y in range(h):
        for x in range(w):
            v = y * w + x
            if x + 1 < w:
                edges.append((v, v + 1))
            if y + 1 < h:
                edges.append((v, v + w))
    return Graph.from_edges(w * h, edges)


def random_geometric(n: int, radius: float, seed: int) -> Graph:
    """单位正方形内 n 个均匀点，距离 ≤ radius 连边，返回最大连通分量"""
    if n < 1 or radius <= 0:
        raise ParameterError(f"RGG 参数非法: n={n}, radius={radius}")
    rng = make_rng(seed, _STREAM_RGG)
    points = rng.random((n, 2))
    pairs = cKDTree(points).query_pairs(radius, output_type="ndarray")
    # 按 (a, b) 字典序排列，边的顺序与种子一一对应
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))] if len(pairs) else pairs.reshape(0, 2)
    return preprocess(Graph.from_edges(n, pairs.tolist()))


def calibrate_rgg_radius(
    n: int,
    target_mean_degree: float,
    seeds: Sequence[int] = tuple(range(32)),
    iterations: int = 40,
) -> float:
    """二分半径，使多种子平均的 ⟨k⟩（预处理后）逼近目标值"""
    lo, hi = 0.0, math.sqrt(2.0)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        mean_k = float(np.mean([2.0 * g.m / g.n for g in (random_geometric(n, mid, s) for s in seeds)]))
        if mean_k < target_mean_degree:
            lo = mid
        else:
            hi = mid
    radius = 0.5 * (lo + hi)
    logger.info(f"✅ RGG 半径标定完成: n={n}, ⟨k⟩≈{target_mean_degree}, r={radius:.6f}")
    return radius
