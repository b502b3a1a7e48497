# -*- coding: utf-8 -*-
# backend/app/montecarlo/ising_mc.py - Ising 模型混合蒙特卡洛（Wolff 团簇 + Metropolis 单自旋）
"""
流程：
1. 热化：随机 ±1 初态，最多 macro_steps 个宏步，每步一次 Wolff 更新 + 50·N 次 Metropolis 翻转；
   平滑能量 Ẽ = αE + (1−α)Ẽ（前 2 步不平滑）。提前停止条件：
   |m| > 0.95 连续两步，或 Ẽ_i − Ẽ_{i−1} > −0.001·|Ẽ_i| 连续六步（i > 2）。
2. M_f：最后 7 / 5 / 3 / 2 个 |m| 的均值（宏步数 ≥12 / ≥10 / ≥8 / 其他）。
3. 测量：K = round(8e5/√N / divisor)，M_f < 0.9 时 n = 1，否则 n = 5；
   每次测量前做一次 Wolff + 50·N 次 Metropolis，记录 |m|、m²、m·σ_x。

内核由 numba 编译，使用 numba 内部的 np.random 状态（每线程独立），
在调用线程内由 SeedSequence([seed, stream]) 派生的 32 位种子初始化。
"""
import logging
import math
from typing import Optional

import numpy as np
from numba import njit
from pydantic import BaseModel, ConfigDict, Field

from app.config import params
from app.errors import ParameterError
from app.graph.core import Graph
from app.montecarlo.stats import McStats, ObservableStats, variance_shift_stats
from app.solvers.options import validate_source

logger = logging.getLogger(__name__)

_defaults = params.get_ising_mc_params()


class IsingMcOptions(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    macro_steps: int = Field(default=_defaults["macro_steps"], ge=2, description="热化宏步数上限")
    metropolis_sweeps_per_macro: int = Field(default=_defaults["metropolis_sweeps_per_macro"], ge=1)
    smoothing_alpha: float = Field(default=_defaults["smoothing_alpha"], gt=0.0, le=1.0)
    base_measurements: float = Field(default=_defaults["base_measurements"], gt=0.0)
    measurement_divisor: int = Field(default=_defaults["measurement_divisor"], ge=1)
    scale_threshold: float = Field(default=_defaults["scale_threshold"], gt=0.0, le=1.0)
    seed: int = Field(default=_defaults["seed"], ge=0)
    # 直接指定测量次数（覆盖 K·n 公式，测试用）
    measurements: Optional[int] = Field(default=None, ge=2)


# ============================================================================
# numba 内核
# ============================================================================

@njit(cache=True)
def _seed_kernel(seed):
    np.random.seed(seed)


@njit(cache=True)
def _random_spins(n):
    spins = np.empty(n, dtype=np.int64)
    for i in range(n):
        spins[i] = 1 if np.random.random() < 0.5 else -1
    return spins


@njit(cache=True)
def _energy(spins, indptr, neighbours):
    total = 0.0
    for i in range(spins.size):
        local = 0
        for k in range(indptr[i], indptr[i + 1]):
            local += spins[neighbours[k]]
        total += spins[i] * local
    return -0.5 * total


@njit(cache=True)
def _wolff_update(spins, indptr, neighbours, candidates, p_add):
    """随机选择一个有邻居的节点，按 p_add 吸收同向邻居后整体翻转"""
    if candidates.size == 0:
        return 0
    seed_node = candidates[np.random.randint(0, candidates.size)]
    target = spins[seed_node]
    in_cluster = np.zeros(spins.size, dtype=np.bool_)
    stack = np.empty(spins.size, dtype=np.int64)
    stack[0] = seed_node
    top = 1
    in_cluster[seed_node] = True
    size = 0
    while top > 0:
        top -= 1
        v = stack[top]
        size += 1
        for k in range(indptr[v], indptr[v + 1]):
            w = neighbours[k]
            if not in_cluster[w] and spins[w] == target and np.random.random() < p_add:
                in_cluster[w] = True
                stack[top] = w
                top += 1
    for v in range(spins.size):
        if in_cluster[v]:
            spins[v] = -spins[v]
    return size


@njit(cache=True)
def _metropolis(spins, indptr, neighbours, beta, flips):
    """接受概率 min(1, exp(−2β·ΔE))，ΔE = σ_i·Σ_j σ_j"""
    n = spins.size
    for _ in range(flips):
        i = np.random.randint(0, n)
        local = 0
        for k in range(indptr[i], indptr[i + 1]):
            local += spins[neighbours[k]]
        delta = spins[i] * local
        if delta <= 0 or np.random.random() < math.exp(-2.0 * beta * delta):
            spins[i] = -spins[i]


@njit(cache=True)
def _thermalize(spins, indptr, neighbours, candidates, beta, macro_steps, flips, alpha):
    n = spins.size
    p_add = 1.0 - math.exp(-2.0 * beta)
    history = np.zeros(macro_steps)
    smoothed = _energy(spins, indptr, neighbours)
    previous = smoothed
    high_streak = 0
    stall_streak = 0
    steps = 0
    for i in range(1, macro_steps + 1):
        _wolff_update(spins, indptr, neighbours, candidates, p_add)
        _metropolis(spins, indptr, neighbours, beta, flips)
        abs_m = abs(spins.sum()) / n
        energy = _energy(spins, indptr, neighbours)
        if i <= 2:
            smoothed = energy
        else:
            smoothed = alpha * energy + (1.0 - alpha) * smoothed
        history[i - 1] = abs_m
        steps = i

        high_streak = high_streak + 1 if abs_m > 0.95 else 0
        if high_streak >= 2:
            break
        if i > 2:
            if smoothed - previous > -0.001 * abs(smoothed):
                stall_streak += 1
            else:
                stall_streak = 0
            if stall_streak >= 6:
                break
        previous = smoothed
    return history[:steps]


@njit(cache=True)
def _measure(spins, indptr, neighbours, candidates, beta, count, flips, source):
    n = spins.size
    p_add = 1.0 - math.exp(-2.0 * beta)
    abs_m = np.empty(count)
    m_sq = np.empty(count)
    m_sigma = np.empty(count)
    for k in range(count):
        _wolff_update(spins, indptr, neighbours, candidates, p_add)
        _metropolis(spins, indptr, neighbours, beta, flips)
        m = spins.sum() / n
        abs_m[k] = abs(m)
        m_sq[k] = m * m
        m_sigma[k] = m * spins[source] if source >= 0 else 0.0
    return abs_m, m_sq, m_sigma


# ============================================================================
# 对外接口
# ============================================================================

def thermalized_magnetization(history: np.ndarray) -> float:
    """M_f：按宏步数取最后 7 / 5 / 3 / 2 个 |m| 的均值"""
    steps = history.size
    if steps >= 12:
        window = 7
    elif steps >= 10:
        window = 5
    elif steps >= 8:
        window = 3
    else:
        window = 2
    return float(np.mean(history[-min(window, steps):]))


def measurement_count(n: int, m_f: float, opts: IsingMcOptions) -> int:
    if opts.measurements is not None:
        return opts.measurements
    base = round(opts.base_measurements / math.sqrt(n) / opts.measurement_divisor)
    scale = 1 if m_f < opts.scale_threshold else 5
    return max(2, int(round(base * scale)))


def chain_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(stream)]).generate_state(1)[0])


def mc_ising(
    g: Graph,
    temp,
    opts: Optional[IsingMcOptions] = None,
    source: Optional[int] = None,
    stream: int = 0,
) -> McStats:
    """
    temp: Temperature（取其 beta）。stream 区分同一种子下的不同参数点。
    返回 abs_m、m_sq、chi_true、chi_practical，以及有源节点时的 m_sigma_x、chi_source。
    """
    opts = opts or IsingMcOptions()
    beta = float(temp.beta)
    if beta < 0.0 or not math.isfinite(beta):
        raise ParameterError(f"β 必须有限且非负: {beta}")
    x = validate_source(g.n, source)
    n = g.n
    if n == 0:
        raise ParameterError("空图无法采样")

    indptr = np.ascontiguousarray(g.indptr, dtype=np.int64)
    neighbours = np.ascontiguousarray(g.senders, dtype=np.int64)
    candidates = np.flatnonzero(g.degrees > 0).astype(np.int64)
    flips = opts.metropolis_sweeps_per_macro * n

    _seed_kernel(chain_seed(opts.seed, stream))
    spins = _random_spins(n)
    history = _thermalize(
        spins, indptr, neighbours, candidates, beta, opts.macro_steps, flips, opts.smoothing_alpha
    )
    m_f = thermalized_magnetization(history)
    count = measurement_count(n, m_f, opts)
    abs_m, m_sq, m_sigma = _measure(
        spins, indptr, neighbours, candidates, beta, count, flips, -1 if x is None else x
    )

    scale = beta * n
    observables = {
        "abs_m": ObservableStats.from_samples(abs_m),
        "m_sq": ObservableStats.from_samples(m_sq),
        "chi_true": ObservableStats.from_samples(scale * m_sq),
        "chi_practical": variance_shift_stats(scale, m_sq, abs_m),
    }
    if x is not None:
        observables["m_sigma_x"] = ObservableStats.from_samples(m_sigma)
        observables["chi_source"] = variance_shift_stats(scale, m_sq, m_sigma)

    logger.info(
        f"📌 Ising MC β={beta:.4f}: 热化 {history.size} 宏步, M_f={m_f:.3f}, 测量 {count} 次, "
        f"⟨|m|⟩={observables['abs_m'].mean:.4f}"
    )
    return McStats(
        model="ising",
        observables=observables,
        metadata={
            "beta": beta,
            "thermalization_steps": int(history.size),
            "m_f": m_f,
            "measurements": count,
            "seed": opts.seed,
            "stream": stream,
            "source": x,
        },
    )
