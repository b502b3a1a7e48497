# -*- coding: utf-8 -*-
# backend/app/solvers/options.py - 求解器选项与通用不动点 / 线性响应迭代
import logging
from collections import deque
from dataclasses import dataclass
from typing import Callable, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.config import params
from app.errors import InvalidSourceError

logger = logging.getLogger(__name__)

_defaults = params.get_solver_params()

# 有向边消息场：按 CSR 顺序排列的 float64 数组，见 Graph
MessageField = np.ndarray


class SolverOptions(BaseModel):
    """不动点迭代参数"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    tolerance: float = Field(default=_defaults["tolerance"], gt=0.0, description="收敛阈值（最大绝对变化）")
    max_iterations: int = Field(default=_defaults["max_iterations"], ge=1)
    damping: float = Field(default=_defaults["damping"], ge=0.0, lt=1.0, description="阻尼系数")
    init: Literal["ones", "zeros", "uniform_random"] = _defaults["init"]
    init_seed: int = Field(default=_defaults["init_seed"], ge=0)
    schedule: Literal["synchronous", "sequential"] = _defaults["schedule"]
    debug: bool = _defaults["debug"]


def initial_values(size: int, opts: SolverOptions, scale: float = 1.0) -> np.ndarray:
    """按 init 策略生成初值，取值范围 [0, scale]"""
    if opts.init == "ones":
        return np.full(size, float(scale))
    if opts.init == "zeros":
        return np.zeros(size)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([opts.init_seed])))
    return scale * rng.random(size)


# ============================================================================
# 分段归约（CSR 区间）
# ============================================================================

def segment_sum(values: np.ndarray, receivers: np.ndarray, n: int) -> np.ndarray:
    return np.bincount(receivers, weights=values, minlength=n).astype(np.float64)


def segment_prod(values: np.ndarray, indptr: np.ndarray) -> np.ndarray:
    """每个节点入边区间上的乘积；空区间为 1"""
    n = indptr.size - 1
    out = np.ones(n)
    starts = indptr[:-1]
    nonempty = starts < indptr[1:]
    if values.size:
        out[nonempty] = np.multiply.reduceat(values, starts[nonempty])
    return out


def leave_one_out_prod(factors: np.ndarray, receivers: np.ndarray, reverse: np.ndarray, indptr: np.ndarray,
                       senders: np.ndarray) -> np.ndarray:
    """
    对每条有向边 e=(i←j) 计算 Π_{k∈N(j)\\i} factors[(j←k)]。
    零因子单独计数，避免除以零。
    """
    n = indptr.size - 1
    is_zero = factors == 0.0
    nonzero_prod = segment_prod(np.where(is_zero, 1.0, factors), indptr)
    zero_count = np.bincount(receivers, weights=is_zero, minlength=n)

    excluded = factors[reverse]
    excluded_zero = is_zero[reverse]
    base = nonzero_prod[senders]
    zeros_left = zero_count[senders] - excluded_zero
    out = np.where(excluded_zero, base, base / np.where(excluded_zero, 1.0, excluded))
    out[zeros_left > 0] = 0.0
    return out


# ============================================================================
# 不动点迭代
# ============================================================================

@dataclass
class FixedPointResult:
    values: np.ndarray
    iterations: int
    max_residual: float
    converged: bool


def iterate_fixed_point(
    x0: np.ndarray,
    sync_update: Callable[[np.ndarray], np.ndarray],
    seq_update: Optional[Callable[[np.ndarray, int], float]],
    opts: SolverOptions,
    label: str = "",
    check: Optional[Callable[[np.ndarray], None]] = None,
) -> FixedPointResult:
    """
    x ← (1-d)·F(x) + d·x，直到最大绝对变化 ≤ tolerance。
    - synchronous：sync_update(x) 返回整组新值
    - sequential：seq_update(x, e) 就地按编号顺序逐个更新
    debug 模式下每轮调用 check(x) 做有界性断言。
    """
    x = np.array(x0, dtype=np.float64, copy=True)
    d = opts.damping
    residual = np.inf if x.size else 0.0

    for iteration in range(1, opts.max_iterations + 1):
        if x.size == 0:
            return FixedPointResult(x, 0, 0.0, True)
        if opts.schedule == "sequential" and seq_update is not None:
            residual = 0.0
            for e in range(x.size):
                new = (1.0 - d) * seq_update(x, e) + d * x[e]
                residual = max(residual, abs(new - x[e]))
                x[e] = new
        else:
            new = sync_update(x)
            if d:
                new = (1.0 - d) * new + d * x
            residual = float(np.max(np.abs(new - x)))
            x = new

        if opts.debug:
            if check is not None:
                check(x)
            logger.debug(f"🔁 {label} 第 {iteration} 轮，残差 {residual:.3e}")
        if residual <= opts.tolerance:
            return FixedPointResult(x, iteration, residual, True)

    logger.warning(f"⚠️ {label} 未收敛: {opts.max_iterations} 轮后残差 {residual:.3e}")
    return FixedPointResult(x, opts.max_iterations, float(residual), False)


# ============================================================================
# 线性响应迭代 x ← b + A(x)
# ============================================================================

@dataclass
class LinearResult:
    values: np.ndarray
    iterations: int
    max_residual: float
    converged: bool
    diverged: bool
    spectral_estimate: float


def iterate_linear(
    offset: np.ndarray,
    apply: Callable[[np.ndarray], np.ndarray],
    opts: SolverOptions,
    label: str = "",
    window: int = 10,
) -> LinearResult:
    """
    从 x = b 出发迭代 x ← b + A x。
    相邻增量满足 d_k = A d_{k-1}，其几何平均衰减率估计 A 的谱半径；
    预热后估计值 ≥ SPECTRAL_DIVERGENCE（或出现非有限值）即判定发散。
    收敛判据相对于解的量级：max|Δx| ≤ tolerance·max(1, max|x|)。
    """
    x = np.array(offset, dtype=np.float64, copy=True)
    norms: deque = deque(maxlen=window + 1)
    rho = 0.0
    residual = 0.0

    for iteration in range(1, opts.max_iterations + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            new = offset + apply(x)
        if not np.all(np.isfinite(new)):
            logger.warning(f"⚠️ {label} 线性响应溢出，判定发散")
            return LinearResult(new, iteration, np.inf, False, True, np.inf)

        residual = float(np.max(np.abs(new - x))) if x.size else 0.0
        x = new
        scale = max(1.0, float(np.max(np.abs(x)))) if x.size else 1.0
        if residual <= opts.tolerance * scale:
            return LinearResult(x, iteration, residual, True, False, rho)

        norms.append(residual)
        if len(norms) == window + 1 and norms[0] > 0.0:
            rho = (norms[-1] / norms[0]) ** (1.0 / window)
            if iteration > params.SPECTRAL_WARMUP and rho >= params.SPECTRAL_DIVERGENCE:
                logger.info(f"📌 {label} 谱半径估计 {rho:.9f} ≥ 1，判定发散")
                return LinearResult(x, iteration, residual, False, True, rho)

        if opts.debug:
            logger.debug(f"🔁 {label} 第 {iteration} 轮，残差 {residual:.3e}，谱估计 {rho:.6f}")

    logger.warning(f"⚠️ {label} 线性响应未收敛: 残差 {residual:.3e}")
    return LinearResult(x, opts.max_iterations, residual, False, False, rho)


def validate_source(n: int, source: Optional[int]) -> Optional[int]:
    if source is None:
        return None
    if not (0 <= int(source) < n):
        raise InvalidSourceError(f"源节点 {source} 越界（n={n}）")
    return int(source)
