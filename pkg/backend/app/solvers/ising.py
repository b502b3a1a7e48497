# -*- coding: utf-8 -*-
# backend/app/solvers/ising.py - 零场 Ising 模型的消息传递求解器
"""
消息以 t_{i←j} = tanh(β·h_{i←j}) 存储：

    t_{i←j} = tanh(β) · tanh(Σ_{k∈N(j)\\i} artanh(t_{j←k}))
    m_i     = tanh(Σ_{j∈N(i)} artanh(t_{i←j}))

源节点 x 的钳制用布尔掩码表示，不经过 artanh：
- 进入 x 的消息 t_{x←j} = 1（h = ∞）
- x 发出的消息 t_{i←x} = tanh(β)，与 x 的其他邻居无关（叶子源节点同样成立）
- m_x = 1

磁化率（均匀外场下的线性响应）：

    Q_{ij}  = tanh(β) · (1 − u²) / (1 − t²)，u = tanh(Σ_{k∈N(j)\\i} artanh t_{j←k})
    q_{i←j} = Q_{ij} · (1 + Σ_{k∈N(j)\\i} q_{j←k})
    χ_i     = β · (1 − m_i²) · (1 + Σ_{j∈N(i)} q_{i←j})
钳制边与源节点发出的边上 q ≡ 0。
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from app.config import params
from app.errors import NumericalError, ParameterError
from app.graph.core import Graph
from app.solvers.options import (
    MessageField,
    SolverOptions,
    initial_values,
    iterate_fixed_point,
    iterate_linear,
    segment_sum,
    validate_source,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Temperature:
    beta: float

    def __post_init__(self):
        if not math.isfinite(self.beta) or self.beta < 0.0:
            raise ParameterError(f"β 必须有限且非负: {self.beta}")


def beta_from_p(p: float) -> Temperature:
    """随机团簇映射 p = 1 − e^{−2β} 的逆"""
    p = float(p)
    if math.isnan(p) or p < 0.0 or p >= 1.0:
        raise ParameterError(f"p 必须在 [0, 1) 内（p=1 对应 β=∞）: {p}")
    return Temperature(-0.5 * math.log1p(-p))


def p_from_beta(temp: Temperature) -> float:
    return -math.expm1(-2.0 * temp.beta)


@dataclass(frozen=True)
class IsingSolution:
    t_messages: Optional[MessageField]
    m_node: np.ndarray
    magnetization: float
    iterations: int
    max_residual: float
    converged: bool
    source: Optional[int]
    beta: float
    q_messages: Optional[MessageField] = None
    q_node: Optional[np.ndarray] = None
    chi_node: Optional[np.ndarray] = None
    susceptibility: Optional[float] = None
    chi_iterations: int = 0
    chi_converged: bool = False
    diverged: bool = False
    chi_supported: bool = True


def _artanh(t: np.ndarray) -> np.ndarray:
    bound = 1.0 - params.ARTANH_GUARD
    return np.arctanh(np.clip(t, -bound, bound))


def _clamp_masks(g: Graph, x: Optional[int]):
    if x is None:
        empty = np.zeros(g.num_directed, dtype=bool)
        return empty, empty
    return g.receivers == x, g.senders == x


def _mark_divergent(sol: IsingSolution, q_messages, iterations: int) -> IsingSolution:
    chi_node = np.full(sol.m_node.size, np.inf)
    if sol.source is not None:
        chi_node[sol.source] = 0.0
    return replace(
        sol,
        q_messages=q_messages,
        chi_node=chi_node,
        susceptibility=math.inf,
        chi_iterations=iterations,
        chi_converged=False,
        diverged=True,
    )


# ============================================================================
# BP / SNBP
# ============================================================================

def _warn_negative_magnetization(m_node: np.ndarray, beta: float) -> bool:
    """有源节点时磁化应非负；环图上只做经验检查，违反时记录而不报错"""
    if np.any(m_node < -1e-12):
        logger.warning(f"⚠️ β={beta:.4f} 有源节点时出现负磁化: min={m_node.min():.3e}")
        return True
    return False


def _cavity_fields(g: Graph, t: np.ndarray, clamped: np.ndarray, from_source: np.ndarray, beta: float) -> np.ndarray:
    """Σ_{k∈N(j)\\i} artanh(t_{j←k})，对每条 e=(i←j)"""
    a = _artanh(t)
    a[clamped] = 0.0
    a[from_source] = beta
    totals = segment_sum(a, g.receivers, g.n)
    return totals[g.senders] - a[g.reverse]


def solve_ising(
    g: Graph,
    temp: Temperature,
    source: Optional[int] = None,
    opts: Optional[SolverOptions] = None,
) -> IsingSolution:
    x = validate_source(g.n, source)
    opts = opts or SolverOptions()
    beta = temp.beta
    th = math.tanh(beta)
    clamped, from_source = _clamp_masks(g, x)
    senders, reverse, indptr = g.senders, g.reverse, g.indptr

    def sync_update(t: np.ndarray) -> np.ndarray:
        new = th * np.tanh(_cavity_fields(g, t, clamped, from_source, beta))
        new[from_source] = th
        new[clamped] = 1.0
        return new

    def seq_update(t: np.ndarray, e: int) -> float:
        if clamped[e]:
            return 1.0
        j = senders[e]
        if j == x:
            return th
        skip = reverse[e]
        field = 0.0
        for k in range(indptr[j], indptr[j + 1]):
            if k != skip:
                field += beta if from_source[k] else float(_artanh(t[k:k + 1])[0])
        return th * math.tanh(field)

    def check(t: np.ndarray) -> None:
        free = t[~clamped]
        if free.size and np.max(np.abs(free)) > th + 1e-15:
            raise NumericalError(f"消息越界 |t| ≤ tanh β: max={np.max(np.abs(free)):.3e}")

    t0 = initial_values(g.num_directed, opts, scale=th)
    t0[from_source] = th
    t0[clamped] = 1.0
    result = iterate_fixed_point(t0, sync_update, seq_update, opts, label=f"Ising BP β={beta:.4f}", check=check)
    t = result.values

    a = _artanh(t)
    a[clamped] = 0.0
    a[from_source] = beta
    m_node = np.tanh(segment_sum(a, g.receivers, g.n))
    if x is not None:
        m_node[x] = 1.0
        _warn_negative_magnetization(m_node, beta)
    return IsingSolution(
        t_messages=t,
        m_node=m_node,
        magnetization=float(m_node.mean()) if g.n else 0.0,
        iterations=result.iterations,
        max_residual=result.max_residual,
        converged=result.converged,
        source=x,
        beta=beta,
    )


def ising_susceptibility(
    g: Graph,
    temp: Temperature,
    sol: IsingSolution,
    opts: Optional[SolverOptions] = None,
) -> IsingSolution:
    opts = opts or SolverOptions()
    beta = temp.beta
    th = math.tanh(beta)
    t = sol.t_messages
    clamped, from_source = _clamp_masks(g, sol.source)
    receivers, senders, reverse = g.receivers, g.senders, g.reverse

    u = np.tanh(_cavity_fields(g, t, clamped, from_source, beta))
    with np.errstate(divide="ignore", invalid="ignore"):
        coeff = np.where(np.abs(t) < 1.0, th * (1.0 - u * u) / (1.0 - t * t), 0.0)
    coeff[clamped | from_source] = 0.0

    def apply(q: np.ndarray) -> np.ndarray:
        return coeff * (segment_sum(q, receivers, g.n)[senders] - q[reverse])

    lin = iterate_linear(coeff, apply, opts, label=f"Ising SusP β={beta:.4f}")
    q = lin.values
    if lin.diverged:
        return _mark_divergent(sol, q, lin.iterations)

    chi_node = beta * (1.0 - sol.m_node ** 2) * (1.0 + segment_sum(q, receivers, g.n))
    if sol.source is not None:
        chi_node[sol.source] = 0.0
    return replace(
        sol,
        q_messages=q,
        chi_node=chi_node,
        susceptibility=float(chi_node.mean()) if g.n else 0.0,
        chi_iterations=lin.iterations,
        chi_converged=lin.converged,
        diverged=False,
    )


# ============================================================================
# MFA / SNMFA
# ============================================================================

def solve_ising_mfa(
    g: Graph,
    temp: Temperature,
    source: Optional[int] = None,
    opts: Optional[SolverOptions] = None,
) -> IsingSolution:
    x = validate_source(g.n, source)
    opts = opts or SolverOptions()
    beta = temp.beta
    th = math.tanh(beta)
    receivers, senders, indptr = g.receivers, g.senders, g.indptr

    def sync_update(m: np.ndarray) -> np.ndarray:
        new = np.tanh(segment_sum(_artanh(th * m[senders]), receivers, g.n))
        if x is not None:
            new[x] = 1.0
        return new

    def seq_update(m: np.ndarray, i: int) -> float:
        if i == x:
            return 1.0
        neighbours = senders[indptr[i]:indptr[i + 1]]
        return math.tanh(float(_artanh(th * m[neighbours]).sum()))

    m0 = initial_values(g.n, opts)
    if x is not None:
        m0[x] = 1.0
    result = iterate_fixed_point(m0, sync_update, seq_update, opts, label=f"Ising MFA β={beta:.4f}")
    m_node = result.values
    return IsingSolution(
        t_messages=None,
        m_node=m_node,
        magnetization=float(m_node.mean()) if g.n else 0.0,
        iterations=result.iterations,
        max_residual=result.max_residual,
        converged=result.converged,
        source=x,
        beta=beta,
    )


def ising_mfa_susceptibility(
    g: Graph,
    temp: Temperature,
    sol: IsingSolution,
    opts: Optional[SolverOptions] = None,
) -> IsingSolution:
    """仅支持常规 MFA；带源节点时返回 chi_supported=False"""
    if sol.source is not None:
        return replace(sol, chi_supported=False, susceptibility=None, chi_node=None)
    opts = opts or SolverOptions()
    beta = temp.beta
    th = math.tanh(beta)
    m2 = sol.m_node ** 2
    receivers, senders = g.receivers, g.senders

    coeff = th * (1.0 - m2) / (1.0 - m2 * th * th)

    def apply(q: np.ndarray) -> np.ndarray:
        return coeff * segment_sum(q[senders], receivers, g.n)

    lin = iterate_linear(coeff, apply, opts, label=f"Ising MFA 磁化率 β={beta:.4f}")
    q = lin.values
    if lin.diverged:
        return _mark_divergent(sol, None, lin.iterations)

    chi_node = beta * (1.0 - m2) * (1.0 + segment_sum(q[senders], receivers, g.n))
    return replace(
        sol,
        q_node=q,
        chi_node=chi_node,
        susceptibility=float(chi_node.mean()) if g.n else 0.0,
        chi_iterations=lin.iterations,
        chi_converged=lin.converged,
        diverged=False,
    )
