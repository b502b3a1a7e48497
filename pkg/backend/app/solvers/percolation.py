# -*- coding: utf-8 -*-
# backend/app/solvers/percolation.py - 键渗流的消息传递求解器（BP / SNBP / SusP / MFA / SNMFA）
"""
消息 μ_{i←j}：忽略 i 时，j 经由 j 一侧连到巨分量（或源节点 x）的概率。

    μ_{i←j} = 1 − (1 − δ_{jx}) · Π_{k∈N(j)\\i} (1 − p·μ_{j←k})
    μ_i     = 1 − (1 − δ_{ix}) · Π_{j∈N(i)}   (1 − p·μ_{i←j})

source=None 时 δ 项消失，即常规 BP。
磁化率（非 C(x) 团簇的平均大小）由线性响应迭代得到：

    χ_{i←j} = (1 − μ_{i←j}) · [1 + Σ_{k∈N(j)\\i} p·χ_{j←k} / (1 − p·μ_{j←k})]
    χ_i     = (1 − μ_i)     · [1 + Σ_{j∈N(i)}   p·χ_{i←j} / (1 − p·μ_{i←j})]
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
    leave_one_out_prod,
    segment_prod,
    segment_sum,
    validate_source,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PercSolution:
    mu_messages: Optional[MessageField]
    mu_node: np.ndarray
    order_parameter: float
    iterations: int
    max_residual: float
    converged: bool
    source: Optional[int]
    p: float
    # 由 *_susceptibility 填充
    chi_messages: Optional[MessageField] = None
    chi_node: Optional[np.ndarray] = None
    susceptibility: Optional[float] = None
    chi_iterations: int = 0
    chi_converged: bool = False
    diverged: bool = False
    chi_supported: bool = True


def _check_p(p: float) -> float:
    p = float(p)
    if not (0.0 <= p <= 1.0) or math.isnan(p):
        raise ParameterError(f"占据概率 p 必须在 [0, 1] 内: {p}")
    return p


def _check_unit_interval(values: np.ndarray) -> None:
    if values.size and (values.min() < -1e-15 or values.max() > 1.0 + 1e-15):
        raise NumericalError(f"消息越界 [0,1]: min={values.min():.3e}, max={values.max():.3e}")


def _mark_divergent(sol: PercSolution, chi_messages, iterations: int) -> PercSolution:
    chi_node = np.full(sol.mu_node.size, np.inf)
    if sol.source is not None:
        chi_node[sol.source] = 0.0
    return replace(
        sol,
        chi_messages=chi_messages,
        chi_node=chi_node,
        susceptibility=math.inf,
        chi_iterations=iterations,
        chi_converged=False,
        diverged=True,
    )


def _safe_weights(p: float, mu: np.ndarray):
    """p / (1 − p·μ)，分母 ≤ ε 的位置权重置 0 并返回奇异掩码"""
    denom = 1.0 - p * mu
    singular = denom <= params.DENOMINATOR_EPS
    weights = np.where(singular, 0.0, p / np.where(singular, 1.0, denom))
    return weights, singular


# ============================================================================
# BP / SNBP
# ============================================================================

def solve_percolation(
    g: Graph,
    p: float,
    source: Optional[int] = None,
    opts: Optional[SolverOptions] = None,
) -> PercSolution:
    p = _check_p(p)
    x = validate_source(g.n, source)
    opts = opts or SolverOptions()

    receivers, senders, reverse, indptr = g.receivers, g.senders, g.reverse, g.indptr
    from_source = senders == x if x is not None else np.zeros(senders.size, dtype=bool)

    def sync_update(mu: np.ndarray) -> np.ndarray:
        new = 1.0 - leave_one_out_prod(1.0 - p * mu, receivers, reverse, indptr, senders)
        new[from_source] = 1.0
        return new

    def seq_update(mu: np.ndarray, e: int) -> float:
        j = senders[e]
        if j == x:
            return 1.0
        skip = reverse[e]
        prod = 1.0
        for k in range(indptr[j], indptr[j + 1]):
            if k != skip:
                prod *= 1.0 - p * mu[k]
        return 1.0 - prod

    mu0 = initial_values(g.num_directed, opts)
    mu0[from_source] = 1.0
    result = iterate_fixed_point(
        mu0, sync_update, seq_update, opts, label=f"渗流 BP p={p:.4f}", check=_check_unit_interval
    )
    mu = result.values

    mu_node = 1.0 - segment_prod(1.0 - p * mu, indptr)
    if x is not None:
        mu_node[x] = 1.0
    return PercSolution(
        mu_messages=mu,
        mu_node=mu_node,
        order_parameter=float(mu_node.mean()) if g.n else 0.0,
        iterations=result.iterations,
        max_residual=result.max_residual,
        converged=result.converged,
        source=x,
        p=p,
    )


def percolation_susceptibility(
    g: Graph,
    p: float,
    sol: PercSolution,
    opts: Optional[SolverOptions] = None,
) -> PercSolution:
    opts = opts or SolverOptions()
    p = _check_p(p)
    mu = sol.mu_messages
    receivers, senders, reverse = g.receivers, g.senders, g.reverse

    weights, singular = _safe_weights(p, mu)
    coeff = 1.0 - mu

    def apply(chi: np.ndarray) -> np.ndarray:
        flow = weights * chi
        return coeff * (segment_sum(flow, receivers, g.n)[senders] - flow[reverse])

    lin = iterate_linear(coeff, apply, opts, label=f"渗流 SusP p={p:.4f}")
    chi = lin.values
    # 1 − p·μ ≤ ε 只在 p = 1、μ = 1 时出现，记为发散
    if lin.diverged or np.any(singular):
        return _mark_divergent(sol, chi, lin.iterations)

    chi_node = (1.0 - sol.mu_node) * (1.0 + segment_sum(weights * chi, receivers, g.n))
    if sol.source is not None:
        chi_node[sol.source] = 0.0
    return replace(
        sol,
        chi_messages=chi,
        chi_node=chi_node,
        susceptibility=float(chi_node.mean()) if g.n else 0.0,
        chi_iterations=lin.iterations,
        chi_converged=lin.converged,
        diverged=False,
    )


# ============================================================================
# MFA / SNMFA（节点变量）
# ============================================================================

def solve_percolation_mfa(
    g: Graph,
    p: float,
    source: Optional[int] = None,
    opts: Optional[SolverOptions] = None,
) -> PercSolution:
    p = _check_p(p)
    x = validate_source(g.n, source)
    opts = opts or SolverOptions()
    senders, indptr = g.senders, g.indptr

    def sync_update(mu: np.ndarray) -> np.ndarray:
        new = 1.0 - segment_prod(1.0 - p * mu[senders], indptr)
        if x is not None:
            new[x] = 1.0
        return new

    def seq_update(mu: np.ndarray, i: int) -> float:
        if i == x:
            return 1.0
        prod = 1.0
        for j in senders[indptr[i]:indptr[i + 1]]:
            prod *= 1.0 - p * mu[j]
        return 1.0 - prod

    mu0 = initial_values(g.n, opts)
    if x is not None:
        mu0[x] = 1.0
    result = iterate_fixed_point(
        mu0, sync_update, seq_update, opts, label=f"渗流 MFA p={p:.4f}", check=_check_unit_interval
    )
    mu_node = result.values
    return PercSolution(
        mu_messages=None,
        mu_node=mu_node,
        order_parameter=float(mu_node.mean()) if g.n else 0.0,
        iterations=result.iterations,
        max_residual=result.max_residual,
        converged=result.converged,
        source=x,
        p=p,
    )


def percolation_mfa_susceptibility(
    g: Graph,
    p: float,
    sol: PercSolution,
    opts: Optional[SolverOptions] = None,
) -> PercSolution:
    """仅支持常规 MFA；带源节点时返回 chi_supported=False"""
    if sol.source is not None:
        return replace(sol, chi_supported=False, susceptibility=None, chi_node=None)
    opts = opts or SolverOptions()
    p = _check_p(p)
    mu = sol.mu_node
    receivers, senders = g.receivers, g.senders

    weights, singular = _safe_weights(p, mu)
    coeff = 1.0 - mu

    def apply(chi: np.ndarray) -> np.ndarray:
        return coeff * segment_sum((weights * chi)[senders], receivers, g.n)

    lin = iterate_linear(coeff, apply, opts, label=f"渗流 MFA 磁化率 p={p:.4f}")
    chi = lin.values
    if lin.diverged or np.any(singular):
        return _mark_divergent(sol, None, lin.iterations)
    return replace(
        sol,
        chi_node=chi,
        susceptibility=float(chi.mean()) if g.n else 0.0,
        chi_iterations=lin.iterations,
        chi_converged=lin.converged,
        diverged=False,
    )
