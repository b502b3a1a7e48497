# -*- coding: utf-8 -*-
# backend/app/harness/sweep.py - 参数扫描与扫描任务管理器
import logging
import math
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from app.config.settings import ALL_METHODS, RunConfig
from app.errors import EngineError, ParameterError, SweepError
from app.graph.core import Graph, SourcePolicy, select_source, stats
from app.harness.models import GraphStatsModel, MethodSeries, SeriesPoint, SweepGrid, SweepResult
from app.montecarlo.enumerate import enumerate_ising, enumerate_percolation
from app.montecarlo.ising_mc import mc_ising
from app.montecarlo.percolation_mc import mc_percolation
from app.solvers.ising import (
    beta_from_p,
    ising_mfa_susceptibility,
    ising_susceptibility,
    solve_ising,
    solve_ising_mfa,
)
from app.solvers.percolation import (
    percolation_mfa_susceptibility,
    percolation_susceptibility,
    solve_percolation,
    solve_percolation_mfa,
)

logger = logging.getLogger(__name__)

SOURCE_METHODS = {"SNBP", "SNMFA", "SNMC"}


def resolve_source(g: Graph, source) -> Optional[int]:
    """"auto" → 最高度节点；"none"/None → 无源节点；整数 → 显式节点"""
    if source is None or source == "none":
        return None
    if source == "auto":
        return select_source(g)
    return select_source(g, SourcePolicy.explicit(int(source)))


# ============================================================================
# 单点求值
# ============================================================================

@dataclass
class _SweepContext:
    graph: Graph
    model: str
    methods: List[str]
    source: Optional[int]
    config: RunConfig


def _solver_point(sol, susceptibility_supported: bool, p: float, beta: Optional[float]) -> SeriesPoint:
    if not susceptibility_supported or not sol.chi_supported:
        diagnostic = "unsupported"
    elif sol.diverged:
        diagnostic = "diverged"
    elif not sol.converged or not sol.chi_converged:
        diagnostic = "not_converged"
    else:
        diagnostic = None
    order = sol.order_parameter if hasattr(sol, "order_parameter") else sol.magnetization
    return SeriesPoint(
        p=p,
        beta=beta,
        order_parameter=float(order),
        susceptibility=sol.susceptibility if sol.chi_supported else None,
        converged=bool(sol.converged),
        iterations=int(sol.iterations),
        diagnostic=diagnostic,
    )


def _percolation_point(ctx: _SweepContext, index: int, p: float) -> Dict[str, SeriesPoint]:
    g, cfg = ctx.graph, ctx.config
    out: Dict[str, SeriesPoint] = {}
    mc_stats = None
    for method in ctx.methods:
        try:
            if method in ("BP", "SNBP"):
                src = ctx.source if method == "SNBP" else None
                sol = solve_percolation(g, p, src, cfg.solver)
                sol = percolation_susceptibility(g, p, sol, cfg.solver)
                out[method] = _solver_point(sol, True, p, None)
            elif method in ("MFA", "SNMFA"):
                src = ctx.source if method == "SNMFA" else None
                sol = solve_percolation_mfa(g, p, src, cfg.solver)
                sol = percolation_mfa_susceptibility(g, p, sol, cfg.solver)
                out[method] = _solver_point(sol, method == "MFA", p, None)
            elif method in ("MC", "SNMC"):
                if mc_stats is None:
                    # MC 与 SNMC 共用同一批实现
                    mc_stats = mc_percolation(
                        g,
                        p,
                        realizations=cfg.percolation_mc.realizations,
                        seed=cfg.run.seed,
                        source=ctx.source,
                        batch_size=cfg.percolation_mc.batch_size,
                    )
                order, chi = ("S1", "chi_practical") if method == "MC" else ("S_x", "chi_source")
                out[method] = SeriesPoint(
                    p=p,
                    order_parameter=mc_stats.mean(order),
                    susceptibility=mc_stats.mean(chi),
                    stderr=mc_stats.stderr(order),
                    chi_stderr=mc_stats.stderr(chi),
                )
            elif method == "EXACT":
                exact = enumerate_percolation(g, p, ctx.source)
                order, chi = ("S_x", "chi_source") if ctx.source is not None else ("S1", "chi_practical")
                out[method] = SeriesPoint(p=p, order_parameter=exact[order], susceptibility=exact[chi])
        except EngineError as exc:
            raise SweepError(method, p, exc) from exc
    return out


def _ising_point(ctx: _SweepContext, index: int, p: float) -> Dict[str, SeriesPoint]:
    g, cfg = ctx.graph, ctx.config
    out: Dict[str, SeriesPoint] = {}
    mc_stats = None
    try:
        temp = beta_from_p(p)
    except EngineError as exc:
        raise SweepError(ctx.methods[0], p, exc) from exc
    beta = temp.beta
    for method in ctx.methods:
        try:
            if method in ("BP", "SNBP"):
                src = ctx.source if method == "SNBP" else None
                sol = solve_ising(g, temp, src, cfg.solver)
                sol = ising_susceptibility(g, temp, sol, cfg.solver)
                out[method] = _solver_point(sol, True, p, beta)
            elif method in ("MFA", "SNMFA"):
                src = ctx.source if method == "SNMFA" else None
                sol = solve_ising_mfa(g, temp, src, cfg.solver)
                sol = ising_mfa_susceptibility(g, temp, sol, cfg.solver)
                out[method] = _solver_point(sol, method == "MFA", p, beta)
            elif method in ("MC", "SNMC"):
                if mc_stats is None:
                    mc_stats = mc_ising(g, temp, cfg.ising_mc, ctx.source, stream=index)
                order, chi = ("abs_m", "chi_practical") if method == "MC" else ("m_sigma_x", "chi_source")
                out[method] = SeriesPoint(
                    p=p,
                    beta=beta,
                    order_parameter=mc_stats.mean(order),
                    susceptibility=mc_stats.mean(chi),
                    stderr=mc_stats.stderr(order),
                    chi_stderr=mc_stats.stderr(chi),
                )
            elif method == "EXACT":
                exact = enumerate_ising(g, temp, ctx.source)
                order, chi = ("m_sigma_x", "chi_source") if ctx.source is not None else ("abs_m", "chi_practical")
                out[method] = SeriesPoint(p=p, beta=beta, order_parameter=exact[order], susceptibility=exact[chi])
        except EngineError as exc:
            raise SweepError(method, p, exc) from exc
    return out


def _finalize_series(method: str, points: List[SeriesPoint]) -> MethodSeries:
    chis = [pt.susceptibility for pt in points]
    finite = [(chi, pt.p) for chi, pt in zip(chis, points) if chi is not None and math.isfinite(chi)]
    return MethodSeries(
        method=method,
        points=points,
        peak_p=max(finite)[1] if finite else None,
        diverged=any(chi is not None and math.isinf(chi) for chi in chis),
    )


# ============================================================================
# 扫描
# ============================================================================

def sweep(
    g: Graph,
    model: str,
    methods: Sequence[str],
    grid: SweepGrid,
    config: Optional[RunConfig] = None,
    network: str = "graph",
    source="auto",
    max_workers: int = 1,
) -> SweepResult:
    """
    在每个网格点上运行所选方法；源节点每张图只选一次，所有源节点方法共用。
    任一方法的硬错误会中止扫描，并以 SweepError 标明 (method, p)。
    结果按网格顺序归并，与线程完成顺序无关。
    """
    config = (config or RunConfig()).resolved()
    methods = list(dict.fromkeys(methods))
    unknown = [m for m in methods if m not in ALL_METHODS]
    if unknown:
        raise ParameterError(f"未知方法: {unknown}")
    if model not in ("percolation", "ising"):
        raise ParameterError(f"未知模型: {model}")

    x = resolve_source(g, source)
    if x is None and SOURCE_METHODS.intersection(methods):
        raise ParameterError(f"方法 {sorted(SOURCE_METHODS.intersection(methods))} 需要源节点")

    ctx = _SweepContext(graph=g, model=model, methods=methods, source=x, config=config)
    evaluate = _percolation_point if model == "percolation" else _ising_point

    started = time.perf_counter()
    logger.info(f"🚀 开始扫描 {network}: model={model}, methods={methods}, 网格 {len(grid)} 点, 源节点 {x}")
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers, thread_name_prefix="sweep") as pool:
            futures = [pool.submit(evaluate, ctx, i, p) for i, p in enumerate(grid.points)]
            rows = [f.result() for f in futures]
    else:
        rows = [evaluate(ctx, i, p) for i, p in enumerate(grid.points)]

    series = {m: _finalize_series(m, [row[m] for row in rows]) for m in methods}
    try:
        graph_stats = GraphStatsModel(**stats(g).__dict__)
    except EngineError:
        graph_stats = None
    elapsed = time.perf_counter() - started
    logger.info(f"✅ 扫描完成 {network}: 用时 {elapsed:.2f}s")
    return SweepResult(
        network=network,
        model=model,
        grid=list(grid.points),
        source=x,
        series=series,
        stats=graph_stats,
        metadata={"config": config.model_dump(mode="json"), "n": g.n, "m": g.m, "source": x},
    )


# ============================================================================
# 任务管理器（供 HTTP 接口共享）
# ============================================================================

@dataclass
class SweepJob:
    job_id: str
    network: str
    status: str = "pending"  # pending / running / done / failed
    result: Optional[SweepResult] = None
    error: Optional[str] = None
    created: float = field(default_factory=time.time)

    def summary(self) -> dict:
        return {"job_id": self.job_id, "network": self.network, "status": self.status, "error": self.error}


class SweepManager:
    """
    登记并执行扫描任务；每个请求运行到结束（无中途干预）。
    单个任务内的网格点按 max_workers 并行执行。
    """

    def __init__(self, max_workers: int = 1, history: int = 64):
        self.max_workers = max_workers
        self.history = history
        self.jobs: Dict[str, SweepJob] = {}
        self.lock = threading.Lock()
        logger.info(f"🎛 扫描管理器初始化完成（max_workers={max_workers}）")

    def _register(self, network: str) -> SweepJob:
        job = SweepJob(job_id=uuid.uuid4().hex[:12], network=network)
        with self.lock:
            self.jobs[job.job_id] = job
            # 仅保留最近的任务
            for stale in list(self.jobs)[:-self.history]:
                self.jobs.pop(stale, None)
        return job

    def run(self, g: Graph, model: str, methods: Sequence[str], grid: SweepGrid,
            config: Optional[RunConfig] = None, network: str = "graph", source="auto") -> SweepJob:
        job = self._register(network)
        job.status = "running"
        try:
            job.result = sweep(g, model, methods, grid, config, network, source, self.max_workers)
            job.status = "done"
        except EngineError as exc:
            job.status = "failed"
            job.error = str(exc)
            logger.error(f"❌ 扫描任务 {job.job_id} 失败: {exc}")
            raise
        return job

    def get(self, job_id: str) -> Optional[SweepJob]:
        return self.jobs.get(job_id)

    def list_jobs(self) -> List[dict]:
        with self.lock:
            return [job.summary() for job in self.jobs.values()]

    def clear(self) -> None:
        with self.lock:
            self.jobs.clear()
        logger.info("🛑 已清空扫描任务记录")
