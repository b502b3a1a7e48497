# -*- coding: utf-8 -*-
# backend/app/harness/benchmark.py - 多网络批量基准：Δ(BP/SNBP/MFA − MC) 与图结构统计
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Union

from app.config.settings import BENCHMARK_METHODS, EngineSettings, RunConfig, get_settings
from app.graph.core import Graph, stats
from app.harness.fetcher import load_dataset
from app.harness.metrics import delta_error
from app.harness.models import DatasetEntry, DatasetManifest, ErrorReport, ErrorRow, FailureRecord, SweepGrid
from app.harness.sweep import sweep

logger = logging.getLogger(__name__)

GraphLoader = Callable[[DatasetEntry], Graph]


def _benchmark_entry(entry: DatasetEntry, model: str, config: RunConfig, grid: SweepGrid,
                     loader: GraphLoader) -> Union[ErrorRow, FailureRecord]:
    try:
        g = loader(entry)
        result = sweep(g, model, BENCHMARK_METHODS, grid, config, network=entry.name, source="auto")
        mc = result.series["MC"]
        deltas = {m: delta_error(result.series[m], mc, grid) for m in ("BP", "SNBP", "MFA")}
        graph_stats = stats(g)
        logger.info(
            f"✅ {entry.name}: c={graph_stats.cyclomatic}, "
            + ", ".join(f"Δ_{k}={v:.4f}" for k, v in deltas.items())
        )
        return ErrorRow(
            network=entry.name,
            domain=entry.domain,
            model=model,
            n=graph_stats.n,
            m=graph_stats.m,
            cyclomatic=graph_stats.cyclomatic,
            mean_degree=graph_stats.mean_degree,
            delta=deltas,
        )
    except Exception as exc:
        # 单个网络的任何异常都只记录，不中止整批
        logger.exception(f"❌ {entry.name} 基准失败，跳过: {exc}")
        return FailureRecord(network=entry.name, error=str(exc), error_type=type(exc).__name__)


def batch_benchmark(
    manifest: DatasetManifest,
    model: str,
    config: Optional[RunConfig] = None,
    settings: Optional[EngineSettings] = None,
    loader: Optional[GraphLoader] = None,
) -> ErrorReport:
    """
    每个网络：预处理 → 扫描 {BP, SNBP, MFA, MC} → 计算三个 Δ。
    单个网络失败只记录、不中止；行按清单顺序输出。
    """
    config = (config or RunConfig()).resolved()
    settings = settings or get_settings()
    loader = loader or (lambda entry: load_dataset(entry, settings))
    grid = SweepGrid.uniform(config.grid.points, config.grid.p_min, config.grid.p_max)

    entries = manifest.desk_subset(config.run.max_nodes).entries
    if config.run.max_networks is not None:
        entries = entries[:config.run.max_networks]
    logger.info(f"🚀 批量基准: model={model}, {len(entries)} 个网络, 工作线程 {settings.max_workers}")

    with ThreadPoolExecutor(max_workers=settings.max_workers, thread_name_prefix="bench") as pool:
        futures = [pool.submit(_benchmark_entry, e, model, config, grid, loader) for e in entries]
        outcomes = [f.result() for f in futures]

    report = ErrorReport(model=model, metadata={"config": config.model_dump(mode="json"), "networks": len(entries)})
    for outcome in outcomes:
        if isinstance(outcome, ErrorRow):
            report.rows.append(outcome)
        else:
            report.failures.append(outcome)
    logger.info(f"✅ 批量基准完成: 成功 {len(report.rows)}，失败 {len(report.failures)}")
    return report
