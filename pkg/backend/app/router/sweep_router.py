# -*- coding: utf-8 -*-
# backend/app/router/sweep_router.py - 参数扫描任务
import logging
from typing import List, Literal, Union

from fastapi import APIRouter, Depends, HTTPException
from pydantic import BaseModel, Field, model_validator

from app.config import params
from app.config.settings import (
    BENCHMARK_METHODS,
    GridSettings,
    MethodName,
    PercolationMcSettings,
    RunConfig,
    RunSettings,
)
from app.graph.core import load_edge_list, preprocess
from app.harness.models import SweepGrid
from app.harness.sweep import SweepManager
from app.utils.manager_utils import get_manager, success_response

router = APIRouter(prefix="/api/sweep", tags=["Sweep"])
logger = logging.getLogger(__name__)


# -----------------------------
# 数据模型定义
# -----------------------------
class SweepRequest(BaseModel):
    edge_list: str = Field(..., min_length=1)
    network: str = "graph"
    model: Literal["percolation", "ising", "perc"] = "percolation"
    methods: List[MethodName] = Field(default_factory=lambda: list(BENCHMARK_METHODS), min_length=1)
    grid_points: int = Field(default=params.GRID_POINTS, ge=2, le=1000)
    p_min: float = Field(default=params.GRID_P_MIN, gt=0.0, lt=1.0)
    p_max: float = Field(default=params.GRID_P_MAX, gt=0.0, lt=1.0)
    source: Union[Literal["auto", "none"], int] = "auto"
    seed: int = Field(default=0, ge=0)
    realizations: int = Field(default=params.PERC_REALIZATIONS, ge=2, le=params.PERC_REALIZATIONS_FULL)

    @model_validator(mode="after")
    def _check_range(self):
        if self.p_min >= self.p_max:
            raise ValueError(f"p_min 必须小于 p_max: {self.p_min} >= {self.p_max}")
        return self

    def run_config(self) -> RunConfig:
        return RunConfig(
            grid=GridSettings(points=self.grid_points, p_min=self.p_min, p_max=self.p_max),
            percolation_mc=PercolationMcSettings(realizations=self.realizations),
            run=RunSettings(
                model="percolation" if self.model == "perc" else self.model,
                methods=self.methods,
                source=self.source,
                seed=self.seed,
            ),
        )


# -----------------------------
# 路由接口定义
# -----------------------------
@router.post("")
def run_sweep(body: SweepRequest, manager: SweepManager = Depends(get_manager)):
    """同步执行一次扫描，返回与导出 JSON 相同结构的 SweepResult"""
    config = body.run_config()
    g = preprocess(load_edge_list(body.edge_list))
    grid = SweepGrid.uniform(config.grid.points, config.grid.p_min, config.grid.p_max)
    job = manager.run(g, config.run.model, config.run.methods, grid, config, body.network, config.run.source)
    data = job.result.model_dump(mode="json")
    data["job_id"] = job.job_id
    return success_response(data, "扫描完成")


@router.get("/jobs")
def list_jobs(manager: SweepManager = Depends(get_manager)):
    return success_response(manager.list_jobs())


@router.get("/jobs/{job_id}")
def get_job(job_id: str, manager: SweepManager = Depends(get_manager)):
    job = manager.get(job_id)
    if job is None:
        raise HTTPException(status_code=404, detail=f"任务 {job_id} 不存在")
    data = job.summary()
    data["result"] = job.result.model_dump(mode="json") if job.result else None
    return success_response(data)


@router.delete("/jobs")
def clear_jobs(manager: SweepManager = Depends(get_manager)):
    manager.clear()
    return success_response(None, "已清空任务记录")
