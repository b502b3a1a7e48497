# -*- coding: utf-8 -*-
# backend/app/config/settings.py - 环境设置与运行配置模型
from pathlib import Path
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.config import params
from app.montecarlo.ising_mc import IsingMcOptions
from app.solvers.options import SolverOptions

MethodName = Literal["BP", "SNBP", "MFA", "SNMFA", "MC", "SNMC", "EXACT"]
ModelName = Literal["percolation", "ising"]

ALL_METHODS: List[str] = ["BP", "SNBP", "MFA", "SNMFA", "MC", "SNMC", "EXACT"]
BENCHMARK_METHODS: List[str] = ["BP", "SNBP", "MFA", "MC"]


def _default_cache_dir() -> Path:
    # backend/data/datasets
    return Path(__file__).resolve().parents[2] / "data" / "datasets"


# ============================================================================
# 环境设置（SNBP_ 前缀）
# ============================================================================

class EngineSettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="SNBP_", extra="ignore")

    cache_dir: Path = Field(default_factory=_default_cache_dir, description="数据集缓存目录")
    offline: bool = False
    max_workers: int = Field(default=1, ge=1, description="扫描工作线程数")
    log_level: str = "INFO"
    server_ip: str = "0.0.0.0"
    server_port: int = 8000
    http_timeout: float = Field(default=30.0, gt=0)
    fetch_attempts: int = Field(default=3, ge=1)
    fetch_backoff: float = Field(default=1.0, ge=0)


def get_settings() -> EngineSettings:
    """每次调用都重新读取环境变量（便于测试中 monkeypatch）"""
    return EngineSettings()


# ============================================================================
# 运行配置（TOML / JSON）
# ============================================================================

class GridSettings(BaseModel):
    points: int = Field(default=params.GRID_POINTS, ge=2)
    p_min: float = Field(default=params.GRID_P_MIN, gt=0.0, lt=1.0)
    p_max: float = Field(default=params.GRID_P_MAX, gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def _check_range(self) -> "GridSettings":
        if self.p_min >= self.p_max:
            raise ValueError(f"p_min 必须小于 p_max: {self.p_min} >= {self.p_max}")
        return self


class PercolationMcSettings(BaseModel):
    realizations: int = Field(default=params.PERC_REALIZATIONS, ge=2)
    batch_size: int = Field(default=params.PERC_BATCH_SIZE, ge=1)


class RunSettings(BaseModel):
    model: ModelName = "percolation"
    methods: List[MethodName] = Field(default_factory=lambda: list(BENCHMARK_METHODS))
    # "auto" = 最高度节点；"none" = 不使用源节点；或显式节点编号
    source: Union[Literal["auto", "none"], int] = "auto"
    seed: int = Field(default=0, ge=0)
    manifest: Optional[str] = None
    paper_scale: bool = False
    max_networks: Optional[int] = Field(default=None, ge=1)
    max_nodes: int = Field(default=params.DESK_MAX_NODES, ge=1)

    @field_validator("methods")
    @classmethod
    def _dedupe(cls, value: List[str]) -> List[str]:
        seen = []
        for method in value:
            if method not in seen:
                seen.append(method)
        return seen


class RunConfig(BaseModel):
    grid: GridSettings = GridSettings()
    solver: SolverOptions = SolverOptions()
    percolation_mc: PercolationMcSettings = PercolationMcSettings()
    ising_mc: IsingMcOptions = IsingMcOptions()
    run: RunSettings = RunSettings()

    def resolved(self) -> "RunConfig":
        """应用 paper_scale 开关后的配置；Ising 链种子统一取 run.seed"""
        ising_update = {"seed": self.run.seed}
        update = {}
        if self.run.paper_scale:
            ising_update["measurement_divisor"] = 1
            update["percolation_mc"] = self.percolation_mc.model_copy(
                update={"realizations": params.PERC_REALIZATIONS_FULL}
            )
        update["ising_mc"] = self.ising_mc.model_copy(update=ising_update)
        return self.model_copy(update=update)
