# -*- coding: utf-8 -*-
# backend/app/harness/models.py - 扫描结果、误差报告与数据集清单的数据模型
import math
import re
from typing import Annotated, Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, BeforeValidator, Field, PlainSerializer, field_validator

from app.config import params


def _inf_to_token(value: Optional[float]):
    if value is not None and math.isinf(value) and value > 0:
        return "inf"
    return value


def _token_to_inf(value):
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    return value


# +∞ 哨兵在 JSON / CSV 中写作 "inf"
InfFloat = Annotated[
    Optional[float],
    BeforeValidator(_token_to_inf),
    PlainSerializer(_inf_to_token, when_used="always"),
]


# ============================================================================
# 扫描
# ============================================================================

class SweepGrid(BaseModel):
    points: List[float]

    @field_validator("points")
    @classmethod
    def _check_points(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("参数网格不能为空")
        if any(not (0.0 < p < 1.0) for p in value):
            raise ValueError("网格点必须在 (0, 1) 内")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("网格点必须严格递增")
        return value

    @classmethod
    def uniform(
        cls,
        points: int = params.GRID_POINTS,
        p_min: float = params.GRID_P_MIN,
        p_max: float = params.GRID_P_MAX,
    ) -> "SweepGrid":
        return cls(points=[float(p) for p in np.linspace(p_min, p_max, points)])

    def __len__(self) -> int:
        return len(self.points)


class SeriesPoint(BaseModel):
    p: float
    beta: Optional[float] = None
    order_parameter: Optional[float] = None
    susceptibility: InfFloat = None
    stderr: Optional[float] = None
    chi_stderr: Optional[float] = None
    converged: Optional[bool] = None
    iterations: Optional[int] = None
    # unsupported / diverged / not_converged
    diagnostic: Optional[str] = None


class MethodSeries(BaseModel):
    method: str
    points: List[SeriesPoint]
    # 有限磁化率最大值所在的 p（观察伪临界峰）
    peak_p: Optional[float] = None
    diverged: bool = False

    def order_parameters(self) -> np.ndarray:
        return np.array([pt.order_parameter for pt in self.points], dtype=np.float64)

    def susceptibilities(self) -> np.ndarray:
        return np.array(
            [np.nan if pt.susceptibility is None else pt.susceptibility for pt in self.points], dtype=np.float64
        )


class GraphStatsModel(BaseModel):
    n: int
    m: int
    cyclomatic: int
    mean_degree: float


class SweepResult(BaseModel):
    network: str
    model: str
    grid: List[float]
    source: Optional[int] = None
    series: Dict[str, MethodSeries] = Field(default_factory=dict)
    stats: Optional[GraphStatsModel] = None
    metadata: Dict[str, Any] = Field(default_factory=dict)

    @property
    def methods(self) -> List[str]:
        return list(self.series)


# ============================================================================
# 误差报告
# ============================================================================

class ErrorRow(BaseModel):
    network: str
    domain: Optional[str] = None
    model: str
    n: int
    m: int
    cyclomatic: int
    mean_degree: float
    # 方法名 → Δ(method − MC)
    delta: Dict[str, float]


class FailureRecord(BaseModel):
    network: str
    error: str
    error_type: str


class ErrorReport(BaseModel):
    model: str
    rows: List[ErrorRow] = Field(default_factory=list)
    failures: List[FailureRecord] = Field(default_factory=list)
    metadata: Dict[str, Any] = Field(default_factory=dict)


# ============================================================================
# 数据集清单
# ============================================================================

class DatasetEntry(BaseModel):
    name: str
    domain: Optional[str] = None
    expected_n: int = Field(ge=1)
    expected_m: int = Field(ge=0)
    url: Optional[str] = None
    # 原始数据来源页面
    origin: Optional[str] = None

    @property
    def slug(self) -> str:
        """缓存文件名：name 中的 '/' 等字符替换为 '__'"""
        return re.sub(r"[^A-Za-z0-9_.-]+", "__", self.name)

    @property
    def cyclomatic(self) -> int:
        return self.expected_m - self.expected_n + 1

    def download_url(self) -> str:
        if self.url:
            return self.url
        network, _, sub = self.name.partition("/")
        return f"{params.NETZSCHLEUDER_BASE}/{network}/files/{sub or network}.csv.zip"


class DatasetManifest(BaseModel):
    entries: List[DatasetEntry]

    def get(self, name: str) -> DatasetEntry:
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise KeyError(f"清单中没有数据集: {name}")

    def desk_subset(self, max_nodes: int = params.DESK_MAX_NODES) -> "DatasetManifest":
        return DatasetManifest(entries=[e for e in self.entries if e.expected_n <= max_nodes])

    def __len__(self) -> int:
        return len(self.entries)
