# -*- coding: utf-8 -*-
# backend/app/harness/metrics.py - Δ 误差：方法与 MC 的序参量曲线之间的面积
from typing import Sequence, Union

import numpy as np
from scipy.integrate import trapezoid

from app.errors import ParameterError
from app.harness.models import MethodSeries, SweepGrid

SeriesLike = Union[MethodSeries, Sequence[float], np.ndarray]


def _values(series: SeriesLike, grid: SweepGrid, label: str) -> np.ndarray:
    if isinstance(series, MethodSeries):
        ps = [pt.p for pt in series.points]
        if len(ps) != len(grid) or not np.allclose(ps, grid.points, rtol=0.0, atol=1e-15):
            raise ParameterError(f"{label} 序列与参数网格不一致")
        values = series.order_parameters()
    else:
        values = np.asarray(series, dtype=np.float64)
    if values.shape != (len(grid),):
        raise ParameterError(f"{label} 序列长度 {values.size} 与网格点数 {len(grid)} 不一致")
    if not np.all(np.isfinite(values)):
        raise ParameterError(f"{label} 序列包含非有限值")
    return values


def delta_error(method_series: SeriesLike, mc_series: SeriesLike, grid: SweepGrid) -> float:
    """采样网格上 |method − mc| 的梯形积分（不外推到 0 与 1）"""
    diff = np.abs(_values(method_series, grid, "方法") - _values(mc_series, grid, "MC"))
    return float(trapezoid(diff, np.asarray(grid.points)))
