# -*- coding: utf-8 -*-
# backend/app/montecarlo/stats.py - 样本统计（均值 / ddof=1 标准差 / 标准误）
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator

import numpy as np

from app.errors import ParameterError


@dataclass(frozen=True)
class ObservableStats:
    mean: float
    std: float
    stderr: float
    count: int

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "ObservableStats":
        samples = np.asarray(samples, dtype=np.float64)
        count = int(samples.size)
        if count < 2:
            raise ParameterError(f"样本数至少为 2 才能计算标准差: {count}")
        std = float(np.std(samples, ddof=1))
        return cls(float(samples.mean()), std, std / math.sqrt(count), count)

    @classmethod
    def from_moments(cls, mean: float, std: float, count: int) -> "ObservableStats":
        return cls(float(mean), float(std), float(std) / math.sqrt(count), int(count))


@dataclass(frozen=True)
class McStats:
    """按观测量名索引的统计结果，附带采样元数据"""

    model: str
    observables: Dict[str, ObservableStats]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, name: str) -> ObservableStats:
        return self.observables[name]

    def __contains__(self, name: str) -> bool:
        return name in self.observables

    def __iter__(self) -> Iterator[str]:
        return iter(self.observables)

    def mean(self, name: str) -> float:
        return self.observables[name].mean

    def stderr(self, name: str) -> float:
        return self.observables[name].stderr


def variance_shift_stats(scale: float, second: np.ndarray, first: np.ndarray) -> ObservableStats:
    """
    scale·(⟨a⟩ − ⟨b⟩²) 的统计量，误差按 delta 方法传播：
    Var ≈ scale²·[Var(a) + 4⟨b⟩²Var(b) − 4⟨b⟩Cov(a, b)]
    """
    second = np.asarray(second, dtype=np.float64)
    first = np.asarray(first, dtype=np.float64)
    count = int(second.size)
    if count < 2:
        raise ParameterError(f"样本数至少为 2 才能计算标准差: {count}")
    mean_b = float(first.mean())
    cov = np.cov(np.vstack([second, first]), ddof=1)
    var = cov[0, 0] + 4.0 * mean_b ** 2 * cov[1, 1] - 4.0 * mean_b * cov[0, 1]
    std = abs(scale) * math.sqrt(max(float(var), 0.0))
    return ObservableStats.from_moments(scale * (float(second.mean()) - mean_b ** 2), std, count)
