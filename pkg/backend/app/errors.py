# -*- coding: utf-8 -*-
# backend/app/errors.py - 引擎异常层级
"""
所有可预期的失败都归入 EngineError 之下，exit_code 供 CLI 直接返回：
- 1：参数 / 用法 / 图结构错误
- 2：数值失败
- 3：I/O 与数据集下载失败

注意：不收敛、发散属于结果数据（解对象里的标志位），不会抛异常。
"""


class EngineError(Exception):
    """引擎异常基类"""

    exit_code = 1


# ============================================================================
# 图相关
# ============================================================================

class GraphError(EngineError):
    exit_code = 1


class EdgeListParseError(GraphError):
    """边表解析失败，携带出错行号"""

    def __init__(self, message: str, line_number: int = 0):
        super().__init__(f"第 {line_number} 行: {message}" if line_number else message)
        self.line_number = line_number


class DisconnectedGraphError(GraphError):
    pass


class InvalidSourceError(GraphError):
    pass


# ============================================================================
# 参数 / 数值
# ============================================================================

class ParameterError(EngineError):
    exit_code = 1


class NumericalError(EngineError):
    exit_code = 2


class SweepError(NumericalError):
    """扫描中止：记录出错的 (method, p)"""

    def __init__(self, method: str, p: float, cause: Exception):
        super().__init__(f"扫描失败 method={method} p={p:.6g}: {type(cause).__name__}: {cause}")
        self.method = method
        self.p = p
        self.cause = cause
        if isinstance(cause, EngineError):
            self.exit_code = cause.exit_code


# ============================================================================
# 配置 / 数据集
# ============================================================================

class ConfigError(RuntimeError):
    """配置文件缺失或格式错误（沿用 RuntimeError 语义）"""

    exit_code = 1


class DatasetError(EngineError):
    exit_code = 3


class FetchError(DatasetError):
    pass


class IntegrityError(DatasetError):
    pass
