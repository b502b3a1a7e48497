# -*- coding: utf-8 -*-
# backend/app/harness/export.py - 扫描结果 / 误差报告的 CSV 与 JSON 导出导入
"""
CSV 与 JSON 共用同一张扁平表（SWEEP_COLUMNS / REPORT_COLUMNS）：
JSON 的 "table" 字段按列给出同样的行，不适用的字段写 null，+∞ 写作 "inf"；
其余顶层字段是完整的结果模型，供 load_*_json 无损读回。
"""
import csv
import json
import logging
import math
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Union

from app.errors import DatasetError, ParameterError
from app.harness.models import ErrorReport, SweepResult

logger = logging.getLogger(__name__)

PathType = Union[str, os.PathLike, Path]
ExportFormat = Literal["csv", "json"]
Record = Dict[str, Any]

SWEEP_COLUMNS = [
    "network", "model", "method", "p", "beta", "order_parameter", "susceptibility", "stderr", "converged",
    "iterations",
]
REPORT_DELTA_METHODS = ["BP", "SNBP", "MFA"]
REPORT_COLUMNS = ["network", "domain", "model", "n", "m", "cyclomatic", "mean_degree"] + [
    f"delta_{m}" for m in REPORT_DELTA_METHODS
]


def _is_inf(value) -> bool:
    return isinstance(value, float) and math.isinf(value) and value > 0


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "inf" if _is_inf(value) else repr(value)
    return str(value)


def _json_cell(value):
    return "inf" if _is_inf(value) else value


def sweep_records(result: SweepResult) -> List[Record]:
    records = []
    for method, series in result.series.items():
        for pt in series.points:
            records.append({
                "network": result.network,
                "model": result.model,
                "method": method,
                "p": pt.p,
                "beta": pt.beta,
                "order_parameter": pt.order_parameter,
                "susceptibility": pt.susceptibility,
                "stderr": pt.stderr,
                "converged": pt.converged,
                "iterations": pt.iterations,
            })
    return records


def report_records(report: ErrorReport) -> List[Record]:
    records = []
    for row in report.rows:
        record = {
            "network": row.network,
            "domain": row.domain,
            "model": row.model,
            "n": row.n,
            "m": row.m,
            "cyclomatic": row.cyclomatic,
            "mean_degree": row.mean_degree,
        }
        for method in REPORT_DELTA_METHODS:
            record[f"delta_{method}"] = row.delta.get(method)
        records.append(record)
    return records


def _table(result: Union[SweepResult, ErrorReport]):
    if isinstance(result, SweepResult):
        return SWEEP_COLUMNS, sweep_records(result)
    return REPORT_COLUMNS, report_records(result)


def _write_csv(path: Path, columns: List[str], records: List[Record]) -> None:
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows({key: _cell(value) for key, value in record.items()} for record in records)


def to_json(result: Union[SweepResult, ErrorReport]) -> str:
    columns, records = _table(result)
    document = result.model_dump(mode="json")
    document["table"] = {
        "columns": columns,
        "rows": [{key: _json_cell(record[key]) for key in columns} for record in records],
    }
    return json.dumps(document, ensure_ascii=False, indent=2)


def export(result: Union[SweepResult, ErrorReport], fmt: ExportFormat, path: PathType) -> Path:
    """写出结果文件；I/O 错误原样抛出"""
    target = Path(path)
    if fmt not in ("csv", "json"):
        raise ParameterError(f"未知导出格式: {fmt}")
    target.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        target.write_text(to_json(result) + "\n", encoding="utf-8")
    else:
        _write_csv(target, *_table(result))
    logger.info(f"✅ 已导出 {fmt.upper()}: {target}")
    return target


def load_sweep_json(path: PathType) -> SweepResult:
    return SweepResult.model_validate_json(Path(path).read_text(encoding="utf-8"))


def load_report_json(path: PathType) -> ErrorReport:
    return ErrorReport.model_validate_json(Path(path).read_text(encoding="utf-8"))


def read_sweep_csv(path: PathType) -> List[dict]:
    """读回扫描 CSV；数值列转换为 float / int / bool，"inf" 还原为 +∞"""
    rows = []
    with Path(path).open("r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != SWEEP_COLUMNS:
            raise DatasetError(f"CSV 列不匹配: {reader.fieldnames}")
        for raw in reader:
            row: dict = {"network": raw["network"], "model": raw["model"], "method": raw["method"]}
            for key in ("p", "beta", "order_parameter", "susceptibility", "stderr"):
                row[key] = float(raw[key]) if raw[key] else None
            row["converged"] = {"true": True, "false": False}.get(raw["converged"])
            row["iterations"] = int(raw["iterations"]) if raw["iterations"] else None
            rows.append(row)
    return rows
