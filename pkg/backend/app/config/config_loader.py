# -*- coding: utf-8 -*-
# backend/app/config/config_loader.py - 运行配置与数据集清单的加载
import json
import logging
import os
import sys
if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib
from pathlib import Path
from typing import Optional, Union

from pydantic import ValidationError

from app.config import params
from app.config.settings import RunConfig
from app.errors import ConfigError
from app.harness.models import DatasetManifest

PathType = Union[str, os.PathLike, Path]

logger = logging.getLogger(__name__)

# ======================================================
#   路径
# ======================================================

def get_external_config_path(filename: str) -> Path:
    """打包运行时读取可执行文件旁的 config/filename，否则读取本目录下的同名文件"""
    if getattr(sys, "frozen", False):
        return Path(sys.executable).resolve().parent / "config" / filename
    return Path(__file__).resolve().parent / filename


# ======================================================
#  通用配置加载器（JSON / TOML）
# ======================================================

def _parse(path: Path) -> dict:
    if path.suffix.lower() == ".toml":
        with path.open("rb") as f:
            return tomllib.load(f)
    with path.open("r", encoding="utf-8") as f:
        return json.load(f)


def load_config_file(external_path: PathType) -> dict:
    """按扩展名读取 TOML 或 JSON；文件缺失抛 FileNotFoundError，格式错误抛 ConfigError"""
    resolved_path = Path(external_path)
    if not resolved_path.exists():
        raise FileNotFoundError(f"必需的配置文件缺失: {resolved_path}")

    logger.info(f"📌 使用配置文件: {resolved_path}")
    try:
        return _parse(resolved_path)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"读取配置失败: {resolved_path}: JSON 格式错误（行 {exc.lineno}, 列 {exc.colno}）"
        ) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"读取配置失败: {resolved_path}: TOML 格式错误（{exc}）") from exc
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"读取配置失败: {resolved_path}: {exc}") from exc


# ======================================================
#  专用加载接口
# ======================================================

def load_run_config(path: Optional[PathType] = None) -> RunConfig:
    """加载运行配置；未指定路径时使用内置默认配置"""
    target = Path(path) if path else Path(params.DEFAULT_RUN_CONFIG_PATH)
    data = load_config_file(target)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"运行配置校验失败: {target}: {exc}") from exc


def load_manifest(path: Optional[PathType] = None) -> DatasetManifest:
    """加载数据集清单（datasets.json）"""
    target = Path(path) if path else get_external_config_path("datasets.json")
    data = load_config_file(target)
    try:
        return DatasetManifest.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"数据集清单校验失败: {target}: {exc}") from exc
