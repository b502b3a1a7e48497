# -*- coding: utf-8 -*-
# backend/app/config/env_loader.py - .env 加载（SNBP_ 环境变量）
import logging
import sys
from pathlib import Path
from typing import Iterable, List, Optional

from dotenv import dotenv_values, load_dotenv

logger = logging.getLogger(__name__)

ENV_PREFIX = "SNBP_"


def _malformed_lines(text: str) -> List[int]:
    """非空、非注释且缺少 '=' 的行号"""
    return [
        idx
        for idx, line in enumerate(text.splitlines(), start=1)
        if line.strip() and not line.strip().startswith("#") and "=" not in line
    ]


def _unknown_keys(env_path: Path) -> List[str]:
    from app.config.settings import EngineSettings

    known = {ENV_PREFIX + name.upper() for name in EngineSettings.model_fields}
    return sorted(k for k in dotenv_values(env_path) if k.startswith(ENV_PREFIX) and k not in known)


def _try_load(env_path: Path) -> bool:
    """编码或语法有误时返回 False，由调用方继续尝试下一个候选"""
    try:
        text = env_path.read_text(encoding="utf-8")
    except UnicodeDecodeError:
        logger.error(f"❌ .env 编码无效（必须为 UTF-8）：{env_path}")
        return False
    except OSError as exc:
        logger.error(f"❌ 无法读取 .env 文件 {env_path}: {exc}")
        return False

    bad = _malformed_lines(text)
    if bad:
        logger.warning(f"⚠️ .env 语法错误（缺少 '='）: {env_path}，问题行: {bad}")
        return False

    unknown = _unknown_keys(env_path)
    if unknown:
        logger.warning(f"⚠️ .env 中有未识别的 {ENV_PREFIX} 变量（已忽略）: {unknown}")
    load_dotenv(env_path)
    logger.info(f"✅ 已加载 .env 文件: {env_path}")
    return True


def _default_candidates() -> List[Path]:
    # 打包运行时先看可执行文件旁，然后是仓库根目录和当前目录
    candidates = []
    if getattr(sys, "frozen", False):
        candidates.append(Path(sys.executable).resolve().parent / ".env")
    candidates.append(Path(__file__).resolve().parents[3] / ".env")
    candidates.append(Path.cwd() / ".env")
    return candidates


def load_env_files(candidate_paths: Optional[Iterable[Path]] = None) -> Optional[Path]:
    """按顺序加载第一个有效的 .env，返回其路径；都不可用时返回 None"""
    tried = set()
    for env_path in (list(candidate_paths) if candidate_paths is not None else _default_candidates()):
        resolved = Path(env_path).resolve()
        if resolved in tried:
            continue
        tried.add(resolved)
        if resolved.exists() and _try_load(resolved):
            return resolved

    logger.info("⚠️ 未找到 .env 文件，将使用默认环境变量")
    return None
