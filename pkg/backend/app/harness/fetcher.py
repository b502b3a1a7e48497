# -*- coding: utf-8 -*-
# backend/app/harness/fetcher.py - Netzschleuder 数据集下载、转换与缓存
import csv
import io
import logging
import threading
import time
import zipfile
from pathlib import Path
from typing import Callable, Optional

import httpx

from app.config import params
from app.config.settings import EngineSettings, get_settings
from app.errors import FetchError, IntegrityError
from app.graph.core import Graph, parse_edge_list, preprocess, read_edge_list_file, write_edge_list
from app.harness.models import DatasetEntry

logger = logging.getLogger(__name__)

# 串行化缓存目录写入
_CACHE_LOCK = threading.Lock()
FIXTURE_SCHEME = "fixture:"


def cache_path(entry: DatasetEntry, settings: Optional[EngineSettings] = None) -> Path:
    settings = settings or get_settings()
    return Path(settings.cache_dir) / f"{entry.slug}.edges"


def _verify(entry: DatasetEntry, g: Graph) -> Graph:
    """预处理后的 N / M 必须与清单一致"""
    g = preprocess(g)
    if (g.n, g.m) != (entry.expected_n, entry.expected_m):
        raise IntegrityError(
            f"数据集 {entry.name} 校验失败: 期望 N={entry.expected_n}, M={entry.expected_m}，"
            f"实际 N={g.n}, M={g.m}"
        )
    return g


def edges_from_archive(content: bytes) -> Graph:
    """从 Netzschleuder 的 CSV 压缩包中读取 edges.csv 的前两列"""
    try:
        with zipfile.ZipFile(io.BytesIO(content)) as archive:
            name = next((n for n in archive.namelist() if n.endswith("edges.csv")), None)
            if name is None:
                raise FetchError(f"压缩包中没有 edges.csv: {archive.namelist()}")
            text = archive.read(name).decode("utf-8")
    except zipfile.BadZipFile as exc:
        raise FetchError(f"下载内容不是有效的 zip 文件: {exc}") from exc

    lines = []
    for row in csv.reader(io.StringIO(text)):
        if not row or row[0].lstrip().startswith("#"):
            continue
        if len(row) < 2:
            raise FetchError(f"edges.csv 行格式错误: {row}")
        lines.append(f"{row[0].strip()} {row[1].strip()}")
    graph, _ = parse_edge_list(lines)
    return graph


def _download(url: str, settings: EngineSettings, client: Optional[httpx.Client],
              sleep: Callable[[float], None]) -> bytes:
    owns_client = client is None
    client = client or httpx.Client(timeout=settings.http_timeout, follow_redirects=True)
    last_error: Optional[Exception] = None
    try:
        for attempt in range(1, settings.fetch_attempts + 1):
            try:
                response = client.get(url)
                response.raise_for_status()
                return response.content
            except httpx.HTTPError as exc:
                last_error = exc
                if attempt < settings.fetch_attempts:
                    delay = settings.fetch_backoff * 2 ** (attempt - 1)
                    logger.warning(f"🔁 下载失败（第 {attempt} 次）: {url}: {exc}，{delay:.1f}s 后重试")
                    sleep(delay)
    finally:
        if owns_client:
            client.close()
    raise FetchError(f"下载失败（已尝试 {settings.fetch_attempts} 次）: {url}: {last_error}")


def fetch_dataset(
    entry: DatasetEntry,
    settings: Optional[EngineSettings] = None,
    client: Optional[httpx.Client] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> Path:
    """
    返回本地边表文件路径：
    - 缓存命中：直接使用（并校验 N / M），不访问网络
    - offline：只用缓存，未命中则报错
    - 否则下载、转换为边表格式、校验后写入缓存
    """
    settings = settings or get_settings()
    target = cache_path(entry, settings)

    if target.exists():
        _verify(entry, read_edge_list_file(target))
        logger.info(f"📌 使用缓存数据集: {target}")
        return target
    if settings.offline:
        raise FetchError(f"离线模式下缓存缺失: {entry.name}（{target}）")

    url = entry.download_url()
    logger.info(f"🚀 下载数据集 {entry.name}: {url}")
    graph = _verify(entry, edges_from_archive(_download(url, settings, client, sleep)))

    with _CACHE_LOCK:
        target.parent.mkdir(parents=True, exist_ok=True)
        tmp = target.with_suffix(".edges.tmp")
        write_edge_list(graph, tmp, header=f"{entry.name}\nsource: {url}")
        tmp.replace(target)
    logger.info(f"✅ 数据集已缓存: {target}（N={graph.n}, M={graph.m}）")
    return target


def load_dataset(entry: DatasetEntry, settings: Optional[EngineSettings] = None,
                 client: Optional[httpx.Client] = None) -> Graph:
    """获取并返回预处理后的图；url 为 "fixture:<文件名>" 时读取内置夹具"""
    if entry.url and entry.url.startswith(FIXTURE_SCHEME):
        return _verify(entry, read_edge_list_file(params.get_fixture_path(entry.url[len(FIXTURE_SCHEME):])))
    return preprocess(read_edge_list_file(fetch_dataset(entry, settings, client)))
