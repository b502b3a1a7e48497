# -*- coding: utf-8 -*-
# backend/app/router/datasets_router.py - 数据集清单
from typing import Optional

from fastapi import APIRouter, Query

from app.config.config_loader import load_manifest
from app.utils.manager_utils import success_response

router = APIRouter(prefix="/api/datasets", tags=["Datasets"])


@router.get("")
def list_datasets(max_nodes: Optional[int] = Query(default=None, ge=1)):
    manifest = load_manifest()
    if max_nodes is not None:
        manifest = manifest.desk_subset(max_nodes)
    entries = [entry.model_dump() | {"cyclomatic": entry.cyclomatic} for entry in manifest.entries]
    return success_response(entries, f"共 {len(entries)} 个数据集")
