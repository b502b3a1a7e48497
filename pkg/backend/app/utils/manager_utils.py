# -*- coding: utf-8 -*-
"""
manager_utils.py
封装全局扫描任务管理器的访问逻辑，供路由调用。
"""
import logging

from fastapi import HTTPException, Request

from app.harness.sweep import SweepManager

logger = logging.getLogger(__name__)


def get_manager(request: Request) -> SweepManager:
    """
    从 FastAPI 全局 app.state 中获取 SweepManager 实例。
    如果不存在则抛出 500。
    """
    manager = getattr(request.app.state, "sweep_manager", None)
    if manager is None:
        logger.error("❌ [get_manager] 扫描管理器未初始化")
        raise HTTPException(status_code=500, detail="SweepManager 未初始化")
    return manager


def success_response(data, message: str = "") -> dict:
    return {"success": True, "data": data, "message": message}
