# backend/app/main.py - 批处理 HTTP 接口
import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from starlette.middleware.base import BaseHTTPMiddleware

from app.config.env_loader import load_env_files
from app.config.settings import get_settings
from app.errors import ConfigError, DatasetError, EngineError
from app.harness.sweep import SweepManager

# 加载环境变量
load_env_files()

# 配置日志
logging.basicConfig(
    level=get_settings().log_level.upper(),
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)


class ErrorLoggerMiddleware(BaseHTTPMiddleware):
    async def dispatch(self, request, call_next):
        logger.info(f"🟢 [Middleware] 开始处理: {request.method} {request.url.path}")
        try:
            response = await call_next(request)
            logger.info(f"🟢 [Middleware] 处理完成: {request.method} {request.url.path} -> {response.status_code}")
            return response
        except Exception as e:
            logger.exception(f"🔥 [Middleware] 捕获异常: {type(e).__name__}: {e}")
            return JSONResponse(
                status_code=500,
                content={"success": False, "detail": str(e), "type": type(e).__name__},
            )


# 初始化 FastAPI
app = FastAPI(title="SNBP Benchmark Engine")
app.add_middleware(ErrorLoggerMiddleware)

# =====================================================================
# 注册路由
# =====================================================================
from app.router import datasets_router, graph_router, health_router, sweep_router  # noqa: E402

app.include_router(health_router.router)
app.include_router(graph_router.router)
app.include_router(datasets_router.router)
app.include_router(sweep_router.router)

# ============================================================================
# 应用生命周期事件
# ============================================================================


@app.on_event("startup")
async def startup_event():
    """应用启动时创建共享的扫描任务管理器"""
    settings = get_settings()
    logger.info("🚀 SNBP 基准服务启动中...")
    app.state.sweep_manager = SweepManager(max_workers=settings.max_workers)
    logger.info(f"✅ 系统启动完成（缓存目录 {settings.cache_dir}，离线={settings.offline}）")


@app.on_event("shutdown")
async def shutdown_event():
    manager = getattr(app.state, "sweep_manager", None)
    if manager:
        manager.clear()
    else:
        logger.warning("⚠️ 未找到扫描管理器实例")
    logger.info("🛑 服务已关闭")


# ============================================================================
# 异常处理
# ============================================================================

@app.exception_handler(EngineError)
async def engine_exception_handler(request: Request, exc: EngineError):
    """参数 / 图 / 数值错误 → 400；数据集下载与校验错误 → 502"""
    status = 502 if isinstance(exc, DatasetError) else 400
    logger.warning(f"⚠️ {request.url.path}: {type(exc).__name__}: {exc}")
    return JSONResponse(
        status_code=status,
        content={"success": False, "detail": str(exc), "type": type(exc).__name__},
    )


@app.exception_handler(ConfigError)
async def config_exception_handler(request: Request, exc: ConfigError):
    logger.error(f"❌ 配置错误: {exc}")
    return JSONResponse(
        status_code=500,
        content={"success": False, "detail": str(exc), "type": type(exc).__name__},
    )


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    """全局异常处理器"""
    logger.exception(f"❌ 全局异常捕获: {type(exc).__name__}: {exc}（{request.url.path}）")
    return JSONResponse(
        status_code=500,
        content={"success": False, "detail": str(exc), "type": type(exc).__name__, "path": str(request.url)},
    )


# ============================================================================
# 主程序入口
# ============================================================================
if __name__ == "__main__":
    import uvicorn

    settings = get_settings()
    uvicorn.run(app, host=settings.server_ip, port=settings.server_port)
