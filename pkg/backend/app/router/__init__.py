# backend/app/router/__init__.py
from . import datasets_router
from . import graph_router
from . import health_router
from . import sweep_router

__all__ = [
    "datasets_router",
    "graph_router",
    "health_router",
    "sweep_router",
]
