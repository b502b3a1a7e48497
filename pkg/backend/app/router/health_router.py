# backend/app/router/health_router.py
from fastapi import APIRouter

from app.utils.manager_utils import success_response

router = APIRouter(prefix="/api", tags=["Health"])


@router.get("/health")
def health():
    return success_response({"status": "ok"})
