# -*- coding: utf-8 -*-
# backend/app/router/graph_router.py - 图结构统计
import logging

from fastapi import APIRouter
from pydantic import BaseModel, Field

from app.graph.core import parse_edge_list, preprocess, select_source, stats
from app.utils.manager_utils import success_response

router = APIRouter(prefix="/api/graph", tags=["Graph"])
logger = logging.getLogger(__name__)


class GraphStatsRequest(BaseModel):
    edge_list: str = Field(..., min_length=1, description="边表文本，每行两个节点标签")
    preprocess: bool = Field(default=True, description="是否先提取最大连通分量")


@router.post("/stats")
def graph_stats(body: GraphStatsRequest):
    """返回 N、M、圈数、平均度、解析摘要与默认源节点"""
    g, summary = parse_edge_list(body.edge_list)
    if body.preprocess:
        g = preprocess(g)
    x = select_source(g)
    data = {
        "stats": stats(g).__dict__,
        "parse": summary.__dict__,
        "source": x,
        "source_label": g.labels[x],
    }
    return success_response(data, "图统计完成")
