# params.py - 默认数值参数
import os
from typing import Dict, Any

# ========================================================================
# 通用配置
# ========================================================================

BASE_DIR = os.path.dirname(os.path.abspath(__file__))
# 内置夹具（边表）目录
FIXTURE_DIR = os.path.join(BASE_DIR, "fixtures")
# 数据集清单
DEFAULT_MANIFEST_PATH = os.path.join(BASE_DIR, "datasets.json")
# 默认运行配置
DEFAULT_RUN_CONFIG_PATH = os.path.join(BASE_DIR, "run_default.toml")

# ========================================================================
# 参数网格
# ========================================================================

GRID_POINTS = 50
GRID_P_MIN = 0.01
GRID_P_MAX = 0.99

# ========================================================================
# 不动点求解器默认参数
# ========================================================================

DEFAULT_SOLVER_PARAMS: Dict[str, Any] = {
    "tolerance": 1e-12,  # 最大绝对变化
    "max_iterations": 1_000_000,
    "damping": 0.0,
    "init": "ones",  # 有序初始化，选择非平凡分支
    "schedule": "synchronous",  # 向量化同步更新；sequential 为参考实现
    "init_seed": 0,
    "debug": False,
}

# 分母保护：1 - p·μ ≤ ε 视为发散
DENOMINATOR_EPS = 1e-12
# artanh 保护：非钳制消息 |t| ≤ 1 - 1e-15
ARTANH_GUARD = 1e-15
# 线性响应迭代：谱半径估计 ≥ 该值即判定发散
SPECTRAL_DIVERGENCE = 1.0 - 1e-9
# 线性响应迭代的预热步数（之后才采信谱半径估计）
SPECTRAL_WARMUP = 50

# ========================================================================
# 蒙特卡洛默认参数
# ========================================================================

PERC_REALIZATIONS = 10_000  # 桌面规模；全量规模见下
PERC_REALIZATIONS_FULL = 400_000
PERC_BATCH_SIZE = 512  # 每批实现拼成一张块对角图

DEFAULT_ISING_MC_PARAMS: Dict[str, Any] = {
    "macro_steps": 100,
    "metropolis_sweeps_per_macro": 50,
    "smoothing_alpha": 0.3,
    "base_measurements": 8e5,  # K = round(8e5 / sqrt(N))
    "measurement_divisor": 10,  # 桌面规模缩减；全量规模为 1
    "scale_threshold": 0.9,
    "seed": 0,
}

# 精确枚举的规模上限
ENUM_MAX_EDGES = 24
ENUM_MAX_NODES = 20
ENUM_BATCH = 4096

# ========================================================================
# 数据集下载
# ========================================================================

NETZSCHLEUDER_BASE = "https://networks.skewed.de/net"
DESK_MAX_NODES = 1000

# ========================================================================
# 辅助函数
# ========================================================================


def get_solver_params() -> Dict[str, Any]:
    """返回求解器默认参数副本"""
    return DEFAULT_SOLVER_PARAMS.copy()


def get_ising_mc_params() -> Dict[str, Any]:
    """返回 Ising MC 默认参数副本"""
    return DEFAULT_ISING_MC_PARAMS.copy()


def get_fixture_path(filename: str) -> str:
    """返回内置夹具文件路径"""
    return os.path.join(FIXTURE_DIR, filename)
