# -*- coding: utf-8 -*-
# backend/app/cli.py - 命令行入口
"""
子命令：generate / stats / sweep / mc / benchmark / fetch / export / serve。
退出码：0 成功，1 用法或参数错误，2 数值失败，3 I/O 与数据集下载失败。
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from app.config import params
from app.config.config_loader import load_manifest, load_run_config
from app.config.env_loader import load_env_files
from app.config.settings import ALL_METHODS, EngineSettings, RunConfig, get_settings
from app.errors import ConfigError, EngineError, ParameterError
from app.graph import netgen
from app.graph.core import format_edge_list, parse_edge_list, preprocess, read_edge_list_file, select_source, stats
from app.harness.benchmark import batch_benchmark
from app.harness.export import export, load_report_json, load_sweep_json, to_json
from app.harness.fetcher import fetch_dataset
from app.harness.models import SweepGrid
from app.harness.sweep import resolve_source, sweep
from app.montecarlo.ising_mc import mc_ising
from app.montecarlo.percolation_mc import mc_percolation
from app.solvers.ising import beta_from_p

logger = logging.getLogger(__name__)

MODEL_ALIASES = {"perc": "percolation", "percolation": "percolation", "ising": "ising"}


class _ArgumentParser(argparse.ArgumentParser):
    """用法错误返回退出码 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: 错误: {message}\n")


# ============================================================================
# 配置组装
# ============================================================================

def _parse_source(value: str):
    if value in ("auto", "none"):
        return value
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"源节点必须是 auto、none 或节点编号: {value}")


def _parse_methods(value: str) -> List[str]:
    methods = [m.strip().upper() for m in value.split(",") if m.strip()]
    unknown = [m for m in methods if m not in ALL_METHODS]
    if unknown:
        raise argparse.ArgumentTypeError(f"未知方法 {unknown}，可选: {','.join(ALL_METHODS)}")
    return methods


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """配置文件（或内置默认）叠加命令行覆盖项"""
    config = load_run_config(getattr(args, "config", None))
    data = config.model_dump()
    overrides = {
        ("run", "model"): MODEL_ALIASES.get(getattr(args, "model", None)),
        ("run", "methods"): getattr(args, "methods", None),
        ("run", "source"): getattr(args, "source", None),
        ("run", "seed"): getattr(args, "seed", None),
        ("run", "max_networks"): getattr(args, "max_networks", None),
        ("run", "max_nodes"): getattr(args, "max_nodes", None),
        ("grid", "points"): getattr(args, "grid_points", None),
        ("grid", "p_min"): getattr(args, "p_min", None),
        ("grid", "p_max"): getattr(args, "p_max", None),
        ("percolation_mc", "realizations"): getattr(args, "realizations", None),
    }
    for (section, key), value in overrides.items():
        if value is not None:
            data[section][key] = value
    if getattr(args, "paper_scale", False):
        data["run"]["paper_scale"] = True
    try:
        return RunConfig.model_validate(data).resolved()
    except ValidationError as exc:
        raise ParameterError(f"运行参数非法: {exc}") from exc


def _settings(args: argparse.Namespace) -> EngineSettings:
    settings = get_settings()
    if getattr(args, "offline", False):
        settings = settings.model_copy(update={"offline": True})
    return settings


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
        logger.info(f"✅ 已写出: {out}")
    else:
        sys.stdout.write(text)


def _load_graph(path: str):
    return preprocess(read_edge_list_file(path))


# ============================================================================
# 子命令
# ============================================================================

def cmd_generate(args: argparse.Namespace) -> int:
    kind = args.kind
    if kind == "cayley":
        g = netgen.cayley_tree(args.coordination, args.depth)
    elif kind == "cayley+k":
        g = netgen.add_random_edges(netgen.cayley_tree(args.coordination, args.depth), args.k, args.seed)
    elif kind == "er":
        g = netgen.erdos_renyi_gnm(args.n, args.m, args.seed)
    elif kind == "ba":
        g = netgen.barabasi_albert(args.n, args.m, args.seed)
    elif kind == "lattice":
        g = netgen.square_lattice(args.width, args.height)
    else:
        radius = args.radius
        if radius is None:
            radius = netgen.calibrate_rgg_radius(args.n, args.mean_degree)
        g = netgen.random_geometric(args.n, radius, args.seed)
    header = f"generate {kind} seed={args.seed}"
    _emit(format_edge_list(g, header), args.out)
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    with open(args.graph, "r", encoding="utf-8") as f:
        raw, summary = parse_edge_list(f)
    g = preprocess(raw)
    payload = {
        "parse": summary.__dict__,
        "stats": stats(g).__dict__,
        "source": select_source(g) if g.n else None,
    }
    _emit(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", args.out)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    g = _load_graph(args.graph)
    grid = SweepGrid.uniform(config.grid.points, config.grid.p_min, config.grid.p_max)
    result = sweep(
        g,
        config.run.model,
        config.run.methods,
        grid,
        config,
        network=Path(args.graph).stem,
        source=config.run.source,
        max_workers=args.workers or get_settings().max_workers,
    )
    if args.out:
        export(result, args.format, args.out)
    else:
        sys.stdout.write(to_json(result) + "\n")
    return 0


def cmd_mc(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    g = _load_graph(args.graph)
    x = resolve_source(g, config.run.source)
    if config.run.model == "percolation":
        result = mc_percolation(
            g,
            args.p,
            realizations=config.percolation_mc.realizations,
            seed=config.run.seed,
            source=x,
            batch_size=config.percolation_mc.batch_size,
        )
    else:
        result = mc_ising(g, beta_from_p(args.p), config.ising_mc, x)
    payload = {
        "model": result.model,
        "p": args.p,
        "source": x,
        "observables": {name: result[name].__dict__ for name in result},
        "metadata": result.metadata,
    }
    _emit(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", args.out)
    return 0


def cmd_benchmark(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    manifest = load_manifest(args.manifest or config.run.manifest)
    report = batch_benchmark(manifest, config.run.model, config, _settings(args))
    if args.out:
        export(report, args.format, args.out)
    else:
        sys.stdout.write(to_json(report) + "\n")
    return 1 if report.failures and not report.rows else 0


def cmd_fetch(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    settings = _settings(args)
    if args.names:
        entries = [manifest.get(name) for name in args.names]
    else:
        entries = manifest.desk_subset(args.max_nodes).entries
    entries = [e for e in entries if not (e.url or "").startswith("fixture:")]
    for entry in entries:
        path = fetch_dataset(entry, settings)
        print(f"{entry.name}\t{path}")
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    try:
        result = load_sweep_json(args.input)
    except ValidationError:
        try:
            result = load_report_json(args.input)
        except ValidationError as exc:
            raise ParameterError(f"既不是扫描结果也不是误差报告: {args.input}") from exc
    export(result, args.format, args.out)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    settings = get_settings()
    uvicorn.run(
        "app.main:app",
        host=args.host or settings.server_ip,
        port=args.port or settings.server_port,
    )
    return 0


# ============================================================================
# 参数解析
# ============================================================================

def _add_run_flags(p: argparse.ArgumentParser, with_grid: bool = True) -> None:
    p.add_argument("--config", help="运行配置文件（TOML / JSON）")
    p.add_argument("--model", choices=sorted(MODEL_ALIASES), help="perc 或 ising")
    p.add_argument("--source", type=_parse_source, help="auto、none 或节点编号")
    p.add_argument("--seed", type=int)
    p.add_argument("--realizations", type=int, help="渗流 MC 实现次数")
    p.add_argument("--paper-scale", action="store_true", help="全量规模的 MC 参数（4×10^5 次实现，测量次数不缩减）")
    if with_grid:
        p.add_argument("--methods", type=_parse_methods, help=f"逗号分隔: {','.join(ALL_METHODS)}")
        p.add_argument("--grid-points", type=int)
        p.add_argument("--p-min", type=float)
        p.add_argument("--p-max", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="snbp", description="源节点信念传播与蒙特卡洛基准工具")
    parser.add_argument("--verbose", "-v", action="store_true", help="输出 DEBUG 日志")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    p = sub.add_parser("generate", help="生成合成网络边表")
    p.add_argument("kind", choices=["cayley", "cayley+k", "er", "ba", "lattice", "rgg"])
    p.add_argument("--coordination", type=int, default=3)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--k", type=int, default=2, help="cayley+k 额外随机边数")
    p.add_argument("--n", type=int, default=80)
    p.add_argument("--m", type=int, default=2, help="er: 边数；ba: 每个新节点的边数")
    p.add_argument("--width", type=int, default=8)
    p.add_argument("--height", type=int, default=8)
    p.add_argument("--radius", type=float)
    p.add_argument("--mean-degree", type=float, default=4.0, help="rgg 未给半径时的目标平均度")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("stats", help="图结构统计与源节点")
    p.add_argument("graph")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("sweep", help="参数扫描")
    p.add_argument("graph")
    _add_run_flags(p)
    p.add_argument("--workers", type=int)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mc", help="单点蒙特卡洛")
    p.add_argument("graph")
    p.add_argument("--p", type=float, required=True, help="占据概率（Ising 经 β = -ln(1-p)/2 换算）")
    _add_run_flags(p, with_grid=False)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("benchmark", help="多网络批量基准")
    _add_run_flags(p)
    p.add_argument("--manifest", help=f"数据集清单（默认 {params.DEFAULT_MANIFEST_PATH}）")
    p.add_argument("--max-networks", type=int)
    p.add_argument("--max-nodes", type=int)
    p.add_argument("--offline", action="store_true")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("fetch", help="下载并缓存数据集")
    p.add_argument("names", nargs="*", help="清单中的网络名；缺省为桌面子集")
    p.add_argument("--manifest")
    p.add_argument("--max-nodes", type=int, default=params.DESK_MAX_NODES)
    p.add_argument("--offline", action="store_true")
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("export", help="将 JSON 结果转换为 CSV / JSON")
    p.add_argument("input")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("serve", help="启动批处理 HTTP 接口")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_env_files()
    parser = build_parser()
    args = parser.parse_args(argv)

    level = "DEBUG" if args.verbose else get_settings().log_level.upper()
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        return args.func(args)
    except (EngineError, ConfigError) as exc:
        logger.error(f"❌ {type(exc).__name__}: {exc}")
        return exc.exit_code
    except ValidationError as exc:
        logger.error(f"❌ 参数非法: {exc}")
        return 1
    except OSError as exc:
        logger.error(f"❌ I/O 错误: {exc}")
        return 3


if __name__ == "__main__":
    sys.exit(main())
