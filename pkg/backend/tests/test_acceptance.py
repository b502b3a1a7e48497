"""
长时间统计验收（pytest -m slow）：
随机小图上 MC 与精确枚举一致、树上的精确性、以及 Δ 误差的方法排序。
"""
import numpy as np
import pytest

from app.config.config_loader import load_manifest
from app.config.settings import GridSettings, PercolationMcSettings, RunConfig
from app.graph.core import select_source
from app.graph.netgen import (
    add_random_edges,
    barabasi_albert,
    cayley_tree,
    erdos_renyi_gnm,
    make_rng,
    random_geometric,
)
from app.harness.benchmark import batch_benchmark
from app.harness.fetcher import load_dataset
from app.harness.metrics import delta_error
from app.harness.models import DatasetEntry, DatasetManifest, SweepGrid
from app.harness.sweep import sweep
from app.montecarlo.enumerate import enumerate_ising, enumerate_percolation
from app.montecarlo.ising_mc import IsingMcOptions, mc_ising
from app.montecarlo.percolation_mc import mc_percolation
from app.solvers.ising import Temperature
from app.solvers.percolation import percolation_susceptibility, solve_percolation

pytestmark = pytest.mark.slow

DESK_REALIZATIONS = 10_000
PERC_OBSERVABLES = ("S1", "chi_true", "chi_practical", "S_x", "chi_source")
ISING_OBSERVABLES = ("abs_m", "m_sq", "m_sigma_x")


def random_small_graphs(count: int, max_nodes: int, max_edges: int, seed: int):
    """连通的小随机图（预处理后取最大连通分量）"""
    rng = make_rng(seed)
    graphs = []
    while len(graphs) < count:
        n = int(rng.integers(3, max_nodes + 1))
        m = int(rng.integers(n - 1, min(max_edges, n * (n - 1) // 2) + 1))
        g = erdos_renyi_gnm(n, m, seed=int(rng.integers(0, 2 ** 31)))
        if g.n >= 2 and g.m <= max_edges:
            graphs.append(g)
    return graphs


def assert_within(stats, exact: float, label: str, k: float = 4.0) -> None:
    assert abs(stats.mean - exact) <= k * stats.stderr + 1e-12, (label, stats.mean, exact, stats.stderr)


class TestExactOracle:
    def test_percolation_matches_enumeration(self):
        for gi, g in enumerate(random_small_graphs(25, max_nodes=8, max_edges=10, seed=101)):
            x = select_source(g)
            for p in np.linspace(0.05, 0.95, 10):
                exact = enumerate_percolation(g, p, x)
                stats = mc_percolation(g, p, realizations=DESK_REALIZATIONS, seed=gi, source=x)
                for name in PERC_OBSERVABLES:
                    assert_within(stats[name], exact[name], f"graph {gi} p={p:.2f} {name}")
                assert stats.mean("chi_practical") <= stats.mean("chi_true")

    def test_ising_matches_enumeration(self):
        opts = IsingMcOptions()
        for gi, g in enumerate(random_small_graphs(15, max_nodes=10, max_edges=20, seed=202)):
            x = select_source(g)
            for si, beta in enumerate(np.linspace(0.05, 1.5, 10)):
                temp = Temperature(float(beta))
                exact = enumerate_ising(g, temp, x)
                stats = mc_ising(g, temp, opts.model_copy(update={"seed": gi}), x, stream=si)
                for name in ISING_OBSERVABLES:
                    assert_within(stats[name], exact[name], f"graph {gi} beta={beta:.2f} {name}")


class TestTreeExactness:
    def test_bp_susceptibility_matches_mc_on_cayley(self, cayley):
        for p in (0.2, 0.45, 0.7, 0.9):
            sol = percolation_susceptibility(cayley, p, solve_percolation(cayley, p))
            stats = mc_percolation(cayley, p, realizations=DESK_REALIZATIONS, seed=5)
            assert_within(stats["chi_true"], sol.susceptibility, f"p={p}")

    def test_snbp_tracks_snmc_on_cayley(self, cayley):
        grid = SweepGrid.uniform()
        config = RunConfig(percolation_mc=PercolationMcSettings(realizations=DESK_REALIZATIONS))
        result = sweep(cayley, "percolation", ["SNBP", "SNMC"], grid, config, network="cayley")
        for snbp, snmc in zip(result.series["SNBP"].points, result.series["SNMC"].points):
            assert abs(snbp.order_parameter - snmc.order_parameter) <= 4 * snmc.stderr + 1e-12, snbp.p
            assert abs(snbp.susceptibility - snmc.susceptibility) <= 4 * snmc.chi_stderr + 1e-12, snbp.p

    def test_ising_snbp_tracks_snmc_on_cayley(self, cayley):
        grid = SweepGrid.uniform(20)
        result = sweep(cayley, "ising", ["SNBP", "SNMC"], grid, RunConfig(), network="cayley")
        for snbp, snmc in zip(result.series["SNBP"].points, result.series["SNMC"].points):
            assert abs(snbp.order_parameter - snmc.order_parameter) <= 4 * snmc.stderr + 1e-3, snbp.p
            assert abs(snbp.susceptibility - snmc.susceptibility) <= 4 * snmc.chi_stderr + 1e-3, snbp.p


class TestMethodOrdering:
    def test_tree_with_extra_edges(self):
        g = add_random_edges(cayley_tree(3, 5), 2, seed=7)
        grid = SweepGrid.uniform()
        config = RunConfig(percolation_mc=PercolationMcSettings(realizations=DESK_REALIZATIONS))
        result = sweep(g, "percolation", ["BP", "SNBP", "MFA", "MC"], grid, config, network="cayley+2")
        mc = result.series["MC"]
        d_bp, d_snbp, d_mfa = (delta_error(result.series[m], mc, grid) for m in ("BP", "SNBP", "MFA"))
        assert d_snbp < d_bp
        assert d_snbp < d_mfa

        # BP 磁化率出现伪峰，SNBP 的磁化率更贴近 MC
        assert result.series["BP"].peak_p is not None
        mc_chi = mc.susceptibilities()
        bp_err = np.max(np.abs(result.series["BP"].susceptibilities() - mc_chi))
        snbp_err = np.max(np.abs(result.series["SNBP"].susceptibilities() - mc_chi))
        assert snbp_err < bp_err

    @pytest.mark.parametrize("model", ["percolation", "ising"])
    def test_network_subset(self, model, cayley, isolated_settings):
        generated = {
            "generated/er_100_130": erdos_renyi_gnm(100, 130, seed=1),
            "generated/ba_100_2": barabasi_albert(100, 2, seed=2),
            "generated/rgg_100": random_geometric(100, 0.15, seed=3),
            "generated/cayley_plus_2": add_random_edges(cayley, 2, seed=7),
            "generated/cayley_plus_5": add_random_edges(cayley, 5, seed=7),
        }
        full = load_manifest()
        fixtures = ["fixture/cayley_3_5", "fixture/lattice_8x8", "fixture/karate_77", "fixture/karate_78",
                    "fixture/two_node"]
        entries = [full.get(name) for name in fixtures] + [
            DatasetEntry(name=name, expected_n=g.n, expected_m=g.m) for name, g in generated.items()
        ]

        def loader(entry):
            if entry.name in generated:
                return generated[entry.name]
            return load_dataset(entry, isolated_settings)

        config = RunConfig(
            grid=GridSettings(points=50),
            percolation_mc=PercolationMcSettings(realizations=DESK_REALIZATIONS),
        )
        report = batch_benchmark(DatasetManifest(entries=entries), model, config, isolated_settings, loader=loader)
        assert not report.failures
        assert len(report.rows) == 10
        for row in report.rows:
            assert row.delta["SNBP"] < row.delta["MFA"], row.network
            if row.cyclomatic <= 50:
                assert row.delta["SNBP"] < row.delta["BP"], row.network
