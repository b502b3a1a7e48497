import io
import json
import math
import zipfile

import httpx
import numpy as np
import pytest

from app.config import params
from app.config.settings import EngineSettings, GridSettings, PercolationMcSettings, RunConfig, RunSettings
from app.errors import FetchError, IntegrityError, ParameterError, SweepError
from app.graph.core import Graph, read_edge_list_file
from app.harness.benchmark import batch_benchmark
from app.harness.export import (
    REPORT_COLUMNS,
    SWEEP_COLUMNS,
    export,
    load_report_json,
    load_sweep_json,
    read_sweep_csv,
)
from app.harness.fetcher import cache_path, edges_from_archive, fetch_dataset, load_dataset
from app.harness.metrics import delta_error
from app.harness.models import (
    DatasetEntry,
    DatasetManifest,
    MethodSeries,
    SeriesPoint,
    SweepGrid,
    SweepResult,
)
from app.harness.sweep import SweepManager, resolve_source, sweep
from app.montecarlo.ising_mc import IsingMcOptions


@pytest.fixture()
def fast_config() -> RunConfig:
    return RunConfig(
        grid=GridSettings(points=8),
        percolation_mc=PercolationMcSettings(realizations=200, batch_size=64),
        ising_mc=IsingMcOptions(measurements=100, metropolis_sweeps_per_macro=2, macro_steps=10),
    )


@pytest.fixture()
def grid8() -> SweepGrid:
    return SweepGrid.uniform(8)


def karate_archive(drop_last: int = 0) -> bytes:
    g = read_edge_list_file(params.get_fixture_path("karate_77.edges"))
    rows = ["# source, target"] + [f"{a},{b}" for a, b in g.edges[:g.m - drop_last]]
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w") as archive:
        archive.writestr("edges.csv", "\n".join(rows) + "\n")
        archive.writestr("nodes.csv", "# index\n")
    return buffer.getvalue()


# ============================================================================
# Δ 误差
# ============================================================================

class TestDeltaError:
    def test_identical_series(self):
        grid = SweepGrid.uniform()
        values = np.linspace(0.0, 1.0, len(grid))
        assert delta_error(values, values, grid) == 0.0

    def test_constant_gap(self):
        grid = SweepGrid.uniform()
        assert delta_error(np.ones(50), np.zeros(50), grid) == pytest.approx(0.98, abs=1e-12)

    def test_linear_gap(self):
        grid = SweepGrid.uniform()
        assert delta_error(np.array(grid.points), np.zeros(50), grid) == pytest.approx(0.49, abs=1e-12)

    def test_pseudometric(self):
        grid = SweepGrid.uniform(20)
        rng = np.random.default_rng(0)
        a, b, c = rng.random((3, 20))
        assert delta_error(a, b, grid) == pytest.approx(delta_error(b, a, grid))
        assert delta_error(a, c, grid) <= delta_error(a, b, grid) + delta_error(b, c, grid) + 1e-15

    def test_grid_mismatch(self):
        grid = SweepGrid.uniform(10)
        with pytest.raises(ParameterError):
            delta_error(np.zeros(9), np.zeros(10), grid)
        series = MethodSeries(method="BP", points=[SeriesPoint(p=p, order_parameter=0.0) for p in grid.points])
        with pytest.raises(ParameterError):
            delta_error(series, np.zeros(5), SweepGrid.uniform(5))

    def test_non_finite_rejected(self):
        grid = SweepGrid.uniform(3)
        with pytest.raises(ParameterError):
            delta_error([0.0, math.nan, 0.0], [0.0, 0.0, 0.0], grid)


class TestModels:
    def test_default_grid(self):
        grid = SweepGrid.uniform()
        assert len(grid) == 50
        assert grid.points[0] == 0.01 and grid.points[-1] == pytest.approx(0.99)

    @pytest.mark.parametrize("points", [[], [0.5, 0.5], [0.0, 0.5], [0.2, 1.0], [0.6, 0.3]])
    def test_invalid_grid(self, points):
        with pytest.raises(ValueError):
            SweepGrid(points=points)

    def test_inf_sentinel_serialization(self):
        point = SeriesPoint(p=0.5, susceptibility=math.inf)
        assert point.model_dump(mode="json")["susceptibility"] == "inf"
        assert SeriesPoint.model_validate_json(point.model_dump_json()).susceptibility == math.inf

    def test_manifest(self):
        from app.config.config_loader import load_manifest

        manifest = load_manifest()
        karate = manifest.get("karate/77")
        assert (karate.expected_n, karate.cyclomatic) == (34, 44)
        assert karate.download_url() == f"{params.NETZSCHLEUDER_BASE}/karate/files/77.csv.zip"
        assert all(e.expected_n <= 600 for e in manifest.desk_subset(600).entries)
        with pytest.raises(KeyError):
            manifest.get("missing")


# ============================================================================
# 扫描
# ============================================================================

class TestSweep:
    def test_two_node_snbp_matches_exact(self, two_node, fast_config):
        grid = SweepGrid.uniform()
        result = sweep(two_node, "percolation", ["SNBP", "EXACT"], grid, fast_config)
        np.testing.assert_allclose(
            result.series["SNBP"].order_parameters(), result.series["EXACT"].order_parameters(), atol=1e-10
        )
        assert result.source == 0

    def test_cayley_bp_is_zero(self, cayley, fast_config, grid8):
        result = sweep(cayley, "percolation", ["BP"], grid8, fast_config, source="none")
        assert np.all(np.abs(result.series["BP"].order_parameters()) <= 1e-10)
        assert result.source is None
        assert result.stats.cyclomatic == 0

    def test_source_methods_need_source(self, two_node, fast_config, grid8):
        with pytest.raises(ParameterError):
            sweep(two_node, "percolation", ["SNBP"], grid8, fast_config, source="none")

    def test_unknown_method_and_model(self, two_node, fast_config, grid8):
        with pytest.raises(ParameterError):
            sweep(two_node, "percolation", ["XYZ"], grid8, fast_config)
        with pytest.raises(ParameterError):
            sweep(two_node, "potts", ["BP"], grid8, fast_config)

    def test_ising_rows_carry_beta(self, triangle_tail, fast_config, grid8):
        result = sweep(triangle_tail, "ising", ["BP", "SNBP", "MC", "SNMC"], grid8, fast_config)
        for series in result.series.values():
            for pt in series.points:
                assert pt.p == pytest.approx(-math.expm1(-2.0 * pt.beta), abs=1e-12)

    def test_snmfa_susceptibility_unsupported(self, karate, fast_config, grid8):
        result = sweep(karate, "percolation", ["SNMFA"], grid8, fast_config)
        assert all(pt.susceptibility is None and pt.diagnostic == "unsupported" for pt in result.series["SNMFA"].points)
        assert result.series["SNMFA"].peak_p is None

    def test_mc_and_snmc_share_realizations(self, karate, fast_config, grid8):
        result = sweep(karate, "percolation", ["MC", "SNMC"], grid8, fast_config)
        for mc, snmc in zip(result.series["MC"].points, result.series["SNMC"].points):
            # 同一批实现：源节点所在团簇不大于最大团簇
            assert snmc.order_parameter <= mc.order_parameter + 1e-15
            assert mc.stderr is not None and mc.chi_stderr is not None

    def test_parallel_matches_serial(self, karate, fast_config, grid8):
        serial = sweep(karate, "percolation", ["BP", "MC"], grid8, fast_config)
        parallel = sweep(karate, "percolation", ["BP", "MC"], grid8, fast_config, max_workers=3)
        assert serial.series == parallel.series

    def test_hard_error_names_method_and_p(self, cayley, fast_config, grid8):
        with pytest.raises(SweepError) as exc_info:
            sweep(cayley, "percolation", ["BP", "EXACT"], grid8, fast_config, source="none")
        assert exc_info.value.method == "EXACT"
        assert exc_info.value.p == grid8.points[0]
        assert exc_info.value.exit_code == 1

    def test_peak_and_divergence_flags(self, karate, grid8):
        config = RunConfig(solver={"init": "zeros"})
        result = sweep(karate, "percolation", ["BP"], grid8, config, source="none")
        assert result.series["BP"].diverged
        assert any(pt.diagnostic == "diverged" for pt in result.series["BP"].points)

    def test_metadata_embeds_config(self, two_node, fast_config, grid8):
        result = sweep(two_node, "percolation", ["BP"], grid8, fast_config)
        assert result.metadata["config"]["percolation_mc"]["realizations"] == 200

    def test_resolve_source(self, karate):
        assert karate.degree(resolve_source(karate, "auto")) == 17
        assert resolve_source(karate, "none") is None
        assert resolve_source(karate, 4) == 4


class TestSweepManager:
    def test_jobs_are_recorded(self, two_node, fast_config, grid8):
        manager = SweepManager(max_workers=2, history=2)
        jobs = [manager.run(two_node, "percolation", ["BP"], grid8, fast_config, f"g{i}") for i in range(3)]
        assert all(job.status == "done" for job in jobs)
        listed = manager.list_jobs()
        assert [j["network"] for j in listed] == ["g1", "g2"]
        assert manager.get(jobs[0].job_id) is None
        manager.clear()
        assert manager.list_jobs() == []

    def test_failed_job(self, two_node, fast_config, grid8):
        manager = SweepManager()
        with pytest.raises(ParameterError):
            manager.run(two_node, "percolation", ["SNBP"], grid8, fast_config, source="none")
        assert manager.list_jobs()[0]["status"] == "failed"


# ============================================================================
# 导出
# ============================================================================

class TestExport:
    def test_csv_row_count_and_reproducibility(self, karate, tmp_path):
        config = RunConfig(percolation_mc=PercolationMcSettings(realizations=50))
        grid = SweepGrid.uniform()
        paths = []
        for run in range(2):
            result = sweep(karate, "percolation", ["BP", "MC"], grid, config, network="karate")
            paths.append(export(result, "csv", tmp_path / f"run{run}.csv"))
        lines = paths[0].read_text(encoding="utf-8").splitlines()
        assert len(lines) == 1 + 100
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_json_round_trip(self, two_node, fast_config, grid8, tmp_path):
        result = sweep(two_node, "percolation", ["BP", "SNBP", "MC"], grid8, fast_config, network="two")
        path = export(result, "json", tmp_path / "sweep.json")
        assert load_sweep_json(path) == result

    def test_json_table_matches_csv(self, two_node, fast_config, grid8, tmp_path):
        result = sweep(two_node, "percolation", ["BP", "SNMFA", "MC"], grid8, fast_config, network="two")
        csv_rows = read_sweep_csv(export(result, "csv", tmp_path / "sweep.csv"))
        document = json.loads(export(result, "json", tmp_path / "sweep.json").read_text(encoding="utf-8"))

        assert document["table"]["columns"] == SWEEP_COLUMNS
        assert document["table"]["rows"] == csv_rows
        # 不适用的字段显式为 null
        snmfa = [row for row in document["table"]["rows"] if row["method"] == "SNMFA"]
        assert all(row["susceptibility"] is None and "beta" in row for row in snmfa)

    def test_inf_sentinel_in_csv(self, tmp_path):
        grid = [0.2, 0.4]
        result = SweepResult(
            network="toy",
            model="percolation",
            grid=grid,
            series={
                "BP": MethodSeries(
                    method="BP",
                    points=[
                        SeriesPoint(p=0.2, order_parameter=0.0, susceptibility=1.5, converged=True, iterations=3),
                        SeriesPoint(p=0.4, order_parameter=0.1, susceptibility=math.inf, converged=True),
                    ],
                    diverged=True,
                )
            },
        )
        path = export(result, "csv", tmp_path / "toy.csv")
        assert ",inf," in path.read_text(encoding="utf-8")
        rows = read_sweep_csv(path)
        assert rows[1]["susceptibility"] == math.inf
        assert rows[0]["converged"] is True and rows[0]["iterations"] == 3
        assert rows[1]["iterations"] is None

        json_path = export(result, "json", tmp_path / "toy.json")
        assert '"inf"' in json_path.read_text(encoding="utf-8")
        assert load_sweep_json(json_path).series["BP"].points[1].susceptibility == math.inf

    def test_unknown_format(self, tmp_path):
        result = SweepResult(network="x", model="percolation", grid=[0.5])
        with pytest.raises(ParameterError):
            export(result, "xml", tmp_path / "x.xml")


# ============================================================================
# 批量基准
# ============================================================================

class TestBenchmark:
    def manifest(self, *names) -> DatasetManifest:
        from app.config.config_loader import load_manifest

        full = load_manifest()
        return DatasetManifest(entries=[full.get(name) for name in names])

    def test_fixture_benchmark(self, fast_config, isolated_settings, tmp_path):
        manifest = self.manifest("fixture/two_node", "fixture/cayley_3_5", "fixture/karate_77")
        bad = DatasetEntry(name="fixture/bad", expected_n=34, expected_m=99, url="fixture:karate_77.edges")
        manifest.entries.append(bad)

        report = batch_benchmark(manifest, "percolation", fast_config, isolated_settings)
        assert len(report.rows) == len(manifest) - len(report.failures)
        assert [f.error_type for f in report.failures] == ["IntegrityError"]

        rows = {row.network: row for row in report.rows}
        assert rows["fixture/karate_77"].cyclomatic == 44
        tree = rows["fixture/cayley_3_5"]
        assert tree.delta["SNBP"] < tree.delta["BP"]
        assert all(value >= 0.0 for row in report.rows for value in row.delta.values())

        path = export(report, "csv", tmp_path / "report.csv")
        header = path.read_text(encoding="utf-8").splitlines()[0]
        assert header == ",".join(REPORT_COLUMNS)
        json_path = export(report, "json", tmp_path / "report.json")
        assert load_report_json(json_path) == report

    def test_custom_loader_and_limits(self, fast_config, isolated_settings, two_node):
        entries = [DatasetEntry(name=f"g{i}", expected_n=2, expected_m=1) for i in range(4)]
        config = fast_config.model_copy(update={"run": RunSettings(max_networks=2)})
        report = batch_benchmark(DatasetManifest(entries=entries), "ising", config, isolated_settings,
                                 loader=lambda entry: two_node)
        assert [row.network for row in report.rows] == ["g0", "g1"]
        assert set(report.rows[0].delta) == {"BP", "SNBP", "MFA"}

    def test_unexpected_loader_error_is_recorded(self, fast_config, isolated_settings, two_node):
        entries = [DatasetEntry(name=name, expected_n=2, expected_m=1) for name in ("a", "broken", "c")]

        def loader(entry):
            if entry.name == "broken":
                raise ValueError("缓存文件损坏")
            return two_node

        report = batch_benchmark(DatasetManifest(entries=entries), "percolation", fast_config, isolated_settings,
                                 loader=loader)
        assert [row.network for row in report.rows] == ["a", "c"]
        assert len(report.failures) == 1
        failure = report.failures[0]
        assert (failure.network, failure.error_type) == ("broken", "ValueError")
        assert "缓存文件损坏" in failure.error


# ============================================================================
# 数据集下载
# ============================================================================

class TestFetcher:
    ENTRY = DatasetEntry(name="karate/77", expected_n=34, expected_m=77)

    def client(self, handler) -> httpx.Client:
        return httpx.Client(transport=httpx.MockTransport(handler))

    def test_download_convert_and_cache(self, tmp_path):
        settings = EngineSettings(cache_dir=tmp_path)
        calls = []

        def handler(request):
            calls.append(str(request.url))
            return httpx.Response(200, content=karate_archive())

        path = fetch_dataset(self.ENTRY, settings, client=self.client(handler))
        assert path == cache_path(self.ENTRY, settings)
        assert calls == [self.ENTRY.download_url()]
        assert path.read_text(encoding="utf-8").startswith("# karate/77\n")

        # 缓存命中：离线也不访问网络
        offline = EngineSettings(cache_dir=tmp_path, offline=True)
        assert fetch_dataset(self.ENTRY, offline, client=self.client(handler)) == path
        assert len(calls) == 1
        g = load_dataset(self.ENTRY, offline)
        assert (g.n, g.m) == (34, 77)

    def test_offline_cache_miss(self, tmp_path):
        with pytest.raises(FetchError):
            fetch_dataset(self.ENTRY, EngineSettings(cache_dir=tmp_path, offline=True))

    def test_retry_with_backoff(self, tmp_path):
        settings = EngineSettings(cache_dir=tmp_path, fetch_attempts=3, fetch_backoff=0.5)
        attempts = []
        delays = []

        def handler(request):
            attempts.append(1)
            if len(attempts) < 3:
                return httpx.Response(503)
            return httpx.Response(200, content=karate_archive())

        fetch_dataset(self.ENTRY, settings, client=self.client(handler), sleep=delays.append)
        assert len(attempts) == 3
        assert delays == [0.5, 1.0]

    def test_gives_up_after_attempts(self, tmp_path):
        settings = EngineSettings(cache_dir=tmp_path, fetch_attempts=3, fetch_backoff=0.0)
        with pytest.raises(FetchError):
            fetch_dataset(self.ENTRY, settings, client=self.client(lambda r: httpx.Response(404)),
                          sleep=lambda s: None)
        assert not cache_path(self.ENTRY, settings).exists()

    def test_integrity_error(self, tmp_path):
        settings = EngineSettings(cache_dir=tmp_path)
        wrong = self.ENTRY.model_copy(update={"expected_m": 78})
        with pytest.raises(IntegrityError):
            fetch_dataset(wrong, settings, client=self.client(lambda r: httpx.Response(200, content=karate_archive())))
        assert not cache_path(wrong, settings).exists()

    def test_bad_archive(self):
        with pytest.raises(FetchError):
            edges_from_archive(b"not a zip")

    def test_fixture_entries_load_locally(self):
        entry = DatasetEntry(name="fixture/two_node", expected_n=2, expected_m=1, url="fixture:two_node.edges")
        g = load_dataset(entry)
        assert isinstance(g, Graph) and (g.n, g.m) == (2, 1)
