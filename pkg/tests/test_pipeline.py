"""End-to-end analysis runs: windowing, reports, determinism, failure paths."""

import json
from pathlib import Path

import pytest

from pktstats import (
    ALL_KINDS,
    AlphaGrid,
    EmptyRunError,
    GeneratorSpec,
    PipelineConfigError,
    QuantityKind,
    RunConfig,
    ZmParams,
    analyze_window,
    generate_synthetic,
    iter_windows,
    load_valid_records,
    run_analyze,
    write_packet_csv,
)
from pktstats.pipeline import _effective_sizes

from conftest import make_records

SMALL_GRID = AlphaGrid(1.0, 2.5, 0.05)


def write_stream(tmp_path, spec, n_packets, name="stream.csv"):
    records, truth = generate_synthetic(spec, n_packets)
    path = tmp_path / name
    write_packet_csv(path, records)
    return path, truth


class TestRunConfig:
    def test_requires_inputs_and_quantities(self):
        with pytest.raises(PipelineConfigError):
            RunConfig(inputs=(), out_dir="x")
        with pytest.raises(PipelineConfigError):
            RunConfig(inputs=("a",), out_dir="x", quantities=())

    def test_window_size_validation(self):
        with pytest.raises(PipelineConfigError):
            RunConfig(inputs=("a",), out_dir="x", window_sizes=())
        with pytest.raises(PipelineConfigError):
            RunConfig(inputs=("a",), out_dir="x", window_sizes=(0,))
        with pytest.raises(PipelineConfigError):
            RunConfig(inputs=("a",), out_dir="x", window_sizes=(1.5,))

    def test_quantity_validation(self):
        with pytest.raises(PipelineConfigError):
            RunConfig(inputs=("a",), out_dir="x", quantities=("source_packets",))
        with pytest.raises(PipelineConfigError):
            RunConfig(
                inputs=("a",),
                out_dir="x",
                quantities=(QuantityKind.SOURCE_PACKETS, QuantityKind.SOURCE_PACKETS),
            )

    def test_worker_and_k_validation(self):
        with pytest.raises(PipelineConfigError):
            RunConfig(inputs=("a",), out_dir="x", workers=0)
        with pytest.raises(PipelineConfigError):
            RunConfig(inputs=("a",), out_dir="x", supernode_k=0)


class TestEffectiveSizes:
    def test_defaults_need_two_windows(self):
        assert _effective_sizes(None, 250_000) == [100_000]
        assert _effective_sizes(None, 199_999) == []
        assert _effective_sizes(None, 700_000) == [100_000, 300_000]

    def test_explicit_sizes_need_one_window(self):
        assert _effective_sizes((10, 100), 99) == [10]
        assert _effective_sizes((10, 100), 100) == [10, 100]
        assert _effective_sizes((7,), 6) == []


class TestLoadValidRecords:
    def test_concatenates_inputs_and_counts(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv.gz"
        valid = make_records([("10.0.0.1", "10.0.0.2")] * 3)
        noise = make_records([("10.0.0.3", "10.0.0.4")] * 2, protocol="UDP")
        write_packet_csv(a, valid + noise)
        write_packet_csv(b, valid)
        records, summary = load_valid_records([str(a), str(b)])
        assert len(records) == 6
        assert summary.total_read == 8
        assert summary.total_valid == 6
        assert summary.total_skipped == 2


class TestAnalyzeWindow:
    def test_computes_requested_quantities_only(self, tmp_path):
        records, _ = generate_synthetic(GeneratorSpec(n_isolated_pairs=10), 20)
        window = next(iter_windows(records, 20))
        analysis = analyze_window(window, quantities=(QuantityKind.SOURCE_FAN_OUT,))
        assert set(analysis.pooled) == {"source_fan_out"}
        assert analysis.aggregates.valid_packets == 20
        assert analysis.topology.categories["isolated_links"].links == 10

    def test_pooled_totals_are_normalized(self):
        records, _ = generate_synthetic(
            GeneratorSpec(supernode_leaf_count=12, n_isolated_pairs=3), 30
        )
        window = next(iter_windows(records, 30))
        analysis = analyze_window(window)
        for pooled in analysis.pooled.values():
            assert abs(pooled.total() - 1.0) <= 1e-12


class TestRunAnalyze:
    def run(self, tmp_path, n_isolated=40, sizes=(50,), **kwargs):
        spec = GeneratorSpec(n_isolated_pairs=n_isolated, supernode_leaf_count=10)
        path, _ = write_stream(tmp_path, spec, 150)
        cfg = RunConfig(
            inputs=(str(path),),
            out_dir=str(tmp_path / "out"),
            window_sizes=sizes,
            grid=SMALL_GRID,
            **kwargs,
        )
        return run_analyze(cfg)

    def test_report_directory_layout(self, tmp_path):
        report = self.run(tmp_path)
        out = Path(report.out_dir)
        size_dir = out / "nv_000000050"
        assert (out / "manifest.json").is_file()
        assert (out / "timings.json").is_file()
        for kind in ALL_KINDS:
            assert (size_dir / f"{kind.value}.pooled.csv").is_file()
            assert (size_dir / f"{kind.value}.fit.json").is_file()
        for index in range(3):
            assert (size_dir / f"window_{index:06d}.topology.csv").is_file()

    def test_manifest_contents(self, tmp_path):
        report = self.run(tmp_path)
        manifest = json.loads(
            (Path(report.out_dir) / "manifest.json").read_text()
        )
        assert manifest == report.manifest
        assert manifest["config"]["window_sizes"] == [50]
        assert manifest["config"]["quantities"] == [k.value for k in ALL_KINDS]
        assert manifest["config"]["alpha_grid"] == {
            "start": 1.0,
            "stop": 2.5,
            "step": 0.05,
        }
        assert manifest["ingest"]["total_valid"] == 150
        assert manifest["window_counts"] == {"50": 3}
        assert "workers" not in manifest["config"]
        rel = "nv_000000050/source_fan_out.pooled.csv"
        assert manifest["files"][rel] >= 1

    def test_mean_pooled_spans_windows(self, tmp_path):
        report = self.run(tmp_path)
        pooled = report.mean_pooled[50]
        assert set(pooled) == {k.value for k in ALL_KINDS}
        for mean in pooled.values():
            assert mean.n_windows == 3
            assert abs(mean.total() - 1.0) <= 1e-12

    def test_multiple_sizes(self, tmp_path):
        report = self.run(tmp_path, sizes=(50, 150))
        assert sorted(report.mean_pooled) == [50, 150]
        assert report.mean_pooled[150]["source_packets"].n_windows == 1

    def test_quantity_subset(self, tmp_path):
        report = self.run(tmp_path, quantities=(QuantityKind.LINK_PACKETS,))
        assert set(report.mean_pooled[50]) == {"link_packets"}
        out_files = {p.name for p in (Path(report.out_dir) / "nv_000000050").iterdir()}
        assert "link_packets.pooled.csv" in out_files
        assert "source_packets.pooled.csv" not in out_files

    def test_refuses_nonempty_out_dir(self, tmp_path):
        out = tmp_path / "out"
        out.mkdir()
        (out / "stale.txt").write_text("old")
        spec = GeneratorSpec(n_isolated_pairs=10)
        path, _ = write_stream(tmp_path, spec, 20)
        cfg = RunConfig(inputs=(str(path),), out_dir=str(out), window_sizes=(10,))
        with pytest.raises(PipelineConfigError):
            run_analyze(cfg)

    def test_force_replaces_out_dir(self, tmp_path):
        out = tmp_path / "out"
        (out / "deep").mkdir(parents=True)
        (out / "deep" / "stale.txt").write_text("old")
        spec = GeneratorSpec(n_isolated_pairs=10)
        path, _ = write_stream(tmp_path, spec, 20)
        cfg = RunConfig(
            inputs=(str(path),),
            out_dir=str(out),
            window_sizes=(10,),
            grid=SMALL_GRID,
            force=True,
        )
        run_analyze(cfg)
        assert not (out / "deep").exists()
        assert (out / "manifest.json").is_file()

    def test_empty_run_raises_with_summary(self, tmp_path):
        spec = GeneratorSpec(n_isolated_pairs=3)
        path, _ = write_stream(tmp_path, spec, 6)
        cfg = RunConfig(
            inputs=(str(path),), out_dir=str(tmp_path / "out"), window_sizes=(10,)
        )
        with pytest.raises(EmptyRunError) as excinfo:
            run_analyze(cfg)
        assert excinfo.value.summary.total_valid == 6

    def test_degenerate_data_writes_error_payload(self, tmp_path):
        # Isolated-only traffic: every quantity is identically 1, so no model
        # can be fitted; the run still completes with error payloads.
        spec = GeneratorSpec(n_isolated_pairs=20)
        path, _ = write_stream(tmp_path, spec, 20)
        cfg = RunConfig(
            inputs=(str(path),), out_dir=str(tmp_path / "out"), window_sizes=(20,)
        )
        report = run_analyze(cfg)
        for kind in ALL_KINDS:
            payload = report.fits[20][kind.value]
            assert "error" in payload
            assert "alpha" not in payload
            on_disk = json.loads(
                (Path(report.out_dir) / "nv_000000020" / f"{kind.value}.fit.json")
                .read_text()
            )
            assert on_disk == payload


class TestFitsOnSampledStreams:
    def test_degree_model_stream_recovers_heavy_tail(self, tmp_path):
        spec = GeneratorSpec(degree_model=ZmParams(1.8, 0.0, 30), seed=3)
        path, _ = write_stream(tmp_path, spec, 3000)
        cfg = RunConfig(
            inputs=(str(path),),
            out_dir=str(tmp_path / "out"),
            window_sizes=(1000,),
            quantities=(QuantityKind.SOURCE_FAN_OUT,),
            grid=SMALL_GRID,
        )
        report = run_analyze(cfg)
        payload = report.fits[1000]["source_fan_out"]
        assert "error" not in payload
        assert 1.5 <= payload["alpha"] <= 2.1
        assert payload["n_windows"] == 3
        assert payload["kind"] == "source_fan_out"
        assert payload["n_v"] == 1000


class TestWorkerDeterminism:
    def test_reports_identical_across_worker_counts(self, tmp_path):
        spec = GeneratorSpec(
            n_isolated_pairs=30, supernode_leaf_count=8, core_size=4, seed=17
        )
        path, _ = write_stream(tmp_path, spec, 300)
        reports = {}
        for workers in (1, 3):
            out = tmp_path / f"out_w{workers}"
            cfg = RunConfig(
                inputs=(str(path),),
                out_dir=str(out),
                window_sizes=(75,),
                grid=SMALL_GRID,
                workers=workers,
            )
            run_analyze(cfg)
            reports[workers] = {
                p.relative_to(out).as_posix(): p.read_bytes()
                for p in sorted(out.rglob("*"))
                if p.is_file() and p.name != "timings.json"
            }
        assert reports[1] == reports[3]
