import csv
import json
import subprocess
import sys

import pytest

from hjhomog import __version__
from hjhomog.cli import (
    ExperimentConfig,
    _spec_from_config,
    cache_key,
    load_config,
    main,
)
from hjhomog.errors import ConfigError
from hjhomog.problem import catalog


def run_cli(tmp_path, sub, cfg_dict, out_name="out", extra=(), capsys=None):
    """Invoke main() in process; return (exit_code, out_dir, stdout)."""
    cfg_path = tmp_path / f"{sub}-{len(extra)}-{out_name}.json"
    cfg_path.write_text(json.dumps(cfg_dict))
    out_dir = tmp_path / out_name
    rc = main([sub, "--config", str(cfg_path), "--out", str(out_dir), *extra])
    stdout = capsys.readouterr().out if capsys is not None else ""
    return rc, out_dir, stdout


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def result_files(out_dir):
    """Result artifacts only: the manifest carries wall-clock timings."""
    return {
        p.name: p.read_bytes()
        for p in out_dir.iterdir()
        if p.is_file() and p.name != "manifest.json"
    }


def test_config_round_trip_identity():
    data = {
        "spec": "prop43_cauchy",
        "eps": 0.05,
        "eps_list": [0.2, 0.1],
        "t_list": [0.5, 1.0],
        "method": "lax_friedrichs",
        "h_over_eps": 1.0 / 128.0,
        "criteria": ["AC-1"],
    }
    cfg = ExperimentConfig.from_dict(data)
    cfg2 = ExperimentConfig.from_dict(cfg.to_dict())
    assert cfg2 == cfg
    assert cfg2.to_dict() == cfg.to_dict()
    assert cfg2.canonical() == cfg.canonical()


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="sepc"):
        ExperimentConfig.from_dict({"sepc": "free"})


def test_config_enforces_fast_scale_resolution():
    with pytest.raises(ConfigError, match="h_over_eps"):
        ExperimentConfig.from_dict({"h_over_eps": 1.0 / 16.0})


@pytest.mark.parametrize(
    "data, key",
    [
        ({"spec": "not_a_spec"}, "spec"),
        ({"eps_list": []}, "eps_list"),
        ({"eps_list": [0.1, 0.2]}, "eps_list"),
        ({"horizon": 0.0}, "horizon"),
        ({"method": "spectral"}, "method"),
        ({"band": 1.0}, "band"),
        ({"criteria": ["AC-99"]}, "criteria"),
    ],
)
def test_config_validation_names_the_key(data, key):
    with pytest.raises(ConfigError, match=key):
        ExperimentConfig.from_dict(data)


def test_load_config_reports_json_position(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"spec": "free",\n  "eps": }')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(str(bad))


def test_cache_key_separates_experiments():
    a = ExperimentConfig(spec="free")
    b = ExperimentConfig(spec="prop41")
    assert cache_key(a, "rates") == cache_key(ExperimentConfig(spec="free"), "rates")
    assert cache_key(a, "rates") != cache_key(b, "rates")
    assert cache_key(a, "rates") != cache_key(a, "metric")
    assert cache_key(a, "verify-all", 1.0) != cache_key(a, "verify-all", 0.5)
    assert __version__ in f"{a.canonical()}|rates|1.0|{__version__}"


def test_inline_potentials_override_catalog():
    cfg = ExperimentConfig.from_dict(
        {
            "spec": "free",
            "name": "shifted",
            "macro": {"kind": "constant", "value": 0.3},
            "micro": {"kind": "tent_well"},
        }
    )
    spec = _spec_from_config(cfg)
    assert spec.name == "shifted"
    assert spec.macro.kind == "constant"
    assert spec.micro.kind == "tent_well"
    assert spec.initial.kind == catalog("free").initial.kind


def test_inline_potential_rejects_unknown_kind_and_keys():
    with pytest.raises(ConfigError, match="kind"):
        _spec_from_config(ExperimentConfig(micro={"kind": "gaussian"}))
    with pytest.raises(ConfigError, match="sigma"):
        _spec_from_config(ExperimentConfig(micro={"kind": "tent_well", "sigma": 1.0}))


def test_solve_cauchy_writes_positive_gap_at_origin(tmp_path):
    rc, out, _ = run_cli(
        tmp_path,
        "solve-cauchy",
        {"spec": "prop43_cauchy", "eps": 0.1, "horizon": 1.0, "t_keep": [1.0]},
    )
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text())
    tol = manifest["tolerances"]["ms"] + manifest["tolerances"]["eff"]
    ms = {
        (row["t"], row["x"]): float(row["value"])
        for row in read_csv(out / "field_ms.csv")
    }
    eff = {
        (row["t"], row["x"]): float(row["value"])
        for row in read_csv(out / "field_eff.csv")
    }
    key = ("1.0", "0.0")
    assert ms[key] >= 0.1 / 2.0 - tol
    assert abs(eff[key]) <= tol
    assert manifest["config_hash"] == cache_key(
        ExperimentConfig.from_dict(
            {"spec": "prop43_cauchy", "eps": 0.1, "horizon": 1.0, "t_keep": [1.0]}
        ),
        "solve-cauchy",
    )


def test_solve_cauchy_free_field_is_identically_zero(tmp_path):
    rc, out, _ = run_cli(
        tmp_path, "solve-cauchy", {"spec": "free", "eps": 0.1, "horizon": 0.2}
    )
    assert rc == 0
    for name in ("field_ms.csv", "field_eff.csv"):
        values = {float(row["value"]) for row in read_csv(out / name)}
        assert values == {0.0}


def test_cache_hit_is_byte_identical(tmp_path, capsys):
    cfg = {"spec": "free", "eps": 0.1, "horizon": 0.2}
    rc, out, stdout = run_cli(tmp_path, "solve-cauchy", cfg, capsys=capsys)
    assert rc == 0 and "cache hit" not in stdout
    first = result_files(out)

    rc, out, stdout = run_cli(tmp_path, "solve-cauchy", cfg, capsys=capsys)
    assert rc == 0 and "cache hit" in stdout
    assert result_files(out) == first

    rc, out, stdout = run_cli(
        tmp_path, "solve-cauchy", cfg, extra=("--no-cache",), capsys=capsys
    )
    assert rc == 0 and "cache hit" not in stdout
    assert result_files(out) == first


def test_solve_static_respects_discounted_bounds(tmp_path):
    spec = catalog("prop43_static")
    rc, out, _ = run_cli(
        tmp_path, "solve-static", {"spec": "prop43_static", "eps": 0.2, "lam": 0.5}
    )
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text())
    tol = manifest["tolerances"]["ms"] + manifest["tolerances"]["eff"]
    ms = {float(row["x"]): float(row["value"]) for row in read_csv(out / "field_ms.csv")}
    eff = {float(row["x"]): float(row["value"]) for row in read_csv(out / "field_eff.csv")}
    assert ms[0.0] - eff[0.0] >= 0.2 / (2 * 0.5) - tol
    dt = 0.1 * 0.2
    assert max(ms.values()) <= spec.k0 / 0.5 + spec.k0 * dt + tol


def test_effective_tables_free_and_tent(tmp_path):
    rc, out, _ = run_cli(tmp_path, "effective", {"spec": "free", "n_p": 257})
    assert rc == 0
    for row in read_csv(out / "hbar1.csv"):
        p = float(row["p"])
        assert abs(float(row["hbar1"]) - 0.5 * p * p) <= 1e-12
    for row in read_csv(out / "lbar1.csv"):
        v = float(row["v"])
        assert abs(float(row["lbar1"]) - 0.5 * v * v) <= 1e-3

    rc, out, _ = run_cli(tmp_path, "effective", {"spec": "prop43_cauchy"}, "tent")
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert abs(manifest["p_crit"] - 2.0 / 3.0) <= 1e-8
    table = {float(row["p"]): float(row["hbar1"]) for row in read_csv(out / "hbar1.csv")}
    grid = sorted(table)
    at_pc = min(grid, key=lambda p: abs(p - 2.0 / 3.0))
    assert abs(table[at_pc]) <= 1e-3
    near_star = min(grid, key=lambda p: abs(p - 1.2189514))
    assert abs(table[near_star] - 0.5) <= 1e-3


def test_metric_report_free_spec(tmp_path):
    rc, out, _ = run_cli(
        tmp_path,
        "metric",
        {
            "spec": "free",
            "eps": 0.1,
            "eps_list": [0.2, 0.1],
            "metric_t": 1.0,
            "metric_y": 0.5,
            "scaling_c": [0.0, 0.5],
            "scaling_t": [1.0],
        },
    )
    assert rc == 0
    report = json.loads((out / "metric_report.json").read_text())
    q = report["query"]
    assert abs(q["value"] - 0.5**2 / 2.0) <= q["tol"]
    assert all(row["ok"] for row in report["subadditivity"])
    assert len(report["scaling_gaps"]) == 2
    assert all(abs(g["gap"]) <= 1e-9 for g in report["scaling_gaps"])
    rows = read_csv(out / "lemma_deviation.csv")
    assert [float(r["eps"]) for r in rows] == [0.2, 0.1]
    for row in rows:
        assert float(row["deviation_over_eps"]) >= 0.0


def test_rates_cli_pass_verdict_and_deterministic_svg(tmp_path, capsys):
    cfg = {
        "spec": "prop43_cauchy",
        "t_list": [1.0],
        "eps_list": [0.2, 0.1, 0.05],
        "horizon": 1.0,
    }
    rc, out, _ = run_cli(tmp_path, "rates", cfg, capsys=capsys)
    assert rc == 0
    report = json.loads((out / "rates_report.json").read_text())
    verdict = report["reports"][0]["verdicts"]["thm_main"]
    assert verdict["status"] == "pass"
    assert verdict["spread"] <= 4.0
    rows = read_csv(out / "rates.csv")
    assert len(rows) == 3
    svg = (out / "rates.svg").read_bytes()
    assert b"config_hash=" in svg
    assert b"<dc:date>" not in svg

    rc, out, _ = run_cli(tmp_path, "rates", cfg, extra=("--no-cache",), capsys=capsys)
    assert rc == 0
    assert (out / "rates.svg").read_bytes() == svg


def test_rates_cli_prop42_upper_rate_fails(tmp_path):
    rc, out, _ = run_cli(
        tmp_path,
        "rates",
        {
            "spec": "prop42",
            "t_list": [1.0],
            "eps_list": [0.2, 0.1, 0.05],
            "horizon": 1.0,
        },
        extra=("--workers", "2"),
    )
    assert rc == 0
    report = json.loads((out / "rates_report.json").read_text())
    verdict = report["reports"][0]["verdicts"]["thm_main"]
    assert verdict["status"] == "fail"
    assert verdict["trend_slope"] < verdict["trend_floor"]


def drop_runtimes(node):
    if isinstance(node, dict):
        return {
            k: drop_runtimes(v) for k, v in node.items() if k != "runtime_seconds"
        }
    if isinstance(node, list):
        return [drop_runtimes(v) for v in node]
    return node


def test_workers_flag_keeps_outputs_identical(tmp_path, capsys):
    cfg = {"spec": "free", "t_list": [0.3, 0.5], "eps_list": [0.2, 0.1], "horizon": 0.5}
    rc, out1, _ = run_cli(tmp_path, "rates", cfg, "w1", ("--no-cache",), capsys)
    rc2, out2, _ = run_cli(
        tmp_path, "rates", cfg, "w2", ("--no-cache", "--workers", "4"), capsys
    )
    assert rc == 0 and rc2 == 0
    files1, files2 = result_files(out1), result_files(out2)
    assert set(files1) == set(files2)
    for name in files1:
        if name.endswith(".json"):
            a = drop_runtimes(json.loads(files1[name]))
            b = drop_runtimes(json.loads(files2[name]))
            assert a == b, name
        else:
            assert files1[name] == files2[name], name


def test_verify_all_subset_passes_and_tampering_fails(tmp_path, capsys):
    rc, out, stdout = run_cli(
        tmp_path, "verify-all", {"criteria": ["AC-1"]}, capsys=capsys
    )
    assert rc == 0
    assert "AC-1 pass" in stdout
    report = json.loads((out / "verify_report.json").read_text())
    assert report["failing"] == []

    rc, out, stdout = run_cli(
        tmp_path,
        "verify-all",
        {"criteria": ["AC-1"]},
        "tampered",
        ("--tol-scale", "1e-9"),
        capsys,
    )
    assert rc == 1
    assert "AC-1 fail" in stdout
    report = json.loads((out / "verify_report.json").read_text())
    assert report["failing"] == ["AC-1"]

    # the failing verdict survives a cache hit
    rc, _, stdout = run_cli(
        tmp_path,
        "verify-all",
        {"criteria": ["AC-1"]},
        "tampered",
        ("--tol-scale", "1e-9"),
        capsys,
    )
    assert rc == 1
    assert "cache hit" in stdout


def test_usage_errors_exit_two(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "hjhomog.cli"], capture_output=True, text=True
    )
    assert proc.returncode == 2

    bad_cfg = tmp_path / "bad_catalog.json"
    bad_cfg.write_text(json.dumps({"spec": "unknown_name"}))
    proc = subprocess.run(
        [sys.executable, "-m", "hjhomog.cli", "solve-cauchy", "--config", str(bad_cfg)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
    assert "unknown catalog name" in proc.stderr


def test_flag_validation(tmp_path, capsys):
    rc, _, _ = run_cli(
        tmp_path, "effective", {"spec": "free"}, extra=("--workers", "0"), capsys=capsys
    )
    assert rc == 2
    rc, _, _ = run_cli(
        tmp_path, "effective", {"spec": "free"}, extra=("--tol-scale", "-1"), capsys=capsys
    )
    assert rc == 2
