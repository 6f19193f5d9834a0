import json

import httpx
import pytest
from fastapi.testclient import TestClient

from wptlab import __version__, cli, service, studies


def _write_config(tmp_path, raw, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return str(path)


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as wrapper:
        cli.main(["--version"])
    assert wrapper.value.code == 0
    assert capsys.readouterr().out.strip() == __version__


def test_run_writes_outputs(tmp_path, capsys):
    path = _write_config(
        tmp_path, {"study": "mec", "seed": 4, "mec": {"n_scenarios": 3}}
    )
    code = cli.main(["run", path, "--out-dir", str(tmp_path)])
    captured = capsys.readouterr()
    assert code == 0
    assert f"wrote {tmp_path}/mec_results.csv (3 rows)" in captured.out
    assert (tmp_path / "mec_manifest.json").exists()
    manifest = json.loads((tmp_path / "mec_manifest.json").read_text())
    assert manifest["seed"] == 4


def test_seed_override_beats_the_config(tmp_path):
    path = _write_config(
        tmp_path, {"study": "mec", "seed": 4, "mec": {"n_scenarios": 2}}
    )
    cli.main(["run", path, "--out-dir", str(tmp_path), "--seed", "9"])
    manifest = json.loads((tmp_path / "mec_manifest.json").read_text())
    assert manifest["seed"] == 9


def test_missing_file_is_a_config_error(tmp_path, capsys):
    code = cli.main(["run", str(tmp_path / "absent.json")])
    assert code == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert err.startswith("wptlab: error: ")
    assert "absent.json" in err


def test_malformed_json_reports_line_and_column(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"study": "mec",\n, }')
    code = cli.main(["run", str(path)])
    assert code == cli.EXIT_CONFIG
    assert f"{path}:2:1:" in capsys.readouterr().err


def test_unknown_study_exit_code(tmp_path, capsys):
    path = _write_config(tmp_path, {"study": "warp"})
    code = cli.main(["run", path])
    assert code == cli.EXIT_CONFIG
    assert "unknown study 'warp'" in capsys.readouterr().err


def test_runtime_config_error_still_exits_2(tmp_path, capsys):
    raw = {"study": "mec", "mec": {"scenarios": [{"deadline": 1e-3}]}}
    code = cli.main(["run", _write_config(tmp_path, raw), "--out-dir", str(tmp_path)])
    assert code == cli.EXIT_CONFIG
    assert "missing field" in capsys.readouterr().err


def test_solver_failure_exits_3(tmp_path, capsys):
    raw = {"study": "irs", "irs": {"l_total": 8, "group_sizes": [3], "trials": 5}}
    code = cli.main(["run", _write_config(tmp_path, raw), "--out-dir", str(tmp_path)])
    assert code == cli.EXIT_SOLVER
    err = capsys.readouterr().err
    assert "study 'irs' failed" in err
    assert "DivisibilityError" in err


def test_jobs_env_fallback(tmp_path, monkeypatch):
    path = _write_config(tmp_path, {"study": "mec", "mec": {"n_scenarios": 2}})
    monkeypatch.setenv("WPTLAB_JOBS", "3")
    assert cli.main(["run", path, "--out-dir", str(tmp_path)]) == 0


def test_bad_jobs_env_is_a_config_error(tmp_path, monkeypatch, capsys):
    path = _write_config(tmp_path, {"study": "mec", "mec": {"n_scenarios": 2}})
    monkeypatch.setenv("WPTLAB_JOBS", "many")
    code = cli.main(["run", path, "--out-dir", str(tmp_path)])
    assert code == cli.EXIT_CONFIG
    assert "WPTLAB_JOBS" in capsys.readouterr().err


def test_validate_ok(tmp_path, capsys):
    path = _write_config(tmp_path, {"study": "sensing"})
    assert cli.main(["validate", path]) == 0
    assert capsys.readouterr().out.strip() == "config ok"


def test_validate_reports_diagnostics(tmp_path, capsys):
    path = _write_config(tmp_path, {"study": "mec", "mec": {"scen_count": 1}})
    assert cli.main(["validate", path]) == cli.EXIT_CONFIG
    err = capsys.readouterr().err
    assert err.startswith("wptlab: ")
    assert "scen_count" in err


@pytest.fixture()
def service_post(monkeypatch):
    """Route the CLI's httpx.post calls into an in-process service."""
    client = TestClient(service.app)

    def post(url, json=None, timeout=None):
        path = "/" + url.split("/", 3)[-1]
        return client.post(path, json=json)

    monkeypatch.setattr(cli.httpx, "post", post)
    return post


def test_server_mode_matches_local_bytes(tmp_path, capsys, service_post):
    raw = {"study": "mec", "seed": 7, "mec": {"n_scenarios": 5}}
    local = tmp_path / "local"
    remote = tmp_path / "remote"
    assert cli.main(["run", _write_config(tmp_path, raw), "--out-dir", str(local)]) == 0
    code = cli.main([
        "run", _write_config(tmp_path, raw),
        "--out-dir", str(remote), "--server", "http://svc:8000",
    ])
    assert code == 0
    assert (remote / "mec_results.csv").read_bytes() == (
        local / "mec_results.csv"
    ).read_bytes()
    manifest = json.loads((remote / "mec_manifest.json").read_text())
    assert manifest["rows"] == 5


def test_server_mode_maps_422_kinds(tmp_path, capsys, service_post):
    bad_config = _write_config(tmp_path, {"study": "warp"}, name="warp.json")
    assert cli.main(["run", bad_config, "--server", "http://svc"]) == cli.EXIT_CONFIG
    capsys.readouterr()
    solver_raw = {"study": "irs", "irs": {"l_total": 8, "group_sizes": [3], "trials": 2}}
    solver_config = _write_config(tmp_path, solver_raw, name="solver.json")
    assert cli.main(["run", solver_config, "--server", "http://svc"]) == cli.EXIT_SOLVER
    assert "DivisibilityError" in capsys.readouterr().err


def test_server_unreachable_exits_3(tmp_path, capsys, monkeypatch):
    def post(url, json=None, timeout=None):
        raise httpx.ConnectError("refused")

    monkeypatch.setattr(cli.httpx, "post", post)
    path = _write_config(tmp_path, {"study": "mec", "mec": {"n_scenarios": 1}})
    assert cli.main(["run", path, "--server", "http://down"]) == cli.EXIT_SOLVER
    assert "unreachable" in capsys.readouterr().err


def test_validate_server_mode(tmp_path, capsys, service_post):
    path = _write_config(tmp_path, {"study": "sensing"})
    assert cli.main(["validate", path, "--server", "http://svc"]) == 0
    assert capsys.readouterr().out.strip() == "config ok"
    bad = _write_config(tmp_path, {"study": "nope"}, name="bad.json")
    assert cli.main(["validate", bad, "--server", "http://svc"]) == cli.EXIT_CONFIG
    assert "unknown study" in capsys.readouterr().err
