import json
from pathlib import Path

import pytest

from anholo.app import run_geometry_scenario as app
from anholo.app.run_geometry_scenario import (
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    EXIT_TASK_FAILURE,
    main,
)
from anholo.models.scenarios import selftest_scenario
from anholo.utils.errors import DegenerateMetricError, EnvelopeError

EXAMPLES = Path(__file__).parents[1] / "conf" / "examples"


def write_config(tmp_path, document, name="config.json") -> str:
    path = tmp_path / name
    path.write_text(json.dumps(document))
    return str(path)


def flat_config(**changes):
    document = {
        "dims": {"n": 1, "m": 1},
        "source": {"kind": "metric", "g": [["1"]], "h": [["1"]], "N": [["0.3"]]},
        "probes": [{"x": [0.2], "y": [0.5]}],
        "tasks": ["nconnection_curvature", "dconnection", "torsion"],
    }
    document.update(changes)
    return document


def test_run_writes_a_report(tmp_path, capsys):
    code = main(["run", write_config(tmp_path, flat_config())])
    assert code == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert set(report) == {"meta", "config", "results", "invariants"}
    assert [r["task"] for r in report["results"]] == [
        "nconnection_curvature",
        "dconnection",
        "torsion",
    ]
    assert all(r["status"] == "ok" for r in report["results"])
    assert all(check["passed"] for check in report["invariants"])
    assert report["meta"]["tol_scale"] == 1.0


def test_run_to_file_pretty(tmp_path):
    out = tmp_path / "reports" / "flat.json"
    code = main(
        ["run", write_config(tmp_path, flat_config()), "--out", str(out), "--pretty"]
    )
    assert code == EXIT_OK
    text = out.read_text()
    assert text.startswith("{\n")
    assert json.loads(text)["results"][0]["status"] == "ok"


def test_seed_flag_and_environment(tmp_path, capsys, monkeypatch):
    path = write_config(tmp_path, flat_config())
    assert main(["run", path, "--seed", "11"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["meta"]["seed"] == 11
    monkeypatch.setenv("ANHOLO_SEED", "23")
    assert main(["run", path]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["meta"]["seed"] == 23


def test_malformed_expression_is_a_config_error(tmp_path):
    source = {"kind": "metric", "g": [["1 +* x1"]], "h": [["1"]]}
    path = write_config(tmp_path, flat_config(source=source))
    assert main(["run", path]) == EXIT_CONFIG_ERROR


@pytest.mark.parametrize(
    "changes",
    [
        {"tasks": ["no_such_task"]},
        {"probes": [{"x": [0.2, 0.1], "y": [0.5]}]},
        {"dims": None},
        {"tolerances": {"torsion": -1.0}},
    ],
)
def test_invalid_config_is_a_config_error(tmp_path, changes):
    path = write_config(tmp_path, flat_config(**changes))
    assert main(["run", path]) == EXIT_CONFIG_ERROR


def test_unreadable_files_are_config_errors(tmp_path):
    assert main(["run", str(tmp_path / "missing.json")]) == EXIT_CONFIG_ERROR
    broken = tmp_path / "broken.json"
    broken.write_text("{ not json")
    assert main(["run", str(broken)]) == EXIT_CONFIG_ERROR


def test_task_failure_keeps_running(tmp_path, capsys):
    tasks = ["dconnection", "dirac_spectrum", "torsion"]
    code = main(["run", write_config(tmp_path, flat_config(tasks=tasks))])
    assert code == EXIT_TASK_FAILURE
    results = json.loads(capsys.readouterr().out)["results"]
    assert [r["status"] for r in results] == ["ok", "failed", "ok"]
    assert "grid" in results[1]["error"]


def test_family_filters_tasks(tmp_path, capsys):
    tasks = ["dconnection", "gamma", "frame_gamma"]
    code = main(["dirac", write_config(tmp_path, flat_config(tasks=tasks))])
    assert code == EXIT_OK
    results = json.loads(capsys.readouterr().out)["results"]
    assert [r["task"] for r in results] == ["gamma", "frame_gamma"]


def test_family_without_tasks_is_a_config_error(tmp_path):
    assert main(["chern", write_config(tmp_path, flat_config())]) == EXIT_CONFIG_ERROR


def test_cech_on_a_bare_cover_file(capsys):
    code = main(["cech", str(EXAMPLES / "disk_spin_cover.json")])
    assert code == EXIT_OK
    results = {r["task"]: r for r in json.loads(capsys.readouterr().out)["results"]}
    assert list(results) == ["cohomology", "cocycle", "spin_obstruction", "glue"]
    assert results["cohomology"]["result"]["dims"] == [1, 0, 0]
    assert results["spin_obstruction"]["result"]["spin_exists"]
    assert results["glue"]["result"]["compatible"]


def test_cech_on_torus_cover(capsys):
    assert main(["cech", str(EXAMPLES / "torus_cover.json")]) == EXIT_OK
    results = json.loads(capsys.readouterr().out)["results"]
    assert results[0]["result"]["dims"] == [1, 2, 1]


def test_chern_on_the_monopole(capsys):
    assert main(["chern", str(EXAMPLES / "monopole.json")]) == EXIT_OK
    results = {r["task"]: r for r in json.loads(capsys.readouterr().out)["results"]}
    synthetic = results["chern"]["result"]["synthetic"]
    assert synthetic["c1"]["integral"] == pytest.approx(2.0, abs=1e-9)
    assert results["index_pairing"]["result"]["synthetic"] == pytest.approx(2.0)


@pytest.mark.parametrize(
    "name",
    [
        "flat_metric.json",
        "twisted_nconnection.json",
        "sphere_lagrangian.json",
        "sphere_fiber.json",
        "constant_nconnection.json",
    ],
)
def test_shipped_examples_run(name, capsys):
    assert main(["run", str(EXAMPLES / name)]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert all(r["status"] == "ok" for r in report["results"])


def test_selftest_passes(capsys):
    assert main(["selftest"]) == EXIT_OK
    table = capsys.readouterr().out
    assert "monopole_c1_q3" in table


def test_same_seed_same_report(tmp_path):
    path = str(EXAMPLES / "twisted_nconnection.json")
    first, second = tmp_path / "first.json", tmp_path / "second.json"
    assert main(["run", path, "--seed", "5", "--out", str(first)]) == EXIT_OK
    assert main(["run", path, "--seed", "5", "--out", str(second)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    assert main(["run", path, "--seed", "6", "--out", str(second)]) == EXIT_OK
    assert first.read_bytes() != second.read_bytes()


def test_broken_cover_file_is_a_config_error(tmp_path):
    path = write_config(tmp_path, {"elements": [1, 2]}, "cover.json")
    assert main(["cech", path]) == EXIT_CONFIG_ERROR


def test_library_error_outside_tasks_is_a_failure(tmp_path, monkeypatch):
    class SingularScenario:
        def run(self, progress_bar=False):
            raise DegenerateMetricError("g is singular at the point")

    monkeypatch.setattr(app, "create_scenario", lambda *a, **kw: SingularScenario())
    path = write_config(tmp_path, flat_config())
    assert main(["run", path]) == EXIT_TASK_FAILURE


def test_failing_selftest_check_is_a_failure(monkeypatch, capsys):
    def small_grid():
        raise EnvelopeError("Grid size 3 is below the supported minimum")

    monkeypatch.setattr(selftest_scenario, "box_grid", small_grid)
    assert main(["selftest"]) == EXIT_TASK_FAILURE
    assert "monopole_c1_q1" in capsys.readouterr().out
