import datetime
import json
from pathlib import Path

import pytest

from diffusion_core.cli.config import load_pipeline_config
from diffusion_core.cli.pipeline import STAGES, run_pipeline, run_stage
from diffusion_core.errors.exceptions import UsageError
from diffusion_core.response import status

from tests.helpers import HAMILTONIAN_ONLY, WITHOUT_TREE

NOW = datetime.datetime(2024, 5, 1, 8, 30)


def test_hamiltonian_only_run(write_config, tmp_path):
    report = run_pipeline(write_config(**HAMILTONIAN_ONLY), now=NOW)
    assert report.success
    assert report.exit_code == status.EXIT_SUCCESS
    assert [stage["stage"] for stage in report.stages] == [cls.stage_name for cls in STAGES]
    assert report.stage("hamiltonian")["status"] == status.STAGE_SUCCESS
    assert report.stage("tree")["status"] == status.STAGE_SKIPPED
    assert report.constants == [{"name": "D", "value": pytest.approx(1.0), "stage": "hamiltonian"}]
    assert set(report.manifest) == {"config.json", "hamiltonian.json"}
    assert report.timestamp == "2024-05-01T08:30:00+00:00"

    run_dir = tmp_path / "run"
    written = json.loads((run_dir / "report.json").read_text(encoding="utf-8"))
    assert written["manifest"] == report.manifest
    assert json.loads((run_dir / "manifest.json").read_text(encoding="utf-8")) == report.manifest


def test_normal_form_and_potential(write_config):
    report = run_pipeline(write_config(**WITHOUT_TREE), now=NOW)
    assert report.success, report.as_dict()
    for name in ("hamiltonian", "normal_form", "potential"):
        assert report.stage(name)["status"] == status.STAGE_SUCCESS
    assert report.stage("normal_form")["data"]["steps"] == 1
    names = {row["name"] for row in report.constants}
    assert {"D", "C", "C3", "lambda_curvature"} <= names
    assert {"normal_form.json", "norms.csv", "potential.json", "potential_branch.csv"} <= set(report.manifest)


def test_non_convex_h0_halts_the_run(write_config):
    document_h0 = {"terms": [[[1, 0, 0], 1.0]], "h0": [[1.0, 0.0], [0.0, -1.0]], "epsilon": 1e-3}
    report = run_pipeline(write_config(hamiltonian=document_h0), now=NOW)
    assert not report.success
    assert report.exit_code == status.EXIT_STAGE_FAILURE
    failure = report.stage("hamiltonian")
    assert failure["status"] == status.STAGE_FAILURE
    assert failure["errors"]["error"] == "ConvexityError"
    assert min(failure["errors"]["witness"]["eigenvalues"]) <= 0
    for cls in STAGES[1:]:
        skipped = report.stage(cls.stage_name)
        assert skipped["status"] == status.STAGE_SKIPPED
        assert skipped["message"] == "halted after hamiltonian failed"
    assert set(report.manifest) == {"config.json"}


def test_same_config_gives_identical_artifacts(write_config, tmp_path):
    first = run_pipeline(write_config("first", **WITHOUT_TREE), now=NOW)
    second = run_pipeline(write_config("second", **WITHOUT_TREE), now=NOW + datetime.timedelta(hours=1))
    assert first.manifest == second.manifest
    for key in first.manifest:
        assert (tmp_path / "first" / key).read_bytes() == (tmp_path / "second" / key).read_bytes()
    assert first.timestamp != second.timestamp


def test_config_artifact_omits_output_dir(write_config, tmp_path):
    run_pipeline(write_config(**HAMILTONIAN_ONLY), now=NOW)
    stored = json.loads((tmp_path / "run" / "config.json").read_text(encoding="utf-8"))
    assert "output_dir" not in stored
    assert stored["seed"] == 7


def test_run_stage_runs_prerequisites(write_config):
    path = write_config(**WITHOUT_TREE)
    report = run_stage(path, "potential", until="track")
    assert report["stage"] == "potential"
    assert report["status"] == status.STAGE_SUCCESS
    assert "certificate" not in report["data"]
    store_dir = load_pipeline_config(path).output_dir
    stored = json.loads(Path(store_dir, "potential.json").read_text(encoding="utf-8"))
    assert stored["certificate"] is None


def test_run_stage_returns_failed_prerequisite(write_config):
    document_h0 = {"terms": [[[1, 0, 0], 1.0]], "h0": [[-1.0, 0.0], [0.0, 1.0]]}
    report = run_stage(write_config(hamiltonian=document_h0), "normal_form")
    assert report["stage"] == "hamiltonian"
    assert report["status_code"] == status.EXIT_STAGE_FAILURE


def test_unknown_stage_or_step(write_config):
    path = write_config(**WITHOUT_TREE)
    with pytest.raises(UsageError):
        run_stage(path, "everything")
    with pytest.raises(UsageError):
        run_stage(path, "potential", until="graph")


def test_geodesics_on_the_double_resonance_slow_system(write_config):
    # ½|I|² + ε(cos φ1 + cos φ2) is already slow at ω# = 0: α₀ = 2ε at ψ = 0
    geodesics = {"double_resonance": {"k": [1, 0, 0], "k_prime": [0, 1, 0]}}
    path = write_config(geodesics=geodesics, **HAMILTONIAN_ONLY)
    report = run_stage(path, "geodesics", until="critical")
    assert report["stage"] == "geodesics"
    assert report["status"] == status.STAGE_SUCCESS, report
    assert report["data"]["critical"]["alpha0"] == pytest.approx(2e-3, abs=1e-12)
    assert "double_resonance.json" in report["artifacts"]
    assert {"name": "dr_remainder", "value": 0.0, "stage": "geodesics"} in report["constants"]
