import datetime
import json

import pytest

from diffusion_core.cli.pipeline import run_pipeline
from diffusion_core.cli.verify import verify_command
from diffusion_core.response import status

from tests.helpers import HAMILTONIAN_ONLY, WITHOUT_TREE

NOW = datetime.datetime(2024, 5, 1, 8, 30)


@pytest.fixture
def run_dir(write_config, tmp_path):
    run_pipeline(write_config(**WITHOUT_TREE), now=NOW)
    return tmp_path / "run"


def test_no_checks_is_a_no_op(run_dir):
    report = verify_command(str(run_dir), [])
    assert report["success"]
    assert report["checks"] == []
    assert report["data"] == {}


def test_unknown_check_is_a_usage_error(run_dir):
    report = verify_command(str(run_dir), ["keythm9"])
    assert report["status_code"] == status.EXIT_USAGE_ERROR
    assert report["errors"]["witness"]["unknown"] == ["keythm9"]


def test_missing_path_is_a_usage_error(tmp_path):
    report = verify_command(str(tmp_path / "nowhere"), ["integrity"])
    assert report["status_code"] == status.EXIT_USAGE_ERROR


def test_checks_on_stored_artifacts(run_dir):
    report = verify_command(str(run_dir / "potential.json"), ["integrity", "convexity", "normal_form", "nondegeneracy"])
    assert report["success"], report
    data = report["data"]
    assert data["integrity"]["artifacts"] >= 5
    assert data["convexity"]["D"] == pytest.approx(1.0)
    assert data["normal_form"]["pure"]
    assert data["normal_form"]["stray_modes"] == []
    assert data["nondegeneracy"]["passed"]


def test_check_needs_its_artifact(write_config, tmp_path):
    run_pipeline(write_config(**HAMILTONIAN_ONLY), now=NOW)
    report = verify_command(str(tmp_path / "run"), ["keythm1"])
    assert report["status_code"] == status.EXIT_USAGE_ERROR
    assert report["message"] == "Artifact Not Found"


def test_tampered_artifact_fails_integrity(run_dir):
    path = run_dir / "hamiltonian.json"
    document = json.loads(path.read_text(encoding="utf-8"))
    document["epsilon"] = 0.5
    path.write_text(json.dumps(document), encoding="utf-8")
    report = verify_command(str(run_dir), ["convexity"])
    assert report["status_code"] == status.EXIT_STAGE_FAILURE
    assert report["errors"]["error"] == "IntegrityError"
    assert report["errors"]["witness"]["artifact"] == "hamiltonian.json"
