import json

import pytest

from diffusion_core.cache.backends import OUTPUT_DIR_ENV
from diffusion_core.cli.main import build_parser, main
from diffusion_core.response import status

from tests.helpers import HAMILTONIAN_ONLY, WITHOUT_TREE


def _run(capsys, argv):
    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


def test_run_and_verify(write_config, tmp_path, capsys):
    code, report = _run(capsys, ["run", write_config(**HAMILTONIAN_ONLY)])
    assert code == status.EXIT_SUCCESS
    assert report["success"]
    code, report = _run(capsys, ["verify", str(tmp_path / "run"), "--check", "integrity", "--check", "convexity"])
    assert code == status.EXIT_SUCCESS
    assert report["checks"] == ["integrity", "convexity"]


def test_stage_failure_exits_one(write_config, capsys):
    h0 = {"terms": [[[1, 0, 0], 1.0]], "h0": [[1.0, 0.0], [0.0, -1.0]]}
    code, report = _run(capsys, ["run", write_config(hamiltonian=h0)])
    assert code == status.EXIT_STAGE_FAILURE
    assert not report["success"]


def test_usage_errors_exit_two(write_config, tmp_path, capsys):
    code, report = _run(capsys, ["run", str(tmp_path / "absent.json")])
    assert code == status.EXIT_USAGE_ERROR
    assert report["command"] == "run"

    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"schema_version": 1}), encoding="utf-8")
    code, report = _run(capsys, ["run", str(path)])
    assert code == status.EXIT_USAGE_ERROR
    assert report["errors"]["witness"] == {"key": "seed"}

    _run(capsys, ["run", write_config(**HAMILTONIAN_ONLY)])
    code, report = _run(capsys, ["verify", str(tmp_path / "run"), "--check", "everything"])
    assert code == status.EXIT_USAGE_ERROR


def test_output_dir_flag_overrides_config(write_config, tmp_path, monkeypatch, capsys):
    target = tmp_path / "flagged"
    monkeypatch.setenv(OUTPUT_DIR_ENV, "")
    code, report = _run(capsys, ["--output-dir", str(target), "run", write_config(**HAMILTONIAN_ONLY)])
    assert code == status.EXIT_SUCCESS
    assert (target / "report.json").exists()
    assert not (tmp_path / "run" / "report.json").exists()


def test_export_command(write_config, tmp_path, capsys):
    _run(capsys, ["run", write_config(**HAMILTONIAN_ONLY)])
    code, report = _run(capsys, ["export", str(tmp_path / "run"), "--format", "csv"])
    assert code == status.EXIT_SUCCESS
    assert report["data"]["files"] == ["measured_constants.csv"]


def test_stage_subcommands(write_config, capsys):
    path = write_config(**WITHOUT_TREE)
    code, report = _run(capsys, ["nf", path])
    assert code == status.EXIT_SUCCESS
    assert report["stage"] == "normal_form"
    code, report = _run(capsys, ["potential", "check", path])
    assert code == status.EXIT_SUCCESS
    assert report["data"]["certificate"]["passed"]


def test_nhic_without_section_is_skipped(write_config, capsys):
    code, report = _run(capsys, ["nhic", "saddle", write_config(**WITHOUT_TREE)])
    assert code == status.EXIT_SUCCESS
    assert report["status"] == status.STAGE_SKIPPED


def test_dioph_commands(capsys):
    omega = ["--omega", "0.41421356237309503", "0.7320508075688772"]
    code, report = _run(capsys, ["dioph", "check", *omega, "--cutoff-K", "20"])
    assert code == status.EXIT_SUCCESS
    assert report["stage"] == "dioph check"
    code, report = _run(capsys, ["dioph", "approx", *omega, "--X", "10"])
    assert code == status.EXIT_SUCCESS
    assert set(report["data"]) == {"x", "certificate"}


def test_potential_deform_and_measure(capsys):
    code, report = _run(capsys, ["potential", "deform", "--cosines", "0", "-1", "--lambda-star", "1e-4"])
    assert code == status.EXIT_SUCCESS
    assert report["data"]["certificate"]["passed"]
    code, report = _run(capsys, ["potential", "measure", "--cosines", "0", "-1", "--samples", "1000", "--lambda-star", "1e-4"])
    assert code == status.EXIT_SUCCESS
    assert 0.0 <= report["data"]["estimate"]["fraction"] <= 1.0


def test_missing_subcommand_is_rejected():
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args([])
    assert info.value.code == status.EXIT_USAGE_ERROR
