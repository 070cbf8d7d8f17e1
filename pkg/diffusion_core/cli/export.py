"""Consolidated report and plot-ready CSV files of a finished run."""
import logging
import os

from diffusion_core.cache.artifact_store import ArtifactStore
from diffusion_core.cli.pipeline import STAGES
from diffusion_core.cli.verify import check_integrity
from diffusion_core.errors.exceptions import UsageError
from diffusion_core.response import status

logger = logging.getLogger(__name__)

FORMATS = ("json", "csv")
EXPORT_DIR = "export"
CONSTANTS_HEADER = ("name", "value", "stage")


def export_report(run_dir, format="json"):
    """
    Write ``<run_dir>/export``: every CSV artifact, ``measured_constants.csv``
    and for ``json`` one consolidated ``report.json`` with the JSON artifacts
    inlined.  A second export of the same run is byte-identical.

    Stages that did not succeed are listed in ``missing`` and logged as a
    partial export.

    :raises UsageError: unknown format
    :raises FileNotFoundError: no report in ``run_dir``
    :raises IntegrityError: an artifact does not match the manifest
    """
    if format not in FORMATS:
        raise UsageError(f"unknown export format {format!r}", witness={"format": format, "known": list(FORMATS)})
    source = ArtifactStore(run_dir)
    if not source.exists("report.json"):
        raise FileNotFoundError(f"no report.json in {run_dir}")
    report = source.get_json("report.json")
    manifest = source.read_manifest()
    check_integrity(source, manifest)

    stages = {stage["stage"]: stage for stage in report["stages"]}
    missing = [cls.stage_name for cls in STAGES if stages.get(cls.stage_name, {}).get("status") != status.STAGE_SUCCESS]
    if missing:
        logger.warning("partial export of %s, missing stages: %s", run_dir, ", ".join(missing))

    target = ArtifactStore(os.path.join(run_dir, EXPORT_DIR))
    files = []
    for key in sorted(manifest):
        if key.endswith(".csv"):
            target.set(key, source.get(key))
            files.append(key)
    target.set_csv("measured_constants.csv", CONSTANTS_HEADER, [[row[name] for name in CONSTANTS_HEADER] for row in report["measured_constants"]])
    files.append("measured_constants.csv")
    if format == "json":
        documents = {key: source.get_json(key) for key in sorted(manifest) if key.endswith(".json")}
        target.set_json("report.json", {"report": report, "artifacts": documents, "missing": missing})
        files.append("report.json")
    logger.info("exported %d files to %s", len(files), target.root)
    return {"directory": target.root, "files": sorted(files), "missing": missing}
