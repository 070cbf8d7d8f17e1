"""Re-run invariant suites on the artifacts of a finished run, without recomputing it."""
import logging
import os

import numpy as np

from diffusion_core.cache.artifact_store import ArtifactStore
from diffusion_core.errors.exceptions import UsageError
from diffusion_core.hamiltonian.frequency import convexity_certificate
from diffusion_core.potential_shaper.averaged import AveragedPotential
from diffusion_core.potential_shaper.extrema import nondegeneracy_check, track_extrema
from diffusion_core.resonance_net.verification import verify_tree
from diffusion_core.response.mixins import ReportHandlerMixin
from diffusion_core.serializers.hamiltonian_serializer import load_hamiltonian
from diffusion_core.serializers.tree_serializer import load_tree

logger = logging.getLogger(__name__)


def run_directory(artifact_path):
    """The run directory of a path naming either the directory or one of its artifacts."""
    if not os.path.exists(artifact_path):
        raise FileNotFoundError(f"no artifact at {artifact_path}")
    return artifact_path if os.path.isdir(artifact_path) else os.path.dirname(artifact_path) or "."


def check_integrity(store, manifest, keys=None):
    """Re-hash ``keys`` (every manifest entry by default) against the manifest."""
    keys = sorted(manifest) if keys is None else keys
    for key in keys:
        if key not in manifest:
            raise FileNotFoundError(f"{key} is not in the manifest of {store.root}")
        store.check(key, manifest[key])
    return {"artifacts": len(keys)}


def check_keythm1(store, manifest):
    tree = load_tree(store.get_json("tree.json", manifest["tree.json"]))
    return verify_tree(tree).as_dict()


def check_convexity(store, manifest):
    H = load_hamiltonian(store.get_json("hamiltonian.json", manifest["hamiltonian.json"]))
    settings = store.get_json("config.json", manifest["config.json"])["hamiltonian"]
    return {"D": convexity_certificate(H, settings["box"], settings["grid"])}


def check_normal_form(store, manifest):
    """Every resonant mode is a multiple of the resonance vector, in exact integers."""
    document = store.get_json("normal_form.json", manifest["normal_form.json"])
    k = np.array(document["k_n"], dtype=np.int64)
    modes = np.array(document["resonant_modes"], dtype=np.int64).reshape(-1, 3)
    stray = [mode.tolist() for mode in modes if np.any(np.cross(mode, k))]
    return {"pure": not stray, "stray_modes": stray, "resonant_modes": len(modes)}


def check_nondegeneracy(store, manifest):
    document = store.get_json("potential.json", manifest["potential.json"])
    potential, certificate = document["potential"], document["certificate"]
    coefficients = np.array(potential["coefficients"], dtype=float)
    Z = AveragedPotential(
        potential["nodes"],
        coefficients[..., 0] + 1j * coefficients[..., 1],
        k=None if potential["k"] is None else tuple(potential["k"]),
        period=potential["period"],
    )
    branch = track_extrema(Z, grid=document["branch"]["grid"], orientation=document["branch"]["orientation"])
    return nondegeneracy_check(branch, certificate["lambda_star"]).as_dict()


CHECKS = {
    "integrity": lambda store, manifest: check_integrity(store, manifest),
    "keythm1": check_keythm1,
    "convexity": check_convexity,
    "normal_form": check_normal_form,
    "nondegeneracy": check_nondegeneracy,
}

# artifacts each check reads; they are re-hashed before the check runs
CHECK_ARTIFACTS = {
    "integrity": (),
    "keythm1": ("tree.json",),
    "convexity": ("hamiltonian.json", "config.json"),
    "normal_form": ("normal_form.json",),
    "nondegeneracy": ("potential.json",),
}


class VerifyCommand(ReportHandlerMixin):
    stage_name = "verify"

    def __init__(self, artifact_path):
        self.artifact_path = artifact_path

    def run(self, checks):
        try:
            unknown = [name for name in checks if name not in CHECKS]
            if unknown:
                raise UsageError(f"unknown checks {unknown}", witness={"unknown": unknown, "known": sorted(CHECKS)})
            root = run_directory(self.artifact_path)
            if not checks:
                return self.success_report(data={}, message="no checks requested", checks=[])
            store = ArtifactStore(root)
            manifest = store.read_manifest()
            needed = sorted({key for name in checks for key in CHECK_ARTIFACTS[name]})
            check_integrity(store, manifest, needed)
            results = {name: CHECKS[name](store, manifest) for name in checks}
        except Exception as exc:
            return self.exception_report(exc)
        logger.info("verified %s in %s", checks, root)
        return self.success_report(data=results, message="checks complete", checks=list(checks))


def verify_command(artifact_path, checks):
    """
    Usage:
        report = verify_command("runs/r1/tree.json", ["keythm1"])
        report["data"]["keythm1"]["summary"]

    :return: a report envelope; an unknown check gives exit code 2 and a
        hash mismatch an integrity failure
    """
    return VerifyCommand(artifact_path).run(list(checks))
