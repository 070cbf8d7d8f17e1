import os

OUTPUT_DIR_ENV = "DIFFUSION_CORE_OUTPUT_DIR"


def get_artifact_store_config(
    root="runs/default",
    hash_algorithm="sha256",
    float_format=".17g",
    manifest_name="manifest.json",
):
    """
    Returns the artifact store settings for a run directory.

    The output directory can be overridden with DIFFUSION_CORE_OUTPUT_DIR:
                from diffusion_core.cache.backends import get_artifact_store_config
                STORE = get_artifact_store_config(root="runs/r1")
    """

    return {
        "default": {
            "ROOT": os.environ.get(OUTPUT_DIR_ENV) or root,
            "HASH": hash_algorithm,
            "FLOAT_FORMAT": float_format,
            "MANIFEST": manifest_name,
        }
    }
