import json

import pytest

from diffusion_core.cache.backends import OUTPUT_DIR_ENV
from diffusion_core.cli.config import get_default_pipeline_config


@pytest.fixture(autouse=True)
def output_dir_from_config(monkeypatch):
    # an empty override falls back to the document
    monkeypatch.setenv(OUTPUT_DIR_ENV, "")


@pytest.fixture
def write_config(tmp_path):
    """Write a default document with ``overrides`` to ``<tmp>/<name>.json``, output in ``<tmp>/<name>``."""

    def write(name="run", **overrides):
        document = get_default_pipeline_config(output_dir=str(tmp_path / name), **overrides)
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(document), encoding="utf-8")
        return str(path)

    return write
