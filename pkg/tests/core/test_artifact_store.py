import json

import numpy as np
import pytest

from diffusion_core.cache.artifact_store import ArtifactStore, canonical_json, get_artifact_store
from diffusion_core.cache.backends import OUTPUT_DIR_ENV, get_artifact_store_config
from diffusion_core.errors.exceptions import IntegrityError


@pytest.fixture
def store(tmp_path):
    return ArtifactStore(str(tmp_path / "run"))


def test_canonical_json_sorts_keys_and_converts_numpy():
    text = canonical_json({"b": np.float64(0.1), "a": np.arange(2), "c": np.bool_(True)})
    assert json.loads(text) == {"a": [0, 1], "b": 0.1, "c": True}
    assert text.index('"a"') < text.index('"b"')
    assert text.endswith("\n")


def test_manifest_records_digest_of_written_bytes(store):
    digest = store.set_json("tree.json", {"x": 1})
    assert store.manifest() == {"tree.json": digest}
    assert store.check("tree.json", digest) == digest
    assert store.get_json("tree.json", digest) == {"x": 1}


def test_tampered_artifact_raises_integrity_error(store):
    digest = store.set_json("tree.json", {"x": 1})
    with open(store.path("tree.json"), "a", encoding="utf-8") as handle:
        handle.write(" ")
    with pytest.raises(IntegrityError) as info:
        store.get_json("tree.json", digest)
    assert info.value.witness["artifact"] == "tree.json"
    assert info.value.witness["expected"] == digest
    assert info.value.witness["actual"] != digest


def test_csv_floats_survive_a_text_round_trip(store):
    value = 0.1 + 0.2
    store.set_csv("values.csv", ("name", "value"), [("x", value), ("n", 3)])
    lines = store.get("values.csv").decode("utf-8").splitlines()
    assert lines[0] == "name,value"
    assert float(lines[1].split(",")[1]) == value
    assert lines[2] == "n,3"


def test_report_is_written_without_a_digest(store):
    store.set_json("a.json", [1])
    store.write_manifest()
    store.write_report({"ok": True})
    assert store.read_manifest() == store.manifest()
    assert "report.json" not in store.manifest()
    assert store.get_json("report.json") == {"ok": True}


def test_clear_forgets_digests_but_keeps_files(store):
    store.set_json("a.json", [1])
    store.clear()
    assert store.manifest() == {}
    assert store.exists("a.json")


def test_delete_removes_file_and_digest(store):
    store.set("a.txt", "hello")
    store.delete("a.txt")
    assert not store.exists("a.txt")
    assert store.manifest() == {}


def test_environment_overrides_root(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "from-env"))
    assert get_artifact_store_config(root="ignored")["default"]["ROOT"] == str(tmp_path / "from-env")


def test_stores_are_shared_per_directory(tmp_path, monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    root = str(tmp_path / "shared")
    assert get_artifact_store(root) is get_artifact_store(root)
    assert get_artifact_store(root) is not get_artifact_store(str(tmp_path / "other"))
