import csv
import hashlib
import io
import json
import logging
import os

from diffusion_core.cache.backends import get_artifact_store_config
from diffusion_core.errors.exceptions import IntegrityError
from diffusion_core.response.mixins import to_builtin

logger = logging.getLogger(__name__)


def canonical_json(payload):
    return json.dumps(to_builtin(payload), sort_keys=True, indent=2) + "\n"


def format_number(value, float_format=".17g"):
    if isinstance(value, float):
        return format(value, float_format)
    return str(value)


class ArtifactStore:
    """
    Content-addressed store of run artifacts under one directory.
    from diffusion_core.cache.artifact_store import get_artifact_store
            store = get_artifact_store("runs/r1")
            store.set_json("tree.json", tree_document)
            document = store.get_json("tree.json")
    """

    def __init__(self, root, config=None):
        self.config = config or get_artifact_store_config(root=root)["default"]
        self.root = root
        self.hash_name = self.config["HASH"]
        self.float_format = self.config["FLOAT_FORMAT"]
        self._digests = {}

    def path(self, key):
        return os.path.join(self.root, key)

    def digest_bytes(self, data):
        return hashlib.new(self.hash_name, data).hexdigest()

    def set(self, key, data):
        if isinstance(data, str):
            data = data.encode("utf-8")
        os.makedirs(os.path.dirname(self.path(key)) or self.root, exist_ok=True)
        with open(self.path(key), "wb") as handle:
            handle.write(data)
        self._digests[key] = self.digest_bytes(data)
        logger.debug("stored %s (%s)", key, self._digests[key][:12])
        return self._digests[key]

    def get(self, key):
        with open(self.path(key), "rb") as handle:
            return handle.read()

    def exists(self, key):
        return os.path.exists(self.path(key))

    def delete(self, key):
        self._digests.pop(key, None)
        if self.exists(key):
            os.remove(self.path(key))

    def set_json(self, key, payload):
        return self.set(key, canonical_json(payload))

    def get_json(self, key, expected_digest=None):
        data = self.get(key)
        if expected_digest is not None:
            self.check(key, expected_digest, data)
        return json.loads(data.decode("utf-8"))

    def set_csv(self, key, header, rows):
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(value, self.float_format) for value in to_builtin(list(row))])
        return self.set(key, buffer.getvalue())

    def check(self, key, expected_digest, data=None):
        data = self.get(key) if data is None else data
        actual = self.digest_bytes(data)
        if actual != expected_digest:
            raise IntegrityError(
                f"Hash mismatch for {key}",
                witness={"artifact": key, "expected": expected_digest, "actual": actual},
            )
        return actual

    def clear(self):
        """Forget recorded digests; files on disk are kept."""
        self._digests = {}

    def manifest(self):
        return dict(sorted(self._digests.items()))

    def write_manifest(self):
        name = self.config["MANIFEST"]
        os.makedirs(self.root, exist_ok=True)
        with open(self.path(name), "w", encoding="utf-8") as handle:
            handle.write(canonical_json(self.manifest()))
        return self.manifest()

    def write_report(self, payload, name="report.json"):
        """Write a document next to the manifest without recording its digest."""
        os.makedirs(self.root, exist_ok=True)
        with open(self.path(name), "w", encoding="utf-8") as handle:
            handle.write(canonical_json(payload))
        return self.path(name)

    def read_manifest(self):
        with open(self.path(self.config["MANIFEST"]), encoding="utf-8") as handle:
            return json.load(handle)


artifact_stores = {}


def get_artifact_store(root=None):
    config = get_artifact_store_config(root=root or "runs/default")["default"]
    key = os.path.abspath(config["ROOT"])
    if key not in artifact_stores:
        artifact_stores[key] = ArtifactStore(config["ROOT"], config)
    return artifact_stores[key]
