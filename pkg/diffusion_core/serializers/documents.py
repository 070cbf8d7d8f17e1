"""
Versioned JSON documents: {"schema": name, "schema_version": n, <field>: ...}.

A schema is a name plus an ordered mapping of field name to getter.  Only
the fields named in ``fields`` are emitted when it is given.

Usage:
    document = tree_document(tree, fields=["generations"])
    tree = load_tree(document)
"""
from diffusion_core.response.mixins import to_builtin

SCHEMA_VERSION = 1


def dump_document(schema_name, getters, instance, fields=None):
    names = list(getters)
    if fields:
        allowed = set(fields)
        names = [name for name in names if name in allowed]
    document = {"schema": schema_name, "schema_version": SCHEMA_VERSION}
    for name in names:
        document[name] = to_builtin(getters[name](instance))
    return document


def check_document(document, schema_name, required):
    """
    :raises ValueError: a foreign or unversioned document, or one missing a ``required`` field
    """
    if not isinstance(document, dict):
        raise ValueError(f"Expected a {schema_name} document, got {type(document).__name__}")
    if document.get("schema") != schema_name:
        raise ValueError(f"Expected a {schema_name} document, got {document.get('schema')!r}")
    if document.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"Unsupported {schema_name} schema version {document.get('schema_version')!r}")
    missing = [name for name in required if name not in document]
    if missing:
        raise ValueError(f"{schema_name} document is missing {missing}")
    return document
