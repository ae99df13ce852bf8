"""Content hashes that tie persisted results to the inputs that produced them."""

import hashlib
import json
from typing import Any, Mapping


def fingerprint_chunks(*chunks: bytes) -> str:
    """Return the hex sha256 of *chunks*, each length-prefixed so boundaries matter."""
    digest = hashlib.sha256()
    for chunk in chunks:
        digest.update(len(chunk).to_bytes(8, "little"))
        digest.update(chunk)
    return digest.hexdigest()


def config_fingerprint(values: Mapping[str, Any]) -> str:
    """Hash a flat configuration mapping independent of key order."""
    text = json.dumps(dict(values), sort_keys=True, separators=(",", ":"))
    return fingerprint_chunks(text.encode("utf-8"))
