"""Run manifests: the record that makes every output reproducible.

Every CLI command that writes files also writes a manifest naming the
artifact version, the fully resolved parameters (seeds included), the
derived per-role stream seeds when a single run is involved, and a
sha256 digest per output file.  Re-running from the manifest must
reproduce the digests bit for bit; the replay command automates that.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

# Version of the manifest layout and of the CSV schemas it points at.
SCHEMA_VERSION = 1


@dataclass
class RunManifest:
    command: str
    params: dict
    base_seed: int
    version: str
    outputs: dict[str, str] = field(default_factory=dict)
    stream_seeds: dict | None = None
    duration_s: float = 0.0
    schema_version: int = SCHEMA_VERSION


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(manifest: RunManifest, path) -> None:
    Path(path).write_text(
        json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n")


def load_manifest(path) -> RunManifest:
    doc = json.loads(Path(path).read_text())
    known = {f for f in RunManifest.__dataclass_fields__}
    return RunManifest(**{k: v for k, v in doc.items() if k in known})
