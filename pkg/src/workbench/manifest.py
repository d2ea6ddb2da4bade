"""Reproducibility manifests.

Every run persists a manifest capturing each configuration input that
can influence results; its hash is embedded in all output files. The
hash covers everything except the timestamp, so re-running an identical
configuration yields the identical hash (and byte-identical outputs).
"""

from __future__ import annotations

import hashlib
import json
import platform
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy
import scipy

import workbench
from workbench import kernels
from workbench.errors import DataError
from workbench.pipeline import PipelineConfig, pipeline_fingerprint

__all__ = ["RunManifest", "build_manifest", "load_manifest"]


def _wordlist_hash(words: frozenset[str]) -> str:
    return hashlib.sha256("\n".join(sorted(words)).encode()).hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict  # model configs, weights, grids, cutoffs - all JSON-able
    pipeline_hash: str
    stopword_hashes: dict
    seed: int | None
    corpus_fingerprint: str
    tool_versions: dict
    timestamp: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds")
    )

    def hashed_payload(self) -> dict:
        payload = asdict(self)
        payload.pop("timestamp")
        return payload

    @property
    def hash(self) -> str:
        canonical = json.dumps(
            self.hashed_payload(), sort_keys=True, separators=(",", ":")
        )
        return hashlib.sha256(canonical.encode()).hexdigest()

    def save(self, path: str | Path) -> None:
        doc = {"manifest_hash": self.hash, **asdict(self)}
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def build_manifest(
    command: str,
    config: dict,
    pipeline_config: PipelineConfig,
    corpus_fingerprint: str,
    seed: int | None = None,
) -> RunManifest:
    return RunManifest(
        command=command,
        config=config,
        pipeline_hash=pipeline_fingerprint(pipeline_config),
        stopword_hashes={
            "english": _wordlist_hash(pipeline_config.english_stopwords),
            "java": _wordlist_hash(pipeline_config.java_stopwords),
        },
        seed=seed,
        corpus_fingerprint=corpus_fingerprint,
        tool_versions={
            "workbench": workbench.__version__,
            "python": platform.python_version(),
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "kernel_backend": kernels.get_backend(),
        },
    )


def load_manifest(path: str | Path) -> RunManifest:
    """Read a manifest back and verify its stored hash still matches its
    contents (guards against hand-edited result directories)."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"unreadable manifest {path}: {exc}") from exc
    stored = doc.pop("manifest_hash", None)
    try:
        m = RunManifest(**doc)
    except TypeError as exc:
        raise DataError(f"manifest {path} has unexpected fields: {exc}") from exc
    if stored != m.hash:
        raise DataError(
            f"manifest {path} failed integrity check: stored hash {stored!r} "
            f"!= recomputed {m.hash!r}"
        )
    return m
