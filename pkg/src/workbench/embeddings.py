"""Word-embedding table and the text word2vec loader.

File format: first line ``<count> <dim>``, then one ``word v1 ... vd``
per line, space-separated decimal floats. Lookup misses are reported to
callers (skipped-token accounting), never fabricated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from workbench.errors import DataError

__all__ = ["EmbeddingTable", "load_word2vec_text"]


@dataclass
class EmbeddingTable:
    dim: int
    words: dict[str, int]  # word -> row in matrix
    matrix: np.ndarray  # float64 [n_words, dim]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def vector(self, word: str) -> np.ndarray:
        return self.matrix[self.words[word]]

    def vectors_for(self, tokens) -> tuple[np.ndarray, list[str]]:
        """Rows for every embeddable token (multiplicity preserved, in
        token order) plus the list of skipped out-of-vocabulary tokens."""
        rows = []
        skipped = []
        for t in tokens:
            idx = self.words.get(t)
            if idx is None:
                skipped.append(t)
            else:
                rows.append(idx)
        if rows:
            return self.matrix[rows], skipped
        return np.empty((0, self.dim)), skipped

    @classmethod
    def from_dict(cls, entries: dict[str, "list[float] | np.ndarray"]) -> "EmbeddingTable":
        if not entries:
            return cls(dim=0, words={}, matrix=np.empty((0, 0)))
        dims = {len(v) for v in entries.values()}
        if len(dims) != 1:
            raise DataError(f"inconsistent embedding dimensions: {sorted(dims)}")
        words = {w: i for i, w in enumerate(entries)}
        matrix = np.array([np.asarray(v, dtype=np.float64) for v in entries.values()])
        return cls(dim=dims.pop(), words=words, matrix=matrix)


def load_word2vec_text(path: str | Path) -> EmbeddingTable:
    path = Path(path)
    try:
        text = path.read_bytes().decode("utf-8", errors="replace")
    except OSError as exc:
        raise DataError(f"unreadable embedding file {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise DataError(f"embedding file {path} is empty")
    header = lines[0].split()
    if len(header) != 2:
        raise DataError(
            f"embedding file {path}: first line must be '<count> <dim>', "
            f"got {lines[0]!r}"
        )
    try:
        count, dim = int(header[0]), int(header[1])
    except ValueError as exc:
        raise DataError(f"embedding file {path}: bad header {lines[0]!r}") from exc
    if dim < 1:
        raise DataError(f"embedding file {path}: dimension must be positive")

    words: dict[str, int] = {}
    rows = np.empty((count, dim))
    n = 0
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != dim + 1:
            raise DataError(
                f"embedding file {path} line {lineno}: expected {dim + 1} "
                f"fields, got {len(parts)}"
            )
        word = parts[0]
        if word in words:
            raise DataError(f"embedding file {path} line {lineno}: duplicate word {word!r}")
        if n >= count:
            raise DataError(f"embedding file {path}: more vectors than the declared {count}")
        try:
            rows[n] = [float(x) for x in parts[1:]]
        except ValueError as exc:
            raise DataError(f"embedding file {path} line {lineno}: {exc}") from exc
        words[word] = n
        n += 1
    if n != count:
        raise DataError(
            f"embedding file {path}: header declares {count} vectors, found {n}"
        )
    return EmbeddingTable(dim=dim, words=words, matrix=rows)
