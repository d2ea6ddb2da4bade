"""Shared preprocessing pipeline for all artifact kinds.

Stage order is fixed: tokenize -> camelCase split -> normalize ->
stopword removal -> Porter stemming. Stopwords are removed before
stemming so the keyword lists match surface forms.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from importlib import resources

from workbench.porter import stem

__all__ = [
    "KINDS",
    "PipelineConfig",
    "default_config",
    "keeps_compound",
    "normalize",
    "pipeline_fingerprint",
    "preprocess",
    "remove_stopwords",
    "split_camel",
    "stem",
    "tokenize",
]

KINDS = (
    "description",
    "readme",
    "method_class",
    "import_package",
    "api",
    "source_file",
    "bug_report",
    "api_description",
)

# Kinds whose documents contain identifiers; splitting keeps the original
# compound token for these. Bug reports and API descriptions quote
# identifiers, so they take the code branch too.
_TEXT_KINDS = frozenset({"description", "readme"})

_TOKEN_RE = re.compile(r"[A-Za-z0-9]+")
_CAMEL_RE = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z]*|[a-z]+|[0-9]+")
_DIGITS = str.maketrans("", "", "0123456789")


def _load_wordlist(name: str) -> frozenset[str]:
    text = resources.files("workbench.data").joinpath(name).read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


@dataclass(frozen=True)
class PipelineConfig:
    """Stopword sets and the compound-token policy."""

    english_stopwords: frozenset[str]
    java_stopwords: frozenset[str]
    keep_compound_for_code: bool = True

    @property
    def stopwords(self) -> frozenset[str]:
        return self.english_stopwords | self.java_stopwords


def default_config() -> PipelineConfig:
    return PipelineConfig(
        english_stopwords=_load_wordlist("stopwords_en.txt"),
        java_stopwords=_load_wordlist("stopwords_java.txt"),
    )


def keeps_compound(kind: str, config: PipelineConfig) -> bool:
    if kind not in KINDS:
        raise ValueError(f"unknown document kind: {kind!r}")
    return config.keep_compound_for_code and kind not in _TEXT_KINDS


def tokenize(text: str) -> list[str]:
    """Split raw text into alphanumeric runs, discarding non-ASCII."""
    ascii_text = text.encode("ascii", errors="ignore").decode("ascii")
    return _TOKEN_RE.findall(ascii_text)


def split_camel(token: str, keep_compound: bool = False) -> list[str]:
    """Split a camelCase token at lower-to-upper and acronym boundaries.

    XMLParser -> [XML, Parser]; with keep_compound the original token is
    prepended whenever the split produced more than one unit.
    """
    parts = _CAMEL_RE.findall(token)
    if keep_compound and len(parts) > 1:
        return [token, *parts]
    return parts


def normalize(tokens: list[str]) -> list[str]:
    """Strip digits, lowercase, drop tokens that become empty."""
    out = []
    for tok in tokens:
        tok = tok.translate(_DIGITS).lower()
        if tok:
            out.append(tok)
    return out


def remove_stopwords(tokens: list[str], config: PipelineConfig) -> list[str]:
    stops = config.stopwords
    return [t for t in tokens if t not in stops]


def preprocess(text: str, kind: str, config: PipelineConfig) -> list[str]:
    """Run the full pipeline for one document of the given kind."""
    keep = keeps_compound(kind, config)
    split = []
    for tok in tokenize(text):
        split.extend(split_camel(tok, keep_compound=keep))
    tokens = remove_stopwords(normalize(split), config)
    return [stem(t) for t in tokens]


def pipeline_fingerprint(config: PipelineConfig) -> str:
    """Stable hash of everything that influences pipeline output."""
    h = hashlib.sha256()
    h.update(b"pipeline-v1\n")
    h.update(str(config.keep_compound_for_code).encode())
    for name in ("english_stopwords", "java_stopwords"):
        h.update(b"\n" + name.encode() + b"\n")
        h.update("\n".join(sorted(getattr(config, name))).encode())
    return h.hexdigest()
