"""Typed documents from raw project and bug-report data.

The Java extractor is a surface scan over a comment- and string-stripped
token stream, not a parse: it recognizes ``import`` statements, type
declarations, method signatures, and capitalized identifiers in type
positions. False positives in ``used_classes`` are tolerated; the
API-name subtraction and downstream min-DF filtering suppress them.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime

from workbench.errors import DataError, ExtractionError
from workbench.pipeline import PipelineConfig, preprocess

__all__ = [
    "ARTIFACT_KINDS",
    "BugReport",
    "Document",
    "ExtractedCodeFacts",
    "GroundTruth",
    "ProjectRecord",
    "bug_ground_truth",
    "bug_query_document",
    "extract_java_facts",
    "extract_project_facts",
    "merge_facts",
    "project_artifact_document",
]

# The five per-project artifact kinds used by the recommender.
ARTIFACT_KINDS = ("description", "readme", "method_class", "import_package", "api")

_JAVA_KEYWORDS = frozenset(
    """abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package private
    protected public return short static strictfp super switch synchronized
    this throw throws transient try void volatile while true false null""".split()
)
_PRIMITIVES = frozenset(
    "void boolean byte char short int long float double".split()
)
_WORD_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*|\S")


@dataclass(frozen=True)
class ProjectRecord:
    """One corpus project: metadata, texts, and Java sources."""

    project_id: str
    categories: frozenset[str]
    description: str
    readme: str
    source_files: tuple[tuple[str, str], ...]  # (path, raw Java text)


@dataclass(frozen=True)
class BugReport:
    report_id: str
    summary: str
    description: str
    report_time: datetime
    fixed_files: frozenset[str]


@dataclass(frozen=True)
class Document:
    """Preprocessed artifact; the unit of indexing and querying."""

    doc_id: str
    kind: str
    tokens: tuple[str, ...]
    missing: bool = False  # source artifact was absent (kept, never dropped)


@dataclass
class ExtractedCodeFacts:
    """Surface-scan results for a body of Java source.

    api_classes is derived: used_classes minus locally declared class
    names (name-level), keeping the survivors' multiplicities.
    """

    declared_methods: Counter = field(default_factory=Counter)
    declared_classes: Counter = field(default_factory=Counter)
    imported_packages: Counter = field(default_factory=Counter)
    used_classes: Counter = field(default_factory=Counter)
    api_classes: Counter = field(default_factory=Counter)


def _derive_api(facts: ExtractedCodeFacts) -> None:
    declared = set(facts.declared_classes)
    facts.api_classes = Counter(
        {n: c for n, c in facts.used_classes.items() if n not in declared}
    )


def merge_facts(parts: list[ExtractedCodeFacts]) -> ExtractedCodeFacts:
    """Combine per-file facts; the API subtraction is re-derived at the
    merged level so project-locally declared classes never count as APIs."""
    out = ExtractedCodeFacts()
    for p in parts:
        out.declared_methods += p.declared_methods
        out.declared_classes += p.declared_classes
        out.imported_packages += p.imported_packages
        out.used_classes += p.used_classes
    _derive_api(out)
    return out


def _strip_comments_and_strings(source: str) -> str:
    """Replace comments and string/char literals with spaces."""
    out = []
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        nxt = source[i + 1] if i + 1 < n else ""
        if ch == "/" and nxt == "/":
            while i < n and source[i] != "\n":
                i += 1
        elif ch == "/" and nxt == "*":
            i += 2
            while i + 1 < n and not (source[i] == "*" and source[i + 1] == "/"):
                i += 1
            i = min(i + 2, n)
            out.append(" ")
        elif ch in "\"'":
            quote = ch
            i += 1
            while i < n and source[i] != quote:
                i += 2 if source[i] == "\\" else 1
            i += 1
            out.append(" ")
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def extract_java_facts(source: str) -> ExtractedCodeFacts:
    """Scan one Java source text for declarations, imports, and type uses.

    Raises ExtractionError for binary input; anything decodable is
    scanned best-effort and need not be compilable.
    """
    if "\x00" in source:
        raise ExtractionError("binary input is not Java source text")

    tokens = _WORD_RE.findall(_strip_comments_and_strings(source))
    facts = ExtractedCodeFacts()
    n = len(tokens)
    i = 0
    angle_depth = 0
    in_supertype_clause = False
    while i < n:
        tok = tokens[i]
        prev = tokens[i - 1] if i > 0 else ""
        nxt = tokens[i + 1] if i + 1 < n else ""

        if tok in ("import", "package") and prev != ".":
            is_import = tok == "import"
            i += 1
            if i < n and tokens[i] == "static":
                i += 1
            name_parts = []
            while i < n and tokens[i] != ";":
                if tokens[i] != ".":
                    name_parts.append(tokens[i])
                i += 1
            if is_import and name_parts:
                if name_parts[-1] == "*":
                    name_parts = name_parts[:-1]
                if name_parts:
                    facts.imported_packages[".".join(name_parts)] += 1
            i += 1
            continue

        if tok in ("class", "interface", "enum") and prev != ".":
            if nxt and (nxt[0].isalpha() or nxt[0] in "_$") and nxt not in _JAVA_KEYWORDS:
                facts.declared_classes[nxt] += 1
            i += 1
            continue

        if tok in ("extends", "implements", "throws"):
            in_supertype_clause = True
            i += 1
            continue
        if tok in ("{", ";", "(", "="):
            in_supertype_clause = False

        if tok == "<" and prev and prev[0].isupper() and prev not in _JAVA_KEYWORDS:
            angle_depth += 1
        elif tok == ">" and angle_depth > 0:
            angle_depth -= 1

        if tok[0].isalpha() or tok[0] in "_$":
            is_word = tok not in _JAVA_KEYWORDS
            if is_word and nxt == "(" and (
                prev in _PRIMITIVES
                or prev in (">", "]")
                or (prev and prev[0].isalpha() and prev not in _JAVA_KEYWORDS)
            ):
                facts.declared_methods[tok] += 1
            if is_word and tok[0].isupper():
                if _is_type_use(prev, nxt, angle_depth, in_supertype_clause, tokens, i):
                    facts.used_classes[tok] += 1
        i += 1

    _derive_api(facts)
    return facts


def _is_type_use(
    prev: str,
    nxt: str,
    angle_depth: int,
    in_supertype_clause: bool,
    tokens: list[str],
    i: int,
) -> bool:
    if prev in ("class", "interface", "enum", "@"):
        return False
    if prev == "new":
        return True
    if in_supertype_clause or angle_depth > 0:
        return True
    # declaration position: `List x`, `Foo bar(`
    if nxt and (nxt[0].isalpha() or nxt[0] in "_$") and nxt not in _JAVA_KEYWORDS:
        return True
    if nxt == "<":
        return True
    # cast: `(Foo) x` / `(Foo) (`
    if prev == "(" and nxt == ")" and i + 2 < len(tokens):
        after = tokens[i + 2]
        if after[0].isalnum() or after[0] in "_$(":
            return True
    return False


def extract_project_facts(p: ProjectRecord) -> ExtractedCodeFacts:
    """Merged facts over all source files, in path-sorted order."""
    parts = []
    for path, text in sorted(p.source_files):
        try:
            parts.append(extract_java_facts(text))
        except ExtractionError as exc:
            raise ExtractionError(f"{path}: {exc}") from exc
    return merge_facts(parts)


def _canonical_names(counter: Counter) -> str:
    return " ".join(sorted(counter.elements()))


def project_artifact_document(
    p: ProjectRecord,
    kind: str,
    config: PipelineConfig,
    facts: ExtractedCodeFacts | None = None,
) -> Document:
    """Build the per-project document for one of the five artifact kinds.

    Missing artifacts yield an empty-token Document flagged ``missing``;
    they stay in the corpus as candidates rather than being dropped.
    """
    if kind not in ARTIFACT_KINDS:
        raise ValueError(f"not a project artifact kind: {kind!r}")
    if kind == "description":
        text = p.description
    elif kind == "readme":
        text = p.readme
    else:
        if facts is None:
            facts = extract_project_facts(p)
        if kind == "method_class":
            text = _canonical_names(facts.declared_methods + facts.declared_classes)
        elif kind == "import_package":
            text = _canonical_names(facts.imported_packages)
        else:  # api
            text = _canonical_names(facts.api_classes)
    tokens = preprocess(text, kind, config)
    return Document(
        doc_id=f"{p.project_id}:{kind}",
        kind=kind,
        tokens=tuple(tokens),
        missing=not text.strip(),
    )


def bug_query_document(r: BugReport, config: PipelineConfig) -> Document:
    """Bug-report query: summary and description concatenated, processed
    under the mixed text+code branch (reports quote identifiers)."""
    if not r.summary.strip() and not r.description.strip():
        raise DataError(f"bug report {r.report_id}: summary and description both empty")
    text = f"{r.summary}\n{r.description}"
    return Document(
        doc_id=r.report_id,
        kind="bug_report",
        tokens=tuple(preprocess(text, "bug_report", config)),
    )


def bug_ground_truth(r: BugReport, snapshot: set[str]) -> frozenset[str]:
    """Relevant files for a report: fix-touched files restricted to the
    before-fix snapshot. Files added by the fix are absent from the
    snapshot and therefore drop out. May be empty; the caller excludes
    such queries from evaluation with a logged reason."""
    return frozenset(r.fixed_files) & frozenset(snapshot)


@dataclass
class GroundTruth:
    """query_id -> relevant doc ids, with R >= 1 for evaluated queries."""

    relevant: dict[str, frozenset[str]]

    def total_relevant(self, query_id: str) -> int:
        return len(self.relevant[query_id])

    def __contains__(self, query_id: str) -> bool:
        return query_id in self.relevant
