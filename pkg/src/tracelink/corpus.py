"""Artifact loading, text preprocessing, and term-weight matrices.

Artifacts are plain files: one file per requirement, use case, source file or
test. Source code is indexed as raw text (identifiers, comments and strings
alike); there is no parsing. Preprocessing runs camelCase/underscore splitting,
lowercasing, non-alphabetic stripping, stop-word removal and Porter stemming,
in that order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .porter import stem_stable
from .stopwords import STOP_WORDS

ARTIFACT_KINDS = ("requirement", "use_case", "source_code", "test")
PAIR_KINDS = ("req_src", "req_test", "uc_src")

_CAMEL_RE = re.compile(
    r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+"
)
_NON_ALPHA_RE = re.compile(r"[^a-z]+")


@dataclass(frozen=True)
class Artifact:
    id: str
    kind: str
    path: str
    raw_text: str


@dataclass(frozen=True)
class Corpus:
    sources: list[Artifact]
    targets: list[Artifact]
    pair_kind: str

    def __post_init__(self):
        if not self.sources or not self.targets:
            raise ValueError("empty artifact set: corpus needs sources and targets")
        source_ids = {a.id for a in self.sources}
        target_ids = {a.id for a in self.targets}
        if len(source_ids) != len(self.sources) or len(target_ids) != len(self.targets):
            raise ValueError("duplicate artifact id within a corpus")
        overlap = source_ids & target_ids
        if overlap:
            raise ValueError(f"artifact ids appear in both roles: {sorted(overlap)[:3]}")

    @property
    def documents(self) -> list[Artifact]:
        return list(self.sources) + list(self.targets)

    @property
    def source_ids(self) -> list[str]:
        return [a.id for a in self.sources]

    @property
    def target_ids(self) -> list[str]:
        return [a.id for a in self.targets]


@dataclass(frozen=True)
class TokenStream:
    artifact_id: str
    tokens: tuple[str, ...]


@dataclass
class TermWeightMatrix:
    vocabulary: dict[str, int]
    rows: dict[str, int]          # artifact id -> row index
    weights: np.ndarray           # |docs| x |terms|
    row_kind: str                 # "tfidf" | "term_probability"
    doc_ids: list[str] = field(default_factory=list)

    def row(self, artifact_id: str) -> np.ndarray:
        return self.weights[self.rows[artifact_id]]


def split_identifier(text: str) -> list[str]:
    """Split camelCase, PascalCase, digits and underscores into word chunks."""
    chunks = []
    for piece in re.split(r"[_\W]+", text):
        if piece:
            chunks.extend(_CAMEL_RE.findall(piece))
    return chunks


def preprocess_text(raw: str) -> tuple[str, ...]:
    """Full pipeline: split -> lowercase -> alpha-only -> stop words -> stem.

    Total function; returns an empty tuple when nothing survives. Stemming is
    applied to a fixed point so the pipeline is idempotent on its own output.
    Tokens shorter than two characters after stemming are dropped.
    """
    tokens = []
    for chunk in split_identifier(raw):
        word = _NON_ALPHA_RE.sub("", chunk.lower())
        if not word or word in STOP_WORDS:
            continue
        stemmed = stem_stable(word)
        if len(stemmed) >= 2 and stemmed not in STOP_WORDS:
            tokens.append(stemmed)
    return tuple(tokens)


def tokenize_corpus(corpus: Corpus) -> list[TokenStream]:
    return [
        TokenStream(a.id, preprocess_text(a.raw_text)) for a in corpus.documents
    ]


def _load_dir(directory: Path, kind: str) -> list[Artifact]:
    if not directory.is_dir():
        raise FileNotFoundError(f"artifact directory does not exist: {directory}")
    artifacts = []
    for path in sorted(p for p in directory.rglob("*") if p.is_file()):
        rel = path.relative_to(directory).as_posix()
        text = path.read_text(encoding="utf-8")
        if not text.strip():
            raise ValueError(f"artifact file is empty: {path}")
        artifacts.append(Artifact(id=rel, kind=kind, path=str(path), raw_text=text))
    if not artifacts:
        raise ValueError(f"empty artifact set: no files under {directory}")
    return artifacts


_SOURCE_KIND = {"req_src": "requirement", "req_test": "requirement", "uc_src": "use_case"}
_TARGET_KIND = {"req_src": "source_code", "req_test": "test", "uc_src": "source_code"}


def load_corpus(source_dir, target_dir, pair_kind: str) -> Corpus:
    """Load one artifact per file; ids are paths relative to their directory.

    Ordering is lexicographic by relative path, so two loads of the same tree
    are identical.
    """
    if pair_kind not in PAIR_KINDS:
        raise ValueError(f"unknown pair_kind {pair_kind!r}; expected one of {PAIR_KINDS}")
    sources = _load_dir(Path(source_dir), _SOURCE_KIND[pair_kind])
    targets = _load_dir(Path(target_dir), _TARGET_KIND[pair_kind])
    target_ids = {a.id for a in targets}
    if any(a.id in target_ids for a in sources):
        # same relative path on both sides: disambiguate with a role prefix
        sources = [
            Artifact(f"src:{a.id}", a.kind, a.path, a.raw_text) for a in sources
        ]
        targets = [
            Artifact(f"tgt:{a.id}", a.kind, a.path, a.raw_text) for a in targets
        ]
    return Corpus(sources=sources, targets=targets, pair_kind=pair_kind)


def build_term_weights(token_streams: list[TokenStream], scheme: str = "tfidf") -> TermWeightMatrix:
    """Build a |docs| x |terms| weight matrix over the union vocabulary.

    tfidf uses raw counts times ln(N/df); df >= 1 for every vocabulary term by
    construction, so no smoothing is needed. term_probability rows are
    count/total and sum to 1; rows for empty documents stay all-zero.
    """
    if scheme not in ("tfidf", "term_probability"):
        raise ValueError(f"unknown weighting scheme {scheme!r}")
    if not token_streams or all(not s.tokens for s in token_streams):
        raise ValueError("cannot build term weights: all token streams are empty")

    vocabulary: dict[str, int] = {}
    for s in token_streams:
        for t in s.tokens:
            if t not in vocabulary:
                vocabulary[t] = len(vocabulary)

    n_docs = len(token_streams)
    counts = np.zeros((n_docs, len(vocabulary)), dtype=np.float64)
    for i, s in enumerate(token_streams):
        for t in s.tokens:
            counts[i, vocabulary[t]] += 1.0

    if scheme == "term_probability":
        totals = counts.sum(axis=1, keepdims=True)
        weights = np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)
    else:
        df = (counts > 0).sum(axis=0).astype(np.float64)
        idf = np.log(n_docs / df)
        weights = counts * idf[None, :]

    doc_ids = [s.artifact_id for s in token_streams]
    rows = {doc_id: i for i, doc_id in enumerate(doc_ids)}
    if len(rows) != n_docs:
        raise ValueError("duplicate artifact id among token streams")
    return TermWeightMatrix(
        vocabulary=vocabulary, rows=rows, weights=weights,
        row_kind=scheme, doc_ids=doc_ids,
    )
