"""Transitive evidence: related requirements and test-execution relations.

For a source S_x, the related set is every other source whose similarity
reaches tau, sorted by similarity (ties broken by id), truncated to the cap.
Mixture weights are the similarity-proportional expectation of a Dirichlet
whose concentrations follow the similarities. Execution relations come from a
precomputed coverage file; running tests is out of scope here.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ir.engines import SimilarityMatrix

DEFAULT_TAU = 0.65
DEFAULT_PI = 5


@dataclass(frozen=True)
class TransitiveContext:
    source_id: str
    related: tuple[tuple[str, float], ...]   # (source id, similarity), descending
    tau: float
    cap: int

    @property
    def related_ids(self) -> tuple[str, ...]:
        return tuple(sid for sid, _ in self.related)


@dataclass(frozen=True)
class ExecutionRelation:
    test_id: str
    target_id: str
    strength: str = "strong"


def derive_related_sources(source_source_sims: SimilarityMatrix, source_id: str,
                           tau: float = DEFAULT_TAU, cap: int = DEFAULT_PI,
                           ) -> TransitiveContext:
    """All other sources with similarity >= tau, best first, at most `cap`."""
    sims = source_source_sims
    if sims.source_ids != sims.target_ids:
        raise ValueError("expected a square source-source similarity matrix")
    if source_id not in sims.source_ids:
        raise KeyError(f"unknown source id {source_id!r}")
    row = sims.values[sims.source_ids.index(source_id)]
    qualifying = [
        (other, float(row[j]))
        for j, other in enumerate(sims.target_ids)
        if other != source_id and row[j] >= tau
    ]
    qualifying.sort(key=lambda item: (-item[1], item[0]))
    return TransitiveContext(source_id=source_id, related=tuple(qualifying[:cap]),
                             tau=tau, cap=cap)


def mixture_weights(context: TransitiveContext) -> np.ndarray:
    """Similarity-proportional weights on the simplex."""
    if not context.related:
        raise ValueError("cannot derive mixture weights for an empty context")
    sims = np.array([s for _, s in context.related], dtype=np.float64)
    total = sims.sum()
    if total <= 0:
        return np.full(sims.size, 1.0 / sims.size)
    return sims / total


def augment_with_test_components(weights: np.ndarray, test_count: int) -> np.ndarray:
    """Extend req-req mixture weights with strongly-executing test components.

    Each test component takes a weight share equal to the mean of the existing
    weights; the combined vector is renormalized onto the simplex. With no
    req-req components the tests share the mass equally.
    """
    if test_count < 0:
        raise ValueError("test_count must be >= 0")
    w = np.asarray(weights, dtype=np.float64)
    if test_count == 0:
        return w
    if w.size == 0:
        return np.full(test_count, 1.0 / test_count)
    share = float(w.mean())
    combined = np.concatenate([w, np.full(test_count, share)])
    return combined / combined.sum()


def load_execution_relations(coverage_file, known_ids: set[str] | None = None,
                             ) -> list[ExecutionRelation]:
    """Parse "test_id<TAB>target_id" lines; duplicates collapse to one relation."""
    path = Path(coverage_file)
    seen: dict[tuple[str, str], ExecutionRelation] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ValueError(f"{path}:{lineno}: malformed coverage line {line!r}")
        test_id, target_id = parts
        if known_ids is not None and (test_id not in known_ids or target_id not in known_ids):
            missing = test_id if test_id not in known_ids else target_id
            raise ValueError(f"{path}:{lineno}: unknown artifact id {missing!r}")
        seen.setdefault((test_id, target_id), ExecutionRelation(test_id, target_id))
    return list(seen.values())
