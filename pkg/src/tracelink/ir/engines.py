"""Similarity engines over the term-weight matrices.

Every engine maps a corpus to an |S| x |T| matrix of values in [0, 1].
Documents that end up with an all-zero representation (nothing survived
preprocessing) score 0 against everything rather than raising.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..corpus import Corpus, TermWeightMatrix, TokenStream
from .lda import lda_topic_distributions
from .nmf import nmf_factorize

TECHNIQUES = (
    "VSM", "LSI", "JS", "LDA", "NMF",
    "VSM+LDA", "JS+LDA", "VSM+NMF", "JS+NMF", "VSM+JS",
)

# Per-technique threshold estimator assignment used by default.
DEFAULT_THRESHOLD_METHODS = {
    "VSM": "link_est",
    "LSI": "link_est",
    "JS": "min_max",
    "LDA": "min_max",
    "NMF": "median",
    "VSM+LDA": "link_est",
    "JS+LDA": "link_est",
    "VSM+NMF": "link_est",
    "JS+NMF": "link_est",
    "VSM+JS": "min_max",
}


@dataclass(frozen=True)
class SimilarityMatrix:
    technique: str
    values: np.ndarray            # |S| x |T|, entries in [0, 1]
    source_ids: tuple[str, ...]
    target_ids: tuple[str, ...]

    def __post_init__(self):
        v = self.values
        if v.shape != (len(self.source_ids), len(self.target_ids)):
            raise ValueError(
                f"similarity matrix shape {v.shape} does not match id lists "
                f"({len(self.source_ids)} x {len(self.target_ids)})"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError(f"{self.technique}: non-finite similarity values")
        if v.size and (v.min() < -1e-12 or v.max() > 1 + 1e-12):
            raise ValueError(f"{self.technique}: similarity values outside [0, 1]")

    def value(self, source_id: str, target_id: str) -> float:
        return float(
            self.values[self.source_ids.index(source_id), self.target_ids.index(target_id)]
        )


@dataclass
class TechniqueConfig:
    """Knobs for the latent-space engines and the pairwise combination.

    Rank defaults depend on corpus size and are resolved at compute time:
    lsi_rank -> min(100, docs - 1), nmf_rank -> min(50, docs - 1).
    """
    lsi_rank: int | None = None
    lda_topics: int = 20
    nmf_rank: int | None = None
    lambda_weight: float = 0.5    # weight of the first technique in combined pairs
    seed: int = 7
    lda_alpha: float | None = None   # None -> 50 / lda_topics
    lda_beta: float = 0.01
    lda_iterations: int = 500
    nmf_iterations: int = 200

    def __post_init__(self):
        if not 0.0 <= self.lambda_weight <= 1.0:
            raise ValueError("lambda_weight must lie in [0, 1]")
        if self.lda_topics < 2:
            raise ValueError("lda_topics must be >= 2")


def _cosine_cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cosine similarity of each row of a against each row of b; zero rows -> 0."""
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    dots = a @ b.T
    denom = np.outer(na, nb)
    sims = np.divide(dots, denom, out=np.zeros_like(dots), where=denom > 0)
    return np.clip(sims, 0.0, 1.0)


def _split_rows(matrix: np.ndarray, weights: TermWeightMatrix, corpus: Corpus):
    src = np.array([weights.rows[a.id] for a in corpus.sources])
    tgt = np.array([weights.rows[a.id] for a in corpus.targets])
    return matrix[src], matrix[tgt]


def vsm_similarity(tfidf: TermWeightMatrix, corpus: Corpus) -> SimilarityMatrix:
    """Cosine over tf-idf vectors."""
    if tfidf.row_kind != "tfidf":
        raise ValueError("vsm_similarity expects a tfidf matrix")
    src, tgt = _split_rows(tfidf.weights, tfidf, corpus)
    return SimilarityMatrix("VSM", _cosine_cross(src, tgt),
                            tuple(corpus.source_ids), tuple(corpus.target_ids))


def lsi_similarity(tfidf: TermWeightMatrix, rank: int, corpus: Corpus) -> SimilarityMatrix:
    """Cosine in the rank-k latent document space of a truncated SVD."""
    if rank < 1:
        raise ValueError("lsi rank must be >= 1")
    X = tfidf.weights
    rank = min(rank, min(X.shape))
    try:
        u, s, _ = np.linalg.svd(X, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"SVD failed to converge: {exc}") from exc
    docs = u[:, :rank] * s[:rank]
    src, tgt = _split_rows(docs, tfidf, corpus)
    return SimilarityMatrix("LSI", _cosine_cross(src, tgt),
                            tuple(corpus.source_ids), tuple(corpus.target_ids))


def _jsd_base2(p: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Jensen-Shannon divergence (base 2) of one distribution p against rows of Q."""
    m = 0.5 * (p[None, :] + Q)
    with np.errstate(divide="ignore", invalid="ignore"):
        left = p[None, :] * (np.log2(np.maximum(p[None, :], 1e-300)) - np.log2(np.maximum(m, 1e-300)))
        right = Q * (np.log2(np.maximum(Q, 1e-300)) - np.log2(np.maximum(m, 1e-300)))
    left[np.broadcast_to(p[None, :] == 0, left.shape)] = 0.0
    right[Q == 0] = 0.0
    return 0.5 * left.sum(axis=1) + 0.5 * right.sum(axis=1)


def js_similarity(term_probs: TermWeightMatrix, corpus: Corpus) -> SimilarityMatrix:
    """1 - JSD(p, q) with base-2 logs, so the result lives in [0, 1]."""
    if term_probs.row_kind != "term_probability":
        raise ValueError("js_similarity expects term_probability rows")
    W = term_probs.weights
    sums = W.sum(axis=1)
    nonzero = sums > 0
    if np.any(np.abs(sums[nonzero] - 1.0) > 1e-9):
        raise ValueError("term_probability rows must sum to 1")
    src, tgt = _split_rows(W, term_probs, corpus)
    src_ok = src.sum(axis=1) > 0
    tgt_ok = tgt.sum(axis=1) > 0
    sims = np.zeros((src.shape[0], tgt.shape[0]))
    for i in range(src.shape[0]):
        if not src_ok[i]:
            continue
        jsd = _jsd_base2(src[i], tgt)
        row = 1.0 - jsd
        row[~tgt_ok] = 0.0
        sims[i] = row
    return SimilarityMatrix("JS", np.clip(sims, 0.0, 1.0),
                            tuple(corpus.source_ids), tuple(corpus.target_ids))


def lda_similarity(token_streams: list[TokenStream], topics: int, seed: int,
                   corpus: Corpus, alpha: float | None = None, beta: float = 0.01,
                   iterations: int = 500) -> SimilarityMatrix:
    """Cosine over per-document topic distributions from collapsed Gibbs sampling."""
    theta = lda_topic_distributions(
        token_streams, topics=topics, seed=seed,
        alpha=alpha, beta=beta, iterations=iterations,
    )
    rows = {s.artifact_id: i for i, s in enumerate(token_streams)}
    src = theta[[rows[a.id] for a in corpus.sources]]
    tgt = theta[[rows[a.id] for a in corpus.targets]]
    return SimilarityMatrix("LDA", _cosine_cross(src, tgt),
                            tuple(corpus.source_ids), tuple(corpus.target_ids))


def nmf_similarity(tfidf: TermWeightMatrix, rank: int, seed: int, corpus: Corpus,
                   iterations: int = 200) -> SimilarityMatrix:
    """Cosine over NMF coefficient rows (documents in the rank-k basis)."""
    X = tfidf.weights
    rank = max(1, min(rank, min(X.shape)))
    W, _, _ = nmf_factorize(X, rank=rank, seed=seed, iterations=iterations)
    src, tgt = _split_rows(W, tfidf, corpus)
    return SimilarityMatrix("NMF", _cosine_cross(src, tgt),
                            tuple(corpus.source_ids), tuple(corpus.target_ids))


def min_max_normalize(values: np.ndarray, technique: str = "") -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if hi - lo <= 0:
        warnings.warn(
            f"degenerate similarity matrix ({technique or 'unnamed'}): all entries "
            f"equal {lo:.6f}; normalized to 0.5", stacklevel=2,
        )
        return np.full_like(values, 0.5)
    return (values - lo) / (hi - lo)


def combine(a: SimilarityMatrix, b: SimilarityMatrix, lam: float) -> SimilarityMatrix:
    """Min-max normalize each matrix over its own entries, then blend with weight lam."""
    if a.values.shape != b.values.shape or a.source_ids != b.source_ids \
            or a.target_ids != b.target_ids:
        raise ValueError("combine requires matrices over the same pairs")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("combination weight must lie in [0, 1]")
    blended = lam * min_max_normalize(a.values, a.technique) \
        + (1.0 - lam) * min_max_normalize(b.values, b.technique)
    return SimilarityMatrix(f"{a.technique}+{b.technique}", blended,
                            a.source_ids, a.target_ids)


def compute_all(corpus: Corpus, token_streams: list[TokenStream],
                tfidf: TermWeightMatrix, term_probs: TermWeightMatrix,
                config: TechniqueConfig | None = None) -> dict[str, SimilarityMatrix]:
    """All ten technique matrices, keyed by tag, in the canonical order."""
    cfg = config or TechniqueConfig()
    n_docs = len(corpus.documents)
    lsi_rank = cfg.lsi_rank if cfg.lsi_rank is not None else min(100, n_docs - 1)
    nmf_rank = cfg.nmf_rank if cfg.nmf_rank is not None else min(50, n_docs - 1)

    vsm = vsm_similarity(tfidf, corpus)
    lsi = lsi_similarity(tfidf, max(1, lsi_rank), corpus)
    js = js_similarity(term_probs, corpus)
    lda = lda_similarity(
        token_streams, cfg.lda_topics, cfg.seed, corpus,
        alpha=cfg.lda_alpha, beta=cfg.lda_beta, iterations=cfg.lda_iterations,
    )
    nmf = nmf_similarity(tfidf, nmf_rank, cfg.seed, corpus, iterations=cfg.nmf_iterations)

    lam = cfg.lambda_weight
    matrices = {
        "VSM": vsm,
        "LSI": lsi,
        "JS": js,
        "LDA": lda,
        "NMF": nmf,
        "VSM+LDA": combine(vsm, lda, lam),
        "JS+LDA": combine(js, lda, lam),
        "VSM+NMF": combine(vsm, nmf, lam),
        "JS+NMF": combine(js, nmf, lam),
        "VSM+JS": combine(vsm, js, lam),
    }
    assert tuple(matrices) == TECHNIQUES
    return matrices


def serialize_matrices(matrices: dict[str, SimilarityMatrix]) -> str:
    """Columnar text format: one row per pair, six decimal places per technique."""
    tags = list(matrices)
    first = matrices[tags[0]]
    lines = ["source_id\ttarget_id\t" + "\t".join(tags)]
    for i, sid in enumerate(first.source_ids):
        for j, tid in enumerate(first.target_ids):
            cells = "\t".join(f"{matrices[t].values[i, j]:.6f}" for t in tags)
            lines.append(f"{sid}\t{tid}\t{cells}")
    return "\n".join(lines) + "\n"
