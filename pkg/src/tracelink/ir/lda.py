"""Collapsed Gibbs sampler for latent Dirichlet allocation.

Fixed iteration budget, fixed seed, single sequential scan per sweep, so the
per-document topic distributions are fully deterministic. Documents that lost
every token in preprocessing get an all-zero topic row (they should not look
similar to anything).
"""

from __future__ import annotations

import numpy as np

from ..corpus import TokenStream


def lda_topic_distributions(token_streams: list[TokenStream], topics: int,
                            seed: int, alpha: float | None = None,
                            beta: float = 0.01, iterations: int = 500) -> np.ndarray:
    """Run collapsed Gibbs sampling; return a |docs| x topics distribution matrix."""
    if topics < 2:
        raise ValueError("LDA needs at least 2 topics")
    if alpha is None:
        alpha = 50.0 / topics

    vocab: dict[str, int] = {}
    doc_of = []
    word_of = []
    for d, stream in enumerate(token_streams):
        for tok in stream.tokens:
            if tok not in vocab:
                vocab[tok] = len(vocab)
            doc_of.append(d)
            word_of.append(vocab[tok])
    if not vocab:
        raise ValueError("LDA over an empty vocabulary")

    n_docs = len(token_streams)
    n_words = len(vocab)
    n_tokens = len(doc_of)
    doc_of = np.asarray(doc_of, dtype=np.intp)
    word_of = np.asarray(word_of, dtype=np.intp)

    rng = np.random.default_rng(seed)
    z = rng.integers(0, topics, size=n_tokens)

    n_dk = np.zeros((n_docs, topics))
    n_wk = np.zeros((n_words, topics))   # word-major so the hot slice is contiguous
    n_k = np.zeros(topics)
    np.add.at(n_dk, (doc_of, z), 1.0)
    np.add.at(n_wk, (word_of, z), 1.0)
    np.add.at(n_k, z, 1.0)

    v_beta = n_words * beta
    for _ in range(iterations):
        u = rng.random(n_tokens)
        for t in range(n_tokens):
            d = doc_of[t]
            w = word_of[t]
            k = z[t]
            n_dk[d, k] -= 1.0
            n_wk[w, k] -= 1.0
            n_k[k] -= 1.0

            p = (n_dk[d] + alpha) * (n_wk[w] + beta) / (n_k + v_beta)
            cdf = np.cumsum(p)
            k = int(np.searchsorted(cdf, u[t] * cdf[-1], side="right"))
            if k >= topics:            # guard against fp edge at the last bin
                k = topics - 1

            z[t] = k
            n_dk[d, k] += 1.0
            n_wk[w, k] += 1.0
            n_k[k] += 1.0

    lengths = n_dk.sum(axis=1, keepdims=True)
    theta = (n_dk + alpha) / (lengths + topics * alpha)
    theta[lengths[:, 0] == 0] = 0.0
    return theta
