"""Non-negative matrix factorization with multiplicative updates.

Frobenius objective, seeded non-negative random init, fixed iteration count.
The update rule never increases the objective; `nmf_factorize` returns the
objective trajectory so callers can assert that.
"""

from __future__ import annotations

import numpy as np

_EPS = 1e-9


def nmf_factorize(X: np.ndarray, rank: int, seed: int,
                  iterations: int = 200) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Factor X (m x n, non-negative) into W (m x rank) @ H (rank x n).

    Returns (W, H, objectives) where objectives[i] is the Frobenius error
    after update i (objectives[0] is the initial error).
    """
    if np.any(X < 0):
        raise ValueError("NMF input must be non-negative")
    if rank < 1:
        raise ValueError("NMF rank must be >= 1")
    m, n = X.shape
    rng = np.random.default_rng(seed)
    scale = np.sqrt(max(X.mean(), _EPS) / rank)
    W = scale * rng.random((m, rank)) + _EPS
    H = scale * rng.random((rank, n)) + _EPS

    objectives = np.empty(iterations + 1)
    objectives[0] = np.linalg.norm(X - W @ H)
    for i in range(iterations):
        H *= (W.T @ X) / (W.T @ W @ H + _EPS)
        W *= (X @ H.T) / (W @ (H @ H.T) + _EPS)
        objectives[i + 1] = np.linalg.norm(X - W @ H)
        if not np.isfinite(objectives[i + 1]):
            raise RuntimeError("NMF diverged: objective became non-finite")
    return W, H, objectives
