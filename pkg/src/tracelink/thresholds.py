"""Per-technique binarization thresholds.

Five estimators turn a similarity matrix into a cut point without consulting
any ground truth: mean, median, min-max (min + 0.75 of the range), a sigmoid
fit over the descending-sorted similarity sequence, and link-count estimation
(the value of the E-th largest entry, with E guessed from artifact counts).
All of them depend only on the multiset of entries.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .ir.engines import DEFAULT_THRESHOLD_METHODS, SimilarityMatrix

THRESHOLD_METHODS = ("mean", "median", "min_max", "sigmoid_est", "link_est")

MIN_MAX_FRACTION = 0.75    # links are sparse, so the cut sits in the upper range
LINK_COUNT_FACTOR = 2.0    # estimated links per artifact on the larger side


@dataclass(frozen=True)
class ThresholdSet:
    values: dict[str, float]    # technique tag -> threshold

    def __getitem__(self, tag: str) -> float:
        return self.values[tag]

    def __contains__(self, tag: str) -> bool:
        return tag in self.values

    def as_dict(self) -> dict[str, float]:
        return dict(self.values)


def derive_link_count_estimate(n_sources: int, n_targets: int,
                               factor: float = LINK_COUNT_FACTOR) -> int:
    """Guess the number of true links from artifact counts alone."""
    if n_sources < 1 or n_targets < 1:
        raise ValueError("artifact counts must be >= 1")
    estimate = int(round(factor * max(n_sources, n_targets)))
    return max(1, min(estimate, n_sources * n_targets))


def _sigmoid_inflection_rank(sorted_desc: np.ndarray) -> float:
    """Least-squares fit of L / (1 + exp(-k (r - r0))) over (rank, similarity).

    The curve is decreasing in rank, so k < 0. L is solved in closed form for
    each (k, r0) candidate; the search is a coarse grid followed by one local
    refinement. Returns the inflection rank r0 clamped into the index range.
    """
    n = sorted_desc.size
    ranks = np.arange(n, dtype=np.float64)

    def sse(k, r0):
        f = 1.0 / (1.0 + np.exp(-k * (ranks - r0)))
        denom = float(f @ f)
        if denom <= 0:
            return np.inf, 0.0
        L = float(f @ sorted_desc) / denom
        resid = sorted_desc - L * f
        return float(resid @ resid), L

    k_grid = [-50.0 / n, -20.0 / n, -10.0 / n, -5.0 / n, -2.0 / n, -1.0 / n, -0.5 / n]
    r_grid = np.linspace(0, n - 1, num=min(n, 25))
    best = (np.inf, -10.0 / n, (n - 1) / 2.0)
    for k in k_grid:
        for r0 in r_grid:
            err, _ = sse(k, r0)
            if err < best[0]:
                best = (err, k, float(r0))

    _, k_best, r_best = best
    span = max(1.0, (n - 1) / len(r_grid))
    for r0 in np.linspace(max(0.0, r_best - span), min(n - 1.0, r_best + span), num=17):
        for k in (k_best * 0.5, k_best, k_best * 2.0):
            err, _ = sse(k, r0)
            if err < best[0]:
                best = (err, k, float(r0))
    return min(max(best[2], 0.0), n - 1.0)


def estimate_threshold(matrix: SimilarityMatrix, method: str,
                       link_count_hint: int | None = None,
                       min_max_fraction: float = MIN_MAX_FRACTION,
                       link_count_factor: float = LINK_COUNT_FACTOR) -> float:
    """Estimate the cut point k for one technique's similarity matrix."""
    if method not in THRESHOLD_METHODS:
        raise ValueError(f"unknown threshold method {method!r}")
    entries = matrix.values.ravel()
    if entries.size == 0:
        raise ValueError("cannot estimate a threshold for an empty matrix")

    lo, hi = float(entries.min()), float(entries.max())
    if hi - lo <= 0:
        warnings.warn(
            f"degenerate similarity matrix for {matrix.technique}: all entries "
            f"equal {lo:.6f}", stacklevel=2,
        )
        return lo

    if method == "mean":
        return float(entries.mean())
    if method == "median":
        return float(np.median(entries))
    if method == "min_max":
        return lo + min_max_fraction * (hi - lo)

    sorted_desc = np.sort(entries)[::-1]
    if method == "sigmoid_est":
        r0 = _sigmoid_inflection_rank(sorted_desc)
        base = int(np.floor(r0))
        frac = r0 - base
        upper = min(base + 1, sorted_desc.size - 1)
        return float((1 - frac) * sorted_desc[base] + frac * sorted_desc[upper])

    # link_est: the E-th largest entry
    if link_count_hint is not None:
        if link_count_hint < 1:
            raise ValueError("link_count_hint must be >= 1")
        e = min(link_count_hint, entries.size)
    else:
        e = derive_link_count_estimate(
            len(matrix.source_ids), len(matrix.target_ids), factor=link_count_factor,
        )
        e = min(e, entries.size)
    return float(sorted_desc[e - 1])


def estimate_all(matrices: dict[str, SimilarityMatrix],
                 methods: dict[str, str] | None = None,
                 link_count_hint: int | None = None,
                 min_max_fraction: float = MIN_MAX_FRACTION,
                 link_count_factor: float = LINK_COUNT_FACTOR) -> ThresholdSet:
    """One threshold per technique, using the default method assignment."""
    assignment = dict(DEFAULT_THRESHOLD_METHODS)
    if methods:
        assignment.update(methods)
    values = {}
    for tag, matrix in matrices.items():
        values[tag] = estimate_threshold(
            matrix, assignment.get(tag, "median"),
            link_count_hint=link_count_hint,
            min_max_fraction=min_max_fraction,
            link_count_factor=link_count_factor,
        )
    return ThresholdSet(values)
