"""End-to-end inference runs: corpus -> matrices -> thresholds -> posteriors.

Pairs are laid out row-major (source order x target order). Every pair is
self-contained: the Beta fit, the MAP search and the sampler all run
per-element (the sampler from a per-pair seed), so results are identical for
any worker count or chunking.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus, TermWeightMatrix, TokenStream, build_term_weights, \
    load_corpus, tokenize_corpus
from .hbn import (
    EPSILON_CLAMP,
    FeedbackRecord,
    ModelParams,
    Observations,
    adjust_mean_with_feedback,
    fit_beta_mle_batch,
    map_estimate_batch,
    normalize_similarities,
    pair_seed,
    sample_posterior,
)
from .ir.engines import TECHNIQUES, SimilarityMatrix, TechniqueConfig, \
    compute_all, _cosine_cross
from .store import ProjectConfig, new_run_manifest
from .thresholds import ThresholdSet, estimate_all
from .transitive import derive_related_sources, mixture_weights

SIGMOID_SLOPE = 10.0


@dataclass
class PipelineData:
    """Everything derived from a corpus that inference needs, all deterministic."""
    corpus: Corpus
    token_streams: list[TokenStream]
    tfidf: TermWeightMatrix
    term_probs: TermWeightMatrix
    matrices: dict[str, SimilarityMatrix]
    thresholds: ThresholdSet
    raw: np.ndarray          # P x 10 raw similarities
    observation_bits: np.ndarray   # P x 10 ints
    fit_mu: np.ndarray       # P
    fit_nu: np.ndarray       # P
    pairs: list[tuple[str, str]] = field(default_factory=list)

    @property
    def n_sources(self) -> int:
        return len(self.corpus.sources)

    @property
    def n_targets(self) -> int:
        return len(self.corpus.targets)


def prepare(corpus: Corpus, technique: TechniqueConfig | None = None,
            threshold_overrides: dict[str, str] | None = None,
            link_count_hint: int | None = None) -> PipelineData:
    """Compute matrices, thresholds, observations and the per-pair Beta fits."""
    streams = tokenize_corpus(corpus)
    tfidf = build_term_weights(streams, "tfidf")
    term_probs = build_term_weights(streams, "term_probability")
    matrices = compute_all(corpus, streams, tfidf, term_probs, technique)
    thresholds = estimate_all(matrices, methods=threshold_overrides,
                              link_count_hint=link_count_hint)

    n_s, n_t = len(corpus.sources), len(corpus.targets)
    raw = np.stack([matrices[t].values.reshape(n_s * n_t) for t in TECHNIQUES], axis=1)
    cuts = np.array([thresholds[t] for t in TECHNIQUES])
    bits = (raw >= cuts[None, :]).astype(np.int64)

    medians = np.array([np.median(matrices[t].values) for t in TECHNIQUES])
    normalized = normalize_similarities(raw, medians[None, :], SIGMOID_SLOPE)
    alpha, beta = fit_beta_mle_batch(normalized)
    total = alpha + beta
    fit_mu = alpha / total
    fit_nu = alpha * beta / (total * total * (total + 1.0))

    pairs = [(s, t) for s in corpus.source_ids for t in corpus.target_ids]
    return PipelineData(
        corpus=corpus, token_streams=streams, tfidf=tfidf, term_probs=term_probs,
        matrices=matrices, thresholds=thresholds, raw=raw, observation_bits=bits,
        fit_mu=fit_mu, fit_nu=fit_nu, pairs=pairs,
    )


def source_source_vsm(data: PipelineData) -> SimilarityMatrix:
    """VSM similarity among all source documents (for related-requirement contexts)."""
    rows = data.tfidf.weights[[data.tfidf.rows[a.id] for a in data.corpus.sources]]
    ids = tuple(data.corpus.source_ids)
    return SimilarityMatrix("VSM", _cosine_cross(rows, rows), ids, ids)


def transitive_means(data: PipelineData, params: ModelParams, tau: float,
                     cap: int) -> np.ndarray:
    """mu_trans per pair: the rho-blend of the related-source mixture and fit mu.

    Sources with no qualifying neighbours keep their stage 1 mean unchanged.
    """
    n_s, n_t = data.n_sources, data.n_targets
    mu = data.fit_mu.reshape(n_s, n_t)
    ss = source_source_vsm(data)
    out = mu.copy()
    index_of = {sid: i for i, sid in enumerate(data.corpus.source_ids)}
    for x, sid in enumerate(data.corpus.source_ids):
        context = derive_related_sources(ss, sid, tau=tau, cap=cap)
        if not context.related:
            continue
        weights = mixture_weights(context)
        related_rows = np.array([index_of[other] for other in context.related_ids])
        mix = weights @ mu[related_rows]
        out[x] = params.rho * mix + (1.0 - params.rho) * mu[x]
    return out.reshape(n_s * n_t)


def _feedback_by_pair(records) -> dict[tuple[str, str], list[FeedbackRecord]]:
    grouped: dict[tuple[str, str], list[FeedbackRecord]] = {}
    for rec in records:
        grouped.setdefault((rec.source_id, rec.target_id), []).append(rec)
    for lst in grouped.values():
        lst.sort(key=lambda r: r.timestamp)   # stable: ties keep log order
    return grouped


def stage_base_means(data: PipelineData, stage: int, params: ModelParams,
                     tau: float = 0.65, cap: int = 5) -> np.ndarray:
    """Pre-feedback prior mean per pair: fit mu, or the transitive blend."""
    if stage not in (1, 2, 3, 4):
        raise ValueError(f"unknown stage {stage}")
    if stage in (3, 4):
        base = transitive_means(data, params, tau=tau, cap=cap)
        if stage == 3 and params.stage3_literal_shift:
            base = base + params.sigma
        return base
    return data.fit_mu.copy()


def apply_feedback_means(base: np.ndarray, data: PipelineData, feedback,
                         params: ModelParams) -> np.ndarray:
    """Fold each pair's records, in timestamp order, onto its base mean."""
    grouped = _feedback_by_pair(feedback or ())
    pair_index = {pair: i for i, pair in enumerate(data.pairs)}
    out = base.copy()
    for pair, recs in grouped.items():
        if pair not in pair_index:
            raise KeyError(f"feedback for unknown pair {pair!r}")
        i = pair_index[pair]
        m = out[i]
        for rec in recs:
            m = adjust_mean_with_feedback(m, rec.confidence, params.sigma,
                                          params.epsilon)
        out[i] = m
    return out


def stage_means(data: PipelineData, stage: int, params: ModelParams,
                feedback=(), tau: float = 0.65, cap: int = 5,
                ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(pre-feedback base, prior mean, prior variance) arrays for a stage."""
    if stage in (2, 4) and feedback is None:
        raise ValueError(f"stage {stage} requires a feedback log")
    base = stage_base_means(data, stage, params, tau=tau, cap=cap)
    if stage in (2, 4):
        mean = apply_feedback_means(base, data, feedback, params)
    else:
        mean = base
    if stage == 1:
        variance = data.fit_nu.copy()
    else:
        variance = data.fit_nu + params.prior_sd ** 2
    return base, mean, variance


def _prior_shapes(mean: np.ndarray, variance: np.ndarray,
                  epsilon: float = EPSILON_CLAMP) -> tuple[np.ndarray, np.ndarray]:
    mean = np.clip(mean, epsilon, 1.0 - epsilon)
    limit = mean * (1.0 - mean)
    variance = np.minimum(variance, 0.99 * limit)
    f = limit / variance - 1.0
    return mean * f, (1.0 - mean) * f


def estimate_posteriors(data: PipelineData, stage: int, params: ModelParams,
                        feedback=(), tau: float = 0.65, cap: int = 5,
                        workers: int = 1) -> list[dict]:
    """Posterior estimates for every pair, as plain result records."""
    base, mean, variance = stage_means(data, stage, params, feedback=feedback,
                                       tau=tau, cap=cap)
    prior_a, prior_b = _prior_shapes(mean, variance, params.epsilon)
    successes = data.observation_bits.sum(axis=1)
    n_obs = data.observation_bits.shape[1]
    post_a = prior_a + successes
    post_b = prior_b + (n_obs - successes)

    n_pairs = len(data.pairs)
    means_out = np.empty(n_pairs)
    vars_out = np.empty(n_pairs)

    def run_chunk(start: int, stop: int):
        if params.sampler == "map":
            means_out[start:stop] = map_estimate_batch(
                post_a[start:stop], post_b[start:stop], params.epsilon)
            total = post_a[start:stop] + post_b[start:stop]
            vars_out[start:stop] = (post_a[start:stop] * post_b[start:stop]
                                    / (total * total * (total + 1.0)))
        else:
            for i in range(start, stop):
                sid, tid = data.pairs[i]
                obs = Observations(
                    bits=tuple(int(b) for b in data.observation_bits[i]),
                    thresholds=tuple(float(data.thresholds[t]) for t in TECHNIQUES),
                    techniques=TECHNIQUES,
                )
                m, v = sample_posterior(
                    (float(prior_a[i]), float(prior_b[i])), obs, params,
                    seed=pair_seed(params.seed, sid, tid),
                )
                means_out[i] = m
                vars_out[i] = v

    chunk = max(1, (n_pairs + workers - 1) // workers)
    bounds = [(i, min(i + chunk, n_pairs)) for i in range(0, n_pairs, chunk)]
    if workers <= 1 or len(bounds) <= 1:
        for start, stop in bounds:
            run_chunk(start, stop)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda b: run_chunk(*b), bounds))

    cuts = [float(data.thresholds[t]) for t in TECHNIQUES]
    eps = params.epsilon
    records = []
    for i, (sid, tid) in enumerate(data.pairs):
        records.append({
            "source_id": sid,
            "target_id": tid,
            "stage": stage,
            "mean": float(means_out[i]),
            "variance": float(vars_out[i]),
            "method": params.sampler,
            "observations": [int(b) for b in data.observation_bits[i]],
            "thresholds": cuts,
            "base_mean": float(min(max(base[i], eps), 1.0 - eps)),
            "fit_mu": float(data.fit_mu[i]),
            "fit_nu": float(data.fit_nu[i]),
        })
    return records


def run_inference(config: ProjectConfig, stage: int, feedback=(),
                  workers: int = 1, link_count_hint: int | None = None):
    """Load, prepare and estimate; returns (manifest, result records, data)."""
    started = time.time()
    corpus = load_corpus(config.source_dir, config.target_dir, config.pair_kind)
    data = prepare(corpus, config.technique,
                   threshold_overrides=config.threshold_overrides or None,
                   link_count_hint=link_count_hint)
    records = estimate_posteriors(
        data, stage, config.model, feedback=feedback,
        tau=config.tau, cap=config.transitive_cap, workers=workers,
    )
    manifest = new_run_manifest(config, stage, data.thresholds.as_dict(),
                                workers=workers)
    elapsed = time.time() - started
    return manifest, records, data, elapsed
