"""Four-stage Bayesian link inference.

The model treats each (source, target) pair independently. Ten similarity
scores are thresholded into binary link observations (a Bernoulli likelihood),
while the same ten scores, sigmoid-normalized around each technique's median,
are fitted with a Beta distribution whose mean/variance parameterize the
trace-link prior. Later stages only move the prior mean:

  stage 1  prior mean = fitted mu, variance = fitted nu
  stage 2  mean shifted by reviewer confidence c: reward (1-m)*sigma*c and
           penalty m*sigma*(c-1), applied sequentially in timestamp order
  stage 3  mean replaced by the transitive blend rho*mix + (1-rho)*mu
  stage 4  stages 2 and 3 composed: the feedback shift is applied on top of
           the transitive mean

For stages 2-4 the mean itself carries a tight normal uncertainty (sd 0.01);
it is collapsed to its expectation and its variance folded into the prior via
the law of total variance, so an unadjusted stage 2-4 prior degenerates to the
stage 1 prior. The posterior over the observations stays conjugate, which
gives an exact oracle for both estimation backends (golden-section MAP and
random-walk Metropolis on logit(theta)).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import polygamma, psi

from .thresholds import ThresholdSet

EPSILON_CLAMP = 1e-3
VARIANCE_FLOOR = 1e-6


@dataclass(frozen=True)
class Observations:
    """Binary link indications, one per technique, from thresholded similarities."""
    bits: tuple[int, ...]
    thresholds: tuple[float, ...]
    techniques: tuple[str, ...]

    @property
    def count(self) -> int:
        return len(self.bits)

    @property
    def successes(self) -> int:
        return int(sum(self.bits))


@dataclass(frozen=True)
class PriorFit:
    """Beta fit to the normalized similarities of one pair."""
    alpha: float
    beta: float
    mu: float
    nu: float
    normalized: tuple[float, ...] = ()


@dataclass(frozen=True)
class FeedbackRecord:
    source_id: str
    target_id: str
    confidence: float
    reviewer: str
    timestamp: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("feedback confidence must lie in [0, 1]")


@dataclass
class ModelParams:
    sigma: float = 0.5            # belief factor for reviewer feedback
    rho: float = 0.5              # belief factor for transitive evidence
    prior_sd: float = 0.01        # sd of the normal carrying an adjusted mean
    epsilon: float = EPSILON_CLAMP
    sampler: str = "map"          # "map" | "mcmc"
    mcmc_samples: int = 5000
    burn_in: int = 1000
    seed: int = 7
    stage3_literal_shift: bool = False   # adds the constant-sum reward/penalty

    def __post_init__(self):
        if not 0.0 <= self.sigma <= 1.0 or not 0.0 <= self.rho <= 1.0:
            raise ValueError("belief factors must lie in [0, 1]")
        if self.sampler not in ("map", "mcmc"):
            raise ValueError(f"unknown sampler {self.sampler!r}")
        if self.mcmc_samples < 1000:
            raise ValueError("mcmc_samples must be >= 1000")


@dataclass(frozen=True)
class LinkEstimate:
    source_id: str
    target_id: str
    mean: float
    variance: float
    method: str
    stage: int


def pair_seed(global_seed: int, source_id: str, target_id: str) -> int:
    """Stable per-pair RNG seed so results never depend on worker scheduling."""
    digest = hashlib.sha256(
        f"{global_seed}\x1f{source_id}\x1f{target_id}".encode()
    ).digest()
    return int.from_bytes(digest[:8], "little")


# ---------------------------------------------------------------------------
# Stage 1: normalization and Beta fit
# ---------------------------------------------------------------------------

def normalize_similarities(raw_sims, medians, slope: float = 10.0) -> np.ndarray:
    """Sigmoid centered on each technique's matrix-wide median."""
    raw = np.asarray(raw_sims, dtype=np.float64)
    med = np.asarray(medians, dtype=np.float64)
    return 1.0 / (1.0 + np.exp(-slope * (raw - med)))


def beta_from_mean_var(mu: float, nu: float) -> tuple[float, float]:
    """Beta shape parameters for a given mean and variance.

    nu must be below mu*(1-mu); values at or above are clamped to 99% of it.
    """
    if not 0.0 < mu < 1.0:
        raise ValueError("mean must lie strictly inside (0, 1)")
    limit = mu * (1.0 - mu)
    if nu >= limit:
        nu = 0.99 * limit
    if nu <= 0:
        raise ValueError("variance must be positive")
    f = limit / nu - 1.0
    return mu * f, (1.0 - mu) * f


def beta_mean_var(alpha: float, beta: float) -> tuple[float, float]:
    total = alpha + beta
    mean = alpha / total
    var = alpha * beta / (total * total * (total + 1.0))
    return mean, var


def fit_beta_mle_batch(values: np.ndarray, max_iter: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Maximum-likelihood Beta fit per row of `values` (each row one sample set).

    Newton iterations on (alpha, beta) from a method-of-moments start. Rows
    whose sample variance is below the floor, and rows where Newton fails to
    converge, fall back to moments with the variance floored. Every row is
    fitted independently, so batch composition cannot change a result.
    """
    x = np.clip(np.asarray(values, dtype=np.float64), EPSILON_CLAMP, 1.0 - EPSILON_CLAMP)
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite values in Beta fit input")
    n = x.shape[1]
    mean = x.mean(axis=1)
    var = x.var(axis=1)

    floored = np.maximum(var, VARIANCE_FLOOR)
    limit = mean * (1.0 - mean)
    mom_var = np.minimum(floored, 0.99 * limit)
    f = limit / mom_var - 1.0
    alpha = mean * f
    beta = (1.0 - mean) * f

    degenerate = var < VARIANCE_FLOOR
    log_x = np.log(x).mean(axis=1)
    log_1mx = np.log1p(-x).mean(axis=1)

    a, b = alpha.copy(), beta.copy()
    active = ~degenerate
    for _ in range(max_iter):
        if not active.any():
            break
        ai, bi = a[active], b[active]
        total = ai + bi
        g1 = psi(total) - psi(ai) + log_x[active]
        g2 = psi(total) - psi(bi) + log_1mx[active]
        pg_total = polygamma(1, total)
        h11 = pg_total - polygamma(1, ai)
        h22 = pg_total - polygamma(1, bi)
        det = h11 * h22 - pg_total * pg_total
        safe = np.abs(det) > 1e-300
        da = np.where(safe, (g1 * h22 - g2 * pg_total) / det, 0.0)
        db = np.where(safe, (g2 * h11 - g1 * pg_total) / det, 0.0)
        new_a = ai - da
        new_b = bi - db
        # halve steps that would leave the positive quadrant
        bad = (new_a <= 1e-4) | (new_b <= 1e-4)
        for _ in range(30):
            if not bad.any():
                break
            da = np.where(bad, da * 0.5, da)
            db = np.where(bad, db * 0.5, db)
            new_a = ai - da
            new_b = bi - db
            bad = (new_a <= 1e-4) | (new_b <= 1e-4)
        new_a = np.maximum(new_a, 1e-4)
        new_b = np.maximum(new_b, 1e-4)
        idx = np.where(active)[0]
        a[idx] = new_a
        b[idx] = new_b
        converged = (np.abs(g1) < 1e-10) & (np.abs(g2) < 1e-10)
        active[idx[converged]] = False

    # any row still active did not converge: keep its moments estimate
    still = np.where(active)[0]
    a[still] = alpha[still]
    b[still] = beta[still]
    a[degenerate] = alpha[degenerate]
    b[degenerate] = beta[degenerate]
    return a, b


def fit_theta_ir(normalized_sims) -> PriorFit:
    """Fit the similarity hyperprior for one pair from its normalized scores."""
    values = np.asarray(normalized_sims, dtype=np.float64)[None, :]
    a, b = fit_beta_mle_batch(values)
    alpha, beta = float(a[0]), float(b[0])
    mu, nu = beta_mean_var(alpha, beta)
    return PriorFit(alpha=alpha, beta=beta, mu=mu, nu=nu,
                    normalized=tuple(float(v) for v in normalized_sims))


def make_observations(raw_sims, thresholds: ThresholdSet, techniques) -> Observations:
    """Binary observations: 1 iff the raw similarity reaches the threshold."""
    bits = []
    cuts = []
    for sim, tag in zip(raw_sims, techniques):
        if tag not in thresholds:
            raise KeyError(f"no threshold for technique {tag!r}")
        k = thresholds[tag]
        bits.append(1 if sim >= k else 0)
        cuts.append(float(k))
    return Observations(bits=tuple(bits), thresholds=tuple(cuts),
                        techniques=tuple(techniques))


# ---------------------------------------------------------------------------
# Posterior estimation
# ---------------------------------------------------------------------------

def analytic_conjugate_posterior(alpha: float, beta: float,
                                 obs: Observations) -> tuple[float, float]:
    """Exact Beta posterior over Bernoulli observations (the estimator oracle)."""
    if alpha <= 0 or beta <= 0:
        raise ValueError("Beta parameters must be positive")
    s = obs.successes
    return beta_mean_var(alpha + s, beta + obs.count - s)


def _posterior_shapes(prior: tuple[float, float], obs: Observations) -> tuple[float, float]:
    alpha, beta = prior
    if alpha <= 0 or beta <= 0:
        raise ValueError("Beta parameters must be positive")
    s = obs.successes
    return alpha + s, beta + obs.count - s


def map_estimate(prior: tuple[float, float], obs: Observations,
                 epsilon: float = EPSILON_CLAMP) -> float:
    """Golden-section maximization of the log posterior on [eps, 1 - eps].

    For the conjugate model this equals the Beta mode (a-1)/(a+b-2) whenever
    both posterior shapes exceed 1, and the clamped boundary otherwise.
    """
    a_post, b_post = _posterior_shapes(prior, obs)
    ca, cb = a_post - 1.0, b_post - 1.0

    def neg_log_post(theta: float) -> float:
        return -(ca * math.log(theta) + cb * math.log1p(-theta))

    if not math.isfinite(neg_log_post(0.5)):
        raise ValueError("non-finite posterior density")

    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = epsilon, 1.0 - epsilon
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = neg_log_post(x1), neg_log_post(x2)
    for _ in range(80):
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = neg_log_post(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = neg_log_post(x2)
    return (lo + hi) / 2.0


def map_estimate_batch(alpha_post: np.ndarray, beta_post: np.ndarray,
                       epsilon: float = EPSILON_CLAMP) -> np.ndarray:
    """Vectorized golden-section over posterior shape arrays (same math as above).

    Both probe points are re-evaluated every iteration; each element's bracket
    shrinks independently, so chunking cannot change any result.
    """
    ca = np.asarray(alpha_post, dtype=np.float64) - 1.0
    cb = np.asarray(beta_post, dtype=np.float64) - 1.0

    def neg_log_post(theta):
        return -(ca * np.log(theta) + cb * np.log1p(-theta))

    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    lo = np.full_like(ca, epsilon)
    hi = np.full_like(ca, 1.0 - epsilon)
    for _ in range(80):
        x1 = hi - inv_phi * (hi - lo)
        x2 = lo + inv_phi * (hi - lo)
        left = neg_log_post(x1) < neg_log_post(x2)
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
    return (lo + hi) / 2.0


def _softplus(x: float) -> float:
    if x > 35.0:
        return x
    if x < -35.0:
        return 0.0
    return math.log1p(math.exp(x))


def sample_posterior(prior: tuple[float, float], obs: Observations,
                     params: ModelParams, seed: int | None = None) -> tuple[float, float]:
    """Random-walk Metropolis on logit(theta); returns sample mean and variance.

    Asymptotically exact for the conjugate target. The step size adapts
    toward a 44% acceptance rate during burn-in and is frozen afterwards, so
    a fixed seed yields a bit-identical estimate.
    """
    a_post, b_post = _posterior_shapes(prior, obs)
    # includes the logit-space Jacobian theta*(1-theta)
    ca, cb = float(a_post), float(b_post)

    rng = np.random.default_rng(params.seed if seed is None else seed)
    total = params.burn_in + params.mcmc_samples
    increments = rng.standard_normal(total)
    uniforms = rng.random(total)

    z = math.log(ca / cb)    # start near the posterior mean
    logp = -ca * _softplus(-z) - cb * _softplus(z)
    step = 2.4 / math.sqrt(ca * cb / (ca + cb))   # rough posterior scale in z
    accepted_window = 0
    accepted_sampling = 0

    mean_acc = 0.0
    m2_acc = 0.0
    kept = 0
    for i in range(total):
        z_prop = z + step * increments[i]
        logp_prop = -ca * _softplus(-z_prop) - cb * _softplus(z_prop)
        if logp_prop - logp >= 0 or uniforms[i] < math.exp(logp_prop - logp):
            z = z_prop
            logp = logp_prop
            accepted_window += 1
            if i >= params.burn_in:
                accepted_sampling += 1
        if i < params.burn_in and (i + 1) % 50 == 0:
            rate = accepted_window / 50.0
            step = min(max(step * math.exp(0.6 * (rate - 0.44)), 1e-3), 20.0)
            accepted_window = 0
        if i >= params.burn_in:
            theta = 1.0 / (1.0 + math.exp(-z))
            kept += 1
            delta = theta - mean_acc
            mean_acc += delta / kept
            m2_acc += delta * (theta - mean_acc)

    if accepted_sampling / params.mcmc_samples < 0.01:
        raise RuntimeError(
            "MCMC acceptance rate below 1% after adaptation: degenerate model"
        )
    variance = m2_acc / kept if kept > 1 else 0.0
    return mean_acc, variance


# ---------------------------------------------------------------------------
# Stage adjustments
# ---------------------------------------------------------------------------

def adjust_mean_with_feedback(base_mean: float, confidence: float, sigma: float,
                              epsilon: float = EPSILON_CLAMP) -> float:
    """One feedback application: reward (1-m)*sigma*c, penalty m*sigma*(c-1).

    The reviewer distribution is collapsed to its expected confidence c. The
    result is base_mean + sigma*(c - base_mean), clamped inside (0, 1).
    """
    m, c = base_mean, confidence
    reward = (1.0 - m) * sigma * c
    penalty = m * sigma * (c - 1.0)
    return min(max(m + reward + penalty, epsilon), 1.0 - epsilon)


def fold_feedback(base_mean: float, records, sigma: float,
                  epsilon: float = EPSILON_CLAMP) -> float:
    """Apply records sequentially in timestamp order.

    The sort is stable, so records sharing a timestamp keep their input
    (log) order and a replay reproduces the live fold exactly.
    """
    mean = base_mean
    for rec in sorted(records, key=lambda r: r.timestamp):
        mean = adjust_mean_with_feedback(mean, rec.confidence, sigma, epsilon)
    return mean


def transitive_mixture_mean(component_means, weights, stage1_mu: float,
                            rho: float) -> float:
    """Blend the mixture of transitive component means with the stage 1 mean.

    Empty component list leaves the stage 1 mean untouched.
    """
    means = list(component_means)
    w = list(weights)
    if len(means) != len(w):
        raise ValueError("component/weight length mismatch")
    if not means:
        return stage1_mu
    total = sum(w)
    if not math.isclose(total, 1.0, abs_tol=1e-9):
        raise ValueError("mixture weights must sum to 1")
    mix = sum(wi * mi for wi, mi in zip(w, means))
    return rho * mix + (1.0 - rho) * stage1_mu


def stage_prior(stage: int, fit: PriorFit, params: ModelParams,
                feedback=(), transitive_mean: float | None = None,
                ) -> tuple[float, float]:
    """Prior (alpha, beta) for the requested stage.

    Stages 2-4 collapse the tight normal on the adjusted mean to its
    expectation and add its variance to the stage 1 fit's variance.
    """
    if stage not in (1, 2, 3, 4):
        raise ValueError(f"unknown stage {stage}")
    eps = params.epsilon
    if stage == 1:
        mean, var = fit.mu, fit.nu
    else:
        mu_trans = fit.mu if transitive_mean is None else transitive_mean
        if stage == 2:
            mean = fold_feedback(fit.mu, feedback, params.sigma, eps)
        elif stage == 3:
            mean = mu_trans
            if params.stage3_literal_shift:
                # reward sigma*(1-mu) plus penalty sigma*mu sum to sigma
                mean = mu_trans + params.sigma
        else:
            mean = fold_feedback(mu_trans, feedback, params.sigma, eps)
        var = fit.nu + params.prior_sd ** 2
    mean = min(max(mean, eps), 1.0 - eps)
    return beta_from_mean_var(mean, var)


def infer_link(source_id: str, target_id: str, stage: int, fit: PriorFit,
               obs: Observations, params: ModelParams, feedback=(),
               transitive_mean: float | None = None,
               seed: int | None = None) -> LinkEstimate:
    """Full single-pair inference for one stage; returns the posterior estimate."""
    prior = stage_prior(stage, fit, params, feedback=feedback,
                        transitive_mean=transitive_mean)
    if params.sampler == "mcmc":
        mean, variance = sample_posterior(prior, obs, params, seed=seed)
    else:
        mean = map_estimate(prior, obs, params.epsilon)
        _, variance = analytic_conjugate_posterior(prior[0], prior[1], obs)
    return LinkEstimate(source_id=source_id, target_id=target_id,
                        mean=float(mean), variance=float(variance),
                        method=params.sampler, stage=stage)
