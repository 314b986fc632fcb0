"""Ground-truth evaluation and the simulated-feedback protocol.

The precision/recall curve sweeps every distinct score value in descending
order; tied scores form a single retrieval step. Precision at an empty
retrieval set is 1 by convention so curves start well-defined. Average
precision is the recall-weighted sum of precisions over those steps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .hbn import FeedbackRecord

Pair = tuple[str, str]


@dataclass(frozen=True)
class PRPoint:
    threshold: float
    precision: float
    recall: float


@dataclass(frozen=True)
class PRCurve:
    points: tuple[PRPoint, ...]


@dataclass
class EvalReport:
    tag: str
    ap: float
    curve: PRCurve
    std_err: tuple[float, ...] = ()

    def to_json(self) -> str:
        return json.dumps({
            "tag": self.tag,
            "ap": self.ap,
            "curve": [
                {"threshold": p.threshold, "precision": p.precision, "recall": p.recall}
                for p in self.curve.points
            ],
            "std_err": list(self.std_err),
        }, indent=2)

    def to_text_table(self) -> str:
        lines = [f"# {self.tag}  AP={self.ap:.4f}",
                 "threshold\tprecision\trecall\tstd_err"]
        errs = list(self.std_err) or [float("nan")] * len(self.curve.points)
        for p, e in zip(self.curve.points, errs):
            lines.append(f"{p.threshold:.6f}\t{p.precision:.6f}\t{p.recall:.6f}\t{e:.6f}")
        return "\n".join(lines) + "\n"


def load_answer_file(path) -> set[Pair]:
    """One "source_id<TAB>target_id" pair per line."""
    answers = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected source<TAB>target")
            answers.add((parts[0], parts[1]))
    return answers


def precision_recall_curve(scores: dict[Pair, float], answers: set[Pair]) -> PRCurve:
    """P/R at each distinct score threshold, descending; ties retrieved together."""
    if not answers:
        raise ValueError("empty answer set")
    missing = answers - scores.keys()
    if missing:
        raise ValueError(f"answers reference unscored pairs, e.g. {sorted(missing)[0]}")
    pairs = list(scores.items())
    pairs.sort(key=lambda item: -item[1])
    n_answers = len(answers)

    points = []
    tp = 0
    retrieved = 0
    i = 0
    while i < len(pairs):
        threshold = pairs[i][1]
        while i < len(pairs) and pairs[i][1] == threshold:
            retrieved += 1
            if pairs[i][0] in answers:
                tp += 1
            i += 1
        precision = tp / retrieved if retrieved else 1.0
        points.append(PRPoint(threshold=threshold, precision=precision,
                              recall=tp / n_answers))
    return PRCurve(points=tuple(points))


def average_precision(curve: PRCurve) -> float:
    """Sum of (R_n - R_{n-1}) * P_n over the curve, with R_0 = 0."""
    ap = 0.0
    prev_recall = 0.0
    for p in curve.points:
        ap += (p.recall - prev_recall) * p.precision
        prev_recall = p.recall
    return ap


def evaluate(scores: dict[Pair, float], answers: set[Pair], tag: str = "",
             bootstrap_resamples: int = 0, seed: int = 7) -> EvalReport:
    curve = precision_recall_curve(scores, answers)
    report = EvalReport(tag=tag, ap=average_precision(curve), curve=curve)
    if bootstrap_resamples:
        report.std_err = bootstrap_stderr(scores, answers, curve,
                                          resamples=bootstrap_resamples, seed=seed)
    return report


def bootstrap_stderr(scores: dict[Pair, float], answers: set[Pair], curve: PRCurve,
                     resamples: int = 1000, seed: int = 7) -> tuple[float, ...]:
    """Bootstrap standard error of precision at each curve threshold.

    At each threshold the retrieved pairs yield a 0/1 relevance outcome
    vector; resampling it with replacement gives the spread of the precision
    estimate. Degenerate (all-equal) outcome vectors have zero spread.
    """
    if resamples < 100:
        raise ValueError("bootstrap needs at least 100 resamples")
    ordered = sorted(scores.items(), key=lambda item: -item[1])
    outcomes = np.array([1.0 if pair in answers else 0.0 for pair, _ in ordered])

    rng = np.random.default_rng(seed)
    errs = []
    for point in curve.points:
        n_retrieved = int(np.searchsorted(
            -np.array([s for _, s in ordered]), -point.threshold, side="right"
        ))
        window = outcomes[:n_retrieved]
        if window.size == 0 or window.min() == window.max():
            errs.append(0.0)
            continue
        draws = rng.integers(0, window.size, size=(resamples, window.size))
        precisions = window[draws].mean(axis=1)
        errs.append(float(precisions.std()))
    return tuple(errs)


def simulate_feedback(answers: set[Pair], all_pairs: list[Pair],
                      sample_rate: float = 0.10, error_rate: float = 0.25,
                      seed: int = 7, reviewer: str = "simulated") -> list[FeedbackRecord]:
    """The simulated reviewer protocol.

    Uniformly samples ceil(sample_rate * |pairs|) pairs; confidence is 0.9 for
    true links and 0.1 otherwise; then an exact error_rate fraction of the
    sampled pairs has its confidence flipped to 1 - c.
    """
    if not 0.0 <= sample_rate <= 1.0 or not 0.0 <= error_rate <= 1.0:
        raise ValueError("rates must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    n_sample = min(math.ceil(sample_rate * len(all_pairs)), len(all_pairs))
    chosen = rng.choice(len(all_pairs), size=n_sample, replace=False)
    flips = set(rng.choice(n_sample, size=int(round(error_rate * n_sample)),
                           replace=False).tolist()) if n_sample else set()

    records = []
    for order, idx in enumerate(chosen.tolist()):
        pair = all_pairs[idx]
        confidence = 0.9 if pair in answers else 0.1
        if order in flips:
            confidence = 1.0 - confidence
        records.append(FeedbackRecord(
            source_id=pair[0], target_id=pair[1], confidence=confidence,
            reviewer=reviewer, timestamp=float(order),
        ))
    return records
