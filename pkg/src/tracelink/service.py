"""HTTP review service over a completed inference run.

Read handlers work off immutable run results plus a feedback overlay; writes
go through a single lock that appends to the feedback log and recomputes only
the touched pair (MAP, so the response is immediate and deterministic).
Replaying the log against the same run reproduces every served probability.
"""

from __future__ import annotations

import threading
import time
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .corpus import PAIR_KINDS, load_corpus
from .hbn import (
    FeedbackRecord,
    ModelParams,
    Observations,
    beta_from_mean_var,
    fold_feedback,
    map_estimate,
)
from .ir.engines import TECHNIQUES
from .store import append_feedback, load_feedback, load_results

BANDS = ("probably_linked", "unsure", "probably_not_linked")

LIKERT_SCALE = {
    "strongly_agree": 1.0,
    "agree": 0.75,
    "unsure": 0.5,
    "disagree": 0.25,
    "strongly_disagree": 0.0,
}

UNLINKED_THRESHOLD = 0.4


def band_of(probability: float) -> str:
    if probability >= 0.7:
        return "probably_linked"
    if probability >= 0.4:
        return "unsure"
    return "probably_not_linked"


class RunState:
    """One loaded run: records by pair, current probabilities, feedback counts."""

    def __init__(self, run_dir, feedback_log=None):
        self.run_dir = Path(run_dir)
        self.manifest, records = load_results(self.run_dir)
        self.feedback_log = Path(feedback_log) if feedback_log else \
            self.run_dir.parent.parent / "feedback.jsonl"
        self.records = {(r["source_id"], r["target_id"]): r for r in records}
        self.pair_order = [(r["source_id"], r["target_id"]) for r in records]
        self.pair_kind = self.manifest["config"]["pair_kind"]

        model_cfg = dict(self.manifest["config"].get("model", {}))
        model_cfg["sampler"] = "map"
        self.params = ModelParams(**model_cfg)

        self._lock = threading.Lock()
        self.probabilities: dict[tuple[str, str], float] = {
            pair: rec["mean"] for pair, rec in self.records.items()
        }
        self.feedback: dict[tuple[str, str], list[FeedbackRecord]] = {}
        for rec in load_feedback(self.feedback_log):
            self.feedback.setdefault((rec.source_id, rec.target_id), []).append(rec)
        for pair in self.feedback:
            self.probabilities[pair] = self._recompute(pair)

        self._corpus = None

    def corpus(self):
        if self._corpus is None:
            cfg = self.manifest["config"]
            self._corpus = load_corpus(cfg["source_dir"], cfg["target_dir"],
                                       cfg["pair_kind"])
        return self._corpus

    def _recompute(self, pair) -> float:
        """Feedback fold over the pair's pre-feedback mean, then MAP."""
        rec = self.records[pair]
        mean = fold_feedback(rec["base_mean"], self.feedback.get(pair, ()),
                             self.params.sigma, self.params.epsilon)
        variance = rec["fit_nu"] + self.params.prior_sd ** 2
        prior = beta_from_mean_var(
            min(max(mean, self.params.epsilon), 1.0 - self.params.epsilon), variance)
        obs = Observations(bits=tuple(rec["observations"]),
                           thresholds=tuple(rec["thresholds"]),
                           techniques=TECHNIQUES)
        return map_estimate(prior, obs, self.params.epsilon)

    def submit(self, source_id: str, target_id: str, likert: str,
               reviewer: str) -> dict:
        pair = (source_id, target_id)
        if pair not in self.records:
            raise KeyError(f"unknown pair ({source_id}, {target_id})")
        confidence = LIKERT_SCALE[likert]
        with self._lock:
            record = FeedbackRecord(source_id=source_id, target_id=target_id,
                                    confidence=confidence, reviewer=reviewer,
                                    timestamp=time.time())
            append_feedback(self.feedback_log, record)
            self.feedback.setdefault(pair, []).append(record)
            probability = self._recompute(pair)
            self.probabilities[pair] = probability
        return {
            "source_id": source_id,
            "target_id": target_id,
            "probability": probability,
            "band": band_of(probability),
            "feedback_count": len(self.feedback[pair]),
        }

    def link_rows(self, band: str | None = None) -> list[dict]:
        rows = []
        for pair in self.pair_order:
            p = self.probabilities[pair]
            b = band_of(p)
            if band and b != band:
                continue
            rows.append({
                "source_id": pair[0],
                "target_id": pair[1],
                "probability": p,
                "band": b,
                "feedback_count": len(self.feedback.get(pair, ())),
            })
        rows.sort(key=lambda r: (-r["probability"], r["source_id"], r["target_id"]))
        return rows

    def unlinked_artifacts(self, threshold: float) -> list[str]:
        max_by_artifact: dict[str, float] = {}
        for (sid, tid), p in self.probabilities.items():
            max_by_artifact[sid] = max(max_by_artifact.get(sid, 0.0), p)
            max_by_artifact[tid] = max(max_by_artifact.get(tid, 0.0), p)
        return sorted(a for a, best in max_by_artifact.items() if best < threshold)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def create_app(run_dir, feedback_log=None, static_dir=None) -> FastAPI:
    state = RunState(run_dir, feedback_log=feedback_log)
    app = FastAPI(title="tracelink review service")
    app.state.run = state

    @app.get("/api/links")
    def list_links(type: str | None = None, band: str | None = None,
                   page: int = 1, page_size: int = 50):
        if band is not None and band not in BANDS:
            return _error(400, "bad_filter", f"unknown band {band!r}")
        if type is not None and type not in PAIR_KINDS and type != "not_linked":
            return _error(400, "bad_filter", f"unknown type filter {type!r}")
        if page < 1 or page_size < 1:
            return _error(400, "bad_page", "page and page_size must be >= 1")
        if type is not None and type != state.pair_kind:
            rows = []
        else:
            rows = state.link_rows(band=band)
        start = (page - 1) * page_size
        return {
            "total": len(rows),
            "page": page,
            "page_size": page_size,
            "links": rows[start:start + page_size],
        }

    @app.post("/api/feedback")
    async def submit_feedback(request: Request):
        body = await request.json()
        for key in ("source_id", "target_id", "likert"):
            if key not in body:
                return _error(400, "bad_request", f"missing field {key!r}")
        if body["likert"] not in LIKERT_SCALE:
            return _error(400, "bad_likert",
                          f"likert must be one of {sorted(LIKERT_SCALE)}")
        try:
            return state.submit(body["source_id"], body["target_id"],
                                body["likert"], str(body.get("reviewer", "anonymous")))
        except KeyError as exc:
            return _error(404, "unknown_pair", str(exc))

    @app.get("/api/artifacts/unlinked")
    def unlinked(threshold: float = UNLINKED_THRESHOLD):
        return {"threshold": threshold,
                "artifacts": state.unlinked_artifacts(threshold)}

    @app.get("/api/artifacts/{artifact_id:path}")
    def artifact_text(artifact_id: str):
        for artifact in state.corpus().documents:
            if artifact.id == artifact_id:
                return {"id": artifact.id, "kind": artifact.kind,
                        "text": artifact.raw_text}
        return _error(404, "unknown_artifact", f"no artifact {artifact_id!r}")

    @app.get("/api/run")
    def run_summary():
        bands = {b: 0 for b in BANDS}
        for p in state.probabilities.values():
            bands[band_of(p)] += 1
        return {
            "run_id": state.manifest["run_id"],
            "stage": state.manifest["stage"],
            "pair_kind": state.pair_kind,
            "pairs": len(state.pair_order),
            "bands": bands,
            "thresholds": state.manifest["thresholds"],
        }

    if static_dir and Path(static_dir).is_dir():
        static_path = Path(static_dir)

        @app.get("/")
        def index():
            return FileResponse(static_path / "index.html")

        app.mount("/", StaticFiles(directory=static_path), name="static")

    return app
