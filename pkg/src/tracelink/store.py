"""Project configuration and on-disk run state.

Everything is human-readable: project.json for configuration, one directory
per run holding manifest.json plus results.jsonl, and a feedback.jsonl log
that is append-only and is the single source of truth for reviewer input.
Results are written to a temp file and renamed, so interrupted runs never
leave a partial results file visible.
"""

from __future__ import annotations

import json
import os
import tempfile
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import PAIR_KINDS
from .hbn import FeedbackRecord, ModelParams
from .ir.engines import TechniqueConfig
from .transitive import DEFAULT_PI, DEFAULT_TAU


class ConfigError(ValueError):
    pass


@dataclass
class ProjectConfig:
    name: str
    source_dir: Path
    target_dir: Path
    pair_kind: str
    answer_file: Path | None = None
    coverage_file: Path | None = None
    technique: TechniqueConfig = field(default_factory=TechniqueConfig)
    model: ModelParams = field(default_factory=ModelParams)
    tau: float = DEFAULT_TAU
    transitive_cap: int = DEFAULT_PI
    threshold_overrides: dict[str, str] = field(default_factory=dict)
    base_dir: Path = Path(".")

    def to_snapshot(self) -> dict:
        return {
            "name": self.name,
            "source_dir": str(self.source_dir),
            "target_dir": str(self.target_dir),
            "pair_kind": self.pair_kind,
            "answer_file": str(self.answer_file) if self.answer_file else None,
            "coverage_file": str(self.coverage_file) if self.coverage_file else None,
            "technique": vars(self.technique).copy(),
            "model": vars(self.model).copy(),
            "tau": self.tau,
            "transitive_cap": self.transitive_cap,
            "threshold_overrides": dict(self.threshold_overrides),
        }


def _require(condition: bool, message: str):
    if not condition:
        raise ConfigError(message)


def load_project(path) -> ProjectConfig:
    """Parse and validate project.json, filling documented defaults."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc

    for key in ("source_dir", "target_dir", "pair_kind"):
        _require(key in raw, f"{path}: missing required field {key!r}")
    _require(raw["pair_kind"] in PAIR_KINDS,
             f"{path}: pair_kind must be one of {PAIR_KINDS}, got {raw['pair_kind']!r}")

    base = path.parent
    source_dir = (base / raw["source_dir"]).resolve()
    target_dir = (base / raw["target_dir"]).resolve()
    _require(source_dir.is_dir(), f"{path}: source_dir does not exist: {source_dir}")
    _require(target_dir.is_dir(), f"{path}: target_dir does not exist: {target_dir}")

    answer_file = None
    if raw.get("answer_file"):
        answer_file = (base / raw["answer_file"]).resolve()
        _require(answer_file.is_file(), f"{path}: answer_file does not exist: {answer_file}")
    coverage_file = None
    if raw.get("coverage_file"):
        coverage_file = (base / raw["coverage_file"]).resolve()
        _require(coverage_file.is_file(),
                 f"{path}: coverage_file does not exist: {coverage_file}")

    technique_kwargs = raw.get("technique", {})
    if "lambda" in technique_kwargs:
        technique_kwargs["lambda_weight"] = technique_kwargs.pop("lambda")
    model_kwargs = raw.get("model", {})
    try:
        technique = TechniqueConfig(**technique_kwargs)
        model = ModelParams(**model_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    tau = float(raw.get("tau", DEFAULT_TAU))
    _require(0.0 <= tau <= 1.0, f"{path}: tau must lie in [0, 1]")
    cap = int(raw.get("transitive_cap", DEFAULT_PI))
    _require(cap >= 1, f"{path}: transitive_cap must be >= 1")

    return ProjectConfig(
        name=raw.get("name", path.parent.name),
        source_dir=source_dir,
        target_dir=target_dir,
        pair_kind=raw["pair_kind"],
        answer_file=answer_file,
        coverage_file=coverage_file,
        technique=technique,
        model=model,
        tau=tau,
        transitive_cap=cap,
        threshold_overrides=dict(raw.get("threshold_overrides", {})),
        base_dir=base,
    )


@dataclass(frozen=True)
class RunManifest:
    run_id: str
    timestamp: float
    stage: int
    config_snapshot: dict
    thresholds: dict[str, float]
    seed: int
    workers: int = 1

    def to_json(self) -> str:
        return json.dumps({
            "run_id": self.run_id,
            "timestamp": self.timestamp,
            "stage": self.stage,
            "config": self.config_snapshot,
            "thresholds": self.thresholds,
            "seed": self.seed,
            "workers": self.workers,
        }, indent=2, sort_keys=True)


def new_run_manifest(config: ProjectConfig, stage: int,
                     thresholds: dict[str, float], workers: int = 1) -> RunManifest:
    return RunManifest(
        run_id=uuid.uuid4().hex[:12],
        timestamp=time.time(),
        stage=stage,
        config_snapshot=config.to_snapshot(),
        thresholds=dict(thresholds),
        seed=config.model.seed,
        workers=workers,
    )


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def persist_results(run_dir, manifest: RunManifest, result_records: list[dict]) -> Path:
    """Write results.jsonl and manifest.json atomically; returns the run directory."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    lines = "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in result_records)
    _atomic_write(run_dir / "results.jsonl", lines)
    _atomic_write(run_dir / "manifest.json", manifest.to_json() + "\n")
    return run_dir


def load_results(run_dir) -> tuple[dict, list[dict]]:
    run_dir = Path(run_dir)
    manifest = json.loads((run_dir / "manifest.json").read_text(encoding="utf-8"))
    records = []
    with open(run_dir / "results.jsonl", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"results.jsonl line {lineno}: {exc.msg}") from exc
    return manifest, records


def append_feedback(log_path, record: FeedbackRecord,
                    known_pairs: set[tuple[str, str]] | None = None):
    """Append one record to the JSON-lines feedback log."""
    if known_pairs is not None and (record.source_id, record.target_id) not in known_pairs:
        raise KeyError(f"unknown pair ({record.source_id!r}, {record.target_id!r})")
    log_path = Path(log_path)
    log_path.parent.mkdir(parents=True, exist_ok=True)
    payload = json.dumps({
        "source_id": record.source_id,
        "target_id": record.target_id,
        "confidence": record.confidence,
        "reviewer": record.reviewer,
        "timestamp": record.timestamp,
    }, sort_keys=True)
    with open(log_path, "a", encoding="utf-8") as fh:
        fh.write(payload + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def load_feedback(log_path) -> list[FeedbackRecord]:
    """Read the append-only log back; replaying it reconstructs identical state."""
    log_path = Path(log_path)
    if not log_path.exists():
        return []
    records = []
    with open(log_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                records.append(FeedbackRecord(
                    source_id=raw["source_id"], target_id=raw["target_id"],
                    confidence=float(raw["confidence"]),
                    reviewer=str(raw.get("reviewer", "")),
                    timestamp=float(raw["timestamp"]),
                ))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{log_path}:{lineno}: malformed feedback record ({exc})")
    return records
