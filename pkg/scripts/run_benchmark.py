#!/usr/bin/env python3
"""Reproduce the evaluation table: fused stage-1 AP vs per-technique baselines,
plus the simulated-feedback stage-2 comparison, for the four benchmark subjects.

Real datasets are used when --datasets (or TRACELINK_DATASETS) points at a
directory laid out as <dir>/<ebt|etour|smos|itrust>/project.json; otherwise the
seeded synthetic stand-ins are generated on the fly.

    python3 scripts/run_benchmark.py --out /tmp/bench
"""

import argparse
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from tracelink import store
from tracelink.evalkit import evaluate, load_answer_file, simulate_feedback
from tracelink.ir.engines import TECHNIQUES
from tracelink.pipeline import run_inference
from tracelink.synthetic import SUBJECTS, generate_project

SUBJECT_SETTINGS = {
    "ebt_like": {"lda_iterations": 150},
    "etour_like": {"lda_iterations": 500, "lda_topics": 16},
    "smos_like": {"lda_iterations": 150, "lsi_rank": 25},
    "itrust_like": {"lda_iterations": 150},
}
REAL_NAME_FOR = {"ebt_like": "ebt", "etour_like": "etour",
                 "smos_like": "smos", "itrust_like": "itrust"}


def benchmark_subject(name, workdir, datasets_dir):
    real = None
    if datasets_dir:
        candidate = Path(datasets_dir) / REAL_NAME_FOR[name] / "project.json"
        if candidate.is_file():
            real = candidate
    if real is not None:
        config = store.load_project(real)
        mode = "real"
    else:
        project = generate_project(Path(workdir) / name, SUBJECTS[name])
        config = store.load_project(project)
        for field, value in SUBJECT_SETTINGS[name].items():
            setattr(config.technique, field, value)
        mode = "synthetic"

    started = time.time()
    _, records, data, _ = run_inference(config, 1)
    answers = load_answer_file(config.answer_file)
    stage1_scores = {(r["source_id"], r["target_id"]): r["mean"] for r in records}
    stage1_ap = evaluate(stage1_scores, answers).ap

    technique_aps = {}
    for tag in TECHNIQUES:
        values = data.matrices[tag].values
        scores = {(sid, tid): float(values[i, j])
                  for i, sid in enumerate(data.corpus.source_ids)
                  for j, tid in enumerate(data.corpus.target_ids)}
        technique_aps[tag] = evaluate(scores, answers).ap

    feedback = {}
    for error_rate in (0.0, 0.25):
        sim = simulate_feedback(answers, data.pairs, 0.10, error_rate,
                                seed=config.model.seed)
        _, stage2_records, _, _ = run_inference(config, 2, feedback=sim)
        sampled = {(r.source_id, r.target_id) for r in sim}
        sampled_answers = answers & sampled
        s1 = {p: v for p, v in stage1_scores.items() if p in sampled}
        s2 = {(r["source_id"], r["target_id"]): r["mean"] for r in stage2_records
              if (r["source_id"], r["target_id"]) in sampled}
        feedback[error_rate] = (evaluate(s1, sampled_answers).ap,
                                evaluate(s2, sampled_answers).ap)

    return {
        "subject": name,
        "mode": mode,
        "pairs": len(data.pairs),
        "links": len(answers),
        "stage1_ap": stage1_ap,
        "median_baseline": float(np.median(list(technique_aps.values()))),
        "best_baseline": float(max(technique_aps.values())),
        "technique_aps": technique_aps,
        "stage2": {f"{int(k * 100)}%": v for k, v in feedback.items()},
        "seconds": round(time.time() - started, 1),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--datasets", default=os.environ.get("TRACELINK_DATASETS"),
                        help="directory of real benchmark projects (optional)")
    parser.add_argument("--out", help="where to write benchmark.json")
    parser.add_argument("--subjects", nargs="*", default=list(SUBJECTS))
    args = parser.parse_args()

    rows = []
    with tempfile.TemporaryDirectory() as tmp:
        for name in args.subjects:
            row = benchmark_subject(name, tmp, args.datasets)
            rows.append(row)
            s2 = row["stage2"]
            print(f"{row['subject']:12s} [{row['mode']}] "
                  f"pairs={row['pairs']:6d} links={row['links']:5d}  "
                  f"stage1={row['stage1_ap']:.3f}  "
                  f"median={row['median_baseline']:.3f}  "
                  f"best={row['best_baseline']:.3f}  "
                  f"stage2@0%={s2['0%'][0]:.3f}->{s2['0%'][1]:.3f}  "
                  f"stage2@25%={s2['25%'][0]:.3f}->{s2['25%'][1]:.3f}  "
                  f"({row['seconds']}s)", flush=True)

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "benchmark.json").write_text(json.dumps(rows, indent=2) + "\n",
                                            encoding="utf-8")
        print(f"wrote {out / 'benchmark.json'}")


if __name__ == "__main__":
    main()
