#!/usr/bin/env python3
"""Build a small fixed run for exercising the review service and UI:
a 2x4 corpus whose pair probabilities cover all three bands, including one
pair served at exactly 0.5, plus an artifact with no likely link.

    python3 scripts/make_ui_fixture.py /tmp/ui_fixture
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from tracelink import store

SOURCES = {
    "RQ1.txt": "The server shall negotiate certificate enrollment requests.",
    "RQ2.txt": "The client shall retry failed network transfers with backoff.",
}
TARGETS = {
    "high.c": "int negotiateEnrollment() { certificate server request }",
    "mid.c": "int maybeRelated() { negotiate retry helper }",
    "low.c": "int parseConfig() { grammar syntax token }",
    "orphan.c": "int unrelatedMath() { matrix tensor scalar }",
}
PROBABILITIES = {
    ("RQ1.txt", "high.c"): 0.92,
    ("RQ1.txt", "mid.c"): 0.50,
    ("RQ1.txt", "low.c"): 0.22,
    ("RQ1.txt", "orphan.c"): 0.12,
    ("RQ2.txt", "high.c"): 0.75,
    ("RQ2.txt", "mid.c"): 0.45,
    ("RQ2.txt", "low.c"): 0.31,
    ("RQ2.txt", "orphan.c"): 0.18,
}


def main():
    if len(sys.argv) != 2:
        sys.exit(__doc__)
    out = Path(sys.argv[1])
    (out / "sources").mkdir(parents=True, exist_ok=True)
    (out / "targets").mkdir(parents=True, exist_ok=True)
    for name, text in SOURCES.items():
        (out / "sources" / name).write_text(text + "\n", encoding="utf-8")
    for name, text in TARGETS.items():
        (out / "targets" / name).write_text(text + "\n", encoding="utf-8")
    (out / "project.json").write_text(json.dumps({
        "name": "ui-fixture",
        "source_dir": "sources",
        "target_dir": "targets",
        "pair_kind": "req_src",
    }, indent=2) + "\n", encoding="utf-8")

    config = store.load_project(out / "project.json")
    records = []
    for (sid, tid), probability in PROBABILITIES.items():
        successes = round(probability * 10)
        records.append({
            "source_id": sid,
            "target_id": tid,
            "stage": 1,
            "mean": probability,
            "variance": 0.002,
            "method": "map",
            "observations": [1] * successes + [0] * (10 - successes),
            "thresholds": [0.5] * 10,
            "base_mean": probability,
            "fit_mu": probability,
            "fit_nu": 0.002,
        })
    manifest = store.new_run_manifest(config, stage=1,
                                      thresholds={t: 0.5 for t in (
                                          "VSM", "LSI", "JS", "LDA", "NMF",
                                          "VSM+LDA", "JS+LDA", "VSM+NMF",
                                          "JS+NMF", "VSM+JS")})
    run_dir = store.persist_results(out / "runs" / "fixture", manifest, records)
    print(run_dir)


if __name__ == "__main__":
    main()
