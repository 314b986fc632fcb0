#!/usr/bin/env python3
"""Generate a synthetic traceability project on disk for trying out the CLI,
service and review UI:

    python3 scripts/make_demo_project.py /tmp/demo --subject ebt_like
    tracelink infer --project /tmp/demo/project.json --stage 1
    tracelink serve --project /tmp/demo/project.json
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from tracelink.synthetic import SUBJECTS, generate_project


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir")
    parser.add_argument("--subject", choices=sorted(SUBJECTS), default="ebt_like")
    args = parser.parse_args()
    project = generate_project(args.out_dir, SUBJECTS[args.subject])
    print(f"project written: {project}")


if __name__ == "__main__":
    main()
