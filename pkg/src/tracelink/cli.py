"""Command-line driver: infer, eval, simulate, serve, report."""

from __future__ import annotations

import argparse
import html
import json
import os
import sys
from pathlib import Path

from . import evalkit, store
from .pipeline import run_inference
from .service import band_of, create_app

PROJECT_ENV_VAR = "TRACELINK_PROJECT"


def _project_path(args) -> Path:
    path = args.project or os.environ.get(PROJECT_ENV_VAR)
    if not path:
        raise store.ConfigError(
            f"no project given: pass --project or set {PROJECT_ENV_VAR}")
    return Path(path)


def _load_project(args) -> store.ProjectConfig:
    config = store.load_project(_project_path(args))
    if getattr(args, "seed", None) is not None:
        config.model.seed = args.seed
        config.technique.seed = args.seed
    if getattr(args, "sampler", None):
        config.model.sampler = args.sampler
    if getattr(args, "sigma", None) is not None:
        config.model.sigma = args.sigma
    if getattr(args, "rho", None) is not None:
        config.model.rho = args.rho
    if getattr(args, "tau", None) is not None:
        config.tau = args.tau
    return config


def _out_dir(args, config: store.ProjectConfig) -> Path:
    return Path(args.out) if getattr(args, "out", None) else config.base_dir


def _feedback_log(out_dir: Path) -> Path:
    return out_dir / "feedback.jsonl"


def cmd_infer(args) -> int:
    config = _load_project(args)
    out_dir = _out_dir(args, config)

    feedback = ()
    if args.stage in (2, 4):
        log = _feedback_log(out_dir)
        if not log.exists():
            print(f"error: stage {args.stage} needs a feedback log at {log}",
                  file=sys.stderr)
            return 2
        feedback = store.load_feedback(log)

    manifest, records, _, elapsed = run_inference(
        config, args.stage, feedback=feedback, workers=args.workers)
    run_dir = store.persist_results(out_dir / "runs" / manifest.run_id,
                                    manifest, records)

    bands = {"probably_linked": 0, "unsure": 0, "probably_not_linked": 0}
    for rec in records:
        bands[band_of(rec["mean"])] += 1
    print(f"run {manifest.run_id}: stage {args.stage}, {len(records)} pairs, "
          f"{elapsed:.1f}s")
    print("  bands: " + ", ".join(f"{k}={v}" for k, v in bands.items()))
    print(f"  results: {run_dir / 'results.jsonl'}")
    return 0


def _scores_from_records(records) -> dict[tuple[str, str], float]:
    return {(r["source_id"], r["target_id"]): r["mean"] for r in records}


def cmd_eval(args) -> int:
    config = _load_project(args)
    if not config.answer_file:
        print("error: project has no answer_file; evaluation needs ground truth",
              file=sys.stderr)
        return 2
    answers = evalkit.load_answer_file(config.answer_file)
    _, records = store.load_results(args.run)
    scores = _scores_from_records(records)
    missing = answers - scores.keys()
    if missing:
        print(f"error: answers reference pairs missing from results, "
              f"e.g. {sorted(missing)[0]}", file=sys.stderr)
        return 2

    report = evalkit.evaluate(scores, answers, tag=Path(args.run).name,
                              bootstrap_resamples=args.bootstrap,
                              seed=config.model.seed)
    out = Path(args.out) if args.out else Path(args.run)
    out.mkdir(parents=True, exist_ok=True)
    (out / "eval.json").write_text(report.to_json() + "\n", encoding="utf-8")
    (out / "eval.txt").write_text(report.to_text_table(), encoding="utf-8")
    print(f"AP = {report.ap:.4f}  ({len(answers)} true links, "
          f"{len(scores)} pairs)")
    print(f"  report: {out / 'eval.json'}")
    return 0


def cmd_simulate(args) -> int:
    config = _load_project(args)
    if not config.answer_file:
        print("error: simulation needs an answer_file for ground truth",
              file=sys.stderr)
        return 2
    out_dir = _out_dir(args, config)
    log = _feedback_log(out_dir)
    if log.exists() and not args.force:
        print(f"error: {log} already exists; pass --force to replace it",
              file=sys.stderr)
        return 2
    if log.exists():
        log.unlink()

    answers = evalkit.load_answer_file(config.answer_file)
    manifest1, records1, data, _ = run_inference(config, 1, workers=args.workers)
    simulated = evalkit.simulate_feedback(
        answers, data.pairs, sample_rate=args.rate, error_rate=args.error_rate,
        seed=config.model.seed)
    for rec in simulated:
        store.append_feedback(log, rec)

    manifest2, records2, _, _ = run_inference(config, 2, feedback=simulated,
                                              workers=args.workers)
    store.persist_results(out_dir / "runs" / manifest1.run_id, manifest1, records1)
    run_dir2 = store.persist_results(out_dir / "runs" / manifest2.run_id,
                                     manifest2, records2)

    sampled = {(r.source_id, r.target_id) for r in simulated}
    sampled_answers = answers & sampled
    if not sampled_answers:
        print("error: the sampled pairs contain no true links; "
              "try a different seed", file=sys.stderr)
        return 1
    scores1 = {p: s for p, s in _scores_from_records(records1).items() if p in sampled}
    scores2 = {p: s for p, s in _scores_from_records(records2).items() if p in sampled}
    report1 = evalkit.evaluate(scores1, sampled_answers, tag="stage1-sampled")
    report2 = evalkit.evaluate(scores2, sampled_answers, tag="stage2-sampled")

    summary = {
        "sampled_pairs": len(sampled),
        "sampled_links": len(sampled_answers),
        "error_rate": args.error_rate,
        "stage1_ap": report1.ap,
        "stage2_ap": report2.ap,
        "stage1_run": manifest1.run_id,
        "stage2_run": manifest2.run_id,
    }
    (run_dir2 / "simulation.json").write_text(
        json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    print(f"simulated {len(simulated)} reviews (error rate {args.error_rate:.0%}); "
          f"sampled AP: stage1={report1.ap:.4f} stage2={report2.ap:.4f}")
    print(f"  summary: {run_dir2 / 'simulation.json'}")
    return 0


def _latest_run(out_dir: Path) -> Path | None:
    runs = sorted((out_dir / "runs").glob("*/manifest.json"),
                  key=lambda p: p.stat().st_mtime)
    return runs[-1].parent if runs else None


def cmd_serve(args) -> int:
    import uvicorn

    config = _load_project(args)
    out_dir = _out_dir(args, config)
    run_dir = Path(args.run) if args.run else _latest_run(out_dir)
    if run_dir is None or not (Path(run_dir) / "results.jsonl").exists():
        print("error: no completed run found; run `tracelink infer` first",
              file=sys.stderr)
        return 2
    static = args.static or _default_static_dir()
    app = create_app(run_dir, feedback_log=_feedback_log(out_dir), static_dir=static)
    print(f"serving run {run_dir} on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _default_static_dir() -> str | None:
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return str(candidate) if candidate.is_dir() else None


def cmd_report(args) -> int:
    config = _load_project(args)
    out_dir = _out_dir(args, config)
    run_dir = Path(args.run) if args.run else _latest_run(out_dir)
    if run_dir is None:
        print("error: no completed run found", file=sys.stderr)
        return 2
    manifest, records = store.load_results(run_dir)

    bands = {"probably_linked": 0, "unsure": 0, "probably_not_linked": 0}
    for rec in records:
        bands[band_of(rec["mean"])] += 1
    top = sorted(records, key=lambda r: -r["mean"])[:50]

    rows = "\n".join(
        f"<tr><td>{html.escape(r['source_id'])}</td>"
        f"<td>{html.escape(r['target_id'])}</td>"
        f"<td>{r['mean']:.4f}</td><td>{band_of(r['mean'])}</td></tr>"
        for r in top
    )
    thresholds = "\n".join(
        f"<tr><td>{html.escape(tag)}</td><td>{value:.6f}</td></tr>"
        for tag, value in manifest["thresholds"].items()
    )
    page = f"""<!doctype html>
<html><head><meta charset="utf-8"><title>trace report {manifest['run_id']}</title>
<style>body{{font-family:sans-serif;margin:2em}}table{{border-collapse:collapse}}
td,th{{border:1px solid #999;padding:4px 8px}}</style></head><body>
<h1>Run {manifest['run_id']} (stage {manifest['stage']})</h1>
<p>{len(records)} pairs &mdash; probably linked: {bands['probably_linked']},
unsure: {bands['unsure']}, probably not: {bands['probably_not_linked']}</p>
<h2>Thresholds</h2><table><tr><th>technique</th><th>k</th></tr>{thresholds}</table>
<h2>Top 50 links</h2>
<table><tr><th>source</th><th>target</th><th>probability</th><th>band</th></tr>
{rows}</table></body></html>
"""
    out = Path(args.out) if args.out else run_dir / "report.html"
    out.write_text(page, encoding="utf-8")
    print(f"report: {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tracelink",
        description="Probabilistic trace link recovery between software artifacts.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_model=True):
        p.add_argument("--project", help=f"project.json path (or ${PROJECT_ENV_VAR})")
        p.add_argument("--out", help="output directory (default: project directory)")
        p.add_argument("--seed", type=int, help="override the configured seed")
        if with_model:
            p.add_argument("--sampler", choices=["map", "mcmc"])
            p.add_argument("--sigma", type=float, help="feedback belief factor")
            p.add_argument("--rho", type=float, help="transitive belief factor")
            p.add_argument("--tau", type=float, help="related-source threshold")
        p.add_argument("--workers", type=int, default=1)

    p_infer = sub.add_parser("infer", help="run inference and persist results")
    common(p_infer)
    p_infer.add_argument("--stage", type=int, choices=[1, 2, 3, 4], default=1)
    p_infer.set_defaults(func=cmd_infer)

    p_eval = sub.add_parser("eval", help="score a run against the answer file")
    common(p_eval, with_model=False)
    p_eval.add_argument("--run", required=True, help="run directory to evaluate")
    p_eval.add_argument("--bootstrap", type=int, default=1000,
                        help="bootstrap resamples for the std-err column (0 to skip)")
    p_eval.set_defaults(func=cmd_eval)

    p_sim = sub.add_parser("simulate",
                           help="simulated-feedback experiment (writes feedback log)")
    common(p_sim)
    p_sim.add_argument("--error-rate", type=float, default=0.25)
    p_sim.add_argument("--rate", type=float, default=0.10,
                       help="fraction of pairs sampled for feedback")
    p_sim.add_argument("--force", action="store_true",
                       help="replace an existing feedback log")
    p_sim.set_defaults(func=cmd_simulate)

    p_serve = sub.add_parser("serve", help="HTTP review service over a run")
    common(p_serve, with_model=False)
    p_serve.add_argument("--run", help="run directory (default: latest)")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8234)
    p_serve.add_argument("--static", help="directory of built UI assets")
    p_serve.set_defaults(func=cmd_serve)

    p_report = sub.add_parser("report", help="static HTML summary of a run")
    common(p_report, with_model=False)
    p_report.add_argument("--run", help="run directory (default: latest)")
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except store.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
