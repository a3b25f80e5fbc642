"""Command-line entry point: ``sagesim run | analyze | sweep``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .attack import scenario_from_dict
from .config import load_config
from .errors import AllStreamsCompromised, SageError, TooLarge
from .harness import run_experiment, sweep_attack_count, sweep_gamma, write_outputs, write_sweep_csv
from .measurement import model_from_dict
from .resilience import check_resilience, is_globally_observable, max_tolerable_s


def _read_json(path):
    return json.loads(Path(path).read_text())


def cmd_run(args) -> int:
    config = load_config(args.config, trials=args.trials, seed=args.seed, iterations=args.iterations)
    result = run_experiment(config, workers=args.workers)
    out = write_outputs(result, args.out)
    for e in config.estimators:
        print(f"{e}: median final max RMSE {result.at(config.iterations, e):.6g}")
    if result.saturation_violations:
        print(f"warning: {result.saturation_violations} saturation violations", file=sys.stderr)
    print(f"wrote {out / 'metrics.csv'} and {out / 'summary.json'}")
    return 0


def analysis_dict(model, scenario, budget) -> dict:
    doc = {"n_streams": model.n_streams, "m_dim": model.m_dim, "globally_observable": is_globally_observable(model)}
    try:
        doc["max_tolerable_s"] = max_tolerable_s(model, budget=budget) if doc["globally_observable"] else None
    except TooLarge as exc:
        doc["max_tolerable_s"] = None
        doc["max_tolerable_s_note"] = str(exc)
    try:
        doc["report"] = check_resilience(model, scenario.compromised).to_dict()
    except AllStreamsCompromised as exc:
        doc["report"] = None
        doc["report_note"] = str(exc)
    return doc


def cmd_analyze(args) -> int:
    model = model_from_dict(_read_json(args.model))
    scenario = scenario_from_dict(_read_json(args.attack), model)
    text = json.dumps(analysis_dict(model, scenario, args.budget), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_sweep(args) -> int:
    config = load_config(args.config, trials=args.trials, seed=args.seed, iterations=args.iterations)
    if args.param == "gamma":
        rows = sweep_gamma(config, [float(v) for v in args.values], workers=args.workers)
    else:
        rows = sweep_attack_count(config, [int(v) for v in args.values], workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, out / f"sweep_{args.param}.csv")
    for r in rows:
        key = r.get("Gamma", r.get("count"))
        print(f"{args.param}={key} {r['estimator']}: median {r['median']:.6g} [{r['q05']:.6g}, {r['q95']:.6g}]")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sagesim", description="Resilient distributed parameter estimation simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    def run_opts(sp):
        sp.add_argument("--config", required=True, help="experiment JSON document")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--trials", type=int, help="override the number of trials")
        sp.add_argument("--seed", type=int, help="override the master seed")
        sp.add_argument("--iterations", type=int, help="override the horizon T")
        sp.add_argument("--workers", type=int, help="worker processes (default $SAGE_THREADS or 1)")

    r = sub.add_parser("run", help="run a Monte-Carlo experiment")
    run_opts(r)
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", help="resilience report for a model and attack set")
    a.add_argument("--model", required=True)
    a.add_argument("--attack", required=True)
    a.add_argument("--out", help="also write the report here")
    a.add_argument("--budget", type=int, default=10**6, help="max subsets enumerated for the tolerable-s search")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("sweep", help="final max RMSE across Gamma or attack counts")
    run_opts(s)
    s.add_argument("--param", required=True, choices=("gamma", "attack_count"))
    s.add_argument("--values", required=True, nargs="+")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SageError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
