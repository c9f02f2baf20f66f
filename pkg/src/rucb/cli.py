"""Command-line harness: run experiments, compare policies, re-render reports.

Subcommands:
  simulate   one policy on a scripted corpus
  train-toy  one policy on a toy segmentation corpus
  compare    all four policies on the configured corpus
  report     re-render every table from previously written logs/summaries

The output root defaults to $RUCB_OUTPUT_ROOT for relative paths.  A failed
run leaves an INCOMPLETE marker file in its output directory.
"""
from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import traceback
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, parse_config
from .report import (
    POLICY_ORDER,
    corrupted_share,
    emit_selection_report,
    merge_dsc,
    write_dsc_table,
)
from .scheduler import RunResult, run_experiment
from .storage import read_json, read_log, write_csv, write_json, write_log
from .storage import save_corpus as save_corpus_to_disk

ENV_OUTPUT_ROOT = "RUCB_OUTPUT_ROOT"


def _resolve_output(config: ExperimentConfig, override: str | None) -> Path:
    raw = override or config.output_dir or "runs"
    path = Path(raw)
    if not path.is_absolute():
        path = Path(os.environ.get(ENV_OUTPUT_ROOT, ".")) / path
    return path


def _boot_records(records):
    return [rec for rec in records if rec.phase >= 1]


def _seed_summary(config: ExperimentConfig, result: RunResult) -> dict:
    dsc = None
    if result.dsc_per_class is not None:
        dsc = {str(cls): list(map(float, vals))
               for cls, vals in result.dsc_per_class.items()}
    return {
        "schema_version": 1,
        "policy": result.policy,
        "seed": result.seed,
        "corpus_kind": config.corpus_kind,
        "num_samples": int(len(result.corrupted)),
        "corruption_rate": config.corpus.corruption_rate,
        "corrupted_ids": [int(i) for i in np.flatnonzero(result.corrupted)],
        "total_iterations": result.total_iterations,
        "boot_selections": int(result.selection_histogram.sum()),
        "corrupted_share_per_phase": result.corrupted_share_per_phase,
        "corrupted_share_boot": corrupted_share(_boot_records(result.log), result.corrupted),
        "phase_stats": [{"mu": mu, "sigma": sigma} for mu, sigma in result.phase_stats],
        "dsc": dsc,
        "mean_dsc": result.mean_dsc,
        "final_stats": {
            "n": result.final_state.n,
            "counts": result.final_state.counts.tolist(),
            "reward_sums": result.final_state.reward_sums.tolist(),
        },
    }


def _aggregate(out_dir: Path, policies: list[str], summaries: dict[str, list[dict]]) -> None:
    """Build the cross-seed summary, comparison CSV, and DSC tables from the
    per-seed summaries alone, so `report` can reproduce them byte-for-byte."""
    rows = []
    policy_entries = []
    dsc_per_policy = {}
    for policy in policies:
        per_seed = summaries[policy]
        shares = [s["corrupted_share_boot"] for s in per_seed
                  if s["corrupted_share_boot"] is not None]
        share = float(np.mean(shares)) if shares else None
        dscs = [{int(c): v for c, v in s["dsc"].items()}
                for s in per_seed if s["dsc"] is not None]
        mean_dsc = None
        if dscs:
            merged = merge_dsc(dscs)
            dsc_per_policy[policy] = merged
            mean_dsc = float(np.mean([np.mean(v) for v in merged.values()]))
        policy_entries.append({
            "policy": policy,
            "seeds": [s["seed"] for s in per_seed],
            "boot_selections": sum(s["boot_selections"] for s in per_seed),
            "corrupted_share": share,
            "mean_dsc": mean_dsc,
        })
        rows.append([policy, len(per_seed),
                     sum(s["boot_selections"] for s in per_seed), share, mean_dsc])

    write_json(out_dir / "summary.json", {
        "schema_version": 1,
        "policies": policy_entries,
    })
    write_csv(out_dir / "compare_summary.csv", "compare_summary",
              ["policy", "num_seeds", "boot_selections", "corrupted_share", "mean_dsc"],
              rows)
    if dsc_per_policy:
        write_dsc_table(out_dir, dsc_per_policy)


def _execute(config: ExperimentConfig, policies: list[str], out_dir: Path,
             save_corpus: bool = False) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    marker = out_dir / "INCOMPLETE"
    marker.write_text("run in progress; artifacts may be partial\n")
    try:
        write_json(out_dir / "config.json", config.to_dict())
        summaries: dict[str, list[dict]] = {p: [] for p in policies}
        for policy in policies:
            for seed in config.seeds:
                plan = config.make_plan(seed, policy=policy)
                corpus = config.build_corpus(seed)
                result = run_experiment(plan, corpus, seed)
                seed_dir = out_dir / policy / f"seed{seed}"
                seed_dir.mkdir(parents=True, exist_ok=True)
                write_log(seed_dir / "log.jsonl", result.log)
                summary = _seed_summary(config, result)
                write_json(seed_dir / "summary.json", summary)
                emit_selection_report(result.log, result.corrupted, seed_dir)
                if save_corpus and config.corpus_kind == "segmentation":
                    save_corpus_to_disk(seed_dir / "corpus", corpus.train,
                                        corpus.num_classes)
                summaries[policy].append(summary)
        _aggregate(out_dir, policies, summaries)
    except Exception:
        marker.write_text("run FAILED; artifacts are partial\n"
                          + traceback.format_exc())
        raise
    marker.unlink()
    return 0


def _cmd_run(args: argparse.Namespace, kind: str | None) -> int:
    config = parse_config(args.config)
    if kind and config.corpus_kind != kind:
        raise ConfigError([f"corpus.kind: {args.command} requires {kind!r} "
                           f"(got {config.corpus_kind!r})"])
    if args.seed is not None:
        config = dataclasses.replace(config, seeds=(args.seed,))
    policies = [args.policy or config.policy] if args.command != "compare" else list(POLICY_ORDER)
    out_dir = _resolve_output(config, args.output)
    return _execute(config, policies, out_dir,
                    save_corpus=getattr(args, "save_corpus", False))


def _cmd_report(args: argparse.Namespace) -> int:
    if args.output:
        out_dir = Path(args.output)
    elif args.config:
        out_dir = _resolve_output(parse_config(args.config), None)
    else:
        raise ConfigError(["report: needs --output or --config"])
    if not out_dir.is_dir():
        raise ConfigError([f"report: no run directory at {out_dir}"])

    policies = [p for p in POLICY_ORDER if (out_dir / p).is_dir()]
    extra = sorted(d.name for d in out_dir.iterdir()
                   if d.is_dir() and d.name not in POLICY_ORDER
                   and any(d.glob("seed*/summary.json")))
    policies += extra
    if not policies:
        raise ConfigError([f"report: no per-policy artifacts under {out_dir}"])

    summaries: dict[str, list[dict]] = {}
    for policy in policies:
        seed_dirs = sorted((out_dir / policy).glob("seed*"),
                           key=lambda d: int(d.name.removeprefix("seed")))
        per_seed = []
        for seed_dir in seed_dirs:
            summary = read_json(seed_dir / "summary.json")
            records = read_log(seed_dir / "log.jsonl")
            corrupted = np.zeros(summary["num_samples"], dtype=bool)
            corrupted[summary["corrupted_ids"]] = True
            emit_selection_report(records, corrupted, seed_dir)
            per_seed.append(summary)
        summaries[policy] = per_seed
    _aggregate(out_dir, policies, summaries)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rucb",
        description="Sample-selection experiments: relaxed-UCB and baselines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser, with_policy: bool) -> None:
        sp.add_argument("--config", required=True, help="path to the JSON config")
        sp.add_argument("--seed", type=int, default=None,
                        help="run only this seed (overrides the config's list)")
        sp.add_argument("--output", default=None, help="output directory override")
        if with_policy:
            sp.add_argument("--policy", choices=list(POLICY_ORDER), default=None,
                            help="policy override")

    sp = sub.add_parser("simulate", help="one policy on a scripted corpus")
    common(sp, with_policy=True)
    sp = sub.add_parser("train-toy", help="one policy on a toy segmentation corpus")
    common(sp, with_policy=True)
    sp.add_argument("--save-corpus", action="store_true",
                    help="also store the generated corpus per seed")
    sp = sub.add_parser("compare", help="all four policies on the configured corpus")
    common(sp, with_policy=False)

    sp = sub.add_parser("report", help="re-render tables from existing artifacts")
    sp.add_argument("--config", default=None, help="config whose output_dir to re-render")
    sp.add_argument("--output", default=None, help="run directory to re-render")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_run(args, "scripted")
        if args.command == "train-toy":
            return _cmd_run(args, "segmentation")
        if args.command == "compare":
            return _cmd_run(args, None)
        return _cmd_report(args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure; partial outputs are marked
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
