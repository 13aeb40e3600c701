"""Command-line interface.

Subcommands: ``run`` (full experiment), ``sample`` (dump an RC sample),
``score`` (re-score a stored assignment), ``synth`` (write a synthetic
instance).  Every experiment-config key is exposed as a flag of the same
name; flag values override the config file.  Exit codes: 0 success,
2 parse/validation error, 3 configuration error, 4 resource limit,
1 anything else.
"""

from __future__ import annotations

import argparse
import sys

from .dataio import (
    ALGORITHMS,
    ExperimentConfig,
    build_config,
    load_instance,
    read_config_file,
)
from .errors import ConfigError, ParseError, ResourceLimitError, ValidationError
from .optimize import TdemParams, sampling_phase
from .rcsets import build_sample
from .reporting import rescore, run_experiment
from .synth import generate_synthetic

_CONFIG_HELP = {
    "graph": "edge list file (u<TAB>v, v follows u)",
    "node_leanings": "node leaning file (id<TAB>leaning)",
    "item_leanings": "item leaning file; omit to use an even spread",
    "items": "item count for the even spread",
    "prob_mode": "propagation probabilities: lin, exp or wc",
    "beta": "probability scale for lin/exp",
    "gamma": "decay rate for exp",
    "k": "maximum number of seed pairs",
    "ku": "default per-node attention bound",
    "ku_overrides": "per-node attention bound file (node<TAB>k_u)",
    "epsilon": "estimation accuracy parameter in (0, 1)",
    "ell_conf": "confidence exponent (failure probability n^-ell_conf)",
    "master_seed": "seed driving all algorithm randomness",
    "algorithm": f"one of: {', '.join(ALGORITHMS)}",
    "eval_trials": "Monte-Carlo trials for the reported score",
    "eval_seed": "evaluation seed; -1 derives one from the master seed",
    "oracle_trials": "Monte-Carlo trials per oracle call (mc-greedy)",
    "workers": "worker processes for RC-set generation",
    "output_dir": "report directory (env COEXPOSE_OUTPUT_DIR overrides)",
    "figures": "render PNG figures next to the reports",
    "memory_budget_mb": "abort if the RC sample would exceed this budget",
    "exact_cap": "max uncertain colored edges for the exact oracle",
}


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value config file")
    for name, fdef in ExperimentConfig.__dataclass_fields__.items():
        flag = "--" + name.replace("_", "-")
        if fdef.type == "bool":
            parser.add_argument(flag, default=None,
                                choices=("true", "false"),
                                help=_CONFIG_HELP.get(name, ""))
        else:
            parser.add_argument(flag, default=None, help=_CONFIG_HELP.get(name, ""))


def _config_from_args(args) -> ExperimentConfig:
    file_values = read_config_file(args.config) if args.config else {}
    overrides = {
        name: getattr(args, name)
        for name in ExperimentConfig.__dataclass_fields__
        if getattr(args, name, None) is not None
    }
    return build_config(file_values, overrides)


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    report = run_experiment(cfg)
    print(
        f"{report.algorithm}: score {report.score:.4f} "
        f"(se {report.std_error:.4f}), |A|={len(report.assignment)}, "
        f"sample={report.sample_size}, {report.runtime_seconds:.2f}s "
        f"-> {cfg.output_dir}"
    )
    return 0


def _cmd_sample(args) -> int:
    cfg = _config_from_args(args)
    graph, items, model, constraints = load_instance(cfg)
    budget = cfg.memory_budget_mb * 1024 * 1024
    if args.count is not None:
        sample = build_sample(graph, items, model, int(args.count),
                              cfg.master_seed, workers=cfg.workers,
                              byte_budget=budget)
    else:
        params = TdemParams(constraints=constraints, epsilon=cfg.epsilon,
                            ell_conf=cfg.ell_conf, master_seed=cfg.master_seed)
        sample = sampling_phase(graph, items, model, params,
                                workers=cfg.workers, byte_budget=budget)
    sample.dump(args.out)
    print(f"wrote {sample.size} RC-sets ({sample.total_size} member pairs) "
          f"to {args.out}")
    return 0


def _cmd_score(args) -> int:
    cfg = _config_from_args(args)
    report = rescore(cfg, args.assignment)
    print(
        f"rescore: score {report.score:.4f} (se {report.std_error:.4f}), "
        f"|A|={len(report.assignment)} -> {cfg.output_dir}"
    )
    return 0


def _cmd_synth(args) -> int:
    generate_synthetic(
        n=args.n,
        m=args.m,
        leaning_distribution=args.leaning_dist,
        seed=args.seed,
        edge_path=args.edges,
        leaning_path=args.leanings,
        edge_model=args.edge_model,
        hub_exponent=args.hub_exponent,
    )
    print(f"wrote {args.edges} and {args.leanings} (n={args.n}, m={args.m})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coexpose",
        description="Diversity-exposure maximization on social graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured experiment")
    _add_config_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sample = sub.add_parser("sample", help="generate and dump an RC sample")
    _add_config_flags(p_sample)
    p_sample.add_argument("--count", type=int, default=None,
                          help="explicit sample size (default: adaptive sizing)")
    p_sample.add_argument("--out", required=True, help="output file")
    p_sample.set_defaults(func=_cmd_sample)

    p_score = sub.add_parser("score", help="re-score a stored assignment")
    _add_config_flags(p_score)
    p_score.add_argument("--assignment", required=True,
                         help="assignment.tsv from a previous run")
    p_score.set_defaults(func=_cmd_score)

    p_synth = sub.add_parser("synth", help="write a synthetic instance")
    p_synth.add_argument("--n", type=int, required=True)
    p_synth.add_argument("--m", type=int, required=True)
    p_synth.add_argument("--leaning-dist", default="uniform",
                         choices=("uniform", "polarized"))
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--edges", required=True, help="edge file to write")
    p_synth.add_argument("--leanings", required=True, help="leaning file to write")
    p_synth.add_argument("--edge-model", default="uniform",
                         choices=("uniform", "hubs"))
    p_synth.add_argument("--hub-exponent", type=float, default=1.6)
    p_synth.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
