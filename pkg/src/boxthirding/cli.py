"""Command-line entry point: ``boxthirding <command> ...``.

Exit status is 0 on success, 1 for usage errors, 2 for bad configuration or
input data and 3 for runtime failures.
"""

import argparse
import sys

from ._utils import ConfigError, DataError, InsufficientBudgetError, NoRecommendationError
from .analysis import candidate_set
from .baselines import POLICIES, make_policy
from .harness import ExperimentConfig, run_experiment
from .instances import NOISE_KINDS, NoiseModel, make_alpha_instance, read_caption_csv
from .schedules import solve_rate

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _single_run_flags(p):
    p.add_argument("--alg", required=True, choices=sorted(POLICIES), help="algorithm short name")
    p.add_argument("--N", type=int, required=True, help="number of arms")
    p.add_argument("--T", type=int, required=True, help="budget (number of pulls)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--alpha", type=float, default=1.0,
                   help="gap exponent of the synthetic instance (default 1.0)")
    p.add_argument("--noise", choices=NOISE_KINDS, default="deterministic",
                   help="reward noise model (default deterministic)")
    p.add_argument("--sigma", type=float, default=1.0, help="Gaussian noise scale (default 1.0)")
    p.add_argument("--deterministic-order", action="store_true",
                   help="present arms as 0..N-1 and let B3 examine them in that order")
    p.add_argument("--delta", type=float, default=0.1, help="BUCB confidence level (default 0.1)")
    p.add_argument("--r0-kind", choices=("geometric", "linear_geometric"), default="geometric",
                   help="pull schedule for b3 and sh (default geometric)")


def build_parser():
    parser = _Parser(prog="boxthirding",
                     description="Anytime best-arm identification simulator and calculators.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run an experiment config and write its outputs")
    p.add_argument("config", nargs="?", help="path to a JSON experiment config")
    p.add_argument("--config", dest="config_flag", metavar="PATH", help="same as the positional path")
    p.add_argument("--n-jobs", type=int, default=None, help="worker processes (overrides config)")

    p = sub.add_parser("rate", help="print the optimal schedule growth rate")
    p.add_argument("kind", choices=("geometric", "linear_geometric"))

    p = sub.add_parser("candidate", help="run one seeded trial and print its candidate set as JSON")
    _single_run_flags(p)

    p = sub.add_parser("decompose", help="run a config and print error decompositions as JSON")
    p.add_argument("config", nargs="?", help="path to a JSON experiment config")
    p.add_argument("--config", dest="config_flag", metavar="PATH", help="same as the positional path")
    p.add_argument("--eps", type=float, action="append",
                   help="tolerance (repeatable; overrides the config list)")
    p.add_argument("--n-jobs", type=int, default=None, help="worker processes (overrides config)")

    p = sub.add_parser("means", help="print per-caption means from a vote-count CSV")
    p.add_argument("path", help="CSV with header id,not_funny,somewhat_funny,funny")

    p = sub.add_parser("trace", help="print the event log of one seeded run")
    _single_run_flags(p)
    return parser


def _config_path(args):
    path = args.config_flag or args.config
    if path is None:
        raise UsageError("a config path is required (positional or --config)")
    return path


def _policy_params(args):
    if args.alg in ("b3", "sh"):
        params = {"schedule": args.r0_kind}
        if args.alg == "b3" and args.deterministic_order:
            params["order"] = "sequential"
        return params
    if args.alg == "bucb":
        return {"delta": args.delta}
    return {}


def _single_run(args):
    if args.N < 1:
        raise ConfigError(f"--N must be >= 1, got {args.N}")
    if args.T < 1:
        raise ConfigError(f"--T must be >= 1, got {args.T}")
    noise = NoiseModel("gaussian", args.sigma) if args.noise == "gaussian" else NoiseModel(args.noise)
    try:
        inst = make_alpha_instance(args.N, args.alpha, None if args.deterministic_order else args.seed,
                                   noise=noise)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    policy = make_policy(args.alg, **_policy_params(args))
    policy.fit(inst, args.T, args.seed)
    return inst, policy


def _cmd_run(args):
    cfg = ExperimentConfig.load(_config_path(args))
    if cfg.output is None:
        raise ConfigError("config: field 'output' is required for the run command")
    result = run_experiment(cfg, n_jobs=args.n_jobs)
    print("algorithm,T,mean_regret,q25,q75,n")
    for a in result.aggregates:
        print(f"{a.algorithm},{a.T},{a.mean_regret:.6g},{a.q25:.6g},{a.q75:.6g},{a.n}")
    print(f"wrote raw.csv, aggregate.csv and decomposition.json to {cfg.output}")


def _cmd_rate(args):
    print(f"{solve_rate(args.kind):.12f}")


def _cmd_candidate(args):
    inst, policy = _single_run(args)
    report = candidate_set(policy.trace_, args.alg, inst.n_arms, policy.t_)
    print(report.to_json())


def _cmd_decompose(args):
    cfg = ExperimentConfig.load(_config_path(args))
    eps = tuple(args.eps) if args.eps else cfg.eps
    if not eps:
        raise ConfigError("config: field 'eps' is empty and no --eps was given")
    if any(e <= 0 for e in eps):
        raise ConfigError("--eps values must be > 0")
    result = run_experiment(cfg.with_options(output=None, eps=eps), n_jobs=args.n_jobs)
    for d in result.decompositions:
        print(d.to_json())


def _cmd_means(args):
    means = read_caption_csv(args.path)
    for cid, m in zip(means.ids, means.values.tolist()):
        print(f"{cid},{m!r}")
    print(f"range {means.spread!r}")


def _cmd_trace(args):
    _, policy = _single_run(args)
    for line in policy.trace_.to_lines():
        print(line)


_COMMANDS = {"run": _cmd_run, "rate": _cmd_rate, "candidate": _cmd_candidate,
             "decompose": _cmd_decompose, "means": _cmd_means, "trace": _cmd_trace}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InsufficientBudgetError, NoRecommendationError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except SystemExit as exc:  # --help
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
