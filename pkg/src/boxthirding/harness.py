"""Seeded, parallel Monte Carlo runner with aggregation and CSV/JSON output."""

import csv
import json
import math
import os
import tempfile
import warnings
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from ._utils import ConfigError, InsufficientBudgetError, RandomSource
from .analysis import candidate_sets, decompose_error
from .baselines import POLICIES, make_policy
from .instances import BanditInstance, NoiseModel, make_alpha_instance, read_caption_csv

RAW_COLUMNS = ("algorithm", "T", "trial", "arm", "regret", "c0", "status")
AGGREGATE_COLUMNS = ("algorithm", "T", "mean_regret", "q25", "q75", "n")
CONFIG_KEYS = ("instance", "noise", "algorithms", "budgets", "trials", "seed", "eps", "output")
_OPTIONAL_KEYS = ("n_jobs",)


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    label: str
    params: dict = field(default_factory=dict)

    def make(self):
        return make_policy(self.name, **self.params)

    @property
    def anytime(self):
        return not POLICIES[self.name].requires_budget


def _require(d, key, where="config"):
    if key not in d:
        raise ConfigError(f"{where}: missing field {key!r}")
    return d[key]


def _int_field(value, name, minimum):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"config: field {name!r} must be an integer >= {minimum}, got {value!r}")
    return value


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce an experiment bit for bit."""

    instance: dict
    noise: NoiseModel
    algorithms: tuple
    budgets: tuple
    trials: int
    seed: int
    eps: tuple = ()
    output: str = None
    n_jobs: int = 1

    @classmethod
    def from_dict(cls, d, base_dir=None):
        if not isinstance(d, dict):
            raise ConfigError("config: top level must be a JSON object")
        unknown = sorted(set(d) - set(CONFIG_KEYS) - set(_OPTIONAL_KEYS))
        if unknown:
            raise ConfigError(f"config: unknown field {unknown[0]!r}")
        inst = _require(d, "instance")
        if not isinstance(inst, dict) or inst.get("kind") not in ("alpha", "dataset", "means"):
            raise ConfigError("config: field 'instance' needs kind alpha, dataset or means")
        inst = dict(inst)
        if inst["kind"] == "dataset" and base_dir is not None:
            inst["path"] = str(Path(base_dir, _require(inst, "path", "instance")))
        try:
            noise = NoiseModel.from_dict(d.get("noise", {"kind": "gaussian", "sigma": 1.0}))
        except (ValueError, AttributeError) as exc:
            raise ConfigError(f"config: field 'noise': {exc}") from None
        algs = _require(d, "algorithms")
        if not isinstance(algs, list) or not algs:
            raise ConfigError("config: field 'algorithms' must be a nonempty list")
        specs = []
        for i, a in enumerate(algs):
            if isinstance(a, str):
                a = {"name": a}
            if not isinstance(a, dict) or a.get("name") not in POLICIES:
                raise ConfigError(f"config: algorithms[{i}] needs a name in {sorted(POLICIES)}")
            params = a.get("params", {})
            if not isinstance(params, dict):
                raise ConfigError(f"config: algorithms[{i}].params must be an object")
            specs.append(AlgorithmSpec(a["name"], a.get("label", a["name"]), dict(params)))
        labels = [s.label for s in specs]
        if len(set(labels)) != len(labels):
            raise ConfigError("config: field 'algorithms' has duplicate labels")
        budgets = _require(d, "budgets")
        if not isinstance(budgets, list) or not budgets:
            raise ConfigError("config: field 'budgets' must be a nonempty list")
        budgets = [_int_field(T, "budgets", 0) for T in budgets]
        if any(b <= a for a, b in zip(budgets, budgets[1:])):
            raise ConfigError("config: field 'budgets' must be strictly increasing")
        trials = _int_field(_require(d, "trials"), "trials", 1)
        seed = _int_field(_require(d, "seed"), "seed", 0)
        if seed >= 2 ** 64:
            raise ConfigError("config: field 'seed' must fit in 64 bits")
        eps = d.get("eps", [])
        eps = [eps] if isinstance(eps, (int, float)) else eps
        if not isinstance(eps, list) or any(
                isinstance(e, bool) or not isinstance(e, (int, float)) or e <= 0 for e in eps):
            raise ConfigError("config: field 'eps' must be a list of positive numbers")
        output = d.get("output")
        if output is not None and not isinstance(output, str):
            raise ConfigError("config: field 'output' must be a directory path")
        if output is not None and base_dir is not None:
            output = str(Path(base_dir, output))
        n_jobs = _int_field(d.get("n_jobs", 1), "n_jobs", -1)
        cfg = cls(inst, noise, tuple(specs), tuple(budgets), trials, seed,
                  tuple(float(e) for e in eps), output, n_jobs or 1)
        cfg.build_instance()
        return cfg

    @classmethod
    def load(cls, path):
        """Read a JSON config; relative paths inside it resolve against its directory."""
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror}") from None
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {str(path)!r} is not valid JSON: {exc}") from None
        return cls.from_dict(d, base_dir=path.parent)

    def build_instance(self):
        """The instance in natural order (each trial shuffles its own copy)."""
        spec = self.instance
        try:
            if spec["kind"] == "alpha":
                n = _require(spec, "N", "instance")
                alpha = _require(spec, "alpha", "instance")
                return make_alpha_instance(n, alpha, None, spec.get("top_mean", 1.0), self.noise)
            if spec["kind"] == "means":
                return BanditInstance(_require(spec, "means", "instance"), self.noise)
            means = read_caption_csv(_require(spec, "path", "instance"))
            return BanditInstance(means.values, self.noise)
        except ConfigError:
            raise
        except (ValueError, TypeError, OSError) as exc:
            raise ConfigError(f"config: field 'instance': {exc}") from None

    def with_options(self, **changes):
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(changes)
        return ExperimentConfig(**d)


@dataclass(frozen=True)
class TrialResult:
    """One (algorithm, T, trial) outcome; arms are natural indices.

    ``candidate_best`` is the best arm of the candidate set and
    ``non_inclusion`` holds one flag per configured eps.
    """

    algorithm: str
    T: int
    trial: int
    arm: int
    regret: float
    c0: int
    status: str
    candidate_best: int = -1
    non_inclusion: tuple = ()

    def row(self):
        ok = self.status in ("ok", "stalled")
        return [self.algorithm, self.T, self.trial, self.arm if ok else "",
                repr(self.regret) if ok else "", self.c0 if ok else "", self.status]


@dataclass(frozen=True)
class Aggregate:
    algorithm: str
    T: int
    mean_regret: float
    q25: float
    q75: float
    n: int

    def row(self):
        return [self.algorithm, self.T, repr(self.mean_regret), repr(self.q25), repr(self.q75), self.n]


@dataclass
class ExperimentResult:
    results: list
    aggregates: list
    decompositions: list


def cell_seed(master_seed, label, budget_key, trial):
    """Seed for one cell, independent of execution order."""
    key = (zlib.crc32(label.encode("utf-8")), int(budget_key), int(trial))
    return np.random.SeedSequence(master_seed, spawn_key=key)


def nearest_rank(sorted_values, p):
    """Nearest-rank quantile of an ascending sequence."""
    n = len(sorted_values)
    k = max(1, math.ceil(p * n))
    return sorted_values[k - 1]


def _result(spec, T, trial, base, inst, label, report, stalled, eps):
    arm = inst.natural(label)
    cand = [inst.natural(a) for a in report.arms] or [arm]
    means = base.means
    top = max(cand, key=lambda a: (means[a], -a))
    best = base.best_mean
    flags = tuple(bool(best - means[top] > e / 2) for e in eps)
    return TrialResult(spec.label, T, trial, arm, float(best - means[arm]), report.c0,
                       "stalled" if stalled else "ok", top, flags)


def _placeholder(spec, T, trial, status):
    return TrialResult(spec.label, T, trial, -1, float("nan"), -1, status)


def _run_cell(config, spec, budgets, trial, base, budget_key):
    """Run one policy once and read off results at every budget in ``budgets``."""
    rng = RandomSource(cell_seed(config.seed, spec.label, budget_key, trial))
    inst = base.shuffled(rng)
    out = [_placeholder(spec, 0, trial, "invalid") for T in budgets if T == 0]
    positive = [T for T in budgets if T > 0]
    if not positive:
        return out
    policy = spec.make()
    policy.record_trace = True
    try:
        recs = [(T, label, stalled and policy.t_ < T)
                for T, label, stalled in policy.run(inst, positive, rng)]
    except InsufficientBudgetError:
        return out + [_placeholder(spec, T, trial, "skipped") for T in positive]
    reports = candidate_sets(policy.trace_, spec.name, inst.n_arms, positive)
    for (T, label, stalled), report in zip(recs, reports):
        out.append(_result(spec, T, trial, base, inst, label, report, stalled, config.eps))
    return out


def run_trial(config, algorithm, T, trial_index):
    """Run one fixed-budget trial of the algorithm labelled ``algorithm``.

    The cell seed depends on ``(seed, algorithm, T, trial_index)``, so this
    is an independent draw from the grid runs made by :func:`run_experiment`.
    """
    spec = _spec_by_label(config, algorithm)
    return _run_cell(config, spec, [T], trial_index, config.build_instance(), T)[0]


def _spec_by_label(config, label):
    for spec in config.algorithms:
        if spec.label == label:
            return spec
    raise ConfigError(f"config has no algorithm labelled {label!r}")


def _cells(config):
    """(spec, budgets, trial, budget_key): one long run per trial for anytime policies,
    one run per budget for fixed-budget ones."""
    for spec in config.algorithms:
        for trial in range(config.trials):
            if spec.anytime:
                yield spec, list(config.budgets), trial, 0
            else:
                for T in config.budgets:
                    yield spec, [T], trial, T


def _check_writable(directory):
    os.makedirs(directory, exist_ok=True)
    with tempfile.TemporaryFile(dir=directory):
        pass


def aggregate(results):
    """Mean and nearest-rank quartiles of regret per ``(algorithm, T)``.

    Only ``ok`` and ``stalled`` trials count; cells without any are omitted
    with a warning.
    """
    cells = {}
    order = []
    for r in results:
        key = (r.algorithm, r.T)
        if key not in cells:
            cells[key] = []
            order.append(key)
        if r.status in ("ok", "stalled"):
            cells[key].append(r.regret)
    out = []
    for key in order:
        regrets = sorted(cells[key])
        if not regrets:
            warnings.warn(f"no usable trials for algorithm {key[0]!r} at T={key[1]}; cell omitted")
            continue
        out.append(Aggregate(key[0], key[1], math.fsum(regrets) / len(regrets),
                             nearest_rank(regrets, 0.25), nearest_rank(regrets, 0.75),
                             len(regrets)))
    return out


def decompositions(results, instance, eps_values):
    """Error decomposition per ``(algorithm, T, eps)`` over usable trials."""
    groups = {}
    for r in results:
        if r.status in ("ok", "stalled"):
            groups.setdefault((r.algorithm, r.T), []).append((r.candidate_best, r.arm))
    out = []
    for (alg, T), outcomes in groups.items():
        for eps in eps_values:
            pairs = [((top, arm), arm) for top, arm in outcomes]
            out.append(decompose_error(pairs, instance, eps, algorithm=alg, T=T))
    return out


def write_outputs(directory, result):
    directory = Path(directory)
    with open(directory / "raw.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RAW_COLUMNS)
        for r in result.results:
            w.writerow(r.row())
    with open(directory / "aggregate.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_COLUMNS)
        for a in result.aggregates:
            w.writerow(a.row())
    with open(directory / "decomposition.json", "w", encoding="utf-8") as fh:
        json.dump([d.to_dict() for d in result.decompositions], fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_experiment(config, n_jobs=None):
    """Run the full roster x budget grid x trials matrix.

    Results come back sorted by (roster position, T, trial) whatever the
    worker count. If ``config.output`` is set, it is checked for
    writability before any simulation and receives ``raw.csv``,
    ``aggregate.csv`` and ``decomposition.json``.
    """
    if config.output is not None:
        _check_writable(config.output)
    base = config.build_instance()
    n_jobs = config.n_jobs if n_jobs is None else n_jobs
    cells = list(_cells(config))
    if n_jobs == 1:
        chunks = [_run_cell(config, spec, b, trial, base, key) for spec, b, trial, key in cells]
    else:
        chunks = Parallel(n_jobs=n_jobs)(
            delayed(_run_cell)(config, spec, b, trial, base, key) for spec, b, trial, key in cells)
    rank = {spec.label: i for i, spec in enumerate(config.algorithms)}
    results = sorted((r for chunk in chunks for r in chunk),
                     key=lambda r: (rank[r.algorithm], r.T, r.trial))
    result = ExperimentResult(results, aggregate(results),
                              decompositions(results, base, config.eps))
    if config.output is not None:
        write_outputs(config.output, result)
    return result
