"""Candidate sets, data-poor classification and the error decomposition."""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._utils import check_count
from .b3 import flow_recursion
from .schedules import Schedule, schedule_budget

CANDIDATE_RULES = ("b3", "us", "sh", "bsh", "bucb")


@dataclass(frozen=True)
class CandidateReport:
    """Arms a policy could have recommended at budget ``T``.

    With ``method="trace"``, ``arms`` is the set itself and ``c0 == len(arms)``.
    With ``method="closed_form_bound"``, ``arms`` is empty and ``bounds`` holds
    ``(lower, upper)``.
    """

    algorithm: str
    T: int
    c0: int
    arms: tuple = ()
    method: str = "trace"
    bounds: tuple = ()

    def to_dict(self):
        d = {"algorithm": self.algorithm, "T": self.T, "c0": self.c0, "method": self.method}
        if self.method == "trace":
            d["arms"] = list(self.arms)
        else:
            d["bounds"] = list(self.bounds)
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class ErrorDecomposition:
    """Empirical error rates split by whether the candidate set missed the good arms.

    non_inclusion_rate: share of trials with ``mu_1 - max_C mu > eps / 2``.
    within_set_rate: share with ``max_C mu - mu_rec > eps / 2``.
    total_rate: share with ``mu_1 - mu_rec > eps``.
    """

    eps: float
    non_inclusion_rate: float
    within_set_rate: float
    total_rate: float
    n: int
    algorithm: str = ""
    T: int = 0
    flags: tuple = field(default=(), repr=False, compare=False)

    def to_dict(self):
        return {"algorithm": self.algorithm, "T": self.T, "eps": self.eps,
                "non_inclusion_rate": self.non_inclusion_rate,
                "within_set_rate": self.within_set_rate,
                "total_rate": self.total_rate, "n": self.n}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


class _B3Replay:
    """Tracks, for every box slot, which arms could occupy it.

    The box schedule of B3 does not depend on rewards; only the identities
    routed through each arrangement do. Any of the three arms in an arranged
    box can come out as winner, median or loser, so each output inherits the
    union of the inputs' possible identities.
    """

    def __init__(self):
        self.possible = {}
        self.where = {}
        self.boxes = {}

    def apply(self, arm, kind, args):
        if kind == "replenish":
            self.possible.setdefault(arm, frozenset((arm,)))
        elif kind == "lift_start":
            self._move(arm, (args[0], 0))
        elif kind == "shift":
            self._move(arm, (args[0], args[1]))
        elif kind == "arrange":
            members = self.boxes.pop((args[0], args[1]), [])
            merged = frozenset().union(*(self.possible[a] for a in members))
            for a in members:
                self.possible[a] = merged
                del self.where[a]
        elif kind in ("discard", "promote"):
            self._move(arm, None)

    def _move(self, arm, key):
        old = self.where.pop(arm, None)
        if old is not None:
            self.boxes[old].remove(arm)
        if key is not None:
            self.where[arm] = key
            self.boxes.setdefault(key, []).append(arm)

    def current(self):
        tops = [l for (l, j), box in self.boxes.items() if j == 0 and box]
        if not tops:
            return frozenset()
        return frozenset().union(*(self.possible[a] for a in self.boxes[(max(tops), 0)]))


class _PulledReplay:
    def __init__(self):
        self.pulled = set()

    def apply(self, arm, kind, args):
        pass

    def pull(self, arm):
        self.pulled.add(arm)

    def current(self):
        return frozenset(self.pulled)


class _BSHReplay(_PulledReplay):
    """Members of brackets that have named at least one champion."""

    def __init__(self):
        super().__init__()
        self.members = {}
        self.done = set()

    def apply(self, arm, kind, args):
        if kind == "member":
            self.members.setdefault(args[0], []).append(arm)
        elif kind == "champion":
            self.done.add(args[0])

    def current(self):
        if not self.done:
            return frozenset(self.pulled)
        return frozenset(a for b in self.done for a in self.members[b])


def _replay_for(algorithm):
    if algorithm == "b3":
        return _B3Replay()
    if algorithm == "bsh":
        return _BSHReplay()
    return _PulledReplay()


def candidate_sets(trace, algorithm, n_arms, budgets):
    """Candidate sets at each budget in ``budgets`` from one pass over ``trace``.

    The state at budget ``T`` is the state right after pull ``T``; events
    logged after that pull belong to the next step. If the trace has fewer
    than ``T`` pulls (a stalled run), its final state is used.
    """
    if algorithm not in CANDIDATE_RULES:
        raise ValueError(f"no candidate rule for algorithm {algorithm!r}")
    if trace.algorithm != algorithm:
        raise ValueError(f"trace was recorded by {trace.algorithm!r}, not {algorithm!r}")
    if trace.n_arms != n_arms:
        raise ValueError(f"trace covers {trace.n_arms} arms, not {n_arms}")
    budgets = [check_count(T, "T") for T in budgets]
    wanted = sorted(set(budgets))
    found = {}
    replay = _replay_for(algorithm)
    track_pulls = hasattr(replay, "pull")
    k = 0
    if wanted and wanted[0] == 0:
        found[0] = frozenset()
        k = 1
    for t, arm, _, kind, args in trace.events:
        if k == len(wanted):
            break
        if kind == "pull":
            if track_pulls:
                replay.pull(arm)
            while k < len(wanted) and wanted[k] == t:
                found[t] = replay.current()
                k += 1
        else:
            replay.apply(arm, kind, args)
    final = replay.current()
    for T in wanted[k:]:
        found[T] = final
    out = []
    for T in budgets:
        arms = tuple(sorted(found[T]))
        out.append(CandidateReport(algorithm, T, len(arms), arms))
    return out


def candidate_set(trace, algorithm, n_arms, T):
    """Candidate set of a single run at budget ``T``; see :func:`candidate_sets`."""
    return candidate_sets(trace, algorithm, n_arms, [T])[0]


def b3_processing_cost(n0, schedule="geometric"):
    """Pulls B3 spends to fully process ``n0`` arms at the base level."""
    schedule = Schedule.coerce(schedule)
    counts = flow_recursion(n0, max(1, n0.bit_length()))
    return sum(n * schedule_budget(l, schedule) for l, n in enumerate(counts) if n)


def c0_bounds(algorithm, T):
    """Closed-form ``(lower, upper)`` bounds on the candidate-set size at budget ``T``.

    us: exactly ``T`` (data-poor regime).
    bsh: ``4T / log2(4T)**2 <= c0 <= 2T / (log2 T - log2 log2 T)**2 - 1``,
    both floored.
    b3: the number of arms the budget can fully process at the base level,
    from the flow recursion; the lower end is the largest ``n0`` whose
    processing cost is at most ``T / 2`` and the upper end the smallest
    ``n0`` whose cost reaches ``T``. The per-arm cost converges, so both
    approach a fixed fraction of ``T`` as the budget grows.
    """
    T = check_count(T, "T", minimum=2)
    if algorithm == "us":
        return T, T
    if algorithm == "bsh":
        lower = 4 * T / math.log2(4 * T) ** 2
        upper = 2 * T / (math.log2(T) - math.log2(math.log2(T))) ** 2 - 1
        return math.floor(lower), math.floor(upper)
    if algorithm == "b3":
        return _largest_within(T / 2), _smallest_reaching(T)
    raise ValueError(f"no closed-form candidate bounds for algorithm {algorithm!r}")


def _smallest_reaching(budget):
    lo, hi = 1, 2
    while b3_processing_cost(hi) < budget:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if b3_processing_cost(mid) >= budget:
            hi = mid
        else:
            lo = mid + 1
    return lo


def _largest_within(budget):
    if b3_processing_cost(1) > budget:
        return 0
    n = _smallest_reaching(budget)
    return n if b3_processing_cost(n) <= budget else n - 1


def candidate_bound_report(algorithm, T):
    lower, upper = c0_bounds(algorithm, T)
    return CandidateReport(algorithm, T, lower, method="closed_form_bound", bounds=(lower, upper))


def _check_counts(N, n_eps, c0):
    N = check_count(N, "N", minimum=1)
    n_eps = check_count(n_eps, "n_eps")
    c0 = check_count(c0, "c0")
    if n_eps > N:
        raise ValueError(f"n_eps={n_eps} exceeds N={N}")
    if c0 > N:
        raise ValueError(f"c0={c0} exceeds N={N}")
    return N, n_eps, c0


def _log_comb(n, k):
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def non_inclusion_exact(N, n_eps, c0):
    """Probability that ``c0`` arms drawn without replacement miss all ``n_eps`` good arms.

    Equals ``C(N - n_eps, c0) / C(N, c0)``, evaluated in log space, and 0
    when ``c0 + n_eps > N``.
    """
    N, n_eps, c0 = _check_counts(N, n_eps, c0)
    if c0 + n_eps > N:
        return 0.0
    if n_eps == 0 or c0 == 0:
        return 1.0
    return math.exp(_log_comb(N - n_eps, c0) - _log_comb(N, c0))


def is_data_poor(N, n_eps, c0):
    """True when the candidate set can miss every eps-best arm: ``c0 <= N - n_eps``.

    ``n_eps == 0`` (the exact-best reading with nothing counted) falls back
    to ``c0 < N``.
    """
    N, n_eps, c0 = _check_counts(N, n_eps, c0)
    return c0 <= N - max(n_eps, 1)


def decompose_error(outcomes, instance, eps, algorithm="", T=0):
    """Split the misidentification rate at tolerance ``eps``.

    ``outcomes`` yields ``(candidate labels, recommended label)`` pairs in
    ``instance``'s labels. Each trial is flagged for non-inclusion
    (``mu_1 - max_C mu > eps / 2``), within-set error
    (``max_C mu - mu_rec > eps / 2``) and total error (``mu_1 - mu_rec > eps``).
    """
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    mu = np.asarray(instance.arm_means, dtype=float)
    best = float(mu.max())
    half = eps / 2.0
    flags = []
    for cand, rec in outcomes:
        cand = list(cand)
        if not cand:
            raise ValueError("every outcome needs a nonempty candidate set")
        if rec not in cand:
            raise ValueError(f"recommended arm {rec} is not in its candidate set")
        top = float(mu[cand].max())
        got = float(mu[rec])
        flags.append((best - top > half, top - got > half, best - got > eps))
    if not flags:
        raise ValueError("no outcomes to decompose")
    n = len(flags)
    rates = [sum(f[i] for f in flags) / n for i in range(3)]
    return ErrorDecomposition(float(eps), rates[0], rates[1], rates[2], n, algorithm, T,
                              tuple(flags))
