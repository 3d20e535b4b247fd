"""Reference policies: uniform sampling, sequential halving and two bracketed methods."""

import heapq
import math

from ._utils import ConfigError, InsufficientBudgetError, argmax_label, check_count
from .b3 import BoxThirding
from .base import AnytimePolicy
from .schedules import Schedule, schedule_budget


class UniformSampling(AnytimePolicy):
    """Round-robin over all arms in a random order; recommend the best mean."""

    name = "us"

    def __init__(self, record_trace=True):
        self.record_trace = record_trace

    def _start(self, budget):
        self._order = None

    def _next_arm(self, rng):
        if self._order is None:
            self._order = rng.generator.permutation(self.n_arms_).tolist()
        return self._order[self.t_ % self.n_arms_]

    def _recommend(self):
        pulled = self._order[:min(self.t_, self.n_arms_)]
        return argmax_label(pulled, self.pulls_, self.sums_)


def halving_sizes(n_arms):
    """Survivor counts at the start of each of the ``floor(log2 N) + 1`` rounds."""
    sizes = [n_arms]
    for _ in range(n_arms.bit_length() - 1):
        sizes.append(-(-sizes[-1] // 2))
    return sizes


def sh_t0(n_arms, budget, schedule="geometric"):
    """Largest per-round multiplier ``t0`` whose full plan fits in ``budget`` pulls.

    Round ``l`` pulls each of its survivors ``t0 * T_l`` times, so the plan
    costs ``t0 * sum_l |C_l| T_l``. For ``N`` a power of two this is the
    usual ``max{t : t * sum_l T_l / 2**l <= T / N}``.
    """
    n_arms = check_count(n_arms, "N", minimum=1)
    budget = check_count(budget, "T")
    schedule = Schedule.coerce(schedule)
    unit = sum(n * schedule_budget(l, schedule) for l, n in enumerate(halving_sizes(n_arms)))
    return budget // unit


class SequentialHalving(AnytimePolicy):
    """Fixed-budget sequential halving with a per-round schedule.

    Round ``l`` pulls each survivor ``t0 * schedule(l)`` times and keeps the
    top half (rounded up) by empirical mean. Pulls left over after the last
    round go to the final survivor.
    """

    name = "sh"
    requires_budget = True

    def __init__(self, schedule="geometric", record_trace=True):
        self.schedule = schedule
        self.record_trace = record_trace

    def _start(self, budget):
        if budget is None:
            raise ValueError("sequential halving needs the budget up front")
        self.schedule_ = Schedule.coerce(self.schedule)
        self.t0_ = sh_t0(self.n_arms_, budget, self.schedule_)
        if self.t0_ < 1:
            raise InsufficientBudgetError(
                f"budget {budget} cannot cover one pass of sequential halving over "
                f"{self.n_arms_} arms")
        self.survivors_ = list(range(self.n_arms_))
        self._program = self._rounds()

    def _rounds(self):
        pulls, sums = self.pulls_, self.sums_
        for level in range(len(halving_sizes(self.n_arms_))):
            k = self.t0_ * schedule_budget(level, self.schedule_)
            for arm in self.survivors_:
                for _ in range(k):
                    yield arm
            ranked = sorted(self.survivors_, key=lambda a: (-sums[a] / pulls[a], a))
            self.survivors_ = ranked[:-(-len(ranked) // 2)]
            if self.trace_ is not None:
                self.trace_.mark(self.t_, "halve", None, level)
        last = self.survivors_[0]
        while True:
            yield last

    def _next_arm(self, rng):
        return next(self._program)

    def _recommend(self):
        pulled = [a for a in self.survivors_ if self.pulls_[a]]
        return argmax_label(pulled or [a for a in range(self.n_arms_) if self.pulls_[a]],
                            self.pulls_, self.sums_)


def sh_run(n_arms, budget, schedule, instance, random_state=None):
    """Run sequential halving for exactly ``budget`` pulls and return the chosen label."""
    if n_arms != instance.n_arms:
        raise ValueError(f"N={n_arms} does not match the instance ({instance.n_arms} arms)")
    policy = SequentialHalving(schedule=schedule, record_trace=False)
    return policy.fit(instance, budget, random_state).recommendation_


def bracket_open_time(b):
    """Pulls completed when bracket ``b`` (of ``2**b`` arms) opens."""
    return (b - 1) << (b - 1)


def open_brackets(t):
    """Number of brackets open once ``t`` pulls have been made."""
    b = 0
    while bracket_open_time(b + 1) <= t:
        b += 1
    return b


class _Bracket:
    __slots__ = ("b", "members", "stats", "champion", "champion_mean", "runs", "program")

    def __init__(self, b, members):
        self.b = b
        self.members = members
        self.stats = {}
        self.champion = None
        self.champion_mean = None
        self.runs = 0
        self.program = None

    def mean(self, arm):
        n, s = self.stats[arm]
        return s / n


class _BracketedPolicy(AnytimePolicy):
    """Brackets of ``2, 4, 8, ...`` random arms sharing pulls round-robin.

    Bracket ``b`` opens once ``(b - 1) * 2**(b - 1)`` pulls have been made and
    holds ``min(2**b, N)`` distinct arms drawn uniformly (arms may repeat
    across brackets). Each bracket keeps its own reward statistics.
    """

    def _start(self, budget):
        self.brackets_ = []
        self._turn = 0
        self._serving = None

    def _open(self, rng):
        b = len(self.brackets_) + 1
        size = min(1 << b, self.n_arms_)
        members = rng.generator.choice(self.n_arms_, size=size, replace=False).tolist()
        bracket = _Bracket(b, members)
        bracket.program = self._bracket_program(bracket)
        self.brackets_.append(bracket)
        if self.trace_ is not None:
            self.trace_.mark(self.t_, "bracket_open", None, b)
            for arm in members:
                self.trace_.mark(self.t_, "member", arm, b)

    def _next_arm(self, rng):
        while bracket_open_time(len(self.brackets_) + 1) <= self.t_:
            self._open(rng)
        bracket = self.brackets_[self._turn % len(self.brackets_)]
        self._turn += 1
        self._serving = bracket
        return next(bracket.program)

    def _observe(self, arm, reward):
        st = self._serving.stats[arm]
        st[0] += 1
        st[1] += reward

    def _fallback(self):
        pulled = [a for a in range(self.n_arms_) if self.pulls_[a]]
        return argmax_label(pulled, self.pulls_, self.sums_)


class BracketedSH(_BracketedPolicy):
    """Bracketed sequential halving with doubling restarts.

    Inside bracket ``b`` with ``n`` arms, run ``r`` is a sequential halving
    pass with budget ``2**r * b * 2**b`` spread over ``ceil(log2 n)`` rounds.
    Each completed run names a champion. The recommendation is the champion
    with the best run mean; before any run completes it is the best pulled arm.
    """

    name = "bsh"

    def __init__(self, record_trace=True):
        self.record_trace = record_trace

    def _bracket_program(self, bracket):
        n = len(bracket.members)
        n_rounds = max(1, (n - 1).bit_length())
        base = bracket.b << bracket.b
        while True:
            budget = base << bracket.runs
            stats = {a: [0, 0.0] for a in bracket.members}
            bracket.stats = stats
            survivors = list(bracket.members)
            for _ in range(n_rounds):
                k = max(1, budget // (len(survivors) * n_rounds))
                for arm in survivors:
                    for _ in range(k):
                        yield arm
                ranked = sorted(survivors, key=lambda a: (-stats[a][1] / stats[a][0], a))
                survivors = ranked[:-(-len(ranked) // 2)]
            winner = survivors[0]
            bracket.champion = winner
            bracket.champion_mean = stats[winner][1] / stats[winner][0]
            bracket.runs += 1
            if self.trace_ is not None:
                self.trace_.mark(self.t_, "champion", winner, bracket.b)

    def _recommend(self):
        best, best_mean = None, 0.0
        for br in self.brackets_:
            if br.champion is None:
                continue
            m = br.champion_mean
            if best is None or m > best_mean or (m == best_mean and br.champion < best):
                best, best_mean = br.champion, m
        return self._fallback() if best is None else best


class BracketedUCB(_BracketedPolicy):
    """Brackets run UCB with index ``mean + sqrt(2 ln(1/delta) / n)``.

    Unpulled arms have infinite index (lowest label first). A bracket
    recommends its best empirical mean; the policy recommends the best of
    those.
    """

    name = "bucb"

    def __init__(self, delta=0.1, record_trace=True):
        self.delta = delta
        self.record_trace = record_trace

    def _start(self, budget):
        if not (isinstance(self.delta, (int, float)) and 0.0 < self.delta < 1.0):
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta!r}")
        self._c = 2.0 * math.log(1.0 / self.delta)
        super()._start(budget)

    def radius(self, n):
        """Exploration bonus after ``n`` pulls."""
        return math.sqrt(self._c / n)

    def _bracket_program(self, bracket):
        stats = {a: [0, 0.0] for a in bracket.members}
        bracket.stats = stats
        heap = [(-math.inf, a) for a in sorted(bracket.members)]
        c = self._c
        while True:
            _, arm = heapq.heappop(heap)
            yield arm
            n, s = stats[arm]
            heapq.heappush(heap, (-(s / n + math.sqrt(c / n)), arm))

    def _recommend(self):
        best, best_mean = None, 0.0
        for br in self.brackets_:
            for arm, (n, s) in br.stats.items():
                if not n:
                    continue
                m = s / n
                if best is None or m > best_mean or (m == best_mean and arm < best):
                    best, best_mean = arm, m
        return best


POLICIES = {
    "b3": BoxThirding,
    "us": UniformSampling,
    "sh": SequentialHalving,
    "bsh": BracketedSH,
    "bucb": BracketedUCB,
}


def make_policy(name, **params):
    """Instantiate a registered policy by short name."""
    try:
        cls = POLICIES[name]
    except KeyError:
        raise ConfigError(f"unknown algorithm {name!r}; expected one of {sorted(POLICIES)}") from None
    try:
        return cls(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name}: {exc}") from None
