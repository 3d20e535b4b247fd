"""Common surface for anytime policies and the event trace they record."""

import re

from sklearn.base import BaseEstimator

from ._utils import NoRecommendationError, PolicyStalled, check_count, check_random_source

TRACE_HEADER = "t,arm,reward,event"
_EVENT_RE = re.compile(r"^([a-z_]+)(?:\(([^)]*)\))?$")


class PolicyTrace:
    """Ordered log of pulls and structural events.

    Each entry is ``(t, arm, reward, kind, args)``. For a pull, ``t`` is the
    1-based pull index. A structural event happens between pulls and carries
    the number of pulls completed so far; ``arm`` may be ``None`` and
    ``reward`` is always ``None``.
    """

    def __init__(self, algorithm, n_arms):
        self.algorithm = algorithm
        self.n_arms = n_arms
        self.events = []
        self.n_pulls = 0

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def pull(self, t, arm, reward):
        self.events.append((t, arm, reward, "pull", ()))
        self.n_pulls = t

    def mark(self, t, kind, arm=None, *args):
        self.events.append((t, arm, None, kind, args))

    def pulls_per_arm(self, upto=None):
        counts = [0] * self.n_arms
        for t, arm, _, kind, _ in self.events:
            if kind == "pull":
                if upto is not None and t > upto:
                    break
                counts[arm] += 1
        return counts

    def to_lines(self):
        yield TRACE_HEADER
        for t, arm, reward, kind, args in self.events:
            event = f"{kind}({','.join(str(a) for a in args)})" if args else kind
            yield f"{t},{'' if arm is None else arm},{'' if reward is None else repr(reward)},{event}"

    def write(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.to_lines():
                fh.write(line + "\n")

    @classmethod
    def from_lines(cls, lines, algorithm, n_arms):
        trace = cls(algorithm, n_arms)
        it = iter(lines)
        header = next(it, "").strip()
        if header != TRACE_HEADER:
            raise ValueError(f"trace header must be {TRACE_HEADER!r}, got {header!r}")
        for line in it:
            line = line.strip()
            if not line:
                continue
            t, arm, reward, event = line.split(",", 3)
            m = _EVENT_RE.match(event)
            if m is None:
                raise ValueError(f"bad trace event {event!r}")
            kind = m.group(1)
            args = tuple(int(a) for a in m.group(2).split(",")) if m.group(2) else ()
            arm = int(arm) if arm else None
            if kind == "pull":
                trace.pull(int(t), arm, float(reward))
            else:
                trace.events.append((int(t), arm, None, kind, args))
        return trace


class AnytimePolicy(BaseEstimator):
    """A best-arm policy driven one pull at a time.

    Subclasses implement ``_start``, ``_next_arm`` and ``_recommend`` and may
    override ``_observe``. Per-arm pull counts and reward sums live in
    ``pulls_`` and ``sums_``; they are the only statistics a policy consults.

    ``requires_budget`` is true for fixed-budget policies, which must be told
    the total number of pulls before the first step.
    """

    requires_budget = False
    name = "policy"

    def start(self, n_arms, budget=None):
        """Reset all state for a fresh run over ``n_arms`` arms."""
        n_arms = check_count(n_arms, "n_arms", minimum=1)
        self.n_arms_ = n_arms
        self.t_ = 0
        self.pulls_ = [0] * n_arms
        self.sums_ = [0.0] * n_arms
        self.stalled_ = False
        self.trace_ = PolicyTrace(self.name, n_arms) if getattr(self, "record_trace", True) else None
        self._start(budget)
        return self

    def _start(self, budget):
        pass

    def _observe(self, arm, reward):
        pass

    def step(self, instance, random_state):
        """Take exactly one pull and return ``(arm, reward)``.

        Raises :class:`PolicyStalled` if no further pull is possible.
        """
        rng = check_random_source(random_state)
        if self.stalled_:
            raise PolicyStalled(f"{self.name} stalled after {self.t_} pulls")
        try:
            arm = self._next_arm(rng)
        except PolicyStalled:
            self.stalled_ = True
            raise
        reward = instance.sample(arm, rng)
        self.t_ += 1
        self.pulls_[arm] += 1
        self.sums_[arm] += reward
        if self.trace_ is not None:
            self.trace_.pull(self.t_, arm, reward)
        self._observe(arm, reward)
        return arm, reward

    def recommend(self):
        """Current best-arm estimate (a label). Does not change any state."""
        if getattr(self, "t_", 0) == 0:
            raise NoRecommendationError(f"{self.name} has not pulled any arm yet")
        return self._recommend()

    @property
    def means_(self):
        return [s / p if p else float("nan") for s, p in zip(self.sums_, self.pulls_)]

    def run(self, instance, budgets, random_state=None):
        """Step through ``max(budgets)`` pulls and yield ``(T, arm, stalled)`` at each budget.

        ``arm`` is ``None`` when no pull was possible before ``T``.
        """
        rng = check_random_source(random_state)
        budgets = sorted(budgets)
        self.start(instance.n_arms, budgets[-1] if self.requires_budget else None)
        for T in budgets:
            while self.t_ < T and not self.stalled_:
                try:
                    self.step(instance, rng)
                except PolicyStalled:
                    break
            yield T, (self.recommend() if self.t_ else None), self.stalled_

    def fit(self, instance, budget, random_state=None):
        """Spend ``budget`` pulls on ``instance`` (fewer if the policy stalls)."""
        budget = check_count(budget, "budget", minimum=1)
        for _, arm, _ in self.run(instance, [budget], random_state):
            self.recommendation_ = arm
        return self
