"""Box Thirding: anytime best-arm identification by ternary comparisons.

Arms sit in boxes keyed by ``(level, deferment)``; a box holds at most three
arms. When a box fills up, its best arm is lifted one level (paying for fresh
pulls), its median arm is deferred to the next box on the same level, and its
worst arm is discarded. The main loop is written as a generator that yields one
arm per pull, so structural moves happen between pulls, in loop order, and
cost nothing.
"""

from collections import deque
from typing import NamedTuple

from ._utils import InvariantError, PolicyStalled, argmax_label, check_count
from .base import AnytimePolicy
from .schedules import Schedule, schedule_budget

VARIANTS = ("data_poor", "comprehensive")
ORDERS = ("random", "sequential")


class Arrangement(NamedTuple):
    lifted: int
    shifted: int
    discarded: int
    lift_pulls: int


class BoxThirding(AnytimePolicy):
    """Box Thirding (B3) policy.

    Parameters
    ----------
    schedule : str, float, dict or Schedule
        Pulls paid for a lift to level ``l``. The default ``"geometric"`` gives
        ``ceil(r0**l)`` with ``r0 ~ 1.728``.
    variant : {"comprehensive", "data_poor"}
        ``data_poor`` stops (raises :class:`PolicyStalled`) once every arm has
        been examined and no box can be arranged. ``comprehensive`` instead
        raises the base level and recycles arms, so it can use any budget.
        Both behave identically until the unexamined pool runs dry.
    order : {"random", "sequential"}
        How a new arm is picked: uniformly among unexamined arms, or lowest
        label first.
    record_trace : bool
        Keep the full event log in ``trace_``.
    """

    name = "b3"

    def __init__(self, schedule="geometric", variant="comprehensive", order="random",
                 record_trace=True):
        self.schedule = schedule
        self.variant = variant
        self.order = order
        self.record_trace = record_trace

    def _start(self, budget):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.order not in ORDERS:
            raise ValueError(f"order must be one of {ORDERS}, got {self.order!r}")
        self.schedule_ = Schedule.coerce(self.schedule)
        n = self.n_arms_
        self.boxes_ = {}
        self.discarded_ = {}
        self.base_level_ = 0
        self.level_ = 0
        self.n_examined_ = 0
        self.pending_lift_ = None
        self._J = {}
        self._pool = list(range(n - 1, -1, -1)) if self.order == "sequential" else list(range(n))
        self._promote = deque()
        self._rng = None
        self._program = self._main_loop()

    # -- grid helpers -------------------------------------------------------

    def box(self, level, j=0):
        return tuple(self.boxes_.get((level, j), ()))

    def is_full(self, level, j=0):
        return len(self.boxes_.get((level, j), ())) == 3

    def deferment_top(self, level):
        """Largest ``j`` with ``Box(level, j)`` nonempty (0 if the level is empty)."""
        return self._J.get(level, 0)

    def _put(self, arm, level, j):
        box = self.boxes_.setdefault((level, j), [])
        if len(box) >= 3:
            raise InvariantError(f"Box({level},{j}) is already full")
        box.append(arm)
        if j > self._J.get(level, 0):
            self._J[level] = j
        if j == 0 and level > self.level_:
            self.level_ = level

    def _refresh_levels(self):
        J = {}
        top = None
        for (l, j), box in self.boxes_.items():
            if box:
                if j > J.get(l, 0):
                    J[l] = j
                if j == 0 and (top is None or l > top):
                    top = l
        self._J = J
        self.level_ = self.base_level_ if top is None else top

    def _mark(self, kind, arm=None, *args):
        if self.trace_ is not None:
            self.trace_.mark(self.t_, kind, arm, *args)

    # -- structural operations ----------------------------------------------

    def arrange_box(self, level, j):
        """Apply the ternary rule to the full ``Box(level, j)``.

        The best arm is moved to ``Box(level + 1, 0)`` and a lift of
        ``schedule(level + 1)`` pulls is scheduled; the median moves to
        ``Box(level, j + 1)``; the worst is discarded. Ties rank the lower
        label higher. The main loop calls this between pulls; calling it by
        hand is meant for inspection and leaves the running loop out of step.
        """
        box = self.boxes_.get((level, j), [])
        if len(box) != 3 or self.is_full(level + 1, 0) or self.is_full(level, j + 1):
            raise InvariantError(f"Box({level},{j}) cannot be arranged")
        if self.pending_lift_ is not None and self.pending_lift_[2] > 0:
            raise InvariantError("a lift is still in progress")
        winner, median, loser = self._rank(box)
        self.boxes_[(level, j)] = []
        if j == self._J.get(level, 0):
            self._refresh_levels()
        self._mark("arrange", None, level, j)
        self._put(median, level, j + 1)
        self._mark("shift", median, level, j + 1)
        self.discarded_[loser] = level
        self._mark("discard", loser, level)
        cost = self._begin_lift(winner, level + 1)
        return Arrangement(winner, median, loser, cost)

    def _rank(self, box):
        pulls, sums = self.pulls_, self.sums_
        return sorted(box, key=lambda a: (-sums[a] / pulls[a], a))

    def _begin_lift(self, arm, level):
        cost = schedule_budget(level, self.schedule_)
        self._put(arm, level, 0)
        self._mark("lift_start", arm, level)
        self.pending_lift_ = (arm, level, cost)
        return cost

    def _drain_lift(self):
        arm, level, remaining = self.pending_lift_
        while remaining > 0:
            remaining -= 1
            self.pending_lift_ = (arm, level, remaining)
            yield arm
        self.pending_lift_ = None
        self._mark("lift_done", arm)

    def _next_new_arm(self):
        if self._promote:
            return self._promote.popleft()
        pool = self._pool
        if self.order == "sequential":
            arm = pool.pop()
        else:
            k = self._rng.randbelow(len(pool))
            pool[k], pool[-1] = pool[-1], pool[k]
            arm = pool.pop()
        self.n_examined_ += 1
        return arm

    def update_base_level(self):
        """Raise the base level once every arm has been examined.

        Arms left in the old base boxes queue up to be lifted into the new
        base level; arms discarded at the old base level return to the pool.
        """
        base = self.base_level_
        if (self.variant != "comprehensive" or self._pool or self._promote
                or self.n_examined_ != self.n_arms_ or self.is_full(base, 0)):
            raise InvariantError("base level can only move when every arm is examined "
                                 "and the base box has room")
        self.base_level_ = base + 1
        self._mark("base_level", None, base + 1)
        for j in range(self._J.get(base, 0) + 1):
            for arm in self.boxes_.pop((base, j), ()):
                self._promote.append(arm)
                self._mark("promote", arm, base + 1)
        readmitted = sorted(a for a, lvl in self.discarded_.items() if lvl == base)
        for arm in readmitted:
            del self.discarded_[arm]
            self._pool.append(arm)
            self._mark("readmit", arm, base)
        self.n_examined_ -= len(readmitted)
        if self.order == "sequential":
            self._pool.sort(reverse=True)
        self._refresh_levels()

    # -- main loop ------------------------------------------------------------

    def _main_loop(self):
        boxes = self.boxes_

        def full(l, j):
            box = boxes.get((l, j))
            return box is not None and len(box) == 3

        while True:
            pulled = False
            for l in range(self.level_, self.base_level_ - 1, -1):
                for j in range(self._J.get(l, 0), -1, -1):
                    if full(l, j) and not full(l + 1, 0) and not full(l, j + 1):
                        self.arrange_box(l, j)
                        yield from self._drain_lift()
                        pulled = True
            base = self.base_level_
            if not full(base, 0) and (self._promote or self._pool):
                arm = self._next_new_arm()
                self._mark("replenish", arm)
                self._begin_lift(arm, base)
                yield from self._drain_lift()
                pulled = True
            elif self.variant == "comprehensive" and not full(base, 0):
                self.update_base_level()
                continue
            if not pulled:
                return

    def _next_arm(self, rng):
        self._rng = rng
        try:
            return next(self._program)
        except StopIteration:
            raise PolicyStalled(f"b3 has no arm left to examine after {self.t_} pulls") from None

    def _recommend(self):
        return argmax_label(self.boxes_[(self.level_, 0)], self.pulls_, self.sums_)

    def occupancy(self):
        """Where every arm is: ``"box"``, ``"discarded"``, ``"queued"`` or ``"unexamined"``."""
        where = ["unexamined"] * self.n_arms_
        for box in self.boxes_.values():
            for a in box:
                where[a] = "box"
        for a in self.discarded_:
            where[a] = "discarded"
        for a in self._promote:
            where[a] = "queued"
        return where

    def check_partition(self):
        """Raise :class:`InvariantError` unless boxes, D, queue and pool partition the arms."""
        seen = []
        for box in self.boxes_.values():
            if len(box) > 3:
                raise InvariantError("a box holds more than three arms")
            seen.extend(box)
        seen.extend(self.discarded_)
        seen.extend(self._promote)
        seen.extend(self._pool)
        if sorted(seen) != list(range(self.n_arms_)):
            raise InvariantError("boxes, discards, queue and pool do not partition the arms")


def _floor_log3(n):
    k, p = 0, 3
    while p <= n:
        k += 1
        p *= 3
    return k


def flow_recursion(n0, levels):
    """Arms reaching each level when ``n0`` arms are fully processed at level 0.

    Returns ``[n_0, ..., n_levels]`` with
    ``n_{l+1} = sum_{i=1}^{floor(log3 n_l)} floor(n_l / 3**i)``.
    """
    n = check_count(n0, "n0", minimum=1)
    levels = check_count(levels, "levels")
    out = [n]
    for _ in range(levels):
        n = sum(n // 3 ** i for i in range(1, _floor_log3(n) + 1))
        out.append(n)
    return out
