"""Per-level pull schedules and the rates that optimise them."""

import math
from dataclasses import dataclass
from functools import lru_cache

_RATE_EQUATIONS = {
    "geometric": lambda r: r + r ** 1.5 - 4.0,
    "linear_geometric": lambda r: r - 2.0 * r ** 1.5 + 2.0,
}

SCHEDULE_KINDS = ("geometric", "linear_geometric", "custom")


def bisect_root(f, lo, hi, tol=1e-12, max_iter=200):
    """Root of ``f`` on ``[lo, hi]`` by bisection, stopping once ``|f| < tol``.

    ``f(lo)`` and ``f(hi)`` must have opposite signs. If the bracket collapses
    to adjacent floats first, the endpoint with the smaller residual is
    returned.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo < 0) == (fhi < 0):
        raise ValueError(f"f({lo}) and f({hi}) have the same sign")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if abs(fmid) < tol:
            return mid
        if mid in (lo, hi):
            break
        if (fmid < 0) == (flo < 0):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
    return lo if abs(flo) <= abs(fhi) else hi


@lru_cache(maxsize=None)
def solve_rate(kind="geometric"):
    """Growth rate of the per-level budget that minimises the halving error bound.

    ``geometric`` solves ``r + r**1.5 = 4`` (schedule ``r**l``);
    ``linear_geometric`` solves ``r - 2 r**1.5 + 2 = 0`` (schedule
    ``(l + 1) r**l``). Both roots lie in (1, 2).
    """
    try:
        f = _RATE_EQUATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown rate kind {kind!r}; expected one of {tuple(_RATE_EQUATIONS)}") from None
    return bisect_root(f, 1.0, 2.0)


def ceil_guarded(x, tol=1e-9):
    """``ceil(x)``, except values within ``tol`` of an integer snap to it."""
    k = round(x)
    if abs(x - k) <= tol:
        return int(k)
    return math.ceil(x)


@dataclass(frozen=True)
class Schedule:
    """Number of pulls granted at each level ``l``.

    geometric: ``ceil(r0**l)``; linear_geometric: ``ceil((l + 1) r0**l)``;
    custom: ``table[l]``. ``r0=None`` picks the optimal rate for the kind.
    """

    kind: str = "geometric"
    r0: float = None
    table: tuple = ()

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}; expected one of {SCHEDULE_KINDS}")
        if self.kind == "custom":
            table = tuple(int(v) for v in self.table)
            if not table:
                raise ValueError("a custom schedule needs a nonempty table")
            if any(v < 1 for v in table) or any(b < a for a, b in zip(table, table[1:])):
                raise ValueError("custom schedule entries must be >= 1 and nondecreasing")
            object.__setattr__(self, "table", table)
            return
        r0 = solve_rate(self.kind) if self.r0 is None else float(self.r0)
        if not 1.0 < r0 <= 2.0:
            raise ValueError(f"r0 must lie in (1, 2], got {r0}")
        object.__setattr__(self, "r0", r0)

    def __call__(self, level):
        return schedule_budget(level, self)

    @classmethod
    def coerce(cls, spec):
        """Build a schedule from a kind name, a bare rate, a dict or a Schedule."""
        if isinstance(spec, Schedule):
            return spec
        if spec is None:
            return cls()
        if isinstance(spec, str):
            return cls(spec)
        if isinstance(spec, (int, float)):
            return cls("geometric", float(spec))
        if isinstance(spec, dict):
            return cls(spec.get("kind", "geometric"), spec.get("r0"), tuple(spec.get("table", ())))
        raise ValueError(f"cannot build a schedule from {spec!r}")


@lru_cache(maxsize=4096)
def schedule_budget(level, schedule):
    """Pulls per arm at ``level`` under ``schedule``."""
    if isinstance(level, bool) or not isinstance(level, int) or level < 0:
        raise ValueError(f"level must be a nonnegative integer, got {level!r}")
    if schedule.kind == "custom":
        if level >= len(schedule.table):
            raise ValueError(f"level {level} is past the end of the custom schedule "
                             f"({len(schedule.table)} entries)")
        return schedule.table[level]
    if schedule.kind == "geometric":
        return ceil_guarded(schedule.r0 ** level)
    return ceil_guarded((level + 1) * schedule.r0 ** level)
