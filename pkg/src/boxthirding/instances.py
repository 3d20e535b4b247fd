"""Bandit instances, reward noise models and caption-contest ingestion."""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ._utils import DataError, check_count, check_positive, check_random_source

NOISE_KINDS = ("gaussian", "bernoulli", "kumaraswamy", "deterministic")

# Top mean used by the alpha family when rewards must live in (0, 1).
_UNIT_CLAMP = 1.0 - 1e-9

CAPTION_COLUMNS = ("id", "not_funny", "somewhat_funny", "funny")


@dataclass(frozen=True)
class NoiseModel:
    """Reward distribution family around each arm mean.

    ``gaussian`` uses ``sigma``; a Gaussian with ``sigma == 0`` is stored as
    ``deterministic``. ``bernoulli`` and ``kumaraswamy`` ignore ``sigma`` and
    need every mean strictly inside (0, 1).
    """

    kind: str = "gaussian"
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.kind == "gaussian":
            if not (isinstance(self.sigma, (int, float)) and self.sigma >= 0):
                raise ValueError(f"gaussian sigma must be a nonnegative real, got {self.sigma!r}")
            if self.sigma == 0:
                object.__setattr__(self, "kind", "deterministic")
        if self.kind != "gaussian":
            object.__setattr__(self, "sigma", 0.0)
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def needs_unit_means(self):
        return self.kind in ("bernoulli", "kumaraswamy")

    def to_dict(self):
        if self.kind == "gaussian":
            return {"kind": self.kind, "sigma": self.sigma}
        return {"kind": self.kind}

    @classmethod
    def from_dict(cls, d):
        if isinstance(d, str):
            return cls(d) if d != "gaussian" else cls(d, 1.0)
        return cls(d.get("kind", "gaussian"), d.get("sigma", 1.0))


@dataclass(frozen=True)
class ArmMeans:
    """Arm means in source order, with optional string ids."""

    values: np.ndarray
    ids: tuple = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "ids", tuple(self.ids))

    def __len__(self):
        return len(self.values)

    @property
    def spread(self):
        """max - min of the means."""
        return float(self.values.max() - self.values.min())


@dataclass(frozen=True, eq=False)
class BanditInstance:
    """Arm means plus a noise model, seen by policies through a presentation order.

    ``means`` is stored in the generator's natural order. Policies address
    arms by *label*: label ``k`` is the natural arm ``order[k]``. Keeping the
    two apart means a policy never sees that synthetic means are sorted.
    """

    means: np.ndarray
    noise: NoiseModel = field(default_factory=NoiseModel)
    order: np.ndarray = None

    def __post_init__(self):
        means = np.array(self.means, dtype=float).ravel()
        if means.size < 1:
            raise ValueError("an instance needs at least one arm")
        if not np.all(np.isfinite(means)):
            raise ValueError("arm means must be finite")
        noise = self.noise
        if not isinstance(noise, NoiseModel):
            noise = NoiseModel.from_dict(noise)
        if noise.needs_unit_means and not np.all((means > 0) & (means < 1)):
            raise ValueError(f"{noise.kind} rewards need every mean strictly inside (0, 1)")
        n = means.size
        order = np.arange(n) if self.order is None else np.array(self.order, dtype=np.int64)
        if order.shape != (n,) or not np.array_equal(np.sort(order), np.arange(n)):
            raise ValueError("order must be a permutation of 0..N-1")
        means.setflags(write=False)
        order.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "noise", noise)
        object.__setattr__(self, "order", order)
        presented = means[order]
        presented.setflags(write=False)
        object.__setattr__(self, "arm_means", presented)
        object.__setattr__(self, "_mu", presented.tolist())
        object.__setattr__(self, "sample", getattr(self, "_sample_" + noise.kind))

    def __reduce__(self):
        return (BanditInstance, (self.means, self.noise, self.order))

    @property
    def n_arms(self):
        return self.means.size

    @property
    def best_mean(self):
        return float(self.means.max())

    @property
    def worst_mean(self):
        return float(self.means.min())

    @property
    def best_gap(self):
        """mu_1 - mu_2 (0 for a single arm)."""
        if self.n_arms == 1:
            return 0.0
        top2 = np.sort(self.means)[-2:]
        return float(top2[1] - top2[0])

    def natural(self, label):
        """Natural index of the arm shown to policies as ``label``."""
        return int(self.order[label])

    def regret(self, label):
        """Simple regret of recommending ``label``."""
        return self.best_mean - self._mu[label]

    def with_order(self, order):
        return BanditInstance(self.means, self.noise, order)

    def shuffled(self, random_state=None):
        """Copy with a uniformly random presentation order."""
        rng = check_random_source(random_state)
        return self.with_order(rng.generator.permutation(self.n_arms))

    def with_noise(self, noise):
        return BanditInstance(self.means, noise, self.order)

    # One of these is bound to ``self.sample`` at construction.
    def _sample_gaussian(self, arm, rng):
        return self._mu[arm] + self.noise.sigma * rng.normal()

    def _sample_bernoulli(self, arm, rng):
        return 1.0 if rng.random() < self._mu[arm] else 0.0

    def _sample_kumaraswamy(self, arm, rng):
        # inverse CDF of Kumaraswamy(a, 1) with a = mu / (1 - mu)
        mu = self._mu[arm]
        return rng.random() ** ((1.0 - mu) / mu)

    def _sample_deterministic(self, arm, rng):
        return self._mu[arm]


def sample_reward(instance, arm, random_state):
    """Draw one reward for label ``arm``.

    ``random_state`` should be a :class:`RandomSource` shared across calls;
    anything else is wrapped in a fresh one.
    """
    if isinstance(arm, bool) or not 0 <= arm < instance.n_arms:
        raise ValueError(f"arm {arm!r} out of range for {instance.n_arms} arms")
    return instance.sample(int(arm), check_random_source(random_state))


def alpha_means(n_arms, alpha, top_mean=1.0):
    """Means ``top_mean - (i / N) ** alpha`` for ``i = 0..N-1``."""
    n_arms = check_count(n_arms, "N", minimum=1)
    alpha = check_positive(alpha, "alpha")
    return top_mean - (np.arange(n_arms) / n_arms) ** alpha


def make_alpha_instance(n_arms, alpha, random_state=None, top_mean=1.0, noise=None):
    """Synthetic instance whose gaps follow ``((i - 1) / N) ** alpha``.

    Arm 0 (natural order) is the best. The presentation order is drawn from
    ``random_state``; with ``None`` it is the identity. For Bernoulli and
    Kumaraswamy noise a top mean of 1 is pulled just inside the unit interval.
    """
    noise = NoiseModel() if noise is None else noise
    if not isinstance(noise, NoiseModel):
        noise = NoiseModel.from_dict(noise)
    if noise.needs_unit_means and top_mean >= 1.0:
        top_mean = _UNIT_CLAMP
    means = alpha_means(n_arms, alpha, top_mean)
    order = None
    if random_state is not None:
        order = check_random_source(random_state).generator.permutation(n_arms)
    return BanditInstance(means, noise, order)


def n_eps(means, eps):
    """Number of eps-best arms, i.e. arms with ``max(means) - mu < eps``.

    With ``eps == 0`` this counts the exact maximizers.
    """
    means = np.asarray(getattr(means, "values", means), dtype=float)
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    gaps = means.max() - means
    if eps == 0:
        return int(np.count_nonzero(gaps <= 0))
    return int(np.count_nonzero(gaps < eps))


def caption_means_from_counts(rows):
    """Per-caption share of "somewhat funny" and "funny" votes.

    ``rows`` yields ``(id, not_funny, somewhat_funny, funny)``.
    """
    ids, values = [], []
    for row in rows:
        if len(row) != 4:
            raise DataError(f"expected 4 fields per row, got {len(row)}: {row!r}")
        rid, *raw = row
        try:
            counts = [int(c) for c in raw]
        except (TypeError, ValueError):
            raise DataError(f"row {rid!r}: counts must be integers, got {raw!r}") from None
        if any(c < 0 for c in counts):
            raise DataError(f"row {rid!r}: negative vote count {counts!r}")
        total = sum(counts)
        if total == 0:
            raise DataError(f"row {rid!r}: no votes")
        ids.append(str(rid))
        values.append((counts[1] + counts[2]) / total)
    if not values:
        raise DataError("no caption rows")
    return ArmMeans(values, ids)


def read_caption_csv(path):
    """Load caption means from a CSV with header ``id,not_funny,somewhat_funny,funny``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CAPTION_COLUMNS:
            raise DataError(f"{path}: header must be {','.join(CAPTION_COLUMNS)}, got {header!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            rows.append(row)
    return caption_means_from_counts(rows)


def kumaraswamy_variance(mu):
    """Variance of the Kumaraswamy(mu / (1 - mu), 1) reward."""
    return mu * (1.0 - mu) ** 2 / (2.0 - mu)


def noise_scale(instance, arm):
    """Standard deviation of one reward from label ``arm``."""
    mu = instance.arm_means[arm]
    kind = instance.noise.kind
    if kind == "gaussian":
        return instance.noise.sigma
    if kind == "bernoulli":
        return math.sqrt(mu * (1.0 - mu))
    if kind == "kumaraswamy":
        return math.sqrt(kumaraswamy_variance(mu))
    return 0.0
