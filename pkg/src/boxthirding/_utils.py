"""Validation helpers, error types and the buffered random source."""

import numbers

import numpy as np

_BUFFER = 4096


class NoRecommendationError(RuntimeError):
    """Raised when a recommendation is requested before any pull."""


class PolicyStalled(RuntimeError):
    """Raised by ``step`` when the policy cannot spend another pull."""


class InsufficientBudgetError(ValueError):
    """Raised when a fixed-budget policy cannot afford one pass of its schedule."""


class InvariantError(AssertionError):
    """An internal precondition was violated."""


class DataError(ValueError):
    """Malformed input data (for example a bad caption-count row)."""


class ConfigError(ValueError):
    """Malformed experiment configuration; the message names the field."""


class RandomSource:
    """A numpy ``Generator`` with buffered scalar draws.

    Per-pull simulation draws one scalar at a time, which is slow through the
    numpy API. Draws are taken in blocks and handed out from a Python list, so
    the stream is a deterministic function of the seed and the call sequence.
    """

    def __init__(self, seed=None):
        if isinstance(seed, np.random.Generator):
            self.generator = seed
        else:
            self.generator = np.random.default_rng(seed)
        self._normals = []
        self._uniforms = []

    def normal(self):
        if not self._normals:
            self._normals = self.generator.standard_normal(_BUFFER).tolist()
        return self._normals.pop()

    def random(self):
        if not self._uniforms:
            self._uniforms = self.generator.random(_BUFFER).tolist()
        return self._uniforms.pop()

    def randbelow(self, n):
        """Uniform integer in ``[0, n)``."""
        k = int(self.random() * n)
        return k if k < n else n - 1

    def __repr__(self):
        return f"RandomSource({self.generator.bit_generator!r})"


def check_random_source(seed):
    """Turn ``seed`` into a :class:`RandomSource`.

    Accepts ``None``, an int, a ``SeedSequence``, a numpy ``Generator`` or an
    existing ``RandomSource`` (returned unchanged).
    """
    if isinstance(seed, RandomSource):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence,
                                         np.random.Generator)):
        return RandomSource(seed)
    raise ValueError(f"{seed!r} cannot be used to seed a RandomSource")


def check_count(value, name, minimum=0):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_positive(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ValueError(f"{name} must be a real number, got {value!r}")
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    return float(value)


def argmax_label(labels, pulls, sums):
    """Label with the largest empirical mean; ties go to the lowest label."""
    best = None
    best_mean = 0.0
    for a in labels:
        m = sums[a] / pulls[a]
        if best is None or m > best_mean or (m == best_mean and a < best):
            best, best_mean = a, m
    return best
