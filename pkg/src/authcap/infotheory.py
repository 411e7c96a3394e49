"""Exact finite-alphabet information measures and the binary-entropy toolkit.

Everything here is computed in nats internally; unit conversion happens at
the API boundary.  Probabilities below ``ZERO_EPS`` are treated as exact
zeros before any logarithm is taken (0 log 0 = 0 by continuity).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

LN2 = math.log(2.0)

# Probabilities below this are exact zeros for entropy purposes.
ZERO_EPS = 1e-15

# Mass / row-sum validation tolerance.
MASS_TOL = 1e-12

# Mutual informations this far below zero indicate a malformed joint.
NEGATIVE_MI_TOL = 1e-9


class InvalidDistributionError(ValueError):
    """A probability vector or matrix violates nonnegativity or total mass."""


class AlphabetMismatchError(ValueError):
    """Operands disagree on an alphabet size."""


class MalformedJointError(ValueError):
    """A joint produced an information measure more negative than tolerance."""


class InfoUnit(enum.Enum):
    """Information unit; conversion factor between the two is ln 2."""

    BITS = "bits"
    NATS = "nats"

    def from_nats(self, value: float) -> float:
        return value / LN2 if self is InfoUnit.BITS else value

    def to_nats(self, value: float) -> float:
        return value * LN2 if self is InfoUnit.BITS else value

    @staticmethod
    def parse(name: str) -> "InfoUnit":
        try:
            return InfoUnit(name.lower())
        except ValueError:
            raise ValueError(f"unknown unit {name!r}; expected 'bits' or 'nats'")


def _as_readonly(a) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


def _entropy_nats(p: np.ndarray) -> float:
    """Shannon entropy of a flat nonnegative array summing to ~1, in nats."""
    p = np.asarray(p, dtype=float).ravel()
    mask = p > ZERO_EPS
    q = p[mask]
    return float(-(q * np.log(q)).sum())


@dataclass
class DiscreteDistribution:
    """Probability vector over a finite alphabet."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise InvalidDistributionError("probs must be a nonempty 1-D vector")
        if np.any(p < -MASS_TOL):
            raise InvalidDistributionError(f"negative probability entry: min={p.min()}")
        total = p.sum()
        if abs(total - 1.0) > MASS_TOL:
            raise InvalidDistributionError(f"mass {total} is not 1 within {MASS_TOL}")
        self.probs = _as_readonly(np.clip(p, 0.0, None))

    def __len__(self) -> int:
        return self.probs.size

    @staticmethod
    def uniform(n: int) -> "DiscreteDistribution":
        return DiscreteDistribution(np.full(n, 1.0 / n))


@dataclass
class Channel:
    """Row-stochastic matrix; rows indexed by input symbol, columns by output."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.size == 0:
            raise InvalidDistributionError("channel matrix must be 2-D and nonempty")
        if np.any(m < -MASS_TOL):
            raise InvalidDistributionError(f"negative channel entry: min={m.min()}")
        rows = m.sum(axis=1)
        bad = np.abs(rows - 1.0) > MASS_TOL
        if np.any(bad):
            raise InvalidDistributionError(
                f"rows {np.nonzero(bad)[0].tolist()} do not sum to 1 within {MASS_TOL}"
            )
        self.matrix = _as_readonly(np.clip(m, 0.0, None))

    @property
    def num_inputs(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_outputs(self) -> int:
        return self.matrix.shape[1]

    @staticmethod
    def bsc(p: float) -> "Channel":
        """Binary symmetric channel with crossover probability p."""
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"crossover probability {p} outside [0, 1]")
        return Channel(np.array([[1.0 - p, p], [p, 1.0 - p]]))

    @staticmethod
    def bec(q: float) -> "Channel":
        """Binary erasure channel; output alphabet is (0, 1, erasure)."""
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"erasure probability {q} outside [0, 1]")
        return Channel(np.array([[1.0 - q, 0.0, q], [0.0, 1.0 - q, q]]))

    @staticmethod
    def identity(n: int) -> "Channel":
        return Channel(np.eye(n))

    @staticmethod
    def constant(num_inputs: int, num_outputs: int = 1, index: int = 0) -> "Channel":
        """Channel whose output is the fixed symbol `index` regardless of input."""
        m = np.zeros((num_inputs, num_outputs))
        m[:, index] = 1.0
        return Channel(m)


@dataclass
class JointDistribution:
    """Dense joint law over several finite axes."""

    probs: np.ndarray
    axes: tuple = field(default=None)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if np.any(p < -MASS_TOL):
            raise InvalidDistributionError(f"negative joint entry: min={p.min()}")
        total = p.sum()
        if abs(total - 1.0) > MASS_TOL:
            raise InvalidDistributionError(f"joint mass {total} is not 1 within {MASS_TOL}")
        self.probs = _as_readonly(np.clip(p, 0.0, None))
        self.axes = tuple(p.shape)

    @property
    def ndim(self) -> int:
        return self.probs.ndim

    def marginal(self, keep) -> np.ndarray:
        """Marginal array over the kept axes, in their original order."""
        keep = tuple(keep)
        self._check_axes(keep)
        drop = tuple(i for i in range(self.ndim) if i not in keep)
        out = self.probs.sum(axis=drop) if drop else np.array(self.probs)
        # sum() preserves the relative order of kept axes, which is what we want
        return out

    def _check_axes(self, axes):
        for a in axes:
            if not 0 <= a < self.ndim:
                raise IndexError(f"axis {a} out of range for {self.ndim}-axis joint")
        if len(set(axes)) != len(tuple(axes)):
            raise ValueError(f"repeated axis in {tuple(axes)}")


def entropy(d: DiscreteDistribution, unit: InfoUnit = InfoUnit.BITS) -> float:
    """H(d) = -sum p log p, with 0 log 0 = 0."""
    return unit.from_nats(_entropy_nats(d.probs))


def _marginal_entropy_nats(probs: np.ndarray, keep) -> float:
    drop = tuple(i for i in range(probs.ndim) if i not in keep)
    p = probs.sum(axis=drop) if drop else probs
    return _entropy_nats(p)


def _clamp_mi(value_nats: float) -> float:
    if value_nats < -NEGATIVE_MI_TOL:
        raise MalformedJointError(
            f"mutual information {value_nats} nats below -{NEGATIVE_MI_TOL}; joint is malformed"
        )
    return max(0.0, value_nats)


def mutual_information(j: JointDistribution, axes_a, axes_b,
                       unit: InfoUnit = InfoUnit.BITS) -> float:
    """I(A;B) = H(A) + H(B) - H(A,B) over disjoint axis sets of the joint."""
    axes_a, axes_b = tuple(axes_a), tuple(axes_b)
    j._check_axes(axes_a + axes_b)
    if set(axes_a) & set(axes_b):
        raise ValueError(f"axis sets {axes_a} and {axes_b} overlap")
    p = j.probs
    v = (_marginal_entropy_nats(p, axes_a)
         + _marginal_entropy_nats(p, axes_b)
         - _marginal_entropy_nats(p, axes_a + axes_b))
    return unit.from_nats(_clamp_mi(v))


def conditional_mutual_information(j: JointDistribution, axes_a, axes_b, axes_c,
                                   unit: InfoUnit = InfoUnit.BITS) -> float:
    """I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)."""
    axes_a, axes_b, axes_c = tuple(axes_a), tuple(axes_b), tuple(axes_c)
    j._check_axes(axes_a + axes_b + axes_c)
    sa, sb, sc = set(axes_a), set(axes_b), set(axes_c)
    if sa & sb or sa & sc or sb & sc:
        raise ValueError("axis sets must be pairwise disjoint")
    p = j.probs
    v = (_marginal_entropy_nats(p, axes_a + axes_c)
         + _marginal_entropy_nats(p, axes_b + axes_c)
         - _marginal_entropy_nats(p, axes_a + axes_b + axes_c)
         - _marginal_entropy_nats(p, axes_c))
    return unit.from_nats(_clamp_mi(v))


def compose_channels(first: Channel, second: Channel) -> Channel:
    """Cascade first then second: out(c|a) = sum_b second(c|b) first(b|a)."""
    if first.num_outputs != second.num_inputs:
        raise AlphabetMismatchError(
            f"first has {first.num_outputs} outputs, second expects {second.num_inputs} inputs"
        )
    return Channel(first.matrix @ second.matrix)


def binary_entropy(x: float, unit: InfoUnit = InfoUnit.BITS) -> float:
    """H_b(x) = -x log x - (1-x) log(1-x)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy argument {x} outside [0, 1]")
    v = 0.0
    if x > ZERO_EPS:
        v -= x * math.log(x)
    if 1.0 - x > ZERO_EPS:
        v -= (1.0 - x) * math.log(1.0 - x)
    return unit.from_nats(v)


def binary_entropy_inverse(h: float) -> float:
    """Unique x in [0, 1/2] with H_b(x) = h (h in bits), by bisection."""
    if not 0.0 <= h <= 1.0:
        raise ValueError(f"binary entropy value {h} outside [0, 1]")
    if h == 0.0:
        return 0.0
    if h == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < h:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def convolve(a: float, b: float) -> float:
    """Binary convolution a(1-b) + (1-a)b."""
    if not 0.0 <= a <= 1.0 or not 0.0 <= b <= 1.0:
        raise ValueError(f"convolution arguments ({a}, {b}) outside [0, 1]")
    return a * (1.0 - b) + (1.0 - a) * b
