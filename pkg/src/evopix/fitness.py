"""Hinge fitness for targeted/untargeted attacks and the success predicates.

The attacker maximizes fitness; a strictly positive value implies the attack
criterion already holds (unique argmax at / away from the reference class).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

SUM_ACCEPT_TOL = 1e-6   # |sum - 1| below this: accept as-is
SUM_REJECT_TOL = 1e-3   # |sum - 1| above this: oracle protocol error


@dataclass(frozen=True)
class ProbabilityVector:
    """Softmax output over C classes; the only signal the attacker sees."""

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.probs) < 2:
            raise ValueError("probability vector needs at least 2 classes")

    @classmethod
    def from_raw(cls, values: Sequence[float]) -> "ProbabilityVector":
        """Validate raw oracle output.

        Entries must be non-negative.  Sums within 1e-6 of 1 pass through
        untouched; drift up to 1e-3 is renormalized (finite-precision remote
        oracles); anything worse is rejected rather than silently repaired.
        """
        vals = tuple(float(v) for v in values)
        if len(vals) < 2:
            raise ValueError(f"probability vector needs at least 2 classes, got {len(vals)}")
        if any(v < 0.0 for v in vals):
            raise ValueError("probability vector has a negative entry")
        total = sum(vals)
        err = abs(total - 1.0)
        if err <= SUM_ACCEPT_TOL:
            return cls(vals)
        if err <= SUM_REJECT_TOL:
            return cls(tuple(v / total for v in vals))
        raise ValueError(f"probabilities sum to {total!r}, outside the {SUM_REJECT_TOL} tolerance")

    def __len__(self) -> int:
        return len(self.probs)

    def argmax(self) -> int:
        """Index of the largest probability; ties break to the lowest index."""
        best, best_i = self.probs[0], 0
        for i, v in enumerate(self.probs):
            if v > best:
                best, best_i = v, i
        return best_i


@dataclass(frozen=True)
class Targeted:
    target: int


@dataclass(frozen=True)
class Untargeted:
    original: int


AttackMode = Union[Targeted, Untargeted]


def _check_index(p: ProbabilityVector, idx: int) -> None:
    if not (0 <= idx < len(p)):
        raise ValueError(f"class index {idx} out of range for {len(p)} classes")


def fitness_targeted(p: ProbabilityVector, target: int) -> float:
    """p[target] minus the best other class; in [-1, 1], positive on success."""
    _check_index(p, target)
    other = max(v for i, v in enumerate(p.probs) if i != target)
    return p.probs[target] - other


def fitness_untargeted(p: ProbabilityVector, original: int) -> float:
    """Best non-original class minus p[original]; in [-1, 1], positive on success."""
    _check_index(p, original)
    other = max(v for i, v in enumerate(p.probs) if i != original)
    return other - p.probs[original]


def fitness_for(p: ProbabilityVector, mode: AttackMode) -> float:
    if isinstance(mode, Targeted):
        return fitness_targeted(p, mode.target)
    return fitness_untargeted(p, mode.original)


def is_success(p: ProbabilityVector, mode: AttackMode) -> bool:
    """Misclassification test on the argmax; an argmax tie resolves to the
    lowest index, so tying with the original does not count as success."""
    if isinstance(mode, Targeted):
        _check_index(p, mode.target)
        return p.argmax() == mode.target
    _check_index(p, mode.original)
    return p.argmax() != mode.original
