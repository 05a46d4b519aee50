"""Stepsize sequence and strictly increasing batch boundaries with block bookkeeping."""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class StepSchedule:
    """Polynomially decaying stepsize eta * k**(-alpha), alpha in (1/2, 1)."""

    eta: float = 0.5
    alpha: float = 0.51

    def __post_init__(self):
        if not self.eta > 0:
            raise ValidationError(f"eta must be positive, got {self.eta}")
        if not 0.5 < self.alpha < 1.0:
            raise ValidationError(f"alpha must lie in (1/2, 1), got {self.alpha}")

    def step_at(self, k: int) -> float:
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        return self.eta * k ** -self.alpha


class BatchSchedule:
    """Batch boundaries a_m = floor(c * m**beta), deduplicated to stay strictly increasing.

    a_1 is forced to 1 and collisions resolve as a_m = max(floor(c*m**beta), a_{m-1}+1),
    so every (c, beta) yields a valid strictly increasing integer sequence. Boundaries
    are memoized; extending the memo is idempotent, so concurrent readers are safe.
    """

    def __init__(self, c: float = 1.0, beta: float | None = None, alpha: float = 0.51):
        if beta is None:
            beta = 2.0 / (1.0 - alpha)
        if not c > 0:
            raise ValidationError(f"batch constant c must be positive, got {c}")
        if not beta > 1.0:
            raise ValidationError(f"beta must exceed 1, got {beta}")
        self.c = float(c)
        self.beta = float(beta)
        self._bounds = [1]

    def __repr__(self):
        return f"BatchSchedule(c={self.c!r}, beta={self.beta!r})"

    def _extend_to(self, n: int) -> None:
        bounds = self._bounds
        while bounds[-1] < n:
            m = len(bounds) + 1
            a = max(math.floor(self.c * m ** self.beta), bounds[-1] + 1)
            if a > n:
                # peek showed the next boundary exceeds n; remember it anyway
                # so block_index(n) never re-derives it
                bounds.append(a)
                return
            bounds.append(a)

    def boundaries_upto(self, n: int) -> list[int]:
        """All boundaries a_m <= n, in order."""
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        self._extend_to(n)
        return self._bounds[:bisect_right(self._bounds, n)]

    def block_index(self, k: int) -> tuple[int, int, bool]:
        """(t_k, l_k, is_new_block) for iterate k.

        t_k is the largest boundary <= k, l_k = k - t_k + 1, and is_new_block
        marks k being a boundary itself.
        """
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self._extend_to(k)
        i = bisect_right(self._bounds, k) - 1
        t = self._bounds[i]
        return t, k - t + 1, t == k


def validate_pair(step: StepSchedule, batch: BatchSchedule) -> None:
    """Enforce the consistency requirement beta > 1/(1 - alpha)."""
    bound = 1.0 / (1.0 - step.alpha)
    if not batch.beta > bound:
        raise ValidationError(
            f"beta must exceed 1/(1-alpha) = {bound:.6g}, got beta = {batch.beta:.6g}"
        )
