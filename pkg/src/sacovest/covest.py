"""Online batch-means covariance estimator and its direct (materializing) twin.

The streaming state keeps five accumulators: A = sum_i s_i s_i', b = sum_i l_i s_i,
c = sum_i l_i^2, L = sum_i l_i and the running block partial sum s. Finalization
is the exact algebraic expansion of the batch-means formula around the running
mean, so the streaming and direct routes agree to rounding error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySequence, EmptyState
from .schedules import BatchSchedule


@dataclass
class MeanState:
    """Running arithmetic mean of the iterates fed so far."""

    count: int = 0
    mean: np.ndarray | None = None


def update_mean(state: MeanState, x: np.ndarray) -> MeanState:
    """mean <- mean + (x - mean)/count; numerically stable running form."""
    state.count += 1
    if state.mean is None:
        state.mean = np.array(x, dtype=float)
    else:
        state.mean += (x - state.mean) / state.count
    return state


class _Kahan:
    """Compensated scalar accumulator; c and L grow like n * max_block**2."""

    __slots__ = ("value", "_comp")

    def __init__(self):
        self.value = 0.0
        self._comp = 0.0

    def add(self, term: float) -> None:
        y = term - self._comp
        t = self.value + y
        self._comp = (t - self.value) - y
        self.value = t


class BatchMeansState:
    """O(d^2) streaming state; holds no iterate history.

    Accumulators store iterates relative to the first one seen (the anchor).
    Each block term satisfies s~_i - l_i (xbar - a) = s_i - l_i xbar exactly,
    so the finalized value is unchanged while the expansion no longer cancels
    catastrophically when the sequence sits far from the origin.
    """

    __slots__ = ("a_mat", "b_vec", "c_scalar", "l_total", "s_cur", "l_cur", "n",
                 "schedule", "anchor")

    def __init__(self, dim: int, schedule: BatchSchedule):
        self.a_mat = np.zeros((dim, dim))
        self.b_vec = np.zeros(dim)
        self.c_scalar = _Kahan()
        self.l_total = _Kahan()
        self.s_cur = np.zeros(dim)
        self.l_cur = 0
        self.n = 0
        self.schedule = schedule
        self.anchor = None


def _bm_core(state: BatchMeansState, x_k: np.ndarray, new_block: bool) -> None:
    """Accumulator arithmetic shared by bm_update and the run loop."""
    state.n += 1
    if state.anchor is None:
        state.anchor = np.array(x_k, dtype=float)
    centered = x_k - state.anchor
    if new_block:
        state.s_cur[:] = centered
        state.l_cur = 1
    else:
        state.s_cur += centered
        state.l_cur += 1
    s = state.s_cur
    state.a_mat += s[:, None] * s[None, :]
    state.b_vec += state.l_cur * s
    state.c_scalar.add(float(state.l_cur) ** 2)
    state.l_total.add(float(state.l_cur))


def bm_update(state: BatchMeansState, x_k: np.ndarray) -> BatchMeansState:
    """Feed one iterate; every index contributes one block term."""
    _, _, new_block = state.schedule.block_index(state.n + 1)
    _bm_core(state, x_k, new_block)
    return state


def bm_finalize(state: BatchMeansState, mean: MeanState) -> np.ndarray:
    """(A - b xbar' - xbar b' + c xbar xbar') / L in anchored coordinates, symmetrized."""
    if state.n == 0:
        raise EmptyState("no iterates fed to the estimator")
    if mean.count != state.n:
        raise ValueError(f"mean count {mean.count} != estimator count {state.n}")
    xbar = mean.mean - state.anchor
    sig = (state.a_mat
           - state.b_vec[:, None] * xbar[None, :]
           - xbar[:, None] * state.b_vec[None, :]
           + state.c_scalar.value * (xbar[:, None] * xbar[None, :]))
    sig /= state.l_total.value
    return 0.5 * (sig + sig.T)


def bm_direct(xs, schedule: BatchSchedule) -> np.ndarray:
    """Materialize every block sum and compute the estimator directly.

    O(n d + n d^2) reference implementation; the streaming path is tested
    against it for exact agreement.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[0] == 0:
        raise EmptySequence("empty iterate sequence")
    n, d = xs.shape
    bounds = np.asarray(schedule.boundaries_upto(n))
    # t_k for k = 1..n via searchsorted on the boundary list
    ks = np.arange(1, n + 1)
    t = bounds[np.searchsorted(bounds, ks, side="right") - 1]
    prefix = np.vstack([np.zeros(d), np.cumsum(xs, axis=0)])
    s = prefix[ks] - prefix[t - 1]
    lengths = (ks - t + 1).astype(float)
    xbar = prefix[n] / n
    dev = s - lengths[:, None] * xbar[None, :]
    sig = dev.T @ dev / lengths.sum()
    return 0.5 * (sig + sig.T)
