"""Generic stochastic-approximation loop with streaming observers.

A run feeds every post-burn-in iterate to the running mean and the
batch-means state, tracks the first exit time from the ball around the
solution, and samples squared distances (to the solution and to the active
manifold) at a configurable stride. Replications are independent workers,
one RngStream per replication index, so results do not depend on worker
count or execution order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .covest import BatchMeansState, MeanState, _bm_core, bm_finalize, update_mean
from .errors import InvalidReps, NumericalDivergence
from .numerics import RngStream, as_vector
from .problems import NoiseModel, Problem
from .schedules import BatchSchedule, StepSchedule

_DIVERGENCE_NORM = 1e12


@dataclass
class RunConfig:
    """Parameters of one SA run; x0/noise default to the problem's own."""

    n: int
    seed: int
    step: StepSchedule = field(default_factory=StepSchedule)
    batch: BatchSchedule = field(default_factory=BatchSchedule)
    k_s: int = 0
    delta: float = 0.5
    x0: np.ndarray | None = None
    noise: NoiseModel | None = None
    diagnostics_stride: int = 1
    burn_in: int = 0
    stream_id: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"n must be nonnegative, got {self.n}")
        if self.k_s > self.n:
            raise ValueError(f"k_s = {self.k_s} exceeds n = {self.n}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.diagnostics_stride < 1:
            raise ValueError("diagnostics_stride must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")


@dataclass
class RunResult:
    x_final: np.ndarray
    x_bar: np.ndarray
    sigma_hat: np.ndarray
    tau: int                      # first exit index >= k_s; n+1 encodes "never"
    containment: bool             # tau > n
    dist_to_star: np.ndarray      # sampled (k, ||x_k - x*||^2) rows
    shadow_sq_dist: np.ndarray    # sampled (k, dist(x_k, M)^2) rows


class _BufferedNoise:
    """Chunked gaussian draws, bit-identical to per-step gaussian_vector calls.

    standard_normals pairs uniforms positionally, so one draw of
    chunk * 2*ceil(d/2) values consumes the stream exactly like `chunk`
    successive per-step draws; rows then pass through the factor the same
    way gaussian_vector does. Only valid for state-independent noise.
    """

    def __init__(self, rng: RngStream, factor: np.ndarray, chunk: int = 512):
        self._rng = rng
        self._factor = factor
        self._dim = factor.shape[0]
        self._row = 2 * ((self._dim + 1) // 2)
        self._chunk = chunk
        self._buf = None
        self._i = chunk

    def __call__(self) -> np.ndarray:
        if self._i >= self._chunk:
            z = self._rng.standard_normals(self._chunk * self._row)
            self._buf = z.reshape(self._chunk, self._row)
            self._i = 0
        row = self._buf[self._i]
        self._i += 1
        return self._factor @ row[:self._dim]


def stopping_time(dists: np.ndarray, k_s: int, delta: float, n: int) -> int:
    """Smallest l >= k_s with dists[l] > delta; n+1 when the ball is never left."""
    dists = np.asarray(dists, dtype=float)
    if dists.shape[0] != n + 1:
        raise ValueError(f"expected {n + 1} distances (indices 0..n), got {dists.shape[0]}")
    exits = np.nonzero(dists[k_s:] > delta)[0]
    return int(k_s + exits[0]) if exits.size else n + 1


def run(problem: Problem, config: RunConfig) -> RunResult:
    """Execute the SA recursion for config.n steps and finalize all observers."""
    dim = problem.dim
    x = as_vector(problem.default_x0() if config.x0 is None else config.x0, dim=dim).copy()
    problem.check_domain(x)
    noise = problem.noise if config.noise is None else config.noise
    x_star = problem.x_star
    eta0, alpha = config.step.eta, config.step.alpha
    n, burn_in, stride = config.n, config.burn_in, config.diagnostics_stride
    delta_sq = config.delta * config.delta
    k_s = config.k_s

    rng = RngStream(config.seed, config.stream_id)
    buffered = noise.state_scale == 0.0
    draw = _BufferedNoise(rng, noise.factor_l, chunk=min(512, max(n, 1))) if buffered else None

    mean = MeanState()
    bm = BatchMeansState(dim, config.batch)
    step_next = problem.step_next
    # block boundaries for the estimator's own iterate counter (k - burn_in)
    bounds = config.batch.boundaries_upto(n - burn_in) if n > burn_in else []
    bound_ptr = 0

    tau = None
    diff0 = x - x_star
    if k_s <= 0 and float(diff0 @ diff0) > delta_sq:
        tau = 0

    dist_rows: list[tuple[int, float]] = []
    shadow_rows: list[tuple[int, float]] = []
    for k in range(1, n + 1):
        eta = eta0 * k ** -alpha
        nu = draw() if buffered else problem.sample_noise(rng, x, noise)
        x = step_next(eta, x, nu, check=False)
        diff = x - x_star
        dist_sq = float(diff @ diff)
        if dist_sq > _DIVERGENCE_NORM ** 2:
            raise NumericalDivergence(
                f"iterate norm exceeded {_DIVERGENCE_NORM:g} at step {k}; stepsize too large?")
        if k > burn_in:
            update_mean(mean, x)
            fed = k - burn_in
            new_block = bound_ptr < len(bounds) and fed == bounds[bound_ptr]
            if new_block:
                bound_ptr += 1
            _bm_core(bm, x, new_block)
        if tau is None and k >= k_s and dist_sq > delta_sq:
            tau = k
        if k % stride == 0 or k == n:
            dist_rows.append((k, dist_sq))
            shadow = x - problem.project_manifold(x)
            shadow_rows.append((k, float(shadow @ shadow)))

    if mean.count > 0:
        x_bar = mean.mean.copy()
        sigma_hat = bm_finalize(bm, mean)
    else:
        x_bar = x.copy()
        sigma_hat = np.zeros((dim, dim))
    return RunResult(
        x_final=x,
        x_bar=x_bar,
        sigma_hat=sigma_hat,
        tau=(n + 1) if tau is None else tau,
        containment=tau is None,
        dist_to_star=np.array(dist_rows, dtype=float).reshape(-1, 2),
        shadow_sq_dist=np.array(shadow_rows, dtype=float).reshape(-1, 2),
    )


def _run_star(args):
    problem, config = args
    return run(problem, config)


def replicate(problem: Problem, config: RunConfig, reps: int,
              threads: int = 1) -> list[RunResult]:
    """reps independent runs with stream_id = replication index, in index order.

    Stream splitting makes the result set invariant to worker count, and
    adding replications never perturbs existing ones.
    """
    if reps < 1:
        raise InvalidReps(f"reps must be >= 1, got {reps}")
    configs = [replace(config, stream_id=rep) for rep in range(reps)]
    if threads <= 1:
        return [run(problem, cfg) for cfg in configs]
    tasks = [(problem, cfg) for cfg in configs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run_star, tasks, chunksize=max(1, reps // (threads * 8))))
