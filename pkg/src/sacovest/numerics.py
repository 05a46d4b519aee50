"""Dense small-matrix kernels and a seeded, stream-splittable random source.

Everything operates on plain numpy arrays (row-major, float64). Inputs that
cross a public boundary are validated with :func:`as_vector` / :func:`as_matrix`,
which enforce finiteness and shape.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NonConvergence, NotPositiveDefinite, SingularMatrix

_MASK64 = (1 << 64) - 1


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Validate and return a finite 1-d float64 array."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"expected dim {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def as_matrix(a, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Validate and return a finite 2-d float64 array."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    if rows is not None and m.shape[0] != rows:
        raise ValueError(f"expected {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise ValueError(f"expected {cols} cols, got {m.shape[1]}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


class RngStream:
    """Counter-based generator keyed by (seed, stream_id).

    Disjoint stream ids give statistically independent, order-independent
    sequences, so replication k can always be reproduced in isolation.
    A stream is single-owner: never share one across workers.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def uniforms(self, n: int) -> np.ndarray:
        """n doubles uniform on [0, 1)."""
        return self._gen.random(n)

    def standard_normals(self, n: int) -> np.ndarray:
        """n standard normals via Box-Muller on consecutive uniform pairs.

        Pairing is positional: uniforms (u[2i], u[2i+1]) produce normals
        (z[2i], z[2i+1]), so drawing in chunks consumes the stream exactly
        like repeated smaller draws of even size.
        """
        m = (n + 1) // 2
        u = self._gen.random(2 * m)
        r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        theta = (2.0 * np.pi) * u[1::2]
        z = np.empty(2 * m)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        return z[:n]


def gaussian_vector(rng: RngStream, factor: np.ndarray) -> np.ndarray:
    """Draw L @ z with z standard normal; covariance is L @ L.T."""
    dim = factor.shape[0]
    z = rng.standard_normals(2 * ((dim + 1) // 2))
    return factor @ z[:dim]


def solve_linear(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A X = B by Gaussian elimination with partial pivoting.

    No symmetry is assumed. Raises SingularMatrix when a pivot falls below
    1e-12 times the largest initial entry magnitude.
    """
    a = np.array(a, dtype=float)
    r = a.shape[0]
    if a.shape != (r, r):
        raise ValueError(f"A must be square, got {a.shape}")
    b_arr = np.array(b, dtype=float)
    vector_rhs = b_arr.ndim == 1
    x = b_arr.reshape(r, -1) if vector_rhs else b_arr.copy()
    if x.shape[0] != r:
        raise ValueError("B row count does not match A")
    if r == 0:
        return x[:, 0] if vector_rhs else x

    tol = 1e-12 * max(np.abs(a).max(), 1e-300)
    for k in range(r):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[p, k]) < tol:
            raise SingularMatrix(f"pivot {a[p, k]!r} below tolerance {tol!r} at column {k}")
        if p != k:
            a[[k, p]] = a[[p, k]]
            x[[k, p]] = x[[p, k]]
        mult = a[k + 1:, k] / a[k, k]
        a[k + 1:, k + 1:] -= np.outer(mult, a[k, k + 1:])
        x[k + 1:] -= np.outer(mult, x[k])
    for k in range(r - 1, -1, -1):
        x[k] = (x[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x[:, 0] if vector_rhs else x


def _power_top_eig(m: np.ndarray, start: np.ndarray, max_iter: int) -> tuple[float, bool]:
    """Top eigenvalue of symmetric PSD m from a given start; (value, stalled)."""
    v = start / np.linalg.norm(start)
    lam = 0.0
    stable = 0
    for _ in range(max_iter):
        w = m @ v
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return lam, True  # start was in the nullspace
        lam_new = float(v @ w)
        v = w / norm_w
        if abs(lam_new - lam) <= 1e-13 * max(abs(lam_new), 1e-300):
            stable += 1
            if stable >= 3:
                return lam_new, False
        else:
            stable = 0
        lam = lam_new
    raise NonConvergence("power iteration did not stabilize in "
                         f"{max_iter} iterations")


def operator_norm(a: np.ndarray, max_iter: int = 10_000) -> float:
    """Largest singular value via power iteration on the Gram matrix.

    Deterministic all-ones start; one re-seed with a fixed low-discrepancy
    vector if the start lands in the nullspace.
    """
    a = as_matrix(a)
    if a.size == 0 or not np.any(a):
        return 0.0
    # iterate on the smaller Gram matrix
    m = a @ a.T if a.shape[0] <= a.shape[1] else a.T @ a
    scale = np.abs(m).max()
    m = m / scale
    n = m.shape[0]
    lam, stalled = _power_top_eig(m, np.ones(n), max_iter)
    if stalled:
        phi = (np.sqrt(5.0) - 1.0) / 2.0
        reseed = 0.5 + np.modf((np.arange(1, n + 1)) * phi)[0]
        lam2, stalled2 = _power_top_eig(m, reseed, max_iter)
        if not stalled2:
            lam = max(lam, lam2)
    return math.sqrt(max(lam, 0.0) * scale)


def spd_factor(s: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L @ L.T = S (Cholesky).

    Raises NotPositiveDefinite on a nonpositive diagonal pivot.
    """
    s = as_matrix(s)
    r = s.shape[0]
    if s.shape != (r, r):
        raise ValueError(f"S must be square, got {s.shape}")
    scale = max(np.abs(s).max(), 1e-300)
    if r and np.abs(s - s.T).max() > 1e-8 * scale:
        raise ValueError("S is not symmetric")
    low = np.zeros_like(s)
    for j in range(r):
        pivot = s[j, j] - low[j, :j] @ low[j, :j]
        if pivot <= 0.0:
            raise NotPositiveDefinite(f"nonpositive pivot {pivot!r} at index {j}")
        low[j, j] = math.sqrt(pivot)
        if j + 1 < r:
            low[j + 1:, j] = (s[j + 1:, j] - low[j + 1:, :j] @ low[j, :j]) / low[j, j]
    return low
