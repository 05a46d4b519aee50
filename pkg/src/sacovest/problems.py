"""Built-in problem zoo: four nonsmooth instances with analytic ground truth.

Each problem exposes the generalized-gradient step map G_eta(x, nu), a noise
sampler, the projection onto its active manifold (a run diagnostic), and a
GroundTruth bundle (solution, tangent basis, restricted Jacobian, tangent
noise covariance and limiting covariance).

Problems:
  l1quad    diagonal quadratic + l1 penalty; prox (forward-backward) or
            subgradient steps; active manifold is the sparsity pattern.
  boxqp     strongly convex quadratic over a box; projected steps; active
            manifold is the optimal face.
  game      entropy-regularized zero-sum matrix game on a simplex product;
            projected simultaneous gradient play; solution is the quantal
            response equilibrium, interior, so the manifold is the product
            of simplex affine hulls.
  parabola  |x - y^2| + (x^2 + y^2)/2: nonconvex, subgradient steps; the
            active manifold is the parabola x = y^2 and the limiting
            covariance is certified by Monte Carlo only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as _iter_product

import numpy as np

from .errors import (
    InfeasibleInput,
    InvalidBounds,
    NonConvergence,
    NotPositiveDefinite,
    StrictComplementarityViolated,
)
from .inference import limiting_sigma
from .numerics import RngStream, as_matrix, as_vector, gaussian_vector, spd_factor
from .schedules import StepSchedule

_DOMAIN_TOL = 1e-9
_LOG_FLOOR = 1e-12


def soft_threshold(x: np.ndarray, theta: float) -> np.ndarray:
    """Entrywise sign(x) * max(|x| - theta, 0), computed as x - clip(x, -theta, theta).

    The clipped form gives the identical piecewise value and produces exact
    +0.0 inside the dead zone, which downstream manifold-identification
    checks rely on.
    """
    if theta < 0:
        raise ValueError(f"theta must be nonnegative, got {theta}")
    return x - np.clip(x, -theta, theta)


def project_box(v: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Entrywise clamp onto [lo, hi]."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise InvalidBounds("lo exceeds hi on some coordinate")
    return np.clip(v, lo, hi)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = 1}, sort-based."""
    v = np.asarray(v, dtype=float)
    d = v.shape[0]
    s = np.sort(v)[::-1]
    css = np.cumsum(s)
    j = np.arange(1, d + 1)
    rho = np.nonzero(s - (css - 1.0) / j > 0)[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _project_simplex_small(vals: list[float]) -> list[float]:
    """project_simplex on a python list; same arithmetic, fast for tiny blocks."""
    s = sorted(vals, reverse=True)
    css = 0.0
    theta = 0.0
    j = 0
    for sv in s:
        css += sv
        t = (css - 1.0) / (j + 1)
        if sv - t > 0.0:
            theta = t
        j += 1
    return [v - theta if v > theta else 0.0 for v in vals]


def _project_simplex_rows(v: np.ndarray) -> np.ndarray:
    """Row-wise simplex projection for the vectorized Monte Carlo path."""
    n, d = v.shape
    s = -np.sort(-v, axis=1)
    css = np.cumsum(s, axis=1)
    j = np.arange(1, d + 1)
    cond = s - (css - 1.0) / j > 0
    rho = d - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = (css[np.arange(n), rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta[:, None], 0.0)


def qre_oracle(payoff: np.ndarray, lam: float, tol: float = 1e-10,
               damping: float = 0.5, max_iter: int = 10 ** 6):
    """Quantal response equilibrium of the entropy-regularized matrix game.

    Damped fixed-point iteration on the softmax pair
        z <- softmax(A w / lam),  w <- softmax(-A' z / lam)
    stopping when the applied update has sup-norm <= tol.
    """
    a = as_matrix(payoff)
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    d = a.shape[0]
    z = np.full(d, 1.0 / d)
    w = np.full(d, 1.0 / d)

    def smax(u):
        e = np.exp((u - u.max()) / lam)
        return e / e.sum()

    for _ in range(max_iter):
        dz = damping * (smax(a @ w) - z)
        dw = damping * (smax(-a.T @ z) - w)
        z = z + dz
        w = w + dw
        if max(np.abs(dz).max(), np.abs(dw).max()) <= tol:
            return z / z.sum(), w / w.sum()
    raise NonConvergence(
        f"QRE fixed point not reached in {max_iter} iterations; lam={lam} may be "
        "too small for damped iteration")


def helmert_basis(d: int) -> np.ndarray:
    """Orthonormal basis of the zero-sum subspace of R^d, d x (d-1)."""
    h = np.zeros((d, d - 1))
    for j in range(1, d):
        h[:j, j - 1] = 1.0
        h[j, j - 1] = -float(j)
        h[:, j - 1] /= math.sqrt(j * (j + 1))
    return h


@dataclass(frozen=True)
class NoiseModel:
    """Additive gaussian noise L z plus an isotropic state-dependent term.

    The state term is state_scale * ||x - x*|| times a uniformly random unit
    direction, so its conditional second moment is state_scale^2 ||x - x*||^2.
    """

    factor_l: np.ndarray
    state_scale: float = 0.0

    def __post_init__(self):
        as_matrix(self.factor_l)
        if self.state_scale < 0:
            raise ValueError("state_scale must be nonnegative")

    @classmethod
    def isotropic(cls, dim: int, sigma: float, state_scale: float = 0.0) -> "NoiseModel":
        return cls(factor_l=sigma * np.eye(dim), state_scale=state_scale)

    def covariance(self) -> np.ndarray:
        return self.factor_l @ self.factor_l.T


@dataclass(frozen=True)
class GroundTruth:
    """Analytic description of the solution and its limiting covariance."""

    x_star: np.ndarray
    tangent_basis: np.ndarray          # d x r, orthonormal columns
    jacobian_h: np.ndarray             # r x r restricted Jacobian, maybe nonsymmetric
    noise_cov_s: np.ndarray            # r x r tangent noise covariance
    sigma_limit: np.ndarray            # d x d limiting covariance
    active_index_set: frozenset
    sigma_mode: str = "analytic"       # "analytic" | "monte_carlo_only"

    def __post_init__(self):
        u = self.tangent_basis
        r = u.shape[1]
        if r and np.abs(u.T @ u - np.eye(r)).max() > 1e-10:
            raise ValueError("tangent basis is not orthonormal")
        sig = self.sigma_limit
        if np.abs(sig - sig.T).max() > 1e-10:
            raise ValueError("sigma_limit is not symmetric")
        if self.sigma_mode == "analytic":
            ref = limiting_sigma(u, self.jacobian_h, self.noise_cov_s)
            if np.abs(ref - sig).max() > 1e-10:
                raise ValueError("sigma_limit does not match the limiting formula")


class Problem:
    """Base interface shared by the zoo; subclasses fill in the dynamics."""

    id: str = ""
    method: str = ""
    dim: int = 0

    def __init__(self, noise: NoiseModel):
        self.noise = noise
        self._gt = None

    # -- dynamics -------------------------------------------------------
    def drift(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _inner(self, eta: float, v: np.ndarray) -> np.ndarray:
        """Prox / projection applied to the forward point; identity for subgradient."""
        raise NotImplementedError

    def step_next(self, eta: float, x: np.ndarray, nu: np.ndarray,
                  check: bool = True) -> np.ndarray:
        """Next iterate: the prox/projection output itself (kept bit-exact so
        identification-type events like exact zeros survive), or the plain
        subgradient step."""
        if check:
            if eta <= 0:
                raise ValueError(f"eta must be positive, got {eta}")
            self.check_domain(x)
        if self.method == "subgradient":
            return x - eta * (self.drift(x) + nu)
        return self._inner(eta, x - eta * (self.drift(x) + nu))

    def step_map(self, eta: float, x: np.ndarray, nu: np.ndarray) -> np.ndarray:
        """G with x - eta*G the next iterate."""
        if eta <= 0:
            raise ValueError(f"eta must be positive, got {eta}")
        self.check_domain(x)
        if self.method == "subgradient":
            return self.drift(x) + nu
        return (x - self.step_next(eta, x, nu, check=False)) / eta

    def sample_noise(self, rng: RngStream, x: np.ndarray,
                     model: NoiseModel | None = None) -> np.ndarray:
        m = self.noise if model is None else model
        nu = gaussian_vector(rng, m.factor_l)
        if m.state_scale > 0.0:
            g = gaussian_vector(rng, np.eye(self.dim))
            norm = np.linalg.norm(g)
            if norm > 1e-300:
                radius = np.linalg.norm(x - self.x_star)
                nu = nu + (m.state_scale * radius / norm) * g
        return nu

    # -- geometry -------------------------------------------------------
    @property
    def x_star(self) -> np.ndarray:
        raise NotImplementedError

    def project_manifold(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def check_domain(self, x: np.ndarray, tol: float = _DOMAIN_TOL) -> None:
        """Raise InfeasibleInput when x is outside dom F beyond tol."""

    def ground_truth(self) -> GroundTruth:
        if self._gt is None:
            self._gt = self._build_ground_truth()
        return self._gt

    def _build_ground_truth(self) -> GroundTruth:
        raise NotImplementedError

    # -- harness --------------------------------------------------------
    def default_x0(self) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError

    # vectorized twins used only by the Monte Carlo oracle
    def _drift_rows(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _inner_rows(self, eta: float, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class L1Quad(Problem):
    """Separable quadratic 0.5 (x-b)' Q (x-b) with Q diagonal, plus lam * ||x||_1."""

    id = "l1quad"

    def __init__(self, q_diag=(1.0, 2.0, 1.0, 2.0, 1.0),
                 b=(2.0, 1.0, 0.1, -0.1, -2.0),
                 lam: float = 1.0, sigma: float = 0.25,
                 method: str = "forward_backward", state_scale: float = 0.0):
        self.q_diag = as_vector(q_diag)
        self.b = as_vector(b, dim=self.q_diag.shape[0])
        if np.any(self.q_diag <= 0):
            raise ValueError("q_diag must be positive")
        if lam <= 0:
            raise ValueError("lam must be positive")
        if method not in ("forward_backward", "subgradient"):
            raise ValueError(f"inadmissible method {method!r} for l1quad")
        self.lam = float(lam)
        self.sigma = float(sigma)
        self.method = method
        self.dim = self.b.shape[0]
        super().__init__(NoiseModel.isotropic(self.dim, sigma, state_scale))
        self._xs = np.sign(self.b) * np.maximum(np.abs(self.b) - self.lam / self.q_diag, 0.0)
        self._xs += 0.0  # normalize -0.0 entries
        self._active = np.nonzero(self._xs == 0.0)[0]

    @property
    def x_star(self) -> np.ndarray:
        return self._xs

    def drift(self, x):
        g = self.q_diag * (x - self.b)
        if self.method == "subgradient":
            return g + self.lam * np.sign(x)
        return g

    def _inner(self, eta, v):
        return soft_threshold(v, eta * self.lam)

    def project_manifold(self, x):
        y = np.array(x, dtype=float)
        y[self._active] = 0.0
        return y

    def default_x0(self):
        return np.zeros(self.dim)

    def params(self):
        return {"q_diag": self.q_diag.tolist(), "b": self.b.tolist(), "lam": self.lam,
                "sigma": self.sigma, "method": self.method}

    def _build_ground_truth(self):
        grad = self.q_diag * (self.x_star - self.b)
        for i in self._active:
            if abs(abs(grad[i]) - self.lam) <= 1e-8:
                raise StrictComplementarityViolated(
                    f"|grad f(x*)[{i}]| = {abs(grad[i])!r} sits on the kink boundary lam = {self.lam}")
        free = np.nonzero(self._xs != 0.0)[0]
        u = np.eye(self.dim)[:, free]
        h = np.diag(self.q_diag[free])
        s = u.T @ self.noise.covariance() @ u
        return GroundTruth(
            x_star=self._xs.copy(), tangent_basis=u, jacobian_h=h, noise_cov_s=s,
            sigma_limit=limiting_sigma(u, h, s),
            active_index_set=frozenset(int(i) for i in self._active))

    def _drift_rows(self, x):
        g = self.q_diag * (x - self.b)
        if self.method == "subgradient":
            return g + self.lam * np.sign(x)
        return g

    def _inner_rows(self, eta, v):
        return soft_threshold(v, eta * self.lam)


class BoxQP(Problem):
    """Strongly convex quadratic 0.5 (x-z)' Q (x-z) over a box, projected steps.

    The default center sits outside the box on two coordinates so the optimal
    face is a genuine active manifold. x* comes from enumerating candidate
    active sets and checking the KKT signs, which is exact for small d.
    """

    id = "boxqp"

    def __init__(self, q_mat=None, center=(1.7, 0.4, -0.6, 0.9),
                 lo=None, hi=None, sigma: float = 0.2, state_scale: float = 0.0):
        if q_mat is None:
            q_mat = [[2.0, 0.3, 0.0, 0.1],
                     [0.3, 1.5, 0.2, 0.0],
                     [0.0, 0.2, 1.8, 0.1],
                     [0.1, 0.0, 0.1, 1.2]]
        self.q_mat = as_matrix(q_mat)
        d = self.q_mat.shape[0]
        if d > 12:
            raise ValueError("active-set enumeration is exponential; keep d <= 12")
        self.center = as_vector(center, dim=d)
        self.lo = as_vector(lo if lo is not None else np.zeros(d), dim=d)
        self.hi = as_vector(hi if hi is not None else np.ones(d), dim=d)
        if np.any(self.lo > self.hi):
            raise InvalidBounds("lo exceeds hi on some coordinate")
        if np.abs(self.q_mat - self.q_mat.T).max() > 1e-10:
            raise ValueError("Q must be symmetric")
        self.sigma = float(sigma)
        self.method = "projected_forward"
        self.dim = d
        super().__init__(NoiseModel.isotropic(d, sigma, state_scale))
        self._xs, self._labels = self._solve_kkt()
        self._active = np.nonzero(self._labels != 0)[0]

    def _solve_kkt(self):
        """Enumerate lo/free/hi assignments for the unique KKT point.

        Comparisons are weak (tolerance 1e-12) so degenerate instances still
        resolve to the optimizer; the ground-truth assembly then rejects them
        via the strict-complementarity margin checks.
        """
        d = self.dim
        q, z = self.q_mat, self.center
        tiny = 1e-12
        for labels in _iter_product((-1, 0, 1), repeat=d):
            lab = np.array(labels)
            x = np.where(lab == -1, self.lo, np.where(lab == 1, self.hi, 0.0))
            fr = np.nonzero(lab == 0)[0]
            ac = np.nonzero(lab != 0)[0]
            if fr.size:
                rhs = q[np.ix_(fr, fr)] @ z[fr]
                if ac.size:
                    rhs -= q[np.ix_(fr, ac)] @ (x[ac] - z[ac])
                x[fr] = np.linalg.solve(q[np.ix_(fr, fr)], rhs)
            g = q @ (x - z)
            ok = True
            for i in range(d):
                if lab[i] == 0:
                    ok &= self.lo[i] - tiny <= x[i] <= self.hi[i] + tiny
                elif lab[i] == -1:
                    ok &= g[i] >= -tiny
                else:
                    ok &= g[i] <= tiny
                if not ok:
                    break
            if ok:
                return x, lab
        raise RuntimeError("no KKT point found; is Q positive definite?")

    @property
    def x_star(self) -> np.ndarray:
        return self._xs

    def drift(self, x):
        return self.q_mat @ (x - self.center)

    def _inner(self, eta, v):
        return np.clip(v, self.lo, self.hi)

    def check_domain(self, x, tol=_DOMAIN_TOL):
        if np.any(x < self.lo - tol) or np.any(x > self.hi + tol):
            raise InfeasibleInput("point outside the box beyond tolerance")

    def project_manifold(self, x):
        y = np.array(x, dtype=float)
        act = self._active
        y[act] = np.where(self._labels[act] == -1, self.lo[act], self.hi[act])
        return y

    def default_x0(self):
        return 0.5 * (self.lo + self.hi)

    def params(self):
        return {"q_mat": self.q_mat.tolist(), "center": self.center.tolist(),
                "lo": self.lo.tolist(), "hi": self.hi.tolist(), "sigma": self.sigma}

    def _build_ground_truth(self):
        g = self.q_mat @ (self._xs - self.center)
        for i in self._active:
            if abs(g[i]) <= 1e-8:
                raise StrictComplementarityViolated(
                    f"active multiplier |grad[{i}]| = {abs(g[i])!r} is numerically zero")
        fr = np.nonzero(self._labels == 0)[0]
        for i in fr:
            if min(self._xs[i] - self.lo[i], self.hi[i] - self._xs[i]) <= 1e-8:
                raise StrictComplementarityViolated(
                    f"free coordinate {i} sits on the boundary")
        u = np.eye(self.dim)[:, fr]
        h = self.q_mat[np.ix_(fr, fr)]
        s = u.T @ self.noise.covariance() @ u
        return GroundTruth(
            x_star=self._xs.copy(), tangent_basis=u, jacobian_h=h, noise_cov_s=s,
            sigma_limit=limiting_sigma(u, h, s),
            active_index_set=frozenset(int(i) for i in self._active))

    def _drift_rows(self, x):
        return (x - self.center) @ self.q_mat.T

    def _inner_rows(self, eta, v):
        return np.clip(v, self.lo, self.hi)


class EntropyGame(Problem):
    """Entropy-regularized zero-sum matrix game on a product of simplices.

    State x = (z, w). Simultaneous gradient play uses the monotone map
        V(z, w) = (-A w + lam (log z + 1),  A' z + lam (log w + 1)),
    whose zero (modulo the simplex normal directions) is the QRE pair
    z* ~ softmax(A w*/lam), w* ~ softmax(-A' z*/lam). Logs are floored to
    keep V finite if a projection step lands exactly on the boundary.
    """

    id = "game"

    def __init__(self, payoff=None, lam: float = 0.2, sigma: float = 0.1,
                 state_scale: float = 0.0, qre_tol: float = 1e-12):
        if payoff is None:
            payoff = [[0.15, -0.24, 0.09],
                      [-0.06, 0.18, -0.15],
                      [-0.21, 0.03, 0.27]]
        self.payoff = as_matrix(payoff)
        if self.payoff.shape[0] != self.payoff.shape[1]:
            raise ValueError("payoff must be square")
        if lam <= 0:
            raise ValueError("lam must be positive")
        self.lam = float(lam)
        self.sigma = float(sigma)
        self.n_actions = self.payoff.shape[0]
        self.dim = 2 * self.n_actions
        self.method = "projected_forward"
        super().__init__(NoiseModel.isotropic(self.dim, sigma, state_scale))
        z, w = qre_oracle(self.payoff, self.lam, tol=qre_tol)
        self._xs = np.concatenate([z, w])

    @property
    def x_star(self) -> np.ndarray:
        return self._xs

    def drift(self, x):
        d = self.n_actions
        zw = np.maximum(x, _LOG_FLOOR)
        out = self.lam * (np.log(zw) + 1.0)
        out[:d] -= self.payoff @ zw[d:]
        out[d:] += self.payoff.T @ zw[:d]
        return out

    def _inner(self, eta, v):
        d = self.n_actions
        vals = v.tolist()
        return np.array(_project_simplex_small(vals[:d]) + _project_simplex_small(vals[d:]))

    def check_domain(self, x, tol=_DOMAIN_TOL):
        d = self.n_actions
        if (abs(x[:d].sum() - 1.0) > tol or abs(x[d:].sum() - 1.0) > tol
                or np.any(x < -tol)):
            raise InfeasibleInput("point off the simplex product beyond tolerance")

    def project_manifold(self, x):
        d = self.n_actions
        y = np.array(x, dtype=float)
        y[:d] -= (y[:d].sum() - 1.0) / d
        y[d:] -= (y[d:].sum() - 1.0) / d
        return y

    def default_x0(self):
        return np.full(self.dim, 1.0 / self.n_actions)

    def params(self):
        return {"payoff": self.payoff.tolist(), "lam": self.lam, "sigma": self.sigma}

    def _build_ground_truth(self):
        d = self.n_actions
        z, w = self._xs[:d], self._xs[d:]
        hb = helmert_basis(d)
        u = np.zeros((self.dim, 2 * (d - 1)))
        u[:d, :d - 1] = hb
        u[d:, d - 1:] = hb
        jac = np.zeros((self.dim, self.dim))
        jac[:d, :d] = self.lam * np.diag(1.0 / z)
        jac[:d, d:] = -self.payoff
        jac[d:, :d] = self.payoff.T
        jac[d:, d:] = self.lam * np.diag(1.0 / w)
        h = u.T @ jac @ u
        # local strong monotonicity: symmetric part of H must be PD
        try:
            spd_factor(0.5 * (h + h.T))
        except NotPositiveDefinite as exc:
            raise NotPositiveDefinite(
                "tangent-restricted Jacobian has non-PD symmetric part") from exc
        s = u.T @ self.noise.covariance() @ u
        return GroundTruth(
            x_star=self._xs.copy(), tangent_basis=u, jacobian_h=h, noise_cov_s=s,
            sigma_limit=limiting_sigma(u, h, s), active_index_set=frozenset())

    def _drift_rows(self, x):
        d = self.n_actions
        z = np.maximum(x[:, :d], _LOG_FLOOR)
        w = np.maximum(x[:, d:], _LOG_FLOOR)
        out = np.empty_like(x)
        out[:, :d] = -(w @ self.payoff.T) + self.lam * (np.log(z) + 1.0)
        out[:, d:] = (z @ self.payoff) + self.lam * (np.log(w) + 1.0)
        return out

    def _inner_rows(self, eta, v):
        d = self.n_actions
        return np.hstack([_project_simplex_rows(v[:, :d]),
                          _project_simplex_rows(v[:, d:])])


class NonconvexParabola(Problem):
    """f(x, y) = |x - y^2| + (x^2 + y^2)/2, minimized at the origin.

    Nonconvex near the solution; subgradient steps with the selection
    sign(0) = 0 at the kink. The active manifold is the parabola x = y^2
    with tangent e_y at the origin; the restricted dynamics linearize with
    unit rate there, but the curved manifold leaves the limiting covariance
    to a Monte Carlo certificate (sigma_mode = "monte_carlo_only").
    """

    id = "parabola"

    def __init__(self, sigma: float = 0.2, state_scale: float = 0.0,
                 mc_n: int = 2 ** 14, mc_reps: int = 400, mc_seed: int = 7_2024):
        self.sigma = float(sigma)
        self.dim = 2
        self.method = "subgradient"
        self.mc_n = int(mc_n)
        self.mc_reps = int(mc_reps)
        self.mc_seed = int(mc_seed)
        super().__init__(NoiseModel.isotropic(2, sigma, state_scale))
        self._xs = np.zeros(2)

    @property
    def x_star(self) -> np.ndarray:
        return self._xs

    def drift(self, x):
        s = float(np.sign(x[0] - x[1] ** 2))  # sign(0) = 0 at the kink
        return np.array([x[0] + s, x[1] - 2.0 * s * x[1]])

    def _inner(self, eta, v):
        return v

    def project_manifold(self, x):
        y = _nearest_parabola_param(float(x[0]), float(x[1]))
        return np.array([y * y, y])

    def default_x0(self):
        return np.array([0.5, 0.5])

    def params(self):
        return {"sigma": self.sigma, "mc_n": self.mc_n, "mc_reps": self.mc_reps,
                "mc_seed": self.mc_seed}

    def _build_ground_truth(self):
        u = np.array([[0.0], [1.0]])
        h = np.array([[1.0]])  # tangential linearization rate at the origin
        s = u.T @ self.noise.covariance() @ u
        sigma_mc = mc_sigma(self, StepSchedule(), n=self.mc_n, reps=self.mc_reps,
                            seed=self.mc_seed)
        return GroundTruth(
            x_star=self._xs.copy(), tangent_basis=u, jacobian_h=h, noise_cov_s=s,
            sigma_limit=sigma_mc, active_index_set=frozenset({0}),
            sigma_mode="monte_carlo_only")

    def _drift_rows(self, x):
        s = np.sign(x[:, 0] - x[:, 1] ** 2)
        out = np.empty_like(x)
        out[:, 0] = x[:, 0] + s
        out[:, 1] = x[:, 1] - 2.0 * s * x[:, 1]
        return out

    def _inner_rows(self, eta, v):
        return v


def _nearest_parabola_param(a: float, b: float) -> float:
    """Root of g(y) = 2y(y^2 - a) + (y - b): stationarity of the squared distance
    from (a, b) to (y^2, y). Safeguarded Newton with a bisection bracket."""
    def g(y):
        return 2.0 * y * (y * y - a) + (y - b)

    # g is increasing for a < 1/2; in general bracket a sign change around b
    radius = 1.0 + abs(a) + abs(b)
    lo_v, hi_v = -radius, radius
    while g(lo_v) > 0:
        lo_v *= 2.0
    while g(hi_v) < 0:
        hi_v *= 2.0
    y = min(max(b, lo_v), hi_v)
    for _ in range(200):
        gy = g(y)
        if gy > 0:
            hi_v = y
        else:
            lo_v = y
        dgy = 6.0 * y * y + (1.0 - 2.0 * a)
        step_ok = dgy > 0
        if step_ok:
            y_new = y - gy / dgy
            if not lo_v <= y_new <= hi_v:
                step_ok = False
        if not step_ok:
            y_new = 0.5 * (lo_v + hi_v)
        if abs(y_new - y) <= 1e-15 * (1.0 + abs(y)):
            return y_new
        y = y_new
    return y


def mc_sigma(problem: Problem, step: StepSchedule, n: int, reps: int,
             seed: int, x0: np.ndarray | None = None) -> np.ndarray:
    """Monte Carlo oracle for the limiting covariance.

    Runs `reps` independent trajectories vectorized across replications and
    returns the sample covariance of sqrt(n) (xbar - x*). Deliberately a
    separate randomness path (numpy Philox keyed on `seed`) from RngStream
    replication streams, so it stays an independent check.
    """
    if problem.noise.state_scale != 0.0:
        raise ValueError("Monte Carlo oracle supports state-independent noise only")
    gen = np.random.Generator(np.random.Philox(key=np.array([seed, 0xD1A6], dtype=np.uint64)))
    lt = problem.noise.factor_l.T
    start = problem.default_x0() if x0 is None else as_vector(x0, dim=problem.dim)
    x = np.tile(start, (reps, 1))
    xbar = np.zeros_like(x)
    subgrad = problem.method == "subgradient"
    for k in range(1, n + 1):
        eta = step.step_at(k)
        nu = gen.standard_normal(x.shape) @ lt
        if subgrad:
            x = x - eta * (problem._drift_rows(x) + nu)
        else:
            x = problem._inner_rows(eta, x - eta * (problem._drift_rows(x) + nu))
        xbar += (x - xbar) / k
    dev = math.sqrt(n) * (xbar - problem.x_star)
    dev = dev - dev.mean(axis=0)
    return dev.T @ dev / (reps - 1)


PROBLEM_IDS = {
    "l1quad": L1Quad,
    "boxqp": BoxQP,
    "game": EntropyGame,
    "parabola": NonconvexParabola,
}


def make_problem(problem_id: str, **overrides) -> Problem:
    """Instantiate a zoo problem by id with optional parameter overrides."""
    try:
        cls = PROBLEM_IDS[problem_id]
    except KeyError:
        valid = ", ".join(sorted(PROBLEM_IDS))
        raise KeyError(f"unknown problem id {problem_id!r}; valid ids: {valid}") from None
    return cls(**overrides)
