import numpy as np
import pytest

from sacovest.errors import NonConvergence, NotPositiveDefinite, SingularMatrix
from sacovest.numerics import (
    RngStream,
    as_matrix,
    as_vector,
    gaussian_vector,
    operator_norm,
    solve_linear,
    spd_factor,
)


def test_validators_reject_nonfinite():
    with pytest.raises(ValueError):
        as_vector([1.0, np.nan])
    with pytest.raises(ValueError):
        as_matrix([[1.0, np.inf], [0.0, 1.0]])
    with pytest.raises(ValueError):
        as_vector([1.0, 2.0], dim=3)


class TestSolveLinear:
    def test_identity(self):
        b = np.array([3.0, -1.0])
        assert np.allclose(solve_linear(np.eye(2), b), b)

    def test_diagonal(self):
        x = solve_linear(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
        assert np.allclose(x, [1.0, 1.0])

    def test_back_substitution(self):
        a = np.array([[1.0, 1.0], [0.0, 1.0]])
        b = np.array([3.0, 1.0])
        x = solve_linear(a, b)
        assert np.allclose(x, [2.0, 1.0])
        assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b)

    def test_random_inverses(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            r = rng.integers(1, 9)
            a = rng.normal(size=(r, r)) + 3.0 * np.eye(r)
            inv = solve_linear(a.copy(), np.eye(r))
            assert operator_norm(a @ inv - np.eye(r)) <= 1e-8
            # cross-check against numpy's solver
            b = rng.normal(size=r)
            assert np.allclose(solve_linear(a.copy(), b), np.linalg.solve(a, b),
                               rtol=1e-9, atol=1e-12)

    def test_matrix_rhs(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(4, 4)) + 4 * np.eye(4)
        b = rng.normal(size=(4, 3))
        x = solve_linear(a, b)
        assert np.allclose(a @ x, b)

    def test_singular_raises(self):
        with pytest.raises(SingularMatrix):
            solve_linear(np.array([[1.0, 2.0], [2.0, 4.0]]), np.array([1.0, 1.0]))
        with pytest.raises(SingularMatrix):
            solve_linear(np.zeros((2, 2)), np.ones(2))


class TestOperatorNorm:
    def test_diagonal(self):
        assert operator_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0, rel=1e-8)

    def test_identity(self):
        assert operator_norm(np.eye(7)) == pytest.approx(1.0, rel=1e-8)

    def test_nilpotent(self):
        assert operator_norm(np.array([[0.0, 2.0], [0.0, 0.0]])) == pytest.approx(2.0, rel=1e-8)

    def test_zero(self):
        assert operator_norm(np.zeros((3, 3))) == 0.0

    def test_reseed_when_start_in_nullspace(self):
        # Gram of this matrix annihilates the all-ones start vector
        a = np.array([[1.0, -1.0], [-1.0, 1.0]])
        assert operator_norm(a) == pytest.approx(2.0, rel=1e-8)

    def test_rectangular(self):
        a = np.array([[1.0, 0.0, 2.0], [0.0, 3.0, -1.0]])
        assert operator_norm(a) == pytest.approx(np.linalg.norm(a, 2), rel=1e-8)

    def test_random_2x2_closed_form(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            a = rng.normal(size=(2, 2))
            t = float((a * a).sum())
            det = float(np.linalg.det(a))
            closed = np.sqrt((t + np.sqrt(max(t * t - 4 * det * det, 0.0))) / 2.0)
            got = operator_norm(a)
            assert abs(got - closed) <= 1e-8 * max(closed, 1.0)

    def test_nonconvergence_signal(self):
        with pytest.raises(NonConvergence):
            operator_norm(np.diag([1.0, 0.999]), max_iter=2)


class TestSpdFactor:
    def test_identity(self):
        assert np.array_equal(spd_factor(np.eye(3)), np.eye(3))

    def test_diagonal_roots(self):
        assert np.allclose(spd_factor(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_known_factor(self):
        low = spd_factor(np.array([[4.0, 2.0], [2.0, 5.0]]))
        assert np.allclose(low, [[2.0, 0.0], [1.0, 2.0]])

    def test_random_spd_roundtrip(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            r = rng.integers(1, 9)
            m = rng.normal(size=(r, r))
            s = m @ m.T + 0.5 * np.eye(r)
            low = spd_factor(s)
            assert np.allclose(np.tril(low), low)
            assert operator_norm(low @ low.T - s) <= 1e-9 * operator_norm(s)

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefinite):
            spd_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            spd_factor(np.array([[1.0, 0.5], [0.0, 1.0]]))


class TestRngStream:
    def test_determinism(self):
        a = RngStream(123, 5).uniforms(64)
        b = RngStream(123, 5).uniforms(64)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        a = RngStream(123, 0).uniforms(64)
        b = RngStream(123, 1).uniforms(64)
        assert not np.array_equal(a, b)

    def test_stream_cross_correlation(self):
        n = 10 ** 5
        a = RngStream(9, 0).uniforms(n)
        b = RngStream(9, 1).uniforms(n)
        rho = np.corrcoef(a, b)[0, 1]
        assert abs(rho) < 0.01

    def test_chunked_draws_match_per_call(self):
        # one big draw consumes the stream exactly like repeated even draws
        whole = RngStream(4, 2).standard_normals(600)
        parts = RngStream(4, 2)
        got = np.concatenate([parts.standard_normals(6) for _ in range(100)])
        assert np.array_equal(whole, got)

    def test_normal_moments(self):
        z = RngStream(1, 0).standard_normals(200_000)
        assert abs(z.mean()) < 0.01
        assert abs(z.var() - 1.0) < 0.02


class TestGaussianVector:
    def test_zero_factor(self):
        assert np.array_equal(gaussian_vector(RngStream(0, 0), np.zeros((3, 3))), np.zeros(3))

    def test_determinism(self):
        low = spd_factor(np.array([[2.0, 0.4], [0.4, 1.0]]))
        a = gaussian_vector(RngStream(5, 7), low)
        b = gaussian_vector(RngStream(5, 7), low)
        assert np.array_equal(a, b)

    def test_empirical_covariance_identity(self):
        # gaussian_vector with L = I consumes exactly rng.standard_normals(2),
        # so a reshaped bulk draw reproduces 1e6 independent calls
        rng = RngStream(77, 0)
        bulk = rng.standard_normals(2 * 10 ** 6).reshape(-1, 2)
        probe = RngStream(77, 0)
        first = np.array([gaussian_vector(probe, np.eye(2)) for _ in range(50)])
        assert np.array_equal(bulk[:50], first)
        cov = bulk.T @ bulk / len(bulk)
        assert np.abs(cov - np.eye(2)).max() < 0.01

    def test_odd_dimension_consumption(self):
        # dim 5 consumes three pairs; the sixth normal is discarded
        rng = RngStream(8, 1)
        v = gaussian_vector(rng, np.eye(5))
        ref = RngStream(8, 1).standard_normals(6)[:5]
        assert np.array_equal(v, ref)
