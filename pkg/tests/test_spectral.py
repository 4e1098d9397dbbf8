"""Spectral cut-off, GCV selection, oracle indices and the dense backends."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spectral_gcv import green
from spectral_gcv.spectral import (
    BoundIndexError,
    GcvParams,
    ObservationCoefficients,
    OracleIndices,
    SingularSystem,
    cutoff_estimate,
    dense_svd,
    gcv_score,
    gcv_scores,
    l2_constant,
    optimal_index,
    oracle_indices,
    project_observations,
    select_gcv_index,
    strong_oracle,
    symmetric_eigendecomposition,
    theorem_l2_bound,
    weak_oracle,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def obs(c):
    c = np.asarray(c, dtype=float)
    return ObservationCoefficients(c.size, c)


def brute_gcv(c, k_max):
    # literal transcription, one score at a time
    m = len(c)
    scores = [sum(x * x for x in c[k:]) / (1 - k / m) ** 2 for k in range(k_max + 1)]
    best = min(scores)
    return scores.index(best), scores


# ---------------------------------------------------------------- types


class TestTypes:
    def test_singular_system_rejects_increasing(self):
        with pytest.raises(ValueError):
            SingularSystem(m=2, sigmas=[1.0, 2.0], left_vectors=np.eye(2))

    def test_singular_system_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            SingularSystem(m=2, sigmas=[1.0, 0.0], left_vectors=np.eye(2))

    def test_singular_system_needs_basis(self):
        with pytest.raises(ValueError):
            SingularSystem(m=2, sigmas=[1.0, 0.5])

    def test_observation_length(self):
        with pytest.raises(ValueError):
            ObservationCoefficients(3, np.zeros(2))

    def test_oracle_order(self):
        with pytest.raises(ValueError):
            OracleIndices(t=3, s=2)

    def test_cutoff_length(self):
        with pytest.raises(ValueError):
            from spectral_gcv.spectral import CutoffEstimate

            CutoffEstimate(2, np.zeros(1))

    @pytest.mark.parametrize("eps", [0.0, -0.1, 0.2, Fraction(1, 11)])
    def test_epsilon_range(self, eps):
        with pytest.raises(ValueError):
            GcvParams(epsilon=eps)

    def test_float_epsilon_is_recovered_as_fraction(self):
        assert GcvParams(epsilon=1 / 12).epsilon == Fraction(1, 12)

    def test_k_max_floor(self):
        assert GcvParams().k_max(7) == 3
        assert GcvParams().k_max(8) == 4


# ---------------------------------------------------------------- projection


class TestProjection:
    def test_first_left_vector(self):
        rng = np.random.default_rng(3)
        q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
        sysm = SingularSystem(5, np.linspace(5, 1, 5), left_vectors=q)
        np.testing.assert_allclose(project_observations(q[:, 0], sysm).coeffs, np.eye(5)[0], atol=1e-14)

    def test_zero_data(self):
        sysm = green.GreenModel(6).system()
        assert np.all(project_observations(np.zeros(6), sysm).coeffs == 0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            project_observations(np.zeros(5), green.GreenModel(6).system())

    def test_green_identity_m4(self):
        # <g, u_j> = sigma_j <f, v_j>
        m = 4
        model = green.GreenModel(m)
        src = green.sample_source(1.25, D=64, seed=1)
        coeffs = project_observations(green.exact_collocation_data(src, m), model.system()).coeffs
        np.testing.assert_allclose(coeffs, model.sigmas_discrete * green.project_source(src, model), rtol=0, atol=1e-10)

    def test_dense_and_transform_agree(self):
        model = green.GreenModel(9)
        data = np.random.default_rng(0).standard_normal(9)
        a = project_observations(data, model.system(dense=True)).coeffs
        b = project_observations(data, model.system()).coeffs
        np.testing.assert_allclose(a, b, atol=1e-14)


# ---------------------------------------------------------------- GCV


class TestGcv:
    def test_hand_values(self):
        o = obs([2, 1, 0.5, 0.25])
        assert gcv_score(o, 0) == pytest.approx(5.3125, abs=1e-14)
        assert gcv_score(o, 1) == pytest.approx(1.3125 / 0.5625, abs=1e-14)
        assert gcv_score(o, 2) == pytest.approx(1.25, abs=1e-14)
        assert select_gcv_index(o) == 2

    def test_m2(self):
        assert gcv_score(obs([0, 1]), 1) == pytest.approx(4.0)

    def test_zero_coeffs(self):
        o = obs(np.zeros(6))
        assert gcv_score(o, 3) == 0.0
        assert select_gcv_index(o) == 0

    def test_k_equal_m_rejected(self):
        with pytest.raises(ValueError):
            gcv_score(obs([1, 2]), 2)

    def test_m1_rejected(self):
        with pytest.raises(ValueError):
            select_gcv_index(obs([1.0]))

    def test_range_is_half(self):
        # minimum beyond m/2 must not be reachable
        c = np.array([1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0])
        assert select_gcv_index(obs(c)) <= 4

    def test_k_limit(self):
        c = np.array([5.0, 4.0, 3.0, 0.01, 0.01, 0.01, 0.01, 0.01])
        assert select_gcv_index(obs(c)) == 3
        assert select_gcv_index(obs(c), k_limit=2) == 2

    @settings(max_examples=200, deadline=None)
    @given(arrays(float, st.integers(2, 40), elements=finite))
    def test_matches_brute_force(self, c):
        k_max = len(c) // 2
        k_ref, scores = brute_gcv(list(c), k_max)
        np.testing.assert_allclose(gcv_scores(obs(c), k_max), scores, rtol=1e-12, atol=1e-300)
        got = select_gcv_index(obs(c))
        # ties within rounding may resolve either way; the score must be minimal
        assert scores[got] <= min(scores) * (1 + 1e-12) + 1e-300
        if scores.count(min(scores)) == 1 and sorted(scores)[1] > min(scores) * (1 + 1e-9):
            assert got == k_ref

    @settings(max_examples=100, deadline=None)
    @given(
        arrays(float, st.integers(2, 30), elements=st.floats(0.01, 100)),
        st.sampled_from([-3.0, 0.5, 2.0, 1e3]),
    )
    def test_scale_equivariance(self, c, scale):
        assert select_gcv_index(obs(c * scale)) == select_gcv_index(obs(c))

    @settings(max_examples=100, deadline=None)
    @given(arrays(float, st.integers(2, 30), elements=finite))
    def test_tail_monotone(self, c):
        o = obs(c)
        m = len(c)
        k = np.arange(m)
        tail = gcv_scores(o) * (1 - k / m) ** 2
        assert np.all(np.diff(tail) <= 1e-9 * (1 + tail[0]))


# ---------------------------------------------------------------- cut-off estimate


class TestCutoff:
    def test_zero(self):
        sysm = green.GreenModel(4).system()
        est = cutoff_estimate(obs([1, 2, 3, 4]), sysm, 0)
        assert est.k == 0 and est.amplitudes.size == 0

    def test_one_term(self):
        sysm = SingularSystem(2, [2.0, 1.0], left_vectors=np.eye(2))
        np.testing.assert_allclose(cutoff_estimate(obs([1.0, 7.0]), sysm, 1).amplitudes, [0.5])

    def test_noiseless_full(self):
        m = 8
        model = green.GreenModel(m)
        src = green.sample_source(0.75, D=128, seed=4)
        o = project_observations(green.exact_collocation_data(src, m), model.system())
        est = cutoff_estimate(o, model.system(), m)
        np.testing.assert_allclose(est.amplitudes, green.project_source(src, model), rtol=1e-10)

    def test_range(self):
        with pytest.raises(ValueError):
            cutoff_estimate(obs([1.0, 2.0]), SingularSystem(2, [2.0, 1.0], left_vectors=np.eye(2)), 3)


# ---------------------------------------------------------------- oracles


def brute_weak(f, s, d):
    m = len(f)
    ok = [k for k in range(m + 1) if k * d * d <= sum((s[j] * f[j]) ** 2 for j in range(k, m))]
    return max(ok)


def brute_strong(f, s, d):
    m = len(f)
    ok = [0] + [k for k in range(1, m + 1) if k * d * d / s[k - 1] ** 2 <= sum(f[j] ** 2 for j in range(k, m))]
    return max(ok)


class TestOracles:
    def test_zero_source(self):
        assert weak_oracle(np.zeros(4), np.ones(4), 1.0) == 0
        assert strong_oracle(np.zeros(4), np.ones(4), 1.0) == 0

    def test_weak_hand(self):
        # sigma^2 f^2 = (4, 1, 0.25, 0.0625)
        assert weak_oracle([2, 1, 0.5, 0.25], [1, 1, 1, 1], 1.0) == 1

    def test_strong_hand(self):
        # k=1: 1/1 <= 12 holds, k=2: 2/0.25 = 8 <= 8 holds, k=3: 3/0.0625 = 48 <= 4 fails
        assert strong_oracle([2, 2, 2, 2], [1, 0.5, 0.25, 0.125], 1.0) == 2

    def test_constant_sigma_coincide(self):
        f = np.array([3.0, 1.0, 0.5, 0.1])
        assert weak_oracle(f, np.ones(4), 0.4) == strong_oracle(f, np.ones(4), 0.4)

    def test_large_delta(self):
        assert weak_oracle([1, 1], [1, 1], 1e9) == 0

    def test_non_contiguous_set_scanned(self):
        # a non-monotone spectrum where k=1 fails but k=2 holds
        f = np.array([0.0, 0.0, 10.0])
        s = np.array([1e-3, 1.0, 1.0])
        assert strong_oracle(f, s, 1.0) == brute_strong(f, s, 1.0) == 2

    def test_mismatched_lengths(self):
        with pytest.raises(ValueError):
            weak_oracle([1, 2], [1], 1.0)

    @settings(max_examples=150, deadline=None)
    @given(
        arrays(float, st.integers(1, 25), elements=st.floats(-10, 10)),
        st.floats(1e-3, 10),
    )
    def test_against_brute_force(self, f, d):
        s = np.sort(np.random.default_rng(len(f)).uniform(0.01, 2.0, f.size))[::-1]
        t, sm = weak_oracle(f, s, d), strong_oracle(f, s, d)
        assert t == brute_weak(list(f), list(s), d)
        assert sm == brute_strong(list(f), list(s), d)
        assert t <= sm
        assert oracle_indices(f, s, d) == OracleIndices(t, sm)

    @settings(max_examples=60, deadline=None)
    @given(arrays(float, st.integers(1, 20), elements=st.floats(-5, 5)), st.floats(1e-3, 1.0))
    def test_monotone_in_delta(self, f, d):
        s = 1.0 / np.arange(1, f.size + 1) ** 2
        assert weak_oracle(f, s, 2 * d) <= weak_oracle(f, s, d)
        assert strong_oracle(f, s, 2 * d) <= strong_oracle(f, s, d)


class TestOptimalIndex:
    def test_examples(self):
        assert optimal_index([3, 1, 2]) == 1
        assert optimal_index([2, 2, 2]) == 0

    def test_empty(self):
        with pytest.raises(ValueError):
            optimal_index([])


# ---------------------------------------------------------------- error bound


class TestBound:
    def test_constant(self):
        assert l2_constant(Fraction(1, 12)) == pytest.approx(18.7216, abs=5e-5)
        eps = 1 / 12
        assert l2_constant(eps) == pytest.approx(math.sqrt(1 + eps) / eps + math.sqrt(34 * eps + 36), rel=1e-15)

    def test_zero(self):
        assert theorem_l2_bound(0, 1e-3, [1.0]) == 0.0

    def test_green_plug_in(self):
        m = 2**16
        sig = lambda j: green.discrete_singular_value(j, m)  # noqa: E731
        expect = l2_constant(Fraction(1, 12)) * math.sqrt(2) * 1e-3 / green.discrete_singular_value(288, m)
        assert theorem_l2_bound(2, 1e-3, sig, GcvParams(), m=m) == pytest.approx(expect, rel=1e-14)

    def test_ceiling(self):
        # s = 1 with eps = 1/10 needs index 100 exactly, not 101
        s = np.linspace(2, 1, 200)
        got = theorem_l2_bound(1, 1.0, s, GcvParams(epsilon=Fraction(1, 12)))
        assert got == pytest.approx(l2_constant(Fraction(1, 12)) / s[143])

    def test_overflow(self):
        with pytest.raises(BoundIndexError):
            theorem_l2_bound(1, 1.0, np.ones(143))
        assert issubclass(BoundIndexError, IndexError)


# ---------------------------------------------------------------- dense backends


class TestEigen:
    def test_identity(self):
        w, v = symmetric_eigendecomposition(np.eye(3))
        np.testing.assert_allclose(w, 1.0)
        np.testing.assert_allclose(v.T @ v, np.eye(3), atol=1e-14)

    def test_two_by_two(self):
        w, _ = symmetric_eigendecomposition([[2.0, -1.0], [-1.0, 2.0]])
        np.testing.assert_allclose(w, [3.0, 1.0], rtol=1e-14)

    def test_green_t1(self):
        w, _ = symmetric_eigendecomposition(green.build_matrices(1)[3])
        assert w[0] == pytest.approx(1 / 48, abs=1e-16)

    def test_nonsymmetric(self):
        with pytest.raises(ValueError):
            symmetric_eigendecomposition([[1.0, 2.0], [0.0, 1.0]])

    @pytest.mark.parametrize("n", [1, 5, 17, 40])
    def test_random_against_lapack(self, n):
        rng = np.random.default_rng(n)
        a = rng.standard_normal((n, n))
        a = a + a.T
        w, v = symmetric_eigendecomposition(a)
        ref = np.linalg.eigvalsh(a)[::-1]
        np.testing.assert_allclose(w, ref, rtol=1e-10, atol=1e-12 * np.abs(ref).max())
        norm = np.linalg.norm(a, 2)
        assert np.max(np.linalg.norm(a @ v - v * w, axis=0)) <= 1e-9 * norm
        np.testing.assert_allclose(v.T @ v, np.eye(n), atol=1e-10)

    def test_graded_spectrum(self):
        # relative accuracy on tiny eigenvalues of the Green Gram matrix
        t = green.build_matrices(32)[3]
        w, _ = symmetric_eigendecomposition(t)
        exact = green.discrete_singular_value(np.arange(1, 33), 32) ** 2
        np.testing.assert_allclose(w, exact, rtol=1e-9)


class TestSvd:
    def test_diagonal(self):
        _, s, _ = dense_svd(np.diag([3.0, 2.0, 1.0]))
        np.testing.assert_allclose(s, [3, 2, 1])

    def test_rank_one(self):
        a, b = np.array([1.0, 2.0, 2.0]), np.array([3.0, 4.0])
        _, s, _ = dense_svd(np.outer(a, b))
        np.testing.assert_allclose(s, [15.0, 0.0], atol=1e-13)

    def test_reconstruction(self):
        a = np.random.default_rng(20).standard_normal((20, 10))
        u, s, vt = dense_svd(a)
        assert np.linalg.norm(u * s @ vt - a) / np.linalg.norm(a) <= 1e-8
        assert np.all(np.diff(s) <= 0)

    def test_full_matrices(self):
        u, s, vt = dense_svd(np.ones((5, 2)), full_matrices=True)
        assert u.shape == (5, 5)
        np.testing.assert_allclose(u.T @ u, np.eye(5), atol=1e-14)

    def test_agrees_with_eigen_on_psd(self):
        b = np.random.default_rng(1).standard_normal((12, 12))
        a = b @ b.T
        _, s, _ = dense_svd(a)
        w, _ = symmetric_eigendecomposition(a)
        np.testing.assert_allclose(s, w, rtol=1e-8)
