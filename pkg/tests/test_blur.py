"""Gaussian blur, its sparse matrix and the cosine diagonalisation."""

import math

import numpy as np
import pytest

from spectral_gcv.imaging import blur
from spectral_gcv.spectral import dense_svd, project_observations, select_gcv_index


def direct_convolution(f, w, bc):
    # literal double loop over the kernel support
    H, W = f.shape
    M = (w.shape[0] - 1) // 2
    out = np.zeros_like(f, dtype=float)
    for i in range(H):
        for j in range(W):
            acc = 0.0
            for m in range(-M, M + 1):
                for n in range(-M, M + 1):
                    r, c = i - m, j - n
                    if not (0 <= r < H and 0 <= c < W):
                        if bc == "zero":
                            continue
                        r = -r - 1 if r < 0 else (2 * H - 1 - r if r >= H else r)
                        c = -c - 1 if c < 0 else (2 * W - 1 - c if c >= W else c)
                    acc += f[r, c] * w[m + M, n + M]
            out[i, j] = acc
    return out


class TestPsf:
    def test_unit(self):
        p = blur.gaussian_psf(2.0, 1)
        assert p.weights.shape == (1, 1) and p.weights[0, 0] == 1.0

    def test_center_weight(self):
        p = blur.gaussian_psf(4.0, 3)
        expect = 1 / (1 + 4 * math.exp(-1 / 32) + 4 * math.exp(-1 / 16))
        assert p.weights[1, 1] == pytest.approx(expect, rel=1e-14)
        assert p.weights[1, 1] == pytest.approx(0.11581, abs=5e-6)

    def test_normalised_symmetric(self):
        p = blur.gaussian_psf(1.7, 9)
        assert p.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert p.is_symmetric()
        assert p.weights[5, 4] == p.weights[4, 5] == p.weights[3, 4]

    @pytest.mark.parametrize("K,sigma", [(4, 1.0), (0, 1.0), (3, 0.0)])
    def test_invalid(self, K, sigma):
        with pytest.raises(ValueError):
            blur.gaussian_psf(sigma, K)

    def test_default_size(self):
        assert blur.default_kernel_size(256) == 255
        assert blur.default_kernel_size(7) == 7


class TestVectorize:
    def test_order(self):
        np.testing.assert_array_equal(blur.vectorize([[1, 2], [3, 4]]), [1, 2, 3, 4])

    def test_index(self):
        assert divmod(5, 3) == (1, 2)
        img = np.arange(12).reshape(4, 3)
        assert blur.vectorize(img)[5] == img[1, 2]

    def test_round_trip(self):
        img = np.random.default_rng(0).standard_normal((3, 5))
        np.testing.assert_array_equal(blur.devectorize(blur.vectorize(img), 3, 5), img)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            blur.devectorize(np.zeros(5), 2, 2)
        with pytest.raises(ValueError):
            blur.vectorize(np.zeros(4))


class TestApply:
    @pytest.mark.parametrize("bc", ["zero", "reflective"])
    def test_against_loops(self, bc):
        f = np.random.default_rng(1).standard_normal((6, 7))
        p = blur.gaussian_psf(1.2, 5)
        np.testing.assert_allclose(blur.apply_blur(f, p, bc), direct_convolution(f, p.weights, bc), atol=1e-14)

    def test_identity(self):
        f = np.random.default_rng(2).standard_normal((5, 5))
        np.testing.assert_array_equal(blur.apply_blur(f, blur.gaussian_psf(1.0, 1)), f)

    def test_constant(self):
        out = blur.apply_blur(np.full((9, 9), 3.0), blur.gaussian_psf(2.0, 7), "reflective")
        np.testing.assert_allclose(out, 3.0, rtol=1e-14)

    def test_delta(self):
        f = np.zeros((9, 9))
        f[4, 4] = 1.0
        p = blur.gaussian_psf(1.0, 5)
        out = blur.apply_blur(f, p, "zero")
        np.testing.assert_allclose(out[2:7, 2:7], p.weights, atol=1e-16)
        assert out.sum() == pytest.approx(1.0)

    def test_bad_bc(self):
        with pytest.raises(ValueError):
            blur.apply_blur(np.zeros((2, 2)), blur.gaussian_psf(1.0, 1), "periodic")


class TestMatrix:
    @pytest.mark.parametrize("bc", ["zero", "reflective"])
    def test_consistent_with_apply(self, bc):
        f = np.random.default_rng(3).standard_normal((5, 6))
        p = blur.gaussian_psf(1.5, 5)
        a = blur.blur_matrix(5, 6, p, bc)
        np.testing.assert_allclose(a @ blur.vectorize(f), blur.vectorize(blur.apply_blur(f, p, bc)), atol=1e-14)

    def test_identity(self):
        a = blur.blur_matrix(3, 4, blur.gaussian_psf(1.0, 1))
        np.testing.assert_array_equal(a.toarray(), np.eye(12))

    def test_row_sums(self):
        p = blur.gaussian_psf(2.0, 5)
        zero = np.asarray(blur.blur_matrix(6, 6, p, "zero").sum(axis=1)).ravel()
        refl = np.asarray(blur.blur_matrix(6, 6, p, "reflective").sum(axis=1)).ravel()
        assert np.all(zero <= 1 + 1e-14)
        np.testing.assert_allclose(refl, 1.0, atol=1e-14)

    def test_symmetric_reflective(self):
        a = blur.blur_matrix(7, 7, blur.gaussian_psf(1.3, 5)).toarray()
        np.testing.assert_allclose(a, a.T, atol=1e-10)

    def test_row_range(self):
        with pytest.raises(ValueError):
            blur.blur_matrix_row(16, 4, 4, blur.gaussian_psf(1.0, 3))

    def test_operator_adjoint(self):
        op = blur.BlurOperator(6, 6, blur.gaussian_psf(1.0, 3), "zero")
        rng = np.random.default_rng(4)
        x, y = rng.standard_normal(36), rng.standard_normal(36)
        assert op.matvec(x) @ y == pytest.approx(x @ op.rmatvec(y), abs=1e-10)


class TestDct:
    def test_identity(self):
        spec = blur.dct_spectral_decomposition(blur.gaussian_psf(1.0, 1), 6)
        np.testing.assert_allclose(spec.sigmas, 1.0)

    @pytest.mark.parametrize("N,sigma,K", [(8, 1.0, 5), (64, 4.0, 63), (9, 2.0, 9)])
    def test_reproduces_convolution(self, N, sigma, K):
        p = blur.gaussian_psf(sigma, K)
        spec = blur.dct_spectral_decomposition(p, N)
        rng = np.random.default_rng(N)
        for _ in range(10):
            x = rng.standard_normal((N, N))
            ax = blur.apply_blur(x, p)
            assert np.linalg.norm(spec.apply(x) - ax) / np.linalg.norm(ax) <= 1e-8

    def test_top_singular_value(self):
        spec = blur.dct_spectral_decomposition(blur.gaussian_psf(2.0, 7), 16)
        assert spec.sigmas[0] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(spec.sigmas) <= 0)

    @pytest.mark.parametrize("N,sigma,K", [(6, 1.0, 3), (12, 1.5, 11)])
    def test_against_dense_svd(self, N, sigma, K):
        p = blur.gaussian_psf(sigma, K)
        a = blur.blur_matrix(N, N, p).toarray()
        _, s, _ = dense_svd(a)
        np.testing.assert_allclose(blur.dct_spectral_decomposition(p, N).sigmas, s, atol=1e-8)

    def test_forward_backward(self):
        spec = blur.dct_spectral_decomposition(blur.gaussian_psf(1.0, 3), 8)
        x = np.random.default_rng(5).standard_normal((8, 8))
        np.testing.assert_allclose(spec.backward(spec.forward(x)), x, atol=1e-13)
        assert np.linalg.norm(spec.forward(x)) == pytest.approx(np.linalg.norm(x))

    def test_data_coefficients_are_singular_pairs(self):
        # (A x, u_j) = sigma_j (x, v_j)
        spec = blur.dct_spectral_decomposition(blur.gaussian_psf(3.0, 15), 16)
        x = np.random.default_rng(6).standard_normal((16, 16))
        np.testing.assert_allclose(spec.data_coefficients(spec.apply(x)), spec.sigmas * spec.forward(x), atol=1e-12)

    def test_rejects(self):
        with pytest.raises(ValueError):
            blur.dct_spectral_decomposition(blur.gaussian_psf(1.0, 3), 4, bc="zero")
        w = np.arange(9.0).reshape(3, 3)
        with pytest.raises(ValueError):
            blur.dct_spectral_decomposition(blur.PsfKernel(3, 1.0, w / w.sum()), 4)

    def test_gcv_pipeline(self):
        spec = blur.dct_spectral_decomposition(blur.gaussian_psf(2.0, 9), 16)
        b = np.random.default_rng(7).standard_normal((16, 16))
        o = project_observations(b, spec.system())
        o2 = project_observations(5 * b, spec.system())
        assert select_gcv_index(o) == select_gcv_index(o2)

    def test_operator_spectral(self):
        op = blur.BlurOperator(8, 8, blur.gaussian_psf(1.0, 3))
        x = np.random.default_rng(8).standard_normal((8, 8))
        np.testing.assert_allclose(op.spectral().apply(x), op.apply(x), atol=1e-13)


class TestInverseCrime:
    def test_identity_kernel(self):
        img = np.random.default_rng(0).standard_normal((10, 10))
        x, b = blur.make_inverse_crime_free_data(img, blur.gaussian_psf(1.0, 1), 6)
        np.testing.assert_array_equal(x, b)

    def test_constant_interior(self):
        p = blur.gaussian_psf(1.0, 5)
        x, b = blur.make_inverse_crime_free_data(np.ones((12, 12)), p, 8)
        np.testing.assert_allclose(b, 1.0, rtol=1e-14)

    def test_model_mismatch(self):
        p = blur.gaussian_psf(4.0, 63)
        img = np.random.default_rng(1).random((64 + 2 * p.M, 64 + 2 * p.M))
        x, b = blur.make_inverse_crime_free_data(img, p, 64)
        ax = blur.apply_blur(x, p)
        assert np.linalg.norm(ax - b) / np.linalg.norm(b) > 0

    def test_padding(self):
        with pytest.raises(ValueError):
            blur.make_inverse_crime_free_data(np.ones((8, 8)), blur.gaussian_psf(1.0, 5), 6)
        with pytest.raises(ValueError):
            blur.make_inverse_crime_free_data(np.ones((9, 9)), blur.gaussian_psf(1.0, 1), 6)
