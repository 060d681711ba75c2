"""Tests for the decoding metric, receiver reductions and information density."""

import mpmath
import numpy as np
import pytest

from patmimo import (
    DegenerateEstimateError,
    alamouti_encode,
    alamouti_equivalent_observations,
    alamouti_symbol_stream,
    info_density_mimo,
    info_density_scalar,
    mrc_reduce,
    sample_qpsk_data,
    snn_log_metric,
    stream,
)
from patmimo.metrics import ScalarObservationBlock


def _crandn(rng, shape):
    z = rng.standard_normal((2,) + tuple(shape))
    return np.sqrt(0.5) * (z[0] + 1j * z[1])


class TestSnnLogMetric:
    def test_zero_residual(self):
        rng = stream(1, 0)
        h_hat = _crandn(rng, (3, 2))
        x = _crandn(rng, (2, 5))
        assert snn_log_metric(x, h_hat @ x, h_hat) == 0.0

    def test_single_symbol_unit_residual(self):
        h_hat = np.array([[1.0], [0.0]])
        x = np.array([[1.0]])
        y = np.zeros((2, 1))
        np.testing.assert_allclose(snn_log_metric(x, y, h_hat), -1.0)

    def test_matches_gaussian_log_density_up_to_constant(self):
        """With a perfect estimate the metric is the ML log-likelihood ratio:
        the offset to the white-Gaussian log-density is codeword-independent."""
        rng = stream(2, 0)
        m_r, n_d = 3, 6
        h = _crandn(rng, (m_r, 2))
        y = _crandn(rng, (m_r, n_d))
        offsets = []
        for _ in range(100):
            x = _crandn(rng, (2, n_d))
            loglik = -n_d * m_r * np.log(np.pi) - np.sum(np.abs(y - h @ x) ** 2)
            offsets.append(snn_log_metric(x, y, h) - loglik)
        np.testing.assert_allclose(offsets, n_d * m_r * np.log(np.pi), atol=1e-10)


class TestMrcReduce:
    def test_aligned_unit_channel(self):
        h = np.array([1.0, 0, 0, 0], dtype=complex)
        x = np.array([1 + 1j, -1 + 1j, 2.0])
        block = mrc_reduce(h[:, None] * x[None, :], h, true_channel=h)
        np.testing.assert_allclose(block.observations, x, atol=1e-14)
        np.testing.assert_allclose(block.estimated_amplitude, 1.0)
        np.testing.assert_allclose(block.effective_gain, 1.0)

    def test_single_antenna_is_phase_rotation(self):
        rng = stream(3, 0)
        h_hat = _crandn(rng, (1,))
        y = _crandn(rng, (1, 8))
        block = mrc_reduce(y, h_hat)
        np.testing.assert_allclose(np.abs(block.observations), np.abs(y[0]), rtol=1e-12)
        np.testing.assert_allclose(block.estimated_amplitude, np.abs(h_hat[0]))

    def test_matches_gram_schmidt_unitary_oracle(self):
        """First coordinate of an explicit unitary completion of h_hat/||h_hat||."""
        rng = stream(4, 0)
        for _ in range(100):
            m_r = int(rng.integers(1, 5))
            h_hat = _crandn(rng, (m_r,))
            y = _crandn(rng, (m_r, 3))
            # Gram-Schmidt completion starting from the estimate direction
            basis = [h_hat / np.linalg.norm(h_hat)]
            for col in np.eye(m_r, dtype=complex).T:
                v = col - sum(b * (b.conj() @ col) for b in basis)
                if np.linalg.norm(v) > 1e-8:
                    basis.append(v / np.linalg.norm(v))
            u = np.conj(np.stack(basis[:m_r]))  # rows u[k] = basis[k]^H
            rotated = u @ y
            block = mrc_reduce(y, h_hat)
            np.testing.assert_allclose(block.observations, rotated[0], atol=1e-10)

    def test_noiseless_mismatched_gain(self):
        rng = stream(5, 0)
        h = _crandn(rng, (4,))
        h_hat = h + 0.3 * _crandn(rng, (4,))
        x = _crandn(rng, (6,))
        block = mrc_reduce(h[:, None] * x[None, :], h_hat, true_channel=h)
        gain = h_hat.conj() @ h / np.linalg.norm(h_hat)
        np.testing.assert_allclose(block.observations, gain * x, atol=1e-12)
        np.testing.assert_allclose(block.effective_gain, gain)

    def test_zero_estimate_rejected(self):
        with pytest.raises(DegenerateEstimateError):
            mrc_reduce(np.ones((2, 3), dtype=complex), np.zeros(2, dtype=complex))


class TestAlamoutiEncode:
    def test_pair_rule(self):
        a1, a2 = 0.3 + 0.4j, -1.0 + 2.0j
        out = alamouti_encode(np.array([a1, a2]))
        np.testing.assert_allclose(out, [[a1, a2], [np.conj(a2), -np.conj(a1)]])

    def test_unit_and_i(self):
        out = alamouti_encode(np.array([1.0, 1.0j]))
        np.testing.assert_allclose(out, [[1, 1j], [-1j, -1]])

    def test_pairwise_orthogonal_rows(self):
        rng = stream(6, 0)
        x = _crandn(rng, (10,))
        out = alamouti_encode(x)
        for k in range(5):
            sub = out[:, 2 * k : 2 * k + 2]
            gram = sub @ sub.conj().T
            np.testing.assert_allclose(gram[0, 1], 0.0, atol=1e-12)
            np.testing.assert_allclose(gram[0, 0], gram[1, 1], rtol=1e-12)

    def test_odd_length_rejected(self):
        with pytest.raises(ValueError, match="even"):
            alamouti_encode(np.ones(3, dtype=complex))

    def test_power_budget_enforced(self):
        x = np.ones(4, dtype=complex)  # energy 4
        alamouti_encode(x, max_total_power=4.0)
        with pytest.raises(ValueError, match="power"):
            alamouti_encode(x, max_total_power=3.9)


class TestAlamoutiObservations:
    def _random_case(self, rng, n_d=6, mismatch=0.3, noise=True):
        h = _crandn(rng, (2, 2))
        h_hat = h + mismatch * _crandn(rng, (2, 2))
        x = _crandn(rng, (n_d,))
        w = _crandn(rng, (2, n_d)) if noise else np.zeros((2, n_d))
        y = h @ alamouti_encode(x) + w
        return h, h_hat, x, w, y

    def test_perfect_csi_noiseless_identity(self):
        rng = stream(7, 0)
        h, _, x, _, y = self._random_case(rng, mismatch=0.0, noise=False)
        block = alamouti_equivalent_observations(y, h)
        fro = np.linalg.norm(h)
        np.testing.assert_allclose(block.observations, fro * alamouti_symbol_stream(x), atol=1e-12)
        np.testing.assert_allclose(block.estimated_amplitude, fro)

    def test_perfect_csi_noise_stays_white(self):
        """Post-combining noise is unit-variance white, so the per-symbol SNR
        matches four-branch MRC at the same total channel energy."""
        rng = stream(8, 0)
        resid = []
        for _ in range(30_000):
            h, _, x, _, y = self._random_case(rng, n_d=4, mismatch=0.0)
            block = alamouti_equivalent_observations(y, h)
            resid.append(block.observations - np.linalg.norm(h) * alamouti_symbol_stream(x))
        resid = np.asarray(resid)
        np.testing.assert_allclose(np.mean(np.abs(resid) ** 2), 1.0, atol=0.02)
        np.testing.assert_allclose(np.mean(resid), 0.0, atol=0.01)

    def test_matches_literal_combiner_oracle(self):
        """Scalar-loop evaluation of the pairwise combiners, fed the realized
        noise, reproduces the vectorized processing exactly."""
        rng = stream(9, 0)
        for _ in range(50):
            h, h_hat, x, w, y = self._random_case(rng)
            n_pair = x.size // 2
            fro = np.linalg.norm(h_hat)
            xt = alamouti_symbol_stream(x)
            expected = np.empty(x.size, dtype=complex)
            for k in range(n_pair):
                acc_sig = np.zeros(2, dtype=complex)
                acc_noise = np.zeros(2, dtype=complex)
                for i in range(2):
                    v = np.array(
                        [[h[i, 0], h[i, 1]],
                         [-np.conj(h[i, 1]), np.conj(h[i, 0])]]
                    )
                    v_hat = np.array(
                        [[h_hat[i, 0], h_hat[i, 1]],
                         [-np.conj(h_hat[i, 1]), np.conj(h_hat[i, 0])]]
                    )
                    nu = np.array([w[i, 2 * k], np.conj(w[i, 2 * k + 1])])
                    acc_sig += v_hat.conj().T @ (v @ xt[2 * k : 2 * k + 2])
                    acc_noise += v_hat.conj().T @ nu
                expected[2 * k : 2 * k + 2] = (acc_sig + acc_noise) / fro
            block = alamouti_equivalent_observations(y, h_hat)
            np.testing.assert_allclose(block.observations, expected, atol=1e-12)

    def test_zero_estimate_rejected(self):
        with pytest.raises(DegenerateEstimateError):
            alamouti_equivalent_observations(np.ones((2, 4), dtype=complex), np.zeros((2, 2)))

    def test_odd_length_rejected(self):
        with pytest.raises(ValueError, match="even"):
            alamouti_equivalent_observations(np.ones((2, 3), dtype=complex), np.eye(2))


class TestInfoDensityScalar:
    def test_zero_at_s_zero(self):
        rng = stream(10, 0)
        y = _crandn(rng, (5,))
        x = _crandn(rng, (5,))
        block = ScalarObservationBlock(y, 1.3)
        assert info_density_scalar(0.0, x, block, 1.0) == 0.0

    def test_high_snr_saturates_at_log4(self):
        a = 1e3
        x = np.array([(1 + 1j) / np.sqrt(2)])
        block = ScalarObservationBlock(a * x, a)
        val = info_density_scalar(1.0, x, block, 1.0)
        np.testing.assert_allclose(val, np.log(4.0), rtol=1e-12)

    def test_matches_extended_precision_oracle(self):
        """Naive linear-domain 4-term sum at 50 significant digits."""
        s, a, rho_sym = 1.0, 1.0, 1.0
        y = 0.3 + 0.1j
        x = (1 + 1j) / np.sqrt(2) * np.sqrt(rho_sym)
        block = ScalarObservationBlock(np.array([y]), a)
        val = info_density_scalar(s, np.array([x]), block, rho_sym)

        with mpmath.workdps(50):
            cand = [
                mpmath.mpc(c.real, c.imag) * mpmath.sqrt(rho_sym)
                for c in [(1 + 1j) / np.sqrt(2), (-1 + 1j) / np.sqrt(2),
                          (-1 - 1j) / np.sqrt(2), (1 - 1j) / np.sqrt(2)]
            ]
            ym = mpmath.mpc(y.real, y.imag)
            xm = mpmath.mpc(x.real, x.imag)
            num = mpmath.exp(-s * abs(ym - a * xm) ** 2)
            den = mpmath.fsum([mpmath.exp(-s * abs(ym - a * c) ** 2) for c in cand]) / 4
            oracle = float(mpmath.log(num / den))
        np.testing.assert_allclose(val, oracle, rtol=1e-12)

    def test_exact_expectation_identity(self):
        """E over a fresh uniform codeword of exp(i_s) is exactly 1 per symbol."""
        rng = stream(11, 0)
        from patmimo import QPSK_POINTS

        for s in (0.3, 1.0, 2.5):
            y = _crandn(rng, (1,))
            a = float(np.abs(_crandn(rng, (1,))[0]))
            vals = []
            for c in QPSK_POINTS * np.sqrt(0.7):
                block = ScalarObservationBlock(y, a)
                vals.append(np.exp(info_density_scalar(s, np.array([c]), block, 0.7)))
            np.testing.assert_allclose(np.mean(vals), 1.0, rtol=1e-12)

    def test_zero_amplitude_gives_zero_density(self):
        rng = stream(12, 0)
        y = _crandn(rng, (4,))
        x = _crandn(rng, (4,))
        block = ScalarObservationBlock(y, 0.0)
        np.testing.assert_allclose(info_density_scalar(1.0, x, block, 1.0), 0.0, atol=1e-14)


class TestInfoDensityMimo:
    def test_agrees_with_scalar_path(self):
        """Single-stream full-matrix density equals the MRC-reduced scalar one;
        the dropped rotated coordinates are codeword-independent."""
        rng = stream(13, 0)
        for _ in range(100):
            m_r = int(rng.integers(1, 5))
            n_d = int(rng.integers(1, 8))
            rho = float(rng.uniform(0.1, 5.0))
            h = _crandn(rng, (m_r, 1))
            h_hat = h + 0.4 * _crandn(rng, (m_r, 1))
            x = sample_qpsk_data(1, n_d, rho, rng)
            y = h @ x + _crandn(rng, (m_r, n_d))
            full = info_density_mimo(1.0, x, y, h_hat, rho)
            block = mrc_reduce(y, h_hat[:, 0])
            scalar = info_density_scalar(1.0, x[0], block, rho)
            np.testing.assert_allclose(full, scalar, rtol=1e-10)

    def test_zero_at_s_zero(self):
        rng = stream(14, 0)
        h = _crandn(rng, (2, 2))
        x = sample_qpsk_data(2, 4, 1.0, rng)
        y = _crandn(rng, (2, 4))
        assert info_density_mimo(0.0, x, y, h, 1.0) == 0.0

    def test_zero_data_power_gives_zero(self):
        rng = stream(15, 0)
        h = _crandn(rng, (2, 2))
        x = np.zeros((2, 4), dtype=complex)
        y = _crandn(rng, (2, 4))
        np.testing.assert_allclose(info_density_mimo(1.0, x, y, h, 0.0), 0.0, atol=1e-12)

    def test_large_antenna_count_rejected(self):
        with pytest.raises(ValueError, match="4"):
            info_density_mimo(1.0, np.ones((5, 2)), np.ones((2, 2)), np.ones((2, 5)), 1.0)


class TestSimoReductionInvariance:
    def test_rcus_integrand_agrees(self):
        """exp(-[i - thr]^+) from the full metric and the reduced scalar metric
        agree to 1e-9 relative on matched instances."""
        rng = stream(16, 0)
        thr = 3.0
        for _ in range(50):
            m_r = int(rng.integers(1, 5))
            rho = float(rng.uniform(0.2, 3.0))
            h = _crandn(rng, (m_r, 1))
            h_hat = h + 0.5 * _crandn(rng, (m_r, 1))
            x = sample_qpsk_data(1, 6, rho, rng)
            y = h @ x + _crandn(rng, (m_r, 6))
            i_full = info_density_mimo(1.0, x, y, h_hat, rho)
            block = mrc_reduce(y, h_hat[:, 0])
            i_red = info_density_scalar(1.0, x[0], block, rho)
            u_full = np.exp(-max(i_full - thr, 0.0))
            u_red = np.exp(-max(i_red - thr, 0.0))
            np.testing.assert_allclose(u_full, u_red, rtol=1e-9)
