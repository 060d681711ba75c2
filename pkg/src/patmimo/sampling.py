"""Vectorized, reproducible samplers of the per-block information density.

These samplers generate i.i.d. realizations of the per-coherence-block
generalized information density for the supported transmission schemes.
They are the Monte Carlo workhorse behind both bound estimators, so they
use exact distributional identities instead of simulating every matrix
entry:

* the ML estimation error is white complex Gaussian with per-entry
  variance tx/(snr * n_p) for any orthogonal pilot matrix, so the estimate
  is drawn directly as H plus scaled white noise;
* after estimate-based combining (MRC, or the pairwise space-time
  combiner, whose stacked rows are orthonormal for any estimate), the
  processed noise is white unit complex Gaussian, so the reduced
  observation is drawn in scalar form;
* the 4-point QPSK expectation factorizes over I and Q into a product of
  two hyperbolic cosines.

Each identity is exercised against the literal single-block operations in
the test suite.  All draws are pure functions of (seed, key, partition
index); draws are sized by ``data_draw_count`` so that sweeps over pilot
count or SNR can reuse common random numbers.

The arithmetic of the two hot schemes runs in fused JIT kernels
(_kernels.py); the numpy formulations are kept here as references and the
tests pin their agreement.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ._kernels import alamouti_density_kernel, simo_density_kernel
from .channel import QPSK_POINTS, BlockFadingConfig, ConfigError
from .metrics import qpsk_column_candidates
from .streams import DEFAULT_PARTITION_SIZE, partition_plan, stream

SCHEMES = ("simo", "alamouti", "mimo_generic")

_LOG2 = np.log(2.0)


def validate_scheme(config: BlockFadingConfig, scheme: str) -> None:
    v = []
    if scheme not in SCHEMES:
        raise ConfigError([f"unknown scheme {scheme!r}; expected one of {SCHEMES}"])
    if scheme == "simo" and config.tx_antennas != 1:
        v.append(f"simo requires tx_antennas = 1, got {config.tx_antennas}")
    if scheme == "alamouti":
        if config.tx_antennas != 2 or config.rx_antennas != 2:
            v.append(
                "alamouti requires tx_antennas = rx_antennas = 2, got "
                f"{config.tx_antennas}x{config.rx_antennas}"
            )
        if config.data_count % 2 != 0:
            v.append(f"alamouti requires an even data_count, got {config.data_count}")
    if scheme == "mimo_generic" and config.tx_antennas > 4:
        v.append(f"mimo_generic enumeration requires tx_antennas <= 4, got {config.tx_antennas}")
    if v:
        raise ConfigError(v)


_SQRT_HALF = np.sqrt(0.5)
# Quadrature signs of the QPSK alphabet, aligned with QPSK_POINTS.
_SIGN_RE = np.sign(QPSK_POINTS.real)
_SIGN_IM = np.sign(QPSK_POINTS.imag)


def _crandn(rng, shape):
    z = rng.standard_normal((2,) + tuple(shape))
    return _SQRT_HALF * (z[0] + 1j * z[1])


def _logcosh(t):
    at = np.abs(t)
    return at + np.log1p(np.exp(-2.0 * at)) - _LOG2


def _qpsk_density_parts(s, amplitude, sign_re, sign_im, obs_re, obs_im, symbol_power):
    """Per-row information density for exact-QPSK symbols, in quadrature form.

    The 4-term expectation over the alphabet splits into I and Q factors:
    per symbol, i = beta (sr yr + si yi) - logcosh(beta yr) - logcosh(beta yi)
    with beta = 2 s a sqrt(symbol_power / 2) and sr, si the +-1 quadrature
    signs of the transmitted symbol.
    """
    beta = (2.0 * s * np.sqrt(0.5 * symbol_power)) * amplitude[:, None]
    num = beta * (sign_re * obs_re + sign_im * obs_im)
    den = _logcosh(beta * obs_re) + _logcosh(beta * obs_im)
    return np.sum(num - den, axis=1)


def _qpsk_density_rows(s, amplitude, symbols, observations, symbol_power):
    """Complex-input wrapper around the quadrature kernel."""
    return _qpsk_density_parts(
        s,
        amplitude,
        np.sign(symbols.real),
        np.sign(symbols.imag),
        observations.real,
        observations.imag,
        symbol_power,
    )


def _simo_draws(config, rng, count, data_draw_count):
    h = _crandn(rng, (count, config.rx_antennas))
    g = _crandn(rng, (count, config.rx_antennas))
    idx = rng.integers(0, 4, size=(count, data_draw_count))
    noise = rng.standard_normal((2, count, data_draw_count))
    return h, g, idx, noise


def _simo_partition(config, rng, count, data_draw_count, perfect_csi):
    h, g, idx, noise = _simo_draws(config, rng, count, data_draw_count)
    sigma_e = 0.0 if perfect_csi else np.sqrt(config.estimation_noise_var)
    out = np.empty(count)
    simo_density_kernel(
        config.rcus_parameter, config.snr, sigma_e, h, g, idx, noise,
        config.data_count, out,
    )
    return out


def _simo_partition_numpy(config, rng, count, data_draw_count, perfect_csi):
    """Vectorized reference for the fused kernel (same draws, same math)."""
    n_d = config.data_count
    rho = config.snr
    h, g, idx, noise = _simo_draws(config, rng, count, data_draw_count)
    h_hat = h if perfect_csi else h + np.sqrt(config.estimation_noise_var) * g
    amplitude = np.linalg.norm(h_hat, axis=1)
    gain = np.einsum("bm,bm->b", h_hat.conj(), h) / amplitude
    sr = _SIGN_RE[idx[:, :n_d]]
    si = _SIGN_IM[idx[:, :n_d]]
    # y = gain * x + w in quadrature form, with x = sqrt(rho/2) (sr + i si)
    scale = np.sqrt(0.5 * rho)
    gr = scale * gain.real[:, None]
    gi = scale * gain.imag[:, None]
    yr = gr * sr - gi * si + _SQRT_HALF * noise[0, :, :n_d]
    yi = gr * si + gi * sr + _SQRT_HALF * noise[1, :, :n_d]
    return _qpsk_density_parts(config.rcus_parameter, amplitude, sr, si, yr, yi, rho)


def _alamouti_draws(config, rng, count, data_draw_count):
    h = _crandn(rng, (count, 2, 2))
    g = _crandn(rng, (count, 2, 2))
    idx = rng.integers(0, 4, size=(count, data_draw_count))
    noise = rng.standard_normal((2, count, data_draw_count))
    return h, g, idx, noise


def _alamouti_partition(config, rng, count, data_draw_count, perfect_csi):
    h, g, idx, noise = _alamouti_draws(config, rng, count, data_draw_count)
    sigma_e = 0.0 if perfect_csi else np.sqrt(config.estimation_noise_var)
    out = np.empty(count)
    alamouti_density_kernel(
        config.rcus_parameter, config.snr, sigma_e, h, g, idx, noise,
        config.data_count, out,
    )
    return out


def _alamouti_partition_numpy(config, rng, count, data_draw_count, perfect_csi):
    """Vectorized reference for the fused kernel (same draws, same math)."""
    n_d = config.data_count
    rho = config.snr
    h, g, idx, noise = _alamouti_draws(config, rng, count, data_draw_count)
    h_hat = h if perfect_csi else h + np.sqrt(config.estimation_noise_var) * g
    fro = np.linalg.norm(h_hat, axis=(1, 2))

    # Per-antenna pairwise combiners from the channel rows: [[a, b], [-b*, a*]]
    def combiners(mat):
        out = np.empty((count, 2, 2, 2), dtype=complex)
        out[:, :, 0, 0] = mat[:, :, 0]
        out[:, :, 0, 1] = mat[:, :, 1]
        out[:, :, 1, 0] = -np.conj(mat[:, :, 1])
        out[:, :, 1, 1] = np.conj(mat[:, :, 0])
        return out

    mixing = np.einsum("brja,brjk->bak", combiners(h_hat).conj(), combiners(h))

    sr = _SIGN_RE[idx[:, :n_d]]
    si = _SIGN_IM[idx[:, :n_d]]
    xt = np.sqrt(0.25 * rho) * (sr + 1j * si)
    pairs = xt.reshape(count, n_d // 2, 2)
    signal = np.einsum("baj,bkj->bka", mixing, pairs).reshape(count, n_d)
    inv_fro = 1.0 / fro[:, None]
    yr = signal.real * inv_fro + _SQRT_HALF * noise[0, :, :n_d]
    yi = signal.imag * inv_fro + _SQRT_HALF * noise[1, :, :n_d]
    return _qpsk_density_parts(config.rcus_parameter, fro, sr, si, yr, yi, 0.5 * rho)


def _mimo_partition(config, rng, count, data_draw_count, perfect_csi):
    m_t, m_r = config.tx_antennas, config.rx_antennas
    n_d = config.data_count
    rho = config.snr
    s = config.rcus_parameter
    h = _crandn(rng, (count, m_r, m_t))
    g = _crandn(rng, (count, m_r, m_t))
    idx = rng.integers(0, 4, size=(count, m_t, data_draw_count))
    w = _crandn(rng, (count, m_r, data_draw_count))

    h_hat = h if perfect_csi else h + np.sqrt(config.estimation_noise_var) * g
    x = QPSK_POINTS[idx[:, :, :n_d]] * np.sqrt(rho / m_t)
    y = h @ x + w[:, :, :n_d]
    cand = qpsk_column_candidates(m_t) * np.sqrt(rho / m_t)

    out = np.empty(count)
    # Candidate enumeration is 4^tx wide; bound the (chunk, cand, n_d) temporaries.
    chunk = max(1, int(2**22 / (cand.shape[1] * n_d)))
    for lo in range(0, count, chunk):
        hi = min(lo + chunk, count)
        resid = y[lo:hi] - h_hat[lo:hi] @ x[lo:hi]
        num = -s * np.sum(np.abs(resid) ** 2, axis=1)
        hc = h_hat[lo:hi] @ cand
        d = -s * np.sum(np.abs(y[lo:hi, :, None, :] - hc[:, :, :, None]) ** 2, axis=1)
        shift = d.max(axis=1)
        denom = shift + np.log(np.mean(np.exp(d - shift[:, None, :]), axis=1))
        out[lo:hi] = np.sum(num - denom, axis=1)
    return out


_PARTITION_FNS = {
    "simo": _simo_partition,
    "alamouti": _alamouti_partition,
    "mimo_generic": _mimo_partition,
}


def partition_densities(
    config: BlockFadingConfig,
    scheme: str,
    seed: int,
    partition_index: int,
    count: int,
    *,
    key: tuple[int, ...] = (0,),
    data_draw_count: int | None = None,
    perfect_csi: bool = False,
) -> np.ndarray:
    """Per-block densities for one partition of the sampling plan."""
    validate_scheme(config, scheme)
    n_draw = config.data_count if data_draw_count is None else int(data_draw_count)
    if n_draw < config.data_count:
        raise ValueError(
            f"data_draw_count {n_draw} is smaller than the configured data_count "
            f"{config.data_count}"
        )
    rng = stream(seed, *key, partition_index)
    return _PARTITION_FNS[scheme](config, rng, count, n_draw, perfect_csi)


def _partition_worker(args):
    config, scheme, seed, index, count, key, data_draw_count, perfect_csi = args
    return index, partition_densities(
        config,
        scheme,
        seed,
        index,
        count,
        key=key,
        data_draw_count=data_draw_count,
        perfect_csi=perfect_csi,
    )


def block_densities(
    config: BlockFadingConfig,
    scheme: str,
    count: int,
    seed: int,
    *,
    key: tuple[int, ...] = (0,),
    partition_size: int = DEFAULT_PARTITION_SIZE,
    workers: int = 1,
    data_draw_count: int | None = None,
    perfect_csi: bool = False,
) -> np.ndarray:
    """Draw ``count`` i.i.d. per-block information densities.

    The result is a pure function of (config, scheme, seed, key,
    partition_size, data_draw_count); the worker count only changes wall
    time.
    """
    plan = partition_plan(count, partition_size)
    args = [
        (config, scheme, seed, index, n, key, data_draw_count, perfect_csi)
        for index, n in plan
    ]
    if workers > 1 and len(plan) > 1:
        parts = dict()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for index, dens in pool.map(_partition_worker, args, chunksize=4):
                parts[index] = dens
        pieces = [parts[index] for index, _ in plan]
    else:
        pieces = [_partition_worker(a)[1] for a in args]
    return np.concatenate(pieces)
