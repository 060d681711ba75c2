"""Nearest-neighbor decoding metric and generalized information density.

The decoder scores candidate codewords with a Gaussian-shaped metric built
on the estimated channel (a mismatched rule under imperfect CSI).  The
per-block generalized information density compares the metric of the
transmitted codeword against its average over an independent codeword;
the average over the finite QPSK alphabet is always computed exactly, in
the log domain.

Two receiver-side reductions turn multi-antenna observations into an
effective scalar channel: maximum-ratio combining for single-stream
transmission, and pairwise orthogonal combining for the two-antenna
space-time block code.  Both operate on the raw received samples so the
realized noise passes through the same processing as the signal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import QPSK_POINTS


class DegenerateEstimateError(ValueError):
    """Channel estimate has zero norm, so estimate-based combining is undefined."""


@dataclass(frozen=True)
class ScalarObservationBlock:
    """Effective scalar channel for one coherence block after combining.

    ``observations[k]`` is scored against ``estimated_amplitude * x`` for
    candidate symbols x.  ``effective_gain`` (the true post-combining gain)
    and ``transmitted`` are carried when the caller knows them; the metric
    itself needs only observations and amplitude.
    """

    observations: np.ndarray
    estimated_amplitude: float
    transmitted: np.ndarray | None = None
    effective_gain: complex | None = None

    def __post_init__(self):
        if self.estimated_amplitude < 0:
            raise ValueError("estimated_amplitude must be >= 0")
        if self.transmitted is not None and len(self.transmitted) != len(self.observations):
            raise ValueError("transmitted and observations lengths disagree")


def snn_log_metric(
    data_symbols: np.ndarray, received_data: np.ndarray, estimated_channel: np.ndarray
) -> float:
    """Log of the nearest-neighbor decoding metric, -sum_k ||y_k - H_hat x_k||^2.

    Never exponentiates; at moderate SNR the linear-domain metric underflows.
    """
    resid = received_data - estimated_channel @ data_symbols
    return float(-np.sum(np.abs(resid) ** 2))


def mrc_reduce(
    received_data: np.ndarray,
    estimated_channel: np.ndarray,
    *,
    transmitted: np.ndarray | None = None,
    true_channel: np.ndarray | None = None,
) -> ScalarObservationBlock:
    """Project multi-antenna observations onto the estimated channel direction.

    Returns the first coordinate of the unitary rotation whose first row is
    h_hat^H / ||h_hat||; the remaining coordinates are codeword-independent
    and never materialized.
    """
    h_hat = np.asarray(estimated_channel).reshape(-1)
    norm = float(np.linalg.norm(h_hat))
    if norm == 0.0:
        raise DegenerateEstimateError("estimated channel has zero norm")
    reduced = (h_hat.conj() @ received_data) / norm
    gain = None
    if true_channel is not None:
        gain = complex(h_hat.conj() @ np.asarray(true_channel).reshape(-1) / norm)
    return ScalarObservationBlock(reduced, norm, transmitted, gain)


def alamouti_encode(symbols: np.ndarray, *, max_total_power: float | None = None) -> np.ndarray:
    """Map a symbol vector to the 2 x n_d space-time block-code data matrix.

    Row 1 carries the symbols; row 2 carries, per pair, the conjugate of the
    second symbol followed by the negated conjugate of the first.
    """
    x = np.asarray(symbols)
    n_d = x.shape[-1]
    if n_d % 2 != 0:
        raise ValueError(f"symbol count must be even for pairwise encoding, got {n_d}")
    if max_total_power is not None and float(np.sum(np.abs(x) ** 2)) > max_total_power * (1 + 1e-9):
        raise ValueError("symbol energy exceeds the per-block power budget")
    second = np.empty_like(x)
    second[..., 0::2] = np.conj(x[..., 1::2])
    second[..., 1::2] = -np.conj(x[..., 0::2])
    return np.stack([x, second], axis=-2)


def alamouti_symbol_stream(symbols: np.ndarray) -> np.ndarray:
    """Symbol stream the combined observations are scored against.

    Odd positions (pairwise second entries) are conjugated; QPSK stays QPSK.
    """
    out = np.array(symbols, copy=True)
    out[..., 1::2] = np.conj(out[..., 1::2])
    return out


def _alamouti_combiners(channel: np.ndarray) -> np.ndarray:
    """Per-receive-antenna 2x2 combining matrices [[a, b], [-b*, a*]] from the rows."""
    a = channel[..., :, 0]
    b = channel[..., :, 1]
    out = np.empty(channel.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = a
    out[..., 0, 1] = b
    out[..., 1, 0] = -np.conj(b)
    out[..., 1, 1] = np.conj(a)
    return out


def alamouti_equivalent_observations(
    received_data: np.ndarray,
    estimated_channel: np.ndarray,
    *,
    transmitted: np.ndarray | None = None,
) -> ScalarObservationBlock:
    """Combine raw 2x2 space-time observations into an effective scalar stream.

    For each symbol pair and each receive antenna, stacks (y at the odd use,
    conjugate of y at the even use), applies the estimate-based combiner, sums
    over antennas and divides by the Frobenius norm of the estimate.  With a
    perfect estimate the stack of combiners has orthonormal rows, so the
    processed noise stays white.
    """
    y = np.asarray(received_data)
    h_hat = np.asarray(estimated_channel)
    if y.shape[0] != 2 or h_hat.shape != (2, 2):
        raise ValueError("space-time combining requires 2 receive antennas and a 2x2 estimate")
    n_d = y.shape[1]
    if n_d % 2 != 0:
        raise ValueError(f"symbol count must be even for pairwise combining, got {n_d}")
    fro = float(np.linalg.norm(h_hat))
    if fro == 0.0:
        raise DegenerateEstimateError("estimated channel has zero norm")

    # u[i, :, k] = (y[i, 2k], conj(y[i, 2k+1])) for receive antenna i, pair k
    u = np.stack([y[:, 0::2], np.conj(y[:, 1::2])], axis=1)
    combiners = _alamouti_combiners(h_hat)  # (2, 2, 2)
    combined = np.einsum("iab,ibk->ak", combiners.conj().transpose(0, 2, 1), u) / fro
    out = np.empty(n_d, dtype=complex)
    out[0::2] = combined[0]
    out[1::2] = combined[1]
    return ScalarObservationBlock(out, fro, transmitted, None)


def info_density_scalar(
    s: float, symbols: np.ndarray, block: ScalarObservationBlock, symbol_power: float
) -> float:
    """Generalized information density of a scalar-channel block.

    Per symbol: -s |y - a x|^2 - log E_xbar[exp(-s |y - a xbar|^2)], with the
    expectation over the 4-point QPSK alphabet at ``symbol_power`` computed
    exactly via a max-shifted log-sum-exp.
    """
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    y = block.observations
    a = block.estimated_amplitude
    cand = QPSK_POINTS * np.sqrt(symbol_power)
    num = -s * np.abs(y - a * np.asarray(symbols)) ** 2
    d = -s * np.abs(y[:, None] - a * cand[None, :]) ** 2
    shift = d.max(axis=1)
    denom = shift + np.log(np.mean(np.exp(d - shift[:, None]), axis=1))
    return float(np.sum(num - denom))


def qpsk_column_candidates(tx_antennas: int) -> np.ndarray:
    """All 4^tx_antennas unit-energy QPSK input columns, shape (tx, 4^tx)."""
    if tx_antennas > 4:
        raise ValueError(
            f"alphabet enumeration grows as 4^tx_antennas; tx_antennas={tx_antennas} > 4"
        )
    grids = np.meshgrid(*([QPSK_POINTS] * tx_antennas), indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=0)


def info_density_mimo(
    s: float,
    data_symbols: np.ndarray,
    received_data: np.ndarray,
    estimated_channel: np.ndarray,
    snr: float,
) -> float:
    """Generalized information density with the full matrix metric.

    The per-column expectation enumerates the 4^tx_antennas QPSK input
    columns exactly (tx_antennas <= 4 enforced).
    """
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    x = np.asarray(data_symbols)
    y = np.asarray(received_data)
    h_hat = np.asarray(estimated_channel)
    m_t = x.shape[0]
    cand = qpsk_column_candidates(m_t) * np.sqrt(snr / m_t)
    num = -s * np.sum(np.abs(y - h_hat @ x) ** 2, axis=0)
    # d[c, k] = -s ||y_k - H_hat cand_c||^2
    hx = h_hat @ cand  # (rx, 4^tx)
    d = -s * np.sum(np.abs(y[:, None, :] - hx[:, :, None]) ** 2, axis=0)
    shift = d.max(axis=0)
    denom = shift + np.log(np.mean(np.exp(d - shift[None, :]), axis=0))
    return float(np.sum(num - denom))
