"""Block-fading MIMO channel with pilot-assisted ML channel estimation.

A codeword spans ``diversity_branches`` coherence blocks of
``coherence_block_size`` channel uses each.  Within a block the fading
matrix is constant; the first ``pilot_count`` channel uses carry known
orthogonal pilot rows, the remainder carry QPSK data.  The receiver forms
the ML channel estimate from the pilot observations and never sees the
true channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Unit-energy QPSK alphabet; data symbols are this alphabet scaled to the
# per-entry transmit magnitude.
QPSK_POINTS = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / np.sqrt(2.0)


class ConfigError(ValueError):
    """A link configuration violates one or more model invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def db_to_linear(x_db: float) -> float:
    return float(10.0 ** (x_db / 10.0))


def linear_to_db(x: float) -> float:
    return float(10.0 * np.log10(x))


@dataclass(frozen=True)
class BlockFadingConfig:
    """Antenna counts, block geometry, SNR, pilot overhead and code rate.

    ``snr`` is linear and per receive antenna (the noise variance is 1).
    ``rate`` is in bits per channel use. ``rcus_parameter`` is the s >= 0
    parameter of the union bound; it is kept fixed (default 1), never
    optimized.
    """

    tx_antennas: int
    rx_antennas: int
    coherence_block_size: int
    diversity_branches: int
    snr: float
    pilot_count: int
    rate: float
    rcus_parameter: float = 1.0

    def __post_init__(self):
        v = []
        if self.tx_antennas < 1:
            v.append(f"tx_antennas must be >= 1, got {self.tx_antennas}")
        if self.rx_antennas < 1:
            v.append(f"rx_antennas must be >= 1, got {self.rx_antennas}")
        if self.coherence_block_size < 1:
            v.append(f"coherence_block_size must be >= 1, got {self.coherence_block_size}")
        if self.diversity_branches < 1:
            v.append(f"diversity_branches must be >= 1, got {self.diversity_branches}")
        if not self.snr > 0:
            v.append(f"snr must be > 0 (linear), got {self.snr}")
        if self.pilot_count < self.tx_antennas:
            v.append(
                f"pilot_count must be >= tx_antennas "
                f"({self.pilot_count} < {self.tx_antennas}): pilot rows cannot be orthogonal"
            )
        if self.pilot_count >= self.coherence_block_size:
            v.append(
                f"pilot_count must be < coherence_block_size "
                f"({self.pilot_count} >= {self.coherence_block_size}): no data symbols left"
            )
        if not self.rate > 0:
            v.append(f"rate must be > 0, got {self.rate}")
        if self.rcus_parameter < 0:
            v.append(f"rcus_parameter must be >= 0, got {self.rcus_parameter}")
        if v:
            raise ConfigError(v)

    @property
    def data_count(self) -> int:
        return self.coherence_block_size - self.pilot_count

    @property
    def blocklength(self) -> int:
        return self.diversity_branches * self.coherence_block_size

    @property
    def eb_n0(self) -> float:
        """Energy per information bit over noise spectral density, snr/rate."""
        return self.snr / self.rate

    @property
    def estimation_noise_var(self) -> float:
        """Per-entry variance of the ML channel-estimation error."""
        return self.tx_antennas / (self.snr * self.pilot_count)


def make_pilot_matrix(tx_antennas: int, pilot_count: int, snr: float) -> np.ndarray:
    """Deterministic pilot matrix with orthogonal equal-energy rows.

    Rows are the first ``tx_antennas`` rows of the ``pilot_count``-point DFT
    matrix scaled so that P P^H = (snr * pilot_count / tx_antennas) * I and
    every pilot channel use carries power ``snr``.
    """
    if pilot_count < tx_antennas:
        raise ConfigError(
            [f"pilot_count must be >= tx_antennas ({pilot_count} < {tx_antennas}): "
             "pilot rows cannot be orthogonal"]
        )
    if not snr > 0:
        raise ConfigError([f"snr must be > 0, got {snr}"])
    rows = np.arange(tx_antennas)[:, None]
    cols = np.arange(pilot_count)[None, :]
    dft = np.exp(2j * np.pi * rows * cols / pilot_count)
    return np.sqrt(snr / tx_antennas) * dft


def sample_fading(rx_antennas: int, tx_antennas: int, rng: np.random.Generator) -> np.ndarray:
    """One fading matrix with i.i.d. circularly-symmetric unit-variance entries."""
    z = rng.standard_normal((2, rx_antennas, tx_antennas))
    return np.sqrt(0.5) * (z[0] + 1j * z[1])


def sample_qpsk_data(
    tx_antennas: int, data_count: int, snr: float, rng: np.random.Generator
) -> np.ndarray:
    """Data matrix of i.i.d. uniform QPSK entries with magnitude sqrt(snr/tx_antennas).

    Each column then has squared norm exactly ``snr`` (constant per-use power).
    """
    if data_count < 1:
        raise ValueError(f"data_count must be >= 1, got {data_count}")
    idx = rng.integers(0, 4, size=(tx_antennas, data_count))
    return QPSK_POINTS[idx] * np.sqrt(snr / tx_antennas)


def ml_estimate(
    received_pilots: np.ndarray,
    pilot_matrix: np.ndarray,
    snr: float,
    pilot_count: int,
    tx_antennas: int,
) -> np.ndarray:
    """ML channel estimate (tx_antennas / (snr * pilot_count)) * Y_p * P^H."""
    if received_pilots.shape[1] != pilot_matrix.shape[1]:
        raise ValueError(
            f"pilot length mismatch: Y_p has {received_pilots.shape[1]} columns, "
            f"P has {pilot_matrix.shape[1]}"
        )
    return (tx_antennas / (snr * pilot_count)) * (received_pilots @ pilot_matrix.conj().T)


@dataclass(frozen=True)
class CoherenceBlockSample:
    """One realization of a coherence block as seen by the decoder."""

    true_channel: np.ndarray       # (rx, tx)
    estimated_channel: np.ndarray  # (rx, tx)
    data_symbols: np.ndarray       # (tx, n_d)
    received_data: np.ndarray      # (rx, n_d)


def sample_coherence_block(
    config: BlockFadingConfig, rng: np.random.Generator
) -> CoherenceBlockSample:
    """Draw one coherence block: fading, pilot phase, ML estimate, data phase.

    Draw order is fixed (H, pilot noise, data symbols, data noise) so that a
    given (seed, stream) always reproduces the same block.
    """
    m_t, m_r = config.tx_antennas, config.rx_antennas
    n_p, n_d = config.pilot_count, config.data_count
    rho = config.snr

    pilots = make_pilot_matrix(m_t, n_p, rho)
    h = sample_fading(m_r, m_t, rng)
    zp = rng.standard_normal((2, m_r, n_p))
    received_pilots = h @ pilots + np.sqrt(0.5) * (zp[0] + 1j * zp[1])
    h_hat = ml_estimate(received_pilots, pilots, rho, n_p, m_t)

    data = sample_qpsk_data(m_t, n_d, rho, rng)
    zd = rng.standard_normal((2, m_r, n_d))
    received_data = h @ data + np.sqrt(0.5) * (zd[0] + 1j * zd[1])
    return CoherenceBlockSample(h, h_hat, data, received_data)
