"""Additive white Gaussian noise channel with an SNR-parameterized variance.

SNR is defined per real dimension against the transmit power constraint:
``sigma^2 = power * 10**(-snr_db / 10)``. A ``snr_db`` of ``+inf`` is the
noiseless sentinel; it returns the input unchanged, bit for bit.
"""

import dataclasses
import math

import numpy as np

from ._rng import NOISE_KIND, philox, standard_normal, stream_id

NOISELESS = math.inf


@dataclasses.dataclass(frozen=True)
class ChannelConfig:
    """Channel parameters; the seed pins the noise stream by value."""

    snr_db: float
    power: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "snr_db", float(self.snr_db))
        object.__setattr__(self, "power", float(self.power))
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ValueError(f"snr_db must be finite or +inf, got {self.snr_db}")
        if not self.power > 0:
            raise ValueError(f"power must be positive, got {self.power}")
        if not 0 <= int(self.seed) < (1 << 64):
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")


def snr_to_noise_variance(snr_db: float, power: float = 1.0) -> float:
    """Per-real-dimension noise variance for the given SNR in dB."""
    if not power > 0:
        raise ValueError(f"power must be positive, got {power}")
    if math.isnan(snr_db):
        raise ValueError("snr_db must not be NaN")
    return power * 10.0 ** (-snr_db / 10.0)


def awgn_transmit(block, config: ChannelConfig, stream: int = 0) -> np.ndarray:
    """Add white Gaussian noise to a block of real symbols.

    The noise is drawn from the (config.seed, stream) substream, so repeated
    calls with the same arguments return identical outputs; distinct stream
    indices give independent noise (used per training iteration).
    """
    x = np.asarray(block, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("block must be 1-D")
    if x.size == 0:
        raise ValueError("block must not be empty")
    if math.isinf(config.snr_db):
        return x.copy()
    sigma = math.sqrt(snr_to_noise_variance(config.snr_db, config.power))
    gen = philox(config.seed, stream_id(NOISE_KIND, stream))
    return x + sigma * standard_normal(gen, x.size)
