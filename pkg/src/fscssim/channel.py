"""Flat channel models and SNR bookkeeping.

Normalization: E[|h|^2] = 1 for both channel kinds (AWGN has h = 1 exactly,
Rayleigh draws unit-mean-square complex Gaussians), so the average channel
SNR is gamma_bar = 1/N0 and Es/N0 = M * gamma_bar. Any (N0, gamma_bar) pair
with a different gain scale is an equivalent rescaled simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .params import ModemParams

AWGN = "awgn"
RAYLEIGH = "rayleigh"

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ChannelSpec:
    """Channel kind plus noise variance N0 per complex sample (0 = noiseless)."""

    kind: str
    n0: float

    def __post_init__(self):
        if self.kind not in (AWGN, RAYLEIGH):
            raise ValueError(f"channel kind must be '{AWGN}' or '{RAYLEIGH}', got {self.kind!r}")
        if not self.n0 >= 0.0:
            raise ValueError(f"N0 must be non-negative, got {self.n0}")

    @property
    def gamma_bar(self) -> float:
        """Average channel SNR E[|h|^2]/N0 = 1/N0."""
        return math.inf if self.n0 == 0.0 else 1.0 / self.n0

    @classmethod
    def from_gamma_bar(cls, kind: str, gamma_bar: float) -> "ChannelSpec":
        if not gamma_bar > 0.0:
            raise ValueError(f"gamma_bar must be positive, got {gamma_bar}")
        return cls(kind, 0.0 if math.isinf(gamma_bar) else 1.0 / gamma_bar)


class ChannelRealization(NamedTuple):
    """Flat complex gain for one symbol."""

    h: complex


def snr_conversions(params: ModemParams, spec: ChannelSpec) -> dict:
    """Es/N0 = M*gamma_bar and Eb/N0 = Es/N0 / lam, linear and in dB."""
    es_n0 = params.M * spec.gamma_bar
    eb_n0 = es_n0 / params.lam
    return {
        "es_n0": es_n0,
        "eb_n0": eb_n0,
        "es_n0_db": 10.0 * math.log10(es_n0),
        "eb_n0_db": 10.0 * math.log10(eb_n0),
    }


def gamma_bar_for(params: ModemParams, snr_axis: str, snr_db: float) -> float:
    """Channel SNR for a grid point on either supported axis."""
    lin = 10.0 ** (snr_db / 10.0) if not math.isinf(snr_db) else math.inf
    if snr_axis == "ebn0":
        return params.lam * lin / params.M
    if snr_axis == "channel":
        return lin
    raise ValueError(f"snr_axis must be 'ebn0' or 'channel', got {snr_axis!r}")


def trial_stream(seed: int, *key: int) -> np.random.Generator:
    """Independent deterministic stream for one (seed, key...) tuple.

    Streams for distinct keys are statistically independent, so trials are
    order-independent and may run on any worker.
    """
    entropy = [seed & _MASK64] + [int(k) & _MASK64 for k in key]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def snr_stream_key(snr_db: float) -> int:
    """Stable integer key for an SNR point (the float's bit pattern)."""
    return int(np.float64(snr_db).view(np.uint64))


def draw_channel(spec: ChannelSpec, rng: np.random.Generator) -> ChannelRealization:
    """One flat gain: h = 1 for AWGN, circularly-symmetric unit-power Gaussian
    for Rayleigh (per-component variance 1/2)."""
    if spec.kind == AWGN:
        return ChannelRealization(1.0 + 0.0j)
    re, im = rng.standard_normal(2)
    return ChannelRealization(complex(re, im) * math.sqrt(0.5))


def transmit(s: np.ndarray, real: ChannelRealization, n0: float,
             rng: np.random.Generator) -> np.ndarray:
    """y[n] = h s[n] + w[n], w complex white Gaussian with variance n0.

    n0 = 0 returns h*s exactly without consuming the stream.
    """
    s = np.asarray(s)
    if n0 == 0.0:
        return real.h * s
    scale = math.sqrt(n0 / 2.0)
    w = (rng.standard_normal(s.shape[-1]) + 1j * rng.standard_normal(s.shape[-1])) * scale
    return real.h * s + w
