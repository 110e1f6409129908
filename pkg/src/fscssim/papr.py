"""Peak-to-average power ratio of the discrete baseband symbols.

Average symbol power is 1 by the energy identity (sum |s[n]|^2 = M), so the
PAPR is simply the peak sample power. It is bounded by K: the K=1 waveforms
are constant-envelope (PAPR = 1), and superposing K unit chirps can raise
the peak amplitude to at most sqrt(K) after the 1/sqrt(K) scaling.

Measured on the critically sampled signal exactly as defined; there is no
oversampled continuous-time peak search here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chirp import modulate
from .codebook import Codebook, unrank
from .params import ModemParams, check_index_set


def papr_of(params: ModemParams, iset) -> float:
    """Peak sample power max_n |s[n]|^2 of one codeword; in [1, K]."""
    iset = check_index_set(params, iset)
    s = modulate(params, iset)
    return float(np.max(s.real**2 + s.imag**2))


@dataclass
class PaprReport:
    """Per-codeword PAPR statistics for one codebook (linear scale)."""

    params: ModemParams
    bound: float                      # = K
    max_papr: float
    quantiles: dict                   # {50: ..., 90: ..., 99: ...}
    exhaustive: bool
    sample_size: int
    per_codeword: dict = field(repr=False)   # message -> papr for the evaluated set

    @property
    def max_papr_db(self) -> float:
        return 10.0 * math.log10(self.max_papr)


def papr_sweep(params: ModemParams, book: Codebook, sample_size: int,
               seed: int = 0) -> PaprReport:
    """Evaluate every codeword when the codebook is small enough, otherwise a
    seeded random message sample; reports the max and 50/90/99% quantiles."""
    if sample_size < 1:
        raise ValueError("sample_size must be positive")
    n = book.n_messages
    if sample_size > n:
        raise ValueError(f"sample_size {sample_size} exceeds codebook size {n}")
    exhaustive = n <= sample_size
    if exhaustive:
        messages = range(n)
        sample_size = n
    else:
        rng = np.random.default_rng(seed)
        messages = (int(m) for m in rng.integers(0, n, size=sample_size))
    per = {m: papr_of(params, unrank(params, m)) for m in messages}
    vals = np.fromiter(per.values(), dtype=float)
    q = np.percentile(vals, [50, 90, 99])
    return PaprReport(
        params=params,
        bound=float(params.K),
        max_papr=float(vals.max()),
        quantiles={50: float(q[0]), 90: float(q[1]), 99: float(q[2])},
        exhaustive=exhaustive,
        sample_size=int(sample_size),
        per_codeword=per,
    )
