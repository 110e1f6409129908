"""System configuration shared by the modem, detectors and simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass


class ConfigurationError(ValueError):
    """Invalid system or simulation configuration (CLI exit code 2)."""


def bits_per_symbol(M: int, K: int) -> int:
    """Bits carried by one symbol: floor(log2 C(M, K)).

    Exact integer arithmetic (binomial + bit length); no floating-point log.
    """
    if M < 2:
        raise ConfigurationError(f"M must be >= 2, got {M}")
    if not (1 <= K and 2 * K <= M):
        raise ConfigurationError(f"K must satisfy 1 <= K <= M/2, got K={K}, M={M}")
    return math.comb(M, K).bit_length() - 1


@dataclass(frozen=True)
class ModemParams:
    """M orthogonal chirps per symbol (also the sample count), K active chirps.

    K=1 is the conventional single-chirp system; K>1 adds index modulation.
    """

    M: int
    K: int

    def __post_init__(self):
        bits_per_symbol(self.M, self.K)  # validates M, K

    @property
    def lam(self) -> int:
        """Bits per symbol."""
        return bits_per_symbol(self.M, self.K)

    @property
    def n_messages(self) -> int:
        """Size of the reduced codebook, 2**lam."""
        return 1 << self.lam


def check_index_set(params: ModemParams, iset) -> tuple:
    """Validate a chirp index set: strictly ascending ints in [0, M)."""
    iset = tuple(int(v) for v in iset)
    if len(iset) != params.K:
        raise ValueError(f"index set must have K={params.K} elements, got {len(iset)}")
    for a, b in zip(iset, iset[1:]):
        if a >= b:
            raise ValueError(f"index set must be strictly ascending, got {iset}")
    if iset and (iset[0] < 0 or iset[-1] >= params.M):
        raise ValueError(f"indices must lie in [0, {params.M}), got {iset}")
    return iset
