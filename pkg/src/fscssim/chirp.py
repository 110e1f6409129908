"""Chirp waveform synthesis and the dechirp + DFT receiver front-end.

All waveforms are length-M complex128 vectors at the critical sample rate.
The basic up chirp is exp(j*pi*n^2/M); shifted chirps are generated through
the closed-form product identity, so no periodic-extension convention is
needed (the two agree for even M; for odd M the closed form is the one that
keeps the chirp set orthogonal).
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .params import ModemParams, check_index_set


@lru_cache(maxsize=64)
def _basic_chirp(M: int) -> np.ndarray:
    n = np.arange(M)
    # reduce n^2 mod 2M in exact integers: exp(j*pi*q/M) has period 2M in q
    x = np.exp(1j * np.pi * ((n * n) % (2 * M)) / M)
    x.flags.writeable = False
    return x


def basic_chirp(params: ModemParams) -> np.ndarray:
    """The basic up chirp x0[n] = exp(j*pi*n^2/M). Returns a shared read-only array."""
    return _basic_chirp(params.M)


def shifted_chirp(params: ModemParams, m: int) -> np.ndarray:
    """The m-th orthogonal chirp, x0 cyclically advanced by m samples.

    Evaluated as x0[m]*x0[n]*exp(j*2*pi*m*n/M), i.e. the phase polynomial
    (n^2 + m^2 + 2mn)/M reduced mod 2 exactly in integer arithmetic.
    """
    M = params.M
    if not 0 <= m < M:
        raise ValueError(f"chirp index m must lie in [0, {M}), got {m}")
    n = np.arange(M)
    ph = (n * n + m * m + 2 * m * n) % (2 * M)
    return np.exp(1j * np.pi * ph / M)


def modulate(params: ModemParams, iset) -> np.ndarray:
    """Superpose the chirps of an index set, normalized to symbol energy M.

    s[n] = (1/sqrt(K)) * sum_{l in iset} x_l[n]
    """
    iset = check_index_set(params, iset)
    M = params.M
    n = np.arange(M)
    l = np.asarray(iset, dtype=np.int64)[:, None]
    ph = (n * n + l * l + 2 * l * n) % (2 * M)
    return np.exp(1j * np.pi * ph / M).sum(axis=0) / math.sqrt(len(iset))


def dechirp_spectrum(params: ModemParams, y: np.ndarray) -> np.ndarray:
    """Multiply by the conjugate basic chirp and take the unnormalized DFT.

    R[l] = sum_n y[n] x0*[n] exp(-j*2*pi*l*n/M); no 1/M or 1/sqrt(M) factor.
    """
    y = np.asarray(y)
    if y.shape[-1] != params.M:
        raise ValueError(f"expected length-{params.M} input, got {y.shape[-1]}")
    return np.fft.fft(y * np.conj(_basic_chirp(params.M)))


def weighted_bins(params: ModemParams, R: np.ndarray) -> np.ndarray:
    """Phase-align the DFT bins: Y[l] = x0*[l] R[l]. |Y| == |R| bin by bin."""
    R = np.asarray(R)
    if R.shape[-1] != params.M:
        raise ValueError(f"expected length-{params.M} input, got {R.shape[-1]}")
    return np.conj(_basic_chirp(params.M)) * R
