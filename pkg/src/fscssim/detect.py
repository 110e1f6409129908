"""Symbol detectors operating on the phase-aligned DFT bins Y = weighted_bins(R).

Five rules are provided:

* coherent ML           - exhaustive search, needs the channel gain h
* non-coherent ML       - exhaustive search, gain-free (Rayleigh-marginalized
                          likelihood; with equal-cardinality index sets the
                          1/K factor drops out of the argmax)
* greedy, full codebook - recursive index estimation over all C(M,K) sets
* greedy, reduced       - same recursion, final index clipped so the result
                          always lands inside the 2**lam codebook
* K-max baseline        - the K largest bin magnitudes

All ties break toward the smallest index / smallest message so runs are
reproducible. The greedy comparisons use |.| exactly as the recursion is
defined; squaring is monotone so |.|^2 selects identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .codebook import Codebook, final_index_bound, rank, unrank
from .params import ModemParams


class DetectorKind(str, Enum):
    COHERENT_ML = "coherent-ml"
    NONCOHERENT_ML = "noncoherent-ml"
    SUBOPT_REDUCED = "subopt"
    SUBOPT_COMPLETE = "subopt-complete"
    KMAX = "kmax"

    def __str__(self):
        return self.value


#: Detectors that need the channel gain as side information.
NEEDS_CSI = frozenset({DetectorKind.COHERENT_ML})

#: Detectors that enumerate the whole codebook (subject to the table limit).
EXHAUSTIVE = frozenset({DetectorKind.COHERENT_ML, DetectorKind.NONCOHERENT_ML})


@dataclass(frozen=True)
class DetectionResult:
    """Estimated index set, message, and the winning decision metric.

    `fallback` marks the out-of-codebook/empty-feasible-range escape where
    the message is forced to 2**lam - 1; for that case `iset` still reports
    the measured index set.
    """

    iset: tuple
    m: int
    metric: float
    fallback: bool = False


def _codeword_sums(codebook: Codebook, Y: np.ndarray) -> np.ndarray:
    cw = codebook.codeword_table()
    return Y[cw].sum(axis=1)


def detect_coherent_ml(codebook: Codebook, Y: np.ndarray, h: complex) -> DetectionResult:
    """argmax_m Re{ h*/sqrt(K) * sum_{l in I_m} Y[l] } over the codebook."""
    s = _codeword_sums(codebook, Y)
    metric = (np.conj(h) * s).real / math.sqrt(codebook.params.K)
    m = int(np.argmax(metric))
    return DetectionResult(tuple(codebook.codeword_table()[m]), m, float(metric[m]))


def detect_noncoherent_ml(codebook: Codebook, Y: np.ndarray) -> DetectionResult:
    """argmax_m |sum_{l in I_m} Y[l]|^2 over the codebook."""
    s = _codeword_sums(codebook, Y)
    metric = s.real**2 + s.imag**2
    m = int(np.argmax(metric))
    return DetectionResult(tuple(codebook.codeword_table()[m]), m, float(metric[m]))


def _greedy_pick(Y: np.ndarray, acc: complex, avail: np.ndarray) -> int:
    scores = np.abs(Y + acc)
    scores[~avail] = -np.inf
    return int(np.argmax(scores))


def detect_subopt_complete(params: ModemParams, Y: np.ndarray, k: int | None = None) -> tuple:
    """Greedy recursion over all chirps: first index maximizes |Y[l]|, each
    later one maximizes |Y[l] + sum of already-chosen bins|. Returns the
    ascending index set, which may fall outside the reduced codebook."""
    k = params.K if k is None else k
    avail = np.ones(params.M, dtype=bool)
    acc = 0.0 + 0.0j
    chosen = []
    for _ in range(k):
        l = _greedy_pick(Y, acc, avail)
        chosen.append(l)
        avail[l] = False
        acc += Y[l]
    return tuple(sorted(chosen))


def detect_subopt_reduced(codebook: Codebook, Y: np.ndarray) -> DetectionResult:
    """Greedy recursion with the final index range-limited so the decoded
    message is always valid (m < 2**lam)."""
    params = codebook.params
    M, K = params.M, params.K
    avail = np.ones(M, dtype=bool)
    acc = 0.0 + 0.0j
    chosen = []
    for _ in range(K - 1):
        l = _greedy_pick(Y, acc, avail)
        chosen.append(l)
        avail[l] = False
        acc += Y[l]
    prefix = tuple(sorted(chosen))
    z = final_index_bound(M, prefix, codebook.last_code)

    scores = np.abs(Y + acc)
    scores[~avail] = -np.inf
    if z < M - 1:
        scores[max(z + 1, 0):] = -np.inf
    if np.isneginf(scores).all():
        # no admissible final index: emit the largest valid message
        m = codebook.n_messages - 1
        iset = codebook.last_code
        return DetectionResult(iset, m, float(np.abs(acc)), fallback=True)
    l = int(np.argmax(scores))
    iset = tuple(sorted(prefix + (l,)))
    m = rank(params, iset)
    return DetectionResult(iset, m, float(scores[l]))


def detect_kmax(codebook: Codebook, Y: np.ndarray) -> DetectionResult:
    """Baseline: take the K largest |Y[l]|. Out-of-codebook sets map to the
    largest valid message (counted as a fallback)."""
    params = codebook.params
    mag = np.abs(Y)
    top = np.argsort(-mag, kind="stable")[:params.K]
    iset = tuple(sorted(int(l) for l in top))
    metric = float(mag[top].sum())
    m = rank(params, iset)
    if m is None:
        return DetectionResult(iset, codebook.n_messages - 1, metric, fallback=True)
    return DetectionResult(iset, m, metric)


def detect(kind: DetectorKind, codebook: Codebook, Y: np.ndarray,
           h: complex | None = None) -> DetectionResult:
    """Dispatch a single detection; `h` only matters for coherent ML."""
    kind = DetectorKind(kind)
    if kind is DetectorKind.COHERENT_ML:
        if h is None:
            raise ValueError("coherent ML needs the channel gain h")
        return detect_coherent_ml(codebook, Y, h)
    if kind is DetectorKind.NONCOHERENT_ML:
        return detect_noncoherent_ml(codebook, Y)
    if kind is DetectorKind.SUBOPT_REDUCED:
        return detect_subopt_reduced(codebook, Y)
    if kind is DetectorKind.SUBOPT_COMPLETE:
        iset = detect_subopt_complete(codebook.params, Y)
        m = rank(codebook.params, iset)
        metric = float(np.abs(Y[list(iset)].sum()))
        if m is None:
            return DetectionResult(iset, codebook.n_messages - 1, metric, fallback=True)
        return DetectionResult(iset, m, metric)
    if kind is DetectorKind.KMAX:
        return detect_kmax(codebook, Y)
    raise ValueError(f"unknown detector kind {kind!r}")


def errors_between(m_true: int, m_hat: int, lam: int) -> tuple:
    """(symbol_error, bit_errors): 0/1 symbol flag and the Hamming distance
    of the lam-bit expansions."""
    if not (0 <= m_true < (1 << lam) and 0 <= m_hat < (1 << lam)):
        raise ValueError("messages must lie in [0, 2^lam)")
    diff = m_true ^ m_hat
    return (1 if diff else 0), diff.bit_count()
