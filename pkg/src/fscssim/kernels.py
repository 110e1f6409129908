"""Batched detection kernels: numba-jitted hot paths with numpy fallbacks.

The Monte-Carlo engine spends nearly all of its time here (exhaustive
codebook scans, greedy index recursion, subset ranking). Each public
function has two implementations selected by the active backend:

* ``numba`` (default when importable): per-trial loops compiled with
  ``@njit(cache=True, nogil=True)``.
* ``numpy``: vectorized/looped pure-numpy equivalents.

Select at import time with ``FSCSSIM_BACKEND=numpy`` (or ``numba``), or at
runtime with :func:`use_backend`. ``bench/compare_backends.py`` times both.

Decisions are identical across backends up to floating-point ties of
mathematically distinct metrics (never observed in the test corpus); exact
ties break toward the smallest index/message in both.

Configurations whose binomials or p-codes overflow int64 (roughly
M**K >= 2**62) are transparently routed to exact-integer Python paths.
"""

from __future__ import annotations

import math
import os

import numpy as np

from . import codebook as cb
from .params import ModemParams

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

_ENV_FLAG = "FSCSSIM_BACKEND"
_BACKEND = os.environ.get(_ENV_FLAG, "numba" if _HAVE_NUMBA else "numpy")
if _BACKEND not in ("numba", "numpy"):
    raise ValueError(f"{_ENV_FLAG} must be 'numba' or 'numpy', got {_BACKEND!r}")
if _BACKEND == "numba" and not _HAVE_NUMBA:
    _BACKEND = "numpy"


def active_backend() -> str:
    return _BACKEND


def use_backend(name: str) -> str:
    """Switch kernel backend at runtime; returns the previous one."""
    global _BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"backend must be 'numba' or 'numpy', got {name!r}")
    if name == "numba" and not _HAVE_NUMBA:
        raise RuntimeError("numba is not available in this environment")
    prev, _BACKEND = _BACKEND, name
    return prev


def fits_int64(params: ModemParams) -> bool:
    """True when subset ranks and p-codes stay below 2**62 for (M, K)."""
    return math.comb(params.M, params.K) < (1 << 62) and params.M ** params.K < (1 << 62)


def comb_table(M: int, K: int) -> np.ndarray:
    """(M+1, K+1) table of C(n, k) in int64; requires fits_int64."""
    t = np.zeros((M + 1, K + 1), dtype=np.int64)
    for n in range(M + 1):
        for k in range(min(n, K) + 1):
            t[n, k] = math.comb(n, k)
    return t


# ----------------------------------------------------------------------
# numba implementations
# ----------------------------------------------------------------------

if _HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _nb_ml_noncoh(Y, cw):
        B = Y.shape[0]
        ncw, K = cw.shape
        out = np.empty(B, np.int64)
        for b in range(B):
            best = -1.0
            bi = 0
            for j in range(ncw):
                acc = 0.0 + 0.0j
                for k in range(K):
                    acc += Y[b, cw[j, k]]
                v = acc.real * acc.real + acc.imag * acc.imag
                if v > best:
                    best = v
                    bi = j
            out[b] = bi
        return out

    @njit(cache=True, nogil=True)
    def _nb_ml_coh(Y, h, cw):
        B = Y.shape[0]
        ncw, K = cw.shape
        out = np.empty(B, np.int64)
        for b in range(B):
            hc = h[b].conjugate()
            best = -1.0e300
            bi = 0
            for j in range(ncw):
                acc = 0.0 + 0.0j
                for k in range(K):
                    acc += Y[b, cw[j, k]]
                v = (hc * acc).real
                if v > best:
                    best = v
                    bi = j
            out[b] = bi
        return out

    @njit(cache=True, nogil=True)
    def _nb_greedy(Y, k):
        B, M = Y.shape
        out = np.empty((B, k), np.int64)
        for b in range(B):
            used = np.zeros(M, np.bool_)
            acc = 0.0 + 0.0j
            for step in range(k):
                best = -1.0
                bi = 0
                for l in range(M):
                    if used[l]:
                        continue
                    c = Y[b, l] + acc
                    v = c.real * c.real + c.imag * c.imag
                    if v > best:
                        best = v
                        bi = l
                out[b, step] = bi
                used[bi] = True
                acc += Y[b, bi]
        return out

    @njit(cache=True, nogil=True)
    def _nb_rank_one(iset, comb):
        M = comb.shape[0] - 1
        K = iset.shape[0]
        r = np.int64(0)
        prev = np.int64(-1)
        for i in range(K):
            r += comb[M - prev - 1, K - i] - comb[M - iset[i], K - i]
            prev = iset[i]
        return r

    @njit(cache=True, nogil=True)
    def _nb_rank_sets(isets, comb):
        B = isets.shape[0]
        out = np.empty(B, np.int64)
        for b in range(B):
            out[b] = _nb_rank_one(isets[b], comb)
        return out

    @njit(cache=True, nogil=True)
    def _nb_unrank(ms, M, K, comb):
        B = ms.shape[0]
        out = np.empty((B, K), np.int64)
        for b in range(B):
            r = ms[b]
            x = np.int64(0)
            for i in range(K):
                c = comb[M - 1 - x, K - 1 - i]
                while r >= c:
                    r -= c
                    x += 1
                    c = comb[M - 1 - x, K - 1 - i]
                out[b, i] = x
                x += 1
        return out

    @njit(cache=True, nogil=True)
    def _nb_final_bound(prefix, last_code, M):
        K = last_code.shape[0]
        d = 0
        while True:
            k_rem = K - d
            if k_rem == 1:
                return last_code[d]
            if prefix[d] < last_code[d]:
                return np.int64(M - 1)
            if prefix[d] > last_code[d]:
                p0 = np.int64(0)
                for j in range(d, K):
                    p0 = p0 * M + last_code[j]
                ps = np.int64(0)
                for j in range(d, K - 1):
                    ps = ps * M + prefix[j]
                den = np.int64(1)
                for _ in range(k_rem - 1):
                    den *= M
                z = (p0 - ps) // den
                return z
            d += 1

    @njit(cache=True, nogil=True)
    def _nb_subopt_reduced(Y, K, last_code, comb, n_messages):
        B, M = Y.shape
        mh = np.empty(B, np.int64)
        fb = np.zeros(B, np.bool_)
        for b in range(B):
            used = np.zeros(M, np.bool_)
            chosen = np.empty(K, np.int64)
            acc = 0.0 + 0.0j
            for step in range(K - 1):
                best = -1.0
                bi = 0
                for l in range(M):
                    if used[l]:
                        continue
                    c = Y[b, l] + acc
                    v = c.real * c.real + c.imag * c.imag
                    if v > best:
                        best = v
                        bi = l
                chosen[step] = bi
                used[bi] = True
                acc += Y[b, bi]
            prefix = np.sort(chosen[:K - 1])
            z = _nb_final_bound(prefix, last_code, M)
            best = -1.0
            bi = -1
            top = min(M - 1, z)
            for l in range(top + 1):
                if used[l]:
                    continue
                c = Y[b, l] + acc
                v = c.real * c.real + c.imag * c.imag
                if v > best:
                    best = v
                    bi = l
            if bi < 0:
                mh[b] = n_messages - 1
                fb[b] = True
                continue
            chosen[K - 1] = bi
            mh[b] = _nb_rank_one(np.sort(chosen), comb)
        return mh, fb

    @njit(cache=True, nogil=True)
    def _nb_kmax(Y, K, comb, n_messages):
        B, M = Y.shape
        mh = np.empty(B, np.int64)
        fb = np.zeros(B, np.bool_)
        for b in range(B):
            used = np.zeros(M, np.bool_)
            iset = np.empty(K, np.int64)
            for k in range(K):
                best = -1.0
                bi = 0
                for l in range(M):
                    if used[l]:
                        continue
                    c = Y[b, l]
                    v = c.real * c.real + c.imag * c.imag
                    if v > best:
                        best = v
                        bi = l
                iset[k] = bi
                used[bi] = True
            r = _nb_rank_one(np.sort(iset), comb)
            if r >= n_messages:
                mh[b] = n_messages - 1
                fb[b] = True
            else:
                mh[b] = r
        return mh, fb


# ----------------------------------------------------------------------
# numpy implementations
# ----------------------------------------------------------------------

_ML_ROWS = 128  # sub-batch rows for the score matrix (memory cap)


def _np_codeword_scores(Y, cw):
    acc = Y[:, cw[:, 0]].copy()
    for k in range(1, cw.shape[1]):
        acc += Y[:, cw[:, k]]
    return acc


def _np_ml_noncoh(Y, cw):
    out = np.empty(Y.shape[0], np.int64)
    for lo in range(0, Y.shape[0], _ML_ROWS):
        s = _np_codeword_scores(Y[lo:lo + _ML_ROWS], cw)
        out[lo:lo + _ML_ROWS] = np.argmax(s.real**2 + s.imag**2, axis=1)
    return out


def _np_ml_coh(Y, h, cw):
    out = np.empty(Y.shape[0], np.int64)
    for lo in range(0, Y.shape[0], _ML_ROWS):
        s = _np_codeword_scores(Y[lo:lo + _ML_ROWS], cw)
        out[lo:lo + _ML_ROWS] = np.argmax((np.conj(h[lo:lo + _ML_ROWS])[:, None] * s).real, axis=1)
    return out


def _np_rank_sets(isets, comb):
    M = comb.shape[0] - 1
    B, K = isets.shape
    prev = np.concatenate([np.full((B, 1), -1, np.int64), isets[:, :-1]], axis=1)
    r = np.zeros(B, np.int64)
    for i in range(K):
        r += comb[M - prev[:, i] - 1, K - i] - comb[M - isets[:, i], K - i]
    return r


def _np_unrank(ms, params):
    return np.array([cb.unrank(params, int(m)) for m in ms], np.int64).reshape(len(ms), params.K)


def _np_subopt_reduced(Y, K, last_code, comb, n_messages):
    B, M = Y.shape
    pre = _np_greedy_masked(Y, K - 1) if K > 1 else np.empty((B, 0), np.int64)
    mh = np.empty(B, np.int64)
    fb = np.zeros(B, np.bool_)
    lc = [int(v) for v in last_code]
    Mi = int(M)
    for b in range(B):
        prefix = sorted(int(v) for v in pre[b])
        z = cb.final_index_bound(Mi, prefix, lc)
        acc = Y[b, pre[b]].sum() if K > 1 else 0.0 + 0.0j
        c = Y[b] + acc
        v = c.real**2 + c.imag**2
        v[pre[b]] = -np.inf
        if z < M - 1:
            v[max(z + 1, 0):] = -np.inf
        l = int(np.argmax(v))
        if np.isneginf(v[l]):
            mh[b] = n_messages - 1
            fb[b] = True
            continue
        iset = np.sort(np.append(pre[b], l))
        mh[b] = _np_rank_sets(iset[None, :], comb)[0]
    return mh, fb


def _np_greedy_masked(Y, k):
    """Greedy recursion vectorized across the batch; masks via -inf scores."""
    B, M = Y.shape
    out = np.empty((B, k), np.int64)
    acc = np.zeros(B, Y.dtype)
    mask = np.zeros((B, M), bool)
    rows = np.arange(B)
    for step in range(k):
        c = Y + acc[:, None]
        v = c.real**2 + c.imag**2
        v[mask] = -np.inf
        idx = np.argmax(v, axis=1)
        out[:, step] = idx
        mask[rows, idx] = True
        acc += Y[rows, idx]
    return out


def _np_kmax(Y, K, comb, n_messages):
    mag = Y.real**2 + Y.imag**2
    top = np.argsort(-mag, axis=1, kind="stable")[:, :K]
    isets = np.sort(top, axis=1).astype(np.int64)
    r = _np_rank_sets(isets, comb)
    fb = r >= n_messages
    mh = np.where(fb, n_messages - 1, r)
    return mh, fb


# ----------------------------------------------------------------------
# public dispatchers
# ----------------------------------------------------------------------


def ml_noncoherent_batch(Y: np.ndarray, cw: np.ndarray) -> np.ndarray:
    """Per-row argmax_m |sum_{l in cw[m]} Y[:, l]|^2 (ties: smallest m)."""
    if _BACKEND == "numba":
        return _nb_ml_noncoh(np.ascontiguousarray(Y), np.ascontiguousarray(cw))
    return _np_ml_noncoh(Y, cw)


def ml_coherent_batch(Y: np.ndarray, h: np.ndarray, cw: np.ndarray) -> np.ndarray:
    """Per-row argmax_m Re{h* sum_{l in cw[m]} Y[:, l]} (ties: smallest m)."""
    if _BACKEND == "numba":
        return _nb_ml_coh(np.ascontiguousarray(Y), np.ascontiguousarray(h),
                          np.ascontiguousarray(cw))
    return _np_ml_coh(Y, h, cw)


def greedy_complete_batch(Y: np.ndarray, k: int) -> np.ndarray:
    """Greedy index recursion per row; (B, k) sets sorted ascending."""
    if _BACKEND == "numba":
        raw = _nb_greedy(np.ascontiguousarray(Y), k)
    else:
        raw = _np_greedy_masked(Y, k)
    return np.sort(raw, axis=1)


def subopt_complete_batch(Y: np.ndarray, book: cb.Codebook) -> tuple:
    """Greedy full-codebook detection mapped to messages.

    Out-of-codebook sets map to the largest valid message and raise the
    fallback flag, mirroring the K-max policy.
    """
    params = book.params
    isets = greedy_complete_batch(Y, params.K)
    if fits_int64(params):
        r = _np_rank_sets(isets, _tables(params)[0])
    else:
        r = np.array([cb.lex_rank(params, tuple(int(v) for v in s)) for s in isets])
    fb = r >= book.n_messages
    mh = np.where(fb, book.n_messages - 1, r)
    return mh.astype(np.int64), fb


def subopt_reduced_batch(Y: np.ndarray, book: cb.Codebook) -> tuple:
    """Greedy reduced-codebook detection; (m_hat, fallback) per row."""
    params = book.params
    if not fits_int64(params):
        return _scalar_reduced(Y, book)
    comb = _tables(params)[0]
    lc = np.asarray(book.last_code, np.int64)
    if _BACKEND == "numba":
        return _nb_subopt_reduced(np.ascontiguousarray(Y), params.K, lc, comb,
                                  book.n_messages)
    return _np_subopt_reduced(Y, params.K, lc, comb, book.n_messages)


def kmax_batch(Y: np.ndarray, book: cb.Codebook) -> tuple:
    """K largest-magnitude bins mapped to messages; (m_hat, fallback) per row."""
    params = book.params
    if not fits_int64(params):
        from .detect import detect_kmax

        res = [detect_kmax(book, y) for y in Y]
        return (np.array([r.m for r in res], np.int64),
                np.array([r.fallback for r in res], bool))
    comb = _tables(params)[0]
    if _BACKEND == "numba":
        return _nb_kmax(np.ascontiguousarray(Y), params.K, comb, book.n_messages)
    return _np_kmax(Y, params.K, comb, book.n_messages)


def unrank_batch(ms: np.ndarray, params: ModemParams) -> np.ndarray:
    """Vectorized lexicographic unranking; (B, K) int64."""
    ms = np.asarray(ms, np.int64)
    if not fits_int64(params):
        return _np_unrank(ms, params)
    comb = _tables(params)[0]
    if _BACKEND == "numba":
        return _nb_unrank(ms, params.M, params.K, comb)
    return _np_unrank(ms, params)


def rank_batch(isets: np.ndarray, params: ModemParams) -> np.ndarray:
    """Vectorized lexicographic ranking of ascending (B, K) sets."""
    isets = np.asarray(isets, np.int64)
    if not fits_int64(params):
        return np.array([cb.lex_rank(params, tuple(int(v) for v in s)) for s in isets],
                        dtype=object)
    comb = _tables(params)[0]
    if _BACKEND == "numba":
        return _nb_rank_sets(np.ascontiguousarray(isets), comb)
    return _np_rank_sets(isets, comb)


def bit_error_counts(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamming distances of paired messages (both < 2**62)."""
    x = np.bitwise_xor(np.asarray(a, np.int64), np.asarray(b, np.int64))
    return np.bitwise_count(x.astype(np.uint64)).astype(np.int64)


def _scalar_reduced(Y, book):
    from .detect import detect_subopt_reduced

    res = [detect_subopt_reduced(book, y) for y in Y]
    return (np.array([r.m for r in res], np.int64),
            np.array([r.fallback for r in res], bool))


_TABLE_CACHE: dict = {}


def _tables(params: ModemParams) -> tuple:
    key = (params.M, params.K)
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = (comb_table(params.M, params.K),)
    return _TABLE_CACHE[key]
