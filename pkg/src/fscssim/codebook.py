"""Message <-> chirp index set mapping.

The codebook is the first 2**lam K-subsets of {0..M-1} in ascending
lexicographic order. Ranking/unranking is combinatorial (no stored tables),
exact for any M, K thanks to Python integers. The base-M p-codes preserve
the lexicographic order and drive the reduced-codebook detector's final
index bound.
"""

from __future__ import annotations

import math

import numpy as np

from .params import ConfigurationError, ModemParams, check_index_set

# Guard for exhaustive-search detectors: enumerating more codewords than this
# is rejected as a configuration error (desk-scale memory/time).
DEFAULT_TABLE_LIMIT = 1 << 22


def bits_to_message(bits) -> int:
    """Pack a bit sequence into a message, bit i weighted 2**i (LSB first)."""
    m = 0
    for i, b in enumerate(bits):
        if b not in (0, 1):
            raise ValueError(f"bits must be 0 or 1, got {b!r}")
        m |= int(b) << i
    return m


def message_to_bits(m: int, lam: int) -> list:
    """Unpack a message into lam bits, LSB first."""
    if not 0 <= m < (1 << lam):
        raise ValueError(f"message must lie in [0, 2^{lam}), got {m}")
    return [(m >> i) & 1 for i in range(lam)]


def lex_rank(params: ModemParams, iset) -> int:
    """Position of an index set in ascending lexicographic order of all C(M,K) subsets."""
    iset = check_index_set(params, iset)
    M, K = params.M, params.K
    r = 0
    prev = -1
    for i, c in enumerate(iset):
        # subsets whose element i lies in (prev, c): hockey-stick telescoped
        r += math.comb(M - prev - 1, K - i) - math.comb(M - c, K - i)
        prev = c
    return r


def rank(params: ModemParams, iset):
    """Message for an index set, or None when the set is outside the codebook."""
    r = lex_rank(params, iset)
    return r if r < params.n_messages else None


def unrank(params: ModemParams, m: int) -> tuple:
    """The (m+1)-th index set in ascending lexicographic order."""
    M, K = params.M, params.K
    if not 0 <= m < math.comb(M, K):
        raise ValueError(f"rank must lie in [0, C({M},{K})), got {m}")
    out = []
    x = 0
    for i in range(K):
        c = math.comb(M - 1 - x, K - 1 - i)
        while m >= c:
            m -= c
            x += 1
            c = math.comb(M - 1 - x, K - 1 - i)
        out.append(x)
        x += 1
    return tuple(out)


def pnumber(params: ModemParams, iset) -> int:
    """Base-M code of an index set: p = sum_i l_i * M^(K-i), strictly
    increasing in lexicographic order."""
    iset = check_index_set(params, iset)
    p = 0
    for l in iset:
        p = p * params.M + l
    return p


def final_index_bound(M: int, partial, last_code) -> int:
    """Largest admissible final index so the completed sorted set keeps
    p <= p0 = pnumber(last_code).

    `partial` is the ascending (K-1)-prefix already detected, `last_code` the
    codebook's final index set. Exact integer arithmetic throughout (the
    fractional base-M terms multiplied through by M^(K-1)); the result may
    exceed valid indices (caller clips to its candidate set) and is negative
    when no completion can stay inside the codebook.
    """
    K = len(last_code)
    if len(partial) != K - 1:
        raise ValueError(f"prefix must have {K - 1} elements, got {len(partial)}")
    d = 0
    while True:
        k_rem = K - d
        if k_rem == 1:
            return last_code[d]
        if partial[d] < last_code[d]:
            return M - 1
        if partial[d] > last_code[d]:
            p0 = 0
            for j in range(d, K):
                p0 = p0 * M + last_code[j]
            ps = 0
            for j in range(d, K - 1):
                ps = ps * M + partial[j]
            return (p0 - ps) // (M ** (k_rem - 1))
        d += 1


class Codebook:
    """Reduced codebook handle: params plus the last codeword and its p-code.

    Immutable after construction and safe to share across workers. The full
    codeword table (used by the exhaustive-search detectors) is built lazily
    and cached.
    """

    def __init__(self, params: ModemParams):
        self.params = params
        self.lam = params.lam
        self.n_messages = params.n_messages
        self.last_code = unrank(params, self.n_messages - 1)
        self.p0 = pnumber(params, self.last_code)
        self._table = None

    def __repr__(self):
        return (f"Codebook(M={self.params.M}, K={self.params.K}, "
                f"lam={self.lam}, last_code={self.last_code})")

    def contains(self, iset) -> bool:
        """Membership via the order-preserving p-code (no ranking needed)."""
        return pnumber(self.params, iset) <= self.p0

    def codeword_table(self, limit: int | None = None) -> np.ndarray:
        """(n_messages, K) int64 array of all index sets, message order.

        Raises ConfigurationError when the codebook exceeds `limit`
        (default DEFAULT_TABLE_LIMIT): exhaustive search is O(M^K) and is
        deliberately capped.
        """
        cap = DEFAULT_TABLE_LIMIT if limit is None else limit
        if self.n_messages > cap:
            raise ConfigurationError(
                f"codebook of 2^{self.lam} codewords exceeds the exhaustive "
                f"search limit {cap}; use the recursive detector instead")
        if self._table is None:
            from . import kernels  # deferred: kernels imports numba lazily

            table = kernels.unrank_batch(
                np.arange(self.n_messages, dtype=np.int64), self.params)
            table.flags.writeable = False
            self._table = table
        return self._table
