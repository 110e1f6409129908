"""Monte-Carlo BER/SER engine: reproducible point runs, sweeps, CSV output.

Every trial owns an RNG stream derived from (seed, SNR-point key, trial
index), so results are independent of execution order and of the worker
count. Trials are scheduled in fixed chunks; early stopping truncates the
tally at a chunk boundary in chunk order, which keeps stopped runs exactly
reproducible as well. All detectors requested for a point see the same
channel/noise realizations (paired comparison).
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import kernels
from .channel import (AWGN, RAYLEIGH, ChannelSpec, draw_channel, gamma_bar_for,
                      snr_stream_key, transmit, trial_stream)
from .chirp import dechirp_spectrum, modulate, weighted_bins
from .codebook import DEFAULT_TABLE_LIMIT, Codebook, unrank
from .detect import EXHAUSTIVE, DetectorKind
from .params import ConfigurationError, ModemParams

#: Trials per scheduling chunk. Fixed so that tallies are identical for any
#: worker count; changing it changes which trials an early stop includes.
CHUNK = 4096

SNR_AXES = ("ebn0", "channel")

CSV_HEADER = ["detector", "channel", "M", "K", "lambda", "snr_axis", "snr_db",
              "trials", "symbol_errors", "bit_errors", "ser", "ber",
              "fallback_events", "early_stopped"]


@dataclass(frozen=True)
class SimConfig:
    params: ModemParams
    detectors: tuple
    channel: str = AWGN
    snr_axis: str = "ebn0"
    snr_db: tuple = ()
    trials_per_point: int = 100_000
    seed: int = 1
    max_bit_errors: int | None = None
    workers: int = 1
    ml_cap: int = DEFAULT_TABLE_LIMIT

    def __post_init__(self):
        object.__setattr__(self, "detectors",
                           tuple(DetectorKind(d) for d in self.detectors))
        object.__setattr__(self, "snr_db", tuple(float(v) for v in self.snr_db))
        if not self.detectors:
            raise ConfigurationError("at least one detector is required")
        if self.channel not in (AWGN, RAYLEIGH):
            raise ConfigurationError(f"unknown channel {self.channel!r}")
        if self.snr_axis not in SNR_AXES:
            raise ConfigurationError(f"snr_axis must be one of {SNR_AXES}")
        if self.trials_per_point < 1:
            raise ConfigurationError("trials_per_point must be positive")
        if self.workers < 1:
            raise ConfigurationError("workers must be positive")
        if self.max_bit_errors is not None and self.max_bit_errors < 1:
            raise ConfigurationError("max_bit_errors must be positive when set")
        for v in self.snr_db:
            if math.isnan(v) or v == -math.inf:
                raise ConfigurationError(f"invalid SNR point {v}")
        if self.params.lam > 62:
            raise ConfigurationError(
                f"simulation needs lam <= 62 bits/symbol, got {self.params.lam}")
        if any(d in EXHAUSTIVE for d in self.detectors) \
                and self.params.n_messages > self.ml_cap:
            raise ConfigurationError(
                f"ML detectors need 2^lam <= {self.ml_cap} codewords, "
                f"got 2^{self.params.lam}")


@dataclass
class TrialTally:
    """Exact integer error counts; chunks merge by plain addition."""

    trials: int = 0
    symbol_errors: int = 0
    bit_errors: int = 0
    fallback_events: int = 0

    def add(self, trials, symbol_errors, bit_errors, fallback_events):
        self.trials += trials
        self.symbol_errors += symbol_errors
        self.bit_errors += bit_errors
        self.fallback_events += fallback_events

    def __add__(self, other):
        return TrialTally(self.trials + other.trials,
                          self.symbol_errors + other.symbol_errors,
                          self.bit_errors + other.bit_errors,
                          self.fallback_events + other.fallback_events)

    def ser(self) -> float:
        return self.symbol_errors / self.trials if self.trials else math.nan

    def ber(self, lam: int) -> float:
        return self.bit_errors / (self.trials * lam) if self.trials else math.nan


@dataclass(frozen=True)
class SweepRow:
    detector: str
    channel: str
    M: int
    K: int
    lam: int
    snr_axis: str
    snr_db: float
    trials: int
    symbol_errors: int
    bit_errors: int
    fallback_events: int
    early_stopped: bool

    @property
    def ser(self) -> float:
        return self.symbol_errors / self.trials

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.trials * self.lam)

    def csv_fields(self) -> list:
        return [self.detector, self.channel, self.M, self.K, self.lam,
                self.snr_axis, repr(self.snr_db), self.trials,
                self.symbol_errors, self.bit_errors, repr(self.ser),
                repr(self.ber), self.fallback_events, int(self.early_stopped)]


_BOOK_CACHE: dict = {}


def _codebook_for(params: ModemParams) -> Codebook:
    key = (params.M, params.K)
    book = _BOOK_CACHE.get(key)
    if book is None:
        book = _BOOK_CACHE[key] = Codebook(params)
    return book


def _detect_batch(kind, book, Y, hs, ml_cap):
    if kind is DetectorKind.NONCOHERENT_ML:
        mh = kernels.ml_noncoherent_batch(Y, book.codeword_table(ml_cap))
        return mh, np.zeros(len(mh), bool)
    if kind is DetectorKind.COHERENT_ML:
        mh = kernels.ml_coherent_batch(Y, hs, book.codeword_table(ml_cap))
        return mh, np.zeros(len(mh), bool)
    if kind is DetectorKind.SUBOPT_REDUCED:
        return kernels.subopt_reduced_batch(Y, book)
    if kind is DetectorKind.SUBOPT_COMPLETE:
        return kernels.subopt_complete_batch(Y, book)
    if kind is DetectorKind.KMAX:
        return kernels.kmax_batch(Y, book)
    raise ConfigurationError(f"unknown detector kind {kind!r}")


def _simulate_chunk(config: SimConfig, snr_db: float, t0: int, n: int,
                    detectors: tuple) -> dict:
    """Simulate trials [t0, t0+n) of one SNR point and run every detector."""
    params = config.params
    book = _codebook_for(params)
    spec = ChannelSpec.from_gamma_bar(
        config.channel, gamma_bar_for(params, config.snr_axis, snr_db))
    skey = snr_stream_key(snr_db)
    nmsg = params.n_messages

    ys = np.empty((n, params.M), np.complex128)
    hs = np.empty(n, np.complex128)
    ms = np.empty(n, np.int64)
    for i in range(n):
        rng = trial_stream(config.seed, skey, t0 + i)
        m = int(rng.integers(0, nmsg))
        s = modulate(params, unrank(params, m))
        real = draw_channel(spec, rng)
        ys[i] = transmit(s, real, spec.n0, rng)
        hs[i] = real.h
        ms[i] = m

    Y = weighted_bins(params, dechirp_spectrum(params, ys))
    out = {}
    for kind in detectors:
        mh, fb = _detect_batch(kind, book, Y, hs, config.ml_cap)
        out[kind] = (n,
                     int(np.count_nonzero(mh != ms)),
                     int(kernels.bit_error_counts(ms, mh).sum()),
                     int(np.count_nonzero(fb)))
    return out


def _chunk_spans(trials: int) -> list:
    return [(t0, min(CHUNK, trials - t0)) for t0 in range(0, trials, CHUNK)]


def _run_point_multi(config: SimConfig, snr_db: float, detectors) -> dict:
    """All requested detectors over one SNR point on shared realizations.

    Returns {kind: (TrialTally, early_stopped)}. Chunk results are applied
    strictly in chunk order, so early stopping and final tallies do not
    depend on the worker count.
    """
    detectors = tuple(DetectorKind(d) for d in detectors)
    spans = _chunk_spans(config.trials_per_point)
    tallies = {k: TrialTally() for k in detectors}
    early = {k: False for k in detectors}
    active = set(detectors)

    def apply(chunk_out):
        for k in detectors:
            if k not in active:
                continue
            tallies[k].add(*chunk_out[k])
            if (config.max_bit_errors is not None
                    and tallies[k].bit_errors >= config.max_bit_errors):
                active.discard(k)
                early[k] = True

    if config.workers <= 1 or len(spans) == 1:
        for t0, n in spans:
            if not active:
                break
            apply(_simulate_chunk(config, snr_db, t0, n, detectors))
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as ex:
            pending = {}
            next_i = 0
            window = config.workers * 2
            for agg_i in range(len(spans)):
                if not active:
                    break
                while next_i < len(spans) and len(pending) < window:
                    t0, n = spans[next_i]
                    pending[next_i] = ex.submit(
                        _simulate_chunk, config, snr_db, t0, n, detectors)
                    next_i += 1
                apply(pending.pop(agg_i).result())
            for fut in pending.values():
                fut.cancel()

    return {k: (tallies[k], early[k]) for k in detectors}


def run_point(config: SimConfig, snr_db: float, detector) -> TrialTally:
    """Monte-Carlo error counts for one detector at one SNR point."""
    return _run_point_multi(config, float(snr_db), [detector])[DetectorKind(detector)][0]


def run_sweep(config: SimConfig, out_path=None) -> list:
    """Run every (detector, SNR point) pair; optionally emit CSV + manifest.

    The CSV is written atomically (temp file + rename): an I/O failure
    leaves no partial file behind.
    """
    if not config.snr_db:
        raise ConfigurationError("sweep needs a non-empty SNR grid")
    params = config.params
    started = datetime.now(timezone.utc)
    t0 = time.monotonic()
    rows = []
    for snr in config.snr_db:
        point = _run_point_multi(config, snr, config.detectors)
        for kind in config.detectors:
            tally, stopped = point[kind]
            rows.append(SweepRow(
                detector=str(kind), channel=config.channel,
                M=params.M, K=params.K, lam=params.lam,
                snr_axis=config.snr_axis, snr_db=snr,
                trials=tally.trials, symbol_errors=tally.symbol_errors,
                bit_errors=tally.bit_errors,
                fallback_events=tally.fallback_events,
                early_stopped=stopped))
    wall = time.monotonic() - t0
    finished = datetime.now(timezone.utc)
    if out_path is not None:
        out_path = Path(out_path)
        _write_csv_atomic(out_path, rows)
        _write_manifest(_manifest_path(out_path), config, rows,
                        started, finished, wall)
    return rows


def _manifest_path(out_path: Path) -> Path:
    return out_path.with_name(out_path.stem + ".manifest.txt")


def _write_csv_atomic(path: Path, rows) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(CSV_HEADER)
            for r in rows:
                w.writerow(r.csv_fields())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _write_manifest(path: Path, config: SimConfig, rows,
                    started, finished, wall) -> None:
    from fscssim import __version__

    stopped = [f"{r.detector}@{r.snr_db!r}dB" for r in rows if r.early_stopped]
    lines = [
        f"fscssim-version: {__version__}",
        f"started-utc: {started.isoformat()}",
        f"finished-utc: {finished.isoformat()}",
        f"wall-seconds: {wall:.3f}",
        f"M: {config.params.M}",
        f"K: {config.params.K}",
        f"lambda: {config.params.lam}",
        f"detectors: {','.join(str(d) for d in config.detectors)}",
        f"channel: {config.channel}",
        f"snr-axis: {config.snr_axis}",
        f"snr-points-db: {' '.join(repr(v) for v in config.snr_db)}",
        f"trials-per-point: {config.trials_per_point}",
        f"seed: {config.seed}",
        f"workers: {config.workers}",
        f"max-bit-errors: {config.max_bit_errors}",
        f"ml-search-cap: {config.ml_cap}",
        f"kernel-backend: {kernels.active_backend()}",
        f"chunk-trials: {CHUNK}",
        "bit-source: per-trial uniform message (equivalent to uniform bits)",
        "early-stop-policy: truncate at chunk boundary, chunk order",
        f"early-stopped-points: {';'.join(stopped) if stopped else 'none'}",
    ]
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w") as f:
            f.write("\n".join(lines) + "\n")
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def rate_table(sf_values, k_values) -> list:
    """Bits per symbol and data-rate gain (percent of the K=1 rate) for each
    (M=2^sf, K); percentages round half-up to integers."""
    sf_values = list(sf_values)
    k_values = list(k_values)
    if not sf_values or not k_values:
        raise ConfigurationError("rate table needs non-empty SF and K ranges")
    from .params import bits_per_symbol

    out = []
    for sf in sf_values:
        if sf < 1:
            raise ConfigurationError(f"SF must be >= 1, got {sf}")
        M = 1 << sf
        for k in k_values:
            bits = bits_per_symbol(M, k)
            percent = (200 * bits + sf) // (2 * sf)
            out.append({"M": M, "sf": sf, "K": k, "bits": bits,
                        "percent": percent})
    return out
