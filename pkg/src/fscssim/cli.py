"""Command-line front-end: sweep, rate-table, papr, selftest.

Exit codes: 0 success, 1 selftest failure, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import __version__, kernels
from .channel import (AWGN, RAYLEIGH, ChannelRealization, ChannelSpec,
                      transmit, trial_stream)
from .chirp import basic_chirp, dechirp_spectrum, modulate, shifted_chirp, weighted_bins
from .codebook import Codebook, pnumber, unrank
from .detect import DetectorKind, detect
from .papr import papr_sweep
from .params import ConfigurationError, ModemParams
from .sim import SimConfig, rate_table, run_sweep


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fscssim",
        description="Chirp spread spectrum with index modulation: "
                    "Monte-Carlo BER/SER experiments and modem utilities.")
    p.add_argument("--version", action="version", version=f"fscssim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="Monte-Carlo BER/SER sweep, CSV output")
    sw.add_argument("--M", type=int, default=128, help="number of chirps (samples per symbol)")
    sw.add_argument("--K", type=int, default=2, help="chirps per symbol")
    sw.add_argument("--detector", action="append",
                    choices=[d.value for d in DetectorKind],
                    help="detector to run (repeatable; default: subopt)")
    sw.add_argument("--channel", choices=[AWGN, RAYLEIGH], default=AWGN)
    sw.add_argument("--snr-axis", choices=["ebn0", "channel"], default="ebn0",
                    help="meaning of the SNR grid: Eb/N0 or channel SNR")
    sw.add_argument("--snr-start", type=float, default=0.0, help="grid start, dB")
    sw.add_argument("--snr-stop", type=float, default=8.0, help="grid stop, dB (inclusive)")
    sw.add_argument("--snr-step", type=float, default=2.0, help="grid step, dB")
    sw.add_argument("--trials", type=int, default=100_000, help="trials per SNR point")
    sw.add_argument("--seed", type=int, default=1, help="base RNG seed")
    sw.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    sw.add_argument("--max-bit-errors", type=int, default=None,
                    help="stop a point early after this many bit errors")
    sw.add_argument("--out", default="sweep_results.csv", help="CSV output path")

    rt = sub.add_parser("rate-table", help="bits/symbol and rate gain per (M, K)")
    rt.add_argument("--sf-min", type=int, default=7)
    rt.add_argument("--sf-max", type=int, default=12)
    rt.add_argument("--k-min", type=int, default=1)
    rt.add_argument("--k-max", type=int, default=4)

    pa = sub.add_parser("papr", help="peak-to-average power ratio of a codebook")
    pa.add_argument("--M", type=int, default=128)
    pa.add_argument("--K", type=int, default=2)
    pa.add_argument("--samples", type=int, default=4096,
                    help="codewords to evaluate (exhaustive when codebook is smaller)")
    pa.add_argument("--seed", type=int, default=1)

    st = sub.add_parser("selftest", help="quick internal consistency checks")
    st.add_argument("--seed", type=int, default=1)
    return p


def _snr_grid(start: float, stop: float, step: float) -> tuple:
    if math.isinf(start):
        return (start,)
    if stop < start:
        raise ConfigurationError("--snr-stop must be >= --snr-start")
    if step <= 0:
        raise ConfigurationError("--snr-step must be positive")
    vals = []
    v = start
    while v <= stop + 1e-9:
        vals.append(round(v, 10))
        v += step
    return tuple(vals)


def _cmd_sweep(args) -> int:
    config = SimConfig(
        params=ModemParams(args.M, args.K),
        detectors=tuple(args.detector or ["subopt"]),
        channel=args.channel,
        snr_axis=args.snr_axis,
        snr_db=_snr_grid(args.snr_start, args.snr_stop, args.snr_step),
        trials_per_point=args.trials,
        seed=args.seed,
        max_bit_errors=args.max_bit_errors,
        workers=args.workers,
    )
    rows = run_sweep(config, out_path=args.out)
    print(f"# backend={kernels.active_backend()} -> {args.out}")
    print(f"{'detector':>16} {'snr_db':>8} {'trials':>9} {'ser':>12} {'ber':>12}")
    for r in rows:
        flag = " (early stop)" if r.early_stopped else ""
        print(f"{r.detector:>16} {r.snr_db:>8.3g} {r.trials:>9} "
              f"{r.ser:>12.4e} {r.ber:>12.4e}{flag}")
    return 0


def _cmd_rate_table(args) -> int:
    rows = rate_table(range(args.sf_min, args.sf_max + 1),
                      range(args.k_min, args.k_max + 1))
    ks = sorted({r["K"] for r in rows})
    header = "      M " + "".join(f" | K={k}: bits  gain" for k in ks)
    print(header)
    print("-" * len(header))
    for sf in sorted({r["sf"] for r in rows}):
        cells = []
        for k in ks:
            row = next(r for r in rows if r["sf"] == sf and r["K"] == k)
            cells.append(f" |     {row['bits']:>6}  {row['percent']:>3}%")
        print(f"  2^{sf:<4}" + "".join(cells))
    return 0


def _cmd_papr(args) -> int:
    params = ModemParams(args.M, args.K)
    book = Codebook(params)
    n = min(args.samples, book.n_messages)
    rep = papr_sweep(params, book, n, seed=args.seed)
    mode = "exhaustive" if rep.exhaustive else f"random sample of {rep.sample_size}"
    print(f"M={args.M} K={args.K} lam={params.lam} codewords=2^{params.lam} ({mode})")
    print(f"bound       : {rep.bound:.6f} ({10 * math.log10(rep.bound):.2f} dB)")
    print(f"max papr    : {rep.max_papr:.6f} ({rep.max_papr_db:.2f} dB)")
    for q, v in rep.quantiles.items():
        print(f"p{q:<2} papr    : {v:.6f} ({10 * math.log10(v):.2f} dB)")
    return 0


def _selftest_checks(seed: int):
    # orthogonality: Gram matrix of the chirp set is M * identity
    params = ModemParams(64, 2)
    X = np.stack([shifted_chirp(params, m) for m in range(64)])
    gram = X @ X.conj().T
    yield "chirp orthogonality (M=64)", np.abs(gram - 64 * np.eye(64)).max() < 1e-9

    # codebook spot values for M=8, K=2
    p8 = ModemParams(8, 2)
    ok = (unrank(p8, 0) == (0, 1) and unrank(p8, 15) == (2, 5)
          and pnumber(p8, (2, 5)) == 21 and pnumber(p8, (6, 7)) == 55)
    yield "codebook spot values (M=8, K=2)", ok

    # noiseless round trip through every detector
    p16 = ModemParams(16, 2)
    book = Codebook(p16)
    ok = True
    for m in range(book.n_messages):
        y = modulate(p16, unrank(p16, m))
        Y = weighted_bins(p16, dechirp_spectrum(p16, y))
        for kind in DetectorKind:
            if detect(kind, book, Y, h=1.0 + 0.0j).m != m:
                ok = False
    yield "noiseless round trip (M=16, K=2, all detectors)", ok

    # noise calibration: empirical E|w|^2 vs N0 over 1e5 samples
    rng = trial_stream(seed, 0)
    y = transmit(np.zeros(100_000), ChannelRealization(0j), 0.5, rng)
    mean_pw = float(np.mean(np.abs(y) ** 2))
    yield "noise power calibration (N0=0.5)", abs(mean_pw - 0.5) < 0.01

    # PAPR bound over a codebook sample
    p64 = ModemParams(64, 3)
    rep = papr_sweep(p64, Codebook(p64), 512, seed=seed)
    yield "papr bounds (M=64, K=3)", 1 - 1e-9 <= rep.max_papr <= 3 + 1e-9


def _cmd_selftest(args) -> int:
    failures = 0
    for name, ok in _selftest_checks(args.seed):
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
        failures += 0 if ok else 1
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "sweep": _cmd_sweep,
        "rate-table": _cmd_rate_table,
        "papr": _cmd_papr,
        "selftest": _cmd_selftest,
    }
    try:
        return handlers[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
