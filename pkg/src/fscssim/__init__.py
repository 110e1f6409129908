"""Multi-chirp spread-spectrum modem with index modulation.

Waveform synthesis, combinatorial message coding, flat-channel simulation,
optimal and low-complexity detectors, and a reproducible Monte-Carlo
BER/SER sweep harness (``fscssim`` on the command line).
"""

__version__ = "0.1.0"

from .channel import (AWGN, RAYLEIGH, ChannelRealization, ChannelSpec,
                      draw_channel, gamma_bar_for, snr_conversions, transmit,
                      trial_stream)
from .chirp import (basic_chirp, dechirp_spectrum, modulate, shifted_chirp,
                    weighted_bins)
from .codebook import (Codebook, bits_to_message, final_index_bound, lex_rank,
                       message_to_bits, pnumber, rank, unrank)
from .detect import (DetectionResult, DetectorKind, detect, detect_coherent_ml,
                     detect_kmax, detect_noncoherent_ml, detect_subopt_complete,
                     detect_subopt_reduced, errors_between)
from .papr import PaprReport, papr_of, papr_sweep
from .params import ConfigurationError, ModemParams, bits_per_symbol
from .sim import SimConfig, SweepRow, TrialTally, rate_table, run_point, run_sweep

__all__ = [
    "AWGN", "RAYLEIGH", "ChannelRealization", "ChannelSpec", "Codebook",
    "ConfigurationError", "DetectionResult", "DetectorKind", "ModemParams",
    "PaprReport", "SimConfig", "SweepRow", "TrialTally", "basic_chirp",
    "bits_per_symbol", "bits_to_message", "dechirp_spectrum", "detect",
    "detect_coherent_ml", "detect_kmax", "detect_noncoherent_ml",
    "detect_subopt_complete", "detect_subopt_reduced", "draw_channel",
    "errors_between", "final_index_bound", "gamma_bar_for", "lex_rank",
    "message_to_bits", "modulate", "papr_of", "papr_sweep", "pnumber", "rank",
    "rate_table", "run_point", "run_sweep", "shifted_chirp", "snr_conversions",
    "transmit", "trial_stream", "unrank", "weighted_bins",
]
