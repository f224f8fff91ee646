"""
Low-PAPR pi/2-BPSK DFT-s-OFDM uplink link simulator.

Modules
-------
dsp        DFT, circular convolution and diagonal precoders.
sequences  Bit sequences, pi/2-BPSK mapping and Zadoff-Chu references.
tx         Spectrum-shaped data and two-port comb DMRS transmitters.
channel    Tapped-delay-line block fading with AWGN.
rx         DFT-based channel estimation, MMSE equalization and demodulation.
harness    Seeded experiments, metrics and result files.
"""

from . import channel, dsp, rx, sequences, tx
from .errors import ConfigError, GoldenMismatchError, RejectedInputError

__version__ = "0.1.0"

__all__ = [
    "channel",
    "dsp",
    "rx",
    "sequences",
    "tx",
    "ConfigError",
    "GoldenMismatchError",
    "RejectedInputError",
]
