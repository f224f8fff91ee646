"""
Base-station receiver: OFDM front end, joint filter+channel estimation from
a DMRS comb, linear MMSE equalization and pi/2-BPSK demodulation.

The shaping filter is not known to the receiver. Each port's estimate is the
combined response of filter and propagation channel, recovered from the
``M/2`` comb tones and expanded to all ``M`` data tones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dsp
from .dsp import ComplexSignal, Domain
from .errors import RejectedInputError
from .tx import Port, ShapingFilter, WaveformConfig, demap_subcarriers

__all__ = [
    "DenoiseWindow",
    "ChannelEstimate",
    "Demodulated",
    "front_end",
    "estimate_port",
    "channel_matrix",
    "mmse_equalize",
    "mmse_error_variance",
    "despread_demod",
]


@dataclass(frozen=True)
class DenoiseWindow:
    """Retain taps ``[0, cutoff)`` and the last ``tail_keep`` taps of the CIR."""

    cutoff: int
    tail_keep: int = 0

    def __post_init__(self):
        if self.cutoff < 1:
            raise RejectedInputError(f"cutoff must be >= 1, got {self.cutoff}")
        if self.tail_keep < 0:
            raise RejectedInputError(f"tail_keep must be >= 0, got {self.tail_keep}")

    @classmethod
    def for_config(cls, cfg: WaveformConfig, filter_len: int = 1) -> "DenoiseWindow":
        """Cutoff at the CP length mapped onto the ``M``-sample grid, widened
        by the shaping filter's span."""
        fc = math.ceil(cfg.cp_len * cfg.M / cfg.N) + filter_len - 1
        return cls(min(max(fc, 1), cfg.half))

    def mask(self, size: int) -> np.ndarray:
        if self.cutoff + self.tail_keep > size:
            raise RejectedInputError(
                f"window cutoff {self.cutoff} + tail {self.tail_keep} exceeds {size} taps"
            )
        m = np.zeros(size, dtype=bool)
        m[: self.cutoff] = True
        if self.tail_keep:
            m[size - self.tail_keep :] = True
        return m


@dataclass(frozen=True, eq=False)
class ChannelEstimate:
    port: Port
    h_eff: np.ndarray
    denoised: np.ndarray
    fullband: np.ndarray


def front_end(rx, cfg: WaveformConfig) -> list[ComplexSignal]:
    """Strip CP, ``N``-point DFT and extract the ``M`` allocated tones.

    Accepts a single received symbol or a list with one per antenna.
    """
    single = isinstance(rx, ComplexSignal)
    out = []
    for y in [rx] if single else rx:
        y.require(Domain.TIME, "front_end input")
        if y.length != cfg.symbol_len:
            raise RejectedInputError(
                f"received symbol has {y.length} samples, expected {cfg.symbol_len}"
            )
        body = dsp.time_signal(y.samples[cfg.cp_len :])
        out.append(demap_subcarriers(dsp.dft(body, cfg.N), cfg))
    return out[0] if single else out


def estimate_port(y: ComplexSignal, res, win: DenoiseWindow | None = None) -> ChannelEstimate:
    """DFT-based LS estimate of the composite response seen by one port.

    Parameters
    ----------
    y : ComplexSignal
        ``M`` received tones of the DMRS symbol.
    res : DmrsResource or PilotResource
        The port's reference signal; ``res.pilot()`` gives the ``M/2``
        unshaped comb values.
    win : DenoiseWindow, optional
        Defaults to keeping every tap (no denoising).
    """
    y.require(Domain.FREQUENCY, "estimate_port input")
    M = y.length
    if M % 2:
        raise RejectedInputError(f"DMRS symbol needs an even number of tones, got {M}")
    half = M // 2
    pilot = res.pilot()
    if pilot.size != half:
        raise RejectedInputError(f"pilot has {pilot.size} values, comb has {half}")
    weak = np.flatnonzero(np.abs(pilot) < 1e-12)
    if weak.size:
        raise RejectedInputError(
            f"pilot has a null at comb tone {int(weak[0])}; sequence/filter combination unusable"
        )
    comb = y.samples[int(res.port) :: 2]
    h_eff = np.fft.ifft(comb / pilot)
    mask = (win or DenoiseWindow(half)).mask(half)
    denoised = np.where(mask, h_eff, 0)
    padded = np.zeros(M, dtype=np.complex128)
    padded[:half] = denoised
    return ChannelEstimate(Port(res.port), h_eff, denoised, np.fft.fft(padded))


def channel_matrix(estimates) -> np.ndarray:
    """Stack ``estimates[rx][stream]`` into an array indexed ``[tone, rx, stream]``."""
    H = np.array([[e.fullband for e in row] for row in estimates])
    return np.transpose(H, (2, 0, 1))


def _as_matrix(estimates) -> np.ndarray:
    if isinstance(estimates, np.ndarray):
        return estimates
    return channel_matrix(estimates)


def mmse_equalize(y_data, estimates, noise_var: float) -> list[ComplexSignal]:
    """Per-tone linear MMSE, ``(H^H H + s2 I)^-1 H^H y``.

    ``y_data`` holds ``M`` tones per rx antenna. ``estimates`` is either a
    nested list ``[rx][stream]`` of ``ChannelEstimate`` or an array
    ``[tone, rx, stream]``. ``noise_var`` is the noise variance relative to
    unit-power transmitted tones; 0 gives zero forcing.
    """
    H = _as_matrix(estimates)
    n_tones, n_rx, n_streams = H.shape
    if n_streams not in (1, 2):
        raise RejectedInputError(f"1 or 2 streams supported, got {n_streams}")
    if n_rx < n_streams:
        raise RejectedInputError(f"{n_rx} antennas cannot separate {n_streams} streams")
    Y = np.array([np.asarray(y.samples if isinstance(y, ComplexSignal) else y) for y in y_data]).T
    if Y.shape != (n_tones, n_rx):
        raise RejectedInputError(f"received tones shape {Y.shape}, expected {(n_tones, n_rx)}")
    s2 = float(noise_var)
    if math.isinf(s2):
        return [dsp.freq_signal(np.zeros(n_tones)) for _ in range(n_streams)]
    Hc = np.conj(H)
    b = np.einsum("krs,kr->ks", Hc, Y)
    if n_streams == 1:
        den = np.einsum("kr,kr->k", Hc[:, :, 0], H[:, :, 0]).real + s2
        if s2 == 0 and np.any(den == 0):
            raise RejectedInputError("zero channel on some tone; use noise_var > 0")
        return [dsp.freq_signal(b[:, 0] / den)]
    g = np.einsum("krs,krt->kst", Hc, H)
    a, c, d = g[:, 0, 0].real + s2, g[:, 0, 1], g[:, 1, 1].real + s2
    det = a * d - (c * np.conj(c)).real
    if s2 == 0 and np.any(np.abs(det) < 1e-300):
        raise RejectedInputError("singular channel Gram matrix; use noise_var > 0")
    x0 = (d * b[:, 0] - c * b[:, 1]) / det
    x1 = (a * b[:, 1] - np.conj(c) * b[:, 0]) / det
    return [dsp.freq_signal(x0), dsp.freq_signal(x1)]


def mmse_error_variance(estimates, noise_var: float) -> np.ndarray:
    """Mean MMSE error variance per stream, ``s2 * diag((H^H H + s2 I)^-1)``.

    After the ``M``-point IDFT this is the per-sample noise variance of the
    despread symbols.
    """
    H = _as_matrix(estimates)
    s = H.shape[2]
    G = np.einsum("krs,krt->kst", np.conj(H), H) + noise_var * np.eye(s)
    diag = np.real(np.diagonal(np.linalg.inv(G), axis1=1, axis2=2))
    return noise_var * diag.mean(axis=0)


@dataclass(frozen=True, eq=False)
class Demodulated:
    llr: np.ndarray
    bits: np.ndarray


def despread_demod(
    x_f: ComplexSignal, shaping: ShapingFilter | None = None, noise_var: float = 1.0
) -> Demodulated:
    """IDFT, pi/2 de-rotation and BPSK soft/hard decisions.

    With ``shaping`` given the receiver knows the filter and divides its
    response out first; by default the composite channel estimate already
    includes it. LLRs are ``2 Re(z) / noise_var`` (positive favours bit 0).
    """
    x_f.require(Domain.FREQUENCY, "despread_demod input")
    tones = x_f.samples
    if shaping is not None:
        W = shaping.response(x_f.length)
        if np.any(np.abs(W) < 1e-12):
            raise RejectedInputError("shaping filter response has a null; cannot divide it out")
        tones = tones / W
    z = np.fft.ifft(tones) * np.conj(dsp.pi2_rotation(x_f.length))
    re = z.real
    nv = noise_var if noise_var > 0 else 1e-300
    return Demodulated(2.0 * re / nv, (re < 0).astype(np.int8))
