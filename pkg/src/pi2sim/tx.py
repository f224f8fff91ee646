"""
Transmit chain for pi/2-BPSK data and FDM reference signals.

Two architectures produce the same baseband signal:

* ``method1`` shapes in frequency: DFT-precode over ``M`` tones and multiply
  by the filter response ``W = dft(zero-pad(w_t, M))``. Port-1 DMRS adds the
  T precoder before the DFT and shifts the filter response by one tone (Z).
* ``method2`` shapes in time by circular convolution. DMRS is shaped once
  over ``M/2`` samples and interleaved onto the port's comb.

Port 0 occupies even relative tones, port 1 odd relative tones.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import dsp
from .dsp import ComplexSignal, Domain, PrecoderKind, PrecoderSpec
from .errors import RejectedInputError
from .sequences import BitSequence, bpsk_map, pi_half_bpsk

__all__ = [
    "Normalization",
    "ShapingFilter",
    "TWO_TAP",
    "THREE_TAP",
    "Mapping",
    "Method",
    "WaveformConfig",
    "Port",
    "DmrsResource",
    "PilotResource",
    "shape_freq",
    "map_subcarriers",
    "demap_subcarriers",
    "tone_indices",
    "add_cp",
    "ofdm_modulate",
    "data_tones",
    "tx_data",
    "dmrs_tones",
    "comb_tones",
    "tx_dmrs",
    "tx_reference",
]


class Normalization(enum.Enum):
    NONE = "none"
    UNIT_ENERGY = "unit-energy"


@dataclass(frozen=True, eq=False)
class ShapingFilter:
    """Short time-domain spectrum-shaping filter."""

    taps: np.ndarray
    normalization: Normalization = Normalization.NONE

    def __post_init__(self):
        t = np.array(self.taps, dtype=np.complex128, copy=True).reshape(-1)
        if t.size < 1:
            raise RejectedInputError("a shaping filter needs at least one tap")
        if not np.any(t != 0):
            raise RejectedInputError("shaping filter taps are all zero")
        norm = Normalization(self.normalization)
        if norm is Normalization.UNIT_ENERGY:
            t = t / np.sqrt(np.sum(np.abs(t) ** 2))
        if np.all(t.imag == 0):
            t = t.real.astype(np.complex128)
        t.setflags(write=False)
        object.__setattr__(self, "taps", t)
        object.__setattr__(self, "normalization", norm)

    @property
    def length(self) -> int:
        return self.taps.size

    def response(self, size: int) -> np.ndarray:
        """``dft(zero-pad(taps, size))``."""
        if self.length > size:
            raise RejectedInputError(f"{self.length}-tap filter longer than {size} tones")
        w = np.zeros(size, dtype=np.complex128)
        w[: self.length] = self.taps
        return np.fft.fft(w)

    @classmethod
    def identity(cls) -> "ShapingFilter":
        return cls([1.0])

    def __repr__(self):
        return f"ShapingFilter({np.round(self.taps.real, 6).tolist()}, {self.normalization.value})"


TWO_TAP = ShapingFilter([1.0, 1.0])
THREE_TAP = ShapingFilter([-0.28, 1.0, -0.28])


class Mapping(enum.Enum):
    LOCALIZED = "localized"
    INTERLEAVED = "interleaved"


class Method(enum.Enum):
    METHOD1 = "method1"
    METHOD2 = "method2"


@dataclass(frozen=True)
class WaveformConfig:
    """Allocation and OFDM numerology for one DFT-s-OFDM symbol."""

    M: int
    N: int
    cp_len: int = 0
    start_tone: int = 0
    mapping: Mapping = Mapping.LOCALIZED
    method: Method = Method.METHOD1

    def __post_init__(self):
        object.__setattr__(self, "mapping", Mapping(self.mapping))
        object.__setattr__(self, "method", Method(self.method))
        if self.M < 2 or self.M % 2:
            raise RejectedInputError(f"M must be a positive even number, got {self.M}")
        if self.N < self.M:
            raise RejectedInputError(f"N={self.N} must be at least M={self.M}")
        if self.cp_len < 0:
            raise RejectedInputError(f"cp_len must be >= 0, got {self.cp_len}")
        if self.start_tone < 0:
            raise RejectedInputError(f"start_tone must be >= 0, got {self.start_tone}")
        if self.mapping is Mapping.LOCALIZED:
            if self.start_tone + self.M > self.N:
                raise RejectedInputError(
                    f"localized allocation [{self.start_tone}, {self.start_tone + self.M}) exceeds N={self.N}"
                )
        else:
            if self.N % self.M:
                raise RejectedInputError("interleaved mapping needs N to be a multiple of M")
            if self.start_tone >= self.N // self.M:
                raise RejectedInputError(
                    f"interleaved start_tone must be < N/M={self.N // self.M}"
                )

    @property
    def half(self) -> int:
        return self.M // 2

    @property
    def symbol_len(self) -> int:
        return self.N + self.cp_len

    def replace(self, **changes) -> "WaveformConfig":
        from dataclasses import replace

        return replace(self, **changes)


class Port(enum.IntEnum):
    PORT0 = 0
    PORT1 = 1


@dataclass(frozen=True)
class DmrsResource:
    port: Port
    bits: BitSequence = field(compare=True)

    def __post_init__(self):
        object.__setattr__(self, "port", Port(self.port))
        if not isinstance(self.bits, BitSequence):
            object.__setattr__(self, "bits", BitSequence(self.bits))

    @property
    def comb(self) -> slice:
        return slice(int(self.port), None, 2)

    def pilot(self) -> np.ndarray:
        """Unshaped comb values: ``dft_{M/2}`` of the rotated +-1 sequence."""
        return np.fft.fft(pi_half_bpsk(self.bits).samples)


@dataclass(frozen=True, eq=False)
class PilotResource:
    """Reference signal given directly by its ``M/2`` unshaped comb values."""

    port: Port
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "port", Port(self.port))
        v = np.array(self.values, dtype=np.complex128, copy=True).reshape(-1)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def pilot(self) -> np.ndarray:
        return self.values


def shape_freq(x_f: ComplexSignal, w: ShapingFilter, M: int) -> ComplexSignal:
    """Multiply an ``M``-tone spectrum by the filter response."""
    x_f.require(Domain.FREQUENCY, "shape_freq input")
    if x_f.length != M:
        raise RejectedInputError(f"spectrum has {x_f.length} tones, expected {M}")
    return x_f.with_samples(x_f.samples * w.response(M))


def tone_indices(cfg: WaveformConfig) -> np.ndarray:
    """Absolute IFFT bin of each allocated tone."""
    k = np.arange(cfg.M)
    if cfg.mapping is Mapping.LOCALIZED:
        return cfg.start_tone + k
    return cfg.start_tone + k * (cfg.N // cfg.M)


def map_subcarriers(x: ComplexSignal, cfg: WaveformConfig) -> ComplexSignal:
    x.require(Domain.FREQUENCY, "map_subcarriers input")
    if x.length != cfg.M:
        raise RejectedInputError(f"expected {cfg.M} tones, got {x.length}")
    out = np.zeros(cfg.N, dtype=np.complex128)
    out[tone_indices(cfg)] = x.samples
    return ComplexSignal(out, Domain.FREQUENCY)


def demap_subcarriers(X: ComplexSignal, cfg: WaveformConfig) -> ComplexSignal:
    X.require(Domain.FREQUENCY, "demap_subcarriers input")
    if X.length != cfg.N:
        raise RejectedInputError(f"expected {cfg.N} bins, got {X.length}")
    return ComplexSignal(X.samples[tone_indices(cfg)], Domain.FREQUENCY)


def add_cp(body: ComplexSignal, cp_len: int) -> ComplexSignal:
    if cp_len == 0:
        return body
    if cp_len > body.length:
        raise RejectedInputError(f"CP of {cp_len} longer than symbol body {body.length}")
    s = body.samples
    return body.with_samples(np.concatenate([s[-cp_len:], s]))


def ofdm_modulate(tones: ComplexSignal, cfg: WaveformConfig) -> ComplexSignal:
    """Map ``M`` tones, ``N``-point IDFT, prepend CP."""
    return add_cp(dsp.idft(map_subcarriers(tones, cfg)), cfg.cp_len)


def _check_filter(w: ShapingFilter, size: int):
    if w.length > size:
        raise RejectedInputError(f"{w.length}-tap filter does not fit {size} samples")


def data_tones(bits, w: ShapingFilter, cfg: WaveformConfig) -> ComplexSignal:
    """Shaped DFT-precoded data spectrum (``M`` tones, before mapping)."""
    if not isinstance(bits, BitSequence):
        bits = BitSequence(bits)
    if bits.length != cfg.M:
        raise RejectedInputError(f"data needs {cfg.M} bits, got {bits.length}")
    _check_filter(w, cfg.M)
    x = pi_half_bpsk(bits)
    if cfg.method is Method.METHOD1:
        return shape_freq(dsp.dft(x, cfg.M), w, cfg.M)
    return dsp.dft(dsp.circular_convolve(x, w), cfg.M)


def tx_data(bits, w: ShapingFilter, cfg: WaveformConfig) -> ComplexSignal:
    """Time-domain data symbol, ``N + cp_len`` samples."""
    return ofdm_modulate(data_tones(bits, w, cfg), cfg)


def comb_tones(values: np.ndarray, port: Port, M: int) -> ComplexSignal:
    """Interleave ``M/2`` values onto the even (port 0) or odd (port 1) comb."""
    out = np.zeros(M, dtype=np.complex128)
    out[int(port) :: 2] = values
    return ComplexSignal(out, Domain.FREQUENCY)


def _dmrs_method1(res: DmrsResource, w: ShapingFilter, M: int, use_z: bool) -> np.ndarray:
    r = dsp.cyclic_extend(dsp.time_signal(bpsk_map(res.bits)), 2)
    r = dsp.apply_precoder(PrecoderSpec(PrecoderKind.PHASE_ROTATION_P, M), r)
    W = dsp.freq_signal(w.response(M))
    if res.port is Port.PORT1:
        r = dsp.apply_precoder(PrecoderSpec(PrecoderKind.TIME_SHIFT_T, M), r)
        if use_z:
            W = dsp.apply_precoder(PrecoderSpec(PrecoderKind.CYCLIC_SHIFT_Z, M), W)
    # unnormalized M-point DFT of the 2x repetition is twice the M/2-point DFT
    return 0.5 * dsp.dft(r, M).samples * W.samples


def _dmrs_method2(res: DmrsResource, w: ShapingFilter, M: int) -> np.ndarray:
    rp = dsp.apply_precoder(
        PrecoderSpec(PrecoderKind.PHASE_ROTATION_P1, M // 2),
        dsp.time_signal(bpsk_map(res.bits)),
    )
    shaped = dsp.dft(dsp.circular_convolve(rp, w), M // 2)
    return comb_tones(shaped.samples, res.port, M).samples


def dmrs_tones(
    res: DmrsResource, w: ShapingFilter, cfg: WaveformConfig, *, use_z: bool = True
) -> ComplexSignal:
    """Shaped DMRS spectrum over the ``M`` allocated tones.

    ``use_z=False`` drops the Z precoder from the method-1 port-1 path; it
    exists only to demonstrate the misaligned shaping it prevents.
    """
    if cfg.M % 2:
        raise RejectedInputError(f"FDM DMRS needs even M, got {cfg.M}")
    if res.bits.length != cfg.half:
        raise RejectedInputError(f"DMRS needs {cfg.half} bits, got {res.bits.length}")
    _check_filter(w, cfg.half)
    if cfg.method is Method.METHOD1:
        tones = _dmrs_method1(res, w, cfg.M, use_z)
    else:
        tones = _dmrs_method2(res, w, cfg.M)
    return ComplexSignal(tones, Domain.FREQUENCY)


def tx_dmrs(res: DmrsResource, w: ShapingFilter, cfg: WaveformConfig, *, use_z: bool = True) -> ComplexSignal:
    """Time-domain DMRS symbol, ``N + cp_len`` samples."""
    return ofdm_modulate(dmrs_tones(res, w, cfg, use_z=use_z), cfg)


def tx_reference(pilot: np.ndarray, port: Port, w: ShapingFilter, cfg: WaveformConfig) -> ComplexSignal:
    """Comb reference symbol from arbitrary ``M/2`` frequency-domain pilot values.

    Used for the Zadoff-Chu baseline: the pilot is shaped by the ``M/2``-point
    filter response and placed on the port's comb, like method-2 DMRS.
    """
    pilot = np.asarray(pilot, dtype=np.complex128).reshape(-1)
    if pilot.size != cfg.half:
        raise RejectedInputError(f"pilot needs {cfg.half} values, got {pilot.size}")
    _check_filter(w, cfg.half)
    return ofdm_modulate(comb_tones(pilot * w.response(cfg.half), Port(port), cfg.M), cfg)
