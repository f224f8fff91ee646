"""
Numerical kernels shared by the transmitter, channel and receiver.

Conventions
-----------
* Forward DFT is unnormalized, ``X(k) = sum_m x(m) exp(-2j*pi*k*m/M)``.
* Inverse DFT carries the ``1/M`` factor.
* Precoders are applied as elementwise products or index shifts; no dense
  matrices are ever formed.

All functions are pure. ``ComplexSignal`` instances are frozen and their
sample arrays are marked read-only, so they can be shared between workers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import RejectedInputError

__all__ = [
    "Domain",
    "ComplexSignal",
    "PrecoderKind",
    "PrecoderSpec",
    "time_signal",
    "freq_signal",
    "dft",
    "idft",
    "circular_convolve",
    "cyclic_extend",
    "apply_precoder",
    "precoder_diagonal",
    "pi2_rotation",
]


class Domain(enum.Enum):
    TIME = "time"
    FREQUENCY = "frequency"


@dataclass(frozen=True, eq=False)
class ComplexSignal:
    """Ordered complex samples tagged with the domain they live in."""

    samples: np.ndarray
    domain: Domain

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.complex128, copy=True).reshape(-1)
        if arr.size < 1:
            raise RejectedInputError("a ComplexSignal needs at least one sample")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        if not isinstance(self.domain, Domain):
            object.__setattr__(self, "domain", Domain(self.domain))

    @property
    def length(self) -> int:
        return self.samples.size

    def __len__(self) -> int:
        return self.samples.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.samples, dtype=dtype)

    def with_samples(self, samples) -> "ComplexSignal":
        return ComplexSignal(samples, self.domain)

    def require(self, domain: Domain, what: str = "input") -> "ComplexSignal":
        if self.domain is not domain:
            raise RejectedInputError(
                f"{what} must be a {domain.value}-domain signal, got {self.domain.value}"
            )
        return self


def time_signal(samples) -> ComplexSignal:
    return ComplexSignal(samples, Domain.TIME)


def freq_signal(samples) -> ComplexSignal:
    return ComplexSignal(samples, Domain.FREQUENCY)


def dft(x: ComplexSignal, size: int | None = None) -> ComplexSignal:
    """Unnormalized forward DFT of a time-domain signal.

    ``size`` is checked against the signal length; it exists so callers
    state the transform size they expect.
    """
    x.require(Domain.TIME, "dft input")
    if size is not None and size != x.length:
        raise RejectedInputError(f"dft size {size} does not match input length {x.length}")
    return ComplexSignal(np.fft.fft(x.samples), Domain.FREQUENCY)


def idft(X: ComplexSignal) -> ComplexSignal:
    """Inverse DFT with ``1/M`` scaling, so ``idft(dft(x)) == x``."""
    X.require(Domain.FREQUENCY, "idft input")
    return ComplexSignal(np.fft.ifft(X.samples), Domain.TIME)


def _as_taps(w, length: int) -> np.ndarray:
    taps = np.asarray(getattr(w, "taps", w), dtype=np.complex128).reshape(-1)
    if taps.size > length:
        raise RejectedInputError(f"{taps.size} taps do not fit a length-{length} circle")
    out = np.zeros(length, dtype=np.complex128)
    out[: taps.size] = taps
    return out


def circular_convolve(x: ComplexSignal, w) -> ComplexSignal:
    """Circular convolution ``y(n) = sum_m x(m) w((n - m) mod M)``.

    ``w`` may be a ``ComplexSignal`` of the same length, an array of at most
    ``M`` taps (zero-padded here), or any object with a ``taps`` attribute.
    """
    x.require(Domain.TIME, "circular_convolve input")
    M = x.length
    if isinstance(w, ComplexSignal):
        if w.length != M:
            raise RejectedInputError(f"length mismatch: x has {M}, w has {w.length}")
        wp = w.samples
    else:
        wp = _as_taps(w, M)
    y = np.fft.ifft(np.fft.fft(x.samples) * np.fft.fft(wp))
    return ComplexSignal(y, Domain.TIME)


def cyclic_extend(r: ComplexSignal, factor: int) -> ComplexSignal:
    """Repeat ``r`` ``factor`` times: ``out(n) = r(n mod len(r))``."""
    if int(factor) != factor or factor < 1:
        raise RejectedInputError(f"extension factor must be an integer >= 1, got {factor}")
    return r.with_samples(np.tile(r.samples, int(factor)))


class PrecoderKind(enum.Enum):
    PHASE_ROTATION_P = "P"
    PHASE_ROTATION_P1 = "P1"
    TIME_SHIFT_T = "T"
    CYCLIC_SHIFT_Z = "Z"


@dataclass(frozen=True)
class PrecoderSpec:
    kind: PrecoderKind
    size: int

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise RejectedInputError(f"precoder size must be a positive integer, got {self.size}")
        if not isinstance(self.kind, PrecoderKind):
            object.__setattr__(self, "kind", PrecoderKind(self.kind))


def pi2_rotation(size: int) -> np.ndarray:
    """``exp(j*pi/4) * exp(j*(m mod 2)*pi/2)`` for ``m = 0..size-1``."""
    m = np.arange(size)
    return np.exp(1j * np.pi / 4) * np.where(m % 2 == 0, 1.0 + 0j, 1j)


def precoder_diagonal(spec: PrecoderSpec) -> np.ndarray:
    """Diagonal of a diagonal precoder. Z is a permutation and has none."""
    if spec.kind in (PrecoderKind.PHASE_ROTATION_P, PrecoderKind.PHASE_ROTATION_P1):
        return pi2_rotation(spec.size)
    if spec.kind is PrecoderKind.TIME_SHIFT_T:
        return np.exp(2j * np.pi * np.arange(spec.size) / spec.size)
    raise RejectedInputError("the Z precoder is a cyclic shift, not a diagonal")


def apply_precoder(spec: PrecoderSpec, v: ComplexSignal) -> ComplexSignal:
    """Apply P, P1, T (elementwise) or Z (cyclic shift down by one)."""
    if spec.size != v.length:
        raise RejectedInputError(
            f"precoder {spec.kind.value} has size {spec.size}, input has length {v.length}"
        )
    if spec.kind is PrecoderKind.CYCLIC_SHIFT_Z:
        return v.with_samples(np.roll(v.samples, 1))
    return v.with_samples(precoder_diagonal(spec) * v.samples)
