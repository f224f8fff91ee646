"""PAPR, CCDF and error-rate bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dsp import ComplexSignal, Domain
from ..errors import RejectedInputError

__all__ = ["CcdfCurve", "BlerRecord", "compute_papr", "ccdf", "ccdf_point"]


def compute_papr(signal: ComplexSignal, oversample: int = 4, cp_len: int = 0) -> float:
    """Peak-to-average power ratio of one symbol body in dB.

    The body's spectrum is zero-padded at the high end to ``oversample * N``
    bins before the inverse transform, i.e. occupied bins are read as
    non-negative frequencies. For a contiguous allocation this interpolates
    the true band-limited envelope.
    """
    signal.require(Domain.TIME, "compute_papr input")
    if oversample < 1 or int(oversample) != oversample:
        raise RejectedInputError(f"oversample must be a positive integer, got {oversample}")
    body = signal.samples[cp_len:]
    if body.size == 0:
        raise RejectedInputError("no samples left after removing the CP")
    if oversample > 1:
        n = body.size
        spec = np.zeros(n * int(oversample), dtype=np.complex128)
        spec[:n] = np.fft.fft(body)
        body = np.fft.ifft(spec)
    p = np.abs(body) ** 2
    mean = p.mean()
    if mean <= 0:
        raise RejectedInputError("zero-energy signal has no PAPR")
    return float(10 * np.log10(p.max() / mean))


@dataclass(frozen=True, eq=False)
class CcdfCurve:
    grid: np.ndarray
    exceedance: np.ndarray
    samples: int

    def records(self) -> list[dict]:
        return [
            {"papr_db": float(g), "exceedance": float(e), "samples": self.samples}
            for g, e in zip(self.grid, self.exceedance)
        ]


def ccdf(samples, grid) -> CcdfCurve:
    """Fraction of samples strictly above each grid point."""
    s = np.asarray(samples, dtype=np.float64).reshape(-1)
    g = np.asarray(grid, dtype=np.float64).reshape(-1)
    if s.size < 1:
        raise RejectedInputError("ccdf needs at least one sample")
    if g.size < 1:
        raise RejectedInputError("ccdf grid is empty")
    srt = np.sort(s)
    above = s.size - np.searchsorted(srt, g, side="right")
    return CcdfCurve(g, above / s.size, int(s.size))


def ccdf_point(samples, probability: float) -> float:
    """Smallest threshold whose exceedance is at most ``probability``."""
    s = np.sort(np.asarray(samples, dtype=np.float64).reshape(-1))
    k = int(np.floor(probability * s.size))
    # exceedance(g) <= p  <=>  at most k samples lie above g
    return float(s[s.size - 1 - k]) if k < s.size else float(s[0])


@dataclass(frozen=True)
class BlerRecord:
    snr_db: float
    port: int
    errors: int
    trials: int

    @property
    def rate(self) -> float:
        return self.errors / self.trials

    def as_dict(self) -> dict:
        return {
            "snr_db": self.snr_db,
            "port": self.port,
            "errors": self.errors,
            "trials": self.trials,
            "rate": self.rate,
        }
