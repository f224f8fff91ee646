"""
Block-fading tapped-delay-line channel with AWGN.

One ``ChannelRealization`` holds the tap gains for every (tx port, rx
antenna) pair and is reused for all OFDM symbols of a slot. Noise is drawn
per receive antenna from an explicit ``numpy.random.Generator``.

SNR convention: ``snr_db`` is the ratio of the mean transmitted power per
occupied tone to the noise variance per tone, both measured after the
receiver's unnormalized ``N``-point DFT. With unit average channel gain this
is the per-antenna SNR on occupied subcarriers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .dsp import ComplexSignal, Domain
from .errors import ConfigError, RejectedInputError

__all__ = [
    "Fading",
    "ChannelProfile",
    "ChannelRealization",
    "DEFAULT_PROFILE",
    "FLAT_PROFILE",
    "parse_profile",
    "load_profile",
    "builtin_profile",
    "draw_realization",
    "noise_std",
    "apply",
    "frequency_response",
]


class Fading(enum.Enum):
    STATIC = "static"
    RAYLEIGH_BLOCK = "rayleigh-block"


@dataclass(frozen=True, eq=False)
class ChannelProfile:
    """Tap delays in samples and linear relative powers (normalised to sum 1)."""

    delays: np.ndarray
    powers: np.ndarray
    fading: Fading = Fading.RAYLEIGH_BLOCK

    def __post_init__(self):
        d = np.asarray(self.delays, dtype=np.int64).reshape(-1)
        p = np.asarray(self.powers, dtype=np.float64).reshape(-1)
        if d.size < 1 or d.size != p.size:
            raise RejectedInputError("profile needs equally many delays and powers (>= 1)")
        if d[0] < 0 or np.any(np.diff(d) <= 0):
            raise RejectedInputError(f"delays must be >= 0 and strictly increasing: {d.tolist()}")
        if np.any(p <= 0):
            raise RejectedInputError("tap powers must be positive")
        p = p / p.sum()
        d.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "delays", d)
        object.__setattr__(self, "powers", p)
        object.__setattr__(self, "fading", Fading(self.fading))

    @property
    def n_taps(self) -> int:
        return self.delays.size

    @property
    def max_delay(self) -> int:
        return int(self.delays[-1])

    @classmethod
    def from_db(cls, delays, powers_db, fading=Fading.RAYLEIGH_BLOCK) -> "ChannelProfile":
        return cls(delays, 10 ** (np.asarray(powers_db, dtype=float) / 10), fading)


DEFAULT_PROFILE = ChannelProfile.from_db([0, 1, 2], [0.0, -3.0, -6.0])
FLAT_PROFILE = ChannelProfile([0], [1.0])


def parse_profile(text: str, fading=Fading.RAYLEIGH_BLOCK, source: str = "<string>") -> ChannelProfile:
    """Parse ``delay_samples power_db`` lines; ``#`` starts a comment.

    Taps quantised onto the same sample are merged by adding their linear
    powers.
    """
    taps: dict[int, float] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) != 2:
            raise ConfigError(f"{source}:{lineno}: expected 'delay_samples power_db'")
        try:
            delay = int(round(float(parts[0])))
            power = 10 ** (float(parts[1]) / 10)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from exc
        taps[delay] = taps.get(delay, 0.0) + power
    if not taps:
        raise ConfigError(f"{source}: profile has no taps")
    delays = sorted(taps)
    try:
        return ChannelProfile(delays, [taps[d] for d in delays], fading)
    except RejectedInputError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_profile(path, fading=Fading.RAYLEIGH_BLOCK) -> ChannelProfile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read channel profile {path}: {exc}") from exc
    return parse_profile(text, fading, source=str(path))


def builtin_profile(name: str, fading=Fading.RAYLEIGH_BLOCK) -> ChannelProfile:
    """``exp3`` (3-tap exponential), ``flat``, or a shipped profile file stem."""
    if name == "exp3":
        return ChannelProfile(DEFAULT_PROFILE.delays, DEFAULT_PROFILE.powers, fading)
    if name == "flat":
        return ChannelProfile([0], [1.0], fading)
    asset = resources.files("pi2sim.data").joinpath(f"{name}.txt")
    if not asset.is_file():
        raise ConfigError(f"unknown channel profile '{name}'")
    return parse_profile(asset.read_text(), fading, source=f"pi2sim.data/{name}.txt")


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """Tap gains indexed ``[port, rx, tap]`` plus the delays they sit at."""

    gains: np.ndarray
    delays: np.ndarray

    def __post_init__(self):
        g = np.array(self.gains, dtype=np.complex128, copy=True)
        if g.ndim != 3:
            raise RejectedInputError("gains must be indexed [port, rx, tap]")
        d = np.asarray(self.delays, dtype=np.int64).reshape(-1)
        if g.shape[2] != d.size:
            raise RejectedInputError("number of taps differs from number of delays")
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)
        object.__setattr__(self, "delays", d)

    @property
    def ports(self) -> int:
        return self.gains.shape[0]

    @property
    def rx(self) -> int:
        return self.gains.shape[1]

    def impulse(self, port: int, rx: int, length: int | None = None) -> np.ndarray:
        n = int(self.delays[-1]) + 1 if length is None else length
        h = np.zeros(n, dtype=np.complex128)
        np.add.at(h, self.delays, self.gains[port, rx])
        return h


def draw_realization(
    profile: ChannelProfile, ports: int, rx: int, rng: np.random.Generator
) -> ChannelRealization:
    """Draw tap gains for ``ports`` x ``rx`` links."""
    if ports not in (1, 2):
        raise RejectedInputError(f"ports must be 1 or 2, got {ports}")
    if rx not in (1, 2, 4):
        raise RejectedInputError(f"rx antennas must be 1, 2 or 4, got {rx}")
    shape = (ports, rx, profile.n_taps)
    amp = np.sqrt(profile.powers)
    if profile.fading is Fading.STATIC:
        gains = np.broadcast_to(amp, shape).astype(np.complex128)
    else:
        z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        gains = z * (amp / math.sqrt(2))
    return ChannelRealization(gains, profile.delays)


def noise_std(ref_tone_power: float, snr_db: float, N: int) -> float:
    """Per-sample time-domain noise std for a given per-tone SNR."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    # unnormalized N-point DFT scales white noise variance by N
    return math.sqrt(ref_tone_power / (10 ** (snr_db / 10)) / N)


def apply(
    signals,
    real: ChannelRealization,
    snr_db: float,
    rng: np.random.Generator | None,
    *,
    N: int,
    cp_len: int,
    ref_tone_power: float | None = None,
    noise: np.ndarray | None = None,
) -> list[ComplexSignal]:
    """Pass one CP-extended symbol per port through the channel.

    Parameters
    ----------
    signals : ComplexSignal or sequence of ComplexSignal
        Time-domain symbols, one per transmitting port (``N + cp_len`` each).
    real : ChannelRealization
    snr_db : float
        ``inf`` disables noise.
    rng : Generator
        Noise source; may be ``None`` only when ``snr_db`` is ``inf``.
    ref_tone_power : float, optional
        Mean power per occupied tone that defines 0 dB SNR. Defaults to the
        power of the first port's symbol spread over its occupied tones.
    noise : ndarray, optional
        Unit-variance complex noise indexed ``[rx, sample]`` to use instead of
        drawing from ``rng``. Lets a caller impose structure on the noise,
        e.g. mirrored antennas.

    Returns
    -------
    list of ComplexSignal
        One received symbol per rx antenna.
    """
    if isinstance(signals, ComplexSignal):
        signals = [signals]
    if len(signals) > real.ports:
        raise RejectedInputError(f"{len(signals)} ports transmit but realization has {real.ports}")
    if int(real.delays[-1]) >= max(cp_len, 1):
        raise RejectedInputError(
            f"max tap delay {int(real.delays[-1])} not below CP length {cp_len}"
        )
    L = N + cp_len
    for s in signals:
        s.require(Domain.TIME, "channel input")
        if s.length != L:
            raise RejectedInputError(f"symbol length {s.length}, expected N + cp_len = {L}")
    if ref_tone_power is None:
        body = np.fft.fft(signals[0].samples[cp_len:])
        p = np.abs(body) ** 2
        occupied = p > 1e-12 * p.max()
        ref_tone_power = float(p[occupied].mean())
    sigma = noise_std(ref_tone_power, snr_db, N)
    if noise is not None:
        noise = np.asarray(noise, dtype=np.complex128)
        if noise.shape != (real.rx, L):
            raise RejectedInputError(f"noise must have shape {(real.rx, L)}, got {noise.shape}")
    elif sigma > 0 and rng is None:
        raise RejectedInputError("a noise generator is required at finite SNR")
    out = []
    for a in range(real.rx):
        y = np.zeros(L, dtype=np.complex128)
        for p, s in enumerate(signals):
            for d, g in zip(real.delays, real.gains[p, a]):
                y[d:] += g * s.samples[: L - d]
        if sigma > 0 and noise is not None:
            y = y + sigma * noise[a]
        elif sigma > 0:
            y = y + sigma * (rng.standard_normal(L) + 1j * rng.standard_normal(L)) / math.sqrt(2)
        out.append(ComplexSignal(y, Domain.TIME))
    return out


def frequency_response(real: ChannelRealization, port: int, rx: int, bins: np.ndarray, N: int) -> np.ndarray:
    """``H(k) = sum_l g_l exp(-2j*pi*k*d_l/N)`` at absolute IFFT bins."""
    k = np.asarray(bins)[:, None]
    return np.exp(-2j * np.pi * k * real.delays[None, :] / N) @ real.gains[port, rx]
