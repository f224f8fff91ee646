"""
Modulation symbols and reference sequences.

pi/2-BPSK maps bit ``b`` at index ``m`` to
``exp(j*pi/4) * exp(j*(m mod 2)*pi/2) * (1 - 2b)``.  DMRS bit sequences come
from plain-text sequence tables; only a single length-6 sequence is built in.
Zadoff-Chu sequences serve as the legacy comparison baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .dsp import ComplexSignal, Domain, pi2_rotation
from .errors import ConfigError, RejectedInputError

__all__ = [
    "BitSequence",
    "ZcSpec",
    "BUILTIN_DMRS",
    "bpsk_map",
    "pi_half_bpsk",
    "parse_sequence_table",
    "load_sequence_table",
    "load_dmrs_bits",
    "zc_sequence",
    "largest_prime_below",
    "nr_zc_root",
    "periodic_correlation",
    "flatness_penalty",
    "search_flat_bits",
]


@dataclass(frozen=True, eq=False)
class BitSequence:
    bits: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.bits).reshape(-1)
        if raw.size < 1:
            raise RejectedInputError("a bit sequence needs at least one bit")
        if not np.all((raw == 0) | (raw == 1)):
            raise RejectedInputError(f"bits must be 0 or 1, got {raw.tolist()}")
        arr = raw.astype(np.int8)
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @property
    def length(self) -> int:
        return self.bits.size

    def __len__(self) -> int:
        return self.bits.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitSequence):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash(self.bits.tobytes())

    def __repr__(self) -> str:
        return f"BitSequence({''.join(map(str, self.bits.tolist()))})"


# length -> rows; index = row number
BUILTIN_DMRS: dict[int, tuple[tuple[int, ...], ...]] = {
    6: ((1, 1, 1, 0, 1, 1),),
}


def bpsk_map(bits) -> np.ndarray:
    """``0 -> +1``, ``1 -> -1``."""
    b = bits.bits if isinstance(bits, BitSequence) else np.asarray(bits)
    return 1.0 - 2.0 * b.astype(np.float64)


def pi_half_bpsk(bits) -> ComplexSignal:
    """pi/2-BPSK symbols for a bit sequence (time domain)."""
    if not isinstance(bits, BitSequence):
        bits = BitSequence(bits)
    return ComplexSignal(pi2_rotation(bits.length) * bpsk_map(bits), Domain.TIME)


def parse_sequence_table(text: str, source: str = "<string>") -> list[tuple[int, ...]]:
    """Parse a sequence table: one sequence per line of 0/1 digits.

    ``#`` starts a comment. Blank lines are skipped and do not consume an
    index.
    """
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        tokens = body.split()
        if any(t not in ("0", "1") for t in tokens):
            raise ConfigError(f"{source}:{lineno}: expected whitespace-separated 0/1 digits")
        rows.append(tuple(int(t) for t in tokens))
    return rows


@lru_cache(maxsize=32)
def _read_table(path: str) -> tuple[tuple[int, ...], ...]:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read sequence table {path}: {exc}") from exc
    return tuple(parse_sequence_table(text, source=path))


def load_sequence_table(path) -> tuple[tuple[int, ...], ...]:
    return _read_table(str(Path(path).resolve()))


def load_dmrs_bits(length: int, index: int = 0, source=None) -> BitSequence:
    """Look up a DMRS bit sequence.

    Parameters
    ----------
    length : int
        Sequence length (``M/2``).
    index : int
        Row among the sequences of this length, counted in file order.
    source : path-like or None
        Sequence-table file. ``None`` or ``"builtin"`` selects the built-in set.
    """
    if source is None or source == "builtin":
        rows = BUILTIN_DMRS.get(length, ())
        where = "built-in table"
    else:
        rows = tuple(r for r in load_sequence_table(source) if len(r) == length)
        where = str(source)
    if not rows:
        raise ConfigError(f"{where}: no sequences of length {length}")
    if not 0 <= index < len(rows):
        raise ConfigError(
            f"{where}: index {index} out of range for length {length} ({len(rows)} rows)"
        )
    return BitSequence(rows[index])


@dataclass(frozen=True)
class ZcSpec:
    n_zc: int
    root: int
    shift: int = 0

    def __post_init__(self):
        if self.n_zc < 1:
            raise RejectedInputError(f"ZC length must be positive, got {self.n_zc}")
        if math.gcd(self.root, self.n_zc) != 1:
            raise RejectedInputError(f"ZC root {self.root} is not coprime with {self.n_zc}")
        if not 0 <= self.shift < self.n_zc:
            raise RejectedInputError(f"ZC shift {self.shift} outside [0, {self.n_zc})")


def zc_sequence(spec: ZcSpec, length: int | None = None) -> ComplexSignal:
    """Zadoff-Chu sequence ``exp(-j*pi*q*m*(m+1)/N_zc)``.

    The cyclic shift rotates the sequence: ``out(m) = x((m + shift) mod N_zc)``.
    If ``length`` exceeds ``N_zc`` the sequence is cyclically extended, the way
    38.211 builds low-PAPR type-1 sequences from the largest prime below the
    allocation length.
    """
    n = spec.n_zc
    m = (np.arange(n) + spec.shift) % n
    # q*m*(m+1) is even when n is odd; reduce mod 2n to keep the phase exact
    phase = (spec.root * m * (m + 1)) % (2 * n)
    x = np.exp(-1j * np.pi * phase / n)
    if length is not None:
        if length < 1:
            raise RejectedInputError(f"ZC output length must be positive, got {length}")
        x = x[np.arange(length) % n]
    return ComplexSignal(x, Domain.TIME)


def largest_prime_below(n: int) -> int:
    """Largest prime strictly below ``n`` (or ``n`` itself if ``n`` < 3)."""
    for c in range(n - 1, 1, -1):
        if all(c % d for d in range(2, int(c**0.5) + 1)):
            return c
    raise RejectedInputError(f"no prime below {n}")


def nr_zc_root(n_zc: int, group: int, base: int = 0) -> int:
    """Root index for sequence group ``group`` (0..29) and base ``base`` (0/1)."""
    qbar = n_zc * (group + 1) / 31
    return int(math.floor(qbar + 0.5)) + base * (-1) ** int(math.floor(2 * qbar))


def periodic_correlation(a: ComplexSignal, b: ComplexSignal) -> ComplexSignal:
    """``c(tau) = sum_n a(n) * conj(b((n + tau) mod L))``."""
    if a.length != b.length:
        raise RejectedInputError(f"length mismatch: {a.length} vs {b.length}")
    L = a.length
    n = np.arange(L)
    c = np.array([np.sum(a.samples * np.conj(b.samples[(n + tau) % L])) for tau in range(L)])
    return ComplexSignal(c, a.domain)


def flatness_penalty(bits) -> float:
    """Noise-enhancement factor of a pi/2-BPSK pilot under LS estimation.

    Returns ``mean(1/|P|^2) * mean(|P|^2)`` where ``P`` is the DFT of the
    rotated sequence. Equals 1 for a perfectly flat spectrum; ``inf`` if any
    tone is null.
    """
    P = np.abs(np.fft.fft(pi_half_bpsk(bits).samples)) ** 2
    if np.any(P < 1e-12):
        return math.inf
    return float(np.mean(1.0 / P) * np.mean(P))


def search_flat_bits(length: int, *, restarts: int = 64, seed: int = 0) -> BitSequence:
    """Find a pi/2-BPSK DMRS bit sequence with a flat spectrum.

    Multi-start steepest-descent over single bit flips, minimising
    ``flatness_penalty``. Deterministic for a given ``seed``. Used where no
    sequence table is configured for the requested length.
    """
    if length < 2:
        raise RejectedInputError("search needs length >= 2")
    rng = np.random.default_rng(seed)
    rot = pi2_rotation(length)
    flips = np.eye(length, dtype=np.int8)

    def cost(batch):
        P = np.abs(np.fft.fft(rot * (1.0 - 2.0 * batch), axis=-1)) ** 2
        with np.errstate(divide="ignore"):
            return np.where(P.min(-1) < 1e-12, np.inf, np.mean(1.0 / P, -1) * np.mean(P, -1))

    best_bits, best_cost = None, np.inf
    for _ in range(restarts):
        b = rng.integers(0, 2, length).astype(np.int8)
        c = cost(b)
        while True:
            cand = b ^ flips
            cc = cost(cand)
            i = int(np.argmin(cc))
            if cc[i] >= c:
                break
            b, c = cand[i], cc[i]
        if c < best_cost:
            best_bits, best_cost = b.copy(), c
    return BitSequence(best_bits)
