"""
Flat ``key = value`` experiment configuration.

Blank lines and ``#`` comments are ignored; unknown keys are errors. Lists
are comma separated; ``start:stop:step`` expands to an inclusive range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..channel import ChannelProfile, Fading, builtin_profile, load_profile
from ..errors import ConfigError, RejectedInputError
from ..rx import DenoiseWindow
from ..tx import THREE_TAP, TWO_TAP, Normalization, ShapingFilter, WaveformConfig

__all__ = ["ExperimentConfig", "parse_config", "load_config", "KINDS"]

KINDS = ("papr", "bler", "chanest", "golden")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    waveform: WaveformConfig = field(default_factory=lambda: WaveformConfig(12, 12))
    shaping: ShapingFilter = THREE_TAP
    profile: ChannelProfile = field(
        default_factory=lambda: builtin_profile("exp3")
    )
    snr_db: tuple[float, ...] = ()
    trials: int = 1000
    seed: int = 0
    streams: int = 1
    rx: int = 2
    port: int = 0
    dmrs: str = "random"
    dmrs_index: int = 0
    signal: str = "dmrs"
    oversample: int = 4
    papr_grid: tuple[float, ...] = tuple(np.round(np.arange(0.0, 8.0001, 0.1), 10))
    window: DenoiseWindow | None = None
    zc_domain: str = "frequency"
    mirror: bool = False
    workers: int = 1
    output: str | None = None
    fmt: str = "csv"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind: expected one of {KINDS}, got '{self.kind}'")
        if self.trials < 1:
            raise ConfigError(f"trials: must be >= 1, got {self.trials}")
        if self.kind in ("bler", "chanest") and not self.snr_db:
            raise ConfigError("snr_db: must be non-empty for bler/chanest")
        if self.streams not in (1, 2):
            raise ConfigError(f"streams: must be 1 or 2, got {self.streams}")
        if self.rx not in (1, 2, 4):
            raise ConfigError(f"rx: must be 1, 2 or 4, got {self.rx}")
        if self.rx < self.streams:
            raise ConfigError(f"rx: {self.rx} antennas cannot separate {self.streams} streams")
        if self.port not in (0, 1):
            raise ConfigError(f"port: must be 0 or 1, got {self.port}")
        if self.signal not in ("dmrs", "data"):
            raise ConfigError(f"signal: must be dmrs or data, got '{self.signal}'")
        if self.zc_domain not in ("frequency", "time"):
            raise ConfigError(f"zc_domain: must be frequency or time, got '{self.zc_domain}'")
        if self.oversample < 1:
            raise ConfigError(f"oversample: must be >= 1, got {self.oversample}")
        if self.workers < 1:
            raise ConfigError(f"workers: must be >= 1, got {self.workers}")
        if self.fmt not in ("csv", "json"):
            raise ConfigError(f"format: must be csv or json, got '{self.fmt}'")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed: must fit in an unsigned 64-bit integer, got {self.seed}")
        if self.mirror and (self.streams != 2 or self.rx != 2):
            raise ConfigError("mirror: requires streams = 2 and rx = 2")
        if self.kind in ("bler", "chanest"):
            wf = self.waveform
            if self.profile.max_delay >= max(wf.cp_len, 1):
                raise ConfigError(
                    f"profile: max delay {self.profile.max_delay} must be below cp_len {wf.cp_len}"
                )
        if self.shaping.length > self.waveform.half:
            raise ConfigError(f"filter: {self.shaping.length} taps exceed M/2={self.waveform.half}")

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed)

    def effective_window(self) -> DenoiseWindow:
        return self.window or DenoiseWindow.for_config(self.waveform, self.shaping.length)


def _float_list(value: str) -> tuple[float, ...]:
    out: list[float] = []
    for part in value.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            a, b, c = (float(x) for x in part.split(":"))
            if c <= 0:
                raise ValueError("range step must be positive")
            n = int(math.floor((b - a) / c + 1e-9)) + 1
            out.extend(float(round(a + i * c, 10)) for i in range(n))
        else:
            out.append(float(part))
    return tuple(out)


def _bool(value: str) -> bool:
    v = value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got '{value}'")


def _filter(value: str) -> ShapingFilter:
    named = {"3tap": THREE_TAP, "2tap": TWO_TAP, "none": ShapingFilter.identity()}
    if value in named:
        return named[value]
    return ShapingFilter([float(t) for t in value.split(",")])


_WAVEFORM_KEYS = {
    "M": int,
    "N": int,
    "cp_len": int,
    "start_tone": int,
    "mapping": str,
    "method": str,
}
_SCALAR_KEYS = {
    "kind": str,
    "trials": int,
    "seed": int,
    "streams": int,
    "rx": int,
    "port": int,
    "dmrs": str,
    "dmrs_index": int,
    "signal": str,
    "oversample": int,
    "zc_domain": str,
    "mirror": _bool,
    "workers": int,
    "output": str,
    "format": str,
}
_OTHER_KEYS = {"filter", "normalization", "profile", "fading", "snr_db", "papr_grid",
               "window_cutoff", "window_tail"}


def parse_config(text: str, source: str = "<string>", base_dir: Path | None = None) -> ExperimentConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in _WAVEFORM_KEYS and key not in _SCALAR_KEYS and key not in _OTHER_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key '{key}'")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{key}'")
        raw[key] = value
    if "kind" not in raw:
        raise ConfigError(f"{source}: missing required key 'kind'")

    def conv(key, fn):
        try:
            return fn(raw[key])
        except (ValueError, RejectedInputError) as exc:
            raise ConfigError(f"{source}: {key}: {exc}") from exc

    kwargs: dict = {}
    wf = {k: conv(k, fn) for k, fn in _WAVEFORM_KEYS.items() if k in raw}
    if wf:
        try:
            kwargs["waveform"] = WaveformConfig(**{"M": 12, "N": 12, **wf})
        except (RejectedInputError, ValueError) as exc:
            raise ConfigError(f"{source}: waveform: {exc}") from exc
    for k, fn in _SCALAR_KEYS.items():
        if k in raw:
            kwargs["fmt" if k == "format" else k] = conv(k, fn)
    if "filter" in raw or "normalization" in raw:
        taps = conv("filter", _filter).taps if "filter" in raw else THREE_TAP.taps
        norm = conv("normalization", Normalization) if "normalization" in raw else Normalization.NONE
        kwargs["shaping"] = ShapingFilter(taps, norm)
    fading = conv("fading", Fading) if "fading" in raw else Fading.RAYLEIGH_BLOCK
    name = raw.get("profile", "exp3")
    path = Path(name)
    if base_dir is not None and not path.is_absolute():
        path = base_dir / path
    if path.suffix and path.is_file():
        kwargs["profile"] = load_profile(path, fading)
    else:
        kwargs["profile"] = builtin_profile(name, fading)
    for k in ("snr_db", "papr_grid"):
        if k in raw:
            kwargs[k] = conv(k, _float_list)
    if "window_cutoff" in raw or "window_tail" in raw:
        fc = conv("window_cutoff", int) if "window_cutoff" in raw else None
        tail = conv("window_tail", int) if "window_tail" in raw else 0
        wfc = kwargs.get("waveform", WaveformConfig(12, 12))
        try:
            kwargs["window"] = DenoiseWindow(
                fc if fc is not None else DenoiseWindow.for_config(wfc, kwargs.get("shaping", THREE_TAP).length).cutoff,
                tail,
            )
            kwargs["window"].mask(wfc.half)
        except RejectedInputError as exc:
            raise ConfigError(f"{source}: window: {exc}") from exc
    dmrs = kwargs.get("dmrs")
    if dmrs not in (None, "builtin", "random", "search", "zc"):
        p = Path(dmrs)
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        kwargs["dmrs"] = str(p)
    try:
        return ExperimentConfig(**kwargs)
    except (RejectedInputError, TypeError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return parse_config(text, source=str(p), base_dir=p.parent)


CONFIG_KEYS = tuple(_WAVEFORM_KEYS) + tuple(_SCALAR_KEYS) + tuple(sorted(_OTHER_KEYS))
