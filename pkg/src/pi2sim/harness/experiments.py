"""
Seeded Monte-Carlo experiments.

Every trial draws from its own generator,
``default_rng(SeedSequence(seed, spawn_key=(point, trial)))``, where
``point`` indexes the SNR grid (0 for PAPR). Trials therefore do not depend on
each other or on how they are split across worker processes, and results are
assembled in trial order before any reduction.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import channel, dsp, sequences
from ..errors import ConfigError
from ..rx import despread_demod, estimate_port, front_end, mmse_equalize, mmse_error_variance
from ..sequences import BitSequence, ZcSpec
from ..tx import (
    DmrsResource,
    PilotResource,
    WaveformConfig,
    tone_indices,
    tx_data,
    tx_dmrs,
    tx_reference,
)
from .config import ExperimentConfig
from .emit import emit
from .golden import golden_passes, golden_rows
from .metrics import BlerRecord, ccdf, compute_papr

__all__ = ["ExperimentResult", "trial_rng", "run_experiment", "output_path", "OUT_ENV"]

OUT_ENV = "PI2SIM_OUT"
# random DMRS for estimation: weakest comb tone power relative to the mean
MIN_TONE_RATIO = 0.1


def trial_rng(seed: int, point: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(point, trial)))


@dataclass
class ExperimentResult:
    kind: str
    records: list[dict]
    meta: dict
    samples: dict = field(default_factory=dict)
    passed: bool = True
    path: Path | None = None


# --------------------------------------------------------------------------
# reference signals


def _fixed_bits(cfg: ExperimentConfig) -> BitSequence | None:
    half = cfg.waveform.half
    if cfg.dmrs == "random" or cfg.dmrs == "zc":
        return None
    if cfg.dmrs == "search":
        return sequences.search_flat_bits(half, seed=cfg.dmrs_index)
    return sequences.load_dmrs_bits(half, cfg.dmrs_index, cfg.dmrs)


def _zc_pilot(length: int, group: int, base: int, domain: str) -> np.ndarray:
    n_zc = sequences.largest_prime_below(length) if length > 3 else length
    root = sequences.nr_zc_root(n_zc, group, base) % n_zc or 1
    z = sequences.zc_sequence(ZcSpec(n_zc, root), length).samples
    return np.fft.fft(z) if domain == "time" else z


def _reference(cfg: ExperimentConfig, bits, port: int, rng, usable: bool = False) -> DmrsResource | PilotResource:
    half = cfg.waveform.half
    if cfg.dmrs == "zc":
        if rng is None:
            group, base = cfg.dmrs_index % 30, 0
        else:
            group = int(rng.integers(0, 30))
            base = int(rng.integers(0, 2)) if half >= 72 else 0
        return PilotResource(port, _zc_pilot(half, group, base, cfg.zc_domain))
    if bits is None:
        bits = BitSequence(rng.integers(0, 2, half))
        if usable:
            # redraw sequences whose comb has a spectral near-null
            while _min_tone_ratio(bits) < MIN_TONE_RATIO:
                bits = BitSequence(rng.integers(0, 2, half))
    return DmrsResource(port, bits)


def _min_tone_ratio(bits) -> float:
    p = np.abs(np.fft.fft(sequences.pi_half_bpsk(bits).samples)) ** 2
    return float(p.min() / p.mean())


def _port_refs(cfg: ExperimentConfig, bits, rng) -> list:
    """Both ports carry the same sequence on their own comb."""
    seq_rng = None if bits is not None and cfg.dmrs != "zc" else rng
    ref0 = _reference(cfg, bits, 0, seq_rng, usable=True)
    if isinstance(ref0, PilotResource):
        return [ref0, PilotResource(1, ref0.values)]
    return [ref0, DmrsResource(1, ref0.bits)]


def _tx_ref(res, cfg: ExperimentConfig):
    if isinstance(res, PilotResource):
        return tx_reference(res.values, res.port, cfg.shaping, cfg.waveform)
    return tx_dmrs(res, cfg.shaping, cfg.waveform)


# --------------------------------------------------------------------------
# per-trial bodies


def _papr_trial(cfg: ExperimentConfig, bits, trial: int) -> float:
    rng = trial_rng(cfg.seed, 0, trial)
    wf = cfg.waveform
    if cfg.signal == "data":
        sig = tx_data(rng.integers(0, 2, wf.M), cfg.shaping, wf)
    else:
        sig = _tx_ref(_reference(cfg, bits, cfg.port, rng), cfg)
    return compute_papr(sig, cfg.oversample, wf.cp_len)


def _comb_swap(noise: np.ndarray, wf: WaveformConfig) -> np.ndarray:
    """Exchange the noise on relative tones 2k and 2k+1 of the allocation."""
    body = np.fft.fft(noise[wf.cp_len :])
    bins = tone_indices(wf)
    even, odd = bins[0::2], bins[1::2]
    body[even], body[odd] = body[odd].copy(), body[even].copy()
    return np.concatenate([noise[: wf.cp_len], np.fft.ifft(body)])


def _mirrored(real: channel.ChannelRealization, wf: WaveformConfig, rng):
    """Antenna 1 sees antenna 0's links with the ports exchanged."""
    g = np.array(real.gains)
    g[0, 1], g[1, 1] = g[1, 0], g[0, 0]
    L = wf.symbol_len
    n0 = (rng.standard_normal(L) + 1j * rng.standard_normal(L)) / math.sqrt(2)
    n1 = (rng.standard_normal(L) + 1j * rng.standard_normal(L)) / math.sqrt(2)
    data_noise = np.stack([n0, n0])
    dmrs_noise = np.stack([n1, _comb_swap(n1, wf)])
    return channel.ChannelRealization(g, real.delays), dmrs_noise, data_noise


def _bler_trial(cfg: ExperimentConfig, bits, point: int, trial: int) -> np.ndarray:
    """Returns ``[port, (block_error, bit_errors)]``."""
    rng = trial_rng(cfg.seed, point, trial)
    snr = cfg.snr_db[point]
    wf = cfg.waveform
    ports = list(range(cfg.streams)) if cfg.streams == 2 else [cfg.port]
    real = channel.draw_realization(cfg.profile, 2, cfg.rx, rng)
    dmrs_noise = data_noise = None
    if cfg.mirror:
        real, dmrs_noise, data_noise = _mirrored(real, wf, rng)
    payload = rng.integers(0, 2, (2, wf.M))
    if cfg.mirror:
        payload[1] = payload[0]
    refs = _port_refs(cfg, bits, rng)
    gains = np.zeros_like(real.gains)
    for p in ports:
        gains[p] = real.gains[p]
    real = channel.ChannelRealization(gains, real.delays)
    dmrs_sig = [_tx_ref(refs[p], cfg) if p in ports else None for p in (0, 1)]
    data_sig = [tx_data(payload[p], cfg.shaping, wf) if p in ports else None for p in (0, 1)]
    silent = dsp.time_signal(np.zeros(wf.symbol_len))
    dmrs_sig = [s if s is not None else silent for s in dmrs_sig]
    data_sig = [s if s is not None else silent for s in data_sig]
    kw = dict(N=wf.N, cp_len=wf.cp_len, ref_tone_power=float(wf.M))
    y_dmrs = channel.apply(dmrs_sig, real, snr, rng, noise=dmrs_noise, **kw)
    y_data = channel.apply(data_sig, real, snr, rng, noise=data_noise, **kw)
    Yd, Yx = front_end(y_dmrs, wf), front_end(y_data, wf)
    win = cfg.effective_window()
    est = [[estimate_port(Yd[a], refs[p], win) for p in ports] for a in range(cfg.rx)]
    nv = 0.0 if math.isinf(snr) else 10 ** (-snr / 10)
    xhat = mmse_equalize(Yx, est, nv)
    ev = mmse_error_variance(est, nv) if nv > 0 else np.ones(len(ports))
    out = np.zeros((2, 2), dtype=np.int64)
    for s, p in enumerate(ports):
        dem = despread_demod(xhat[s], noise_var=float(ev[s]))
        nerr = int(np.count_nonzero(dem.bits != payload[p]))
        out[p] = (nerr > 0, nerr)
    return out


def _chanest_trial(cfg: ExperimentConfig, bits, point: int, trial: int) -> np.ndarray:
    """Returns the squared fullband error per port, averaged over antennas."""
    rng = trial_rng(cfg.seed, point, trial)
    snr = cfg.snr_db[point]
    wf = cfg.waveform
    ports = [0, 1] if cfg.streams == 2 else [cfg.port]
    real = channel.draw_realization(cfg.profile, 2, cfg.rx, rng)
    refs = _port_refs(cfg, bits, rng)
    sigs = [_tx_ref(refs[p], cfg) for p in (0, 1)]
    if cfg.streams == 1:
        sigs[1 - cfg.port] = sigs[1 - cfg.port].with_samples(np.zeros(wf.symbol_len))
    ref_power = float(np.mean(np.abs(refs[0].pilot()) ** 2))
    y = channel.apply(sigs, real, snr, rng, N=wf.N, cp_len=wf.cp_len, ref_tone_power=ref_power)
    Y = front_end(y, wf)
    W = cfg.shaping.response(wf.M)
    bins = tone_indices(wf)
    win = cfg.effective_window()
    out = np.zeros(2)
    for p in ports:
        se = 0.0
        for a in range(cfg.rx):
            est = estimate_port(Y[a], refs[p], win)
            truth = W * channel.frequency_response(real, p, a, bins, wf.N)
            se += float(np.mean(np.abs(est.fullband - truth) ** 2))
        out[p] = se / cfg.rx
    return out


# --------------------------------------------------------------------------
# driver


def _chunk(kind: str, cfg: ExperimentConfig, bits, point: int, lo: int, hi: int):
    if kind == "papr":
        return [_papr_trial(cfg, bits, t) for t in range(lo, hi)]
    if kind == "bler":
        return [_bler_trial(cfg, bits, point, t) for t in range(lo, hi)]
    return [_chanest_trial(cfg, bits, point, t) for t in range(lo, hi)]


def _run_trials(kind: str, cfg: ExperimentConfig, bits, point: int) -> list:
    if cfg.workers == 1:
        return _chunk(kind, cfg, bits, point, 0, cfg.trials)
    step = max(1, math.ceil(cfg.trials / (4 * cfg.workers)))
    bounds = [(lo, min(lo + step, cfg.trials)) for lo in range(0, cfg.trials, step)]
    with ProcessPoolExecutor(cfg.workers) as pool:
        futs = [pool.submit(_chunk, kind, cfg, bits, point, lo, hi) for lo, hi in bounds]
        out = []
        for f in futs:
            out.extend(f.result())
    return out


def _meta(cfg: ExperimentConfig) -> dict:
    wf = cfg.waveform
    meta = {
        "kind": cfg.kind,
        "seed": str(cfg.seed),
        "trials": str(cfg.trials),
        "M": str(wf.M),
        "N": str(wf.N),
        "cp_len": str(wf.cp_len),
        "method": wf.method.value,
        "mapping": wf.mapping.value,
        "filter": " ".join(repr(float(t.real)) for t in cfg.shaping.taps),
        "dmrs": cfg.dmrs,
    }
    if cfg.kind == "papr":
        meta.update(signal=cfg.signal, port=str(cfg.port), oversample=str(cfg.oversample))
    else:
        meta.update(streams=str(cfg.streams), rx=str(cfg.rx), mirror=str(cfg.mirror).lower())
    return meta


def run_papr(cfg: ExperimentConfig) -> ExperimentResult:
    bits = _fixed_bits(cfg) if cfg.signal == "dmrs" else None
    samples = np.array(_run_trials("papr", cfg, bits, 0))
    curve = ccdf(samples, cfg.papr_grid)
    return ExperimentResult("papr", curve.records(), _meta(cfg), {"papr_db": samples, "ccdf": curve})


def run_bler(cfg: ExperimentConfig) -> ExperimentResult:
    bits = _fixed_bits(cfg)
    ports = [0, 1] if cfg.streams == 2 else [cfg.port]
    records, bit_errors = [], {}
    for i, snr in enumerate(cfg.snr_db):
        per_trial = np.array(_run_trials("bler", cfg, bits, i))
        for p in ports:
            rec = BlerRecord(float(snr), p, int(per_trial[:, p, 0].sum()), cfg.trials)
            records.append(rec.as_dict())
            bit_errors[(float(snr), p)] = int(per_trial[:, p, 1].sum())
    return ExperimentResult("bler", records, _meta(cfg), {"bit_errors": bit_errors})


def run_chanest(cfg: ExperimentConfig) -> ExperimentResult:
    bits = _fixed_bits(cfg)
    ports = [0, 1] if cfg.streams == 2 else [cfg.port]
    records = []
    for i, snr in enumerate(cfg.snr_db):
        per_trial = np.array(_run_trials("chanest", cfg, bits, i))
        for p in ports:
            records.append({"snr_db": float(snr), "port": p, "mse": math.fsum(per_trial[:, p]) / cfg.trials})
    return ExperimentResult("chanest", records, _meta(cfg))


def run_golden(cfg: ExperimentConfig | None = None) -> ExperimentResult:
    rows = golden_rows()
    return ExperimentResult("golden", rows, {"kind": "golden"}, passed=golden_passes(rows))


_RUNNERS = {"papr": run_papr, "bler": run_bler, "chanest": run_chanest, "golden": run_golden}


def output_path(cfg: ExperimentConfig, out_dir=None) -> Path:
    """``--out`` beats ``$PI2SIM_OUT`` beats the config's ``output``."""
    name = f"{cfg.kind}.{cfg.fmt}"
    if out_dir is not None:
        return Path(out_dir) / name
    if os.environ.get(OUT_ENV):
        return Path(os.environ[OUT_ENV]) / name
    if cfg.output:
        p = Path(cfg.output)
        return p if p.suffix else p / name
    return Path(name)


def run_experiment(cfg: ExperimentConfig, *, write: bool = True, out_dir=None) -> ExperimentResult:
    """Run one configured experiment and (optionally) write its result file.

    The file is written only after all trials complete.
    """
    if cfg.kind not in _RUNNERS:
        raise ConfigError(f"kind: unknown experiment '{cfg.kind}'")
    result = _RUNNERS[cfg.kind](cfg)
    if write:
        result.path = emit(result.kind, result.records, output_path(cfg, out_dir), cfg.fmt, result.meta)
    return result
