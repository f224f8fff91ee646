"""
Acceptance gate. Each test records one PASS/FAIL line that is echoed in the
terminal summary. Tolerances are fixed here and must not be loosened.
"""

import math
import os
from dataclasses import replace

import numpy as np
import pytest

import conftest
from pi2sim import channel, dsp, rx, sequences, tx
from pi2sim.harness import ccdf_point, parse_config, run_experiment
from pi2sim.harness.golden import CIR, DMRS_TONES, GOLDEN_BITS, golden_rows
from pi2sim.rx import DenoiseWindow
from pi2sim.tx import THREE_TAP, TWO_TAP, DmrsResource, Method, WaveformConfig

TOL_TONES = 1e-3
TOL_CIR = 1e-10
TOL_EQUIV = 1e-9
TOL_PAPR_PORT = 1e-9
GAP_UNSHAPED_ZC = (2.8, 0.5)
GAP_SHAPED_ZC = (2.0, 0.5)
DATA_PAPR_MAX = 2.5
TOL_EXACT = 1e-9
MSE_GAP_DB = 0.5
Z_MIN_DEVIATION = 0.01
CCDF_LEVEL = 1e-3

WORKERS = max(2, min(4, os.cpu_count() or 1))


def record(crit, ok, detail):
    conftest.ACCEPTANCE.append(f"{'PASS' if ok else 'FAIL'}  {crit:<34} {detail}")
    return ok


# ---------------------------------------------------------------- 1 golden


class TestGoldenVectors:
    def test_1a_dmrs_tones(self):
        rows = [r for r in golden_rows() if r["table"].startswith("tones")]
        worst = max(rows, key=lambda r: r["abs_err"])
        bad = sorted({(r["table"], r["index"]) for r in rows if r["abs_err"] > TOL_TONES})
        ok = record(
            "1a golden DMRS tones",
            not bad,
            f"max err {worst['abs_err']:.3g} at {worst['table']}[{worst['index']}]; "
            f"{len(bad)}/{len(rows)} entries > {TOL_TONES}",
        )
        assert ok, f"entries over tolerance: {bad}"

    def test_1b_cir(self):
        rows = [r for r in golden_rows() if r["table"].startswith("cir")]
        err = max(r["abs_err"] for r in rows)
        assert record("1b golden h_eff", err <= TOL_CIR, f"max err {err:.3g} (tol {TOL_CIR})")

    def test_printed_outliers_are_transcription_slips(self):
        """The two mismatching tones disagree with closed-form values by digit slips.

        Port 0, method 2: tone 2k is ``DFT_6(P1 r)(k) * W_6(k)``. At k = 3 the
        sequence term is ``-sqrt(2) (2 + j)`` and ``W_6(3) = -1.56`` is real, so
        the tone has real part exactly twice its imaginary part:
        ``4.4123 + 2.2062j``, not the printed ``4.1412``. Tones k = 5 and k = 1
        are related by ``a + jb -> -b - ja``, which gives ``1.3909 + 0.3727j``
        rather than the printed ``0.3737``.
        """
        c = WaveformConfig(12, 12, method=Method.METHOD2)
        got = tx.dmrs_tones(DmrsResource(0, GOLDEN_BITS), THREE_TAP, c).samples
        r = np.fft.fft(sequences.pi_half_bpsk(GOLDEN_BITS).samples)
        np.testing.assert_allclose(got[0::2], r * THREE_TAP.response(6), atol=1e-12)
        assert r[3] == pytest.approx(-math.sqrt(2) * (2 + 1j), abs=1e-12)
        assert THREE_TAP.response(6)[3] == pytest.approx(-1.56, abs=1e-12)
        assert got[6].real == pytest.approx(2 * got[6].imag, abs=1e-12)
        assert got[10] == pytest.approx(complex(-got[2].imag, -got[2].real), abs=1e-12)
        printed = DMRS_TONES[0]
        assert abs(printed[6] - got[6]) > 0.2
        assert abs(printed[10] - got[10]) == pytest.approx(1e-3, abs=5e-5)
        others = [k for k in range(0, 12, 2) if k not in (6, 10)]
        assert np.max(np.abs(printed[others] - got[others])) < 1e-4


# ------------------------------------------------------- 2 method equivalence


class TestMethodEquivalence:
    def test_2_methods_agree(self):
        rng = np.random.default_rng(20240601)
        worst, cases = 0.0, 0
        for _ in range(1000):
            M = int(rng.choice([12, 24, 48]))
            w = TWO_TAP if rng.integers(2) else THREE_TAP
            c1 = WaveformConfig(M, M, method=Method.METHOD1)
            c2 = c1.replace(method=Method.METHOD2)
            data = rng.integers(0, 2, M)
            worst = max(worst, np.max(np.abs(tx.data_tones(data, w, c1).samples - tx.data_tones(data, w, c2).samples)))
            bits = rng.integers(0, 2, M // 2)
            for port in (0, 1):
                res = DmrsResource(port, bits)
                d = tx.dmrs_tones(res, w, c1).samples - tx.dmrs_tones(res, w, c2).samples
                worst = max(worst, np.max(np.abs(d)))
            cases += 1
        ok = record("2 method equivalence", worst <= TOL_EQUIV, f"{cases} cases, max |diff| {worst:.3g}")
        assert ok


# ----------------------------------------------------------- 3 port identity


def _papr_cfg(**kw):
    text = "kind=papr\n" + "".join(f"{k}={v}\n" for k, v in kw.items())
    return parse_config(text)


class TestPortIdentity:
    @pytest.mark.parametrize("method", ["method1", "method2"])
    @pytest.mark.parametrize("dmrs", ["random", "zc"])
    def test_3a_papr_per_trial(self, method, dmrs):
        base = dict(M=48, N=64, trials=2000, method=method, dmrs=dmrs, seed=11)
        p0 = run_experiment(_papr_cfg(port=0, **base), write=False).samples["papr_db"]
        p1 = run_experiment(_papr_cfg(port=1, **base), write=False).samples["papr_db"]
        diff = float(np.max(np.abs(p0 - p1)))
        ok = record(f"3a papr port0==port1 {method}/{dmrs}", diff <= TOL_PAPR_PORT, f"max |diff| {diff:.3g} dB over {p0.size}")
        assert ok

    def test_3b_mirrored_two_stream_ber(self):
        cfg = parse_config(
            "kind=bler\nM=24\nN=32\ncp_len=4\nstreams=2\nrx=2\nmirror=true\nprofile=flat\n"
            "snr_db=0,4,8\ntrials=500\nseed=5\n"
        )
        res = run_experiment(cfg, write=False)
        be = res.samples["bit_errors"]
        blk = {(r["snr_db"], r["port"]): r["errors"] for r in res.records}
        same = all(be[(s, 0)] == be[(s, 1)] and blk[(s, 0)] == blk[(s, 1)] for s in cfg.snr_db)
        nonzero = sum(be.values()) > 0
        detail = ", ".join(f"{s:g} dB: {be[(s, 0)]}/{be[(s, 1)]} bit errors" for s in cfg.snr_db)
        assert record("3b mirrored BER port0==port1", same and nonzero, detail)


# ---------------------------------------------------------------- 4 PAPR gaps


@pytest.fixture(scope="module")
def papr_curves():
    n = 100_000
    common = dict(N=256, trials=n, seed=2024, workers=WORKERS)
    runs = {
        "bpsk": dict(M=192, signal="dmrs", dmrs="random", filter="3tap"),
        "zc": dict(M=192, signal="dmrs", dmrs="zc", filter="none"),
        "zc_shaped": dict(M=192, signal="dmrs", dmrs="zc", filter="3tap"),
        "data": dict(M=96, signal="data", filter="3tap"),
    }
    out = {}
    for name, kw in runs.items():
        s = run_experiment(_papr_cfg(**common, **kw), write=False).samples["papr_db"]
        out[name] = ccdf_point(s, CCDF_LEVEL)
    return out


@pytest.mark.slow
class TestPaprGaps:
    def test_4a_unshaped_zc_gap(self, papr_curves):
        gap = papr_curves["zc"] - papr_curves["bpsk"]
        target, tol = GAP_UNSHAPED_ZC
        ok = record("4a ZC - shaped pi/2 gap", abs(gap - target) <= tol, f"{gap:.2f} dB (target {target} +- {tol})")
        assert ok

    def test_4b_shaped_zc_gap(self, papr_curves):
        gap = papr_curves["zc_shaped"] - papr_curves["bpsk"]
        target, tol = GAP_SHAPED_ZC
        ok = record("4b shaped ZC - shaped pi/2 gap", abs(gap - target) <= tol, f"{gap:.2f} dB (target {target} +- {tol})")
        assert ok

    def test_4c_data_papr(self, papr_curves):
        v = papr_curves["data"]
        ok = record("4c shaped pi/2 data PAPR", v < DATA_PAPR_MAX, f"{v:.2f} dB at 1e-3 (limit {DATA_PAPR_MAX})")
        assert ok


# ------------------------------------------------------- 5 estimation exactness


class TestEstimationExactness:
    def test_5a_noiseless_multipath(self):
        rng = np.random.default_rng(77)
        M = N = 24
        cp = 4
        c = WaveformConfig(M, N, cp_len=cp)
        W = THREE_TAP.response(M)
        win = DenoiseWindow.for_config(c, THREE_TAP.length)
        worst, bit_errors, trials = 0.0, 0, 500
        for _ in range(trials):
            ntaps = int(rng.integers(1, 4))
            delays = np.sort(rng.choice(cp, ntaps, replace=False))
            prof = channel.ChannelProfile(delays, rng.uniform(0.1, 1, ntaps))
            real = channel.draw_realization(prof, 1, 1, rng)
            res = DmrsResource(0, sequences.search_flat_bits(M // 2, restarts=4, seed=int(rng.integers(1 << 31))))
            bits = rng.integers(0, 2, M)
            yd = channel.apply(tx.tx_dmrs(res, THREE_TAP, c), real, math.inf, None, N=N, cp_len=cp)
            yx = channel.apply(tx.tx_data(bits, THREE_TAP, c), real, math.inf, None, N=N, cp_len=cp)
            est = rx.estimate_port(rx.front_end(yd, c)[0], res, win)
            truth = W * channel.frequency_response(real, 0, 0, tx.tone_indices(c), N)
            worst = max(worst, float(np.max(np.abs(est.fullband - truth))))
            xh = rx.mmse_equalize(rx.front_end(yx, c), [[est]], 0.0)
            bit_errors += int(np.count_nonzero(rx.despread_demod(xh[0]).bits != bits))
        ok = worst <= TOL_EXACT and bit_errors == 0
        record("5a noiseless estimate + BER", ok, f"max |err| {worst:.3g} over {trials} channels, {bit_errors} bit errors")
        assert ok

    @pytest.mark.slow
    def test_5b_mse_vs_zc(self):
        text = "kind=chanest\nM=48\nN=64\ncp_len=4\nsnr_db=0:20:5\ntrials=10000\nseed=8\nworkers={w}\ndmrs={d}\n"
        mse = {}
        for d in ("search", "zc"):
            res = run_experiment(parse_config(text.format(w=WORKERS, d=d)), write=False)
            mse[d] = np.array([r["mse"] for r in res.records])
        gap = 10 * np.log10(mse["search"] / mse["zc"])
        worst = float(np.max(np.abs(gap)))
        ok = record("5b MSE pi/2 vs ZC", worst <= MSE_GAP_DB, "gap dB " + " ".join(f"{g:+.2f}" for g in gap))
        assert ok


# ------------------------------------------------------ 6 Z negative control


class TestZNegativeControl:
    def test_6_without_z_port1_misshaped(self):
        rng = np.random.default_rng(6)
        worst_min = math.inf
        for M in (12, 24, 48):
            c = WaveformConfig(M, M)
            bits = rng.integers(0, 2, M // 2)
            t0 = tx.dmrs_tones(DmrsResource(0, bits), THREE_TAP, c).samples[0::2]
            bad = tx.dmrs_tones(DmrsResource(1, bits), THREE_TAP, c, use_z=False).samples[1::2]
            good = tx.dmrs_tones(DmrsResource(1, bits), THREE_TAP, c).samples[1::2]
            assert np.max(np.abs(good - t0)) < 1e-9
            dev = float(np.max(np.abs(bad - t0) / np.abs(t0)))
            worst_min = min(worst_min, dev)
        ok = record("6 Z removed: port1 deviates", worst_min > Z_MIN_DEVIATION, f"min over M of max rel dev {worst_min:.3g}")
        assert ok


# --------------------------------------------------------- 7 reproducibility


class TestReproducibility:
    CASES = {
        "papr": "kind=papr\nM=48\nN=64\ntrials=300\n",
        "bler": "kind=bler\nM=24\nN=32\ncp_len=4\nstreams=2\nsnr_db=0,10\ntrials=120\n",
        "chanest": "kind=chanest\nM=24\nN=32\ncp_len=4\nsnr_db=0,10\ntrials=120\ndmrs=zc\n",
        "golden": "kind=golden\n",
    }

    @pytest.mark.parametrize("kind", list(CASES))
    def test_7_byte_identical(self, kind, tmp_path):
        cfg = parse_config(self.CASES[kind] + "seed=123456789012345\n")
        blobs = []
        for i, workers in enumerate((1, 1, 3)):
            res = run_experiment(replace(cfg, workers=workers), out_dir=tmp_path / str(i))
            blobs.append(res.path.read_bytes())
        ok = blobs[0] == blobs[1] == blobs[2]
        record(f"7 reproducible {kind}", ok, f"{len(blobs[0])} bytes, workers 1/1/3")
        assert ok
