import math

import numpy as np
import pytest

from pi2sim import channel, dsp, rx, tx
from pi2sim.errors import RejectedInputError
from pi2sim.rx import DenoiseWindow
from pi2sim.tx import THREE_TAP, DmrsResource, Method, WaveformConfig


class TestDenoiseWindow:
    def test_mask(self):
        np.testing.assert_array_equal(DenoiseWindow(2, 1).mask(5), [1, 1, 0, 0, 1])

    def test_for_config(self):
        assert DenoiseWindow.for_config(WaveformConfig(24, 32, cp_len=4)).cutoff == 3
        assert DenoiseWindow.for_config(WaveformConfig(24, 32, cp_len=4), 3).cutoff == 5
        assert DenoiseWindow.for_config(WaveformConfig(12, 12, cp_len=20)).cutoff == 6

    def test_invalid(self):
        with pytest.raises(RejectedInputError):
            DenoiseWindow(0)
        with pytest.raises(RejectedInputError):
            DenoiseWindow(4, 3).mask(6)


class TestEstimate:
    @pytest.mark.parametrize("method", list(Method))
    def test_flat_unit_channel_recovers_filter(self, rng, method):
        bits = rng.integers(0, 2, 12)
        c = WaveformConfig(24, 24, method=method)
        for port in (0, 1):
            res = DmrsResource(port, bits)
            est = rx.estimate_port(tx.dmrs_tones(res, THREE_TAP, c), res)
            np.testing.assert_allclose(est.h_eff[:3], THREE_TAP.taps, atol=1e-10)
            np.testing.assert_allclose(est.h_eff[3:], 0, atol=1e-10)
            np.testing.assert_allclose(est.fullband, THREE_TAP.response(24), atol=1e-10)

    def test_null_pilot_rejected(self):
        res = DmrsResource(0, [0, 0, 0, 0])
        with pytest.raises(RejectedInputError, match="null"):
            rx.estimate_port(dsp.freq_signal(np.ones(8)), res)

    def test_domain_and_size(self):
        res = DmrsResource(0, [1, 0, 1])
        with pytest.raises(RejectedInputError):
            rx.estimate_port(dsp.time_signal(np.ones(6)), res)
        with pytest.raises(RejectedInputError, match="comb"):
            rx.estimate_port(dsp.freq_signal(np.ones(8)), res)


class TestMmse:
    def test_single_stream_zero_forcing(self, rng):
        H = rng.standard_normal((8, 2, 1)) + 1j * rng.standard_normal((8, 2, 1))
        x = rng.standard_normal(8) + 0j
        y = [H[:, a, 0] * x for a in range(2)]
        np.testing.assert_allclose(rx.mmse_equalize(y, H, 0.0)[0].samples, x, atol=1e-10)

    def test_two_stream_matches_matrix_inverse(self, rng):
        K = 6
        H = rng.standard_normal((K, 2, 2)) + 1j * rng.standard_normal((K, 2, 2))
        Y = rng.standard_normal((2, K)) + 1j * rng.standard_normal((2, K))
        s2 = 0.3
        got = np.array([s.samples for s in rx.mmse_equalize(list(Y), H, s2)])
        for k in range(K):
            h = H[k]
            ref = np.linalg.solve(h.conj().T @ h + s2 * np.eye(2), h.conj().T @ Y[:, k])
            np.testing.assert_allclose(got[:, k], ref, atol=1e-10)

    def test_error_variance(self, rng):
        H = rng.standard_normal((4, 2, 2)) + 1j * rng.standard_normal((4, 2, 2))
        s2 = 0.5
        ev = rx.mmse_error_variance(H, s2)
        ref = np.mean([s2 * np.real(np.diag(np.linalg.inv(h.conj().T @ h + s2 * np.eye(2)))) for h in H], axis=0)
        np.testing.assert_allclose(ev, ref)

    def test_infinite_noise_gives_zero(self):
        out = rx.mmse_equalize([np.ones(3)], np.ones((3, 1, 1)), math.inf)
        np.testing.assert_array_equal(out[0].samples, 0)

    def test_singular_zero_forcing_rejected(self):
        with pytest.raises(RejectedInputError):
            rx.mmse_equalize([np.ones(2)], np.zeros((2, 1, 1)), 0.0)
        with pytest.raises(RejectedInputError):
            rx.mmse_equalize([np.ones(2), np.ones(2)], np.ones((2, 2, 2)), 0.0)

    def test_too_few_antennas(self):
        with pytest.raises(RejectedInputError):
            rx.mmse_equalize([np.ones(2)], np.ones((2, 1, 2)), 0.1)


class TestDemod:
    def test_round_trip_with_known_filter(self, rng):
        bits = rng.integers(0, 2, 24)
        c = WaveformConfig(24, 24)
        t = tx.data_tones(bits, THREE_TAP, c)
        d = rx.despread_demod(t, shaping=THREE_TAP)
        np.testing.assert_array_equal(d.bits, bits)
        assert np.all(np.sign(d.llr) == 1 - 2 * bits)

    def test_llr_scale(self):
        bits = np.zeros(4, dtype=int)
        t = tx.data_tones(bits, tx.ShapingFilter.identity(), WaveformConfig(4, 4))
        d = rx.despread_demod(t, noise_var=0.5)
        np.testing.assert_allclose(d.llr, 2 * 1.0 / 0.5)


class TestEndToEnd:
    def test_noiseless_multipath_two_antennas(self, rng):
        M = N = 24
        cp = 4
        c = WaveformConfig(M, N, cp_len=cp)
        real = channel.draw_realization(channel.DEFAULT_PROFILE, 1, 2, rng)
        res = DmrsResource(0, rng.integers(0, 2, 12))
        while min(abs(res.pilot())) < 0.3:
            res = DmrsResource(0, rng.integers(0, 2, 12))
        bits = rng.integers(0, 2, M)
        yd = channel.apply(tx.tx_dmrs(res, THREE_TAP, c), real, math.inf, None, N=N, cp_len=cp)
        yx = channel.apply(tx.tx_data(bits, THREE_TAP, c), real, math.inf, None, N=N, cp_len=cp)
        win = DenoiseWindow.for_config(c, 3)
        est = [[rx.estimate_port(y, res, win)] for y in rx.front_end(yd, c)]
        xh = rx.mmse_equalize(rx.front_end(yx, c), est, 0.0)
        np.testing.assert_array_equal(rx.despread_demod(xh[0]).bits, bits)
