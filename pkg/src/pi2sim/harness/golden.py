"""
Published golden vectors for the length-12 allocation and the checks that
replay them.

Setup: bits ``1 1 1 0 1 1`` on both ports, taps ``[-0.28, 1, -0.28]``,
``M = 12``, flat unit channel, no noise.
"""

from __future__ import annotations

import numpy as np

from ..dsp import freq_signal
from ..rx import estimate_port
from ..sequences import BitSequence
from ..tx import THREE_TAP, DmrsResource, Method, WaveformConfig, dmrs_tones

__all__ = ["GOLDEN_BITS", "DMRS_TONES", "CIR", "TOLERANCE", "golden_rows", "golden_passes"]

GOLDEN_BITS = BitSequence([1, 1, 1, 0, 1, 1])

# port-0 non-zero tones (even subcarriers 0, 2, ..., 10), as printed to 4
# decimals; port 1 carries the same values on the odd subcarriers
_PRINTED = np.array(
    [
        -0.6223 - 1.2445j,
        -0.3727 - 1.3909j,
        2.4728 + 0.6626j,
        4.1412 + 2.206j,
        -0.6626 - 2.4728j,
        1.3909 + 0.3737j,
    ]
)
DMRS_TONES = {
    0: np.stack([_PRINTED, np.zeros(6)], axis=1).reshape(-1),
    1: np.stack([np.zeros(6), _PRINTED], axis=1).reshape(-1),
}
CIR = np.array([-0.28, 1.0, -0.28, 0.0, 0.0, 0.0], dtype=np.complex128)
TOLERANCE = {"tones": 1e-3, "cir": 1e-10}


def golden_rows() -> list[dict]:
    """Compare every published entry against the simulator, both methods and ports."""
    rows = []
    for method in Method:
        cfg = WaveformConfig(12, 12, method=method)
        for port in (0, 1):
            res = DmrsResource(port, GOLDEN_BITS)
            got = dmrs_tones(res, THREE_TAP, cfg).samples
            rows += _rows(f"tones/{method.value}/port{port}", DMRS_TONES[port], got)
            # flat unit channel, noiseless: received tones equal transmitted
            est = estimate_port(freq_signal(got), res)
            rows += _rows(f"cir/{method.value}/port{port}", CIR, est.h_eff)
    return rows


def _rows(table, expected, got):
    return [
        {
            "table": table,
            "index": i,
            "expected_re": float(e.real),
            "expected_im": float(e.imag),
            "got_re": float(g.real),
            "got_im": float(g.imag),
            "abs_err": float(abs(g - e)),
        }
        for i, (e, g) in enumerate(zip(expected, got))
    ]


def golden_passes(rows) -> bool:
    return all(r["abs_err"] <= TOLERANCE[r["table"].split("/")[0]] for r in rows)
