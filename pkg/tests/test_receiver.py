import math

import numpy as np
import pytest

from riclink.channel import BranchObservation, NoiseSpec, RicianParams, transmit
from riclink.errors import DegenerateChannelError
from riclink.modem import build, build_psk, build_qam
from riclink.receiver import DecisionStatistic, detect_block, detect_nearest, mrc_combine


def test_single_branch_identity():
    s = 0.3 - 0.7j
    d = mrc_combine(BranchObservation(np.array([1 + 0j]), np.array([s])))
    assert d.combined == s
    assert d.snr_scale == 1.0


def test_two_equal_branches_average_noise(rng):
    s = 1 + 1j
    n = 100_000
    w = (rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))) / math.sqrt(2)
    out = np.empty(n, complex)
    for k in range(n // 100):  # scalar API on a subset, block path on the rest
        obs = BranchObservation(np.ones(2, complex), s + w[k])
        d = mrc_combine(obs)
        assert d.combined == pytest.approx(s + (w[k, 0] + w[k, 1]) / 2, abs=1e-12)
        assert d.snr_scale == 2.0
    from riclink import kernels

    out, _ = kernels.mrc_combine(np.ones((n, 2)), s + w)
    np.testing.assert_allclose(out, s + w.mean(axis=1), atol=1e-12)
    assert np.var(out - s) == pytest.approx(0.5, rel=0.02)


def test_noiseless_random_gains(rng):
    for branches in (1, 2, 5):
        h = rng.standard_normal(branches) + 1j * rng.standard_normal(branches)
        s = complex(rng.standard_normal(), rng.standard_normal())
        d = mrc_combine(BranchObservation(h, h * s))
        assert abs(d.combined - s) < 1e-12
        assert d.snr_scale == pytest.approx(np.sum(np.abs(h) ** 2))


def test_all_zero_gains_signalled():
    with pytest.raises(DegenerateChannelError):
        mrc_combine(BranchObservation(np.zeros(3, complex), np.ones(3, complex)))


def test_detect_exact_point():
    c = build_qam(64)
    for k in range(c.m):
        assert detect_nearest(DecisionStatistic(complex(c.symbols[k]), 1.0), c) == k


def test_bpsk_sign_rule():
    c = build_psk(2)
    assert detect_nearest(0.3 + 0j, c) == 0
    assert detect_nearest(-0.01 + 5j, c) == 1


def test_16qam_loopback(rng):
    c = build_qam(16)
    tx = rng.integers(0, 16, 10_000)
    g = np.ones((tx.size, 1), complex)
    assert (detect_block(g, c.symbols[tx][:, None], c) == tx).all()


def test_scale_invariance(rng):
    c = build_psk(16)
    z = rng.standard_normal(200) + 1j * rng.standard_normal(200)
    from riclink import kernels

    base = kernels.detect_nearest(z, c.symbols)
    for alpha in (0.25, 3.0, 1e3):
        assert (kernels.detect_nearest(alpha * z, alpha * c.symbols) == base).all()


@pytest.mark.parametrize("scheme, m", [("psk", 8), ("psk", 1024), ("qam", 32), ("qam", 1024)])
@pytest.mark.parametrize("k", [0.0, 5.0, math.inf])
@pytest.mark.parametrize("branches", [1, 3])
def test_noiseless_end_to_end(rng, scheme, m, k, branches):
    c = build(scheme, m)
    for idx in rng.integers(0, m, 20):
        obs = transmit(c.symbols[idx], branches, RicianParams(k), NoiseSpec(300.0, m), rng)
        assert detect_nearest(mrc_combine(obs), c) == idx
