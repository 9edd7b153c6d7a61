import math

import numpy as np
import pytest

from riclink.channel import FadingModel, RicianParams
from riclink.errors import ParameterError, UndefinedEstimateError
from riclink.modem import build, demap_bits
from riclink.montecarlo import (
    SimPoint,
    StoppingRule,
    SweepConfig,
    ber_of,
    cell_seed,
    default_workers,
    run_point,
    run_sweep,
    simulate_block,
    wilson_ci,
)
from riclink.theory import avg_err_rician_mrc, q_function

Z95 = 1.959963984540054


def _wilson_reference(k, n, z=Z95):
    p = k / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return center - half, center + half


def test_ber_of_worked_example():
    assert ber_of(4, 10) == 0.4


def test_ber_of_edges():
    assert ber_of(0, 10**6) == 0.0
    assert ber_of(7, 7) == 1.0
    with pytest.raises(UndefinedEstimateError):
        ber_of(0, 0)
    with pytest.raises(ParameterError):
        ber_of(11, 10)


def test_wilson_values():
    low, high = wilson_ci(4, 10)
    assert (low, high) == pytest.approx(_wilson_reference(4, 10), abs=1e-12)
    assert low == pytest.approx(0.168, abs=5e-4)
    assert high == pytest.approx(0.687, abs=5e-4)


def test_wilson_zero_errors():
    low, high = wilson_ci(0, 50)
    assert low == 0.0 and 0 < high < 0.1


def test_wilson_half_is_symmetric():
    low, high = wilson_ci(500, 1000)
    assert 0.5 - low == pytest.approx(high - 0.5)


def test_wilson_pulls_towards_half():
    low, high = wilson_ci(2, 100)
    assert (low + high) / 2 > 0.02


def test_wilson_needs_trials():
    with pytest.raises(UndefinedEstimateError):
        wilson_ci(0, 0)


def test_stopping_rule_validation():
    with pytest.raises(ParameterError):
        StoppingRule(min_bit_errors=0)
    with pytest.raises(ParameterError):
        StoppingRule(max_bits=100, batch_bits=200)


def test_simpoint_validation():
    with pytest.raises(Exception):
        SimPoint("psk", 3, 0.0, 1, RicianParams(1.0))
    with pytest.raises(ParameterError):
        SimPoint("psk", 4, 0.0, 0, RicianParams(1.0))


def _point(scheme, m, ebn0, branches=1, k=5.0, stop=None, seed=1, **kw):
    return SimPoint(scheme, m, ebn0, branches, RicianParams(k, **kw),
                    stop or StoppingRule(), seed)


@pytest.mark.parametrize("scheme, m", [("psk", 2), ("psk", 64), ("qam", 32), ("qam", 1024)])
def test_noiseless_regime_has_no_errors(scheme, m):
    est = run_point(_point(scheme, m, 200.0, stop=StoppingRule(200, 200_000, 50_000)))
    assert est.bit_errors == 0 and est.ber == 0.0
    assert est.bits_sent == (200_000 // int(math.log2(m))) * int(math.log2(m))


def test_counters_are_consistent():
    est = run_point(_point("qam", 64, 6.0, 2, stop=StoppingRule(500, 10**6, 30_000)))
    n = 6
    assert est.bits_sent == est.symbols_sent * n
    assert est.bit_errors <= est.symbols_sent * n
    assert est.symbol_errors >= est.bit_errors / n
    assert est.ber == est.bit_errors / est.bits_sent
    assert est.ci95[0] <= est.ber <= est.ci95[1]


def test_stops_at_first_batch_boundary_past_threshold():
    stop = StoppingRule(min_bit_errors=300, max_bits=10**7, batch_bits=10_000)
    p = _point("psk", 16, 8.0, 1, stop=stop)
    est = run_point(p)
    blocks = est.bits_sent // 10_000
    assert est.bit_errors >= 300
    before = sum(simulate_block(p, b, 2500).bit_errors for b in range(blocks - 1))
    assert before < 300


def test_stops_at_max_bits():
    est = run_point(_point("psk", 2, 30.0, 4, stop=StoppingRule(10, 60_000, 25_000)))
    assert est.bits_sent == 60_000
    assert est.bit_errors < 10


def test_block_matches_modem_demap():
    # the kernel error count must equal an explicit demap-and-compare
    p = _point("qam", 16, 4.0, 2)
    c = build("qam", 16)
    from riclink import kernels
    from riclink.channel import complex_normal, ebn0_to_n0, sample_gains
    from riclink.montecarlo import _block_rng

    res = simulate_block(p, 3, 4000)
    bits = _block_rng(p.seed, 3, 0).integers(0, 2, size=16_000, dtype=np.uint8)
    from riclink.modem import map_bits

    tx = map_bits(c, bits)
    g = sample_gains(p.rician, _block_rng(p.seed, 3, 1), (4000, 2))
    w = complex_normal(_block_rng(p.seed, 3, 2), (4000, 2), ebn0_to_n0(4.0, 16))
    rx = kernels.mrc_detect(g, g * c.symbols[tx][:, None] + w, c.symbols)
    assert res.bit_errors == int(np.count_nonzero(demap_bits(c, rx) != bits))
    assert res.symbol_errors == int(np.count_nonzero(rx != tx))


@pytest.mark.parametrize("workers", [2, 3, 8])
def test_worker_count_does_not_change_result(workers):
    p = _point("psk", 8, 6.0, 2, stop=StoppingRule(400, 10**6, 20_000), seed=99)
    assert run_point(p, workers=workers) == run_point(p, workers=1)


def test_workers_from_environment(monkeypatch):
    monkeypatch.setenv("RICLINK_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("RICLINK_WORKERS", "zero")
    with pytest.raises(ParameterError):
        default_workers()
    monkeypatch.delenv("RICLINK_WORKERS")
    assert default_workers() == 1


def test_bpsk_awgn_anchor():
    p = _point("psk", 2, 0.0, 1, k=math.inf, stop=StoppingRule(2000, 10**6, 100_000))
    est = run_point(p)
    ref = q_function(math.sqrt(2.0))
    assert ref == pytest.approx(0.0786, abs=1e-4)
    assert abs(est.ber - ref) < 3 * math.sqrt(ref * (1 - ref) / est.bits_sent)


def test_16psk_against_oracle():
    p = _point("psk", 16, 5.0, 1, k=5.0, stop=StoppingRule(10**9, 10**6, 250_000), seed=5)
    est = run_point(p)
    t = avg_err_rician_mrc("psk", 16, 5.0, 1, 5.0)
    assert abs(est.ser - t.ser) < 3 * math.hypot(est.ser_stderr, t.ser_stderr)


def test_finite_scatterer_model_runs():
    p = _point("psk", 4, 3.0, 2, k=1.0, model=FadingModel.FINITE_SCATTERERS, n_scatterers=8,
               stop=StoppingRule(200, 200_000, 50_000))
    est = run_point(p)
    assert 0 < est.ber < 0.5


def test_degenerate_channel_counted():
    # zero gains have probability 0 under both samplers, so feed them directly
    from riclink import kernels

    c = build("psk", 4)
    g = np.zeros((3, 2), complex)
    rx = kernels.mrc_detect(g, g, c.symbols)
    assert kernels.count_errors(np.array([0, 1, 2]), rx, c.labels, 2) == (6, 3)


def test_cell_seed_depends_on_coordinates():
    r = RicianParams(5.0)
    base = cell_seed(42, "psk", 16, 1.0, 5, r)
    assert base == cell_seed(42, "psk", 16, 1.0, 5, r)
    others = {
        cell_seed(43, "psk", 16, 1.0, 5, r),
        cell_seed(42, "qam", 16, 1.0, 5, r),
        cell_seed(42, "psk", 64, 1.0, 5, r),
        cell_seed(42, "psk", 16, 2.0, 5, r),
        cell_seed(42, "psk", 16, 1.0, 4, r),
        cell_seed(42, "psk", 16, 1.0, 5, RicianParams(4.0)),
    }
    assert base not in others and len(others) == 6
    assert 0 <= base < 2**64


def _sweep(**kw):
    base = dict(
        modulations=(("psk", 16),), ebn0_db=tuple(range(0, 11)), diversity=(5,),
        k_factor=(5.0,), stop=StoppingRule(200, 2 * 10**6, 100_000), seed=7,
    )
    base.update(kw)
    return SweepConfig(**base)


def test_sweep_table1_shape():
    rows = run_sweep(_sweep())
    assert len(rows) == 11
    bers = [e.ber for _, e in rows]
    for (_, a), (_, b) in zip(rows, rows[1:]):
        assert b.ber <= a.ci95[1]
    assert bers[-1] < bers[0]


def test_sweep_diversity_shape():
    cfg = _sweep(modulations=(("qam", 1024),), ebn0_db=(2.0,), diversity=(1, 2, 3, 4, 5),
                 stop=StoppingRule(10_000, 10**6, 500_000))
    rows = run_sweep(cfg)
    assert [p.diversity for p, _ in rows] == [1, 2, 3, 4, 5]
    bers = [e.ber for _, e in rows]
    assert all(b2 < b1 for b1, b2 in zip(bers, bers[1:]))


def test_empty_axis_rejected():
    with pytest.raises(ParameterError):
        run_sweep(_sweep(diversity=()))


def test_bad_cell_is_identified():
    with pytest.raises(ParameterError, match="L=0"):
        _sweep(diversity=(0,)).cells()


def test_sweep_is_deterministic():
    cfg = _sweep(ebn0_db=(3.0, 4.0), stop=StoppingRule(100, 200_000, 20_000))
    assert run_sweep(cfg) == run_sweep(cfg, workers=4)


def test_mrc_dominance():
    stop = StoppingRule(10**9, 10**6, 250_000)
    one = run_point(_point("psk", 16, 5.0, 1, k=5.0, stop=stop, seed=21))
    two = run_point(_point("psk", 16, 5.0, 2, k=5.0, stop=stop, seed=22))
    assert two.ci95[1] < one.ci95[0]
