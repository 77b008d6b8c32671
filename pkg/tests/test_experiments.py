import math

import numpy as np
import pytest

from efa_relay import mimo, siso
from efa_relay.channel import ChannelStreams, Geometry, PowerBudget
from efa_relay.errors import DomainError
from efa_relay.experiments import (
    CSV_HEADER,
    Family,
    MonteCarloConfig,
    SweepResult,
    SweepSpec,
    default_spec,
    emit_csv,
    is_unimodal,
    read_csv,
    run_rate_vs_antennas,
    run_rate_vs_distance_mimo,
    run_rate_vs_distance_siso,
    run_rate_vs_rho,
    run_sweep,
)
from efa_relay.mimo import DEFAULT_PS_GRID, Variant

from conftest import NOISE, SYMMETRIC

SMALL_GRID = tuple(i / 20 for i in range(1, 20))


def test_config_validation():
    for kwargs in (dict(n_trials=0), dict(master_seed=-1), dict(master_seed=2**64), dict(parallelism=0)):
        with pytest.raises(DomainError):
            MonteCarloConfig(**kwargs)
    with pytest.raises(DomainError):
        default_spec(Family.RATE_VS_DISTANCE_SISO, variants=(Variant.GENIE_EFA,))
    with pytest.raises(DomainError):
        default_spec(Family.RATE_VS_DISTANCE_MIMO, sweep_values=(0.5, 0.4))
    with pytest.raises(DomainError):
        default_spec(Family.RATE_VS_DISTANCE_MIMO, sweep_values=(0.5, 1.0))
    with pytest.raises(DomainError):
        default_spec(Family.RATE_VS_ANTENNAS, sweep_values=(1, 2.5))
    with pytest.raises(DomainError):
        default_spec(Family.RATE_VS_ANTENNAS, ps_grid=(0.0, 0.5))
    with pytest.raises(DomainError):
        run_rate_vs_antennas(default_spec(Family.RATE_VS_RHO), MonteCarloConfig(1))


def test_defaults():
    spec = default_spec(Family.RATE_VS_RHO)
    assert spec.r == 4 and spec.geometry == Geometry(10.0, 0.5)
    assert spec.budgets == PowerBudget(0.5, 0.1) and spec.noise.sigma_n_sq == 1e-6
    assert spec.sweep_values == DEFAULT_PS_GRID
    assert default_spec(Family.RATE_VS_ANTENNAS).sweep_values == tuple(range(1, 9))
    assert default_spec(Family.RATE_VS_DISTANCE_MIMO).sweep_values == tuple(i / 10 for i in range(1, 10))
    assert MonteCarloConfig().n_trials == 1000


def test_rate_vs_rho():
    spec = default_spec(Family.RATE_VS_RHO)
    res = run_rate_vs_rho(spec, MonteCarloConfig(n_trials=1000, master_seed=3))
    assert len(res.rows) == 99 * 4
    for v in spec.variants:
        curve = res.curve(v)
        assert is_unimodal(curve)
        assert curve[0] < curve.max() and curve[-1] < curve.max()
    assert all(r.n_trials == 1 and math.isnan(r.std_error) for r in res.rows)


def test_rate_vs_antennas_ordering_and_reduction():
    spec = default_spec(Family.RATE_VS_ANTENNAS, sweep_values=(1, 2, 4), ps_grid=SMALL_GRID)
    mc = MonteCarloConfig(n_trials=60, master_seed=9)
    res = run_rate_vs_antennas(spec, mc)
    for r in spec.sweep_values:
        g = res.sample(r, Variant.GENIE_EFA)
        e = res.sample(r, Variant.EFA)
        m = res.sample(r, Variant.MRCMRT_EFA)
        assert np.all(g >= e * (1 - 1e-10)) and np.all(e >= m * (1 - 1e-10))
    # r = 1 matches the single-antenna pipeline on the same grid
    streams = ChannelStreams(mc.master_seed)
    rates = []
    for t in range(mc.n_trials):
        sc = siso.SisoChannel.from_realization(streams.realize(t, spec.geometry, 1))
        p = siso.p1(sc, spec.budgets)
        best = max(
            siso.snr_gamma1(rho, siso.amplification_gain_sq(rho, p, NOISE.sigma_n_sq), sc, spec.budgets, NOISE)
            for rho in SMALL_GRID
        )
        rates.append(siso.rate_from_snr(best))
    assert res.row(1, Variant.EFA).mean_rate == pytest.approx(np.mean(rates), rel=1e-10)


def test_antenna_prefixes_share_fading():
    # r antennas use the first r entries of the largest draw, so curves are nested
    spec = default_spec(Family.RATE_VS_ANTENNAS, sweep_values=(2, 3), variants=(Variant.NO_EF,),
                        ps_grid=SMALL_GRID)
    a = run_sweep(spec, MonteCarloConfig(20, 4))
    b = run_sweep(default_spec(Family.RATE_VS_ANTENNAS, sweep_values=(2, 3, 6), variants=(Variant.NO_EF,),
                               ps_grid=SMALL_GRID), MonteCarloConfig(20, 4))
    assert np.array_equal(a.sample(2, "NoEF"), b.sample(2, "NoEF"))


def test_rate_vs_distance_siso_paired_dominance():
    spec = default_spec(Family.RATE_VS_DISTANCE_SISO)
    res = run_rate_vs_distance_siso(spec, MonteCarloConfig(n_trials=200, master_seed=1))
    for ratio in spec.sweep_values:
        efa, no_ef = res.sample(ratio, "EFA"), res.sample(ratio, "NoEF")
        assert np.all(efa >= no_ef * (1 - 1e-12))
        assert res.row(ratio, "EFA").mean_rate >= res.row(ratio, "NoEF").mean_rate


def test_rate_vs_distance_mimo_no_ef_variants_coincide():
    spec = default_spec(Family.RATE_VS_DISTANCE_MIMO, sweep_values=(0.2, 0.5), ps_grid=SMALL_GRID)
    res = run_rate_vs_distance_mimo(spec, MonteCarloConfig(n_trials=50, master_seed=2))
    for ratio in spec.sweep_values:
        a, b = res.row(ratio, "NoEF"), res.row(ratio, "MrcMrtNoEF")
        assert abs(a.mean_rate - b.mean_rate) <= 2 * math.hypot(a.std_error, b.std_error)
        assert res.row(ratio, "EFA").mean_rate >= a.mean_rate


def test_standard_error_definition():
    spec = default_spec(Family.RATE_VS_DISTANCE_SISO, sweep_values=(0.4,))
    res = run_sweep(spec, MonteCarloConfig(n_trials=50, master_seed=6))
    x = res.sample(0.4, "EFA")
    row = res.row(0.4, "EFA")
    assert row.mean_rate == pytest.approx(x.mean())
    assert row.std_error == pytest.approx(x.std(ddof=1) / math.sqrt(50))
    assert row.n_trials == 50


def test_parallel_runs_are_bit_identical(tmp_path):
    spec = default_spec(Family.RATE_VS_DISTANCE_MIMO, sweep_values=(0.3, 0.7), ps_grid=SMALL_GRID)
    paths = []
    for workers in (1, 3):
        res = run_sweep(spec, MonteCarloConfig(n_trials=25, master_seed=8, parallelism=workers))
        path = tmp_path / f"w{workers}.csv"
        emit_csv(res, path)
        paths.append(path)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_csv_format_and_round_trip(tmp_path):
    spec = default_spec(Family.RATE_VS_DISTANCE_SISO, sweep_values=(0.1, 0.35))
    res = run_sweep(spec, MonteCarloConfig(n_trials=10, master_seed=1))
    path = tmp_path / "out.csv"
    emit_csv(res, path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 1 + len(res.rows)
    back = read_csv(path)
    assert back == sorted(res.rows, key=lambda r: (r.sweep_value, r.variant))
    keys = [(r.sweep_value, r.variant) for r in back]
    assert keys == sorted(keys)
    mean_field = lines[1].split(",")[2]
    assert len(mean_field.replace(".", "").lstrip("0")) >= 12


def test_empty_result_is_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    emit_csv(SweepResult(Family.RATE_VS_RHO, []), path)
    assert path.read_text() == ",".join(CSV_HEADER) + "\n"


def test_is_unimodal():
    assert is_unimodal([1, 2, 3, 2, 1])
    assert is_unimodal([1, 1, 1])
    assert is_unimodal([3, 2, 1])
    assert not is_unimodal([1, 3, 2, 3, 1])
    assert is_unimodal([1, 2, 2 - 1e-14, 2, 1])
