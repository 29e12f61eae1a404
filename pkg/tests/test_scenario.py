import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from mmwsim.errors import ConfigError
from mmwsim.mathkit import RngStream
from mmwsim.scenario import (
    Environment,
    LinkBudget,
    LinkState,
    Model,
    PathLossParams,
    breakpoint_distance,
    cell_radius_for_coverage,
    distance_3d,
    draw_link_state,
    load_pathloss_table,
    los_probability_3gpp,
    los_probability_nyusim,
    max_path_loss,
    mean_path_loss,
    noise_power_dbm,
    nyusim_los_inner,
    path_loss_abg,
    path_loss_ci,
    path_loss_ci_two_slope,
    sample_shadow_fading,
)

GRID = np.arange(1.0, 501.0)


def umi_3gpp_reference(d):
    # direct transcription of the UMi street-canyon LOS probability
    return min(18.0 / d, 1.0) * (1.0 - math.exp(-d / 36.0)) + math.exp(-d / 36.0)


def test_los_3gpp_limits():
    assert los_probability_3gpp(0.0) == 1.0
    assert los_probability_3gpp(18.0) == pytest.approx(1.0, abs=1e-15)
    assert los_probability_3gpp(200.0) > 0.0


def test_los_3gpp_matches_reference():
    got = los_probability_3gpp(GRID)
    want = np.array([umi_3gpp_reference(d) for d in GRID])
    assert np.allclose(got, want, rtol=1e-13)


def test_los_3gpp_uma_uses_63m():
    d = 150.0
    want = (18.0 / d) * (1 - math.exp(-d / 63.0)) + math.exp(-d / 63.0)
    assert los_probability_3gpp(d, Environment.UMA) == pytest.approx(want)


@pytest.mark.parametrize("env", list(Environment))
def test_los_curves_structure(env):
    row = load_pathloss_table()[(env, LinkState.LOS)]
    for p in (los_probability_3gpp(GRID, env), los_probability_nyusim(GRID, row.los_d1_m, row.los_d2_m)):
        assert np.all((p >= 0) & (p <= 1))
        assert np.all(np.diff(p) <= 1e-15)
    assert los_probability_nyusim(0.0, row.los_d1_m, row.los_d2_m) == 1.0


def test_nyusim_is_squared_inner():
    inner = nyusim_los_inner(GRID, 22.0, 113.4)
    assert np.allclose(los_probability_nyusim(GRID, 22.0, 113.4), inner**2, rtol=0, atol=0)


def test_nyusim_umi_crosses_half_near_65m():
    p = los_probability_nyusim(GRID)
    crossing = GRID[np.argmax(p < 0.5)]
    assert 60.0 <= crossing <= 70.0


def test_nyusim_above_3gpp_below_160m():
    d = np.arange(0.0, 160.0, 0.5)
    assert np.all(los_probability_nyusim(d) >= los_probability_3gpp(d))


def test_los_rejects_negative_distance():
    with pytest.raises(ValueError):
        los_probability_3gpp(-1.0)


def test_draw_link_state_extremes_and_frequency():
    rng = RngStream(5).generator()
    assert all(draw_link_state(rng, 1.0) is LinkState.LOS for _ in range(100))
    assert all(draw_link_state(rng, 0.0) is LinkState.NLOS for _ in range(100))
    # vectorized Bernoulli on the same generator convention
    n = 10**6
    frac = np.mean(rng.random(n) < 0.3)
    assert abs(frac - 0.3) < 0.002
    with pytest.raises(ValueError):
        draw_link_state(rng, 1.5)


def test_draw_link_state_frequency_small():
    rng = RngStream(6).generator()
    hits = sum(draw_link_state(rng, 0.3) is LinkState.LOS for _ in range(20000))
    assert abs(hits / 20000 - 0.3) < 0.015


def test_ci_anchor_points():
    assert path_loss_ci(1.0, 1.0, 3.7) == pytest.approx(32.4, abs=1e-12)
    assert path_loss_ci(28.0, 1.0, 2.0) == pytest.approx(61.34, abs=0.01)
    assert path_loss_ci(28.0, 100.0, 3.2) == pytest.approx(125.34, abs=0.01)


@pytest.mark.parametrize("ple", [1.5, 2.0, 2.9, 3.2, 4.1])
@pytest.mark.parametrize("d", [1.0, 7.3, 100.0])
def test_ci_decade_rule(ple, d):
    assert path_loss_ci(28.0, 10 * d, ple) - path_loss_ci(28.0, d, ple) == pytest.approx(10 * ple, abs=1e-9)


def test_abg_trivial_and_ci_coincidence():
    p = PathLossParams(2.0, 4.0, 7.0, 20.0, 3.0)
    assert path_loss_abg(1.0, 1.0, p) == pytest.approx(20.0)
    q = PathLossParams(2.0, 4.0, 2.0, 32.4, 2.0)
    fc, d = np.meshgrid([0.8, 6.0, 28.0, 73.0], [1.0, 10.0, 133.0, 800.0])
    assert np.allclose(path_loss_abg(fc, d, q), path_loss_ci(fc, d, 2.0), atol=1e-9)


def test_abg_gamma_two_frequency_shift():
    q = PathLossParams(2.0, 4.0, 3.1, 20.0, 2.0)
    for d in (1.0, 50.0, 400.0):
        assert path_loss_abg(28.0, d, q) - path_loss_abg(7.0, d, q) == pytest.approx(20 * math.log10(4.0))


@settings(max_examples=60, deadline=None)
@given(st.floats(0.5, 100), st.floats(1, 1000), st.floats(1.0, 5.0), st.floats(1.01, 3.0))
def test_ci_monotone(fc, d, ple, k):
    base = path_loss_ci(fc, d, ple)
    assert path_loss_ci(fc, d * k, ple) > base
    assert path_loss_ci(min(fc * k, 100.0), d, ple) >= base
    assert path_loss_ci(fc, d, ple + 0.1) >= base


def test_path_loss_rejects_bad_arguments():
    with pytest.raises(ValueError):
        path_loss_ci(28.0, 0.0, 2.0)
    with pytest.raises(ValueError):
        path_loss_ci(-1.0, 10.0, 2.0)


def test_two_slope():
    dbp = breakpoint_distance(28.0, Environment.UMI)
    # 4 (hBS - 1)(hUT - 1) fc / c with hBS 10 m, hUT 1.5 m
    assert dbp == pytest.approx(4 * 9 * 0.5 * 28e9 / 299792458.0)
    near = path_loss_ci_two_slope(28.0, dbp / 2, 2.0, dbp)
    assert near == pytest.approx(path_loss_ci(28.0, dbp / 2, 2.0))
    far = path_loss_ci_two_slope(28.0, 10 * dbp, 2.0, dbp)
    assert far == pytest.approx(path_loss_ci(28.0, dbp, 2.0) + 40.0)


def test_3gpp_nlos_floored_at_los():
    table = load_pathloss_table()
    d = np.linspace(10, 500, 50)
    los = mean_path_loss(Model.THREEGPP, LinkState.LOS, 28.0, d, table)
    nlos = mean_path_loss(Model.THREEGPP, LinkState.NLOS, 28.0, d, table)
    assert np.all(nlos >= los)


def test_shipped_table_values():
    t = load_pathloss_table()
    assert t[(Environment.UMI, LinkState.LOS)].ple == 2.0
    assert t[(Environment.UMI, LinkState.NLOS)].ple == 3.2
    assert t[(Environment.UMA, LinkState.NLOS)].ple == 2.9
    assert t[(Environment.UMI, LinkState.NLOS)].sf_sigma_db == 8.0


def test_shadow_fading_moments():
    rng = RngStream(9).generator()
    assert sample_shadow_fading(rng, 0.0) == 0.0
    x = sample_shadow_fading(rng, 4.0, 10**6)
    assert abs(x.std() - 4.0) < 0.02
    assert abs(x.mean()) < 0.02


def test_distance_3d():
    assert distance_3d(0.0, Environment.UMI) == pytest.approx(8.5)
    assert distance_3d(40.0, Environment.UMA) == pytest.approx(math.hypot(40.0, 23.5))


def test_noise_power():
    assert noise_power_dbm(100.0, 10.0) == pytest.approx(-174 + 80 + 10)


def _budget_with_plmax(pl_max):
    # 30 dBm + gain + 84 dB noise margin - 5 dB threshold = pl_max
    return LinkBudget(array_gain_db=pl_max - 109.0, bs_element_max_gain_db=0.0)


def test_cell_radius_hand_evaluated():
    budget = _budget_with_plmax(120.0)
    assert max_path_loss(budget) == pytest.approx(120.0)
    params = PathLossParams(2.0, 4.0, 2.0, 32.4, 2.0)
    d = cell_radius_for_coverage(budget, params, LinkState.LOS, Model.NYUSIM)
    # 10 ** ((120 - 61.344 - 1.6449 * 4) / 20)
    want = 10 ** ((120.0 - 32.4 - 20 * math.log10(28.0) - stats.norm.ppf(0.95) * 4.0) / 20.0)
    assert want == pytest.approx(401.7, abs=0.1)
    assert d == pytest.approx(want, abs=1.0)


def test_cell_radius_closed_form_without_shadowing():
    budget = _budget_with_plmax(130.0)
    params = PathLossParams(3.2, 0.0, 3.0, 20.0, 2.0)
    want = 10 ** ((130.0 - 32.4 - 20 * math.log10(28.0)) / 32.0)
    assert cell_radius_for_coverage(budget, params) == pytest.approx(want, rel=1e-9)


def test_cell_radius_shrinks_with_sigma():
    budget = _budget_with_plmax(130.0)
    radii = [cell_radius_for_coverage(budget, PathLossParams(3.2, s, 3.0, 20.0, 2.0)) for s in (0, 2, 4, 8)]
    assert all(a > b for a, b in zip(radii, radii[1:]))


def test_cell_radius_reports_deficit():
    budget = _budget_with_plmax(60.0)
    with pytest.raises(ConfigError, match="short by"):
        cell_radius_for_coverage(budget, PathLossParams(3.2, 8.0, 3.0, 20.0, 2.0))


def test_coverage_quantile_uses_normal_ppf():
    # z at 0.95 is the familiar 1.645
    assert stats.norm.ppf(0.95) == pytest.approx(1.645, abs=1e-3)


@pytest.mark.parametrize("kwargs", [dict(bandwidth_mhz=0), dict(coverage_fraction=1.0),
                                    dict(carrier_ghz=120.0)])
def test_link_budget_validation(kwargs):
    with pytest.raises(ConfigError):
        LinkBudget(**kwargs)


def test_environment_parse():
    assert Environment.parse("umi") is Environment.UMI
    assert Environment.parse("UMa") is Environment.UMA
