import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from mmwsim.config import SystemConfig
from mmwsim.mathkit import RngStream
from mmwsim.montecarlo import cell_radius, drop_users, empirical_cdf, run_campaign, run_drop
from mmwsim.scenario import LinkState


def test_drop_users_bounds_and_law():
    rng = RngStream(1).generator()
    users = drop_users(rng, 10**5, 10.0, 250.0)
    d = np.array([u.d2d for u in users])
    az = np.array([u.azimuth for u in users])
    assert d.min() >= 10.0 and d.max() <= 250.0
    assert az.min() >= -180 and az.max() < 180
    law = lambda x: (x**2 - 100.0) / (250.0**2 - 100.0)  # noqa: E731
    assert stats.kstest(d, law).pvalue > 0.01


def test_drop_users_sector_and_errors():
    users = drop_users(RngStream(2).generator(), 1000, 10.0, 100.0, 60.0)
    assert all(-60 <= u.azimuth < 60 for u in users)
    with pytest.raises(ValueError):
        drop_users(RngStream(2).generator(), 0, 10.0, 100.0)
    with pytest.raises(ValueError):
        drop_users(RngStream(2).generator(), 3, 100.0, 10.0)


def test_cell_radius_positive_and_above_floor():
    cfg = SystemConfig()
    for m in ("3gpp", "nyusim"):
        assert 10.0 < cell_radius(cfg, m) < 1000.0


def test_run_drop_deterministic(small_config):
    a = run_drop(small_config, "3gpp", 2)
    b = run_drop(small_config, "3gpp", 2)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    for s in ("hybrid", "bd"):
        assert np.array_equal(a.se[s], b.se[s])
        assert np.all(np.isfinite(a.se[s])) and np.all(a.se[s] >= 0)
    assert len(a.positions) == 3


def test_run_drop_independent_of_other_models(small_config):
    solo = run_drop(small_config.with_overrides(models=("nyusim",)), "nyusim", 1)
    mixed = run_drop(small_config, "nyusim", 1)
    assert np.array_equal(solo.eigenvalues, mixed.eigenvalues)


def test_nlos_3gpp_drop_uses_380_rays(small_config):
    for i in range(20):
        d = run_drop(small_config, "3gpp", i, detail=True)
        if d.states[0] is LinkState.NLOS:
            break
    else:
        pytest.skip("no NLOS user 1 in the first drops")
    # 380 rays over 256 x 8 antennas: full rank
    assert len(d.eigenvalues) == 8 and d.eigenvalues[-1] > 0


def test_campaign_shapes(small_config):
    res = run_campaign(small_config.with_overrides(drops=1), workers=1)
    for m in ("3gpp", "nyusim"):
        for s in ("hybrid", "bd"):
            assert res.se[(m, s)].shape == (1, 3)
    assert res.eigenvalues["rayleigh"].shape == (1, 8)
    assert ("rayleigh", "hybrid") not in res.se


def test_campaign_worker_invariance(small_config):
    a = run_campaign(small_config, workers=1)
    b = run_campaign(small_config, workers=3)
    for m in a.eigenvalues:
        assert np.array_equal(a.eigenvalues[m], b.eigenvalues[m])
    for k in a.se:
        assert np.array_equal(a.se[k], b.se[k])
    assert a.resamples == b.resamples


def test_workers_from_environment(small_config, monkeypatch):
    monkeypatch.setenv("MMWSIM_WORKERS", "2")
    res = run_campaign(small_config.with_overrides(drops=2, models=("rayleigh",)))
    assert res.eigenvalues["rayleigh"].shape == (2, 8)


def test_empirical_cdf_examples():
    assert empirical_cdf([5.0]) == [(5.0, 1.0)]
    cdf = dict(empirical_cdf([4, 2, 3, 1]))
    assert cdf[2.0] == 0.5
    with pytest.raises(ValueError):
        empirical_cdf([])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200))
def test_empirical_cdf_monotone(xs):
    cdf = empirical_cdf(xs)
    v = [a for a, _ in cdf]
    f = [b for _, b in cdf]
    assert v == sorted(v) and f == sorted(f)
    assert f[-1] == 1.0 and len(cdf) == len(xs)


@pytest.mark.slow
def test_resamples_rare(default_campaign):
    for m, n in default_campaign.resamples.items():
        assert n < 0.01 * default_campaign.config.drops
