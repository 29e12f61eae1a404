"""NYUSIM time-cluster / spatial-lobe (TCSL) channel generator.

Temporal and spatial structure are drawn independently: time clusters fix
when energy arrives, spatial lobes fix where it comes from, and every
subpath picks its departure and arrival lobe on its own. Subpaths of one
time cluster can therefore leave and arrive from different directions.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Dict, List, NamedTuple, Tuple, Union

import numpy as np

from .errors import ConfigError
from .mathkit import sample_poisson
from .rays import ChannelRealization, LinkGeometry, reflect_zenith, wrap_azimuth
from .scenario import LinkState, Model

__all__ = [
    "NyuParams",
    "NyuCounts",
    "TimeCluster",
    "LobeKind",
    "SpatialLobe",
    "LOBE_MEANS",
    "MAX_TIME_CLUSTERS",
    "MAX_SUBPATHS",
    "MAX_LOBES",
    "load_nyu_table",
    "draw_counts_nyu",
    "generate_time_clusters",
    "generate_spatial_lobes",
    "assign_subpaths_to_lobes",
    "realize_nyusim",
]

MAX_TIME_CLUSTERS = 6
MAX_SUBPATHS = 30
MAX_LOBES = 5
# Poisson means of the (departure, arrival) spatial-lobe counts
LOBE_MEANS = {LinkState.LOS: (1.9, 1.8), LinkState.NLOS: (1.5, 2.1)}
# intra-cluster delay exponent upper bound
_INTRA_DELAY_EXPONENT_MAX = 0.43
# subpath offsets inside a lobe are truncated at this many spreads
_LOBE_ENVELOPE = 3.0


@dataclass(frozen=True)
class NyuParams:
    """Secondary TCSL statistics for one link state (times in ns, angles in degrees)."""

    tc_decay_ns: float
    subpath_decay_ns: float
    cluster_shadow_sigma_db: float
    void_interval_ns: float
    lobe_az_spread_deg: float
    lobe_zen_spread_deg: float
    xpr_mu_db: float
    xpr_sigma_db: float
    mean_excess_delay_ns: float = 83.0
    subpath_shadow_sigma_db: float = 6.0
    subpath_spacing_ns: float = 2.5
    dep_zen_mean_deg: float = 95.0
    arr_zen_mean_deg: float = 86.0
    lobe_zen_sigma_deg: float = 4.5
    los_power_fraction: float = 0.0
    dep_lobe_span_deg: float = 360.0
    arr_lobe_span_deg: float = 360.0
    # BS-side intra-lobe spreads; 0 reuses the lobe_* spreads
    dep_az_spread_deg: float = 0.0
    dep_zen_spread_deg: float = 0.0

    def __post_init__(self):
        if self.lobe_az_spread_deg <= 0 or self.lobe_zen_spread_deg <= 0:
            raise ConfigError("lobe spreads must be positive")
        if self.void_interval_ns < 0:
            raise ConfigError("void interval must be non-negative")
        if not 0.0 <= self.los_power_fraction < 1.0:
            raise ConfigError("los_power_fraction must lie in [0, 1)")
        if not (0 < self.dep_lobe_span_deg <= 360 and 0 < self.arr_lobe_span_deg <= 360):
            raise ConfigError("lobe spans must lie in (0, 360] degrees")
        if self.dep_az_spread_deg < 0 or self.dep_zen_spread_deg < 0:
            raise ConfigError("departure lobe spreads must be non-negative")

    def spreads(self, kind: "LobeKind") -> Tuple[float, float]:
        """Intra-lobe (azimuth, zenith) RMS spreads on the given side."""
        if kind is LobeKind.DEPARTURE:
            return (self.dep_az_spread_deg or self.lobe_az_spread_deg,
                    self.dep_zen_spread_deg or self.lobe_zen_spread_deg)
        return self.lobe_az_spread_deg, self.lobe_zen_spread_deg


def load_nyu_table(path: Union[str, Path, None] = None) -> Dict[LinkState, NyuParams]:
    if path is None:
        text = resources.files("mmwsim").joinpath("data/nyusim_params.csv").read_text()
    else:
        text = Path(path).read_text()
    names = NyuParams.__dataclass_fields__.keys()
    table = {}
    for lineno, row in enumerate(csv.DictReader(text.splitlines()), start=2):
        try:
            state = LinkState(row["state"].strip().upper())
            table[state] = NyuParams(**{k: float(row[k]) for k in names if k in row})
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"{path or 'nyusim_params.csv'}: line {lineno}: {exc}") from exc
    return table


class NyuCounts(NamedTuple):
    n_tc: int
    subpaths: Tuple[int, ...]
    n_dep: int
    n_arr: int
    raw_dep: int
    raw_arr: int


def draw_counts_nyu(rng: np.random.Generator, state: LinkState) -> NyuCounts:
    """Draw TC, subpath and lobe counts.

    Lobe counts are ``min(5, max(1, Poisson))``; the uncapped Poisson draws
    are returned as ``raw_dep``/``raw_arr``.
    """
    mu_dep, mu_arr = LOBE_MEANS[state]
    n_tc = int(rng.integers(1, MAX_TIME_CLUSTERS + 1))
    subpaths = tuple(int(s) for s in rng.integers(1, MAX_SUBPATHS + 1, n_tc))
    raw_dep = sample_poisson(rng, mu_dep)
    raw_arr = sample_poisson(rng, mu_arr)
    return NyuCounts(n_tc, subpaths,
                     min(MAX_LOBES, max(1, raw_dep)), min(MAX_LOBES, max(1, raw_arr)),
                     raw_dep, raw_arr)


@dataclass
class TimeCluster:
    excess_delay: float  # seconds
    power_fraction: float
    intra_delays: np.ndarray  # seconds, ascending from 0
    subpath_powers: np.ndarray  # absolute (sum to power_fraction)

    @property
    def n_subpaths(self) -> int:
        return len(self.intra_delays)


def generate_time_clusters(rng: np.random.Generator, subpath_counts, params: NyuParams) -> List[TimeCluster]:
    """Lay out time clusters separated by the inter-cluster void interval.

    Cluster ``n`` starts after cluster ``n-1`` has ended (its last subpath),
    plus a sorted exponential excess and the void interval. Cluster powers
    decay exponentially in excess delay with log-normal shadowing; subpath
    powers decay likewise within each cluster. Everything sums to one.
    """
    counts = [int(c) for c in subpath_counts]
    n = len(counts)
    if n < 1 or min(counts) < 1:
        raise ValueError("need at least one cluster with at least one subpath")

    intra = []
    for m in counts:
        expo = 1.0 + rng.uniform(0.0, _INTRA_DELAY_EXPONENT_MAX)
        intra.append((np.arange(m) * params.subpath_spacing_ns) ** expo)

    raw = rng.exponential(params.mean_excess_delay_ns, n)
    extra = np.sort(raw - raw.min())
    starts = np.zeros(n)
    for i in range(1, n):
        starts[i] = starts[i - 1] + intra[i - 1][-1] + extra[i] + params.void_interval_ns

    cluster_p = np.exp(-starts / params.tc_decay_ns)
    cluster_p *= 10.0 ** (rng.normal(0.0, params.cluster_shadow_sigma_db, n) / 10.0)
    cluster_p /= cluster_p.sum()

    clusters = []
    for i in range(n):
        sub = np.exp(-intra[i] / params.subpath_decay_ns)
        sub *= 10.0 ** (rng.normal(0.0, params.subpath_shadow_sigma_db, len(sub)) / 10.0)
        sub = cluster_p[i] * sub / sub.sum()
        clusters.append(TimeCluster(starts[i] * 1e-9, float(cluster_p[i]), intra[i] * 1e-9, sub))
    return clusters


class LobeKind(str, enum.Enum):
    DEPARTURE = "departure"
    ARRIVAL = "arrival"


@dataclass(frozen=True)
class SpatialLobe:
    kind: LobeKind
    mean_az: float
    mean_zen: float
    az_spread: float
    zen_spread: float


def _lobe_azimuths(rng: np.random.Generator, n: int, span: float = 360.0) -> np.ndarray:
    # one sector of span/n degrees per lobe, jittered by at most a quarter sector;
    # a full-circle span gets a uniformly random rotation, a partial span is
    # centred on azimuth 0
    width = span / n
    jitter = rng.uniform(-width / 4.0, width / 4.0, n)
    if span >= 360.0:
        start = rng.uniform(-180.0, 180.0)
    else:
        start = -span / 2.0 + width / 2.0
    return wrap_azimuth(start + width * np.arange(n) + jitter)


def generate_spatial_lobes(rng: np.random.Generator, n_dep: int, n_arr: int,
                           params: NyuParams) -> Tuple[List[SpatialLobe], List[SpatialLobe]]:
    """Departure and arrival lobes with sector-disjoint mean azimuths.

    Each side's span (``dep_lobe_span_deg``/``arr_lobe_span_deg``) is cut
    into ``n`` equal sectors holding one lobe each, so two lobe means differ
    by at least ``span/(2n)`` degrees. With a full 360 degree span each mean
    is marginally uniform on the circle; a partial span is centred on
    azimuth 0. Mean zeniths scatter around the configured near-horizon values.
    """
    if n_dep < 1 or n_arr < 1:
        raise ValueError("lobe counts must be at least 1")
    out = []
    for kind, n, zen0, span in (
        (LobeKind.DEPARTURE, n_dep, params.dep_zen_mean_deg, params.dep_lobe_span_deg),
        (LobeKind.ARRIVAL, n_arr, params.arr_zen_mean_deg, params.arr_lobe_span_deg),
    ):
        az = _lobe_azimuths(rng, n, span)
        zen = reflect_zenith(zen0 + rng.normal(0.0, params.lobe_zen_sigma_deg, n))
        az_sp, zen_sp = params.spreads(kind)
        out.append([SpatialLobe(kind, float(a), float(z), az_sp, zen_sp) for a, z in zip(az, zen)])
    return out[0], out[1]


def _truncated_normal(rng: np.random.Generator, sigma, size: int) -> np.ndarray:
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (size,))
    x = rng.standard_normal(size)
    bad = np.abs(x) > _LOBE_ENVELOPE
    while bad.any():
        x[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(x) > _LOBE_ENVELOPE
    return x * sigma


def assign_subpaths_to_lobes(
    rng: np.random.Generator,
    clusters: List[TimeCluster],
    dep_lobes: List[SpatialLobe],
    arr_lobes: List[SpatialLobe],
    xpr_mu_db: float = 13.0,
    xpr_sigma_db: float = 4.0,
    state: LinkState = LinkState.NLOS,
) -> ChannelRealization:
    """Scatter every subpath into a uniformly chosen departure and arrival lobe.

    Ray angles are the lobe mean plus a Gaussian offset with the lobe's
    spreads, truncated at three spreads. Absolute ray delay is the cluster
    excess delay plus the intra-cluster delay.
    """
    if not clusters or not dep_lobes or not arr_lobes:
        raise ValueError("need non-empty clusters and lobes")
    delay = np.concatenate([c.excess_delay + c.intra_delays for c in clusters])
    power = np.concatenate([c.subpath_powers for c in clusters])
    n = len(power)

    dep_idx = rng.integers(0, len(dep_lobes), n)
    arr_idx = rng.integers(0, len(arr_lobes), n)

    def scatter(lobes, idx):
        mean_az = np.array([lb.mean_az for lb in lobes])[idx]
        mean_zen = np.array([lb.mean_zen for lb in lobes])[idx]
        az_sp = np.array([lb.az_spread for lb in lobes])[idx]
        zen_sp = np.array([lb.zen_spread for lb in lobes])[idx]
        return (wrap_azimuth(mean_az + _truncated_normal(rng, az_sp, n)),
                reflect_zenith(mean_zen + _truncated_normal(rng, zen_sp, n)))

    aod_az, aod_zen = scatter(dep_lobes, dep_idx)
    aoa_az, aoa_zen = scatter(arr_lobes, arr_idx)
    xpr = 10.0 ** (rng.normal(xpr_mu_db, xpr_sigma_db, n) / 10.0)
    phases = rng.uniform(0.0, 2.0 * np.pi, (n, 4))
    cluster_id = np.concatenate([np.full(c.n_subpaths, i) for i, c in enumerate(clusters)])
    return ChannelRealization(
        delay=delay, power=power / power.sum(),
        aod_az=aod_az, aod_zen=aod_zen, aoa_az=aoa_az, aoa_zen=aoa_zen,
        xpr=xpr, phases=phases, link_state=state, model=Model.NYUSIM,
        extras={"cluster": cluster_id, "dep_lobe": dep_idx, "arr_lobe": arr_idx},
    )


def _rotate(lobes: List[SpatialLobe], az: float) -> List[SpatialLobe]:
    return [SpatialLobe(lb.kind, float(wrap_azimuth(lb.mean_az + az)), lb.mean_zen,
                        lb.az_spread, lb.zen_spread) for lb in lobes]


def realize_nyusim(
    rng: np.random.Generator,
    state: LinkState,
    los: LinkGeometry,
    table: Dict[LinkState, NyuParams] = None,
    path_loss_db: float = 0.0,
) -> ChannelRealization:
    """Draw a complete TCSL realization for one link.

    Lobe azimuths are drawn relative to the geometric LOS directions, so a
    partial departure span is centred on the UE bearing. In LOS a specular
    ray on the LOS directions carries ``los_power_fraction`` of the power.
    """
    table = load_nyu_table() if table is None else table
    params = table[state]
    counts = draw_counts_nyu(rng, state)
    clusters = generate_time_clusters(rng, counts.subpaths, params)
    dep, arr = generate_spatial_lobes(rng, counts.n_dep, counts.n_arr, params)
    dep, arr = _rotate(dep, los.aod_az), _rotate(arr, los.aoa_az)
    real = assign_subpaths_to_lobes(rng, clusters, dep, arr,
                                    params.xpr_mu_db, params.xpr_sigma_db, state)
    real.extras.update(counts=counts, dep_lobes=dep, arr_lobes=arr)
    real.path_loss_db = float(path_loss_db)

    frac = params.los_power_fraction if state is LinkState.LOS else 0.0
    if frac > 0:
        real = ChannelRealization(
            delay=np.concatenate([[0.0], real.delay]),
            power=np.concatenate([[frac], (1.0 - frac) * real.power]),
            aod_az=np.concatenate([[los.aod_az], real.aod_az]),
            aod_zen=np.concatenate([[los.aod_zen], real.aod_zen]),
            aoa_az=np.concatenate([[los.aoa_az], real.aoa_az]),
            aoa_zen=np.concatenate([[los.aoa_zen], real.aoa_zen]),
            xpr=np.concatenate([[np.inf], real.xpr]),
            phases=np.vstack([np.zeros((1, 4)), real.phases]),
            specular=np.concatenate([[True], real.specular]),
            link_state=state, path_loss_db=real.path_loss_db, model=Model.NYUSIM,
            extras=real.extras,
        )
        real.power = real.power / real.power.sum()
    return real
