"""User dropping, per-drop pipeline and campaign aggregation.

Every drop owns the random stream ``(seed; model, drop, attempt)``, so the
result of a drop does not depend on which other drops or models are run, on
their order, or on the number of worker processes.
"""

from __future__ import annotations

import functools
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .antenna import ChannelMatrix, assemble_channel
from .beamform import PrecoderSet, bd_precode, eigen_report, hybrid_precode, rayleigh_baseline, spectral_efficiency
from .chan3gpp import load_lsp_table, realize_3gpp
from .channyu import load_nyu_table, realize_nyusim
from .config import SystemConfig
from .errors import DegenerateDropError
from .mathkit import RngStream
from .rays import LinkGeometry
from .scenario import (
    LinkState,
    Model,
    cell_radius_for_coverage,
    draw_link_state,
    los_probability_3gpp,
    los_probability_nyusim,
    load_pathloss_table,
    mean_path_loss,
    noise_power_dbm,
    sample_shadow_fading,
)

__all__ = [
    "UserPosition",
    "DropResult",
    "CampaignResult",
    "MODEL_STREAM",
    "WORKERS_ENV",
    "MAX_ATTEMPTS",
    "drop_users",
    "cell_radius",
    "run_drop",
    "run_campaign",
    "empirical_cdf",
]

log = logging.getLogger(__name__)

WORKERS_ENV = "MMWSIM_WORKERS"
MODEL_STREAM = {"3gpp": 0, "nyusim": 1, "rayleigh": 2}
SCHEMES = ("hybrid", "bd")
MAX_ATTEMPTS = 100


class UserPosition(NamedTuple):
    d2d: float
    azimuth: float


def drop_users(rng: np.random.Generator, k: int, lower: float, upper: float,
               half_width_deg: float = 180.0) -> List[UserPosition]:
    """Drop ``k`` users uniformly over the annulus ``lower <= d <= upper``.

    Distances have density proportional to ``d``; bearings are uniform on
    ``[-half_width_deg, half_width_deg)``.
    """
    if k < 1:
        raise ValueError("need at least one user")
    if not 0 <= lower < upper:
        raise ValueError(f"invalid radius bounds [{lower}, {upper}]")
    d = np.sqrt(rng.uniform(lower**2, upper**2, k))
    az = rng.uniform(-half_width_deg, half_width_deg, k)
    return [UserPosition(float(a), float(b)) for a, b in zip(d, az)]


@functools.lru_cache(maxsize=None)
def _tables(pathloss: str, lsp: str, nyu: str):
    return (load_pathloss_table(pathloss or None), load_lsp_table(lsp or None),
            load_nyu_table(nyu or None))


def _config_tables(config: SystemConfig):
    return _tables(config.pathloss_table, config.lsp_table, config.nyusim_table)


def _path_model(model: str) -> Model:
    return Model.NYUSIM if model == "nyusim" else Model.THREEGPP


def cell_radius(config: SystemConfig, model: str) -> float:
    """Ground-distance cell radius for ``model`` under the configured budget."""
    pl_table, _, _ = _config_tables(config)
    env = config.environment
    state = config.sizing_state
    pmodel = _path_model(model)
    params = pl_table[(env, state)]
    d3d = cell_radius_for_coverage(
        config.link_budget, params, state, pmodel,
        mean_pl=lambda d: float(mean_path_loss(pmodel, state, config.carrier_ghz, d, pl_table,
                                               env, config.breakpoint)),
        min_distance=config.min_distance_m,
    )
    dh = {"umi": 10.0, "uma": 25.0}[config.scenario] - config.ue_height_m
    return float(np.sqrt(max(d3d**2 - dh**2, config.min_distance_m**2 + 1e-9)))


@dataclass
class DropResult:
    model: str
    index: int
    eigenvalues: np.ndarray
    se: Dict[str, np.ndarray]
    attempts: int
    positions: List[UserPosition]
    states: List[LinkState]
    path_loss_db: List[float]
    # filled only when run_drop(..., detail=True)
    channels: Optional[List[ChannelMatrix]] = None
    precoders: Optional[Dict[str, PrecoderSet]] = None


def _link(rng, config: SystemConfig, model: str, pos: UserPosition, tables):
    pl_table, lsp_table, nyu_table = tables
    env = config.environment
    geo = LinkGeometry.from_position(pos.d2d, pos.azimuth, env, config.ue_height_m)
    if model == "nyusim":
        row = pl_table[(env, LinkState.LOS)]
        p_los = los_probability_nyusim(geo.d2d, row.los_d1_m, row.los_d2_m)
    else:
        p_los = los_probability_3gpp(geo.d2d, env, config.ue_height_m)
    state = draw_link_state(rng, p_los)
    pmodel = _path_model(model)
    sigma = pl_table[(env, state)].sf_sigma_db
    pl = float(mean_path_loss(pmodel, state, config.carrier_ghz, geo.d3d, pl_table, env, config.breakpoint))
    pl += float(sample_shadow_fading(rng, sigma))
    return geo, state, pl


def _attempt(stream: RngStream, config: SystemConfig, model: str, radius: float, tables,
             detail: bool = False) -> DropResult:
    rng = stream.generator()
    k = config.users
    positions = drop_users(rng, k, config.min_distance_m, radius, config.sector_half_width_deg)
    links = [_link(rng, config, model, p, tables) for p in positions]
    states = [s for _, s, _ in links]
    pls = [pl for _, _, pl in links]

    if model == "rayleigh":
        h = rayleigh_baseline(rng, (config.ue_array.n_elements, config.bs_array.n_elements),
                              -pls[0], config.carrier_ghz)
        return DropResult(model, -1, eigen_report(h).eigenvalues, {}, 1, positions, states, pls,
                          [h] if detail else None)

    _, lsp_table, nyu_table = tables
    bs = config.bs_array
    ues, reals, chans = [], [], []
    for geo, state, pl in links:
        if model == "nyusim":
            real = realize_nyusim(rng, state, geo, nyu_table, pl)
        else:
            real = realize_3gpp(rng, state, geo, lsp_table, config.environment, pl)
        ue = config.ue_array.facing(geo.aoa_az)
        ues.append(ue)
        reals.append(real)
        chans.append(assemble_channel(real, bs, ue, config.carrier_ghz))

    eig = eigen_report(chans[0]).eigenvalues
    p_total = 10.0 ** (config.tx_power_dbm / 10.0)
    noise = 10.0 ** (noise_power_dbm(config.bandwidth_mhz, config.noise_figure_db) / 10.0)
    hybrid = hybrid_precode(chans, reals, p_total, bs, ues)
    bd = bd_precode(chans, p_total)
    se = {"hybrid": spectral_efficiency(hybrid, chans, noise),
          "bd": spectral_efficiency(bd, chans, noise)}
    res = DropResult(model, -1, eig, se, 1, positions, states, pls)
    if detail:
        res.channels = chans
        res.precoders = {"hybrid": hybrid, "bd": bd}
    return res


def run_drop(config: SystemConfig, model: str, index: int, radius: Optional[float] = None,
             detail: bool = False) -> DropResult:
    """Evaluate drop ``index`` of ``model``; deterministic in ``(config.seed, model, index)``.

    Drops whose effective multi-user channel is degenerate are redrawn on
    the next attempt stream; ``attempts`` records how many draws were used.
    With ``detail`` the channel matrices and precoders are kept on the result.
    """
    tables = _config_tables(config)
    if radius is None:
        radius = cell_radius(config, "3gpp" if model == "rayleigh" else model)
    base = RngStream(config.seed).substream(MODEL_STREAM[model], index)
    for attempt in range(MAX_ATTEMPTS):
        try:
            res = _attempt(base.substream(attempt), config, model, radius, tables, detail)
        except DegenerateDropError:
            log.debug("drop %d of %s degenerate on attempt %d", index, model, attempt)
            continue
        res.index = index
        res.attempts = attempt + 1
        return res
    raise DegenerateDropError(f"drop {index} of {model} degenerate after {MAX_ATTEMPTS} attempts")


def _run_chunk(args) -> List[DropResult]:
    config, model, indices, radius = args
    return [run_drop(config, model, i, radius) for i in indices]


@dataclass
class CampaignResult:
    """Aggregated samples of a campaign, ordered by drop index.

    ``eigenvalues[model]`` is ``drops x min(Nr, Nt)`` (user 1 of every drop);
    ``se[(model, scheme)]`` is ``drops x users``.
    """

    config: SystemConfig
    eigenvalues: Dict[str, np.ndarray] = field(default_factory=dict)
    se: Dict[Tuple[str, str], np.ndarray] = field(default_factory=dict)
    resamples: Dict[str, int] = field(default_factory=dict)
    radii: Dict[str, float] = field(default_factory=dict)
    los_fraction: Dict[str, float] = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return self.config.seed

    def eigen_spread(self, model: str) -> np.ndarray:
        ev = self.eigenvalues[model]
        with np.errstate(divide="ignore"):
            return np.where(ev[:, -1] > 0, ev[:, 0] / np.where(ev[:, -1] > 0, ev[:, -1], 1.0), np.inf)

    def eigen_ratios(self, model: str) -> np.ndarray:
        ev = self.eigenvalues[model]
        return ev / ev.sum(axis=1, keepdims=True)

    def median_se(self, model: str, scheme: str) -> float:
        return float(np.median(self.se[(model, scheme)]))

    def eigen_cdf(self, model: str, rank: int):
        return empirical_cdf(self.eigenvalues[model][:, rank - 1])

    def se_cdf(self, model: str, scheme: str):
        return empirical_cdf(self.se[(model, scheme)].ravel())


def _workers(workers: Optional[int]) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    return max(1, workers)


def run_campaign(config: SystemConfig, workers: Optional[int] = None) -> CampaignResult:
    """Run every configured model over ``config.drops`` drops.

    ``workers`` defaults to the ``MMWSIM_WORKERS`` environment variable
    (serial when unset). Results are identical for any worker count.
    """
    workers = _workers(workers)
    result = CampaignResult(config)
    jobs = []
    for model in config.models:
        radius = cell_radius(config, "3gpp" if model == "rayleigh" else model)
        result.radii[model] = radius
        n_chunks = max(1, min(config.drops, workers * 4))
        for chunk in np.array_split(np.arange(config.drops), n_chunks):
            if len(chunk):
                jobs.append((config, model, [int(i) for i in chunk], radius))

    if workers == 1:
        outputs = [_run_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_run_chunk, jobs))

    by_model: Dict[str, List[DropResult]] = {m: [] for m in config.models}
    for chunk in outputs:
        for res in chunk:
            by_model[res.model].append(res)
    for model, drops in by_model.items():
        drops.sort(key=lambda r: r.index)
        result.eigenvalues[model] = np.vstack([d.eigenvalues for d in drops])
        result.resamples[model] = sum(d.attempts - 1 for d in drops)
        states = [s for d in drops for s in d.states]
        result.los_fraction[model] = float(np.mean([s is LinkState.LOS for s in states]))
        if model != "rayleigh":
            for scheme in SCHEMES:
                result.se[(model, scheme)] = np.vstack([d.se[scheme] for d in drops])
    return result


def empirical_cdf(samples: Sequence[float]) -> List[Tuple[float, float]]:
    """Right-continuous step CDF: the ``k``-th smallest sample maps to ``k/N``."""
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise ValueError("empirical CDF of an empty sample")
    n = x.size
    return [(float(v), (i + 1) / n) for i, v in enumerate(x)]
