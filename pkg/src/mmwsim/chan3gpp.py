"""3GPP TR 38.900-style clustered channel generator.

Clusters are joint delay-angle objects: each of a fixed number of clusters
gets one delay, one power and one (AoD, AoA, ZoD, ZoA) centroid, and is then
expanded into 20 rays with fixed angular offsets around that centroid.
Large-scale parameters (spreads, K-factor, XPR) come from a CSV table and are
drawn independently per link.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from .errors import ConfigError
from .rays import ChannelRealization, LinkGeometry, reflect_zenith, wrap_azimuth
from .scenario import Environment, LinkState, Model

__all__ = [
    "LspStats",
    "Lsp3gpp",
    "load_lsp_table",
    "load_ray_offsets",
    "cluster_counts_3gpp",
    "draw_lsp",
    "generate_cluster_delays",
    "generate_cluster_powers",
    "generate_cluster_angles",
    "expand_rays",
    "realize_3gpp",
]

# (n_clusters, rays_per_cluster) per environment and state
_CLUSTER_COUNTS = {
    (Environment.UMI, LinkState.LOS): (12, 20),
    (Environment.UMI, LinkState.NLOS): (19, 20),
    (Environment.UMA, LinkState.LOS): (12, 20),
    (Environment.UMA, LinkState.NLOS): (20, 20),
}

# NLOS azimuth / zenith scaling factors keyed by cluster count
_C_PHI_NLOS = {4: 0.779, 5: 0.860, 8: 1.018, 10: 1.090, 11: 1.123, 12: 1.146,
               14: 1.190, 15: 1.211, 16: 1.226, 19: 1.273, 20: 1.289, 25: 1.358}
_C_THETA_NLOS = {8: 0.889, 10: 0.957, 11: 1.031, 12: 1.104, 15: 1.1088,
                 19: 1.184, 20: 1.178, 25: 1.282}

# angular spreads are capped as in TR 38.900 (degrees)
_MAX_AZIMUTH_SPREAD = 104.0
_MAX_ZENITH_SPREAD = 52.0


@dataclass(frozen=True)
class LspStats:
    """One row of the LSP table: log10-normal spreads and per-cluster constants."""

    ds_mu: float
    ds_sigma: float
    asd_mu: float
    asd_sigma: float
    asa_mu: float
    asa_sigma: float
    zsa_mu: float
    zsa_sigma: float
    zsd_mu: float
    zsd_sigma: float
    k_mu_db: float
    k_sigma_db: float
    xpr_mu_db: float
    xpr_sigma_db: float
    delay_proportionality: float
    cluster_shadow_sigma_db: float
    c_aod_deg: float
    c_aoa_deg: float
    c_zod_deg: float
    c_zoa_deg: float


@dataclass(frozen=True)
class Lsp3gpp:
    """Large-scale parameters drawn for one link."""

    delay_spread: float
    asd: float
    asa: float
    zsd: float
    zsa: float
    k_db: float
    cluster_shadow_sigma_db: float = 3.0

    def __post_init__(self):
        if min(self.delay_spread, self.asd, self.asa, self.zsd, self.zsa) < 0:
            raise ValueError("spreads must be non-negative")


LspTable = Dict[Tuple[Environment, LinkState], LspStats]


def load_lsp_table(path: Union[str, Path, None] = None) -> LspTable:
    if path is None:
        text = resources.files("mmwsim").joinpath("data/lsp_3gpp.csv").read_text()
    else:
        text = Path(path).read_text()
    names = LspStats.__dataclass_fields__.keys()
    table: LspTable = {}
    for lineno, row in enumerate(csv.DictReader(text.splitlines()), start=2):
        try:
            key = (Environment.parse(row["scenario"]), LinkState(row["state"].strip().upper()))
            table[key] = LspStats(**{k: float(row[k]) for k in names})
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"{path or 'lsp_3gpp.csv'}: line {lineno}: {exc}") from exc
    return table


def load_ray_offsets(path: Union[str, Path, None] = None) -> np.ndarray:
    """The 20 normalized intra-cluster ray offsets."""
    if path is None:
        text = resources.files("mmwsim").joinpath("data/ray_offsets.csv").read_text()
    else:
        text = Path(path).read_text()
    return np.array([float(r["offset"]) for r in csv.DictReader(text.splitlines())])


_RAY_OFFSETS = load_ray_offsets()


def cluster_counts_3gpp(state: LinkState, env: Environment = Environment.UMI) -> Tuple[int, int]:
    return _CLUSTER_COUNTS[(env, state)]


def draw_lsp(rng: np.random.Generator, stats: LspStats) -> Lsp3gpp:
    """Draw one link's spreads (log-normal) and K-factor (normal in dB)."""
    z = rng.standard_normal(6)
    return Lsp3gpp(
        delay_spread=10.0 ** (stats.ds_mu + stats.ds_sigma * z[0]),
        asd=min(10.0 ** (stats.asd_mu + stats.asd_sigma * z[1]), _MAX_AZIMUTH_SPREAD),
        asa=min(10.0 ** (stats.asa_mu + stats.asa_sigma * z[2]), _MAX_AZIMUTH_SPREAD),
        zsd=min(10.0 ** (stats.zsd_mu + stats.zsd_sigma * z[3]), _MAX_ZENITH_SPREAD),
        zsa=min(10.0 ** (stats.zsa_mu + stats.zsa_sigma * z[4]), _MAX_ZENITH_SPREAD),
        k_db=stats.k_mu_db + stats.k_sigma_db * z[5],
        cluster_shadow_sigma_db=stats.cluster_shadow_sigma_db,
    )


def generate_cluster_delays(rng: np.random.Generator, n: int, delay_spread: float,
                            proportionality: float) -> np.ndarray:
    """Exponential cluster delays, sorted ascending and shifted to start at zero."""
    if n < 1:
        raise ValueError("need at least one cluster")
    if not delay_spread > 0:
        raise ValueError("delay spread must be positive")
    raw = -proportionality * delay_spread * np.log(1.0 - rng.random(n))
    raw.sort()
    return raw - raw[0]


def generate_cluster_powers(rng: np.random.Generator, delays, delay_spread: float,
                            proportionality: float, shadow_sigma_db: float) -> np.ndarray:
    """Exponential power-delay law with per-cluster log-normal shadowing, summing to 1."""
    delays = np.asarray(delays, dtype=float)
    shadow = rng.normal(0.0, shadow_sigma_db, len(delays)) if shadow_sigma_db > 0 else 0.0
    decay = (proportionality - 1.0) / (proportionality * delay_spread)
    p = np.exp(-delays * decay) * 10.0 ** (-shadow / 10.0)
    return p / p.sum()


def _scaling(table: dict, n: int) -> float:
    if n in table:
        return table[n]
    keys = np.array(sorted(table))
    return float(np.interp(n, keys, [table[k] for k in keys]))


def generate_cluster_angles(
    rng: np.random.Generator,
    powers,
    lsp: Lsp3gpp,
    state: LinkState,
    los: LinkGeometry,
) -> np.ndarray:
    """Per-cluster centroid angles, shape ``(n, 4)``: (aod_az, aod_zen, aoa_az, aoa_zen).

    Azimuth offsets follow the wrapped-Gaussian inverse
    ``2 (AS/1.4) sqrt(-ln(P/Pmax)) / C``, zenith offsets the Laplacian
    inverse ``-ZS ln(P/Pmax) / C``, each with a random sign and a small
    Gaussian jitter of ``spread/7``. In LOS the whole set is shifted so the
    first (strongest, specular-bearing) cluster sits on the geometric LOS
    direction.
    """
    p = np.asarray(powers, dtype=float)
    n = len(p)
    rel = np.maximum(p / p.max(), 1e-300)
    c_phi = _scaling(_C_PHI_NLOS, n)
    c_theta = _scaling(_C_THETA_NLOS, n)
    if state is LinkState.LOS:
        k = lsp.k_db
        c_phi *= 1.1035 - 0.028 * k - 0.002 * k**2 + 0.0001 * k**3
        c_theta *= 1.3086 + 0.0339 * k - 0.0077 * k**2 + 0.0002 * k**3

    def azimuths(spread: float, anchor: float) -> np.ndarray:
        base = 2.0 * (spread / 1.4) * np.sqrt(-np.log(rel)) / c_phi
        sign = rng.choice((-1.0, 1.0), n)
        jitter = rng.normal(0.0, spread / 7.0, n) if spread > 0 else np.zeros(n)
        off = sign * base + jitter
        if state is LinkState.LOS:
            off = off - off[0]
        return wrap_azimuth(off + anchor)

    def zeniths(spread: float, anchor: float) -> np.ndarray:
        base = -spread * np.log(rel) / c_theta
        sign = rng.choice((-1.0, 1.0), n)
        jitter = rng.normal(0.0, spread / 7.0, n) if spread > 0 else np.zeros(n)
        off = sign * base + jitter
        if state is LinkState.LOS:
            off = off - off[0]
        return reflect_zenith(off + anchor)

    aoa_az = azimuths(lsp.asa, los.aoa_az)
    aod_az = azimuths(lsp.asd, los.aod_az)
    aoa_zen = zeniths(lsp.zsa, los.aoa_zen)
    aod_zen = zeniths(lsp.zsd, los.aod_zen)
    return np.column_stack([aod_az, aod_zen, aoa_az, aoa_zen])


def expand_rays(
    rng: np.random.Generator,
    angles: np.ndarray,
    power: float,
    rays_per_cluster: int,
    spreads: Tuple[float, float, float, float],
    xpr_mu_db: float,
    xpr_sigma_db: float,
    offsets: np.ndarray = None,
) -> dict:
    """Expand one cluster centroid into equal-power rays.

    ``spreads`` are the intra-cluster spreads (aod, zod, aoa, zoa) in degrees
    that scale the fixed offset table. The offsets are randomly paired across
    the four angle dimensions (one permutation per dimension). Returns a dict
    of column arrays ready for :class:`ChannelRealization`.
    """
    offsets = _RAY_OFFSETS if offsets is None else np.asarray(offsets)
    if rays_per_cluster != len(offsets):
        raise ValueError(f"offset table has {len(offsets)} entries, "
                         f"cannot expand into {rays_per_cluster} rays")
    m = rays_per_cluster
    cols = []
    for dim in range(4):
        perm = offsets[rng.permutation(m)]
        cols.append(angles[dim] + spreads[dim] * perm)
    xpr = 10.0 ** (rng.normal(xpr_mu_db, xpr_sigma_db, m) / 10.0)
    phases = rng.uniform(0.0, 2.0 * np.pi, (m, 4))
    return {
        "power": np.full(m, power / m),
        "aod_az": wrap_azimuth(cols[0]),
        "aod_zen": reflect_zenith(cols[1]),
        "aoa_az": wrap_azimuth(cols[2]),
        "aoa_zen": reflect_zenith(cols[3]),
        "xpr": xpr,
        "phases": phases,
    }


def realize_3gpp(
    rng: np.random.Generator,
    state: LinkState,
    los: LinkGeometry,
    table: LspTable = None,
    env: Environment = Environment.UMI,
    path_loss_db: float = 0.0,
) -> ChannelRealization:
    """Draw a complete 3GPP clustered realization for one link.

    NLOS yields ``n_clusters * 20`` rays. LOS additionally carries one
    specular ray on the geometric direction holding ``K/(K+1)`` of the power.
    Small-scale powers are normalized to sum to one.
    """
    table = load_lsp_table() if table is None else table
    stats = table[(env, state)]
    n, m = cluster_counts_3gpp(state, env)
    lsp = draw_lsp(rng, stats)
    delays = generate_cluster_delays(rng, n, lsp.delay_spread, stats.delay_proportionality)
    powers = generate_cluster_powers(rng, delays, lsp.delay_spread,
                                     stats.delay_proportionality, lsp.cluster_shadow_sigma_db)
    k_lin = 10.0 ** (lsp.k_db / 10.0) if state is LinkState.LOS else 0.0
    angle_powers = powers.copy()
    if state is LinkState.LOS:
        powers = powers / (1.0 + k_lin)
        angle_powers = powers.copy()
        angle_powers[0] += k_lin / (1.0 + k_lin)
    centroids = generate_cluster_angles(rng, angle_powers, lsp, state, los)

    spreads = (stats.c_aod_deg, stats.c_zod_deg, stats.c_aoa_deg, stats.c_zoa_deg)
    parts = [expand_rays(rng, centroids[i], powers[i], m, spreads,
                         stats.xpr_mu_db, stats.xpr_sigma_db) for i in range(n)]
    cols = {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}
    cols["delay"] = np.repeat(delays, m)
    cols["specular"] = np.zeros(n * m, dtype=bool)

    if state is LinkState.LOS:
        spec = {
            "power": [k_lin / (1.0 + k_lin)], "delay": [0.0],
            "aod_az": [los.aod_az], "aod_zen": [los.aod_zen],
            "aoa_az": [los.aoa_az], "aoa_zen": [los.aoa_zen],
            "xpr": [np.inf], "phases": np.zeros((1, 4)), "specular": [True],
        }
        cols = {key: np.concatenate([np.asarray(spec[key]), cols[key]]) for key in cols}

    cols["power"] = cols["power"] / cols["power"].sum()
    return ChannelRealization(
        link_state=state, path_loss_db=path_loss_db, model=Model.THREEGPP,
        extras={"lsp": lsp, "n_clusters": n, "rays_per_cluster": m},
        **cols,
    )
