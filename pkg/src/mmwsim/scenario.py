"""Scenario description, LOS probability, large-scale path loss and cell sizing.

Distances follow the usual convention: LOS probability is a function of the
2D (ground) distance, path loss of the 3D distance. All path-loss values are
in dB, frequencies in GHz, distances in meters.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm

from .errors import ConfigError
from .mathkit import sample_normal

__all__ = [
    "Environment",
    "Model",
    "LinkState",
    "Scenario",
    "LinkBudget",
    "PathLossParams",
    "BS_HEIGHT_M",
    "UE_HEIGHT_M",
    "distance_3d",
    "los_probability_3gpp",
    "los_probability_nyusim",
    "nyusim_los_inner",
    "draw_link_state",
    "path_loss_ci",
    "path_loss_ci_two_slope",
    "path_loss_abg",
    "mean_path_loss",
    "sample_shadow_fading",
    "noise_power_dbm",
    "max_path_loss",
    "cell_radius_for_coverage",
    "load_pathloss_table",
]


class Environment(str, enum.Enum):
    UMI = "UMi-StreetCanyon"
    UMA = "UMa"

    @classmethod
    def parse(cls, text: str) -> "Environment":
        key = text.strip().lower()
        for env in cls:
            if key in (env.value.lower(), env.name.lower()):
                return env
        raise ValueError(f"unknown environment {text!r}")


class Model(str, enum.Enum):
    THREEGPP = "3gpp"
    NYUSIM = "nyusim"


class LinkState(str, enum.Enum):
    LOS = "LOS"
    NLOS = "NLOS"


@dataclass(frozen=True)
class Scenario:
    environment: Environment = Environment.UMI
    model: Model = Model.THREEGPP


BS_HEIGHT_M = {Environment.UMI: 10.0, Environment.UMA: 25.0}
UE_HEIGHT_M = 1.5

# all-LOS distance and decay distance of the 3GPP UMi/UMa formula (UE height <= 13 m)
_LOS_3GPP_CONSTANTS = {Environment.UMI: (18.0, 36.0), Environment.UMA: (18.0, 63.0)}

SPEED_OF_LIGHT = 299_792_458.0
THERMAL_NOISE_DBM_HZ = -174.0


@dataclass(frozen=True)
class LinkBudget:
    """Quantities that fix the maximum tolerable path loss at the cell edge.

    ``array_gain_db`` is the combined beamforming gain of the BS and UE arrays
    counted on top of the BS element gain when sizing the cell.
    """

    tx_power_dbm: float = 30.0
    carrier_ghz: float = 28.0
    bandwidth_mhz: float = 100.0
    noise_figure_db: float = 10.0
    bs_element_max_gain_db: float = 10.0
    array_gain_db: float = 0.0
    snr_threshold_db: float = 5.0
    coverage_fraction: float = 0.95

    def __post_init__(self):
        if not self.bandwidth_mhz > 0:
            raise ConfigError(f"bandwidth_mhz must be positive, got {self.bandwidth_mhz}")
        if not 0 < self.coverage_fraction < 1:
            raise ConfigError(f"coverage_fraction must lie in (0, 1), got {self.coverage_fraction}")
        if not 0.5 <= self.carrier_ghz <= 100:
            raise ConfigError(f"carrier_ghz must lie in [0.5, 100], got {self.carrier_ghz}")


@dataclass(frozen=True)
class PathLossParams:
    """Per-(environment, state) large-scale parameters.

    ``ple`` drives the CI model (used by NYUSIM); the ``abg_*`` triple drives
    the ABG model (used by the 3GPP generator). ``los_d1``/``los_d2`` are the
    NYUSIM LOS-probability distance constants.
    """

    ple: float
    sf_sigma_db: float
    abg_alpha: float
    abg_beta_db: float
    abg_gamma: float
    los_d1_m: float = 22.0
    los_d2_m: float = 115.0

    def __post_init__(self):
        if not self.ple > 0:
            raise ConfigError(f"ple must be positive, got {self.ple}")
        if self.sf_sigma_db < 0:
            raise ConfigError(f"sf_sigma_db must be non-negative, got {self.sf_sigma_db}")
        if not (self.los_d1_m > 0 and self.los_d2_m > 0):
            raise ConfigError("LOS-probability distance constants must be positive")


PathLossTable = Dict[Tuple[Environment, LinkState], PathLossParams]


def load_pathloss_table(path: Union[str, Path, None] = None) -> PathLossTable:
    """Read the path-loss parameter CSV (shipped default when ``path`` is None)."""
    if path is None:
        text = resources.files("mmwsim").joinpath("data/pathloss_params.csv").read_text()
    else:
        text = Path(path).read_text()
    table: PathLossTable = {}
    for lineno, row in enumerate(csv.DictReader(text.splitlines()), start=2):
        try:
            key = (Environment.parse(row["environment"]), LinkState(row["state"].strip().upper()))
            table[key] = PathLossParams(
                ple=float(row["ple"]),
                sf_sigma_db=float(row["sf_sigma_db"]),
                abg_alpha=float(row["abg_alpha"]),
                abg_beta_db=float(row["abg_beta_db"]),
                abg_gamma=float(row["abg_gamma"]),
                los_d1_m=float(row["los_d1_m"]),
                los_d2_m=float(row["los_d2_m"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"{path or 'pathloss_params.csv'}: line {lineno}: {exc}") from exc
    return table


def distance_3d(d2d, env: Environment, ue_height: float = UE_HEIGHT_M):
    return np.hypot(d2d, BS_HEIGHT_M[env] - ue_height)


def _check_distance(d2d):
    if np.any(np.asarray(d2d) < 0):
        raise ValueError("distance must be non-negative")


def _los_form(d2d, d1: float, d2: float):
    d = np.asarray(d2d, dtype=float)
    with np.errstate(divide="ignore"):
        near = np.minimum(np.where(d > 0, d1 / np.where(d > 0, d, 1.0), 1.0), 1.0)
    decay = np.exp(-d / d2)
    out = near * (1.0 - decay) + decay
    return float(out) if out.ndim == 0 else out


def los_probability_3gpp(d2d, env: Environment = Environment.UMI, ue_height: float = UE_HEIGHT_M):
    """3GPP LOS probability for UMi street canyon / UMa.

    The UMa height correction vanishes for UE heights up to 13 m, which covers
    every configuration this package builds.
    """
    _check_distance(d2d)
    if env is Environment.UMA and ue_height > 13.0:
        raise ValueError("UMa LOS probability implemented for UE heights <= 13 m only")
    d1, d2 = _LOS_3GPP_CONSTANTS[env]
    return _los_form(d2d, d1, d2)


def nyusim_los_inner(d2d, d1: float, d2: float):
    """The 3GPP-form expression that NYUSIM squares."""
    return _los_form(d2d, d1, d2)


def los_probability_nyusim(d2d, d1: float = 22.0, d2: float = 115.0):
    """NYUSIM LOS probability: the squared 3GPP form with NYU-fitted constants.

    Use ``PathLossParams.los_d1_m``/``los_d2_m`` for the shipped per-scenario
    constants (UMi 22/115 m, UMa 20/160 m).
    """
    _check_distance(d2d)
    inner = nyusim_los_inner(d2d, d1, d2)
    return inner * inner


def draw_link_state(rng: np.random.Generator, p_los: float) -> LinkState:
    if not 0.0 <= p_los <= 1.0:
        raise ValueError(f"LOS probability must lie in [0, 1], got {p_los}")
    return LinkState.LOS if rng.random() < p_los else LinkState.NLOS


def _check_pl_args(fc, d3d):
    if np.any(np.asarray(d3d) < 1.0):
        raise ValueError("path-loss models are defined for d3d >= 1 m")
    if np.any(np.asarray(fc) <= 0):
        raise ValueError("carrier frequency must be positive")


def path_loss_ci(fc, d3d, ple: float, sf=0.0):
    """Close-in (1 m free-space reference) path loss in dB."""
    _check_pl_args(fc, d3d)
    return 32.4 + 10.0 * ple * np.log10(d3d) + 20.0 * np.log10(fc) + sf


def breakpoint_distance(fc: float, env: Environment, ue_height: float = UE_HEIGHT_M) -> float:
    """Breakpoint distance ``4 h'_BS h'_UT f_c / c`` with 1 m effective environment height."""
    return 4.0 * (BS_HEIGHT_M[env] - 1.0) * (ue_height - 1.0) * fc * 1e9 / SPEED_OF_LIGHT


def path_loss_ci_two_slope(fc, d3d, ple: float, d_break: float, far_ple: float = 4.0, sf=0.0):
    """CI path loss with a steeper slope beyond ``d_break`` (continuous at the break)."""
    _check_pl_args(fc, d3d)
    return _two_slope(lambda d: path_loss_ci(fc, d, ple), d3d, d_break, far_ple) + sf


def _two_slope(pl, d3d, d_break: float, far_ple: float):
    d3d = np.asarray(d3d, dtype=float)
    d_break = max(d_break, 1.0)
    out = pl(np.minimum(d3d, d_break)) + 10.0 * far_ple * np.log10(np.maximum(d3d / d_break, 1.0))
    return float(out) if out.ndim == 0 else out


def path_loss_abg(fc, d3d, params: PathLossParams, sf=0.0):
    """Alpha-beta-gamma path loss in dB."""
    _check_pl_args(fc, d3d)
    return (10.0 * params.abg_alpha * np.log10(d3d) + params.abg_beta_db
            + 10.0 * params.abg_gamma * np.log10(fc) + sf)


def mean_path_loss(
    model: Model,
    state: LinkState,
    fc: float,
    d3d,
    table: PathLossTable,
    env: Environment = Environment.UMI,
    breakpoint: bool = False,
):
    """Mean (shadowing-free) path loss a generator applies to a link.

    NYUSIM uses CI with the state's PLE. The 3GPP generator uses ABG and, as
    in TR 38.900, floors the NLOS value at the LOS value.
    """
    params = table[(env, state)]
    if model is Model.NYUSIM:
        if breakpoint and state is LinkState.LOS:
            return path_loss_ci_two_slope(fc, d3d, params.ple, breakpoint_distance(fc, env))
        return path_loss_ci(fc, d3d, params.ple)
    los = table[(env, LinkState.LOS)]
    if breakpoint:
        pl_los = _two_slope(lambda d: path_loss_abg(fc, d, los), d3d, breakpoint_distance(fc, env), 4.0)
    else:
        pl_los = path_loss_abg(fc, d3d, los)
    if state is LinkState.LOS:
        return pl_los
    return np.maximum(pl_los, path_loss_abg(fc, d3d, params))


def sample_shadow_fading(rng: np.random.Generator, sigma: float, size=None):
    """Zero-mean Gaussian shadow fading in dB."""
    return sample_normal(rng, sigma, size)


def noise_power_dbm(bandwidth_mhz: float, noise_figure_db: float) -> float:
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(bandwidth_mhz * 1e6) + noise_figure_db


def max_path_loss(budget: LinkBudget) -> float:
    """Largest path loss that still meets the SNR threshold."""
    gain = budget.bs_element_max_gain_db + budget.array_gain_db
    return (budget.tx_power_dbm + gain
            - noise_power_dbm(budget.bandwidth_mhz, budget.noise_figure_db)
            - budget.snr_threshold_db)


def cell_radius_for_coverage(
    budget: LinkBudget,
    params: PathLossParams,
    state: LinkState = LinkState.NLOS,
    model: Model = Model.NYUSIM,
    mean_pl: Optional[Callable[[float], float]] = None,
    min_distance: float = 10.0,
) -> float:
    """Distance at which the coverage-fraction quantile of path loss hits the budget.

    Solves ``mean_pl(d) + z * sigma = PL_max`` with ``z`` the standard-normal
    quantile of ``budget.coverage_fraction``. ``mean_pl`` defaults to CI with
    ``params.ple`` (NYUSIM) or ABG (3GPP); pass a callable to size a cell
    under any other mean path-loss law. ``state`` only documents which row
    ``params`` came from.

    Raises
    ------
    ConfigError
        If even ``min_distance`` violates the budget; the message states the
        deficit in dB.
    """
    del state
    if mean_pl is None:
        if model is Model.NYUSIM:
            mean_pl = lambda d: float(path_loss_ci(budget.carrier_ghz, d, params.ple))  # noqa: E731
        else:
            mean_pl = lambda d: float(path_loss_abg(budget.carrier_ghz, d, params))  # noqa: E731
    z = float(norm.ppf(budget.coverage_fraction))
    target = max_path_loss(budget) - z * params.sf_sigma_db
    deficit = mean_pl(min_distance) - target
    if deficit >= 0:
        raise ConfigError(
            f"link budget cannot cover the {min_distance:g} m lower bound: short by {deficit:.2f} dB"
        )
    # mean path loss is increasing in distance; bracket in log-distance
    hi = min_distance
    while mean_pl(hi) < target:
        hi *= 10.0
        if hi > 1e9:
            raise ConfigError("link budget admits an unbounded cell radius")
    return float(brentq(lambda d: mean_pl(d) - target, min_distance, hi, xtol=1e-12, rtol=1e-14))


def with_los_constants(params: PathLossParams, d1: float, d2: float) -> PathLossParams:
    return replace(params, los_d1_m=d1, los_d2_m=d2)
