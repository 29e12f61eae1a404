"""Model-agnostic multipath container shared by both channel generators."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .scenario import BS_HEIGHT_M, UE_HEIGHT_M, Environment, LinkState, Model

__all__ = ["Ray", "ChannelRealization", "LinkGeometry", "wrap_azimuth", "reflect_zenith"]


class Ray(NamedTuple):
    delay: float
    power: float
    aod_az: float
    aod_zen: float
    aoa_az: float
    aoa_zen: float
    xpr: float
    phases: tuple
    specular: bool


def wrap_azimuth(az):
    """Wrap degrees onto [-180, 180)."""
    return (np.asarray(az, dtype=float) + 180.0) % 360.0 - 180.0


def reflect_zenith(zen):
    """Fold zenith angles back into [0, 180] by reflection at the poles."""
    z = np.asarray(zen, dtype=float) % 360.0
    return np.where(z > 180.0, 360.0 - z, z)


@dataclass(frozen=True)
class LinkGeometry:
    """Geometric LOS directions of a BS-UE link in the global frame (degrees)."""

    d2d: float
    d3d: float
    aod_az: float
    aod_zen: float
    aoa_az: float
    aoa_zen: float

    @classmethod
    def from_position(cls, d2d: float, azimuth_deg: float,
                      env: Environment = Environment.UMI,
                      ue_height: float = UE_HEIGHT_M) -> "LinkGeometry":
        """BS at the origin, UE at ground distance ``d2d`` and bearing ``azimuth_deg``."""
        dh = BS_HEIGHT_M[env] - ue_height
        tilt = float(np.degrees(np.arctan2(dh, d2d)))
        return cls(
            d2d=float(d2d),
            d3d=float(np.hypot(d2d, dh)),
            aod_az=float(wrap_azimuth(azimuth_deg)),
            aod_zen=90.0 + tilt,
            aoa_az=float(wrap_azimuth(azimuth_deg + 180.0)),
            aoa_zen=90.0 - tilt,
        )


@dataclass
class ChannelRealization:
    """Flat list of rays stored column-wise.

    Angles are in degrees in the global frame (azimuth 0 along the BS array
    boresight). ``phases`` holds the four initial polarization phases
    (theta-theta, theta-phi, phi-theta, phi-phi) per ray; rays flagged
    ``specular`` use the fixed LOS polarization matrix instead.
    Small-scale powers sum to one; ``path_loss_db`` is applied separately.
    """

    delay: np.ndarray
    power: np.ndarray
    aod_az: np.ndarray
    aod_zen: np.ndarray
    aoa_az: np.ndarray
    aoa_zen: np.ndarray
    xpr: np.ndarray
    phases: np.ndarray
    specular: np.ndarray = None
    link_state: LinkState = LinkState.NLOS
    path_loss_db: float = 0.0
    model: Model = Model.THREEGPP
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.power)
        if n == 0:
            raise ValueError("a channel realization needs at least one ray")
        if self.specular is None:
            self.specular = np.zeros(n, dtype=bool)
        for name in ("delay", "aod_az", "aod_zen", "aoa_az", "aoa_zen", "xpr", "specular"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has {len(getattr(self, name))} entries, expected {n}")
        if np.shape(self.phases) != (n, 4):
            raise ValueError(f"phases must have shape ({n}, 4), got {np.shape(self.phases)}")
        if np.any(self.power < 0):
            raise ValueError("ray powers must be non-negative")

    @property
    def n_rays(self) -> int:
        return len(self.power)

    @property
    def total_power(self) -> float:
        return float(np.sum(self.power))

    def ray(self, i: int) -> Ray:
        return Ray(float(self.delay[i]), float(self.power[i]), float(self.aod_az[i]),
                   float(self.aod_zen[i]), float(self.aoa_az[i]), float(self.aoa_zen[i]),
                   float(self.xpr[i]), tuple(float(p) for p in self.phases[i]),
                   bool(self.specular[i]))

    def with_path_loss(self, path_loss_db: float) -> "ChannelRealization":
        return replace(self, path_loss_db=float(path_loss_db))
