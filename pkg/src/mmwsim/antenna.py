"""Uniform rectangular arrays, element patterns and narrowband channel assembly.

Axis convention: the array lies in the y-z plane facing +x. Columns run along
y (azimuth resolution), rows along z (zenith resolution). Element ``(m, n)``
with column index ``m`` and row index ``n`` sees the phase
``2*pi*spacing*(m*sin(zen)*sin(az) + n*cos(zen))`` for a plane wave from
``(az, zen)``. Cross-polarized arrays stack the +45 degree group first, then
the -45 degree group, each in row-major order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .rays import ChannelRealization

__all__ = [
    "Polarization",
    "ElementPattern",
    "ArrayGeometry",
    "ChannelMatrix",
    "element_gain",
    "array_response",
    "assemble_channel",
]


class Polarization(str, enum.Enum):
    CROSS = "cross"
    SINGLE = "single"


class ElementPattern(str, enum.Enum):
    THREEGPP = "3gpp"
    OMNI = "omni"


@dataclass(frozen=True)
class ArrayGeometry:
    rows: int
    cols: int
    spacing: float = 0.5
    polarization: Polarization = Polarization.CROSS
    pattern: ElementPattern = ElementPattern.OMNI
    max_gain_db: float = 0.0
    bearing_deg: float = 0.0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"array needs at least one row and column, got {self.rows}x{self.cols}")
        if not self.spacing > 0:
            raise ValueError(f"element spacing must be positive, got {self.spacing}")

    @property
    def n_pol(self) -> int:
        return 2 if self.polarization is Polarization.CROSS else 1

    @property
    def n_elements(self) -> int:
        return self.rows * self.cols * self.n_pol

    @property
    def slants_deg(self) -> tuple:
        return (45.0, -45.0) if self.polarization is Polarization.CROSS else (0.0,)

    def facing(self, bearing_deg: float) -> "ArrayGeometry":
        """Same array rotated so its boresight points at ``bearing_deg``."""
        return ArrayGeometry(self.rows, self.cols, self.spacing, self.polarization,
                             self.pattern, self.max_gain_db, float(bearing_deg))


@dataclass
class ChannelMatrix:
    """Narrowband ``Nr x Nt`` channel snapshot.

    ``applied_gain_db`` records the large-scale gain folded into the entries
    (minus the path loss); element gains are applied per ray direction.
    """

    entries: np.ndarray
    carrier_ghz: float = 28.0
    applied_gain_db: float = 0.0

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.ndim != 2:
            raise ValueError("channel matrix must be two-dimensional")
        if not np.all(np.isfinite(self.entries)):
            raise ValueError("channel matrix has non-finite entries")

    @property
    def shape(self):
        return self.entries.shape

    @property
    def nr(self) -> int:
        return self.entries.shape[0]

    @property
    def nt(self) -> int:
        return self.entries.shape[1]


def element_gain(pattern: ElementPattern, az, zen, max_gain_db: float = 10.0):
    """Element power gain in dB for angles in degrees relative to boresight.

    The 3GPP pattern is ``Gmax - min(A_az + A_zen, 30)`` with parabolic cuts
    of 65 degree half-power width and 30 dB floors.
    """
    az = np.asarray(az, dtype=float)
    zen = np.asarray(zen, dtype=float)
    if pattern is ElementPattern.OMNI:
        out = np.zeros(np.broadcast(az, zen).shape)
    else:
        a_az = np.minimum(12.0 * (az / 65.0) ** 2, 30.0)
        a_zen = np.minimum(12.0 * ((zen - 90.0) / 65.0) ** 2, 30.0)
        out = max_gain_db - np.minimum(a_az + a_zen, 30.0)
    return float(out) if out.ndim == 0 else out


def _local_azimuth(geometry: ArrayGeometry, az):
    return (np.asarray(az, dtype=float) - geometry.bearing_deg + 180.0) % 360.0 - 180.0


def _spatial_phases(geometry: ArrayGeometry, az, zen) -> np.ndarray:
    """Unnormalized steering phasors over the rows*cols positions, shape (P, D)."""
    az_r = np.deg2rad(_local_azimuth(geometry, az))
    zen_r = np.deg2rad(np.asarray(zen, dtype=float))
    m = np.tile(np.arange(geometry.cols), geometry.rows)
    n = np.repeat(np.arange(geometry.rows), geometry.cols)
    psi = (np.multiply.outer(m, np.sin(zen_r) * np.sin(az_r))
           + np.multiply.outer(n, np.cos(zen_r)))
    return np.exp(2j * np.pi * geometry.spacing * psi)


def array_response(geometry: ArrayGeometry, az, zen, carrier_ghz: float = 28.0) -> np.ndarray:
    """Unit-norm array response vector(s).

    Scalar angles give a vector of length ``n_elements``; arrays of ``D``
    angles give an ``(n_elements, D)`` matrix with one response per column.
    Element spacing is in wavelengths, so the carrier only fixes units.
    """
    del carrier_ghz
    scalar = np.ndim(az) == 0 and np.ndim(zen) == 0
    phases = _spatial_phases(geometry, np.atleast_1d(az), np.atleast_1d(zen))
    a = np.concatenate([phases] * geometry.n_pol, axis=0) / np.sqrt(geometry.n_elements)
    return a[:, 0] if scalar else a


def _field_components(geometry: ArrayGeometry, az, zen) -> np.ndarray:
    """Per-polarization (F_theta, F_phi) field amplitudes, shape (D, n_pol, 2)."""
    gain = element_gain(geometry.pattern, _local_azimuth(geometry, az), zen, geometry.max_gain_db)
    amp = np.sqrt(10.0 ** (np.atleast_1d(gain) / 10.0))
    slants = np.deg2rad(np.array(geometry.slants_deg))
    comps = np.stack([np.cos(slants), np.sin(slants)], axis=-1)  # (n_pol, 2)
    return amp[:, None, None] * comps[None, :, :]


def _polarization_matrices(realization: ChannelRealization) -> np.ndarray:
    ph = np.exp(1j * np.asarray(realization.phases))
    cross = np.sqrt(1.0 / np.asarray(realization.xpr, dtype=float))
    pol = np.empty((realization.n_rays, 2, 2), dtype=complex)
    pol[:, 0, 0] = ph[:, 0]
    pol[:, 0, 1] = cross * ph[:, 1]
    pol[:, 1, 0] = cross * ph[:, 2]
    pol[:, 1, 1] = ph[:, 3]
    spec = np.asarray(realization.specular, dtype=bool)
    pol[spec] = np.array([[1.0, 0.0], [0.0, -1.0]])
    return pol


def assemble_channel(
    realization: ChannelRealization,
    tx: ArrayGeometry,
    rx: ArrayGeometry,
    carrier_ghz: float = 28.0,
) -> ChannelMatrix:
    """Sum the rays of ``realization`` into a narrowband ``Nr x Nt`` matrix.

    Each ray contributes
    ``sqrt(p * g) * exp(-j 2 pi fc tau) * (F_rx . P . F_tx) * b_rx b_tx^H``
    where ``b`` are unnormalized steering vectors (unit-modulus entries),
    ``F`` the slanted element field patterns, ``P`` the 2x2 polarization
    coupling matrix and ``g = 10**(-PL/10)``.
    """
    if realization.n_rays == 0:
        raise ValueError("cannot assemble a channel from an empty realization")
    gain_db = -realization.path_loss_db
    amp = np.sqrt(np.asarray(realization.power, dtype=float) * 10.0 ** (gain_db / 10.0))
    amp = amp * np.exp(-2j * np.pi * carrier_ghz * 1e9 * np.asarray(realization.delay))

    f_rx = _field_components(rx, realization.aoa_az, realization.aoa_zen)  # (R, Pr, 2)
    f_tx = _field_components(tx, realization.aod_az, realization.aod_zen)  # (R, Pt, 2)
    pol = _polarization_matrices(realization)  # (R, 2, 2)
    # coupling between every rx/tx polarization group pair, per ray: (R, Pr, Pt)
    coupling = np.einsum("rua,rab,rvb->ruv", f_rx, pol, f_tx) * amp[:, None, None]

    s_rx = _spatial_phases(rx, realization.aoa_az, realization.aoa_zen)  # (Sr, R)
    s_tx = _spatial_phases(tx, realization.aod_az, realization.aod_zen)  # (St, R)
    blocks = [[(s_rx * coupling[:, u, v]) @ s_tx.conj().T for v in range(tx.n_pol)]
              for u in range(rx.n_pol)]
    return ChannelMatrix(np.block(blocks), carrier_ghz, gain_db)
