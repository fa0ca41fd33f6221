"""Single-panel uniform rectangular array with the 3GPP element pattern."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import AngularPair, Orientation, gcs_to_lcs_array, phi_hat, spherical_unit_vector, theta_hat

THETA_3DB_DEG = 65.0
PHI_3DB_DEG = 65.0
SLA_V_DB = 30.0
A_MAX_DB = 30.0


def radiation_power_pattern_db(theta_prime, phi_prime, element_gain_db: float = 0.0):
    """Element power pattern in dB for LCS angles in radians.

    The vertical and horizontal attenuations are added, then capped at 30 dB.
    """
    theta_deg = np.degrees(theta_prime)
    phi_deg = np.degrees(phi_prime)
    vertical = np.minimum(12.0 * ((theta_deg - 90.0) / THETA_3DB_DEG) ** 2, SLA_V_DB)
    horizontal = np.minimum(12.0 * (phi_deg / PHI_3DB_DEG) ** 2, A_MAX_DB)
    out = element_gain_db - np.minimum(vertical + horizontal, A_MAX_DB)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class FieldPattern:
    f_theta: float
    f_phi: float


@dataclass
class AntennaArray:
    rows: int = 1
    cols: int = 1
    vertical_spacing: float = 0.5
    horizontal_spacing: float = 0.5
    orientation: Orientation = field(default_factory=Orientation)
    element_gain_db: float = 0.0
    isotropic_elements: bool = False
    _weights: np.ndarray | None = field(default=None, init=False, repr=False)
    version: int = field(default=0, init=False, repr=False)

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"array dimensions must be positive, got {self.rows}x{self.cols}")
        if self.vertical_spacing <= 0 or self.horizontal_spacing <= 0:
            raise ValueError("element spacing must be positive")

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @property
    def beamforming_vector(self) -> np.ndarray | None:
        """Unit-norm weights, or ``None`` until a beam is set."""
        return self._weights

    @beamforming_vector.setter
    def beamforming_vector(self, w) -> None:
        w = np.asarray(w, dtype=complex).reshape(-1)
        if w.size != self.size:
            raise ValueError(f"beamforming vector has {w.size} entries, array has {self.size}")
        norm = np.linalg.norm(w)
        if norm == 0:
            raise ValueError("beamforming vector must be non-zero")
        self._weights = w / norm
        self.version += 1

    def field_pattern(self, zenith, azimuth) -> tuple[np.ndarray, np.ndarray]:
        """Vectorised GCS field components (F_theta, F_phi) for GCS angles."""
        zenith = np.asarray(zenith, dtype=float)
        azimuth = np.asarray(azimuth, dtype=float)
        if self.isotropic_elements:
            return np.ones_like(zenith), np.zeros_like(zenith)
        o = self.orientation
        theta_l, phi_l = gcs_to_lcs_array(zenith, azimuth, o)
        amp = np.sqrt(10.0 ** (radiation_power_pattern_db(theta_l, phi_l, self.element_gain_db) / 10.0))
        rot = o.rotation_matrix()
        # Local theta-hat mapped into the GCS, projected on the global unit vectors.
        th_local = theta_hat(theta_l, phi_l) @ rot.T
        f_theta = amp * np.sum(th_local * theta_hat(zenith, azimuth), axis=-1)
        f_phi = amp * np.sum(th_local * phi_hat(azimuth), axis=-1)
        return f_theta, f_phi

    def element_locations(self, wavelength: float) -> np.ndarray:
        """GCS offsets of all elements in metres, shape (size, 3)."""
        idx = np.arange(self.size)
        r, c = np.divmod(idx, self.cols)
        local = np.stack(
            [np.zeros(self.size), c * self.horizontal_spacing * wavelength, r * self.vertical_spacing * wavelength],
            axis=-1,
        )
        return local @ self.orientation.rotation_matrix().T


def element_field_pattern(array: AntennaArray, angles: AngularPair) -> FieldPattern:
    ft, fp = array.field_pattern(angles.zenith, angles.azimuth)
    return FieldPattern(float(ft), float(fp))


def element_location(array: AntennaArray, index: int, wavelength: float) -> np.ndarray:
    """Location of element ``index`` (row-major, columns along local y)."""
    if not 0 <= index < array.size:
        raise IndexError(f"element index {index} out of range for {array.size} elements")
    return array.element_locations(wavelength)[index]


def array_response(array: AntennaArray, direction: AngularPair, wavelength: float) -> np.ndarray:
    """exp(j 2pi/lambda k.d_i) for every element."""
    k = spherical_unit_vector(direction)
    return np.exp(1j * 2.0 * math.pi / wavelength * (array.element_locations(wavelength) @ k))


def steering_vector(array: AntennaArray, direction: AngularPair, wavelength: float) -> np.ndarray:
    """Unit-norm weights that phase-align the array toward ``direction``.

    The array factor is taken as ``w^T a`` (plain transpose), so ``w`` is
    ``conj(a) / sqrt(n)`` and ``|w^T a| = sqrt(n)``.
    """
    return np.conj(array_response(array, direction, wavelength)) / math.sqrt(array.size)
