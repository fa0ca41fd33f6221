"""Coordinates, angle conventions and GCS/LCS rotations.

Zenith is measured from +z, azimuth from +x toward +y. Angles are radians
everywhere inside the package; degrees appear only at I/O boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Position3D:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def __sub__(self, other: "Position3D") -> np.ndarray:
        return self.as_array() - other.as_array()

    def moved(self, offset) -> "Position3D":
        dx, dy, dz = offset
        return Position3D(self.x + dx, self.y + dy, self.z + dz)


@dataclass(frozen=True)
class Velocity3D:
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.vx, self.vy, self.vz)):
            raise ValueError(f"velocity components must be finite: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.vz], dtype=float)


@dataclass(frozen=True)
class Orientation:
    """Bearing (about z), downtilt (about the rotated y) and slant; slant must be 0."""

    bearing: float = 0.0
    downtilt: float = 0.0
    slant: float = 0.0

    def __post_init__(self):
        if self.slant != 0.0:
            raise ValueError("only slant = 0 is supported")

    @classmethod
    def from_degrees(cls, bearing: float = 0.0, downtilt: float = 0.0) -> "Orientation":
        return cls(math.radians(bearing), math.radians(downtilt), 0.0)

    def rotation_matrix(self) -> np.ndarray:
        """R = Rz(bearing) @ Ry(downtilt) @ Rx(slant); maps LCS vectors to GCS."""
        ca, sa = math.cos(self.bearing), math.sin(self.bearing)
        cb, sb = math.cos(self.downtilt), math.sin(self.downtilt)
        cg, sg = math.cos(self.slant), math.sin(self.slant)
        rz = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
        ry = np.array([[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]])
        rx = np.array([[1.0, 0.0, 0.0], [0.0, cg, -sg], [0.0, sg, cg]])
        return rz @ ry @ rx


def wrap_azimuth(phi):
    """Map azimuth(s) into (-pi, pi]."""
    wrapped = np.pi - np.mod(np.pi - np.asarray(phi, dtype=float), TWO_PI)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class AngularPair:
    """Direction as (zenith, azimuth) with zenith in [0, pi] and azimuth in (-pi, pi]."""

    zenith: float
    azimuth: float

    def __post_init__(self):
        theta = math.fmod(self.zenith, TWO_PI)
        phi = self.azimuth
        if theta < 0:
            theta += TWO_PI
        if theta > math.pi:
            theta = TWO_PI - theta
            phi += math.pi
        phi = wrap_azimuth(phi)
        if theta == 0.0 or theta == math.pi:
            phi = 0.0
        object.__setattr__(self, "zenith", theta)
        object.__setattr__(self, "azimuth", phi)

    @classmethod
    def from_degrees(cls, zenith: float, azimuth: float) -> "AngularPair":
        return cls(math.radians(zenith), math.radians(azimuth))

    @classmethod
    def from_vector(cls, v) -> "AngularPair":
        x, y, z = (float(c) for c in v)
        rho = math.hypot(x, y)
        if rho == 0.0 and z == 0.0:
            raise ValueError("zero vector has no direction")
        return cls(math.atan2(rho, z), math.atan2(y, x) if rho > 0 else 0.0)

    def degrees(self) -> tuple[float, float]:
        return math.degrees(self.zenith), math.degrees(self.azimuth)


def spherical_unit_vector(angles: AngularPair) -> np.ndarray:
    st = math.sin(angles.zenith)
    return np.array([st * math.cos(angles.azimuth), st * math.sin(angles.azimuth), math.cos(angles.zenith)])


def unit_vectors(zenith: np.ndarray, azimuth: np.ndarray) -> np.ndarray:
    """Vectorised spherical unit vectors; output has a trailing axis of length 3."""
    st = np.sin(zenith)
    return np.stack([st * np.cos(azimuth), st * np.sin(azimuth), np.cos(zenith)], axis=-1)


def theta_hat(zenith, azimuth) -> np.ndarray:
    return np.stack(
        [np.cos(zenith) * np.cos(azimuth), np.cos(zenith) * np.sin(azimuth), -np.sin(zenith)], axis=-1
    )


def phi_hat(azimuth) -> np.ndarray:
    azimuth = np.asarray(azimuth, dtype=float)
    return np.stack([-np.sin(azimuth), np.cos(azimuth), np.zeros_like(azimuth)], axis=-1)


def gcs_to_lcs(angles: AngularPair, o: Orientation) -> AngularPair:
    v = o.rotation_matrix().T @ spherical_unit_vector(angles)
    return AngularPair.from_vector(v)


def lcs_to_gcs(angles: AngularPair, o: Orientation) -> AngularPair:
    v = o.rotation_matrix() @ spherical_unit_vector(angles)
    return AngularPair.from_vector(v)


def gcs_to_lcs_array(zenith: np.ndarray, azimuth: np.ndarray, o: Orientation) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`gcs_to_lcs` (no pole canonicalisation)."""
    v = unit_vectors(zenith, azimuth) @ o.rotation_matrix()
    theta = np.arctan2(np.hypot(v[..., 0], v[..., 1]), v[..., 2])
    phi = np.arctan2(v[..., 1], v[..., 0])
    return theta, phi


@dataclass(frozen=True)
class LinkGeometry:
    d2d: float
    d3d: float
    aod: AngularPair
    aoa: AngularPair


def relative_geometry(a: Position3D, b: Position3D) -> LinkGeometry:
    """Distances and the departure (a->b) and arrival (b->a) directions."""
    delta = b - a
    d3d = float(np.linalg.norm(delta))
    if d3d == 0.0:
        raise ValueError(f"coincident positions {a} and {b}: direction undefined")
    d2d = math.hypot(delta[0], delta[1])
    aod = AngularPair.from_vector(delta)
    aoa = AngularPair.from_vector(-delta)
    return LinkGeometry(d2d=d2d, d3d=d3d, aod=aod, aoa=aoa)
