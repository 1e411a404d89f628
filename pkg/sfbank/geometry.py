# pyright: basic
"""
Uniform circular array (UCA) geometry and far-field steering vectors.

Sensor m (1-based) sits at azimuth psi_m = 2*pi*(m-1)/M on a circle of radius r.
A plane wave from azimuth theta reaches it with the phase factor
exp(j * wbar * cos(theta - psi_m)), where wbar = omega * r / c.
Everything here is two-dimensional: azimuth only, no elevation.
"""
import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from sfbank.config import Config
from sfbank.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

_AZIMUTH_TOL = 1e-12
_UNIT_TOL = 1e-12


def readonly(arr: np.ndarray) -> np.ndarray:
    """Mark an array read-only so frozen models stay immutable."""
    arr.flags.writeable = False
    return arr


def uniform_azimuths(count: int) -> np.ndarray:
    """``count`` angles 2*pi*k/count, k = 0..count-1."""
    return 2.0 * np.pi * np.arange(count) / count


def circular_distance(a, b):
    """Angular distance between azimuths, in [0, pi]."""
    return np.abs(np.angle(np.exp(1j * (np.asarray(a) - np.asarray(b)))))


class UcaGeometry(BaseModel):
    """M omnidirectional sensors uniformly spaced on a circle of radius r."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    num_mics: int = Field(..., ge=1, description="Number of microphones M")
    radius: float = Field(..., ge=0.0, description="Array radius in meters")
    sensor_azimuths: np.ndarray = Field(..., description="Sensor azimuths psi_m in radians")
    sound_speed: float = Field(Config.SOUND_SPEED, gt=0.0, description="Speed of sound in m/s")

    @field_validator('sensor_azimuths', mode='before')
    @classmethod
    def _as_float_array(cls, v) -> np.ndarray:
        return readonly(np.array(v, dtype=np.float64).reshape(-1))

    @model_validator(mode='after')
    def _validate_uniform_spacing(self) -> "UcaGeometry":
        psi = self.sensor_azimuths
        if psi.size != self.num_mics:
            raise ValueError(
                f"sensor_azimuths has {psi.size} entries, expected num_mics={self.num_mics}"
            )
        if np.any(psi < 0.0) or np.any(psi >= 2.0 * np.pi):
            raise ValueError("sensor azimuths must lie in [0, 2*pi)")
        if np.max(np.abs(psi - uniform_azimuths(self.num_mics))) > _AZIMUTH_TOL:
            raise ValueError("sensor azimuths must be psi_m = 2*pi*(m-1)/M")
        return self

    @property
    def key(self) -> tuple[int, float]:
        """(M, r) pair identifying the geometry in reports."""
        return (self.num_mics, self.radius)

    def same_as(self, other: "UcaGeometry") -> bool:
        return (
            self.num_mics == other.num_mics
            and self.radius == other.radius
            and self.sound_speed == other.sound_speed
        )

    def __str__(self) -> str:
        return f"UCA(M={self.num_mics}, r={self.radius * 100:g} cm, c={self.sound_speed:g} m/s)"


class SteeringVector(BaseModel):
    """Per-sensor phase delays d(omega, theta) of a far-field plane wave."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    entries: np.ndarray = Field(..., description="M unit-magnitude complex phase factors")
    frequency_rad: float = Field(..., description="Angular frequency omega in rad/s")
    azimuth: float = Field(..., description="Arrival azimuth theta in radians")

    @field_validator('entries', mode='before')
    @classmethod
    def _as_complex_array(cls, v) -> np.ndarray:
        return readonly(np.array(v, dtype=np.complex128).reshape(-1))

    @field_validator('entries')
    @classmethod
    def _validate_unit_magnitude(cls, v: np.ndarray) -> np.ndarray:
        if np.any(np.abs(np.abs(v) - 1.0) > _UNIT_TOL):
            raise ValueError("steering vector entries must have unit magnitude")
        return v


def make_uca(num_mics: int, radius: float, sound_speed: float = Config.SOUND_SPEED) -> UcaGeometry:
    """Build a UCA with psi_m = 2*pi*(m-1)/M.

    Raises:
        InvalidArgumentError: num_mics < 1, radius < 0 or sound_speed <= 0
    """
    if int(num_mics) != num_mics or num_mics < 1:
        raise InvalidArgumentError(f"num_mics must be an integer >= 1, got {num_mics}")
    if not math.isfinite(radius) or radius < 0:
        raise InvalidArgumentError(f"radius must be >= 0 meters, got {radius}")
    if not math.isfinite(sound_speed) or sound_speed <= 0:
        raise InvalidArgumentError(f"sound_speed must be > 0 m/s, got {sound_speed}")
    num_mics = int(num_mics)
    return UcaGeometry(
        num_mics=num_mics,
        radius=float(radius),
        sensor_azimuths=uniform_azimuths(num_mics),
        sound_speed=float(sound_speed),
    )


def normalized_freq(geom: UcaGeometry, freq_hz):
    """wbar = 2*pi*f*r/c. Accepts a scalar or an array of frequencies."""
    wbar = 2.0 * np.pi * np.asarray(freq_hz, dtype=np.float64) * geom.radius / geom.sound_speed
    return float(wbar) if wbar.ndim == 0 else wbar


def steering_vector(geom: UcaGeometry, freq_hz: float, azimuth: float) -> SteeringVector:
    """d(omega, theta): entry m is exp(j * wbar * cos(theta - psi_m))."""
    wbar = normalized_freq(geom, freq_hz)
    entries = np.exp(1j * wbar * np.cos(azimuth - geom.sensor_azimuths))
    return SteeringVector(
        entries=entries,
        frequency_rad=2.0 * np.pi * float(freq_hz),
        azimuth=float(azimuth),
    )


def steering_matrix(geom: UcaGeometry, freq_hz: float, azimuths) -> np.ndarray:
    """Steering vectors for many azimuths at one frequency, shape [M x A]."""
    wbar = normalized_freq(geom, freq_hz)
    azimuths = np.atleast_1d(np.asarray(azimuths, dtype=np.float64))
    return np.exp(1j * wbar * np.cos(azimuths[np.newaxis, :] - geom.sensor_azimuths[:, np.newaxis]))


def steering_spectrum(geom: UcaGeometry, freqs_hz, azimuth: float) -> np.ndarray:
    """Steering vectors for one azimuth across a frequency grid, shape [M x F]."""
    wbar = np.atleast_1d(normalized_freq(geom, freqs_hz))
    return np.exp(1j * wbar[np.newaxis, :] * np.cos(azimuth - geom.sensor_azimuths)[:, np.newaxis])
