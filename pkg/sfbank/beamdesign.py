# pyright: basic
"""
Least-squares design of UCA beamformers that approximate an ideal beampattern

    B(b_N, theta) = sum_{n=-N}^{N} b_{N,n} exp(j n (theta - theta_s)).

The filter for one frequency is

    h(omega) = (1/M) Psi^H J*(wbar) Upsilon*(theta_s) b_N

with Psi[n, m] = exp(j n psi_m), J(wbar) = diag(1 / (j^n J_n(wbar))) and
Upsilon(theta_s) = diag(exp(-j n theta_s)), n = -N..N. Through the Jacobi-Anger
expansion the realized response h^H d(omega, theta) reproduces every harmonic
|n| <= N; harmonics n + qM (q != 0) leak in as spatial aliasing, which shrinks
as M grows and wbar shrinks.
"""
import logging
import math
from collections.abc import Mapping

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from sfbank.config import Config
from sfbank.errors import (
    BesselDomainError,
    DegenerateFrequencyError,
    InvalidArgumentError,
)
from sfbank.geometry import UcaGeometry, normalized_freq, readonly

logger = logging.getLogger(__name__)

MAX_BESSEL_ORDER = 64
MAX_BESSEL_ARG = 100.0

# Power series below this argument, Miller backward recurrence above it.
_SERIES_LIMIT = 12.0
_RESCALE_ABOVE = 1e250
_RESCALE = 1e-250

# j**n for n mod 4, exact (no complex pow rounding).
_J_POWERS = np.array([1.0, 1j, -1.0, -1j])

SUPERCARDIOID_COEFFS = (0.1035, 0.242, 0.309, 0.242, 0.1035)


# ── Bessel functions of the first kind ──────────────────────────────────────────

def _bessel_series(n: int, x: float) -> float:
    """J_n(x) = sum_k (-1)^k (x/2)^(2k+n) / (k! (k+n)!), n >= 0."""
    half = 0.5 * x
    # Also catches subnormal x, where x/2 underflows to 0.
    if half == 0.0:
        return 1.0 if n == 0 else 0.0
    term = math.exp(n * math.log(half) - math.lgamma(n + 1))
    step = -half * half
    terms = [term]
    largest = abs(term)
    k = 0
    while True:
        k += 1
        term *= step / (k * (k + n))
        terms.append(term)
        largest = max(largest, abs(term))
        # Terms only start shrinking once k exceeds x/2.
        if k > half and abs(term) <= 1e-17 * largest:
            break
    return math.fsum(terms)


def _bessel_miller(n: int, x: float) -> float:
    """J_n(x) by backward recurrence, normalized with J_0 + 2*sum J_2k = 1."""
    start = 2 * ((max(n, int(x)) + 20 + int(math.sqrt(40.0 * max(n, x)))) // 2)
    j_above, j_here = 0.0, 1e-30
    norm = 2.0 * j_here
    result = 0.0
    for k in range(start, 0, -1):
        j_below = (2.0 * k / x) * j_here - j_above
        j_above, j_here = j_here, j_below
        # j_here now holds J_{k-1}
        if k - 1 == n:
            result = j_here
        if k - 1 > 0 and (k - 1) % 2 == 0:
            norm += 2.0 * j_here
        if abs(j_here) > _RESCALE_ABOVE:
            j_here *= _RESCALE
            j_above *= _RESCALE
            norm *= _RESCALE
            result *= _RESCALE
    norm += j_here
    return result / norm


def bessel_jn(order: int, x: float) -> float:
    """Bessel function of the first kind J_n(x) for integer n.

    Supported envelope: |n| <= 64 and 0 <= x <= 100. Negative orders use
    J_{-n}(x) = (-1)^n J_n(x).

    Raises:
        BesselDomainError: order or argument outside the envelope
    """
    if int(order) != order or abs(order) > MAX_BESSEL_ORDER:
        raise BesselDomainError(f"Bessel order must be an integer with |n| <= {MAX_BESSEL_ORDER}, got {order}")
    if not (0.0 <= x <= MAX_BESSEL_ARG):
        raise BesselDomainError(f"Bessel argument must lie in [0, {MAX_BESSEL_ARG:g}], got {x}")
    n = abs(int(order))
    x = float(x)
    value = _bessel_series(n, x) if x < _SERIES_LIMIT else _bessel_miller(n, x)
    if order < 0 and n % 2 == 1:
        value = -value
    return value


# ── Ideal patterns ──────────────────────────────────────────────────────────────

class IdealPattern(BaseModel):
    """Target directivity: order N and series coefficients b_{N,-N}..b_{N,N}."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    order: int = Field(..., ge=0, le=MAX_BESSEL_ORDER, description="Beampattern order N")
    coefficients: np.ndarray = Field(..., description="2N+1 real coefficients, n = -N..N")
    name: str | None = Field(None, description="Preset name, if any")

    @field_validator('coefficients', mode='before')
    @classmethod
    def _as_real_array(cls, v) -> np.ndarray:
        arr = np.asarray(v)
        if np.iscomplexobj(arr):
            raise ValueError("pattern coefficients must be real")
        return readonly(np.array(arr, dtype=np.float64).reshape(-1))

    @model_validator(mode='after')
    def _validate_length(self) -> "IdealPattern":
        expected = 2 * self.order + 1
        if self.coefficients.size != expected:
            raise ValueError(
                f"a pattern of order N={self.order} needs 2N+1={expected} coefficients, "
                f"got {self.coefficients.size}"
            )
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("pattern coefficients must be finite")
        return self

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.order, self.order + 1)

    @property
    def min_mics(self) -> int:
        """Smallest M whose phase-mode sampling resolves every order: 2N+1."""
        return 2 * self.order + 1

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.coefficients, self.coefficients[::-1]))

    def scaled(self, alpha: float) -> "IdealPattern":
        return IdealPattern(order=self.order, coefficients=alpha * self.coefficients)


def supercardioid_preset() -> IdealPattern:
    """Second-order supercardioid, b_N = [0.1035, 0.242, 0.309, 0.242, 0.1035]."""
    return IdealPattern(order=2, coefficients=SUPERCARDIOID_COEFFS, name='supercardioid2')


def cardioid_preset() -> IdealPattern:
    """First-order cardioid 0.5 + 0.5 cos(theta - theta_s)."""
    return IdealPattern(order=1, coefficients=(0.25, 0.5, 0.25), name='cardioid1')


def omni_preset() -> IdealPattern:
    return IdealPattern(order=0, coefficients=(1.0,), name='omni')


PATTERN_PRESETS = {
    'supercardioid2': supercardioid_preset,
    'cardioid1': cardioid_preset,
    'omni': omni_preset,
}


def resolve_pattern(spec) -> IdealPattern:
    """Turn a preset name or an ``{"order": N, "coeffs": [...]}`` mapping into a pattern."""
    if isinstance(spec, IdealPattern):
        return spec
    if isinstance(spec, str):
        factory = PATTERN_PRESETS.get(spec.strip().lower())
        if factory is None:
            raise InvalidArgumentError(
                f"unknown pattern '{spec}'; presets are {sorted(PATTERN_PRESETS)}"
            )
        return factory()
    if isinstance(spec, Mapping):
        coeffs = spec.get('coeffs', spec.get('coefficients'))
        if 'order' not in spec or coeffs is None:
            raise InvalidArgumentError("pattern mapping needs 'order' and 'coeffs'")
        return IdealPattern(order=spec['order'], coefficients=coeffs)
    raise InvalidArgumentError(f"cannot interpret pattern {spec!r}")


def ideal_beampattern(pattern: IdealPattern, azimuth, steer_azimuth: float = 0.0):
    """B(b_N, theta) = b_N^T p(theta - theta_s); scalar or array azimuths."""
    delta = np.asarray(azimuth, dtype=np.float64) - steer_azimuth
    response = np.exp(1j * np.multiply.outer(delta, pattern.orders)) @ pattern.coefficients
    return complex(response) if np.ndim(response) == 0 else response


# ── Filter design ───────────────────────────────────────────────────────────────

class SpatialFilter(BaseModel):
    """Beamforming weights h(omega) for one frequency and steering direction."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    weights: np.ndarray = Field(..., description="M complex weights h(omega)")
    freq_hz: float = Field(..., ge=0.0, description="Design frequency in Hz")
    steer_azimuth: float = Field(..., description="Mainlobe direction theta_s in radians")
    geom: UcaGeometry = Field(..., description="Array the filter was designed for")
    regularized_orders: tuple[int, ...] = Field(
        (), description="Orders whose Bessel denominator was clamped to epsilon"
    )
    dc_fallback: bool = Field(False, description="True when the DC averaging filter was used")

    @field_validator('weights', mode='before')
    @classmethod
    def _as_complex_array(cls, v) -> np.ndarray:
        return readonly(np.array(v, dtype=np.complex128).reshape(-1))

    @model_validator(mode='after')
    def _validate_weights(self) -> "SpatialFilter":
        if self.weights.size != self.geom.num_mics:
            raise ValueError(
                f"filter has {self.weights.size} weights, geometry has {self.geom.num_mics} mics"
            )
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("filter weights must be finite")
        return self


def check_resolvable(geom: UcaGeometry, pattern: IdealPattern) -> None:
    """Raise unless M >= 2N+1."""
    if geom.num_mics < pattern.min_mics:
        raise InvalidArgumentError(
            f"num_mics={geom.num_mics} is below 2N+1={pattern.min_mics} for a pattern of "
            f"order N={pattern.order} (requires M >= 2N+1)"
        )


def design_filter(
    geom: UcaGeometry,
    pattern: IdealPattern,
    steer_azimuth: float,
    freq_hz: float,
    *,
    regularize: bool = Config.REGULARIZE,
    epsilon: float = Config.BESSEL_EPSILON,
) -> SpatialFilter:
    """Least-squares filter whose beampattern approximates ``pattern`` steered to theta_s.

    At f = 0 every J_n with n != 0 vanishes, so the uniform averaging filter
    (1/M)[1, ..., 1] is returned instead. With ``regularize`` on, any
    |J_n(wbar)| < epsilon is replaced by sign(J_n) * epsilon.

    Raises:
        InvalidArgumentError: M < 2N+1 or a negative frequency
        DegenerateFrequencyError: a vanishing J_n(wbar) with regularization off
    """
    check_resolvable(geom, pattern)
    if not math.isfinite(freq_hz) or freq_hz < 0:
        raise InvalidArgumentError(f"freq_hz must be >= 0, got {freq_hz}")

    num_mics = geom.num_mics
    if freq_hz == 0.0:
        return SpatialFilter(
            weights=np.full(num_mics, 1.0 / num_mics, dtype=np.complex128),
            freq_hz=0.0,
            steer_azimuth=steer_azimuth,
            geom=geom,
            dc_fallback=True,
        )

    orders = pattern.orders
    wbar = normalized_freq(geom, freq_hz)
    bessel = np.array([bessel_jn(int(n), wbar) for n in orders])

    small = np.abs(bessel) < epsilon
    regularized: tuple[int, ...] = ()
    if np.any(small):
        regularized = tuple(int(n) for n in orders[small])
        if not regularize:
            raise DegenerateFrequencyError(
                f"J_n(wbar={wbar:.6g}) is within {epsilon:g} of zero for n={list(regularized)} "
                f"at {freq_hz:g} Hz; enable regularization or change the frequency"
            )
        bessel = np.where(small, np.where(bessel < 0.0, -epsilon, epsilon), bessel)
        logger.debug(f"Clamped Bessel denominators for n={list(regularized)} at {freq_hz:g} Hz")

    psi = np.exp(1j * np.outer(orders, geom.sensor_azimuths))
    j_diag = 1.0 / (_J_POWERS[orders % 4] * bessel)
    upsilon = np.exp(-1j * orders * steer_azimuth)
    weights = psi.conj().T @ (j_diag.conj() * upsilon.conj() * pattern.coefficients) / num_mics

    return SpatialFilter(
        weights=weights,
        freq_hz=float(freq_hz),
        steer_azimuth=float(steer_azimuth),
        geom=geom,
        regularized_orders=regularized,
    )


def design_filters(
    geom: UcaGeometry,
    pattern: IdealPattern,
    steer_azimuth: float,
    freqs_hz,
    *,
    regularize: bool = Config.REGULARIZE,
    epsilon: float = Config.BESSEL_EPSILON,
) -> np.ndarray:
    """Weights for a whole frequency grid, shape [F x M]."""
    return np.stack([
        design_filter(geom, pattern, steer_azimuth, float(f), regularize=regularize, epsilon=epsilon).weights
        for f in np.atleast_1d(freqs_hz)
    ])
