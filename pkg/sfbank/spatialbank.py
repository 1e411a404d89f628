# pyright: basic
"""
Spatial filter bank front-end.

I beamformers steered at theta_s,i = 2*pi*i/I (i = 0..I-1) are designed for
every STFT bin, applied to a multichannel spectrogram as Z_i = h_i^H y, then
magnitude-compressed Z'_i = |Z_i|^c exp(j angle Z_i). The model-ready feature
interleaves real and imaginary parts: channel 2i is Re(Z'_i), channel 2i+1 is
Im(Z'_i).
"""
import logging
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from sfbank.beamdesign import IdealPattern, check_resolvable, design_filter
from sfbank.config import Config
from sfbank.errors import (
    InvalidArgumentError,
    InvalidExponentError,
    NonFiniteError,
    ShapeMismatchError,
    TooShortSignalError,
)
from sfbank.geometry import UcaGeometry, circular_distance, readonly, uniform_azimuths
from sfbank.stft import Spectrogram, StftConfig, as_channels, stft
from sfbank.wavio import read_wav

logger = logging.getLogger(__name__)


class FilterBank(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    num_filters: int = Field(..., ge=1, description="Number of steered filters I")
    steer_azimuths: np.ndarray = Field(..., description="theta_s,i = 2*pi*i/I in radians")
    weights: np.ndarray = Field(..., description="Complex weights [I x F x M]")
    geom: UcaGeometry
    pattern: IdealPattern
    config: StftConfig
    regularize: bool = True

    @field_validator('steer_azimuths', mode='before')
    @classmethod
    def _as_float_array(cls, v) -> np.ndarray:
        return readonly(np.array(v, dtype=np.float64).reshape(-1))

    @field_validator('weights', mode='before')
    @classmethod
    def _as_complex_array(cls, v) -> np.ndarray:
        return readonly(np.array(v, dtype=np.complex128))

    @model_validator(mode='after')
    def _validate_shapes(self) -> "FilterBank":
        expected = (self.num_filters, self.config.num_bins, self.geom.num_mics)
        if self.weights.shape != expected:
            raise ValueError(f"bank weights have shape {self.weights.shape}, expected {expected}")
        if self.steer_azimuths.size != self.num_filters:
            raise ValueError(
                f"{self.steer_azimuths.size} steering directions for {self.num_filters} filters"
            )
        return self


class FeatureTensor(BaseModel):
    """Compressed filter-bank outputs, real [2I x T x F], Re/Im interleaved per filter."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    data: np.ndarray = Field(..., description="Real features [2I x T x F]")
    compression_exponent: float = Field(Config.COMPRESSION_EXPONENT, gt=0.0, le=1.0)

    @field_validator('data', mode='before')
    @classmethod
    def _as_float_array(cls, v) -> np.ndarray:
        arr = np.asarray(v)
        if np.iscomplexobj(arr):
            raise ValueError("feature data must be real; interleave Re/Im first")
        return readonly(np.array(arr, dtype=np.float64))

    @model_validator(mode='after')
    def _validate_layout(self) -> "FeatureTensor":
        if self.data.ndim != 3 or self.data.shape[0] % 2 != 0:
            raise ValueError(f"features must be [2I x T x F], got shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("features must be finite")
        return self

    @property
    def num_filters(self) -> int:
        return self.data.shape[0] // 2

    def to_complex(self) -> np.ndarray:
        """Undo the interleaving: [I x T x F] complex."""
        return self.data[0::2] + 1j * self.data[1::2]


# ── Bank construction and application ───────────────────────────────────────────

def bank_azimuths(num_filters: int) -> np.ndarray:
    return uniform_azimuths(num_filters)


def build_filterbank(
    geom: UcaGeometry,
    pattern: IdealPattern,
    num_filters: int,
    cfg: StftConfig,
    *,
    regularize: bool = Config.REGULARIZE,
    epsilon: float = Config.BESSEL_EPSILON,
) -> FilterBank:
    """Design I steered filters for every bin of ``cfg``; the DC bin gets the averaging filter."""
    if int(num_filters) != num_filters or num_filters < 1:
        raise InvalidArgumentError(f"num_filters must be an integer >= 1, got {num_filters}")
    check_resolvable(geom, pattern)

    num_filters = int(num_filters)
    steers = bank_azimuths(num_filters)
    freqs = cfg.bin_frequencies
    weights = np.empty((num_filters, freqs.size, geom.num_mics), dtype=np.complex128)
    clamped_bins = set()
    for i, steer in enumerate(steers):
        for k, freq in enumerate(freqs):
            h = design_filter(
                geom, pattern, float(steer), float(freq), regularize=regularize, epsilon=epsilon
            )
            weights[i, k] = h.weights
            if h.regularized_orders:
                clamped_bins.add(k)

    if clamped_bins:
        logger.warning(
            f"Regularized Bessel denominators in {len(clamped_bins)} of {freqs.size} bins for {geom}"
        )
    logger.info(f"Built {num_filters}-filter bank for {geom}, {freqs.size} bins, pattern order {pattern.order}")
    return FilterBank(
        num_filters=num_filters,
        steer_azimuths=steers,
        weights=weights,
        geom=geom,
        pattern=pattern,
        config=cfg,
        regularize=regularize,
    )


def apply_filterbank(bank: FilterBank, spec: Spectrogram) -> np.ndarray:
    """Z[i, k, f] = weights[i, f]^H y[:, k, f], shape [I x T x F]."""
    if spec.num_channels != bank.geom.num_mics:
        raise ShapeMismatchError(
            f"spectrogram has {spec.num_channels} channels, bank expects {bank.geom.num_mics}"
        )
    if spec.config != bank.config:
        raise ShapeMismatchError(
            f"spectrogram STFT config {spec.config} differs from bank config {bank.config}"
        )
    return np.einsum('ifm,mtf->itf', bank.weights.conj(), spec.data)


# ── Compression and feature layout ──────────────────────────────────────────────

def check_exponent(exponent: float) -> None:
    if not (0.0 < exponent <= 1.0):
        raise InvalidExponentError(f"compression exponent must lie in (0, 1], got {exponent}")


def compress(z, exponent: float = Config.COMPRESSION_EXPONENT) -> np.ndarray:
    """|z|^c exp(j angle z) elementwise; zero stays zero."""
    check_exponent(exponent)
    z = np.asarray(z, dtype=np.complex128)
    mag = np.abs(z)
    gain = np.divide(mag ** exponent, mag, out=np.zeros_like(mag), where=mag > 0.0)
    return z * gain


def assemble_features(z_compressed, exponent: float = Config.COMPRESSION_EXPONENT) -> FeatureTensor:
    z = np.asarray(z_compressed, dtype=np.complex128)
    if z.ndim != 3:
        raise ShapeMismatchError(f"filter outputs must be [I x T x F], got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise NonFiniteError("filter outputs contain NaN or infinite values")
    data = np.empty((2 * z.shape[0],) + z.shape[1:], dtype=np.float64)
    data[0::2] = z.real
    data[1::2] = z.imag
    return FeatureTensor(data=data, compression_exponent=exponent)


def features_from_spectrogram(
    spec: Spectrogram, bank: FilterBank, exponent: float = Config.COMPRESSION_EXPONENT
) -> FeatureTensor:
    check_exponent(exponent)
    return assemble_features(compress(apply_filterbank(bank, spec), exponent), exponent)


def extract_features(
    wav_path,
    geom: UcaGeometry,
    pattern: IdealPattern,
    num_filters: int,
    cfg: StftConfig,
    exponent: float = Config.COMPRESSION_EXPONENT,
    *,
    regularize: bool = Config.REGULARIZE,
) -> FeatureTensor:
    """WAV file -> stft -> filter bank -> compression -> interleaved features."""
    check_exponent(exponent)
    signal, sample_rate = read_wav(wav_path)
    return extract_features_from_signal(
        signal, sample_rate, geom, pattern, num_filters, cfg, exponent, regularize=regularize
    )


def extract_features_from_signal(
    signal,
    sample_rate: int,
    geom: UcaGeometry,
    pattern: IdealPattern,
    num_filters: int,
    cfg: StftConfig,
    exponent: float = Config.COMPRESSION_EXPONENT,
    *,
    regularize: bool = Config.REGULARIZE,
    bank: FilterBank | None = None,
) -> FeatureTensor:
    check_exponent(exponent)
    x = as_channels(signal)
    if x.shape[0] != geom.num_mics:
        raise ShapeMismatchError(f"signal has {x.shape[0]} channels, geometry has {geom.num_mics} mics")
    if sample_rate != cfg.sample_rate:
        raise InvalidArgumentError(
            f"signal sample rate {sample_rate} Hz differs from the configured {cfg.sample_rate} Hz"
        )
    if bank is None:
        bank = build_filterbank(geom, pattern, num_filters, cfg, regularize=regularize)
    return features_from_spectrogram(stft(x, cfg), bank, exponent)


# ── Microphone-selection baseline ───────────────────────────────────────────────

def select_microphones(test_geom: UcaGeometry, reference_geom: UcaGeometry) -> np.ndarray:
    """For each reference sensor, the unused test sensor closest in azimuth.

    Distance is circular; ties go to the lower test index.
    """
    if test_geom.num_mics < reference_geom.num_mics:
        raise InvalidArgumentError(
            f"test array has {test_geom.num_mics} mics, fewer than the {reference_geom.num_mics} "
            f"of the reference array"
        )
    available = np.ones(test_geom.num_mics, dtype=bool)
    chosen = []
    for ref_azimuth in reference_geom.sensor_azimuths:
        dist = circular_distance(test_geom.sensor_azimuths, ref_azimuth)
        dist = np.where(available, np.round(dist, 12), np.inf)
        pick = int(np.argmin(dist))
        available[pick] = False
        chosen.append(pick)
    return np.array(chosen, dtype=np.int64)


def selected_channel_features(
    spec: Spectrogram, indices, exponent: float = Config.COMPRESSION_EXPONENT
) -> FeatureTensor:
    """Compressed raw STFT channels, [2K x T x F], same layout as filter-bank features."""
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= spec.num_channels):
        raise ShapeMismatchError(
            f"channel indices {indices.tolist()} out of range for {spec.num_channels} channels"
        )
    return assemble_features(compress(spec.data[indices], exponent), exponent)


# ── Fixed-length segments ───────────────────────────────────────────────────────

def segment_signal(signal, cfg: StftConfig, seconds: float) -> list[np.ndarray]:
    """Cut [C x S] into consecutive [C x n] pieces, n = round(seconds * sample_rate).

    The trailing remainder is dropped. A signal shorter than one segment comes
    back whole as long as it holds at least one STFT frame.
    """
    if not math.isfinite(seconds) or seconds <= 0:
        raise InvalidArgumentError(f"segment length must be > 0 seconds, got {seconds}")
    n = int(round(seconds * cfg.sample_rate))
    if n < cfg.win_len:
        raise InvalidArgumentError(
            f"{seconds:g} s segments hold {n} samples, fewer than one {cfg.win_len}-sample window"
        )
    x = as_channels(signal)
    if x.shape[1] < n:
        if x.shape[1] < cfg.win_len:
            raise TooShortSignalError(
                f"signal has {x.shape[1]} samples, shorter than one {cfg.win_len}-sample window"
            )
        return [x]
    return [x[:, k * n:(k + 1) * n] for k in range(x.shape[1] // n)]
