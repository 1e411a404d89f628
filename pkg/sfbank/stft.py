# pyright: basic
"""
Short-time Fourier transform with a symmetric Hamming window.

Frames start at t * hop, so a signal of S samples yields
T = 1 + (S - win_len) // hop frames; trailing samples that do not fill a
whole frame are dropped. Spectra are one-sided, F = fft_size // 2 + 1 bins.
The inverse is weighted overlap-add, which reconstructs the analyzed span
exactly whenever the summed squared window never vanishes.
"""
import logging

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from sfbank.config import Config
from sfbank.errors import (
    InvalidArgumentError,
    NonColaError,
    ShapeMismatchError,
    TooShortSignalError,
)
from sfbank.geometry import readonly

logger = logging.getLogger(__name__)


class StftConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    sample_rate: int = Field(Config.SAMPLE_RATE, gt=0, description="Sampling rate in Hz")
    win_len: int = Field(Config.WIN_LEN, ge=2, description="Window length in samples")
    hop: int = Field(Config.HOP, ge=1, description="Frame advance in samples")
    fft_size: int = Field(Config.FFT_SIZE, ge=2, description="FFT length, >= win_len")

    @model_validator(mode='after')
    def _fft_covers_window(self) -> "StftConfig":
        if self.fft_size < self.win_len:
            raise ValueError(f"fft_size={self.fft_size} is shorter than win_len={self.win_len}")
        return self

    @property
    def num_bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def bin_frequencies(self) -> np.ndarray:
        """Center frequency of every one-sided bin, in Hz."""
        return np.arange(self.num_bins) * self.sample_rate / self.fft_size

    def num_frames(self, num_samples: int) -> int:
        if num_samples < self.win_len:
            return 0
        return 1 + (num_samples - self.win_len) // self.hop

    def span(self, num_frames: int) -> int:
        """Samples covered by ``num_frames`` frames."""
        return self.win_len + (num_frames - 1) * self.hop if num_frames > 0 else 0


class Spectrogram(BaseModel):
    """Complex one-sided STFT, shape [C x T x F]."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    data: np.ndarray = Field(..., description="Complex coefficients indexed [channel, frame, bin]")
    config: StftConfig

    @field_validator('data', mode='before')
    @classmethod
    def _as_complex_array(cls, v) -> np.ndarray:
        return readonly(np.array(v, dtype=np.complex128))

    @model_validator(mode='after')
    def _validate_shape(self) -> "Spectrogram":
        if self.data.ndim != 3:
            raise ValueError(f"spectrogram must be [C x T x F], got shape {self.data.shape}")
        if self.data.shape[2] != self.config.num_bins:
            raise ValueError(
                f"spectrogram has {self.data.shape[2]} bins, config expects {self.config.num_bins}"
            )
        return self

    @property
    def num_channels(self) -> int:
        return self.data.shape[0]

    @property
    def num_frames(self) -> int:
        return self.data.shape[1]

    @property
    def num_bins(self) -> int:
        return self.data.shape[2]


def hamming_window(length: int) -> np.ndarray:
    """Symmetric Hamming window of ``length`` points (``np.hamming``)."""
    if int(length) != length or length < 2:
        raise InvalidArgumentError(f"window length must be an integer >= 2, got {length}")
    return np.hamming(int(length))


def as_channels(signal) -> np.ndarray:
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim == 1:
        x = x[np.newaxis, :]
    if x.ndim != 2:
        raise ShapeMismatchError(f"signal must be [S] or [C x S], got shape {x.shape}")
    return x


def stft(signal, cfg: StftConfig) -> Spectrogram:
    """Analyze a [C x S] (or mono [S]) real signal.

    Raises:
        TooShortSignalError: S < win_len
    """
    x = as_channels(signal)
    if x.shape[1] < cfg.win_len:
        raise TooShortSignalError(
            f"signal has {x.shape[1]} samples, shorter than one {cfg.win_len}-sample window"
        )
    frames = sliding_window_view(x, cfg.win_len, axis=-1)[:, ::cfg.hop, :]
    data = np.fft.rfft(frames * hamming_window(cfg.win_len), n=cfg.fft_size, axis=-1)
    return Spectrogram(data=data, config=cfg)


def check_cola(cfg: StftConfig) -> None:
    """Raise unless weighted overlap-add can invert this window/hop pair.

    Raises:
        NonColaError: hop > win_len, or the summed squared window vanishes somewhere
    """
    if cfg.hop > cfg.win_len:
        raise NonColaError(f"hop={cfg.hop} exceeds win_len={cfg.win_len}; frames leave gaps")
    sq = hamming_window(cfg.win_len) ** 2
    padded = np.zeros(-(-cfg.win_len // cfg.hop) * cfg.hop)
    padded[:cfg.win_len] = sq
    coverage = padded.reshape(-1, cfg.hop).sum(axis=0)
    if np.min(coverage) <= 0.0:
        raise NonColaError(f"summed squared window vanishes for win_len={cfg.win_len}, hop={cfg.hop}")


def istft(spec: Spectrogram, length: int | None = None) -> np.ndarray:
    """Weighted overlap-add inverse of :func:`stft`, returns [C x S'].

    S' = win_len + (T-1)*hop unless ``length`` asks for zero padding or truncation.
    """
    cfg = spec.config
    check_cola(cfg)
    window = hamming_window(cfg.win_len)
    frames = np.fft.irfft(spec.data, n=cfg.fft_size, axis=-1)[..., :cfg.win_len] * window

    num_frames = spec.num_frames
    total = cfg.span(num_frames)
    out = np.zeros((spec.num_channels, total))
    norm = np.zeros(total)
    for t in range(num_frames):
        start = t * cfg.hop
        out[:, start:start + cfg.win_len] += frames[:, t, :]
        norm[start:start + cfg.win_len] += window ** 2
    out = np.divide(out, norm, out=np.zeros_like(out), where=norm > 0.0)

    if length is not None:
        if length < total:
            out = out[:, :length]
        elif length > total:
            out = np.pad(out, ((0, 0), (0, length - total)))
    return out


def frame_energies(spec: Spectrogram) -> np.ndarray:
    """Energy of every windowed frame from its one-sided spectrum, shape [C x T]."""
    n = spec.config.fft_size
    power = np.abs(spec.data) ** 2
    weights = np.full(spec.num_bins, 2.0)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[-1] = 1.0
    return power @ weights / n
