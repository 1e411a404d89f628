# pyright: basic
"""
Desk-scale scene simulator in the STFT domain.

Each propagation path l is an image source with a frequency-flat gain and a
pure delay, Q_l(omega) = alpha_l exp(-j omega tau_l), arriving as a far-field
plane wave from azimuth theta_l:

    x_d(k, omega) = sum_l Q_l(omega) S(k, omega) d(omega, theta_l)

An optional directional interferer (a white point source) and spatially white
sensor noise are added on top. Every random draw comes from
``np.random.default_rng(seed)`` so a scene is reproducible from its seeds.
"""
import logging
import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from sfbank.config import Config
from sfbank.errors import InvalidArgumentError, ShapeMismatchError, ZeroEnergyError
from sfbank.geometry import UcaGeometry, circular_distance, readonly, steering_spectrum
from sfbank.stft import Spectrogram, StftConfig, istft, stft
from sfbank.wavio import write_wav

logger = logging.getLogger(__name__)

MIN_SEPARATION = math.radians(5.0)
MAX_DELAY_S = 1.0
SNR_LIMITS_DB = (-20.0, 60.0)


class NoiseKind(str, Enum):
    WHITE = 'white'
    NONE = 'none'


class ImageSource(BaseModel):
    """One propagation path: gain alpha, delay tau (s), arrival azimuth theta (rad)."""

    model_config = ConfigDict(frozen=True)

    gain: float = Field(..., description="alpha_l, may be negative")
    delay: float = Field(..., ge=0.0, le=MAX_DELAY_S, description="tau_l in seconds")
    azimuth: float = Field(..., description="theta_l in radians")


class Interferer(BaseModel):
    """White point source arriving as a plane wave from ``azimuth``."""

    model_config = ConfigDict(frozen=True)

    azimuth: float = Field(..., description="Arrival azimuth in radians")
    sir_db: float = Field(..., ge=SNR_LIMITS_DB[0], le=SNR_LIMITS_DB[1])
    seed: int = Field(..., description="Seed of the interferer waveform")


class Scene(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    source: np.ndarray = Field(..., description="Mono source waveform")
    images: list[ImageSource] = Field(..., min_length=1, description="Direct path first")
    noise_kind: NoiseKind = NoiseKind.WHITE
    snr_db: float = Field(Config.DEFAULT_SNR_DB, ge=SNR_LIMITS_DB[0], le=SNR_LIMITS_DB[1])
    seed: int = Field(0, description="Seed of the sensor noise")
    sample_rate: int = Field(Config.SAMPLE_RATE, gt=0)
    interferer: Interferer | None = None

    @field_validator('source', mode='before')
    @classmethod
    def _as_mono(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=np.float64)
        if arr.ndim == 2 and arr.shape[0] == 1:
            arr = arr[0]
        if arr.ndim != 1:
            raise ValueError(f"scene source must be mono, got shape {arr.shape}")
        return readonly(arr)

    @model_validator(mode='after')
    def _interferer_apart_from_target(self) -> "Scene":
        if self.interferer is not None:
            gap = float(circular_distance(self.interferer.azimuth, self.images[0].azimuth))
            if gap < MIN_SEPARATION - 1e-12:
                raise ValueError(
                    f"interferer is {math.degrees(gap):.2f} deg from the direct path, "
                    f"minimum is {math.degrees(MIN_SEPARATION):g} deg"
                )
        return self


class MixResult(BaseModel):
    """Every component of a simulated observation, kept apart for checking."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    desired: Spectrogram
    interference: Spectrogram | None = None
    noise: Spectrogram | None = None
    mixture: Spectrogram
    requested_snr_db: float | None = None
    realized_snr_db: float | None = None
    seed: int


# ── Synthesis ───────────────────────────────────────────────────────────────────

def _plane_wave(geom: UcaGeometry, cfg: StftConfig, source_spec: np.ndarray, azimuth: float):
    """[T x F] source spectrum -> [M x T x F] array observation from ``azimuth``."""
    d = steering_spectrum(geom, cfg.bin_frequencies, azimuth)
    return d[:, np.newaxis, :] * source_spec[np.newaxis, :, :]


def synthesize_desired(scene: Scene, geom: UcaGeometry, cfg: StftConfig) -> Spectrogram:
    """x_d = sum_l alpha_l exp(-j omega tau_l) S d(omega, theta_l), shape [M x T x F]."""
    if scene.sample_rate != cfg.sample_rate:
        raise InvalidArgumentError(
            f"scene sample rate {scene.sample_rate} Hz differs from STFT rate {cfg.sample_rate} Hz"
        )
    source_spec = stft(scene.source, cfg).data[0]
    omega = 2.0 * np.pi * cfg.bin_frequencies
    desired = np.zeros((geom.num_mics,) + source_spec.shape, dtype=np.complex128)
    for image in scene.images:
        q = image.gain * np.exp(-1j * omega * image.delay)
        desired += _plane_wave(geom, cfg, q[np.newaxis, :] * source_spec, image.azimuth)
    return Spectrogram(data=desired, config=cfg)


def synthesize_interference(
    interferer: Interferer,
    geom: UcaGeometry,
    cfg: StftConfig,
    num_frames: int,
    reference_energy: float,
) -> Spectrogram:
    """White point source scaled so reference_energy / interference energy = SIR."""
    if reference_energy <= 0.0:
        raise ZeroEnergyError("cannot set an SIR against a desired signal with zero energy")
    rng = np.random.default_rng(interferer.seed)
    waveform = rng.standard_normal(cfg.span(num_frames))
    data = _plane_wave(geom, cfg, stft(waveform, cfg).data[0], interferer.azimuth)
    energy = float(np.sum(np.abs(data) ** 2))
    data *= math.sqrt(reference_energy / (energy * 10.0 ** (interferer.sir_db / 10.0)))
    return Spectrogram(data=data, config=cfg)


# ── Noise mixing ────────────────────────────────────────────────────────────────

def channel_energies(spec: Spectrogram) -> np.ndarray:
    """Sum of |X|^2 over frames and bins, one value per channel."""
    return np.sum(np.abs(spec.data) ** 2, axis=(1, 2))


def measure_snr_db(desired: Spectrogram, noise: Spectrogram) -> float:
    """Mean over non-silent channels of 10 log10(desired energy / noise energy)."""
    signal = channel_energies(desired)
    active = signal > 0.0
    return float(np.mean(10.0 * np.log10(signal[active] / channel_energies(noise)[active])))


def white_noise(desired: Spectrogram, seed: int, snr_target_db: float) -> Spectrogram:
    """Gaussian sensor noise, independent per channel, scaled per channel to the target SNR."""
    desired_energy = channel_energies(desired)
    if not np.any(desired_energy > 0.0):
        raise ZeroEnergyError("desired signal has zero energy; SNR is undefined")
    # A silent channel is scaled against the mean channel energy.
    desired_energy = np.where(desired_energy > 0.0, desired_energy, np.mean(desired_energy))

    cfg = desired.config
    rng = np.random.default_rng(seed)
    waveform = rng.standard_normal((desired.num_channels, cfg.span(desired.num_frames)))
    data = stft(waveform, cfg).data
    target = desired_energy / 10.0 ** (snr_target_db / 10.0)
    scale = np.sqrt(target / np.sum(np.abs(data) ** 2, axis=(1, 2)))
    return Spectrogram(data=data * scale[:, np.newaxis, np.newaxis], config=cfg)


def mix_at_snr(desired: Spectrogram, noise_seed: int, snr_db: float) -> Spectrogram:
    """desired + white noise at ``snr_db``; deterministic given the seed."""
    noise = white_noise(desired, noise_seed, snr_db)
    return Spectrogram(data=desired.data + noise.data, config=desired.config)


def simulate_scene(scene: Scene, geom: UcaGeometry, cfg: StftConfig) -> MixResult:
    """Desired paths, then the interferer, then sensor noise, each stored separately."""
    desired = synthesize_desired(scene, geom, cfg)
    mixture = desired.data.copy()

    interference = None
    if scene.interferer is not None:
        interference = synthesize_interference(
            scene.interferer, geom, cfg, desired.num_frames, float(np.sum(channel_energies(desired)))
        )
        mixture += interference.data

    noise = None
    realized = None
    requested = None
    if scene.noise_kind == NoiseKind.WHITE:
        requested = scene.snr_db
        noise = white_noise(desired, scene.seed, scene.snr_db)
        mixture += noise.data
        realized = measure_snr_db(desired, noise)

    logger.debug(f"Simulated {len(scene.images)} paths on {geom}, SNR {realized}")
    return MixResult(
        desired=desired,
        interference=interference,
        noise=noise,
        mixture=Spectrogram(data=mixture, config=cfg),
        requested_snr_db=requested,
        realized_snr_db=realized,
        seed=scene.seed,
    )


def render_to_wav(spec: Spectrogram, path, subtype: str = Config.WAV_SUBTYPE, length: int | None = None):
    """istft the spectrogram and write an M-channel WAV."""
    signal = istft(spec, length=length)
    path = write_wav(path, signal, spec.config.sample_rate, subtype=subtype)
    logger.info(f"Wrote {path} ({signal.shape[0]} channels, {signal.shape[1]} samples)")
    return path


# ── Random scenes ───────────────────────────────────────────────────────────────

def random_scene(
    source,
    sample_rate: int,
    seed: int,
    num_images: int = 3,
    snr_range_db: tuple[float, float] = (-5.0, 10.0),
    with_interferer: bool = True,
) -> Scene:
    """Draw a direct path plus reflections, an SNR and optionally an interferer from ``seed``.

    The direct path has gain 1 and no delay. Reflections have gains in
    [0.2, 0.7] and delays in [1, 20] ms. All azimuths are uniform, and the
    interferer is redrawn until it sits at least 5 degrees from the direct path.
    """
    if num_images < 1:
        raise InvalidArgumentError(f"num_images must be >= 1, got {num_images}")
    low, high = snr_range_db
    if low > high:
        raise InvalidArgumentError(f"SNR range {snr_range_db} is reversed")

    rng = np.random.default_rng(seed)
    direct = ImageSource(gain=1.0, delay=0.0, azimuth=float(rng.uniform(0.0, 2.0 * np.pi)))
    images = [direct] + [
        ImageSource(
            gain=float(rng.uniform(0.2, 0.7)),
            delay=float(rng.uniform(0.001, 0.020)),
            azimuth=float(rng.uniform(0.0, 2.0 * np.pi)),
        )
        for _ in range(num_images - 1)
    ]
    snr = float(rng.uniform(low, high))
    noise_seed = int(rng.integers(2**31))

    interferer = None
    if with_interferer:
        while True:
            azimuth = float(rng.uniform(0.0, 2.0 * np.pi))
            if circular_distance(azimuth, direct.azimuth) >= MIN_SEPARATION:
                break
        interferer = Interferer(
            azimuth=azimuth,
            sir_db=float(rng.uniform(low, high)),
            seed=int(rng.integers(2**31)),
        )

    source = np.asarray(source, dtype=np.float64)
    if source.ndim != 1:
        raise ShapeMismatchError(f"scene source must be mono, got shape {source.shape}")
    return Scene(
        source=source,
        images=images,
        noise_kind=NoiseKind.WHITE,
        snr_db=snr,
        seed=noise_seed,
        sample_rate=sample_rate,
        interferer=interferer,
    )
