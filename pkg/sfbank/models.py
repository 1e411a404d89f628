# pyright: basic
"""
Pydantic models for run configuration files and the JSON reports the CLI prints.

Physical quantities carry their unit in the field name (radius_m, delay_s,
azimuth_deg, snr_db, freq_hz). Angles are degrees here and radians everywhere
inside the library; the ``to_*`` helpers convert.
"""
import math
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from sfbank.beamdesign import IdealPattern, resolve_pattern
from sfbank.config import Config
from sfbank.geometry import UcaGeometry, circular_distance, make_uca
from sfbank.scenesim import MIN_SEPARATION, ImageSource, Interferer, NoiseKind, Scene
from sfbank.stft import StftConfig

PatternSpec = str | dict

GeometryKey = tuple[int, float]


def _require_resolvable(num_mics: int, pattern: IdealPattern, where: str) -> None:
    if num_mics < pattern.min_mics:
        raise ValueError(
            f"{where}: num_mics={num_mics} is below 2N+1={pattern.min_mics} for a pattern of "
            f"order N={pattern.order} (requires M >= 2N+1)"
        )


class ArrayParams(BaseModel):
    """UCA parameters as written in a config file."""

    model_config = ConfigDict(extra='forbid')

    num_mics: int = Field(Config.NUM_MICS, ge=1, description="Number of microphones M")
    radius_m: float = Field(Config.RADIUS_M, ge=0.0, description="Array radius in meters")
    sound_speed: float = Field(Config.SOUND_SPEED, gt=0.0, description="Speed of sound in m/s")

    def to_geometry(self) -> UcaGeometry:
        return make_uca(self.num_mics, self.radius_m, self.sound_speed)


class StftParams(BaseModel):
    model_config = ConfigDict(extra='forbid')

    sample_rate: int = Field(Config.SAMPLE_RATE, gt=0)
    win_len: int = Field(Config.WIN_LEN, ge=2)
    hop: int = Field(Config.HOP, ge=1)
    fft_size: int = Field(Config.FFT_SIZE, ge=2)

    @model_validator(mode='after')
    def _validate_framing(self) -> "StftParams":
        if self.fft_size < self.win_len:
            raise ValueError(f"fft_size={self.fft_size} is shorter than win_len={self.win_len}")
        if self.hop > self.win_len:
            raise ValueError(f"hop={self.hop} exceeds win_len={self.win_len}; overlap-add needs hop <= win_len")
        return self

    def to_config(self) -> StftConfig:
        return StftConfig(**self.model_dump())


class BankParams(BaseModel):
    model_config = ConfigDict(extra='forbid')

    pattern: PatternSpec = Field(Config.PATTERN, description="Preset name or {order, coeffs}")
    num_filters: int = Field(Config.NUM_FILTERS, ge=1, description="Number of steered filters I")
    compression_exponent: float = Field(Config.COMPRESSION_EXPONENT, gt=0.0, le=1.0)
    regularize: bool = Field(Config.REGULARIZE, description="Clamp near-zero Bessel denominators")

    @field_validator('pattern')
    @classmethod
    def validate_pattern(cls, v: PatternSpec) -> PatternSpec:
        """Resolve once so unknown presets and bad coefficient counts fail here."""
        resolve_pattern(v)
        return v

    @property
    def ideal_pattern(self) -> IdealPattern:
        return resolve_pattern(self.pattern)


class ImageParams(BaseModel):
    model_config = ConfigDict(extra='forbid')

    gain: float = Field(..., description="Path gain alpha")
    delay_s: float = Field(..., ge=0.0, le=1.0, description="Path delay in seconds")
    azimuth_deg: float = Field(..., description="Arrival azimuth in degrees")

    def to_image(self) -> ImageSource:
        return ImageSource(gain=self.gain, delay=self.delay_s, azimuth=math.radians(self.azimuth_deg))

    @classmethod
    def from_image(cls, image: ImageSource) -> "ImageParams":
        return cls(gain=image.gain, delay_s=image.delay, azimuth_deg=math.degrees(image.azimuth))


class NoiseParams(BaseModel):
    model_config = ConfigDict(extra='forbid')

    kind: NoiseKind = NoiseKind.WHITE
    snr_db: float = Field(Config.DEFAULT_SNR_DB, ge=-20.0, le=60.0)
    seed: int = 0


class InterfererParams(BaseModel):
    model_config = ConfigDict(extra='forbid')

    azimuth_deg: float
    sir_db: float = Field(..., ge=-20.0, le=60.0)
    seed: int = 1

    def to_interferer(self) -> Interferer:
        return Interferer(azimuth=math.radians(self.azimuth_deg), sir_db=self.sir_db, seed=self.seed)

    @classmethod
    def from_interferer(cls, interferer: Interferer) -> "InterfererParams":
        return cls(
            azimuth_deg=math.degrees(interferer.azimuth),
            sir_db=interferer.sir_db,
            seed=interferer.seed,
        )


class SceneParams(BaseModel):
    """A scene file entry. Either explicit image sources or a ``random_seed``."""

    model_config = ConfigDict(extra='forbid')

    source_wav: str = Field(..., min_length=1, description="Mono source WAV")
    images: list[ImageParams] = Field(default_factory=list)
    noise: NoiseParams = Field(default_factory=NoiseParams)
    interferer: InterfererParams | None = None
    random_seed: int | None = Field(None, description="Draw images, SNR and interferer from this seed")

    @field_validator('source_wav')
    @classmethod
    def validate_source_exists(cls, v: str) -> str:
        if not Path(v).is_file():
            raise ValueError(f"source_wav not found: '{v}'")
        return v

    @model_validator(mode='after')
    def _validate_paths(self) -> "SceneParams":
        if not self.images and self.random_seed is None:
            raise ValueError("scene needs at least one image source (the direct path) or a random_seed")
        if self.interferer is not None and self.images:
            gap = float(circular_distance(
                math.radians(self.interferer.azimuth_deg), math.radians(self.images[0].azimuth_deg)
            ))
            if gap < MIN_SEPARATION - 1e-12:
                raise ValueError(
                    f"interferer is {math.degrees(gap):.2f} deg from the direct path, "
                    f"minimum is {math.degrees(MIN_SEPARATION):g} deg"
                )
        return self

    def to_scene(self, source, sample_rate: int) -> Scene:
        return Scene(
            source=source,
            images=[image.to_image() for image in self.images],
            noise_kind=self.noise.kind,
            snr_db=self.noise.snr_db,
            seed=self.noise.seed,
            sample_rate=sample_rate,
            interferer=self.interferer.to_interferer() if self.interferer else None,
        )


class AnalysisParams(BaseModel):
    model_config = ConfigDict(extra='forbid')

    freq_hz: float = Field(Config.ANALYSIS_FREQ_HZ, ge=0.0)
    steer_deg: float = 0.0
    grid_size: int = Field(Config.GRID_SIZE, ge=1)
    geoms: list[ArrayParams] = Field(default_factory=list, description="Defaults to the run array")
    magnitude_only: bool = False
    format: Literal['csv', 'json'] = 'csv'


class InvarianceParams(BaseModel):
    model_config = ConfigDict(extra='forbid')

    geoms: list[ArrayParams] = Field(
        default_factory=lambda: [
            ArrayParams(num_mics=5, radius_m=0.005),
            ArrayParams(num_mics=9, radius_m=0.015),
        ],
        min_length=2,
    )
    patterns: list[PatternSpec] | None = Field(
        None, description="One pattern per geometry; defaults to the bank pattern for all"
    )
    tolerance: float = Field(Config.FEATURE_TOLERANCE, gt=0.0)

    @model_validator(mode='after')
    def _validate_patterns(self) -> "InvarianceParams":
        if self.patterns is not None:
            if len(self.patterns) != len(self.geoms):
                raise ValueError(
                    f"{len(self.patterns)} patterns given for {len(self.geoms)} geometries"
                )
            for i, (geom, spec) in enumerate(zip(self.geoms, self.patterns)):
                _require_resolvable(geom.num_mics, resolve_pattern(spec), f"invariance.geoms[{i}]")
        return self


class OutputParams(BaseModel):
    model_config = ConfigDict(extra='forbid')

    directory: str = Field(Config.OUTPUT_DIR, description="Where artifacts are written")
    stem: str | None = Field(None, min_length=1, description="Base name of written files; each command has its own default")
    wav_subtype: Literal['FLOAT', 'PCM_16'] = Field(Config.WAV_SUBTYPE)


class RunConfig(BaseModel):
    """Everything one CLI invocation needs, validated in one pass."""

    model_config = ConfigDict(extra='forbid')

    array: ArrayParams = Field(default_factory=ArrayParams)
    stft: StftParams = Field(default_factory=StftParams)
    bank: BankParams = Field(default_factory=BankParams)
    scene: SceneParams | None = None
    analysis: AnalysisParams = Field(default_factory=AnalysisParams)
    invariance: InvarianceParams = Field(default_factory=InvarianceParams)
    outputs: OutputParams = Field(default_factory=OutputParams)

    @model_validator(mode='after')
    def _validate_array_resolves_pattern(self) -> "RunConfig":
        pattern = self.bank.ideal_pattern
        _require_resolvable(self.array.num_mics, pattern, "array")
        for i, geom in enumerate(self.analysis.geoms):
            _require_resolvable(geom.num_mics, pattern, f"analysis.geoms[{i}]")
        if self.invariance.patterns is None:
            for i, geom in enumerate(self.invariance.geoms):
                _require_resolvable(geom.num_mics, pattern, f"invariance.geoms[{i}]")
        return self


# ── Reports ─────────────────────────────────────────────────────────────────────

class PairDeviation(BaseModel):
    geom_a: GeometryKey
    geom_b: GeometryKey
    max_abs_deviation: float = Field(..., ge=0.0)
    mean_abs_deviation: float = Field(..., ge=0.0)


class InvarianceReport(BaseModel):
    """Pairwise beampattern deviations across geometries at one frequency."""

    geometry_pairs: list[tuple[GeometryKey, GeometryKey]]
    freq_hz: float
    steer_deg: float = 0.0
    max_abs_deviation: float = Field(..., ge=0.0)
    mean_abs_deviation: float = Field(..., ge=0.0)
    feature_rel_l2: float | None = Field(None, ge=0.0)
    magnitude_only: bool = False
    pairs: list[PairDeviation] = Field(default_factory=list)
    notes: list[str] = Field(default_factory=list)

    @model_validator(mode='after')
    def _mean_below_max(self) -> "InvarianceReport":
        if self.mean_abs_deviation > self.max_abs_deviation * (1.0 + 1e-12):
            raise ValueError("mean deviation exceeds max deviation")
        return self


class FeaturePairError(BaseModel):
    geom_a: GeometryKey
    geom_b: GeometryKey
    rel_l2: float = Field(..., ge=0.0)
    passed: bool


class InvarianceVerdict(BaseModel):
    passed: bool
    tolerance: float
    max_rel_l2: float = Field(..., ge=0.0)
    pairs: list[FeaturePairError] = Field(default_factory=list)
    message: str | None = None
    # Beampattern deviations of the same geometries, with feature_rel_l2 filled in.
    # None when the runs use different patterns.
    report: InvarianceReport | None = None


class SimulationMetadata(BaseModel):
    """Sidecar JSON written next to a simulated WAV."""

    wav: str
    seed: int
    sample_rate: int
    num_samples: int
    array: ArrayParams
    noise_kind: NoiseKind
    requested_snr_db: float | None = None
    realized_snr_db: float | None = None
    images: list[ImageParams]
    interferer: InterfererParams | None = None
    random_seed: int | None = None
