# pyright: basic
"""
Beampattern evaluation and geometry-invariance checks.

The realized beampattern of a filter h at frequency f is B(theta) = h^H d(omega, theta).
Two invariance measures are provided: pairwise deviation of realized
beampatterns across geometries on an azimuth grid, and relative L2 distance
between the feature tensors the same scene produces on different arrays.
"""
import csv
import json
import logging
import math
from itertools import combinations
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from sfbank.beamdesign import IdealPattern, SpatialFilter, design_filter
from sfbank.config import Config
from sfbank.errors import GeometryMismatchError, InvalidArgumentError, ShapeMismatchError
from sfbank.geometry import UcaGeometry, steering_matrix, uniform_azimuths
from sfbank.models import FeaturePairError, InvarianceReport, InvarianceVerdict, PairDeviation
from sfbank.scenesim import Scene, simulate_scene
from sfbank.spatialbank import build_filterbank, check_exponent, features_from_spectrogram
from sfbank.stft import StftConfig

logger = logging.getLogger(__name__)

_COLUMNS = ('azimuth_deg', 'real', 'imag', 'magnitude_db')


class BeampatternSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    azimuth: float = Field(..., description="Azimuth in radians")
    response: complex = Field(..., description="h^H d(omega, theta)")
    magnitude_db: float = Field(..., ge=Config.DB_FLOOR, description="20 log10 |response|, floored")


def magnitude_db(response, floor_db: float = Config.DB_FLOOR):
    """20 log10 |response|, never below ``floor_db``."""
    floor = 10.0 ** (floor_db / 20.0)
    return np.maximum(20.0 * np.log10(np.maximum(np.abs(response), floor)), floor_db)


def azimuth_grid(size: int = Config.GRID_SIZE) -> np.ndarray:
    if int(size) != size or size < 1:
        raise InvalidArgumentError(f"grid size must be an integer >= 1, got {size}")
    return uniform_azimuths(int(size))


def beampattern_filename(geom: UcaGeometry, freq_hz: float, fmt: str = 'csv') -> str:
    return f"beampattern_M{geom.num_mics}_r{geom.radius * 1000:g}mm_f{freq_hz:g}.{fmt}"


def beampattern_response(filt: SpatialFilter, geom: UcaGeometry, freq_hz: float, azimuths) -> np.ndarray:
    """h^H d(omega, theta_j) for every azimuth; checks the filter belongs to this geometry/frequency."""
    if filt.weights.size != geom.num_mics or not filt.geom.same_as(geom):
        raise GeometryMismatchError(f"filter designed for {filt.geom} evaluated on {geom}")
    if not math.isclose(filt.freq_hz, freq_hz, rel_tol=1e-9, abs_tol=1e-9):
        raise GeometryMismatchError(
            f"filter designed at {filt.freq_hz:g} Hz evaluated at {freq_hz:g} Hz"
        )
    return filt.weights.conj() @ steering_matrix(geom, freq_hz, azimuths)


def realized_beampattern(
    filt: SpatialFilter, geom: UcaGeometry, freq_hz: float, azimuths
) -> list[BeampatternSample]:
    azimuths = np.atleast_1d(np.asarray(azimuths, dtype=np.float64))
    response = beampattern_response(filt, geom, freq_hz, azimuths)
    levels = magnitude_db(response)
    return [
        BeampatternSample(azimuth=float(a), response=complex(r), magnitude_db=float(db))
        for a, r, db in zip(azimuths, response, levels)
    ]


def invariance_report(
    geoms: list[UcaGeometry],
    pattern: IdealPattern,
    steer: float,
    freq_hz: float,
    grid_size: int = Config.GRID_SIZE,
    *,
    regularize: bool = Config.REGULARIZE,
    magnitude_only: bool = False,
) -> InvarianceReport:
    """Max and mean |B_a(theta) - B_b(theta)| over all geometry pairs and grid points."""
    if len(geoms) < 2:
        raise InvalidArgumentError(f"invariance needs at least 2 geometries, got {len(geoms)}")
    grid = azimuth_grid(grid_size)
    notes = []
    responses = []
    for geom in geoms:
        filt = design_filter(geom, pattern, steer, freq_hz, regularize=regularize)
        if filt.regularized_orders:
            notes.append(f"{geom}: regularized Bessel denominators for n={list(filt.regularized_orders)}")
        response = beampattern_response(filt, geom, freq_hz, grid)
        responses.append(np.abs(response) if magnitude_only else response)
    if freq_hz == 0.0:
        notes.append("f = 0 Hz: uniform averaging filter used for every geometry")

    pairs = []
    for a, b in combinations(range(len(geoms)), 2):
        deviation = np.abs(responses[a] - responses[b])
        pair = PairDeviation(
            geom_a=geoms[a].key,
            geom_b=geoms[b].key,
            max_abs_deviation=float(np.max(deviation)),
            mean_abs_deviation=float(np.mean(deviation)),
        )
        logger.debug(f"{geoms[a]} vs {geoms[b]}: max {pair.max_abs_deviation:.4g}, mean {pair.mean_abs_deviation:.4g}")
        pairs.append(pair)

    report = InvarianceReport(
        geometry_pairs=[(p.geom_a, p.geom_b) for p in pairs],
        freq_hz=float(freq_hz),
        steer_deg=math.degrees(steer),
        max_abs_deviation=max(p.max_abs_deviation for p in pairs),
        mean_abs_deviation=float(np.mean([p.mean_abs_deviation for p in pairs])),
        magnitude_only=magnitude_only,
        pairs=pairs,
        notes=notes,
    )
    logger.info(
        f"Beampattern invariance over {len(geoms)} geometries at {freq_hz:g} Hz: "
        f"max {report.max_abs_deviation:.4g}, mean {report.mean_abs_deviation:.4g}"
    )
    return report


def _sample_row(sample: BeampatternSample) -> dict[str, str]:
    return {
        'azimuth_deg': f"{math.degrees(sample.azimuth):.9g}",
        'real': f"{sample.response.real:.9g}",
        'imag': f"{sample.response.imag:.9g}",
        'magnitude_db': f"{sample.magnitude_db:.9g}",
    }


def export_beampattern(samples: list[BeampatternSample], path, fmt: str | None = None) -> Path:
    """Write samples sorted by azimuth as CSV or JSON with 9 significant digits."""
    if not samples:
        raise InvalidArgumentError("no beampattern samples to export")
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip('.') or 'csv').lower()
    if fmt not in ('csv', 'json'):
        raise InvalidArgumentError(f"export format must be 'csv' or 'json', got '{fmt}'")

    rows = [_sample_row(s) for s in sorted(samples, key=lambda s: s.azimuth)]
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == 'csv':
        with open(path, 'w', newline='') as f:
            writer = csv.DictWriter(f, fieldnames=_COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
    else:
        # Same formatted strings as the CSV, so both parse to identical values.
        records = [{k: float(v) for k, v in row.items()} for row in rows]
        with open(path, 'w') as f:
            json.dump(records, f, indent=2)
    logger.info(f"Wrote {path} ({len(rows)} azimuths)")
    return path


# ── Feature invariance ──────────────────────────────────────────────────────────

def feature_rel_l2(a, b) -> float:
    """||a - b|| / max(||a||, ||b||); 0 when both are zero."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"cannot compare feature tensors of shapes {a.shape} and {b.shape}")
    denom = max(float(np.linalg.norm(a)), float(np.linalg.norm(b)))
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(a - b)) / denom


def check_feature_invariance(
    scene: Scene,
    geoms: list[UcaGeometry],
    patterns: list[IdealPattern],
    num_filters: int,
    cfg: StftConfig,
    exponent: float = Config.COMPRESSION_EXPONENT,
    tolerance: float = Config.FEATURE_TOLERANCE,
    *,
    regularize: bool = Config.REGULARIZE,
    freq_hz: float = Config.ANALYSIS_FREQ_HZ,
) -> InvarianceVerdict:
    """Render ``scene`` on every geometry, extract features, compare them pairwise.

    ``patterns`` holds one pattern per geometry (or a single pattern for all).
    Runs whose patterns differ are reported as failing: their features are not
    meant to agree. Otherwise the verdict also carries the beampattern
    invariance report of the same geometries at ``freq_hz`` (steered to 0),
    with ``feature_rel_l2`` set to the worst feature pair.
    """
    if len(geoms) < 2:
        raise InvalidArgumentError(f"invariance needs at least 2 geometries, got {len(geoms)}")
    if len(patterns) == 1:
        patterns = list(patterns) * len(geoms)
    if len(patterns) != len(geoms):
        raise InvalidArgumentError(f"{len(patterns)} patterns given for {len(geoms)} geometries")
    check_exponent(exponent)

    features = []
    for geom, pattern in zip(geoms, patterns):
        mix = simulate_scene(scene, geom, cfg)
        bank = build_filterbank(geom, pattern, num_filters, cfg, regularize=regularize)
        features.append(features_from_spectrogram(mix.mixture, bank, exponent).data)

    message = None
    mismatched = any(
        pattern.order != patterns[0].order
        or not np.array_equal(pattern.coefficients, patterns[0].coefficients)
        for pattern in patterns[1:]
    )
    if mismatched:
        orders = sorted({p.order for p in patterns})
        message = (
            f"pattern differs between runs (orders {orders}); features from different target "
            f"patterns are not comparable"
        )

    pairs = []
    for a, b in combinations(range(len(geoms)), 2):
        err = feature_rel_l2(features[a], features[b])
        pairs.append(FeaturePairError(
            geom_a=geoms[a].key, geom_b=geoms[b].key, rel_l2=err, passed=err <= tolerance
        ))
        logger.debug(f"{geoms[a]} vs {geoms[b]}: feature rel L2 {err:.4g}")

    max_err = max(p.rel_l2 for p in pairs)
    passed = message is None and all(p.passed for p in pairs)
    if message is None and not passed:
        message = f"feature rel L2 {max_err:.4g} exceeds tolerance {tolerance:g}"
    logger.info(f"Feature invariance: max rel L2 {max_err:.4g}, tolerance {tolerance:g}, passed={passed}")

    report = None
    if not mismatched:
        report = invariance_report(geoms, patterns[0], 0.0, freq_hz, regularize=regularize)
        report = report.model_copy(update={'feature_rel_l2': max_err})
    return InvarianceVerdict(
        passed=passed, tolerance=tolerance, max_rel_l2=max_err, pairs=pairs, message=message,
        report=report,
    )
