"""Multichannel RIFF WAV I/O. Arrays are [C x S] float64 on the Python side."""
import logging
from pathlib import Path

import numpy as np
import soundfile as sf

from sfbank.config import Config
from sfbank.errors import InvalidArgumentError, ShapeMismatchError

logger = logging.getLogger(__name__)

SUBTYPES = ('FLOAT', 'PCM_16')


def read_wav(path) -> tuple[np.ndarray, int]:
    """Load a WAV file as ([C x S] float64, sample_rate)."""
    try:
        data, sample_rate = sf.read(str(path), dtype='float64', always_2d=True)
    except sf.LibsndfileError as e:
        raise InvalidArgumentError(f"cannot read WAV {path}: {e}") from e
    logger.debug(f"Read {path}: {data.shape[1]} channels, {data.shape[0]} samples at {sample_rate} Hz")
    return np.ascontiguousarray(data.T), int(sample_rate)


def write_wav(path, signal, sample_rate: int, subtype: str = Config.WAV_SUBTYPE) -> Path:
    """Write a [C x S] (or mono [S]) signal as 32-bit float or 16-bit PCM."""
    subtype = subtype.upper()
    if subtype not in SUBTYPES:
        raise InvalidArgumentError(f"WAV subtype must be one of {SUBTYPES}, got '{subtype}'")
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim == 1:
        x = x[np.newaxis, :]
    if x.ndim != 2:
        raise ShapeMismatchError(f"signal must be [S] or [C x S], got shape {x.shape}")

    if subtype == 'PCM_16':
        peak = float(np.max(np.abs(x))) if x.size else 0.0
        if peak > 1.0:
            logger.warning(f"Clipping {path}: peak {peak:.3f} exceeds 16-bit PCM full scale")
            x = np.clip(x, -1.0, 1.0)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sf.write(str(path), x.T, int(sample_rate), subtype=subtype, format='WAV')
    return path
