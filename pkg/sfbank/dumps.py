"""
SFBF binary dumps of feature tensors and filter banks.

Layout (all little-endian):

    bytes 0-3    magic b"SFBF"
    byte  4      format version (1)
    byte  5      payload kind: 0 = features [2I, T, F], Re/Im interleaved per filter
                               1 = filter weights [I, F, M, 2], trailing axis Re/Im
    byte  6      number of dimensions D
    bytes 7-15   zero
    4*D bytes    dims as u32
    payload      f32 values in C order
"""
import logging
import struct
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict

from sfbank.config import Config
from sfbank.errors import InvalidArgumentError
from sfbank.spatialbank import FeatureTensor, FilterBank

logger = logging.getLogger(__name__)

MAGIC = b'SFBF'
FORMAT_VERSION = 1
KIND_FEATURES = 0
KIND_FILTERS = 1

_HEADER = struct.Struct('<4sBBB9x')


class SfbfHeader(BaseModel):
    model_config = ConfigDict(frozen=True)

    version: int
    kind: int
    dims: tuple[int, ...]


def write_sfbf(path, kind: int, payload: np.ndarray) -> Path:
    """Write ``payload`` as f32 under an SFBF header. Returns the path written."""
    payload = np.ascontiguousarray(payload, dtype='<f4')
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(_HEADER.pack(MAGIC, FORMAT_VERSION, kind, payload.ndim))
        f.write(struct.pack(f'<{payload.ndim}I', *payload.shape))
        f.write(payload.tobytes(order='C'))
    logger.info(f"Wrote {path} (kind {kind}, dims {list(payload.shape)})")
    return path


def read_sfbf(path) -> tuple[SfbfHeader, np.ndarray]:
    """Parse an SFBF file into its header and a float32 array of the recorded dims."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise InvalidArgumentError(f"{path} is too short to hold an SFBF header")
    magic, version, kind, ndim = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise InvalidArgumentError(f"{path} is not an SFBF file (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise InvalidArgumentError(f"{path} has SFBF version {version}, expected {FORMAT_VERSION}")

    offset = _HEADER.size
    dims = struct.unpack_from(f'<{ndim}I', raw, offset)
    offset += 4 * ndim
    count = int(np.prod(dims, dtype=np.int64))
    if len(raw) - offset != 4 * count:
        raise InvalidArgumentError(
            f"{path} payload holds {len(raw) - offset} bytes, dims {list(dims)} need {4 * count}"
        )
    payload = np.frombuffer(raw, dtype='<f4', count=count, offset=offset).reshape(dims)
    return SfbfHeader(version=version, kind=kind, dims=tuple(dims)), payload


def write_features(path, features: FeatureTensor) -> Path:
    return write_sfbf(path, KIND_FEATURES, features.data)


def read_features(path, exponent: float = Config.COMPRESSION_EXPONENT) -> FeatureTensor:
    header, payload = read_sfbf(path)
    if header.kind != KIND_FEATURES:
        raise InvalidArgumentError(f"{path} holds payload kind {header.kind}, not features")
    return FeatureTensor(data=payload.astype(np.float64), compression_exponent=exponent)


def write_filterbank(path, bank: FilterBank) -> Path:
    """Dump bank weights as [I, F, M, 2]."""
    weights = np.stack([bank.weights.real, bank.weights.imag], axis=-1)
    return write_sfbf(path, KIND_FILTERS, weights)


def export_feature_csv(features: FeatureTensor, directory) -> list[Path]:
    """One ``channel_XX.csv`` per feature channel, T rows by F columns."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for ch, plane in enumerate(features.data):
        path = directory / f"channel_{ch:02d}.csv"
        np.savetxt(path, plane, fmt='%.9g', delimiter=',')
        paths.append(path)
    logger.info(f"Exported {len(paths)} feature channels to {directory}")
    return paths
