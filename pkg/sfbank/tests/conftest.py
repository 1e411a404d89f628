import numpy as np
import pytest
import soundfile as sf

from sfbank.beamdesign import supercardioid_preset
from sfbank.geometry import make_uca
from sfbank.stft import StftConfig


@pytest.fixture
def cfg():
    return StftConfig()


@pytest.fixture
def uca5():
    """Training array: 5 mics on a 0.5 cm radius."""
    return make_uca(5, 0.005)


@pytest.fixture
def supercardioid():
    return supercardioid_preset()


@pytest.fixture
def write_wav_file(tmp_path):
    """Write a [C x S] float array as a 32-bit float WAV under tmp_path."""
    def _write(name, signal, sample_rate=16000):
        path = tmp_path / name
        data = np.atleast_2d(np.asarray(signal, dtype=np.float64))
        sf.write(str(path), data.T, sample_rate, subtype='FLOAT')
        return path
    return _write
