import os


class Config:
    """Base configuration shared across all environments.

    Numeric defaults are the analysis settings of the filter-bank front-end
    (16 kHz, 25 ms Hamming window, 6.25 ms hop, nine supercardioid filters,
    compression exponent 0.3). They are fixed; only the operational knobs below
    read the environment.
    """
    LOG_LEVEL = os.environ.get('SFBANK_LOG_LEVEL', 'INFO')
    OUTPUT_DIR = os.environ.get('SFBANK_OUTPUT_DIR', '.')
    # 'FLOAT' (32-bit float) or 'PCM_16' for WAV files written by `simulate`.
    WAV_SUBTYPE = os.environ.get('SFBANK_WAV_SUBTYPE', 'FLOAT')
    # Relative L2 bound for `check-invariance`.
    FEATURE_TOLERANCE = float(os.environ.get('SFBANK_FEATURE_TOLERANCE', '0.1'))

    # Array
    NUM_MICS = 5
    RADIUS_M = 0.005
    SOUND_SPEED = 343.0

    # STFT
    SAMPLE_RATE = 16000
    WIN_LEN = 400
    HOP = 100
    FFT_SIZE = 400

    # Scenes
    DEFAULT_SNR_DB = 5.0

    # Filter bank
    PATTERN = 'supercardioid2'
    NUM_FILTERS = 9
    COMPRESSION_EXPONENT = 0.3
    REGULARIZE = True
    BESSEL_EPSILON = 1e-4

    # Beampattern analysis
    ANALYSIS_FREQ_HZ = 4000.0
    GRID_SIZE = 360
    DB_FLOOR = -80.0

    # Training array used by the microphone-selection baseline
    REFERENCE_NUM_MICS = 5
    REFERENCE_RADIUS_M = 0.005


class DevelopmentConfig(Config):
    """Development configuration: verbose logging."""
    LOG_LEVEL = os.environ.get('SFBANK_LOG_LEVEL', 'DEBUG')


class TestingConfig(Config):
    """Testing configuration: quiet logs, outputs under the test's tmp dir."""
    LOG_LEVEL = 'WARNING'


class ProductionConfig(Config):
    """Production configuration: batch feature extraction, minimal logging."""
    LOG_LEVEL = os.environ.get('SFBANK_LOG_LEVEL', 'WARNING')


def get_config(env_name=None):
    if env_name == "dev":
        return DevelopmentConfig()
    elif env_name == "testing":
        return TestingConfig()
    elif env_name == "production":
        return ProductionConfig()
    else:
        return DevelopmentConfig()
