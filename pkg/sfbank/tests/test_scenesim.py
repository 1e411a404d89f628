"""Tests for sfbank/scenesim.py: image-source synthesis, noise mixing, random scenes."""
import math

import numpy as np
import pytest
from pydantic import ValidationError

from sfbank.errors import InvalidArgumentError, ZeroEnergyError
from sfbank.geometry import circular_distance, make_uca, steering_spectrum
from sfbank.scenesim import (
    MIN_SEPARATION,
    ImageSource,
    Interferer,
    NoiseKind,
    Scene,
    channel_energies,
    measure_snr_db,
    mix_at_snr,
    random_scene,
    render_to_wav,
    simulate_scene,
    synthesize_desired,
    synthesize_interference,
    white_noise,
)
from sfbank.stft import StftConfig, stft
from sfbank.wavio import read_wav


@pytest.fixture
def small_cfg():
    return StftConfig(win_len=64, hop=16, fft_size=64)


@pytest.fixture
def source():
    return np.random.default_rng(11).standard_normal(1200)


def direct_only(source, azimuth=0.7, **kwargs):
    return Scene(source=source, images=[ImageSource(gain=1.0, delay=0.0, azimuth=azimuth)], **kwargs)


# ── Desired signal ──────────────────────────────────────────────────────────────

class TestSynthesizeDesired:
    def test_direct_path_is_steered_source(self, uca5, small_cfg, source):
        """One path with no delay: channel m is the source spectrum times zeta_m(omega, theta)."""
        x = synthesize_desired(direct_only(source), uca5, small_cfg)
        s = stft(source, small_cfg).data[0]
        d = steering_spectrum(uca5, small_cfg.bin_frequencies, 0.7)
        assert x.data.shape == (5,) + s.shape
        np.testing.assert_allclose(x.data, d[:, np.newaxis, :] * s[np.newaxis], atol=1e-12)

    def test_delay_and_gain(self, uca5, small_cfg, source):
        delayed = Scene(source=source, images=[ImageSource(gain=-0.5, delay=0.002, azimuth=0.7)])
        x = synthesize_desired(delayed, uca5, small_cfg).data
        ref = synthesize_desired(direct_only(source), uca5, small_cfg).data
        omega = 2 * np.pi * small_cfg.bin_frequencies
        np.testing.assert_allclose(x, -0.5 * np.exp(-1j * omega * 0.002) * ref, atol=1e-12)

    def test_paths_superpose(self, uca5, small_cfg, source):
        a = ImageSource(gain=1.0, delay=0.0, azimuth=0.3)
        b = ImageSource(gain=0.4, delay=0.005, azimuth=2.9)
        both = synthesize_desired(Scene(source=source, images=[a, b]), uca5, small_cfg).data
        only_a = synthesize_desired(Scene(source=source, images=[a]), uca5, small_cfg).data
        only_b = synthesize_desired(Scene(source=source, images=[b]), uca5, small_cfg).data
        np.testing.assert_allclose(both, only_a + only_b, atol=1e-12)

    def test_rotating_every_path_by_one_sensor_rolls_channels(self, uca5, small_cfg, source):
        step = 2 * np.pi / 5
        images = [ImageSource(gain=1.0, delay=0.0, azimuth=0.2), ImageSource(gain=0.3, delay=0.004, azimuth=4.0)]
        rotated = [img.model_copy(update={"azimuth": img.azimuth + step}) for img in images]
        x = synthesize_desired(Scene(source=source, images=images), uca5, small_cfg).data
        x_rot = synthesize_desired(Scene(source=source, images=rotated), uca5, small_cfg).data
        np.testing.assert_allclose(x_rot, np.roll(x, 1, axis=0), atol=1e-10)

    def test_sample_rate_mismatch(self, uca5, small_cfg, source):
        with pytest.raises(InvalidArgumentError, match="8000 Hz"):
            synthesize_desired(direct_only(source, sample_rate=8000), uca5, small_cfg)


class TestSceneValidation:
    def test_needs_a_path(self, source):
        with pytest.raises(ValidationError):
            Scene(source=source, images=[])

    def test_source_must_be_mono(self):
        with pytest.raises(ValidationError, match="mono"):
            Scene(source=np.zeros((2, 100)), images=[ImageSource(gain=1.0, delay=0.0, azimuth=0.0)])

    def test_single_row_source_is_accepted(self):
        scene = direct_only(np.zeros((1, 100)))
        assert scene.source.shape == (100,)

    def test_delay_limit(self):
        with pytest.raises(ValidationError):
            ImageSource(gain=1.0, delay=1.5, azimuth=0.0)

    @pytest.mark.parametrize("snr", [-21.0, 61.0])
    def test_snr_limits(self, source, snr):
        with pytest.raises(ValidationError):
            direct_only(source, snr_db=snr)

    def test_interferer_too_close_to_target(self, source):
        """An interferer must sit at least 5 degrees from the direct path."""
        close = Interferer(azimuth=0.7 + math.radians(3.0), sir_db=0.0, seed=1)
        with pytest.raises(ValidationError, match="from the direct path"):
            direct_only(source, interferer=close)

    def test_interferer_separation_wraps_around(self, source):
        far = Interferer(azimuth=2 * np.pi - 0.2, sir_db=0.0, seed=1)
        with pytest.raises(ValidationError):
            direct_only(source, azimuth=0.0, interferer=Interferer(azimuth=2 * np.pi - 0.01, sir_db=0.0, seed=1))
        assert direct_only(source, azimuth=0.0, interferer=far).interferer == far


# ── Noise ───────────────────────────────────────────────────────────────────────

class TestNoise:
    @pytest.mark.parametrize("snr", [-5.0, 0.0, 5.0, 20.0])
    def test_realized_snr_matches_request(self, uca5, small_cfg, source, snr):
        """Noise is scaled per channel; the SNR recomputed from the stored parts matches."""
        desired = synthesize_desired(direct_only(source), uca5, small_cfg)
        noise = white_noise(desired, 3, snr)
        assert measure_snr_db(desired, noise) == pytest.approx(snr, abs=1e-9)
        per_channel = 10 * np.log10(channel_energies(desired) / channel_energies(noise))
        np.testing.assert_allclose(per_channel, snr, atol=1e-9)

    def test_high_snr_mixture_is_close_to_desired(self, uca5, small_cfg, source):
        desired = synthesize_desired(direct_only(source), uca5, small_cfg)
        mixed = mix_at_snr(desired, 5, 60.0)
        rel = np.linalg.norm(mixed.data - desired.data) / np.linalg.norm(desired.data)
        assert rel < 1.01e-3

    def test_deterministic_given_seed(self, uca5, small_cfg, source):
        """The same seed gives bit-identical noise."""
        desired = synthesize_desired(direct_only(source), uca5, small_cfg)
        np.testing.assert_array_equal(mix_at_snr(desired, 9, 5.0).data, mix_at_snr(desired, 9, 5.0).data)
        assert not np.array_equal(mix_at_snr(desired, 9, 5.0).data, mix_at_snr(desired, 10, 5.0).data)

    def test_zero_energy(self, uca5, small_cfg):
        desired = synthesize_desired(direct_only(np.zeros(800)), uca5, small_cfg)
        with pytest.raises(ZeroEnergyError):
            white_noise(desired, 0, 5.0)


# ── simulate_scene ──────────────────────────────────────────────────────────────

class TestSimulateScene:
    def test_noise_free_mixture_is_desired(self, uca5, small_cfg, source):
        result = simulate_scene(direct_only(source, noise_kind=NoiseKind.NONE), uca5, small_cfg)
        assert result.noise is None and result.interference is None
        assert result.realized_snr_db is None
        np.testing.assert_array_equal(result.mixture.data, result.desired.data)

    def test_components_add_up(self, uca5, small_cfg, source):
        interferer = Interferer(azimuth=3.5, sir_db=6.0, seed=21)
        scene = direct_only(source, snr_db=10.0, seed=4, interferer=interferer)
        result = simulate_scene(scene, uca5, small_cfg)
        total = result.desired.data + result.interference.data + result.noise.data
        np.testing.assert_allclose(result.mixture.data, total, atol=1e-12)
        assert result.requested_snr_db == 10.0
        assert result.realized_snr_db == pytest.approx(10.0, abs=1e-9)
        assert result.seed == 4

    def test_interferer_energy_follows_sir(self, uca5, small_cfg, source):
        interferer = Interferer(azimuth=3.5, sir_db=6.0, seed=21)
        result = simulate_scene(direct_only(source, interferer=interferer), uca5, small_cfg)
        sir = 10 * np.log10(channel_energies(result.desired).sum() / channel_energies(result.interference).sum())
        assert sir == pytest.approx(6.0, abs=1e-9)

    def test_interference_needs_desired_energy(self, uca5, small_cfg):
        with pytest.raises(ZeroEnergyError):
            synthesize_interference(Interferer(azimuth=1.0, sir_db=0.0, seed=1), uca5, small_cfg, 10, 0.0)

    def test_render_to_wav(self, uca5, small_cfg, source, tmp_path):
        result = simulate_scene(direct_only(source, noise_kind=NoiseKind.NONE), uca5, small_cfg)
        path = render_to_wav(result.mixture, tmp_path / "out" / "scene.wav", length=source.size)
        signal, sr = read_wav(path)
        assert sr == 16000
        assert signal.shape == (5, source.size)


# ── random_scene ────────────────────────────────────────────────────────────────

class TestRandomScene:
    def test_reproducible(self, source):
        a = random_scene(source, 16000, seed=42)
        b = random_scene(source, 16000, seed=42)
        assert a.images == b.images
        assert a.interferer == b.interferer
        assert (a.snr_db, a.seed) == (b.snr_db, b.seed)

    @pytest.mark.parametrize("seed", range(10))
    def test_drawn_values_stay_in_range(self, source, seed):
        scene = random_scene(source, 16000, seed=seed, num_images=4, snr_range_db=(0.0, 5.0))
        assert len(scene.images) == 4
        assert scene.images[0].gain == 1.0 and scene.images[0].delay == 0.0
        assert all(0.2 <= img.gain <= 0.7 and 0.001 <= img.delay <= 0.02 for img in scene.images[1:])
        assert 0.0 <= scene.snr_db <= 5.0
        gap = circular_distance(scene.interferer.azimuth, scene.images[0].azimuth)
        assert gap >= MIN_SEPARATION

    def test_without_interferer(self, source):
        assert random_scene(source, 16000, seed=1, with_interferer=False).interferer is None

    def test_rejects_bad_arguments(self, source):
        with pytest.raises(InvalidArgumentError):
            random_scene(source, 16000, seed=1, num_images=0)
        with pytest.raises(InvalidArgumentError, match="reversed"):
            random_scene(source, 16000, seed=1, snr_range_db=(10.0, -5.0))

    def test_simulates_on_any_array(self, source, small_cfg):
        scene = random_scene(source, 16000, seed=7)
        result = simulate_scene(scene, make_uca(9, 0.015), small_cfg)
        assert result.mixture.num_channels == 9
