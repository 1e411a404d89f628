"""
Command-line entry point.

    sfbank design            filter bank weights -> <stem>.sfbf
    sfbank beampattern       realized beampatterns per geometry -> CSV/JSON + invariance report
    sfbank simulate          scene -> multichannel WAV + sidecar JSON
    sfbank extract IN.wav    WAV -> feature tensor(s) in SFBF
    sfbank check-invariance  scene rendered on several arrays -> pass/fail verdict

Every command takes ``--config run.json``; individual flags override the file.
The merged configuration is validated in one pass before anything is computed
or written. JSON results go to stdout, logs to stderr. Exit codes: 0 success,
1 failed invariance verdict, 2 invalid input, 3 numeric or runtime failure.
"""
import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

from dotenv import load_dotenv
from pydantic import ValidationError

from sfbank import __version__, configure_logging
from sfbank.analysis import (
    azimuth_grid,
    beampattern_filename,
    check_feature_invariance,
    export_beampattern,
    invariance_report,
    realized_beampattern,
)
from sfbank.beamdesign import design_filter, resolve_pattern
from sfbank.config import Config, get_config
from sfbank.dumps import FORMAT_VERSION, export_feature_csv, write_features, write_filterbank
from sfbank.errors import (
    InvalidArgumentError,
    SfbankError,
    ShapeMismatchError,
    ValidationFailure,
)
from sfbank.geometry import make_uca
from sfbank.models import (
    ImageParams,
    InterfererParams,
    RunConfig,
    SceneParams,
    SimulationMetadata,
)
from sfbank.scenesim import Scene, random_scene, simulate_scene
from sfbank.spatialbank import (
    build_filterbank,
    features_from_spectrogram,
    segment_signal,
    select_microphones,
    selected_channel_features,
)
from sfbank.stft import StftConfig, check_cola, istft, stft
from sfbank.wavio import read_wav, write_wav

logger = logging.getLogger(__name__)


# ── Argument parsing ────────────────────────────────────────────────────────────

def parse_geometry_list(text: str) -> list[dict]:
    """``"5:0.005,9:0.015"`` -> [{"num_mics": 5, "radius_m": 0.005}, ...]."""
    geoms = []
    for item in text.split(','):
        item = item.strip()
        if not item:
            continue
        try:
            mics, radius = item.split(':')
            geoms.append({'num_mics': int(mics), 'radius_m': float(radius)})
        except ValueError as e:
            raise InvalidArgumentError(f"geometry '{item}' is not of the form M:radius_m") from e
    if not geoms:
        raise InvalidArgumentError(f"no geometries in '{text}'")
    return geoms


def _common_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="Run configuration JSON")
    p.add_argument("--env", choices=["dev", "testing", "production"], help="Overrides SFBANK_ENV")
    p.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    p.add_argument("--num-mics", type=int, help="Microphones M")
    p.add_argument("--radius-m", type=float, help="Array radius in meters")
    p.add_argument("--sound-speed", type=float, help="Speed of sound in m/s")
    p.add_argument("--pattern", help="Pattern preset name")
    p.add_argument("--num-filters", type=int, help="Steered filters I")
    p.add_argument("--exponent", type=float, help="Compression exponent c")
    p.add_argument("--no-regularize", dest="regularize", action="store_const", const=False,
                   help="Fail instead of clamping near-zero Bessel denominators")
    p.add_argument("--output-dir", help="Directory for written files")
    p.add_argument("--stem", help="Base name of written files")
    return p


def _scene_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scene", help="Scene JSON (source_wav, images, noise, interferer)")
    p.add_argument("--source", help="Mono source WAV, overrides the scene's source_wav")
    p.add_argument("--random-scene", type=int, metavar="SEED", help="Draw the scene from SEED")
    p.add_argument("--snr-db", type=float, help="Sensor-noise SNR in dB")
    p.add_argument("--seed", type=int, help="Sensor-noise seed")


def build_cli_parser() -> argparse.ArgumentParser:
    common = _common_options()
    p = argparse.ArgumentParser(
        prog="sfbank",
        description="Geometry-invariant spatial filter banks for uniform circular arrays",
    )
    p.add_argument("--version", action="version",
                   version=f"sfbank {__version__} (SFBF format version {FORMAT_VERSION})")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("design", parents=[common], help="Design the filter bank and dump its weights")

    bp = sub.add_parser("beampattern", parents=[common], help="Export realized beampatterns")
    bp.add_argument("--freq", type=float, help="Analysis frequency in Hz")
    bp.add_argument("--steer", type=float, help="Steering azimuth in degrees")
    bp.add_argument("--geoms", help="Geometries as M:radius_m, comma separated")
    bp.add_argument("--grid-size", type=int, help="Azimuth grid points")
    bp.add_argument("--format", dest="fmt", choices=["csv", "json"], help="Export format")
    bp.add_argument("--magnitude-only", action="store_const", const=True,
                    help="Compare magnitudes instead of complex responses")

    sp = sub.add_parser("simulate", parents=[common], help="Render a scene to a multichannel WAV")
    _scene_options(sp)
    sp.add_argument("--wav-subtype", choices=["FLOAT", "PCM_16"], help="WAV sample encoding")

    ep = sub.add_parser("extract", parents=[common], help="Extract features from a multichannel WAV")
    ep.add_argument("input", help="Multichannel WAV with M channels")
    ep.add_argument("--mode", choices=["bank", "select"], default="bank",
                    help="Filter-bank features or raw channels of the selected microphones")
    ep.add_argument("--reference", default=f"{Config.REFERENCE_NUM_MICS}:{Config.REFERENCE_RADIUS_M}",
                    help="Reference array M:radius_m for --mode select")
    ep.add_argument("--segment-s", type=float, help="Cut the input into segments of this length")
    ep.add_argument("--csv-dir", help="Also export every feature channel as CSV here")

    cp = sub.add_parser("check-invariance", parents=[common],
                        help="Compare features of one scene across geometries")
    _scene_options(cp)
    cp.add_argument("--geoms", help="Geometries as M:radius_m, comma separated")
    cp.add_argument("--patterns", help="One pattern preset per geometry, comma separated")
    cp.add_argument("--tolerance", type=float, help="Relative L2 bound")
    return p


# ── Configuration ───────────────────────────────────────────────────────────────

def _set(raw: dict, keys: tuple[str, ...], value) -> None:
    if value is None:
        return
    node = raw
    for key in keys[:-1]:
        node = node.setdefault(key, {})
    node[keys[-1]] = value


def _load_json(path) -> dict:
    with open(path) as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise InvalidArgumentError(f"{path} must hold a JSON object")
    return data


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """Config file, then environment, then flags; validated once at the end."""
    raw = _load_json(args.config) if args.config else {}

    outputs = raw.setdefault('outputs', {})
    for key, env in (('directory', 'SFBANK_OUTPUT_DIR'), ('wav_subtype', 'SFBANK_WAV_SUBTYPE')):
        if key not in outputs and os.environ.get(env):
            outputs[key] = os.environ[env]
    if 'tolerance' not in raw.get('invariance', {}) and os.environ.get('SFBANK_FEATURE_TOLERANCE'):
        _set(raw, ('invariance', 'tolerance'), float(os.environ['SFBANK_FEATURE_TOLERANCE']))

    _set(raw, ('array', 'num_mics'), args.num_mics)
    _set(raw, ('array', 'radius_m'), args.radius_m)
    _set(raw, ('array', 'sound_speed'), args.sound_speed)
    _set(raw, ('bank', 'pattern'), args.pattern)
    _set(raw, ('bank', 'num_filters'), args.num_filters)
    _set(raw, ('bank', 'compression_exponent'), args.exponent)
    _set(raw, ('bank', 'regularize'), args.regularize)
    _set(raw, ('outputs', 'directory'), args.output_dir)
    _set(raw, ('outputs', 'stem'), args.stem)
    _set(raw, ('outputs', 'wav_subtype'), getattr(args, 'wav_subtype', None))

    if args.command == 'beampattern':
        _set(raw, ('analysis', 'freq_hz'), args.freq)
        _set(raw, ('analysis', 'steer_deg'), args.steer)
        _set(raw, ('analysis', 'grid_size'), args.grid_size)
        _set(raw, ('analysis', 'format'), args.fmt)
        _set(raw, ('analysis', 'magnitude_only'), args.magnitude_only)
        if args.geoms:
            _set(raw, ('analysis', 'geoms'), parse_geometry_list(args.geoms))

    if args.command in ('simulate', 'check-invariance'):
        if args.scene:
            raw['scene'] = _load_json(args.scene)
        _set(raw, ('scene', 'source_wav'), args.source)
        _set(raw, ('scene', 'random_seed'), args.random_scene)
        _set(raw, ('scene', 'noise', 'snr_db'), args.snr_db)
        _set(raw, ('scene', 'noise', 'seed'), args.seed)
        if 'scene' not in raw:
            raise InvalidArgumentError(f"{args.command} needs a scene: pass --scene, --config or --source")

    if args.command == 'check-invariance':
        if args.geoms:
            _set(raw, ('invariance', 'geoms'), parse_geometry_list(args.geoms))
        if args.patterns:
            _set(raw, ('invariance', 'patterns'), [p.strip() for p in args.patterns.split(',')])
        _set(raw, ('invariance', 'tolerance'), args.tolerance)

    return RunConfig.model_validate(raw)


def _output_path(config: RunConfig, default_stem: str, suffix: str) -> Path:
    stem = config.outputs.stem or default_stem
    return Path(config.outputs.directory) / f"{stem}{suffix}"


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2))


def _configured_scene_fields(params: SceneParams) -> dict:
    """Noise and interferer settings given explicitly; they win over a random draw."""
    fields = {}
    if 'noise' in params.model_fields_set:
        noise = params.noise
        for name, key in (('kind', 'noise_kind'), ('snr_db', 'snr_db'), ('seed', 'seed')):
            if name in noise.model_fields_set:
                fields[key] = getattr(noise, name)
    if params.interferer is not None:
        fields['interferer'] = params.interferer.to_interferer()
    return fields


def _load_scene(params: SceneParams, cfg: StftConfig) -> tuple[Scene, int]:
    """Read the source WAV and build the scene. Returns (scene, source length)."""
    source, sample_rate = read_wav(params.source_wav)
    if source.shape[0] != 1:
        raise ShapeMismatchError(f"source_wav must be mono, got {source.shape[0]} channels")
    if sample_rate != cfg.sample_rate:
        raise InvalidArgumentError(
            f"source_wav is sampled at {sample_rate} Hz, configuration expects {cfg.sample_rate} Hz"
        )
    if params.random_seed is not None:
        if params.images:
            logger.warning("random_seed given; ignoring the explicit image list")
        scene = random_scene(source[0], sample_rate, params.random_seed)
        overrides = _configured_scene_fields(params)
        if overrides:
            logger.info(f"random scene {params.random_seed}: keeping configured {sorted(overrides)}")
            scene = Scene.model_validate({**dict(scene), **overrides})
    else:
        scene = params.to_scene(source[0], sample_rate)
    return scene, source.shape[1]


# ── Commands ────────────────────────────────────────────────────────────────────

def cmd_design(config: RunConfig, args: argparse.Namespace) -> int:
    geom = config.array.to_geometry()
    bank = build_filterbank(
        geom,
        config.bank.ideal_pattern,
        config.bank.num_filters,
        config.stft.to_config(),
        regularize=config.bank.regularize,
    )
    path = write_filterbank(_output_path(config, 'filters', '.sfbf'), bank)
    _emit({
        'command': 'design',
        'path': str(path),
        'dims': [bank.num_filters, bank.config.num_bins, geom.num_mics, 2],
    })
    return 0


def cmd_beampattern(config: RunConfig, args: argparse.Namespace) -> int:
    analysis = config.analysis
    pattern = config.bank.ideal_pattern
    geoms = [g.to_geometry() for g in (analysis.geoms or [config.array])]
    steer = math.radians(analysis.steer_deg)
    grid = azimuth_grid(analysis.grid_size)

    notes = []
    patterns = []
    for geom in geoms:
        filt = design_filter(geom, pattern, steer, analysis.freq_hz, regularize=config.bank.regularize)
        if filt.dc_fallback:
            notes.append(f"{geom}: f = 0 Hz, uniform averaging filter (1/M) used")
        if filt.regularized_orders:
            notes.append(f"{geom}: regularized Bessel denominators for n={list(filt.regularized_orders)}")
        patterns.append(realized_beampattern(filt, geom, analysis.freq_hz, grid))

    report = None
    if len(geoms) >= 2:
        report = invariance_report(
            geoms, pattern, steer, analysis.freq_hz, analysis.grid_size,
            regularize=config.bank.regularize, magnitude_only=analysis.magnitude_only,
        )

    directory = Path(config.outputs.directory)
    files = [
        str(export_beampattern(
            samples, directory / beampattern_filename(geom, analysis.freq_hz, analysis.format),
            analysis.format,
        ))
        for geom, samples in zip(geoms, patterns)
    ]
    _emit({
        'command': 'beampattern',
        'files': files,
        'notes': notes,
        'report': report.model_dump(mode='json') if report else None,
    })
    return 0


def cmd_simulate(config: RunConfig, args: argparse.Namespace) -> int:
    cfg = config.stft.to_config()
    check_cola(cfg)
    geom = config.array.to_geometry()
    scene, length = _load_scene(config.scene, cfg)
    mix = simulate_scene(scene, geom, cfg)
    signal = istft(mix.mixture, length=length)

    wav_path = _output_path(config, 'scene', '.wav')
    metadata = SimulationMetadata(
        wav=str(wav_path),
        seed=scene.seed,
        sample_rate=cfg.sample_rate,
        num_samples=signal.shape[1],
        array=config.array,
        noise_kind=scene.noise_kind,
        requested_snr_db=mix.requested_snr_db,
        realized_snr_db=mix.realized_snr_db,
        images=[ImageParams.from_image(image) for image in scene.images],
        interferer=InterfererParams.from_interferer(scene.interferer) if scene.interferer else None,
        random_seed=config.scene.random_seed,
    )
    write_wav(wav_path, signal, cfg.sample_rate, subtype=config.outputs.wav_subtype)
    meta_path = wav_path.with_suffix('.json')
    meta_path.write_text(metadata.model_dump_json(indent=2))
    logger.info(f"Wrote {wav_path} and {meta_path}")
    _emit(metadata.model_dump(mode='json'))
    return 0


def cmd_extract(config: RunConfig, args: argparse.Namespace) -> int:
    if not Path(args.input).is_file():
        raise FileNotFoundError(f"input WAV not found: '{args.input}'")
    cfg = config.stft.to_config()
    geom = config.array.to_geometry()
    exponent = config.bank.compression_exponent

    signal, sample_rate = read_wav(args.input)
    if signal.shape[0] != geom.num_mics:
        raise ShapeMismatchError(f"{args.input} has {signal.shape[0]} channels, the array has M={geom.num_mics}")
    if sample_rate != cfg.sample_rate:
        raise InvalidArgumentError(
            f"{args.input} is sampled at {sample_rate} Hz, configuration expects {cfg.sample_rate} Hz"
        )
    pieces = segment_signal(signal, cfg, args.segment_s) if args.segment_s else [signal]

    if args.mode == 'select':
        reference = parse_geometry_list(args.reference)[0]
        indices = select_microphones(geom, make_uca(reference['num_mics'], reference['radius_m'], geom.sound_speed))
        logger.info(f"Selected microphones {indices.tolist()} for reference {reference}")
        features = [selected_channel_features(stft(x, cfg), indices, exponent) for x in pieces]
    else:
        bank = build_filterbank(
            geom, config.bank.ideal_pattern, config.bank.num_filters, cfg,
            regularize=config.bank.regularize,
        )
        features = [features_from_spectrogram(stft(x, cfg), bank, exponent) for x in pieces]

    stem = config.outputs.stem or Path(args.input).stem
    directory = Path(config.outputs.directory)
    names = [stem] if len(features) == 1 and not args.segment_s else [f"{stem}_{k:03d}" for k in range(len(features))]
    files = []
    for name, tensor in zip(names, features):
        files.append(str(write_features(directory / f"{name}.sfbf", tensor)))
        if args.csv_dir:
            csv_dir = Path(args.csv_dir) if len(features) == 1 else Path(args.csv_dir) / name
            export_feature_csv(tensor, csv_dir)
    _emit({
        'command': 'extract',
        'mode': args.mode,
        'files': files,
        'dims': [list(t.data.shape) for t in features],
    })
    return 0


def cmd_check_invariance(config: RunConfig, args: argparse.Namespace) -> int:
    cfg = config.stft.to_config()
    scene, _ = _load_scene(config.scene, cfg)
    geoms = [g.to_geometry() for g in config.invariance.geoms]
    if config.invariance.patterns is not None:
        patterns = [resolve_pattern(p) for p in config.invariance.patterns]
    else:
        patterns = [config.bank.ideal_pattern]
    verdict = check_feature_invariance(
        scene,
        geoms,
        patterns,
        config.bank.num_filters,
        cfg,
        config.bank.compression_exponent,
        config.invariance.tolerance,
        regularize=config.bank.regularize,
        freq_hz=config.analysis.freq_hz,
    )
    _emit(verdict.model_dump(mode='json'))
    if not verdict.passed:
        logger.error(verdict.message)
        return 1
    return 0


COMMANDS = {
    'design': cmd_design,
    'beampattern': cmd_beampattern,
    'simulate': cmd_simulate,
    'extract': cmd_extract,
    'check-invariance': cmd_check_invariance,
}


def main(argv: list[str] | None = None) -> int:
    load_dotenv('.env.local')
    args = build_cli_parser().parse_args(argv)

    app_config = get_config(args.env or os.environ.get('SFBANK_ENV', 'dev'))
    level = 'DEBUG' if args.verbose else os.environ.get('SFBANK_LOG_LEVEL', app_config.LOG_LEVEL)
    configure_logging(level)

    try:
        config = load_run_config(args)
        return COMMANDS[args.command](config, args)
    except (ValidationFailure, ValidationError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SfbankError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == '__main__':
    sys.exit(main())
