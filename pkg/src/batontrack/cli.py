"""Command-line interface.

Subcommands: calibrate, generate, import, average, compare, classify,
replay, serve. Exit codes: 0 success, 2 validation error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import Settings, load_settings
from .errors import RuntimeFailure, ValidationError
from .estimators import MovementClassifier
from .live import calibrate_control, replay_session, run_session
from .messages import message_to_json
from .pipeline import (
    MovementClass,
    average_bars,
    export_capture_csv,
    extract_bars,
    import_capture_csv,
    load_average,
    load_references,
    save_average,
)
from .registration import compare_to_reference
from .session import load_control, load_session, save_control, save_session
from .sources import open_source, parse_source_descriptor
from .synthetic import PerturbationSpec, generate_synthetic


def _settings_from_args(args) -> Settings:
    if getattr(args, "config", None):
        settings = load_settings(args.config)
    else:
        settings = Settings()
    for attr in ("tempo", "beats", "n_points", "rate"):
        value = getattr(args, attr, None)
        if value is not None:
            field = {"tempo": "tempo_bpm", "beats": "beats_per_bar",
                     "n_points": "n_points", "rate": "rate_hz"}[attr]
            setattr(settings, field, value)
    return Settings(**vars(settings))  # re-validate combined values


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value settings file")
    parser.add_argument("--tempo", type=float, help="tempo in bpm")
    parser.add_argument("--beats", type=int, help="beats per bar")
    parser.add_argument("--n-points", dest="n_points", type=int,
                        help="points per resampled bar")


def _cmd_calibrate(args) -> int:
    settings = _settings_from_args(args)
    desc = parse_source_descriptor(args.source, args.palm, rate_hz=settings.rate_hz)
    source = open_source(desc, baton_length_m=settings.baton_length_m,
                         tempo_bpm=settings.tempo_bpm,
                         beats_per_bar=settings.beats_per_bar)
    if desc.kind == "mock":
        # a mock conducting stream is moving; calibrate from a static frame
        from .geometry import Quaternion
        from .synthetic import static_imu_stream

        samples = static_imu_stream(Quaternion.identity(), duration_s=5.0,
                                    rate_hz=settings.rate_hz)
    else:
        samples = list(source.imu_stream())
    control = calibrate_control(samples)
    save_control(control, args.out)
    print(f"calibrated from {control.sample_count} readings -> {args.out}")
    return 0


def _cmd_generate(args) -> int:
    settings = _settings_from_args(args)
    spec = PerturbationSpec(
        movement=MovementClass.coerce(args.movement),
        amplitude_m=args.amplitude,
        frequency_hz=args.frequency,
        seed=args.seed,
        noise_sigma_m=args.noise,
    )
    seq = generate_synthetic(spec, bars=args.bars, tempo_bpm=settings.tempo_bpm,
                             beats_per_bar=settings.beats_per_bar,
                             rate_hz=args.rate if args.rate is not None else 120.0)
    export_capture_csv(seq, args.out)
    print(f"wrote {len(seq)} frames of {spec.movement.value} -> {args.out}")
    return 0


def _cmd_import(args) -> int:
    settings = _settings_from_args(args)
    seq = import_capture_csv(args.file, tempo_bpm=settings.tempo_bpm,
                             beats_per_bar=settings.beats_per_bar)
    bars = extract_bars(seq, n_points=settings.n_points)
    duration = float(seq.times[-1] - seq.times[0]) if len(seq) else 0.0
    print(json.dumps({
        "frames": len(seq),
        "duration_s": duration,
        "complete_bars": len(bars),
        "n_points": settings.n_points,
    }))
    return 0


def _cmd_average(args) -> int:
    settings = _settings_from_args(args)
    label = MovementClass.coerce(args.label)
    bars = []
    for path in args.inputs:
        seq = import_capture_csv(path, tempo_bpm=settings.tempo_bpm,
                                 beats_per_bar=settings.beats_per_bar, label=label)
        bars.extend(extract_bars(seq, n_points=settings.n_points))
    avg = average_bars(bars, label)
    save_average(avg, args.out)
    print(f"averaged {avg.sample_bars} bars of {label.value} -> {args.out}")
    return 0


def _bar_from_file(args, settings: Settings):
    seq = import_capture_csv(args.bar, tempo_bpm=settings.tempo_bpm,
                             beats_per_bar=settings.beats_per_bar)
    bars = extract_bars(seq, n_points=settings.n_points)
    index = getattr(args, "bar_index", 0) or 0
    if index >= len(bars):
        raise ValidationError(f"bar index {index} out of range; file has {len(bars)} bars")
    return bars[index]


def _cmd_compare(args) -> int:
    settings = _settings_from_args(args)
    ref = load_average(args.ref)
    bar = _bar_from_file(args, settings)
    transform, profile, shift = compare_to_reference(bar, ref)
    print(json.dumps({
        "reference": ref.label.value,
        "mean_m": profile.mean_m,
        "max_m": profile.max_m,
        "per_beat_m": [float(v) for v in profile.per_beat_mean_m],
        "shift_used": shift,
    }))
    return 0


def _cmd_classify(args) -> int:
    settings = _settings_from_args(args)
    references = load_references(args.refs)
    classifier = MovementClassifier.from_references(references)
    bar = _bar_from_file(args, settings)
    result = classifier.classify(bar)
    print(json.dumps(result.to_dict(bar_id=args.bar)))
    return 0


def _cmd_replay(args) -> int:
    record = load_session(args.session)
    references = load_references(args.refs) if args.refs else None
    replayed, messages = replay_session(record, references=references)
    if args.out:
        save_session(replayed, args.out)
    if args.emit:
        for msg in messages:
            print(message_to_json(msg))
    else:
        poses = sum(1 for m in messages if m.to_dict()["type"] == "pose")
        print(f"replayed {poses} poses, {len(replayed.classifications)} bar verdicts")
    return 0


def _cmd_record(args) -> int:
    settings = _settings_from_args(args)
    desc = parse_source_descriptor(args.source, args.palm, rate_hz=settings.rate_hz)
    source = open_source(desc, baton_length_m=settings.baton_length_m,
                         tempo_bpm=settings.tempo_bpm,
                         beats_per_bar=settings.beats_per_bar)
    control = load_control(args.control)
    references = load_references(args.refs) if args.refs else None
    record, messages = run_session(source, control, settings=settings,
                                   references=references)
    save_session(record, args.out)
    print(f"recorded {len(record.imu)} samples, "
          f"{len(record.classifications)} bar verdicts -> {args.out}")
    return 0


def _cmd_serve(args) -> int:
    from .service import serve_stream

    settings = _settings_from_args(args)
    source = None
    if args.source:
        desc = parse_source_descriptor(args.source, args.palm, rate_hz=settings.rate_hz)
        source = open_source(desc, baton_length_m=settings.baton_length_m,
                             tempo_bpm=settings.tempo_bpm,
                             beats_per_bar=settings.beats_per_bar)
    control = load_control(args.control)
    references = load_references(args.refs) if args.refs else None
    server = serve_stream(port=args.port, source=source, control=control,
                          settings=settings, references=references, paced=args.paced)
    print(f"serving on ws://127.0.0.1:{server.bound_port} "
          f"(control endpoint :{server.bound_control_port}; ctrl-c to stop)")
    try:
        while True:
            if server.wait_producer(timeout=0.5) and args.once:
                break
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="batontrack",
        description="Baton trajectory analysis and practice feedback",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="record a static capture into a control frame")
    p.add_argument("--source", required=True, help="mock | replay:PATH | serial:PORT[:BAUD]")
    p.add_argument("--palm", default=None, help="mock | replay:PATH")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("generate", help="synthesize a labeled capture CSV")
    p.add_argument("--class", dest="movement", required=True,
                   choices=[m.value for m in MovementClass])
    p.add_argument("--bars", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--amplitude", type=float, default=None)
    p.add_argument("--frequency", type=float, default=None)
    p.add_argument("--noise", type=float, default=0.003)
    p.add_argument("--rate", type=float, default=None, help="frames per second")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("import", help="validate a capture CSV and summarize it")
    p.add_argument("file")
    _add_common(p)
    p.set_defaults(func=_cmd_import)

    p = sub.add_parser("average", help="average captured bars into a reference")
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--label", required=True, choices=[m.value for m in MovementClass])
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_average)

    p = sub.add_parser("compare", help="register a bar against one reference")
    p.add_argument("--bar", required=True)
    p.add_argument("--bar-index", type=int, default=0)
    p.add_argument("--ref", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("classify", help="rank a bar against all references")
    p.add_argument("--bar", required=True)
    p.add_argument("--bar-index", type=int, default=0)
    p.add_argument("--refs", required=True, help="directory of average JSON files")
    _add_common(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("record", help="run a source through the live loop into a session file")
    p.add_argument("--source", required=True)
    p.add_argument("--palm", default=None)
    p.add_argument("--control", required=True)
    p.add_argument("--refs", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--rate", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_record)

    p = sub.add_parser("replay", help="re-run a recorded session deterministically")
    p.add_argument("session")
    p.add_argument("--refs", default=None)
    p.add_argument("--out", default=None, help="write the replayed session here")
    p.add_argument("--emit", action="store_true", help="print every stream message")
    _add_common(p)
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("serve", help="broadcast the live loop over WebSocket")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--source", default=None)
    p.add_argument("--palm", default=None)
    p.add_argument("--control", required=True)
    p.add_argument("--refs", default=None)
    p.add_argument("--paced", action="store_true", help="pace messages at the source rate")
    p.add_argument("--once", action="store_true", help="exit when the source is exhausted")
    p.add_argument("--rate", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
