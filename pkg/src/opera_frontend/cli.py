"""Command-line client for the score-to-performance front end.

Thin wrappers over the library: every stage reads and writes plain files
(JSON/CSV/SVG) so a pipeline can be replayed and diffed.  Flags resolve
against an optional TOML config (flag > config > default); the config file
comes from OPERA_FRONTEND_CONFIG or, for `evaluate`, from --config.

Exit codes: 0 success, 2 usage or input error, 3 internal failure.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import traceback
from typing import IO

import tomli

from . import evaluate as evaluate_mod
from . import score_io
from .duration_model import (
    NoteSpan,
    allocate_with_method,
    contexts_for_note,
    predict_distributions,
    read_model,
)
from .errors import ConfigError, OperaFrontendError
from .note_transcriber import (
    DEFAULT_NOTE_CONFIG,
    NoteHmmConfig,
    load_transition_histogram,
    read_pseudo_score_json,
    transcribe,
    write_frame_pitch_csv,
    write_pseudo_score_json,
)
from .pitch_tracker import load_wav, track_pitch
from .plotting import render_f0_svg

CONFIG_ENV_VAR = "OPERA_FRONTEND_CONFIG"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INTERNAL = 3

# flag keys each subcommand accepts from a TOML section (dashes become
# underscores); evaluate also accepts benchmark generator keys
_SECTION_KEYS = {
    "parse-score": {"score", "lexicon", "out"},
    "predict-duration": {"score_json", "model", "method", "primary_index", "out"},
    "transcribe": {"wav", "out", "transitions"},
    "plot-f0": {"wav", "pseudo_score", "out"},
    "evaluate": {"seed", "out", "per_note_csv"},
    "serve": {"host", "port"},
}
_EVALUATE_GENERATOR_KEYS = {
    "n_train_notes",
    "n_test_notes",
    "min_phonemes",
    "max_phonemes",
    "stretch_sigma",
    "max_note_frames",
    "note_length_mode",
    "phoneme_stats",
}


# --------------------------------------------------------------------------
# Config resolution
# --------------------------------------------------------------------------

def _load_toml(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from None


def _validate_config(doc: dict, path: str) -> None:
    for section, value in doc.items():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown section in {path}", key=section)
        if not isinstance(value, dict):
            raise ConfigError(f"top-level key must be a table in {path}", key=section)
        allowed = set(_SECTION_KEYS[section])
        if section == "evaluate":
            allowed |= _EVALUATE_GENERATOR_KEYS
        for key in value:
            if key not in allowed:
                raise ConfigError(f"unknown key in {path}", key=f"{section}.{key}")


def _resolve(args: argparse.Namespace, section: dict, key: str, default=None):
    """flag > config > default"""
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in section:
        return section[key]
    return default


def _config_section(subcommand: str, explicit_path: str | None = None) -> dict:
    path = explicit_path or os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return {}
    doc = _load_toml(path)
    _validate_config(doc, path)
    return doc.get(subcommand, {})


def _require(value, flag: str):
    if value is None:
        raise ConfigError(f"missing required option {flag}")
    return value


def _open_out(path: str) -> IO[str]:
    if path == "-":
        return sys.stdout
    return open(path, "w", encoding="utf-8")


def _close_out(fh: IO[str]) -> None:
    if fh is not sys.stdout:
        fh.close()


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_parse_score(args) -> int:
    section = _config_section("parse-score")
    score_path = _require(_resolve(args, section, "score"), "--score")
    lexicon_path = _resolve(args, section, "lexicon")
    out_path = _require(_resolve(args, section, "out"), "--out")

    with open(score_path, "rb") as fh:
        score = score_io.parse_musicxml(fh)
    if lexicon_path:
        # a user lexicon carries its own implicit inventory: accept every
        # symbol it mentions
        with open(lexicon_path, encoding="utf-8") as fh:
            raw = fh.read()
        symbols: set[str] = set()
        for line in raw.splitlines():
            stripped = line.strip()
            if not stripped or stripped.startswith("#") or "\t" not in line:
                continue
            symbols.update(line.split("\t", 1)[1].split())
        lexicon = score_io.load_lexicon(io.StringIO(raw), frozenset(symbols))
    else:
        lexicon = score_io.default_lexicon()

    doc = score_io.score_to_dict(score, lexicon)
    out = _open_out(out_path)
    json.dump(doc, out, indent=2, sort_keys=True)
    out.write("\n")
    _close_out(out)
    return EXIT_OK


def cmd_predict_duration(args) -> int:
    section = _config_section("predict-duration")
    score_json = _require(_resolve(args, section, "score_json"), "--score-json")
    model_path = _require(_resolve(args, section, "model"), "--model")
    method = _resolve(args, section, "method", "lagrange")
    primary_index = int(_resolve(args, section, "primary_index", 1))
    out_path = _require(_resolve(args, section, "out"), "--out")

    with open(score_json, encoding="utf-8") as fh:
        doc = json.load(fh)
    with open(model_path, encoding="utf-8") as fh:
        table = read_model(fh)

    if method not in ("lagrange", "heuristic", "meanfit"):
        raise ConfigError(f"unknown method {method!r} (use lagrange, heuristic or meanfit)")

    rows = []
    for note in doc.get("notes", []):
        phonemes = note.get("phonemes") or []
        if not phonemes:
            continue
        frames = int(note["duration_frames"])
        contexts = contexts_for_note(phonemes, frames)
        span = NoteSpan(frames, tuple(predict_distributions(contexts, table)))
        result = allocate_with_method(span, method, table, primary_index)
        for j, (ph, d) in enumerate(zip(phonemes, result.durations_frames)):
            rows.append((int(note["note_index"]), j, ph, d))

    out = _open_out(out_path)
    out.write("note_index,phoneme_index,phoneme,duration_frames\n")
    for row in rows:
        out.write(",".join(str(v) for v in row) + "\n")
    _close_out(out)
    return EXIT_OK


def _note_config(transitions_path: str | None) -> NoteHmmConfig:
    if not transitions_path:
        return DEFAULT_NOTE_CONFIG
    with open(transitions_path, encoding="utf-8") as fh:
        dist = load_transition_histogram(fh)
    return NoteHmmConfig(transition_distribution=dist)


def cmd_transcribe(args) -> int:
    section = _config_section("transcribe")
    wav_path = _require(_resolve(args, section, "wav"), "--wav")
    out_path = _require(_resolve(args, section, "out"), "--out")
    config = _note_config(_resolve(args, section, "transitions"))

    audio = load_wav(wav_path)
    track = track_pitch(audio)
    score = transcribe(track, config)

    json_path = out_path
    csv_path = (
        out_path[: -len(".json")] + ".csv" if out_path.endswith(".json") else out_path + ".csv"
    )
    with open(json_path, "w", encoding="utf-8") as fh:
        write_pseudo_score_json(score, fh)
    with open(csv_path, "w", encoding="utf-8") as fh:
        write_frame_pitch_csv(score, fh)
    return EXIT_OK


def cmd_plot_f0(args) -> int:
    section = _config_section("plot-f0")
    wav_path = _require(_resolve(args, section, "wav"), "--wav")
    out_path = _require(_resolve(args, section, "out"), "--out")
    pseudo_path = _resolve(args, section, "pseudo_score")

    audio = load_wav(wav_path)
    if audio.samples.size == 0:
        raise OperaFrontendError(f"audio file {wav_path!r} holds no samples")
    track = track_pitch(audio)
    notes = ()
    if pseudo_path:
        with open(pseudo_path, encoding="utf-8") as fh:
            notes = read_pseudo_score_json(fh)
    svg = render_f0_svg(track, notes)
    out = _open_out(out_path)
    out.write(svg)
    _close_out(out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    section = _config_section("evaluate", explicit_path=getattr(args, "config", None))
    seed = int(_resolve(args, section, "seed", 42))
    out_path = _require(_resolve(args, section, "out"), "--out")

    generator_keys = _EVALUATE_GENERATOR_KEYS & set(section)
    config = (
        evaluate_mod.config_from_mapping({k: section[k] for k in generator_keys})
        if generator_keys
        else None
    )
    report = evaluate_mod.synth_duration_benchmark(seed, config)
    out = _open_out(out_path)
    evaluate_mod.write_report_json(report, out)
    _close_out(out)
    per_note_path = _resolve(args, section, "per_note_csv")
    if per_note_path:
        with open(per_note_path, "w", encoding="utf-8") as fh:
            evaluate_mod.write_per_note_csv(report, fh)
    sys.stderr.write(evaluate_mod.render_report_text(report))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    section = _config_section("serve")
    host = _resolve(args, section, "host", "127.0.0.1")
    port = int(_resolve(args, section, "port", 8000))
    uvicorn.run("opera_frontend.service:app", host=host, port=port)
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opera-frontend",
        description="Score parsing, constrained phoneme duration allocation, "
        "and melody transcription for singing synthesis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse-score", help="MusicXML to note/phoneme JSON")
    p.add_argument("--score", metavar="FILE")
    p.add_argument("--lexicon", metavar="FILE")
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(func=cmd_parse_score)

    p = sub.add_parser("predict-duration", help="allocate phoneme durations per note")
    p.add_argument("--score-json", dest="score_json", metavar="FILE")
    p.add_argument("--model", metavar="FILE")
    p.add_argument("--method", choices=["lagrange", "heuristic", "meanfit"])
    p.add_argument("--primary-index", dest="primary_index", type=int)
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(func=cmd_predict_duration)

    p = sub.add_parser("transcribe", help="WAV to pseudo-score JSON + frame CSV")
    p.add_argument("--wav", metavar="FILE")
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--transitions", metavar="FILE")
    p.set_defaults(func=cmd_transcribe)

    p = sub.add_parser("plot-f0", help="SVG overlay of f0 contour and note steps")
    p.add_argument("--wav", metavar="FILE")
    p.add_argument("--pseudo-score", dest="pseudo_score", metavar="FILE")
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(func=cmd_plot_f0)

    p = sub.add_parser("evaluate", help="run the seeded duration benchmark")
    p.add_argument("--seed", type=int)
    p.add_argument("--config", metavar="FILE")
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--per-note-csv", dest="per_note_csv", metavar="FILE")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except OperaFrontendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
