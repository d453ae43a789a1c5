"""CLI subcommands: exit codes, file outputs, config handling, determinism."""

import json
import subprocess
import sys

import numpy as np
import pytest
from conftest import vibrato_tone
from scipy.io import wavfile

from opera_frontend.cli import main
from opera_frontend.duration_model import DurationSample, fit_duration_table, write_model

SCORE_XML = """<score-partwise version="3.1">
  <part-list><score-part id="P1"/></part-list>
  <part id="P1">
    <measure number="1">
      <attributes><divisions>4</divisions></attributes>
      <direction><sound tempo="60"/></direction>
      <note>
        <pitch><step>C</step><octave>4</octave></pitch>
        <duration>4</duration>
        <lyric><text>liang</text></lyric>
      </note>
      <note>
        <pitch><step>E</step><octave>4</octave></pitch>
        <duration>8</duration>
        <lyric><text>a</text></lyric>
      </note>
      <note><rest/><duration>2</duration></note>
    </measure>
  </part>
</score-partwise>
"""


@pytest.fixture
def score_file(tmp_path):
    path = tmp_path / "score.musicxml"
    path.write_text(SCORE_XML)
    return path


@pytest.fixture
def model_file(tmp_path):
    rng = np.random.default_rng(0)
    samples = []
    for ph, mean, std in [
        ("l", 12, 4), ("j", 10, 4), ("E", 40, 14), ("a", 45, 16), ("N", 18, 6),
    ]:
        samples.extend(
            DurationSample(ph, float(max(1.0, d)), note_frames=100)
            for d in rng.normal(mean, std, 120)
        )
    table = fit_duration_table(samples, k=2)
    path = tmp_path / "model.json"
    with open(path, "w") as fh:
        write_model(table, fh)
    return path


@pytest.fixture
def vibrato_wav(tmp_path):
    samples, _ = vibrato_tone(330.0, 1.2, 22050, depth_semitones=0.35, rate_hz=6.0)
    path = tmp_path / "vibrato.wav"
    wavfile.write(path, 22050, (samples * 32767).astype(np.int16))
    return path


@pytest.fixture
def silent_wav(tmp_path):
    path = tmp_path / "silent.wav"
    wavfile.write(path, 22050, np.zeros(22050, dtype=np.int16))
    return path


# --------------------------------------------------------------------------
# parse-score
# --------------------------------------------------------------------------

def test_parse_score_writes_json(score_file, tmp_path):
    out = tmp_path / "score.json"
    assert main(["parse-score", "--score", str(score_file), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["tempo_bpm"] == 60
    assert len(doc["notes"]) == 3
    assert doc["notes"][0]["phonemes"] == ["l", "j", "E", "a", "a", "N"]
    assert doc["notes"][0]["duration_frames"] == 100
    assert doc["notes"][2]["midi_pitch"] == 0


def test_parse_score_stdout(score_file, capsys):
    assert main(["parse-score", "--score", str(score_file), "--out", "-"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["notes"][1]["syllable"] == "a"


def test_parse_score_unknown_syllable_names_it(tmp_path, capsys):
    xml = SCORE_XML.replace("liang", "zzz9")
    score = tmp_path / "bad.musicxml"
    score.write_text(xml)
    code = main(["parse-score", "--score", str(score), "--out", str(tmp_path / "o.json")])
    assert code == 2
    assert "zzz9" in capsys.readouterr().err


def test_parse_score_malformed_is_input_error(tmp_path):
    bad = tmp_path / "trunc.xml"
    bad.write_text("<score-partwise><part>")
    assert main(["parse-score", "--score", str(bad), "--out", "-"]) == 2


def test_parse_score_custom_lexicon(score_file, tmp_path):
    lex = tmp_path / "lex.txt"
    lex.write_text("liang\tl a\na\ta\n")
    out = tmp_path / "o.json"
    code = main(
        ["parse-score", "--score", str(score_file), "--lexicon", str(lex), "--out", str(out)]
    )
    assert code == 0
    assert json.loads(out.read_text())["notes"][0]["phonemes"] == ["l", "a"]


# --------------------------------------------------------------------------
# predict-duration
# --------------------------------------------------------------------------

@pytest.fixture
def score_json(score_file, tmp_path):
    out = tmp_path / "score.json"
    main(["parse-score", "--score", str(score_file), "--out", str(out)])
    return out


@pytest.mark.parametrize("method", ["lagrange", "heuristic", "meanfit"])
def test_predict_duration_sums_match(score_json, model_file, tmp_path, method):
    out = tmp_path / f"durations_{method}.csv"
    code = main(
        ["predict-duration", "--score-json", str(score_json), "--model", str(model_file),
         "--method", method, "--out", str(out)]
    )
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "note_index,phoneme_index,phoneme,duration_frames"
    note_doc = json.loads(score_json.read_text())
    frames_by_note = {n["note_index"]: n["duration_frames"] for n in note_doc["notes"]}
    sums: dict[int, int] = {}
    for line in lines[1:]:
        idx, _, _, frames = line.split(",")
        sums[int(idx)] = sums.get(int(idx), 0) + int(frames)
    for idx, total in sums.items():
        assert total == frames_by_note[idx]


def test_predict_duration_unknown_method(score_json, model_file, tmp_path):
    code = main(
        ["predict-duration", "--score-json", str(score_json), "--model", str(model_file),
         "--method", "magic", "--out", str(tmp_path / "x.csv")]
    )
    assert code == 2


# --------------------------------------------------------------------------
# transcribe
# --------------------------------------------------------------------------

def test_transcribe_vibrato_single_note(vibrato_wav, tmp_path):
    out = tmp_path / "pseudo.json"
    assert main(["transcribe", "--wav", str(vibrato_wav), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["notes"]) == 1
    assert doc["notes"][0]["midi"] == 64  # 330 Hz is MIDI 64.02
    csv_lines = (tmp_path / "pseudo.csv").read_text().strip().splitlines()
    assert csv_lines[0] == "frame,midi_pitch"
    assert len(csv_lines) == 121  # 1.2 s at 10 ms: 120 frames + header


def test_transcribe_silence_empty_notes(silent_wav, tmp_path):
    out = tmp_path / "pseudo.json"
    assert main(["transcribe", "--wav", str(silent_wav), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["notes"] == []


def test_transcribe_missing_file(tmp_path):
    code = main(["transcribe", "--wav", str(tmp_path / "nope.wav"), "--out", str(tmp_path / "o.json")])
    assert code == 2


def test_transcribe_with_histogram(vibrato_wav, tmp_path):
    hist = tmp_path / "trans.json"
    hist.write_text(json.dumps({"intervals": [
        {"semitones": -2, "prob": 0.2}, {"semitones": 0, "prob": 0.6}, {"semitones": 2, "prob": 0.2},
    ]}))
    out = tmp_path / "pseudo.json"
    code = main(["transcribe", "--wav", str(vibrato_wav), "--out", str(out), "--transitions", str(hist)])
    assert code == 0
    assert len(json.loads(out.read_text())["notes"]) == 1


# --------------------------------------------------------------------------
# plot-f0
# --------------------------------------------------------------------------

def test_plot_contains_both_series(vibrato_wav, tmp_path):
    pseudo = tmp_path / "pseudo.json"
    main(["transcribe", "--wav", str(vibrato_wav), "--out", str(pseudo)])
    out = tmp_path / "plot.svg"
    code = main(["plot-f0", "--wav", str(vibrato_wav), "--pseudo-score", str(pseudo), "--out", str(out)])
    assert code == 0
    svg = out.read_text()
    assert "f0-contour" in svg
    assert "note-step" in svg
    assert svg.startswith("<svg ")


def test_plot_without_pseudo_score(vibrato_wav, tmp_path):
    out = tmp_path / "plot.svg"
    assert main(["plot-f0", "--wav", str(vibrato_wav), "--out", str(out)]) == 0
    svg = out.read_text()
    assert "f0-contour" in svg
    assert "note-step" not in svg


def test_plot_zero_length_wav(tmp_path):
    path = tmp_path / "empty.wav"
    wavfile.write(path, 22050, np.zeros(0, dtype=np.int16))
    assert main(["plot-f0", "--wav", str(path), "--out", str(tmp_path / "o.svg")]) == 2


# --------------------------------------------------------------------------
# evaluate
# --------------------------------------------------------------------------

def test_evaluate_writes_report(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["evaluate", "--seed", "3", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert set(doc["methods"]) == {"lagrange", "heuristic", "meanfit"}
    assert "lagrange" in capsys.readouterr().err


def test_evaluate_seed_determinism(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["evaluate", "--seed", "5", "--out", str(a)])
    main(["evaluate", "--seed", "5", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_evaluate_bad_config_names_key(tmp_path, capsys):
    cfg = tmp_path / "bench.toml"
    cfg.write_text("[evaluate]\nbananas = 3\n")
    code = main(["evaluate", "--config", str(cfg), "--out", str(tmp_path / "r.json")])
    assert code == 2
    assert "evaluate.bananas" in capsys.readouterr().err


def test_evaluate_per_note_csv(tmp_path):
    out = tmp_path / "r.json"
    per_note = tmp_path / "per_note.csv"
    cfg = tmp_path / "bench.toml"
    cfg.write_text("[evaluate]\nn_test_notes = 30\nn_train_notes = 60\n")
    code = main(
        ["evaluate", "--seed", "2", "--config", str(cfg), "--out", str(out),
         "--per-note-csv", str(per_note)]
    )
    assert code == 0
    lines = per_note.read_text().strip().splitlines()
    assert len(lines) == 31
    assert lines[0].startswith("note_index,")


def test_evaluate_config_controls_generator(tmp_path):
    cfg = tmp_path / "bench.toml"
    cfg.write_text("[evaluate]\nn_test_notes = 50\nn_train_notes = 100\n")
    out = tmp_path / "r.json"
    assert main(["evaluate", "--seed", "1", "--config", str(cfg), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["n_notes"] == 50


# --------------------------------------------------------------------------
# TOML config and env var
# --------------------------------------------------------------------------

def test_env_config_supplies_defaults(monkeypatch, score_json, model_file, tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(
        f'[predict-duration]\nmethod = "heuristic"\nmodel = "{model_file}"\n'
    )
    monkeypatch.setenv("OPERA_FRONTEND_CONFIG", str(cfg))
    out = tmp_path / "durations.csv"
    code = main(["predict-duration", "--score-json", str(score_json), "--out", str(out)])
    assert code == 0
    assert out.exists()


def test_env_config_unknown_key_rejected(monkeypatch, score_json, model_file, tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text("[predict-duration]\nturbo = true\n")
    monkeypatch.setenv("OPERA_FRONTEND_CONFIG", str(cfg))
    code = main(
        ["predict-duration", "--score-json", str(score_json), "--model", str(model_file),
         "--out", str(tmp_path / "o.csv")]
    )
    assert code == 2
    assert "predict-duration.turbo" in capsys.readouterr().err


def test_flag_overrides_config(monkeypatch, score_json, model_file, tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('[evaluate]\nseed = 9\n')
    monkeypatch.setenv("OPERA_FRONTEND_CONFIG", str(cfg))
    out_flag, out_env = tmp_path / "flag.json", tmp_path / "env.json"
    main(["evaluate", "--seed", "3", "--out", str(out_flag)])
    monkeypatch.delenv("OPERA_FRONTEND_CONFIG")
    main(["evaluate", "--seed", "3", "--out", str(out_env)])
    assert json.loads(out_flag.read_text())["seed"] == 3
    assert out_flag.read_bytes() == out_env.read_bytes()


# --------------------------------------------------------------------------
# full pipeline determinism
# --------------------------------------------------------------------------

def test_pipeline_byte_deterministic(score_file, model_file, vibrato_wav, tmp_path):
    outputs = []
    for run in ("one", "two"):
        d = tmp_path / run
        d.mkdir()
        score_json = d / "score.json"
        durations = d / "durations.csv"
        pseudo = d / "pseudo.json"
        svg = d / "plot.svg"
        assert main(["parse-score", "--score", str(score_file), "--out", str(score_json)]) == 0
        assert main(
            ["predict-duration", "--score-json", str(score_json), "--model", str(model_file),
             "--method", "lagrange", "--out", str(durations)]
        ) == 0
        assert main(["transcribe", "--wav", str(vibrato_wav), "--out", str(pseudo)]) == 0
        assert main(
            ["plot-f0", "--wav", str(vibrato_wav), "--pseudo-score", str(pseudo), "--out", str(svg)]
        ) == 0
        outputs.append(
            tuple(p.read_bytes() for p in (score_json, durations, pseudo, svg))
        )
    assert outputs[0] == outputs[1]


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "opera_frontend.cli", "evaluate", "--help"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "--seed" in proc.stdout
