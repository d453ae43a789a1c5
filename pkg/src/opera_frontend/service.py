"""HTTP service wrapping the front-end pipeline.

Stateless JSON endpoints around the core package: score parsing, duration
allocation against an inline mixture model, mixture fitting, pitch tracking,
note transcription, and the seeded benchmark.  Audio travels as base64 WAV;
mixture models travel in the same JSON shape as the model file on disk.
"""

from __future__ import annotations

import base64
import binascii
import io
import json
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .duration_model import (
    DurationSample,
    NoteSpan,
    allocate_with_method,
    contexts_for_note,
    fit_duration_table,
    mixture_log_likelihood,
    predict_distributions,
    read_model,
    write_model,
    PhonemeDurationDistribution,
    MixtureComponent,
)
from .errors import OperaFrontendError
from .evaluate import (
    config_from_mapping,
    render_report_text,
    synth_duration_benchmark,
)
from .note_transcriber import (
    DEFAULT_NOTE_CONFIG,
    IntervalDistribution,
    NoteHmmConfig,
    transcribe,
)
from .pitch_tracker import load_wav, track_pitch
from .score_io import default_lexicon, parse_musicxml, score_to_dict

app = FastAPI(
    title="opera-frontend",
    version=__version__,
    description="Score parsing, constrained phoneme duration allocation, "
    "and melody transcription for singing synthesis.",
)


@app.exception_handler(OperaFrontendError)
async def _library_error(request: Request, exc: OperaFrontendError):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


# --------------------------------------------------------------------------
# Schemas
# --------------------------------------------------------------------------

class HealthResponse(BaseModel):
    status: str
    version: str


class ParseScoreRequest(BaseModel):
    musicxml: str


class NoteOut(BaseModel):
    note_index: int
    midi_pitch: int
    duration_s: float
    duration_frames: int
    syllable: str | None
    phonemes: list[str]


class ParseScoreResponse(BaseModel):
    source_id: str
    tempo_bpm: float
    notes: list[NoteOut]


class ComponentModel(BaseModel):
    weight: float
    mean_frames: float
    std_frames: float


class MixtureEntryModel(BaseModel):
    phoneme: str
    context: dict | None = None
    components: list[ComponentModel]


class MixtureDocument(BaseModel):
    frame_ms: int = 10
    K: int = 2
    tertile_bounds_frames: list[float] | None = None
    entries: list[MixtureEntryModel]


class PredictDurationRequest(BaseModel):
    score: ParseScoreResponse
    model: MixtureDocument
    method: Literal["lagrange", "heuristic", "meanfit"] = "lagrange"
    primary_index: int = 1


class PhonemeDurationOut(BaseModel):
    note_index: int
    phoneme_index: int
    phoneme: str
    duration_frames: int


class PredictDurationResponse(BaseModel):
    durations: list[PhonemeDurationOut]


class LogLikelihoodRequest(BaseModel):
    phoneme: str = "?"
    components: list[ComponentModel]
    duration_frames: float


class LogLikelihoodResponse(BaseModel):
    log_likelihood: float


class FitSample(BaseModel):
    phoneme: str
    duration_frames: float
    prev: str | None = None
    next: str | None = None
    note_frames: int | None = None


class FitRequest(BaseModel):
    samples: list[FitSample]
    k: int = Field(default=2, ge=1)


class TranscribeRequest(BaseModel):
    wav_base64: str
    transitions: dict | None = None  # {"intervals": [{"semitones", "prob"}]}


class NoteSegmentOut(BaseModel):
    midi: int
    start_frame: int
    end_frame: int


class TranscribeResponse(BaseModel):
    notes: list[NoteSegmentOut]
    frame_pitch: list[int]


class TrackPitchRequest(BaseModel):
    wav_base64: str


class TrackPitchResponse(BaseModel):
    hop_s: float
    f0_hz: list[float]
    voiced: list[bool]


class EvaluateRequest(BaseModel):
    seed: int = 42
    config: dict | None = None


class EvaluateResponse(BaseModel):
    report: dict
    text: str


# --------------------------------------------------------------------------
# Helpers
# --------------------------------------------------------------------------

def _table_from_document(doc: MixtureDocument):
    # route through the file reader so wire payloads face the same checks
    return read_model(io.StringIO(json.dumps(doc.model_dump())))


def _audio_from_base64(payload: str):
    try:
        raw = base64.b64decode(payload, validate=True)
    except (ValueError, binascii.Error) as exc:
        raise OperaFrontendError(f"wav_base64 is not valid base64: {exc}") from exc
    return load_wav(io.BytesIO(raw))


# --------------------------------------------------------------------------
# Endpoints
# --------------------------------------------------------------------------

@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/score/parse", response_model=ParseScoreResponse)
def score_parse(req: ParseScoreRequest) -> ParseScoreResponse:
    score = parse_musicxml(req.musicxml)
    return ParseScoreResponse(**score_to_dict(score, default_lexicon()))


@app.post("/duration/predict", response_model=PredictDurationResponse)
def duration_predict(req: PredictDurationRequest) -> PredictDurationResponse:
    table = _table_from_document(req.model)
    rows: list[PhonemeDurationOut] = []
    for note in req.score.notes:
        if not note.phonemes:
            continue
        contexts = contexts_for_note(note.phonemes, note.duration_frames)
        span = NoteSpan(note.duration_frames, tuple(predict_distributions(contexts, table)))
        result = allocate_with_method(span, req.method, table, req.primary_index)
        rows.extend(
            PhonemeDurationOut(
                note_index=note.note_index,
                phoneme_index=j,
                phoneme=ph,
                duration_frames=d,
            )
            for j, (ph, d) in enumerate(zip(note.phonemes, result.durations_frames))
        )
    return PredictDurationResponse(durations=rows)


@app.post("/duration/loglik", response_model=LogLikelihoodResponse)
def duration_loglik(req: LogLikelihoodRequest) -> LogLikelihoodResponse:
    dist = PhonemeDurationDistribution(
        req.phoneme,
        tuple(MixtureComponent(c.weight, c.mean_frames, c.std_frames) for c in req.components),
    )
    return LogLikelihoodResponse(
        log_likelihood=mixture_log_likelihood(dist, req.duration_frames)
    )


@app.post("/duration/fit", response_model=MixtureDocument)
def duration_fit(req: FitRequest) -> MixtureDocument:
    samples = [
        DurationSample(
            phoneme=s.phoneme,
            duration_frames=s.duration_frames,
            prev=s.prev,
            next=s.next,
            note_frames=s.note_frames,
        )
        for s in req.samples
    ]
    if not samples:
        raise OperaFrontendError("no samples to fit")
    table = fit_duration_table(samples, k=req.k)
    buf = io.StringIO()
    write_model(table, buf)
    return MixtureDocument(**json.loads(buf.getvalue()))


@app.post("/transcribe", response_model=TranscribeResponse)
def transcribe_endpoint(req: TranscribeRequest) -> TranscribeResponse:
    audio = _audio_from_base64(req.wav_base64)
    config = DEFAULT_NOTE_CONFIG
    if req.transitions is not None:
        try:
            pts = tuple(
                (float(e["semitones"]), float(e["prob"])) for e in req.transitions["intervals"]
            )
            config = NoteHmmConfig(transition_distribution=IntervalDistribution(pts))
        except (KeyError, TypeError, ValueError) as exc:
            raise OperaFrontendError(f"bad transition histogram: {exc}") from exc
    score = transcribe(track_pitch(audio), config)
    return TranscribeResponse(
        notes=[
            NoteSegmentOut(midi=n.midi_pitch, start_frame=n.start_frame, end_frame=n.end_frame)
            for n in score.notes
        ],
        frame_pitch=[int(p) for p in score.frame_pitch],
    )


@app.post("/pitch/track", response_model=TrackPitchResponse)
def pitch_track_endpoint(req: TrackPitchRequest) -> TrackPitchResponse:
    track = track_pitch(_audio_from_base64(req.wav_base64))
    return TrackPitchResponse(
        hop_s=track.hop_s,
        f0_hz=[float(f) for f in track.f0_hz],
        voiced=[bool(v) for v in track.voiced],
    )


@app.post("/evaluate", response_model=EvaluateResponse)
def evaluate_endpoint(req: EvaluateRequest) -> EvaluateResponse:
    config = config_from_mapping(req.config) if req.config else None
    report = synth_duration_benchmark(req.seed, config)
    return EvaluateResponse(report=report.to_dict(), text=render_report_text(report))
