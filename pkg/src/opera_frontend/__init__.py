"""Score-to-performance front end for expressive singing synthesis.

Three pillars: MusicXML/lexicon/annotation input, constrained
maximum-likelihood phoneme duration allocation over per-phoneme Gaussian
mixtures, and audio-to-pseudo-score melody transcription (probabilistic YIN
pitch tracking plus a note-level HMM).
"""

__version__ = "0.1.0"

from .duration_model import (
    AllocationMethod,
    AllocationResult,
    DurationModelTable,
    DurationSample,
    MixtureComponent,
    NoteSpan,
    PhonemeContext,
    PhonemeDurationDistribution,
    allocate_fitting_heuristic,
    allocate_lagrange,
    allocate_mean_fit,
    allocate_with_method,
    contexts_for_note,
    fit_duration_table,
    mixture_log_likelihood,
    oracle_allocate_grid,
    predict_distributions,
    quantize_to_frames,
    read_model,
    select_max_weight_component,
    single_gaussian,
    write_model,
)
from .errors import OperaFrontendError
from .note_transcriber import (
    NoteHmmConfig,
    PseudoScore,
    TranscribedNote,
    quantize_grid_pitch,
    score_note_f,
    transcribe,
)
from .pitch_tracker import (
    AudioBuffer,
    PitchCandidateFrame,
    PitchTrack,
    PitchTrackerConfig,
    extract_candidates,
    hz_to_midi,
    load_wav,
    midi_to_hz,
    track_pitch,
    viterbi_pitch,
    yin_cmndf,
)
from .score_io import (
    AnnotatedPhrase,
    NoteEvent,
    PhonemeLexicon,
    Score,
    default_lexicon,
    load_annotation,
    parse_musicxml,
    syllable_to_phonemes,
)

__all__ = [name for name in dir() if not name.startswith("_")]
