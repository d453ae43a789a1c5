"""Exception hierarchy for the opera-frontend toolkit.

Every error raised by the library derives from OperaFrontendError so that
callers (CLI, service) can map library failures to a single exit path.
"""


class OperaFrontendError(Exception):
    """Base class for all library errors."""


# --- score input -----------------------------------------------------------

class MalformedDocument(OperaFrontendError):
    """The input is not parseable as a MusicXML document."""


class UnsupportedFeature(OperaFrontendError):
    """The document uses a feature outside the monophonic subset we accept."""


class UnknownSyllable(OperaFrontendError):
    """A lyric syllable has no entry in the phoneme lexicon."""

    def __init__(self, syllable: str):
        super().__init__(f"syllable not in lexicon: {syllable!r}")
        self.syllable = syllable


class FormatError(OperaFrontendError):
    """A structured text input (CSV, lexicon file, JSON model) is malformed."""


class OverlapError(OperaFrontendError):
    """Annotation intervals overlap."""


# --- duration model --------------------------------------------------------

class InfeasibleNote(OperaFrontendError):
    """The note is too short to give every phoneme the minimum duration."""


class DegenerateComponent(OperaFrontendError):
    """A mixture component has zero standard deviation where one is required."""


class UnknownPhoneme(OperaFrontendError):
    """A phoneme has no entry in the duration table."""

    def __init__(self, phoneme: str):
        super().__init__(f"phoneme not in duration table: {phoneme!r}")
        self.phoneme = phoneme


# --- audio / pitch ---------------------------------------------------------

class AudioFormatError(OperaFrontendError):
    """Unsupported audio encoding, channel count, or sample rate."""


class WindowTooShort(OperaFrontendError):
    """The analysis window cannot cover two periods of the lowest pitch."""


class NonPositiveFrequency(OperaFrontendError):
    """A frequency that must be > 0 Hz was zero or negative."""


class EmptyTrack(OperaFrontendError):
    """A pitch track with no frames cannot be transcribed."""


class OffGrid(OperaFrontendError):
    """A pitch value does not lie on the transcription grid."""


# --- evaluation ------------------------------------------------------------

class LengthMismatch(OperaFrontendError):
    """Predicted and ground-truth sequences differ in length."""


class ConfigError(OperaFrontendError):
    """A configuration file or value is invalid."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message if key is None else f"{message} (key: {key})")
        self.key = key
