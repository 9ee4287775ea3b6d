"""Exception types shared across the pipeline."""


class MoodpipeError(Exception):
    """Base class for all pipeline errors."""


class CorpusValidationError(MoodpipeError):
    """A corpus (or one of its participants) violates the on-disk contract.

    Carries the full list of issues so callers can print one line per problem.
    """

    def __init__(self, issues):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


class AudioDecodeError(MoodpipeError):
    """The WAV payload could not be decoded (bad RIFF, wrong codec, bad rate)."""


class AudioRejected(MoodpipeError):
    """Preprocessing rejected a response audio. ``reason`` is 'mute' or 'too-short'."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        super().__init__(f"audio rejected ({reason})" + (f": {detail}" if detail else ""))


class EmbeddingFormatError(MoodpipeError):
    """An embedding-matrix file violates the binary format contract."""


class ShapeError(MoodpipeError):
    """Tensor/matrix dimensions do not conform to an operation's contract."""


class NoFullGroup(MoodpipeError):
    """Participant has fewer responses than one full resampling group."""


class TrainingDiverged(MoodpipeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, batch: int, value: float):
        self.epoch = epoch
        self.batch = batch
        self.value = value
        super().__init__(f"non-finite loss {value!r} at epoch {epoch}, batch {batch}")


class ConfigError(MoodpipeError):
    """Pipeline configuration is invalid or contains unknown keys."""
