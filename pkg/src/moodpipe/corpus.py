"""Interview corpus loading, audio preprocessing, and labeling.

On-disk layout, one directory per participant::

    <root>/<participant_id>/
        response_k.wav          # k = 1..n, RIFF WAV PCM16
        response_k.clean.wav    # optional denoised variant, preferred
        response_k.txt          # UTF-8 transcript
        meta.json               # {"questionnaire": "sds"|"phq8", "raw_score": <int>}

Preprocessing: decode -> resample to 16 kHz mono -> trim edge silence ->
reject if mute or shorter than 1 s.  Labels derive from the questionnaire:
SDS index (raw x 1.25) >= 53, PHQ-8 >= 10.
"""

from __future__ import annotations

import json
import re
import wave
from dataclasses import dataclass, field
from math import gcd
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

from .errors import AudioDecodeError, AudioRejected, CorpusValidationError

SUPPORTED_RATES = (8000, 16000, 44100, 48000)
TARGET_RATE = 16000
FRAME = 400          # 25 ms at 16 kHz
HOP = 160            # 10 ms
SILENCE_RMS = 1e-4   # fraction of full scale
MIN_SAMPLES = 16000  # 1.0 s

LABEL_NON_DEPRESSED = 0
LABEL_DEPRESSED = 1

KIND_THREE_RESPONSE = "three-response"
KIND_INTERVIEW = "interview"
KINDS = (KIND_THREE_RESPONSE, KIND_INTERVIEW)

_WAV_RE = re.compile(r"^response_(\d+)\.wav$")


# -- labels --------------------------------------------------------------------


def label_from_sds(raw: int) -> int:
    """Depressed iff index score raw*1.25 >= 53.

    Integer-exact: for integer raw this is raw >= 43 (42*1.25 = 52.5 < 53,
    43*1.25 = 53.75 >= 53), so no float comparison is needed.
    """
    raw = int(raw)
    if raw < 0:
        raise ValueError(f"raw SDS score must be non-negative, got {raw}")
    return LABEL_DEPRESSED if raw >= 43 else LABEL_NON_DEPRESSED


def label_from_phq8(score: int, participant: str = "?") -> int:
    """Depressed iff PHQ-8 score >= 10; scores outside 0..24 are invalid."""
    score = int(score)
    if not 0 <= score <= 24:
        raise CorpusValidationError(
            [f"{participant}: PHQ-8 score {score} outside 0..24"])
    return LABEL_DEPRESSED if score >= 10 else LABEL_NON_DEPRESSED


# -- WAV I/O -------------------------------------------------------------------


def read_wav(path) -> tuple[np.ndarray, int]:
    """Decode a RIFF PCM16 WAV into (mono float64 in [-1, 1], sample rate)."""
    try:
        with wave.open(str(path), "rb") as w:
            if w.getsampwidth() != 2:
                raise AudioDecodeError(f"{path}: only PCM16 supported "
                                       f"(sample width {w.getsampwidth()})")
            channels = w.getnchannels()
            rate = w.getframerate()
            raw = w.readframes(w.getnframes())
    except (wave.Error, EOFError) as exc:
        raise AudioDecodeError(f"{path}: {exc or 'truncated WAV'}") from exc
    x = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    if channels > 1:
        x = x.reshape(-1, channels).mean(axis=1)
    return x, rate


def write_wav(path, waveform: np.ndarray, sample_rate: int = TARGET_RATE) -> None:
    pcm = np.clip(np.round(np.asarray(waveform) * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(sample_rate)
        w.writeframes(pcm.tobytes())


# -- preprocessing -------------------------------------------------------------


def frame_rms(x: np.ndarray, frame: int = FRAME, hop: int = HOP) -> np.ndarray:
    """RMS of each fully contained frame (offsets 0, hop, 2*hop, ...)."""
    n = (x.size - frame) // hop + 1
    idx = np.arange(frame)[None, :] + hop * np.arange(n)[:, None]
    return np.sqrt(np.mean(x[idx] ** 2, axis=1))


def preprocess_audio(waveform: np.ndarray, sample_rate: int) -> np.ndarray:
    """Normalize one response audio: 16 kHz mono, edge silence removed.

    Raises AudioRejected('mute') when every frame is below the silence
    threshold, AudioRejected('too-short') when the trimmed result is under
    1 s, AudioDecodeError for unsupported sample rates.  Idempotent: trims
    land on frame boundaries, so a second pass removes nothing.
    """
    x = np.asarray(waveform, dtype=np.float64)
    if x.ndim != 1:
        raise AudioDecodeError(f"expected mono waveform, got shape {x.shape}")
    if sample_rate not in SUPPORTED_RATES:
        raise AudioDecodeError(f"unsupported sample rate {sample_rate}")
    if sample_rate != TARGET_RATE:
        g = gcd(TARGET_RATE, sample_rate)
        x = resample_poly(x, TARGET_RATE // g, sample_rate // g)

    if x.size < FRAME:
        reason = "mute" if np.sqrt(np.mean(x ** 2) if x.size else 0.0) < SILENCE_RMS \
            else "too-short"
        raise AudioRejected(reason, f"{x.size / TARGET_RATE:.3f} s")

    loud = frame_rms(x) >= SILENCE_RMS
    if not loud.any():
        raise AudioRejected("mute")
    first = int(np.argmax(loud))
    last = int(loud.size - 1 - np.argmax(loud[::-1]))
    trimmed = x[first * HOP: last * HOP + FRAME]
    if trimmed.size < MIN_SAMPLES:
        raise AudioRejected("too-short", f"{trimmed.size / TARGET_RATE:.3f} s after trim")
    return trimmed


# -- domain types ----------------------------------------------------------------


@dataclass
class Response:
    index: int
    transcript: str
    waveform: np.ndarray | None = None   # float64 mono, 16 kHz, None if audio skipped
    sample_rate: int = TARGET_RATE

    @property
    def duration(self) -> float:
        return 0.0 if self.waveform is None else self.waveform.size / self.sample_rate


@dataclass
class Participant:
    id: str
    questionnaire: str
    raw_score: int
    label: int
    responses: list[Response] = field(default_factory=list)


@dataclass
class Issue:
    participant: str
    severity: str   # "error" | "warning"
    message: str

    def __str__(self):
        return f"[{self.severity}] {self.participant}: {self.message}"


@dataclass
class Corpus:
    root: Path
    kind: str
    participants: list[Participant]
    issues: list[Issue] = field(default_factory=list)

    @property
    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def require_valid(self) -> "Corpus":
        if not self.ok:
            raise CorpusValidationError(self.errors)
        return self

    def count_labels(self) -> tuple[int, int]:
        """(depressed, non-depressed) participant counts."""
        dep = sum(1 for p in self.participants if p.label == LABEL_DEPRESSED)
        return dep, len(self.participants) - dep

    def to_json(self) -> str:
        """Deterministic serialized summary (byte-identical across loads)."""
        dep, non = self.count_labels()
        doc = {
            "kind": self.kind,
            "participants": [
                {
                    "id": p.id,
                    "questionnaire": p.questionnaire,
                    "raw_score": p.raw_score,
                    "label": p.label,
                    "responses": [
                        {"index": r.index,
                         "duration_samples": 0 if r.waveform is None else int(r.waveform.size),
                         "transcript_chars": len(r.transcript)}
                        for r in p.responses
                    ],
                }
                for p in self.participants
            ],
            "counts": {"depressed": dep, "non_depressed": non},
            "issues": [str(i) for i in self.issues],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


# -- loading ---------------------------------------------------------------------


def _load_meta(pdir: Path, issues: list[Issue]) -> tuple[str, int, int] | None:
    meta_path = pdir / "meta.json"
    pid = pdir.name
    if not meta_path.exists():
        issues.append(Issue(pid, "error", f"missing {meta_path}"))
        return None
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        issues.append(Issue(pid, "error", f"malformed {meta_path}: {exc}"))
        return None
    questionnaire = meta.get("questionnaire")
    raw_score = meta.get("raw_score")
    if questionnaire not in ("sds", "phq8"):
        issues.append(Issue(pid, "error",
                            f"{meta_path}: questionnaire must be 'sds' or 'phq8', "
                            f"got {questionnaire!r}"))
        return None
    if not isinstance(raw_score, int) or isinstance(raw_score, bool):
        issues.append(Issue(pid, "error", f"{meta_path}: raw_score must be an integer"))
        return None
    try:
        label = label_from_sds(raw_score) if questionnaire == "sds" \
            else label_from_phq8(raw_score, pid)
    except (ValueError, CorpusValidationError) as exc:
        issues.append(Issue(pid, "error", f"{meta_path}: {exc}"))
        return None
    return questionnaire, raw_score, label


def response_indices(pdir: Path) -> list[int]:
    """Sorted response indices found as response_k.wav files."""
    ks = []
    for f in pdir.iterdir():
        m = _WAV_RE.match(f.name)
        if m:
            ks.append(int(m.group(1)))
    return sorted(ks)


def audio_path(pdir: Path, k: int) -> Path:
    """Preferred audio file for response k (denoised variant wins)."""
    clean = pdir / f"response_{k}.clean.wav"
    return clean if clean.exists() else pdir / f"response_{k}.wav"


def _load_participant(pdir: Path, kind: str, load_audio: bool,
                      issues: list[Issue]) -> Participant | None:
    pid = pdir.name
    meta = _load_meta(pdir, issues)
    if meta is None:
        return None
    questionnaire, raw_score, label = meta

    ks = response_indices(pdir)
    if not ks:
        issues.append(Issue(pid, "error", "no response_k.wav files"))
        return None
    if ks != list(range(1, len(ks) + 1)):
        issues.append(Issue(pid, "error", f"response indices not contiguous from 1: {ks}"))
        return None
    if kind == KIND_THREE_RESPONSE and len(ks) != 3:
        issues.append(Issue(pid, "error",
                            f"three-response corpus requires exactly 3 responses, found {len(ks)}"))
        return None

    responses: list[Response] = []
    for k in ks:
        txt_path = pdir / f"response_{k}.txt"
        if not txt_path.exists():
            issues.append(Issue(pid, "error", f"missing {txt_path}"))
            return None
        transcript = txt_path.read_text(encoding="utf-8").strip()
        if not transcript:
            issues.append(Issue(pid, "error", f"{txt_path}: empty transcript"))
            return None

        waveform = None
        if load_audio:
            wav = audio_path(pdir, k)
            try:
                raw, rate = read_wav(wav)
                waveform = preprocess_audio(raw, rate)
            except AudioDecodeError as exc:
                issues.append(Issue(pid, "error", str(exc)))
                return None
            except AudioRejected as exc:
                severity = "error" if kind == KIND_THREE_RESPONSE else "warning"
                issues.append(Issue(pid, severity, f"{wav}: {exc}"))
                if severity == "error":
                    return None
                continue  # interview corpora tolerate dropped responses
        responses.append(Response(index=k, transcript=transcript, waveform=waveform))

    if not responses:
        issues.append(Issue(pid, "error", "no usable responses"))
        return None
    return Participant(id=pid, questionnaire=questionnaire, raw_score=raw_score,
                       label=label, responses=responses)


def load_corpus(root, kind: str, load_audio: bool = True) -> Corpus:
    """Load every participant under ``root`` in lexicographic id order.

    Issues accumulate in ``corpus.issues``; hard problems are 'error'
    severity and make ``corpus.ok`` false (``require_valid`` raises).
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    root = Path(root)
    if not root.is_dir():
        raise CorpusValidationError([f"{root}: not a directory"])
    pdirs = sorted((d for d in root.iterdir() if d.is_dir()), key=lambda d: d.name)
    if not pdirs:
        raise CorpusValidationError([f"{root}: no participant directories"])

    issues: list[Issue] = []
    participants: list[Participant] = []
    seen: set[str] = set()
    for pdir in pdirs:
        if pdir.name in seen:
            issues.append(Issue(pdir.name, "error", f"duplicate participant id at {pdir}"))
            continue
        seen.add(pdir.name)
        p = _load_participant(pdir, kind, load_audio, issues)
        if p is not None:
            participants.append(p)
    return Corpus(root=root, kind=kind, participants=participants, issues=issues)
