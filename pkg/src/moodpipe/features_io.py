"""Feature files in the corpus tree, with content-hash staleness tracking.

Per participant directory:

    response_k.mel.mmx   log-mel matrix of the preprocessed response audio
    text.mmx             one embedding row per accepted response
    features.json        what featurize wrote, input hashes, accepted indices

Re-running featurize rewrites nothing whose input bytes and parameters are
unchanged.  A ``text.mmx`` not recorded in ``features.json`` is treated as
exporter output and never overwritten.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .corpus import Corpus, Participant, audio_path, preprocess_audio, read_wav
from .audio_features import mel_spectrogram
from .errors import AudioDecodeError, AudioRejected, MoodpipeError
from .sampling import ResponseFeatures
from .text_features import TEXT_WIDTH, embed_transcripts, read_matrix, write_matrix

MANIFEST = "features.json"


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _mel_sig(mel_bins: int, frame_ms: int, hop_ms: int) -> str:
    return f"mel:{mel_bins}:{frame_ms}:{hop_ms}:512"


def featurize_participant(root, participant: Participant, *, mel_bins: int = 80,
                          frame_ms: int = 25, hop_ms: int = 10,
                          do_audio: bool = True, do_text: bool = True) -> dict:
    """Write missing/stale feature files for one participant.

    Returns {"written": [...], "skipped": [...], "rejected": [(k, reason)...]}.
    """
    pdir = Path(root) / participant.id
    manifest_path = pdir / MANIFEST
    manifest = json.loads(manifest_path.read_text(encoding="utf-8")) \
        if manifest_path.exists() else {"files": {}, "accepted": []}
    files = manifest.setdefault("files", {})
    written: list[str] = []
    skipped: list[str] = []
    rejected: list[tuple[int, str]] = []
    mel_sig = _mel_sig(mel_bins, frame_ms, hop_ms)

    accepted: list[int] = []
    transcripts: dict[int, str] = {r.index: r.transcript for r in participant.responses}
    if do_audio:
        for r in participant.responses:
            wav = audio_path(pdir, r.index)
            name = f"response_{r.index}.mel.mmx"
            out = pdir / name
            stamp = _sha256(wav.read_bytes()) + "|" + mel_sig
            if files.get(name) == stamp and out.exists():
                accepted.append(r.index)
                skipped.append(name)
                continue
            try:
                audio, rate = read_wav(wav)
                mel = mel_spectrogram(preprocess_audio(audio, rate),
                                      n_mels=mel_bins, frame_ms=frame_ms,
                                      hop_ms=hop_ms)
            except (AudioDecodeError, AudioRejected) as exc:
                rejected.append((r.index, str(exc)))
                files.pop(name, None)
                if out.exists():
                    out.unlink()
                continue
            write_matrix(mel, out)
            files[name] = stamp
            accepted.append(r.index)
            written.append(name)
        manifest["accepted"] = accepted
    else:
        accepted = manifest.get("accepted") or [r.index for r in participant.responses]

    if do_text:
        out = pdir / "text.mmx"
        if out.exists() and "text.mmx" not in files:
            skipped.append("text.mmx (precomputed, left untouched)")
        else:
            texts = [transcripts[k] for k in accepted if k in transcripts]
            stamp = _sha256("\x00".join(texts).encode("utf-8")) + f"|hash_embed:{TEXT_WIDTH}"
            if files.get("text.mmx") == stamp and out.exists():
                skipped.append("text.mmx")
            elif texts:
                write_matrix(embed_transcripts(texts), out)
                files["text.mmx"] = stamp
                written.append("text.mmx")

    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n",
                             encoding="utf-8")
    return {"written": written, "skipped": skipped, "rejected": rejected}


def featurize_corpus(corpus: Corpus, *, mel_bins: int = 80, frame_ms: int = 25,
                     hop_ms: int = 10, do_audio: bool = True,
                     do_text: bool = True) -> dict:
    """Featurize every participant; aggregates the per-participant reports."""
    report = {"written": 0, "skipped": 0, "rejections": []}
    for p in corpus.participants:
        r = featurize_participant(corpus.root, p, mel_bins=mel_bins,
                                  frame_ms=frame_ms, hop_ms=hop_ms,
                                  do_audio=do_audio, do_text=do_text)
        report["written"] += len(r["written"])
        report["skipped"] += len(r["skipped"])
        report["rejections"].extend(
            {"participant": p.id, "response": k, "reason": reason}
            for k, reason in r["rejected"])
    return report


def load_participant_features(root, participant: Participant,
                              mel_bins: int = 80) -> ResponseFeatures:
    """Read featurize/exporter outputs for one participant.

    Missing files raise with a message naming the featurize step.  Row counts
    must agree across modalities (one text row per accepted response).
    """
    pdir = Path(root) / participant.id
    manifest_path = pdir / MANIFEST
    accepted = [r.index for r in participant.responses]
    if manifest_path.exists():
        recorded = json.loads(manifest_path.read_text(encoding="utf-8")).get("accepted")
        if recorded:
            accepted = recorded

    mels = []
    for k in accepted:
        mel_path = pdir / f"response_{k}.mel.mmx"
        if not mel_path.exists():
            raise MoodpipeError(
                f"{mel_path} missing: run `moodpipe featurize` before training")
        mels.append(read_matrix(mel_path, expect_width=mel_bins))

    text_path = pdir / "text.mmx"
    if not text_path.exists():
        raise MoodpipeError(
            f"{text_path} missing: run `moodpipe featurize` before training")
    text = read_matrix(text_path, expect_width=TEXT_WIDTH)
    if text.shape[0] != len(mels):
        raise MoodpipeError(
            f"{participant.id}: text rows ({text.shape[0]}) != featurized responses "
            f"({len(mels)}); re-run featurize or re-export the embeddings")
    return ResponseFeatures(participant.id, participant.label, mels, text)


def load_corpus_features(corpus: Corpus, mel_bins: int = 80) -> dict[str, ResponseFeatures]:
    return {p.id: load_participant_features(corpus.root, p, mel_bins)
            for p in corpus.participants}
