"""Sentence-embedding ingestion and the shared binary matrix format.

Text features arrive as precomputed per-participant matrices (one row per
response, width 1024).  The same container, ``MMX1``, also stores Mel
spectrograms and model checkpoints:

    magic ``MMX1`` | u32 LE rows | u32 LE cols | u32 LE reserved=0
    | rows*cols float32 LE, row-major | u64 LE FNV-1a of the payload bytes

``hash_embed`` is the deterministic stand-in embedder used when no
precomputed matrix exists (tests, synthetic corpora).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import EmbeddingFormatError
from .nn.rng import RngState, _fnv1a

MAGIC = b"MMX1"
TEXT_WIDTH = 1024
_HEADER = struct.Struct("<4sIII")
_EPS = 1e-12


def fnv1a64(payload: bytes) -> int:
    """64-bit FNV-1a over raw bytes (the format's payload checksum)."""
    return _fnv1a(payload)


def write_matrix(matrix: np.ndarray, path) -> None:
    """Write a finite 2-D matrix in the MMX1 container (float32 payload)."""
    m = np.asarray(matrix, dtype=np.float32)
    if m.ndim != 2:
        raise EmbeddingFormatError(f"MMX1 stores 2-D matrices, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise EmbeddingFormatError("refusing to write non-finite matrix entries")
    payload = m.tobytes(order="C")
    blob = (
        _HEADER.pack(MAGIC, m.shape[0], m.shape[1], 0)
        + payload
        + struct.pack("<Q", fnv1a64(payload))
    )
    Path(path).write_bytes(blob)


def read_matrix(path, expect_width: int | None = None) -> np.ndarray:
    """Read and validate an MMX1 matrix.

    Raises :class:`EmbeddingFormatError` on bad magic, truncation (naming the
    byte offset where data ran out), dimension/payload mismatch, checksum
    mismatch, or non-finite entries.
    """
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise EmbeddingFormatError(f"{path}: truncated header at byte {len(blob)}")
    magic, rows, cols, reserved = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise EmbeddingFormatError(f"{path}: bad magic {magic!r}")
    if reserved != 0:
        raise EmbeddingFormatError(f"{path}: reserved field must be 0, got {reserved}")
    if rows < 1 or cols < 1:
        raise EmbeddingFormatError(f"{path}: degenerate dims {rows}x{cols}")
    need = _HEADER.size + 4 * rows * cols + 8
    if len(blob) != need:
        offset = min(len(blob), need)
        raise EmbeddingFormatError(
            f"{path}: declared {rows}x{cols} needs {need} bytes, "
            f"file has {len(blob)} (data ends at byte {offset})"
        )
    payload = blob[_HEADER.size:-8]
    (checksum,) = struct.unpack("<Q", blob[-8:])
    if fnv1a64(payload) != checksum:
        raise EmbeddingFormatError(f"{path}: payload checksum mismatch")
    m = np.frombuffer(payload, dtype="<f4").reshape(rows, cols).astype(np.float64)
    if not np.isfinite(m).all():
        raise EmbeddingFormatError(f"{path}: non-finite entries")
    if expect_width is not None and cols != expect_width:
        raise EmbeddingFormatError(f"{path}: width {cols}, expected {expect_width}")
    return m


def write_embeddings(matrix: np.ndarray, path) -> None:
    write_matrix(matrix, path)


def read_embeddings(path) -> np.ndarray:
    """Read a per-participant embedding matrix (one row per response)."""
    return read_matrix(path, expect_width=TEXT_WIDTH)


def hash_embed(transcript: str, width: int = TEXT_WIDTH) -> np.ndarray:
    """Deterministic bag-of-words embedding row.

    Whitespace tokens are hashed to signed +-1 vectors, averaged, and
    L2-normalized.  Empty text maps to the zero vector.  Order-invariant by
    construction, so it is a test/fallback feature, not a contextual one.
    """
    tokens = transcript.split()
    if not tokens:
        return np.zeros(width)
    acc = np.zeros(width)
    for tok in tokens:
        raw = RngState(_fnv1a(tok.encode("utf-8")))._raw(width)
        acc += (raw & np.uint64(1)).astype(np.float64) * 2.0 - 1.0
    acc /= len(tokens)
    return acc / (np.linalg.norm(acc) + _EPS)


def embed_transcripts(transcripts: list[str], width: int = TEXT_WIDTH) -> np.ndarray:
    """Stack hash_embed rows for a participant's responses (N x width)."""
    return np.stack([hash_embed(t, width) for t in transcripts])
