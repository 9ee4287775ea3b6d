"""Binary matrix format and the hashing fallback embedder."""

import struct

import numpy as np
import pytest

from moodpipe.errors import EmbeddingFormatError
from moodpipe.nn.rng import RngState
from moodpipe.text_features import (
    hash_embed,
    read_embeddings,
    read_matrix,
    write_embeddings,
    write_matrix,
)


def test_file_size_follows_format_arithmetic(tmp_path):
    # 16-byte header + 4*N*W payload + 8-byte checksum
    path = tmp_path / "one.mmx"
    write_matrix(np.array([[0.0]]), path)
    assert path.stat().st_size == 16 + 4 * 1 + 8

    big = tmp_path / "big.mmx"
    write_matrix(np.zeros((10, 1024)), big)
    assert big.stat().st_size == 16 + 4 * 10 * 1024 + 8
    payload = big.read_bytes()[16:-8]
    assert len(payload) == 40960


def test_round_trip_identity_100_random_matrices(tmp_path):
    rng = RngState(42)
    for i in range(100):
        rows = 1 + rng.randint(6)
        cols = 1 + rng.randint(9)
        m = rng.normal((rows, cols)).astype(np.float32).astype(np.float64)
        path = tmp_path / f"m{i}.mmx"
        write_matrix(m, path)
        back = read_matrix(path)
        assert back.shape == (rows, cols)
        assert np.array_equal(back, m)


def test_three_response_participant_file(tmp_path):
    m = RngState(1).normal((3, 1024))
    path = tmp_path / "text.mmx"
    write_embeddings(m, path)
    back = read_embeddings(path)
    assert back.shape == (3, 1024)


def test_truncated_file_names_byte_offset(tmp_path):
    path = tmp_path / "t.mmx"
    write_matrix(np.ones((2, 3)), path)
    blob = path.read_bytes()
    path.write_bytes(blob[:-5])
    with pytest.raises(EmbeddingFormatError, match="byte"):
        read_matrix(path)


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "m.mmx"
    write_matrix(np.ones((1, 1)), path)
    blob = bytearray(path.read_bytes())
    blob[:4] = b"XXXX"
    path.write_bytes(bytes(blob))
    with pytest.raises(EmbeddingFormatError, match="magic"):
        read_matrix(path)


def test_checksum_mismatch_rejected(tmp_path):
    path = tmp_path / "c.mmx"
    write_matrix(np.ones((2, 2)), path)
    blob = bytearray(path.read_bytes())
    blob[20] ^= 0xFF  # flip a payload byte
    path.write_bytes(bytes(blob))
    with pytest.raises(EmbeddingFormatError, match="checksum"):
        read_matrix(path)


def test_dims_payload_disagreement_rejected(tmp_path):
    # declared N*W larger than the payload actually present
    path = tmp_path / "d.mmx"
    write_matrix(np.ones((2, 2)), path)
    blob = bytearray(path.read_bytes())
    blob[4:8] = struct.pack("<I", 5)  # claim 5 rows
    path.write_bytes(bytes(blob))
    with pytest.raises(EmbeddingFormatError):
        read_matrix(path)


def test_nan_payload_rejected(tmp_path):
    path = tmp_path / "n.mmx"
    with pytest.raises(EmbeddingFormatError):
        write_matrix(np.array([[np.nan]]), path)
    # craft one on disk with a valid checksum but NaN payload
    from moodpipe.text_features import fnv1a64
    payload = struct.pack("<f", float("nan"))
    blob = struct.pack("<4sIII", b"MMX1", 1, 1, 0) + payload \
        + struct.pack("<Q", fnv1a64(payload))
    path.write_bytes(blob)
    with pytest.raises(EmbeddingFormatError, match="non-finite"):
        read_matrix(path)


def test_wrong_width_rejected(tmp_path):
    path = tmp_path / "w.mmx"
    write_matrix(np.ones((2, 8)), path)
    with pytest.raises(EmbeddingFormatError, match="width"):
        read_embeddings(path)  # expects 1024


# -- hash_embed -----------------------------------------------------------------


def test_hash_embed_empty_is_zero():
    assert np.array_equal(hash_embed(""), np.zeros(1024))
    assert np.array_equal(hash_embed("   \n\t "), np.zeros(1024))


def test_hash_embed_deterministic():
    a = hash_embed("the rain in spain")
    b = hash_embed("the rain in spain")
    assert np.array_equal(a, b)


def test_hash_embed_bag_of_words_symmetry():
    assert np.allclose(hash_embed("a b"), hash_embed("b a"), atol=0)


def test_hash_embed_token_permutation_invariance_and_norm():
    rng = RngState(9)
    words = ["alpha", "beta", "gamma", "delta", "epsilon"]
    for _ in range(20):
        order = rng.shuffle(list(words))
        v = hash_embed(" ".join(order))
        w = hash_embed(" ".join(words))
        assert np.allclose(v, w, atol=1e-15)
        assert abs(np.linalg.norm(v) - 1.0) < 1e-9
