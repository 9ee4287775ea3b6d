"""Mel spectrogram extraction and NetVLAD aggregation."""

import numpy as np
import pytest

from moodpipe.audio_features import (
    LOG_FLOOR,
    filterbank_centers,
    hz_to_mel,
    init_netvlad,
    mel_filterbank,
    mel_spectrogram,
    mel_to_hz,
    netvlad_forward,
    netvlad_forward_batch,
)
from moodpipe.errors import ShapeError
from moodpipe.nn import RngState, Tensor, grad_check
from moodpipe.nn.tensor import tsum


def test_frame_count_one_second():
    # floor((16000 - 400)/160) + 1 = 98
    spec = mel_spectrogram(np.zeros(16000))
    assert spec.shape == (98, 80)


def test_all_zero_audio_hits_log_floor():
    spec = mel_spectrogram(np.zeros(16000))
    assert np.allclose(spec, np.log(LOG_FLOOR))


def test_pure_sine_peaks_in_filter_containing_440hz():
    t = np.arange(16000) / 16000.0
    spec = mel_spectrogram(0.5 * np.sin(2 * np.pi * 440.0 * t))
    got = int(np.argmax(spec.mean(axis=0)))

    # independent filter geometry: mel-uniform edges, triangle peak weight at 440
    edges = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(8000.0), 82))
    weights = []
    for j in range(80):
        left, center, right = edges[j], edges[j + 1], edges[j + 2]
        if left <= 440.0 <= center:
            weights.append((440.0 - left) / (center - left))
        elif center < 440.0 <= right:
            weights.append((right - 440.0) / (right - center))
        else:
            weights.append(0.0)
    expected = int(np.argmax(weights))
    assert got == expected
    # and 440 Hz lies inside the winning filter's support
    assert edges[got] <= 440.0 <= edges[got + 2]


def test_mel_no_nan_inf_fuzz_1000():
    rng = RngState(21)
    for _ in range(1000):
        n = 400 + rng.randint(1600)
        scale = 10.0 ** (rng.uniform(-6.0, 2.0))
        wave = scale * rng.normal((n,))
        spec = mel_spectrogram(wave)
        assert np.isfinite(spec).all()


def test_mel_rejects_sub_frame_input():
    with pytest.raises(ShapeError):
        mel_spectrogram(np.zeros(399))


def test_filterbank_rows_cover_band():
    bank = mel_filterbank()
    assert bank.shape == (80, 257)
    assert (bank >= 0).all()
    assert (bank.sum(axis=1) > 0).all()  # every filter has support
    centers = filterbank_centers()
    assert centers.shape == (80,)
    assert (np.diff(centers) > 0).all()


# -- NetVLAD -----------------------------------------------------------------------


def _netvlad_oracle(frames, assign_w, assign_b, centroids, projection, eps=1e-12):
    """Straight-line reimplementation of the three formulas."""
    logits = frames @ assign_w.T + assign_b
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    a = e / e.sum(axis=1, keepdims=True)              # (T, K)
    k, d = centroids.shape
    vlad = np.zeros((k, d))
    for ki in range(k):
        for i in range(frames.shape[0]):
            vlad[ki] += a[i, ki] * (frames[i] - centroids[ki])
    vlad = vlad / np.sqrt((vlad ** 2).sum(axis=1, keepdims=True) + eps ** 2)
    flat = vlad.reshape(1, -1)
    flat = flat / np.sqrt((flat ** 2).sum() + eps ** 2)
    return flat @ projection


def test_netvlad_matches_straight_line_oracle():
    rng = RngState(31)
    params = init_netvlad(rng, n_mels=4, clusters=2, embed_dim=3)
    frames = rng.normal((5, 4))
    got = netvlad_forward(Tensor(frames), params).data
    expected = _netvlad_oracle(frames,
                               params["netvlad.assign_w"].data,
                               params["netvlad.assign_b"].data,
                               params["netvlad.centroids"].data,
                               params["netvlad.projection"].data)
    assert np.abs(got - expected).max() < 1e-12


def test_netvlad_k1_zero_residual_single_frame():
    # K=1: assignment is 1; a frame equal to the centroid leaves V = 0, and the
    # eps-guarded normalizations keep the pre-projection vector at zero
    rng = RngState(32)
    params = init_netvlad(rng, n_mels=4, clusters=1, embed_dim=3)
    frame = params["netvlad.centroids"].data[0].copy()
    out = netvlad_forward(Tensor(frame[None, :]), params).data
    assert np.allclose(out, 0.0)


def test_netvlad_frame_order_invariance():
    rng = RngState(33)
    params = init_netvlad(rng, n_mels=6, clusters=3, embed_dim=5)
    spec = rng.normal((12, 6))
    base = netvlad_forward(Tensor(spec), params).data
    for _ in range(20):
        perm = rng.permutation(12)
        shuffled = netvlad_forward(Tensor(spec[perm]), params).data
        assert np.abs(shuffled - base).max() < 1e-12


def test_netvlad_preprojection_norm_is_unit_or_zero():
    # read the normalized flat vector through an identity projection
    rng = RngState(34)
    k, d = 3, 4
    params = init_netvlad(rng, n_mels=d, clusters=k, embed_dim=k * d)
    params["netvlad.projection"].data[:] = np.eye(k * d)
    frames = rng.normal((7, d))
    flat = netvlad_forward(Tensor(frames), params).data
    assert abs(np.linalg.norm(flat) - 1.0) < 1e-9
    # and the zero-residual case lands exactly at norm 0
    params1 = init_netvlad(rng, n_mels=d, clusters=1, embed_dim=d)
    params1["netvlad.projection"].data[:] = np.eye(d)
    zero = netvlad_forward(Tensor(params1["netvlad.centroids"].data[:1]), params1).data
    assert np.linalg.norm(zero) == 0.0


def test_netvlad_dimension_mismatch():
    params = init_netvlad(RngState(35), n_mels=4, clusters=2, embed_dim=3)
    with pytest.raises(ShapeError):
        netvlad_forward(Tensor(np.zeros((5, 7))), params)


def test_netvlad_batch_equals_per_response():
    rng = RngState(36)
    params = init_netvlad(rng, n_mels=5, clusters=2, embed_dim=4)
    specs = [rng.normal((3 + rng.randint(8), 5)) for _ in range(6)]
    single = np.vstack([netvlad_forward(Tensor(s), params).data for s in specs])
    batch = netvlad_forward_batch(specs, params).data
    assert np.abs(batch - single).max() < 1e-12


@pytest.mark.parametrize("seed", range(3))
def test_netvlad_parameter_gradients(seed):
    rng = RngState(seed + 400)
    params = init_netvlad(rng, n_mels=4, clusters=2, embed_dim=3)
    frames = Tensor(rng.normal((5, 4)))

    def f():
        out = netvlad_forward(frames, params)
        return tsum(out * out)

    assert grad_check(f, params) < 1e-4
