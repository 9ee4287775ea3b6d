"""Audio features: log-Mel spectrograms and trainable NetVLAD aggregation.

A response's variable-length spectrogram is soft-assigned to K clusters,
residual-aggregated, normalized, and linearly projected to a fixed 256-wide
embedding.  NetVLAD parameters are trainable and sit on the same tape as the
downstream GRU classifier.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import ShapeError
from .nn.rng import RngState
from .nn.tensor import (
    Tensor,
    as_tensor,
    bmm,
    matmul,
    reshape,
    softmax,
    sqrt,
    swapaxes,
    transpose,
    tsum,
)

LOG_FLOOR = 1e-10
NORM_EPS = 1e-12

DEFAULT_MEL_BINS = 80
DEFAULT_FRAME_MS = 25
DEFAULT_HOP_MS = 10
DEFAULT_FFT = 512
SAMPLE_RATE = 16000


def hz_to_mel(f):
    """HTK mel scale."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int = DEFAULT_MEL_BINS, n_fft: int = DEFAULT_FFT,
                   sample_rate: int = SAMPLE_RATE, f_min: float = 0.0,
                   f_max: float | None = None) -> np.ndarray:
    """Triangular mel filters as an (n_mels, n_fft//2 + 1) matrix."""
    if f_max is None:
        f_max = sample_rate / 2.0
    edges = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))
    fft_hz = np.fft.rfftfreq(n_fft, 1.0 / sample_rate)
    bank = np.zeros((n_mels, fft_hz.size))
    for j in range(n_mels):
        left, center, right = edges[j], edges[j + 1], edges[j + 2]
        up = (fft_hz - left) / (center - left)
        down = (right - fft_hz) / (right - center)
        bank[j] = np.maximum(0.0, np.minimum(up, down))
    return bank


def filterbank_centers(n_mels: int = DEFAULT_MEL_BINS, sample_rate: int = SAMPLE_RATE,
                       f_min: float = 0.0, f_max: float | None = None) -> np.ndarray:
    """Center frequency (Hz) of each triangular filter."""
    if f_max is None:
        f_max = sample_rate / 2.0
    edges = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))
    return edges[1:-1]


def frame_count(n_samples: int, frame: int = 400, hop: int = 160) -> int:
    return (n_samples - frame) // hop + 1


def mel_spectrogram(waveform: np.ndarray, sample_rate: int = SAMPLE_RATE,
                    n_mels: int = DEFAULT_MEL_BINS, frame_ms: int = DEFAULT_FRAME_MS,
                    hop_ms: int = DEFAULT_HOP_MS, n_fft: int = DEFAULT_FFT) -> np.ndarray:
    """Log mel spectrogram: (frames, n_mels) of log(power + 1e-10).

    Framing is a periodic Hann window of frame_ms with hop_ms hop, no padding;
    T = floor((S - frame)/hop) + 1.
    """
    x = np.asarray(waveform, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"waveform must be mono 1-D, got shape {x.shape}")
    frame = int(sample_rate * frame_ms / 1000)
    hop = int(sample_rate * hop_ms / 1000)
    if x.size < frame:
        raise ShapeError(f"waveform shorter than one frame ({x.size} < {frame} samples)")
    n_frames = frame_count(x.size, frame, hop)
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(frame) / frame)
    idx = np.arange(frame)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = x[idx] * window
    power = np.abs(np.fft.rfft(frames, n=n_fft, axis=1)) ** 2
    bank = mel_filterbank(n_mels, n_fft, sample_rate)
    return np.log(power @ bank.T + LOG_FLOOR)


class MelSpectrogram(BaseEstimator, TransformerMixin):
    """Stateless transformer mapping waveforms to log-mel matrices."""

    def __init__(self, n_mels=DEFAULT_MEL_BINS, frame_ms=DEFAULT_FRAME_MS,
                 hop_ms=DEFAULT_HOP_MS, n_fft=DEFAULT_FFT, sample_rate=SAMPLE_RATE):
        self.n_mels = n_mels
        self.frame_ms = frame_ms
        self.hop_ms = hop_ms
        self.n_fft = n_fft
        self.sample_rate = sample_rate

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return [mel_spectrogram(x, self.sample_rate, self.n_mels,
                                self.frame_ms, self.hop_ms, self.n_fft) for x in X]


# -- NetVLAD -------------------------------------------------------------------


def init_netvlad(rng: RngState, n_mels: int = DEFAULT_MEL_BINS, clusters: int = 8,
                 embed_dim: int = 256, prefix: str = "netvlad") -> dict[str, Tensor]:
    """All four blocks init from uniform(-0.1, 0.1), in this draw order:
    assignment weights (K, D), assignment bias (K,), centroids (K, D),
    projection (K*D, E)."""
    if clusters < 1:
        raise ShapeError("clusters must be >= 1")
    return {
        f"{prefix}.assign_w": Tensor(rng.uniform(-0.1, 0.1, (clusters, n_mels)),
                                     requires_grad=True),
        f"{prefix}.assign_b": Tensor(rng.uniform(-0.1, 0.1, (clusters,)),
                                     requires_grad=True),
        f"{prefix}.centroids": Tensor(rng.uniform(-0.1, 0.1, (clusters, n_mels)),
                                      requires_grad=True),
        f"{prefix}.projection": Tensor(rng.uniform(-0.1, 0.1, (clusters * n_mels, embed_dim)),
                                       requires_grad=True),
    }


def netvlad_forward(frames, params: dict[str, Tensor], prefix: str = "netvlad") -> Tensor:
    """Aggregate (T, D) frames into a (1, E) embedding.

    a_k(x_i) = softmax_k(assign_w_k . x_i + b_k)
    V_k      = sum_i a_k(x_i) (x_i - c_k)
    then per-cluster L2 normalization, flatten, global L2 normalization, and
    linear projection.  Both normalizations divide by sqrt(|v|^2 + eps^2)
    with eps = 1e-12, so a zero residual maps to the zero vector.
    """
    x = as_tensor(frames)
    assign_w = params[f"{prefix}.assign_w"]
    centroids = params[f"{prefix}.centroids"]
    projection = params[f"{prefix}.projection"]
    k, d = assign_w.shape
    if x.data.ndim != 2 or x.shape[1] != d:
        raise ShapeError(f"frames shape {x.shape} incompatible with {k}x{d} clusters")

    logits = matmul(x, transpose(assign_w)) + params[f"{prefix}.assign_b"]  # (T, K)
    assign = softmax(logits, axis=1)
    mass = reshape(tsum(assign, axis=0), (k, 1))                 # (K, 1)
    vlad = matmul(transpose(assign), x) - mass * centroids       # (K, D)
    row_norm = sqrt(tsum(vlad * vlad, axis=1, keepdims=True) + NORM_EPS ** 2)
    flat = reshape(vlad / row_norm, (1, k * d))
    global_norm = sqrt(tsum(flat * flat, axis=1, keepdims=True) + NORM_EPS ** 2)
    return matmul(flat / global_norm, projection)                # (1, E)


def netvlad_forward_batch(specs: list[np.ndarray], params: dict[str, Tensor],
                          prefix: str = "netvlad") -> Tensor:
    """NetVLAD over many spectrograms at once, one embedding row each.

    Equivalent to stacking ``netvlad_forward`` outputs (padded frames carry
    zero assignment mass, so they contribute nothing); batching keeps the tape
    small when hundreds of responses share one training step.
    """
    assign_w = params[f"{prefix}.assign_w"]
    centroids = params[f"{prefix}.centroids"]
    projection = params[f"{prefix}.projection"]
    k, d = assign_w.shape
    n = len(specs)
    t_max = max(s.shape[0] for s in specs)
    frames = np.zeros((n, t_max, d))
    mask = np.zeros((n * t_max, 1))
    for i, s in enumerate(specs):
        if s.ndim != 2 or s.shape[1] != d:
            raise ShapeError(f"spec shape {s.shape} incompatible with {k}x{d} clusters")
        frames[i, :s.shape[0]] = s
        mask[i * t_max: i * t_max + s.shape[0]] = 1.0
    flat_frames = Tensor(frames.reshape(n * t_max, d))

    logits = matmul(flat_frames, transpose(assign_w)) + params[f"{prefix}.assign_b"]
    assign = softmax(logits, axis=1) * Tensor(mask)            # (N*T, K)
    assign3 = reshape(assign, (n, t_max, k))
    vlad = bmm(swapaxes(assign3, 1, 2), Tensor(frames))        # (N, K, D)
    mass = reshape(tsum(assign3, axis=1), (n, k, 1))
    vlad = vlad - mass * reshape(centroids, (1, k, d))
    row_norm = sqrt(tsum(vlad * vlad, axis=2, keepdims=True) + NORM_EPS ** 2)
    flat = reshape(vlad / row_norm, (n, k * d))
    global_norm = sqrt(tsum(flat * flat, axis=1, keepdims=True) + NORM_EPS ** 2)
    return matmul(flat / global_norm, projection)              # (N, E)


def netvlad_embed(specs: list[np.ndarray], params: dict[str, Tensor],
                  prefix: str = "netvlad") -> np.ndarray:
    """Fixed-parameter embeddings for a list of spectrograms (no gradients)."""
    return netvlad_forward_batch(specs, params, prefix).data.copy()
