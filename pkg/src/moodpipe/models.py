"""The three classifiers: GRU over audio embeddings, BiLSTM-with-attention
over sentence embeddings, and the modal-attention fusion head.

All are sklearn-style estimators (fit/predict/predict_proba/get_params) over
the tape in :mod:`moodpipe.nn`.  Class order is [non-depressed, depressed];
``predict_proba(...)[:, 1]`` is the depressed probability.

Fusion follows the two-stage protocol: the unimodal models train first and
freeze; the fusion stage trains only the modal-attention vector and the
fusion FC on the frozen 128-d text / 256-d audio representations, minimizing
one cross entropy per modality (each using its own slice of the FC weight
and the shared bias).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .audio_features import init_netvlad, netvlad_forward_batch
from .errors import TrainingDiverged
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .nn.layers import (
    attention_pool,
    bilstm_forward,
    fc_forward,
    gru_forward,
    init_attention,
    init_bilstm,
    init_fc,
    init_gru,
)
from .nn.optim import Adam
from .nn.rng import RngState
from .nn.tensor import (
    Tensor,
    concat,
    cross_entropy,
    dropout,
    matmul,
    narrow,
    relu,
    softmax,
)
from .sampling import Sample
from .validation import (
    check_binary_labels,
    check_fused_matrix,
    check_mel_samples,
    check_sequence_list,
)

MIN_DELTA = 1e-4  # early-stopping improvement threshold on epoch loss


def _batches(order: np.ndarray, keys: list[int], batch_size: int | None) -> list[list[int]]:
    """Chunk a shuffled index order into batches of equal-length samples."""
    buckets: dict[int, list[int]] = {}
    for idx in order:
        buckets.setdefault(keys[int(idx)], []).append(int(idx))
    out = []
    for key in sorted(buckets):
        members = buckets[key]
        step = batch_size if batch_size else len(members)
        out.extend(members[i:i + step] for i in range(0, len(members), step))
    return out


def _fit_loop(params, forward_loss, n: int, keys: list[int], *, lr: float,
              epochs: int, batch_size: int | None, patience: int,
              rng: RngState) -> list[float]:
    """Adam loop with per-epoch shuffling and training-loss plateau stopping."""
    opt = Adam(params, lr=lr)
    losses: list[float] = []
    best = np.inf
    wait = 0
    for epoch in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for bi, batch in enumerate(_batches(order, keys, batch_size)):
            opt.zero_grad()
            loss = forward_loss(batch, True, rng)
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingDiverged(epoch, bi, value)
            loss.backward()
            opt.step()
            total += value * len(batch)
        epoch_loss = total / n
        losses.append(epoch_loss)
        if epoch_loss < best - MIN_DELTA:
            best = epoch_loss
            wait = 0
        else:
            wait += 1
            if wait >= patience:
                break
    return losses


def _predict_proba(forward, X, keys: list[int], chunk: int = 256) -> np.ndarray:
    """Eval-mode class probabilities, assembled back into input order."""
    out = np.empty((len(X), 2))
    for batch in _batches(np.arange(len(X)), keys, chunk):
        probs, _ = forward(batch, False, None)
        out[batch] = probs.data
    return out


class BiLstmTextClassifier(BaseEstimator, ClassifierMixin):
    """2-layer BiLSTM (hidden per direction) + attention pooling + FC head.

    Input samples are (T, input_dim) matrices of sentence embeddings.  The
    attention context vector (the summed forward/backward outputs weighted by
    softmax scores) is the sample's 128-d text representation.
    """

    def __init__(self, input_dim=1024, hidden=128, layers=2, dropout=0.5,
                 lr=1e-3, epochs=200, batch_size=8, patience=20, seed=0):
        self.input_dim = input_dim
        self.hidden = hidden
        self.layers = layers
        self.dropout = dropout
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.patience = patience
        self.seed = seed

    def _init_params(self, rng: RngState):
        params = init_bilstm(rng, self.input_dim, self.hidden, self.layers)
        params.update(init_attention(rng, self.hidden))
        params.update(init_fc(rng, self.hidden, self.hidden, "fc1"))
        params.update(init_fc(rng, self.hidden, 2, "fc2"))
        return params

    def _forward(self, X, batch, train, rng):
        mats = [X[i] for i in batch]
        steps = [Tensor(np.stack([m[t] for m in mats])) for t in range(mats[0].shape[0])]
        out_f, out_b = bilstm_forward(steps, self.params_, self.hidden, self.layers,
                                      self.dropout, train, rng)
        summed = [f + b for f, b in zip(out_f, out_b)]
        context, _ = attention_pool(summed, self.params_["attn.w"])
        h = dropout(context, self.dropout, rng, train)
        h = relu(fc_forward(h, self.params_["fc1.w"], self.params_["fc1.b"]))
        h = dropout(h, self.dropout, rng, train)
        logits = fc_forward(h, self.params_["fc2.w"], self.params_["fc2.b"])
        return softmax(logits, axis=1), context

    def fit(self, X, y):
        X = check_sequence_list(X, self.input_dim)
        y = check_binary_labels(y, len(X))
        rng = RngState(self.seed)
        self.params_ = self._init_params(rng)
        keys = [x.shape[0] for x in X]

        def loss_fn(batch, train, r):
            probs, _ = self._forward(X, batch, train, r)
            return cross_entropy(narrow(probs, 1, 1, 1), y[batch])

        self.loss_curve_ = _fit_loop(self.params_, loss_fn, len(X), keys,
                                     lr=self.lr, epochs=self.epochs,
                                     batch_size=self.batch_size,
                                     patience=self.patience, rng=rng)
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, X):
        X = check_sequence_list(X, self.input_dim)
        keys = [x.shape[0] for x in X]
        return _predict_proba(lambda b, t, r: self._forward(X, b, t, r), X, keys)

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def representations(self, X) -> np.ndarray:
        """Frozen 128-d attention contexts (eval mode), one row per sample."""
        X = check_sequence_list(X, self.input_dim)
        out = np.empty((len(X), self.hidden))
        for batch in _batches(np.arange(len(X)), [x.shape[0] for x in X], 256):
            _, context = self._forward(X, batch, False, None)
            out[batch] = context.data
        return out

    def save(self, out_dir):
        save_checkpoint(self.params_, out_dir, self.seed,
                        {"estimator": type(self).__name__, "hyper": self.get_params()})

    @classmethod
    def load(cls, in_dir):
        params, manifest = load_checkpoint(in_dir)
        est = cls(**manifest["meta"]["hyper"])
        est.params_ = params
        est.classes_ = np.array([0, 1])
        est.loss_curve_ = []
        return est


class GruAudioClassifier(BaseEstimator, ClassifierMixin):
    """NetVLAD over per-response mel spectrograms, then a 2-layer GRU + FC head.

    Input samples are lists of S (T_i, mel_bins) matrices (one per response).
    NetVLAD parameters train jointly with the GRU on the same tape; the top
    layer's final hidden state is the sample's 256-d audio representation.
    """

    def __init__(self, mel_bins=80, clusters=8, embed_dim=256, hidden=256,
                 layers=2, dropout=0.5, lr=1e-3, epochs=200, batch_size=8,
                 patience=20, seed=0):
        self.mel_bins = mel_bins
        self.clusters = clusters
        self.embed_dim = embed_dim
        self.hidden = hidden
        self.layers = layers
        self.dropout = dropout
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.patience = patience
        self.seed = seed

    def _init_params(self, rng: RngState):
        params = init_netvlad(rng, self.mel_bins, self.clusters, self.embed_dim)
        params.update(init_gru(rng, self.embed_dim, self.hidden, self.layers))
        params.update(init_fc(rng, self.hidden, self.hidden, "fc1"))
        params.update(init_fc(rng, self.hidden, 2, "fc2"))
        return params

    def _forward(self, X, batch, train, rng):
        samples = [X[i] for i in batch]
        n_steps = len(samples[0])
        specs = [sample[s] for s in range(n_steps) for sample in samples]  # step-major
        embs = netvlad_forward_batch(specs, self.params_)
        steps = [narrow(embs, 0, s * len(samples), len(samples)) for s in range(n_steps)]
        hs = gru_forward(steps, self.params_, self.hidden, self.layers,
                         self.dropout, train, rng)
        x_audio = hs[-1]
        h = dropout(x_audio, self.dropout, rng, train)
        h = relu(fc_forward(h, self.params_["fc1.w"], self.params_["fc1.b"]))
        h = dropout(h, self.dropout, rng, train)
        logits = fc_forward(h, self.params_["fc2.w"], self.params_["fc2.b"])
        return softmax(logits, axis=1), x_audio

    def fit(self, X, y):
        X = check_mel_samples(X, self.mel_bins)
        y = check_binary_labels(y, len(X))
        rng = RngState(self.seed)
        self.params_ = self._init_params(rng)
        keys = [len(x) for x in X]

        def loss_fn(batch, train, r):
            probs, _ = self._forward(X, batch, train, r)
            return cross_entropy(narrow(probs, 1, 1, 1), y[batch])

        self.loss_curve_ = _fit_loop(self.params_, loss_fn, len(X), keys,
                                     lr=self.lr, epochs=self.epochs,
                                     batch_size=self.batch_size,
                                     patience=self.patience, rng=rng)
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, X):
        X = check_mel_samples(X, self.mel_bins)
        return _predict_proba(lambda b, t, r: self._forward(X, b, t, r),
                              X, [len(x) for x in X])

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def representations(self, X) -> np.ndarray:
        """Frozen 256-d final hidden states (eval mode), one row per sample."""
        X = check_mel_samples(X, self.mel_bins)
        out = np.empty((len(X), self.hidden))
        for batch in _batches(np.arange(len(X)), [len(x) for x in X], 256):
            _, rep = self._forward(X, batch, False, None)
            out[batch] = rep.data
        return out

    def save(self, out_dir):
        save_checkpoint(self.params_, out_dir, self.seed,
                        {"estimator": type(self).__name__, "hyper": self.get_params()})

    @classmethod
    def load(cls, in_dir):
        params, manifest = load_checkpoint(in_dir)
        est = cls(**manifest["meta"]["hyper"])
        est.params_ = params
        est.classes_ = np.array([0, 1])
        est.loss_curve_ = []
        return est


class ModalFusionClassifier(BaseEstimator, ClassifierMixin):
    """Modal attention over [text | audio] representations + one FC layer.

    Input rows are 384-wide: the first ``text_dim`` columns are the text
    representation, the rest the audio representation.  Training minimizes
    the sum over modalities of the cross entropy of softmax(a_m * x_m w_m + b),
    where w_m is that modality's row-slice of the FC weight and b is shared.
    Inference uses the combined logits of the weighted concatenation.
    """

    def __init__(self, text_dim=128, audio_dim=256, lr=1e-3, epochs=200,
                 batch_size=8, patience=20, seed=0):
        self.text_dim = text_dim
        self.audio_dim = audio_dim
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.patience = patience
        self.seed = seed

    def _init_params(self, rng: RngState):
        params = {"modal_attention": Tensor(np.zeros(2), requires_grad=True)}
        params.update(init_fc(rng, self.text_dim + self.audio_dim, 2, "fusion"))
        return params

    def _split(self, X):
        return X[:, :self.text_dim], X[:, self.text_dim:]

    def _modality_logits(self, X):
        xt, xa = self._split(X)
        a = softmax(self.params_["modal_attention"], axis=-1)
        a_text, a_audio = narrow(a, 0, 0, 1), narrow(a, 0, 1, 1)
        w = self.params_["fusion.w"]
        b = self.params_["fusion.b"]
        w_text = narrow(w, 0, 0, self.text_dim)
        w_audio = narrow(w, 0, self.text_dim, self.audio_dim)
        logits_text = matmul(Tensor(xt), w_text) * a_text + b
        logits_audio = matmul(Tensor(xa), w_audio) * a_audio + b
        return logits_text, logits_audio

    def fit(self, X, y):
        X = check_fused_matrix(X, self.text_dim, self.audio_dim)
        y = check_binary_labels(y, len(X))
        rng = RngState(self.seed)
        self.params_ = self._init_params(rng)

        def loss_fn(batch, train, r):
            lt, la = self._modality_logits(X[batch])
            loss_t = cross_entropy(narrow(softmax(lt, axis=1), 1, 1, 1), y[batch])
            loss_a = cross_entropy(narrow(softmax(la, axis=1), 1, 1, 1), y[batch])
            return loss_t + loss_a

        self.loss_curve_ = _fit_loop(self.params_, loss_fn, len(X), [0] * len(X),
                                     lr=self.lr, epochs=self.epochs,
                                     batch_size=self.batch_size,
                                     patience=self.patience, rng=rng)
        self.classes_ = np.array([0, 1])
        return self

    def decision_logits(self, X) -> np.ndarray:
        """Combined fused logits a_t*(x_t w_t) + a_a*(x_a w_a) + b."""
        X = check_fused_matrix(X, self.text_dim, self.audio_dim)
        lt, la = self._modality_logits(X)
        b = self.params_["fusion.b"]
        return (lt + la - b).data  # b appears in both per-modality logit blocks

    def predict_proba(self, X):
        X = check_fused_matrix(X, self.text_dim, self.audio_dim)
        lt, la = self._modality_logits(X)
        fused = lt + la - self.params_["fusion.b"]
        return softmax(fused, axis=1).data

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def save(self, out_dir):
        save_checkpoint(self.params_, out_dir, self.seed,
                        {"estimator": type(self).__name__, "hyper": self.get_params()})

    @classmethod
    def load(cls, in_dir):
        params, manifest = load_checkpoint(in_dir)
        est = cls(**manifest["meta"]["hyper"])
        est.params_ = params
        est.classes_ = np.array([0, 1])
        est.loss_curve_ = []
        return est


# -- two-stage fusion stack ------------------------------------------------------


@dataclass
class FusionStack:
    """Trained audio + text models plus the fusion head over their outputs."""

    audio: GruAudioClassifier
    text: BiLstmTextClassifier
    fusion: ModalFusionClassifier

    def fused_inputs(self, samples: list[Sample]) -> np.ndarray:
        xt = self.text.representations([s.text for s in samples])
        xa = self.audio.representations([s.audio for s in samples])
        return np.hstack([xt, xa])

    def predict_proba(self, samples: list[Sample], modality: str) -> np.ndarray:
        if modality == "audio":
            return self.audio.predict_proba([s.audio for s in samples])
        if modality == "text":
            return self.text.predict_proba([s.text for s in samples])
        if modality == "fusion":
            return self.fusion.predict_proba(self.fused_inputs(samples))
        raise ValueError(f"unknown modality {modality!r}")


def fit_stack(samples: list[Sample], *, modalities=("audio", "text", "fusion"),
              mel_bins=80, clusters=8, embed_dim=256, lr=1e-3, epochs=200,
              batch_size=8, patience=20, seed=0) -> FusionStack:
    """Train whichever models the requested modalities need.

    Fusion requires both unimodal models; they train first (separately), then
    freeze, and the fusion head trains on their representations.
    """
    y = np.array([s.label for s in samples])
    need_audio = "audio" in modalities or "fusion" in modalities
    need_text = "text" in modalities or "fusion" in modalities
    rng = RngState(seed)

    audio = text = fusion = None
    if need_audio:
        audio = GruAudioClassifier(mel_bins=mel_bins, clusters=clusters,
                                   embed_dim=embed_dim, lr=lr, epochs=epochs,
                                   batch_size=batch_size, patience=patience,
                                   seed=rng.child("audio").seed)
        audio.fit([s.audio for s in samples], y)
    if need_text:
        text = BiLstmTextClassifier(lr=lr, epochs=epochs, batch_size=batch_size,
                                    patience=patience, seed=rng.child("text").seed)
        text.fit([s.text for s in samples], y)
    stack = FusionStack(audio=audio, text=text, fusion=None)
    if "fusion" in modalities:
        fusion = ModalFusionClassifier(lr=lr, epochs=epochs, batch_size=batch_size,
                                       patience=patience,
                                       seed=rng.child("fusion").seed)
        fusion.fit(stack.fused_inputs(samples), y)
        stack.fusion = fusion
    return stack
