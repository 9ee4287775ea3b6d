"""moodpipe: multimodal depression screening from interview audio and text.

Pipeline stages: load/validate a corpus, featurize (log-mel spectrograms and
sentence embeddings), balance the training classes, train a GRU audio model,
a BiLSTM-with-attention text model, and a modal-attention fusion head, then
evaluate with stratified k-fold cross-validation.
"""

from .audio_features import MelSpectrogram, mel_spectrogram, netvlad_forward
from .corpus import (
    Corpus,
    Participant,
    Response,
    label_from_phq8,
    label_from_sds,
    load_corpus,
    preprocess_audio,
)
from .evaluation import ConfusionMatrix, kfold_split, metrics, run_crossval
from .models import (
    BiLstmTextClassifier,
    FusionStack,
    GruAudioClassifier,
    ModalFusionClassifier,
    fit_stack,
)
from .sampling import (
    Sample,
    balance_by_resampling,
    build_eval_samples,
    build_training_samples,
    group_segments,
    permutation_augment,
)
from .synth import SynthSpec, generate
from .text_features import hash_embed, read_embeddings, write_embeddings

__version__ = "0.1.0"

__all__ = [
    "BiLstmTextClassifier", "ConfusionMatrix", "Corpus", "FusionStack",
    "GruAudioClassifier", "MelSpectrogram", "ModalFusionClassifier",
    "Participant", "Response", "Sample", "SynthSpec", "balance_by_resampling",
    "build_eval_samples", "build_training_samples", "fit_stack", "generate",
    "group_segments", "hash_embed", "kfold_split", "label_from_phq8",
    "label_from_sds", "load_corpus", "mel_spectrogram", "metrics",
    "netvlad_forward", "permutation_augment", "preprocess_audio",
    "read_embeddings", "run_crossval", "write_embeddings",
]
