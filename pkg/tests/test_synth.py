"""Synthetic corpus generation."""

import filecmp
from pathlib import Path

import pytest

from moodpipe.corpus import load_corpus
from moodpipe.synth import SynthSpec, generate, low_band_stump_separates


def _tree_bytes(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_minimal_two_participant_corpus_validates(tmp_path):
    generate(SynthSpec(1, 1, seed=5), tmp_path / "c")
    corpus = load_corpus(tmp_path / "c", "three-response")
    assert corpus.ok
    assert corpus.count_labels() == (1, 1)


def test_class_ratio_30_132(tmp_path):
    generate(SynthSpec(30, 132, seed=1), tmp_path / "c")
    corpus = load_corpus(tmp_path / "c", "three-response", load_audio=False)
    assert corpus.count_labels() == (30, 132)
    assert len(corpus.participants) == 162


def test_same_spec_twice_is_byte_identical(tmp_path):
    generate(SynthSpec(2, 3, seed=9), tmp_path / "a")
    generate(SynthSpec(2, 3, seed=9), tmp_path / "b")
    a = _tree_bytes(tmp_path / "a")
    b = _tree_bytes(tmp_path / "b")
    assert a.keys() == b.keys()
    for name in a:
        assert a[name] == b[name], name


def test_different_seed_differs(tmp_path):
    generate(SynthSpec(2, 3, seed=9), tmp_path / "a")
    generate(SynthSpec(2, 3, seed=10), tmp_path / "b")
    assert _tree_bytes(tmp_path / "a") != _tree_bytes(tmp_path / "b")


def test_separable_corpus_admits_stump_on_low_band(tmp_path):
    generate(SynthSpec(3, 5, seed=2), tmp_path / "c")
    assert low_band_stump_separates(tmp_path / "c")


def test_interview_kind_and_phq8(tmp_path):
    generate(SynthSpec(2, 3, kind="interview", responses=12,
                       questionnaire="phq8", seed=3), tmp_path / "c")
    corpus = load_corpus(tmp_path / "c", "interview")
    assert corpus.ok
    assert corpus.count_labels() == (2, 3)
    assert all(len(p.responses) == 12 for p in corpus.participants)
    assert all(p.questionnaire == "phq8" for p in corpus.participants)


def test_spec_validation():
    with pytest.raises(ValueError):
        SynthSpec(0, 5)
    with pytest.raises(ValueError):
        SynthSpec(1, 1, kind="interview", responses=12, noise_sigma=-1)
    with pytest.raises(ValueError):
        SynthSpec(1, 1, kind="three-response", responses=5)
    with pytest.raises(ValueError):
        SynthSpec(1, 1, kind="nope")
