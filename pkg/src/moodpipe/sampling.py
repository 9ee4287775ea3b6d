"""Class-imbalance handling and training/eval sample construction.

Interview corpora: responses are grouped 10 at a time; the majority class
keeps one randomly chosen group per participant, the minority class draws
extra groups round-robin across participants, never reusing a group, until
the classes are equal.  Three-response corpora: each depressed participant's
responses are rearranged in all 6 orders (audio and text permuted jointly),
enlarging that class 6x.  Resampling and augmentation never touch
evaluation participants: those contribute exactly one sample each.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import MoodpipeError, NoFullGroup
from .nn.rng import RngState

log = logging.getLogger(__name__)

GROUP_SIZE = 10


@dataclass
class Sample:
    """One training/eval unit: S paired (audio, text) response features."""

    participant_id: str
    label: int
    audio: list[np.ndarray]      # S mel matrices, each (T_i, mel bins)
    text: np.ndarray             # (S, 1024)
    provenance: str              # "group:<i>" | "perm:<i>" | "eval"

    @property
    def size(self) -> int:
        return len(self.audio)


@dataclass
class ResponseFeatures:
    """Per-response features for one participant, row-aligned across modalities."""

    participant_id: str
    label: int
    mels: list[np.ndarray]
    text: np.ndarray


# -- core operations -------------------------------------------------------------


def group_bounds(n_rows: int, size: int = GROUP_SIZE) -> list[tuple[int, int]]:
    """Contiguous non-overlapping [start, stop) windows; trailing rows dropped."""
    if n_rows < size:
        raise NoFullGroup(f"{n_rows} rows < group size {size}")
    return [(i * size, (i + 1) * size) for i in range(n_rows // size)]


def group_segments(matrix: np.ndarray, size: int = GROUP_SIZE) -> list[np.ndarray]:
    """Split an (N, W) matrix into floor(N/10) contiguous (10, W) groups."""
    m = np.asarray(matrix)
    return [m[a:b] for a, b in group_bounds(m.shape[0], size)]


def permutation_augment(features: ResponseFeatures) -> list[Sample]:
    """All 3! joint reorderings of a 3-response participant (lexicographic)."""
    if len(features.mels) != 3:
        raise MoodpipeError(
            f"{features.participant_id}: permutation augmentation needs exactly "
            f"3 responses, got {len(features.mels)}")
    out = []
    for i, perm in enumerate(permutations(range(3))):
        out.append(Sample(
            participant_id=features.participant_id,
            label=features.label,
            audio=[features.mels[j] for j in perm],
            text=features.text[list(perm)],
            provenance=f"perm:{i}",
        ))
    return out


def balance_by_resampling(samples_by_class: dict[int, list[Sample]],
                          rng: RngState) -> list[Sample]:
    """Equalize class counts by drawing minority samples without reuse.

    The minority class is the one backed by fewer distinct participants (its
    sample list is a pool that may outnumber the majority's samples).  Draws
    cycle round-robin over minority participants (shuffled), taking one
    unused sample per participant per round, until the classes are equal.
    If the whole pool runs dry first, it recycles with a logged warning.
    The majority class passes through untouched.
    """
    if len(samples_by_class) != 2:
        raise MoodpipeError(f"expected 2 classes, got {sorted(samples_by_class)}")
    c0, c1 = sorted(samples_by_class)
    if len(samples_by_class[c0]) == len(samples_by_class[c1]):
        return list(samples_by_class[c0]) + list(samples_by_class[c1])

    def n_pids(c):
        return len({s.participant_id for s in samples_by_class[c]})

    minority = min((c1, c0), key=lambda c: (n_pids(c), len(samples_by_class[c])))
    majority = c0 if minority == c1 else c1
    pool = samples_by_class[minority]
    if not pool:
        raise MoodpipeError(f"minority class {minority} has no samples to draw from")
    need = len(samples_by_class[majority])

    by_pid: dict[str, list[Sample]] = {}
    for s in pool:
        by_pid.setdefault(s.participant_id, []).append(s)
    pids = sorted(by_pid)

    drawn: list[Sample] = []
    recycled = False
    while len(drawn) < need:
        if recycled:
            log.warning("minority pool (%d samples) smaller than majority (%d); recycling",
                        len(pool), need)
        order = [pids[i] for i in rng.permutation(len(pids))]
        pools = {pid: rng.shuffle(list(by_pid[pid])) for pid in order}
        active = list(order)
        while active and len(drawn) < need:
            still = []
            for pid in active:
                if len(drawn) >= need:
                    break
                drawn.append(pools[pid].pop())
                if pools[pid]:
                    still.append(pid)
            active = still
        recycled = True
    return list(samples_by_class[majority]) + drawn


def select_eval_segment(features: ResponseFeatures, kind: str,
                        rng: RngState | None = None,
                        group_size: int = GROUP_SIZE) -> Sample:
    """The single evaluation sample for one participant.

    Three-response corpora use the original response order; interview corpora
    pick one full group uniformly (NoFullGroup if none exists).
    """
    if kind == "three-response":
        return Sample(features.participant_id, features.label,
                      list(features.mels), features.text, "eval")
    bounds = group_bounds(features.text.shape[0], group_size)
    a, b = bounds[rng.randint(len(bounds))] if len(bounds) > 1 else bounds[0]
    return Sample(features.participant_id, features.label,
                  features.mels[a:b], features.text[a:b], "eval")


# -- sample-set construction ------------------------------------------------------


def _interview_groups(features: ResponseFeatures,
                      group_size: int) -> list[Sample]:
    bounds = group_bounds(features.text.shape[0], group_size)
    return [Sample(features.participant_id, features.label,
                   features.mels[a:b], features.text[a:b], f"group:{i}")
            for i, (a, b) in enumerate(bounds)]


def build_training_samples(features: list[ResponseFeatures], kind: str,
                           rng: RngState, group_size: int = GROUP_SIZE) -> list[Sample]:
    """Balanced/augmented training set per the corpus kind's protocol."""
    if kind == "three-response":
        out: list[Sample] = []
        for f in features:
            if f.label == 1:
                out.extend(permutation_augment(f))
            else:
                out.append(Sample(f.participant_id, f.label, list(f.mels),
                                  f.text, "perm:0"))
        return out

    # interview: majority keeps one group per participant; minority pools all
    by_label: dict[int, list[ResponseFeatures]] = {0: [], 1: []}
    for f in features:
        by_label[f.label].append(f)
    minority = min((1, 0), key=lambda c: (len(by_label[c]), c == 0))
    majority = 1 - minority

    samples_by_class: dict[int, list[Sample]] = {majority: [], minority: []}
    for f in by_label[majority]:
        try:
            groups = _interview_groups(f, group_size)
        except NoFullGroup:
            log.warning("%s: fewer than %d responses, skipped", f.participant_id, group_size)
            continue
        pick = rng.randint(len(groups)) if len(groups) > 1 else 0
        samples_by_class[majority].append(groups[pick])
    for f in by_label[minority]:
        try:
            samples_by_class[minority].extend(_interview_groups(f, group_size))
        except NoFullGroup:
            log.warning("%s: fewer than %d responses, skipped", f.participant_id, group_size)
    return balance_by_resampling(samples_by_class, rng)


def build_eval_samples(features: list[ResponseFeatures], kind: str,
                       rng: RngState, group_size: int = GROUP_SIZE) -> list[Sample]:
    """Exactly one sample per participant; no resampling, no augmentation."""
    return [select_eval_segment(f, kind, rng, group_size) for f in features]


def resample_summary(features: list[ResponseFeatures], kind: str,
                     rng: RngState, group_size: int = GROUP_SIZE) -> dict:
    """JSON-ready report of what balancing does to a training set."""
    pre = {"depressed": sum(1 for f in features if f.label == 1),
           "non_depressed": sum(1 for f in features if f.label == 0)}
    samples = build_training_samples(features, kind, rng, group_size)
    post = {"depressed": sum(1 for s in samples if s.label == 1),
            "non_depressed": sum(1 for s in samples if s.label == 0)}
    summary = {"kind": kind, "participants": pre, "samples": post}
    if kind == "interview":
        groups = {}
        discarded = 0
        for f in features:
            n = f.text.shape[0]
            groups[f.participant_id] = n // group_size
            discarded += n % group_size
        summary["groups_per_participant"] = groups
        summary["discarded_rows"] = discarded
    else:
        summary["augmentation"] = "depressed class x6 (response permutations)"
    return summary
