"""Online training: separation ranking loss over paths, loss localization
via top-k decoding, and the dynamic label-path assignment policy.

Labels are bound to paths on first encounter: decode the top m paths for
the instance and take the highest-ranked free one, falling back to a
uniformly random free path.  Training updates only the edge models in the
symmetric difference of the selected positive and negative paths (rank
modes), or the full cross-entropy gradient (softmax mode).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .edge_model import SparseVector, WeightMatrix
from .inference import ScoredPath, score_path, viterbi_topk
from .trellis import Path, Trellis, index_to_path, path_edges, path_to_index

MODE_MULTICLASS_RANK = "multiclass-rank"
MODE_MULTILABEL_RANK = "multilabel-rank"
MODE_MULTICLASS_SOFTMAX = "multiclass-softmax"
MODES = (MODE_MULTICLASS_RANK, MODE_MULTILABEL_RANK, MODE_MULTICLASS_SOFTMAX)


class CapacityError(RuntimeError):
    """More distinct labels encountered than there are paths."""


class AssignmentTable:
    """Bijection-in-progress between label ids and path indices.

    The free pool is kept as an array with a position index, giving O(1)
    uniform random draw and O(1) removal.
    """

    def __init__(self, num_paths: int):
        self.num_paths = num_paths
        self.label_to_path: dict[int, int] = {}
        self.path_to_label: dict[int, int] = {}
        self._free = list(range(num_paths))
        self._free_pos = list(range(num_paths))  # path -> slot in _free, -1 if used

    @property
    def num_free(self) -> int:
        return len(self._free)

    def is_free(self, path_index: int) -> bool:
        return self._free_pos[path_index] >= 0

    def assign(self, label: int, path_index: int):
        if label in self.label_to_path:
            raise ValueError("label %r already assigned" % (label,))
        if not self.is_free(path_index):
            raise ValueError("path %r already assigned" % (path_index,))
        pos = self._free_pos[path_index]
        last = self._free[-1]
        self._free[pos] = last
        self._free_pos[last] = pos
        self._free.pop()
        self._free_pos[path_index] = -1
        self.label_to_path[label] = path_index
        self.path_to_label[path_index] = label

    def random_free(self, rng: random.Random) -> int:
        if not self._free:
            raise CapacityError(
                "all %d paths are assigned; cannot place another label"
                % self.num_paths
            )
        return self._free[rng.randrange(len(self._free))]

    def audit(self):
        """Check the bijection invariants; raises AssertionError on breakage."""
        assert len(self.label_to_path) == len(self.path_to_label)
        for lab, p in self.label_to_path.items():
            assert self.path_to_label[p] == lab
        assert len(self._free) + len(self.path_to_label) == self.num_paths
        for pos, p in enumerate(self._free):
            assert self._free_pos[p] == pos
            assert p not in self.path_to_label


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 10
    beam_m: int | None = None  # default ceil(log2 C), resolved per trellis
    mode: str = MODE_MULTICLASS_RANK
    l1_lambda: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.beam_m is not None and self.beam_m < 1:
            raise ValueError("beam_m must be >= 1")
        if self.mode not in MODES:
            raise ValueError("mode must be one of %r" % (MODES,))
        if self.l1_lambda < 0:
            raise ValueError("l1_lambda must be >= 0")

    def resolve_beam(self, num_labels: int) -> int:
        if self.beam_m is not None:
            return min(self.beam_m, num_labels)
        return min(max(1, math.ceil(math.log2(num_labels))), num_labels)


@dataclass
class TrainState:
    trellis: Trellis
    weights: WeightMatrix
    table: AssignmentTable


@dataclass
class EpochStats:
    num_examples: int = 0
    num_violations: int = 0
    total_loss: float = 0.0

    @property
    def mean_loss(self) -> float:
        return self.total_loss / self.num_examples if self.num_examples else 0.0


def assign_label(table: AssignmentTable, trellis: Trellis, scores, label: int,
                 rng: random.Random, beam_m: int) -> int:
    """Bind an unseen label to the highest-ranked free path among the top
    beam_m decoded for its instance, else a uniformly random free path."""
    if label in table.label_to_path:
        raise ValueError("label %r already assigned" % (label,))
    if table.num_free == 0:
        raise CapacityError(
            "all %d paths are assigned; cannot place label %r"
            % (table.num_paths, label)
        )
    for cand in viterbi_topk(trellis, scores, min(beam_m, trellis.num_labels)):
        if table.is_free(cand.index):
            table.assign(label, cand.index)
            return cand.index
    path_index = table.random_free(rng)
    table.assign(label, path_index)
    return path_index


def separation_ranking_loss(lowest_positive: float, highest_negative: float) -> float:
    return max(0.0, 1.0 + highest_negative - lowest_positive)


def find_violation_multiclass(trellis: Trellis, scores, true_path: Path):
    """Loss plus the (positive, negative) pair; negative is the best
    scoring path other than the true one, found from the top 2."""
    true_index = path_to_index(trellis, true_path)
    f_pos = score_path(trellis, scores, true_path)
    positive = ScoredPath(path=true_path, index=true_index, score=f_pos)
    top = viterbi_topk(trellis, scores, min(2, trellis.num_labels))
    negative = next(sp for sp in top if sp.index != true_index)
    loss = separation_ranking_loss(f_pos, negative.score)
    return loss, positive, negative


def find_violation_multilabel(trellis: Trellis, scores, positive_paths):
    """Loss plus (lowest-scoring positive, highest-scoring negative).

    The negative is guaranteed to appear among the top |P|+1 paths.
    """
    scored = [
        ScoredPath(
            path=p,
            index=path_to_index(trellis, p),
            score=score_path(trellis, scores, p),
        )
        for p in positive_paths
    ]
    pos_indices = {sp.index for sp in scored}
    if not pos_indices or len(pos_indices) >= trellis.num_labels:
        raise ValueError("need 1 <= |positive paths| < C")
    positive = min(scored, key=lambda sp: (sp.score, sp.index))
    top = viterbi_topk(trellis, scores, min(len(pos_indices) + 1, trellis.num_labels))
    negative = next(sp for sp in top if sp.index not in pos_indices)
    loss = separation_ranking_loss(positive.score, negative.score)
    return loss, positive, negative


def train_epoch(state: TrainState, examples, config: TrainConfig,
                rng: random.Random) -> EpochStats:
    """One sequential pass of SGD over the example stream."""
    from .inference import forward_log_partition  # avoid cycle at import time

    trellis, weights, table = state.trellis, state.weights, state.table
    beam = config.resolve_beam(trellis.num_labels)
    lr = config.learning_rate
    stats = EpochStats()
    for ex in examples:
        if not ex.labels:
            continue
        if config.mode != MODE_MULTILABEL_RANK and len(ex.labels) != 1:
            raise ValueError(
                "multiclass modes require exactly one label per example"
            )
        x = ex.features
        scores = weights.edge_scores(x)
        for label in sorted(ex.labels):
            if label not in table.label_to_path:
                assign_label(table, trellis, scores, label, rng, beam)
        stats.num_examples += 1
        if config.mode == MODE_MULTICLASS_SOFTMAX:
            (label,) = ex.labels
            true_path = index_to_path(trellis, table.label_to_path[label])
            log_z, marginals = forward_log_partition(trellis, scores)
            true_edges = path_edges(trellis, true_path)
            loss = log_z - score_path(trellis, scores, true_path)
            weights.apply_marginal_update(x, marginals, true_edges, lr)
            stats.total_loss += loss
            if loss > 0:
                stats.num_violations += 1
            continue
        if config.mode == MODE_MULTICLASS_RANK:
            (label,) = ex.labels
            true_path = index_to_path(trellis, table.label_to_path[label])
            loss, pos, neg = find_violation_multiclass(trellis, scores, true_path)
        else:
            positives = [
                index_to_path(trellis, table.label_to_path[lab])
                for lab in sorted(ex.labels)
            ]
            loss, pos, neg = find_violation_multilabel(trellis, scores, positives)
        stats.total_loss += loss
        if loss > 0:
            stats.num_violations += 1
            weights.apply_rank_update(
                x,
                path_edges(trellis, pos.path),
                path_edges(trellis, neg.path),
                lr,
            )
    return stats
