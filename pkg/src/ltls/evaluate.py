"""Prediction over assigned labels, precision@k, the top-E frequent-label
oracle baseline, and run reports."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

from .inference import viterbi_topk
from .trainer import AssignmentTable
from .trellis import Trellis


@dataclass(frozen=True)
class Prediction:
    """Ranked (label id, score) pairs, scores descending."""

    labels: tuple[int, ...]
    scores: tuple[float, ...]


def predict_topk(trellis: Trellis, weights, table: AssignmentTable, x, k: int,
                 l1_lambda: float = 0.0, use_averaged: bool = True) -> Prediction:
    """Top-k assigned labels for one instance.

    Decodes top-k' paths with k' grown geometrically until k assigned
    paths are found; free (never-assigned) paths are skipped.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    num_assigned = len(table.path_to_label)
    if num_assigned < k:
        raise ValueError(
            "requested top %d but only %d labels are assigned" % (k, num_assigned)
        )
    scores = weights.edge_scores(x, use_averaged=use_averaged, l1_lambda=l1_lambda)
    k_prime = k
    while True:
        k_prime = min(k_prime, trellis.num_labels)
        decoded = viterbi_topk(trellis, scores, k_prime)
        hits = [sp for sp in decoded if sp.index in table.path_to_label]
        if len(hits) >= k or k_prime == trellis.num_labels:
            hits = hits[:k]
            return Prediction(
                labels=tuple(table.path_to_label[sp.index] for sp in hits),
                scores=tuple(sp.score for sp in hits),
            )
        k_prime *= 2


def precision_at_k(predictions, gold_label_sets, k: int) -> float:
    """Mean over examples of |top-k intersect gold| / k."""
    if len(predictions) != len(gold_label_sets):
        raise ValueError(
            "got %d predictions for %d gold sets"
            % (len(predictions), len(gold_label_sets))
        )
    if k < 1:
        raise ValueError("k must be >= 1")
    total = 0.0
    for pred, gold in zip(predictions, gold_label_sets):
        labels = pred.labels if isinstance(pred, Prediction) else pred
        total += len(set(labels[:k]) & set(gold)) / k
    return total / len(predictions)


def oracle_top_frequent(train_label_sets, test_label_sets, num_top: int) -> float:
    """Upper bound of the naive top-E baseline: the fraction of test
    examples whose gold set intersects the E most frequent training
    labels (frequency ties broken toward the smaller label id)."""
    if num_top < 1:
        raise ValueError("num_top must be >= 1")
    counts = Counter()
    for labels in train_label_sets:
        counts.update(labels)
    ranked = sorted(counts, key=lambda lab: (-counts[lab], lab))
    top = set(ranked[:num_top])
    if not test_label_sets:
        return 0.0
    hits = sum(1 for gold in test_label_sets if top & set(gold))
    return hits / len(test_label_sets)


def report(precisions: dict[int, float | None], predict_seconds: float,
           model_bytes: int, num_edges: int) -> dict:
    """Metrics record for one evaluation run."""
    return {
        "precision": {str(k): precisions[k] for k in sorted(precisions)},
        "predict_seconds": predict_seconds,
        "model_bytes": model_bytes,
        "num_edges": num_edges,
    }


def format_report(record: dict) -> str:
    """Machine-readable JSON line followed by a small human table."""
    lines = [json.dumps(record, sort_keys=True)]
    for k, v in sorted(record["precision"].items(), key=lambda kv: int(kv[0])):
        lines.append("precision@%-2s %s" % (k, "n/a" if v is None else "%.4f" % v))
    lines.append("predict time %.3f s" % record["predict_seconds"])
    lines.append("model size   %d bytes" % record["model_bytes"])
    lines.append("edges        %d" % record["num_edges"])
    return "\n".join(lines)
