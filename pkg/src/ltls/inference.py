"""Dynamic-programming decoders over a trellis given per-edge scores.

All decoders are pure functions of (trellis, scores) and exact: top-1
Viterbi, top-k list Viterbi (per-vertex k-best list merging along the
topological order), and the forward-backward log-partition function with
per-edge marginals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trellis import AUX_EXIT, Path, Trellis, index_to_path, path_edges


@dataclass(frozen=True)
class ScoredPath:
    path: Path
    index: int
    score: float


def _check_scores(trellis: Trellis, scores) -> np.ndarray:
    h = np.asarray(scores, dtype=np.float64)
    if h.shape != (trellis.num_edges,):
        raise ValueError(
            "expected %d edge scores, got shape %r" % (trellis.num_edges, h.shape)
        )
    if not np.all(np.isfinite(h)):
        raise ValueError("edge scores must be finite")
    return h


def score_path(trellis: Trellis, scores, path: Path) -> float:
    """Path score: sum of the per-edge scores along the path."""
    h = _check_scores(trellis, scores)
    total = 0.0
    for e in path_edges(trellis, path):
        total += h[e]
    return total


def viterbi_topk(trellis: Trellis, scores, k: int) -> list[ScoredPath]:
    """The k highest-scoring paths, scores non-increasing.

    Ties are broken toward the smaller canonical path index.  Per-vertex
    candidate lists carry (score, state-bit prefix); within a merge,
    candidates sharing any future extension keep canonical order because
    later steps occupy more significant bits.
    """
    if not 1 <= k <= trellis.num_labels:
        raise ValueError("k must be in [1, %d], got %r" % (trellis.num_labels, k))
    h = _check_scores(trellis, scores)
    b = trellis.num_steps
    aux_offset = trellis.block_offsets[-1]

    def prune(cands):
        cands.sort(key=lambda c: (-c[0], c[1]))
        del cands[k:]
        return cands

    sink = []
    cur = [[(h[0], 0)], [(h[1], 1)]]  # candidates per state at step 1
    for t in range(1, b + 1):
        if t in trellis.sink_steps:
            e = trellis.exit_edge(t)
            off = trellis.block_offsets[trellis.sink_steps.index(t)]
            for sc, bits in cur[0]:
                sink.append((sc + h[e], off + bits))
        if t == b:
            break
        nxt = [[], []]
        for s in (0, 1):
            for s2 in (0, 1):
                e = trellis.transition_edge(t, s, s2)
                for sc, bits in cur[s]:
                    nxt[s2].append((sc + h[e], bits | (s2 << t)))
        cur = [prune(nxt[0]), prune(nxt[1])]
    aux = []
    for s in (0, 1):
        e = trellis.aux_edge(s)
        for sc, bits in cur[s]:
            aux.append((sc + h[e], bits))
    for sc, bits in prune(aux):
        sink.append((sc + h[trellis.aux_sink_edge], aux_offset + bits))
    prune(sink)
    return [
        ScoredPath(path=index_to_path(trellis, i), index=i, score=sc)
        for sc, i in sink
    ]


def viterbi_top1(trellis: Trellis, scores) -> ScoredPath:
    """The maximum-scoring path (ties toward the smaller canonical index)."""
    return viterbi_topk(trellis, scores, 1)[0]


def forward_log_partition(trellis: Trellis, scores):
    """Log partition function over all paths, plus per-edge marginals.

    Returns ``(log_z, edge_marginals)`` where ``log_z`` is the logsumexp
    of all C path scores and ``edge_marginals[e]`` is the gradient
    d log_z / d h_e, i.e. the probability mass of paths through edge e
    under the Gibbs distribution.  Single forward and backward sweep over
    the topologically ordered edge list, all in log space.
    """
    h = _check_scores(trellis, scores)
    nv = trellis.num_vertices
    alpha = np.full(nv, -np.inf)
    alpha[trellis.source_vertex] = 0.0
    for e, (u, v) in enumerate(trellis.edges):
        alpha[v] = np.logaddexp(alpha[v], alpha[u] + h[e])
    beta = np.full(nv, -np.inf)
    beta[trellis.sink_vertex] = 0.0
    for e in range(trellis.num_edges - 1, -1, -1):
        u, v = trellis.edges[e]
        beta[u] = np.logaddexp(beta[u], beta[v] + h[e])
    log_z = float(alpha[trellis.sink_vertex])
    marginals = np.empty(trellis.num_edges)
    for e, (u, v) in enumerate(trellis.edges):
        marginals[e] = np.exp(alpha[u] + h[e] + beta[v] - log_z)
    np.clip(marginals, 0.0, 1.0, out=marginals)
    return log_z, marginals
