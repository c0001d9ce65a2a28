import numpy as np
import pytest

from ltls import materialize_path_matrix


def enumerate_dag_paths(trellis):
    """All source->sink paths as edge-index tuples, by DFS over the raw
    edge list.  Independent of the canonical Path encoding."""
    out_edges = {}
    for e, (u, v) in enumerate(trellis.edges):
        out_edges.setdefault(u, []).append((e, v))
    sink = trellis.sink_vertex
    paths = []
    stack = [(trellis.source_vertex, ())]
    while stack:
        vertex, prefix = stack.pop()
        if vertex == sink:
            paths.append(prefix)
            continue
        for e, v in out_edges.get(vertex, []):
            stack.append((v, prefix + (e,)))
    return paths


def brute_force_path_scores(trellis, h):
    """Score of every canonical path by left-to-right summation over the
    materialized path matrix's support."""
    m = materialize_path_matrix(trellis)
    scores = []
    for row in m:
        total = 0.0
        for e in np.nonzero(row)[0]:
            total += h[e]
        scores.append(total)
    return scores


def brute_force_topk(trellis, h, k):
    """(index, score) of the k best paths, ties toward the smaller index."""
    scores = brute_force_path_scores(trellis, h)
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return [(i, scores[i]) for i in order[:k]]


@pytest.fixture
def rng():
    return np.random.RandomState(12345)
