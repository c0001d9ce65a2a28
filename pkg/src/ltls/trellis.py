"""Trellis DAG construction and the canonical label-index <-> path bijection.

The graph for C labels is a trellis of b = floor(log2 C) steps with two
states per step, a source feeding both states of step 1, an auxiliary
vertex collecting both states of step b, and a sink.  The sink is reached
either through the auxiliary vertex or through a direct "early exit" edge
from the designated (top) state at step j+1 for every set bit j of
C - 2^b.  This yields exactly C distinct source->sink paths.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

#: exit marker for paths that leave through the auxiliary vertex
AUX_EXIT = None

PATH_MATRIX_DEFAULT_CAP = 1 << 16


@dataclass(frozen=True)
class Path:
    """A source->sink path, encoded as (exit point, state-choice bits).

    ``exit_step`` is the step of the early-exit edge taken, or ``None``
    (:data:`AUX_EXIT`) for paths through the auxiliary vertex.  Bit i-1 of
    ``state_bits`` gives the state chosen at step i (0 = top, 1 = bottom);
    for an early exit at step t only steps 1..t-1 are free (the state at
    step t is the designated top state).
    """

    exit_step: int | None
    state_bits: int


@dataclass(frozen=True)
class Trellis:
    """Immutable trellis DAG for ``num_labels`` source->sink paths."""

    num_labels: int
    num_steps: int
    num_edges: int
    edges: tuple[tuple[int, int], ...]
    sink_steps: tuple[int, ...]
    block_offsets: tuple[int, ...]

    # Vertex ids: source = 0, state(t, s) = 2t-1+s for t in 1..b,
    # auxiliary = 2b+1, sink = 2b+2.
    @property
    def source_vertex(self) -> int:
        return 0

    def state_vertex(self, step: int, state: int) -> int:
        return 2 * step - 1 + state

    @property
    def aux_vertex(self) -> int:
        return 2 * self.num_steps + 1

    @property
    def sink_vertex(self) -> int:
        return 2 * self.num_steps + 2

    @property
    def num_vertices(self) -> int:
        return 2 * self.num_steps + 3

    # Edge ids, in emission order: the two source edges, the four
    # transition edges per step boundary, the two aux edges, aux->sink,
    # then one early-exit edge per sink step (ascending).
    def source_edge(self, state: int) -> int:
        return state

    def transition_edge(self, step: int, state: int, next_state: int) -> int:
        return 2 + 4 * (step - 1) + 2 * state + next_state

    def aux_edge(self, state: int) -> int:
        return 4 * self.num_steps - 2 + state

    @property
    def aux_sink_edge(self) -> int:
        return 4 * self.num_steps

    def exit_edge(self, step: int) -> int:
        return 4 * self.num_steps + 1 + self.sink_steps.index(step)


def build_trellis(num_labels: int) -> Trellis:
    """Construct the trellis for ``num_labels`` >= 2 classes."""
    if num_labels < 2:
        raise ValueError("num_labels must be >= 2, got %r" % (num_labels,))
    c = int(num_labels)
    b = c.bit_length() - 1  # floor(log2 C)
    rem = c - (1 << b)
    sink_steps = tuple(j + 1 for j in range(b) if (rem >> j) & 1)

    source = 0
    aux = 2 * b + 1
    sink = 2 * b + 2

    def state(t, s):
        return 2 * t - 1 + s

    edges = []
    edges.append((source, state(1, 0)))
    edges.append((source, state(1, 1)))
    for t in range(1, b):
        for s in (0, 1):
            for s2 in (0, 1):
                edges.append((state(t, s), state(t + 1, s2)))
    edges.append((state(b, 0), aux))
    edges.append((state(b, 1), aux))
    edges.append((aux, sink))
    for t in sink_steps:
        edges.append((state(t, 0), sink))

    offsets = []
    total = 0
    for t in sink_steps:
        offsets.append(total)
        total += 1 << (t - 1)
    offsets.append(total)  # auxiliary block
    total += 1 << b
    assert total == c

    return Trellis(
        num_labels=c,
        num_steps=b,
        num_edges=len(edges),
        edges=tuple(edges),
        sink_steps=sink_steps,
        block_offsets=tuple(offsets),
    )


def _block_size(trellis: Trellis, block: int) -> int:
    if block == len(trellis.sink_steps):
        return 1 << trellis.num_steps
    return 1 << (trellis.sink_steps[block] - 1)


def index_to_path(trellis: Trellis, index: int) -> Path:
    """Canonical path for a label-space index in [0, C)."""
    if not 0 <= index < trellis.num_labels:
        raise ValueError(
            "path index %r out of range [0, %d)" % (index, trellis.num_labels)
        )
    block = bisect_right(trellis.block_offsets, index) - 1
    bits = index - trellis.block_offsets[block]
    if block == len(trellis.sink_steps):
        return Path(exit_step=AUX_EXIT, state_bits=bits)
    return Path(exit_step=trellis.sink_steps[block], state_bits=bits)


def _validate_path(trellis: Trellis, path: Path) -> int:
    """Return the block number of ``path``, raising on an invalid one."""
    if path.exit_step is AUX_EXIT:
        block = len(trellis.sink_steps)
    else:
        if path.exit_step not in trellis.sink_steps:
            raise ValueError(
                "no early exit at step %r (sink steps: %r)"
                % (path.exit_step, trellis.sink_steps)
            )
        block = trellis.sink_steps.index(path.exit_step)
    if not 0 <= path.state_bits < _block_size(trellis, block):
        raise ValueError(
            "state_bits %r out of range for exit %r"
            % (path.state_bits, path.exit_step)
        )
    return block


def path_to_index(trellis: Trellis, path: Path) -> int:
    """Inverse of :func:`index_to_path`."""
    block = _validate_path(trellis, path)
    return trellis.block_offsets[block] + path.state_bits


def path_edges(trellis: Trellis, path: Path) -> list[int]:
    """Edge indices of ``path`` in source->sink order."""
    _validate_path(trellis, path)
    b = trellis.num_steps
    bits = path.state_bits
    last = b if path.exit_step is AUX_EXIT else path.exit_step
    # State at the exit step of an early exit is pinned to top (0); the
    # free bits only cover steps 1..last-1 there, so >> just yields 0.
    states = [(bits >> (i - 1)) & 1 for i in range(1, last + 1)]
    if path.exit_step is not AUX_EXIT:
        states[last - 1] = 0
    out = [trellis.source_edge(states[0])]
    for t in range(1, last):
        out.append(trellis.transition_edge(t, states[t - 1], states[t]))
    if path.exit_step is AUX_EXIT:
        out.append(trellis.aux_edge(states[b - 1]))
        out.append(trellis.aux_sink_edge)
    else:
        out.append(trellis.exit_edge(path.exit_step))
    return out


def materialize_path_matrix(
    trellis: Trellis, cap: int = PATH_MATRIX_DEFAULT_CAP
) -> np.ndarray:
    """Dense C x E binary path-indicator matrix (test/oracle use only).

    Refuses to materialize above ``cap`` paths: the matrix is O(C*E) and
    must never sneak into a production code path.
    """
    if trellis.num_labels > cap:
        raise ValueError(
            "refusing to materialize %d x %d path matrix (cap %d)"
            % (trellis.num_labels, trellis.num_edges, cap)
        )
    m = np.zeros((trellis.num_labels, trellis.num_edges), dtype=np.uint8)
    for i in range(trellis.num_labels):
        m[i, path_edges(trellis, index_to_path(trellis, i))] = 1
    return m
