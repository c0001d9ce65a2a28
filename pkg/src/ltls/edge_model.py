"""Linear per-edge scorers: h_e(x) = w_e . x over sparse inputs.

One weight row per trellis edge.  Training uses SGD with uniform iterate
averaging, implemented lazily per coordinate so each update touches only
the rows in the symmetric difference and the columns in the input's
support.  L1 regularization is applied at prediction time by
soft-thresholding the weights; there is no proximal step during training.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SparseVector:
    """Sparse feature vector: strictly ascending indices, finite values."""

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be 1-d and equal length")
        if idx.size and (np.any(np.diff(idx) <= 0) or idx[0] < 0):
            raise ValueError("feature indices must be non-negative, strictly ascending")
        if not np.all(np.isfinite(val)):
            raise ValueError("feature values must be finite")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_pairs(cls, pairs) -> "SparseVector":
        pairs = sorted(pairs)
        return cls(
            np.array([i for i, _ in pairs], dtype=np.int64),
            np.array([v for _, v in pairs], dtype=np.float64),
        )

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def norm_sq(self) -> float:
        return float(np.dot(self.values, self.values))

    def l2_normalized(self) -> "SparseVector":
        n = np.sqrt(self.norm_sq())
        if n == 0.0:
            return self
        return SparseVector(self.indices, self.values / n)


def soft_threshold(w, lam: float):
    """Shrink-toward-zero operator; elementwise on arrays."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    return np.sign(w) * np.maximum(np.abs(w) - lam, 0.0)


@dataclass
class WeightMatrix:
    """E x D linear edge models with current and lazily averaged weights.

    ``avg_sum`` plus per-coordinate timestamps maintain, without touching
    untouched coordinates, the same running sum a dense implementation
    would get by adding ``current`` into the accumulator after every
    update.  Single-writer: concurrent reads are fine, updates are not.
    """

    num_edges: int
    num_features: int
    current: np.ndarray = field(init=False)
    avg_sum: np.ndarray = field(init=False)
    stamps: np.ndarray = field(init=False)
    update_count: int = field(init=False, default=0)

    def __post_init__(self):
        self.current = np.zeros((self.num_edges, self.num_features))
        self.avg_sum = np.zeros((self.num_edges, self.num_features))
        self.stamps = np.zeros((self.num_edges, self.num_features), dtype=np.int64)

    def _check_features(self, x: SparseVector):
        if x.nnz and x.indices[-1] >= self.num_features:
            raise ValueError(
                "feature index %d out of range (D=%d)"
                % (int(x.indices[-1]), self.num_features)
            )

    def _flush(self, rows, cols):
        """Bring avg_sum for the given block up to the current count."""
        blk = np.ix_(rows, cols)
        pending = self.update_count - self.stamps[blk]
        self.avg_sum[blk] += self.current[blk] * pending
        self.stamps[blk] = self.update_count

    def averaged(self) -> np.ndarray:
        """Uniform average of all post-update iterates (current if none)."""
        if self.update_count == 0:
            return self.current.copy()
        lag = self.update_count - self.stamps
        return (self.avg_sum + self.current * lag) / self.update_count

    def _averaged_cols(self, cols) -> np.ndarray:
        if self.update_count == 0:
            return self.current[:, cols]
        lag = self.update_count - self.stamps[:, cols]
        return (self.avg_sum[:, cols] + self.current[:, cols] * lag) / self.update_count

    def edge_scores(
        self, x: SparseVector, use_averaged: bool = False, l1_lambda: float = 0.0
    ) -> np.ndarray:
        """Per-edge scores w_e . x, optionally soft-thresholding weights."""
        self._check_features(x)
        cols = x.indices
        w = self._averaged_cols(cols) if use_averaged else self.current[:, cols]
        if l1_lambda > 0.0:
            w = soft_threshold(w, l1_lambda)
        return w @ x.values

    def apply_rank_update(self, x: SparseVector, positive_edges, negative_edges,
                          lr: float):
        """+lr*x on edges only in the positive path, -lr*x on edges only
        in the negative path; shared edges untouched."""
        self._check_features(x)
        pos = sorted(set(positive_edges) - set(negative_edges))
        neg = sorted(set(negative_edges) - set(positive_edges))
        rows = pos + neg
        if rows and x.nnz:
            self._flush(rows, x.indices)
            if pos:
                self.current[np.ix_(pos, x.indices)] += lr * x.values
            if neg:
                self.current[np.ix_(neg, x.indices)] -= lr * x.values
        self.update_count += 1

    def apply_marginal_update(self, x: SparseVector, edge_marginals,
                              true_path_edges, lr: float):
        """Cross-entropy gradient step: w_e -= lr*(mu_e - 1[e on true path])*x."""
        self._check_features(x)
        g = np.asarray(edge_marginals, dtype=np.float64).copy()
        g[list(true_path_edges)] -= 1.0
        rows = np.nonzero(g)[0]
        if rows.size and x.nnz:
            self._flush(rows, x.indices)
            self.current[np.ix_(rows, x.indices)] -= lr * np.outer(g[rows], x.values)
        self.update_count += 1
