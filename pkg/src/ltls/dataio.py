"""Dataset ingestion: libsvm-style multiclass files and header-prefixed
extreme-classification multilabel files, streamed as Example records.

External label tokens are interned into dense internal ids in
first-appearance order, so the mapping is deterministic given file order.
Epochs re-read the file; two passes yield identical sequences.
"""

from __future__ import annotations

from dataclasses import dataclass

from .edge_model import SparseVector


class ParseError(ValueError):
    """Malformed line; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = "line %d: %s" % (line_number, message)
        super().__init__(message)
        self.line_number = line_number


class FormatError(ValueError):
    """File-level inconsistency (header/content mismatch, bad header)."""


class LabelDictionary:
    """External label token -> dense internal id, in first-appearance order.

    ``declared_count`` (from a dataset header) bounds integer label
    tokens: values in [0, declared_count] are accepted so both 0- and
    1-based files work, anything beyond is a format error.
    """

    def __init__(self, declared_count: int | None = None):
        self.declared_count = declared_count
        self.token_to_id: dict[str, int] = {}
        self.tokens: list[str] = []

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def num_labels(self) -> int:
        return self.declared_count if self.declared_count is not None else len(self)

    def intern(self, token: str) -> int:
        existing = self.token_to_id.get(token)
        if existing is not None:
            return existing
        if self.declared_count is not None:
            try:
                value = int(token)
            except ValueError:
                value = None
            if value is not None and not 0 <= value <= self.declared_count:
                raise FormatError(
                    "label %r outside declared label count %d"
                    % (token, self.declared_count)
                )
            if len(self.tokens) >= self.declared_count:
                raise FormatError(
                    "more distinct labels than declared count %d"
                    % self.declared_count
                )
        new_id = len(self.tokens)
        self.token_to_id[token] = new_id
        self.tokens.append(token)
        return new_id

    def lookup(self, token: str) -> int | None:
        return self.token_to_id.get(token)


@dataclass(frozen=True)
class Example:
    features: SparseVector
    labels: frozenset[int]


def parse_libsvm_line(
    line: str,
    label_dict: LabelDictionary,
    multilabel: bool = False,
    one_based_features: bool = False,
    line_number: int | None = None,
    num_features: int | None = None,
) -> Example:
    """Parse one data line into an Example.

    Multiclass: the leading token is the single label.  Multilabel: the
    leading token is a comma-separated label list, empty when the line
    starts with whitespace.
    """
    if not line.strip() or line.lstrip().startswith("#"):
        raise ParseError("empty or comment line", line_number)
    leading_blank = line[0].isspace()
    tokens = line.split()
    labels: set[int] = set()
    if multilabel:
        if leading_blank:
            feature_tokens = tokens
        else:
            for tok in tokens[0].split(","):
                if tok:
                    labels.add(label_dict.intern(tok))
            feature_tokens = tokens[1:]
    else:
        if ":" in tokens[0]:
            raise ParseError("missing label token", line_number)
        labels.add(label_dict.intern(tokens[0]))
        feature_tokens = tokens[1:]

    pairs = []
    seen = set()
    for tok in feature_tokens:
        idx_s, sep, val_s = tok.partition(":")
        if not sep:
            raise ParseError("malformed feature pair %r" % tok, line_number)
        try:
            idx = int(idx_s)
            val = float(val_s)
        except ValueError:
            raise ParseError("non-numeric feature pair %r" % tok, line_number)
        if one_based_features:
            idx -= 1
        if idx < 0:
            raise ParseError("feature index %d out of range" % idx, line_number)
        if num_features is not None and idx >= num_features:
            raise FormatError(
                "feature index %d >= declared feature count %d"
                % (idx, num_features)
            )
        if idx in seen:
            raise ParseError("duplicate feature index %d" % idx, line_number)
        seen.add(idx)
        pairs.append((idx, val))
    return Example(features=SparseVector.from_pairs(pairs), labels=frozenset(labels))


def format_example(example: Example, label_dict: LabelDictionary,
                   multilabel: bool = False) -> str:
    """Inverse of parse_libsvm_line (0-based features)."""
    feats = " ".join(
        "%d:%.17g" % (i, v)
        for i, v in zip(example.features.indices, example.features.values)
    )
    labels = ",".join(label_dict.tokens[l] for l in sorted(example.labels))
    if multilabel:
        return (labels + " " + feats) if labels else (" " + feats)
    (only,) = example.labels
    return label_dict.tokens[only] + " " + feats


class Dataset:
    """Streaming view of a dataset file, re-readable across epochs.

    The optional first-line header "N D C" (extreme-classification
    repository convention) fixes the feature and label counts; without it
    they are inferred from the data.  The label dictionary is built on a
    first pass so ids are stable regardless of later iteration.
    """

    def __init__(self, path, multilabel: bool = False, has_header: bool = False,
                 one_based_features: bool = False, normalize: bool = False,
                 label_dict: LabelDictionary | None = None):
        self.path = path
        self.multilabel = multilabel
        self.has_header = has_header
        self.one_based_features = one_based_features
        self.normalize = normalize
        self.declared_examples = None
        self.num_features = None
        self.label_dict = label_dict
        self._scan()

    def _read_header(self, line: str):
        parts = line.split()
        if len(parts) != 3:
            raise FormatError("header must be 'N D C', got %r" % line.strip())
        try:
            n, d, c = (int(p) for p in parts)
        except ValueError:
            raise FormatError("non-integer header fields in %r" % line.strip())
        if n < 0 or d < 1 or c < 1:
            raise FormatError("non-positive header fields in %r" % line.strip())
        return n, d, c

    def _scan(self):
        max_index = -1
        with open(self.path, "r", encoding="utf-8") as fh:
            first = True
            line_number = 0
            for line in fh:
                line_number += 1
                if first and self.has_header:
                    first = False
                    n, d, c = self._read_header(line)
                    self.declared_examples = n
                    self.num_features = d
                    if self.label_dict is None:
                        self.label_dict = LabelDictionary(declared_count=c)
                    continue
                first = False
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                if self.label_dict is None:
                    self.label_dict = LabelDictionary()
                ex = parse_libsvm_line(
                    line,
                    self.label_dict,
                    multilabel=self.multilabel,
                    one_based_features=self.one_based_features,
                    line_number=line_number,
                    num_features=self.num_features,
                )
                if ex.features.nnz:
                    max_index = max(max_index, int(ex.features.indices[-1]))
        if self.label_dict is None:
            self.label_dict = LabelDictionary()
        if self.num_features is None:
            self.num_features = max_index + 1

    @property
    def num_labels(self) -> int:
        return self.label_dict.num_labels

    def __iter__(self):
        with open(self.path, "r", encoding="utf-8") as fh:
            first = True
            line_number = 0
            for line in fh:
                line_number += 1
                if first and self.has_header:
                    first = False
                    continue
                first = False
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                ex = parse_libsvm_line(
                    line,
                    self.label_dict,
                    multilabel=self.multilabel,
                    one_based_features=self.one_based_features,
                    line_number=line_number,
                    num_features=self.num_features,
                )
                if self.normalize:
                    ex = Example(ex.features.l2_normalized(), ex.labels)
                yield ex


def load_dataset(path, multilabel: bool = False, has_header: bool = False,
                 one_based_features: bool = False, normalize: bool = False,
                 label_dict: LabelDictionary | None = None) -> Dataset:
    """Open a dataset file and build its label dictionary (single pass)."""
    return Dataset(
        path,
        multilabel=multilabel,
        has_header=has_header,
        one_based_features=one_based_features,
        normalize=normalize,
        label_dict=label_dict,
    )
