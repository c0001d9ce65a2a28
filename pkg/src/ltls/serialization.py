"""Binary model files: fixed little-endian layout, byte-identical across
platforms.

Layout: magic "LTLS", u32 version, u64 C/D/E/b, u8 mode, f64 l1 lambda,
length-prefixed label tokens, C assignment entries (u64 path index per
label id, all-ones sentinel for unassigned), then the E x D averaged
weights as row-major float32.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .dataio import LabelDictionary
from .trainer import MODES, AssignmentTable
from .trellis import Trellis, build_trellis

MAGIC = b"LTLS"
VERSION = 1
UNASSIGNED = 0xFFFFFFFFFFFFFFFF


class IntegrityError(RuntimeError):
    """Corrupted, truncated, or inconsistent model file."""


@dataclass
class Model:
    trellis: Trellis
    weights: "WeightMatrix"
    table: AssignmentTable
    label_dict: LabelDictionary
    mode: str
    l1_lambda: float = 0.0

    def prediction_weights(self) -> np.ndarray:
        """Averaged weights at serialization precision (float32)."""
        return self.weights.averaged().astype("<f4")


def save_model(model: Model, path) -> int:
    """Write the model; returns the byte size of the file."""
    t = model.trellis
    dict_tokens = model.label_dict.tokens
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", VERSION)
    out += struct.pack(
        "<QQQQ",
        t.num_labels,
        model.weights.num_features,
        t.num_edges,
        t.num_steps,
    )
    out += struct.pack("<B", MODES.index(model.mode))
    out += struct.pack("<d", model.l1_lambda)
    out += struct.pack("<Q", len(dict_tokens))
    for tok in dict_tokens:
        raw = tok.encode("utf-8")
        out += struct.pack("<I", len(raw))
        out += raw
    assignment = [UNASSIGNED] * t.num_labels
    for label, p in model.table.label_to_path.items():
        assignment[label] = p
    out += struct.pack("<%dQ" % t.num_labels, *assignment)
    out += model.prediction_weights().tobytes()
    with open(path, "wb") as fh:
        fh.write(out)
    return len(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise IntegrityError("model file truncated")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_model(path) -> Model:
    """Read and validate a model file; never returns a partial model."""
    from .edge_model import WeightMatrix

    with open(path, "rb") as fh:
        data = fh.read()
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise IntegrityError("bad magic bytes (not an LTLS model file)")
    (version,) = r.unpack("<I")
    if version != VERSION:
        raise IntegrityError("unsupported model version %d" % version)
    c, d, e, b = r.unpack("<QQQQ")
    (mode_byte,) = r.unpack("<B")
    if mode_byte >= len(MODES):
        raise IntegrityError("unknown mode byte %d" % mode_byte)
    (l1_lambda,) = r.unpack("<d")
    trellis = build_trellis(c)
    if trellis.num_edges != e or trellis.num_steps != b:
        raise IntegrityError(
            "edge/step counts (%d, %d) inconsistent with C=%d" % (e, b, c)
        )
    (ntokens,) = r.unpack("<Q")
    if ntokens > c:
        raise IntegrityError("more label tokens than labels")
    label_dict = LabelDictionary(declared_count=c)
    for _ in range(ntokens):
        (tok_len,) = r.unpack("<I")
        label_dict.intern(r.take(tok_len).decode("utf-8"))
    assignment = r.unpack("<%dQ" % c)
    table = AssignmentTable(c)
    for label, p in enumerate(assignment):
        if p == UNASSIGNED:
            continue
        if p >= c:
            raise IntegrityError("assignment entry %d out of range" % p)
        table.assign(label, p)
    raw = r.take(4 * e * d)
    if r.pos != len(data):
        raise IntegrityError("trailing bytes after weights")
    w32 = np.frombuffer(raw, dtype="<f4").reshape(e, d)
    weights = WeightMatrix(e, d)
    weights.current[:] = w32.astype(np.float64)
    return Model(
        trellis=trellis,
        weights=weights,
        table=table,
        label_dict=label_dict,
        mode=MODES[mode_byte],
        l1_lambda=l1_lambda,
    )
