"""Log-time log-space extreme classification: labels live on source->sink
paths of a trellis DAG, decoded with (list) Viterbi and trained online."""

from .trellis import (
    AUX_EXIT,
    Path,
    Trellis,
    build_trellis,
    index_to_path,
    materialize_path_matrix,
    path_edges,
    path_to_index,
)
from .inference import (
    ScoredPath,
    forward_log_partition,
    score_path,
    viterbi_top1,
    viterbi_topk,
)
from .edge_model import SparseVector, WeightMatrix, soft_threshold
from .trainer import (
    AssignmentTable,
    CapacityError,
    TrainConfig,
    TrainState,
    assign_label,
    find_violation_multiclass,
    find_violation_multilabel,
    separation_ranking_loss,
    train_epoch,
)
from .dataio import (
    Dataset,
    Example,
    FormatError,
    LabelDictionary,
    ParseError,
    load_dataset,
    parse_libsvm_line,
)
from .evaluate import (
    Prediction,
    oracle_top_frequent,
    precision_at_k,
    predict_topk,
    report,
)
from .serialization import IntegrityError, Model, load_model, save_model

__all__ = [
    "AUX_EXIT",
    "AssignmentTable",
    "CapacityError",
    "Dataset",
    "Example",
    "FormatError",
    "IntegrityError",
    "LabelDictionary",
    "Model",
    "ParseError",
    "Path",
    "Prediction",
    "ScoredPath",
    "SparseVector",
    "TrainConfig",
    "TrainState",
    "Trellis",
    "WeightMatrix",
    "assign_label",
    "build_trellis",
    "find_violation_multiclass",
    "find_violation_multilabel",
    "forward_log_partition",
    "index_to_path",
    "load_dataset",
    "load_model",
    "materialize_path_matrix",
    "oracle_top_frequent",
    "parse_libsvm_line",
    "path_edges",
    "path_to_index",
    "precision_at_k",
    "predict_topk",
    "report",
    "save_model",
    "score_path",
    "separation_ranking_loss",
    "soft_threshold",
    "train_epoch",
    "viterbi_top1",
    "viterbi_topk",
]
