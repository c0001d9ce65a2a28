"""Command-line entry points: train, predict, evaluate, baseline.

Every failure exits nonzero with a single-line, machine-parsable
"<category>: message" on stderr (usage errors exit 2 via argparse).
"""

from __future__ import annotations

import argparse
import os
import random
import sys
import time

from .dataio import FormatError, ParseError, load_dataset
from .evaluate import format_report, oracle_top_frequent, precision_at_k, predict_topk, report
from .serialization import IntegrityError, Model, load_model, save_model
from .trainer import (
    MODE_MULTICLASS_RANK,
    MODE_MULTICLASS_SOFTMAX,
    MODE_MULTILABEL_RANK,
    AssignmentTable,
    CapacityError,
    TrainConfig,
    TrainState,
    train_epoch,
)
from .edge_model import WeightMatrix
from .trellis import build_trellis

_MODE_FLAGS = {
    "multiclass": MODE_MULTICLASS_RANK,
    "multilabel": MODE_MULTILABEL_RANK,
    "softmax": MODE_MULTICLASS_SOFTMAX,
}


def _positive_int(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1, got %d" % n)
    return n


def _positive_float(value):
    x = float(value)
    if x <= 0:
        raise argparse.ArgumentTypeError("must be > 0, got %g" % x)
    return x


def _nonneg_float(value):
    x = float(value)
    if x < 0:
        raise argparse.ArgumentTypeError("must be >= 0, got %g" % x)
    return x


def _add_data_flags(p):
    p.add_argument("--format", choices=["libsvm", "xmlc"], default="libsvm",
                   help="libsvm: plain, no header; xmlc: 'N D C' header line")
    p.add_argument("--one-based", action="store_true",
                   help="feature indices in the file are 1-based")
    p.add_argument("--normalize", action="store_true",
                   help="L2-normalize each instance's features")


def _open_dataset(path, mode, args, label_dict=None):
    return load_dataset(
        path,
        multilabel=(mode == MODE_MULTILABEL_RANK),
        has_header=(args.format == "xmlc"),
        one_based_features=args.one_based,
        normalize=args.normalize,
        label_dict=label_dict,
    )


def _eval_threads() -> int:
    # LTLS_THREADS caps evaluation parallelism; the evaluator is currently
    # sequential, so any cap >= 1 is honored trivially.
    raw = os.environ.get("LTLS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def cmd_train(args) -> int:
    mode = _MODE_FLAGS[args.mode]
    data = _open_dataset(args.data, mode, args)
    examples = list(data)
    num_labels = data.num_labels
    if num_labels < 2:
        raise FormatError("need at least 2 distinct labels, got %d" % num_labels)
    trellis = build_trellis(num_labels)
    state = TrainState(
        trellis=trellis,
        weights=WeightMatrix(trellis.num_edges, data.num_features),
        table=AssignmentTable(num_labels),
    )
    config = TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        beam_m=args.beam_m,
        mode=mode,
        l1_lambda=args.l1,
        rng_seed=args.seed,
    )
    rng = random.Random(config.rng_seed)
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        stats = train_epoch(state, examples, config, rng)
        print(
            "epoch %d: examples=%d violations=%d mean_loss=%.6f (%.2fs)"
            % (epoch, stats.num_examples, stats.num_violations,
               stats.mean_loss, time.perf_counter() - t0),
            file=sys.stderr,
        )
    model = Model(
        trellis=trellis,
        weights=state.weights,
        table=state.table,
        label_dict=data.label_dict,
        mode=mode,
        l1_lambda=config.l1_lambda,
    )
    size = save_model(model, args.model_out)
    print("saved %s (%d bytes)" % (args.model_out, size), file=sys.stderr)
    return 0


def _predictions(model, data, k):
    preds = []
    golds = []
    for ex in data:
        preds.append(
            predict_topk(
                model.trellis, model.weights, model.table, ex.features, k,
                l1_lambda=model.l1_lambda,
            )
        )
        golds.append(ex.labels)
    return preds, golds


def cmd_predict(args) -> int:
    model = load_model(args.model)
    data = _open_dataset(args.data, model.mode, args, label_dict=model.label_dict)
    num_assigned = len(model.table.path_to_label)
    if args.topk > num_assigned:
        raise ValueError(
            "requested top %d but the model has only %d assigned labels"
            % (args.topk, num_assigned)
        )
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for ex in data:
            pred = predict_topk(
                model.trellis, model.weights, model.table, ex.features,
                args.topk, l1_lambda=model.l1_lambda,
            )
            out.write(
                "\t".join(
                    "%s:%g" % (model.label_dict.tokens[lab], sc)
                    for lab, sc in zip(pred.labels, pred.scores)
                )
                + "\n"
            )
    finally:
        if args.out:
            out.close()
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    data = _open_dataset(args.data, model.mode, args, label_dict=model.label_dict)
    num_assigned = len(model.table.path_to_label)
    _eval_threads()
    t0 = time.perf_counter()
    ks = sorted({args.k, 1, 3, 5})
    k_max = min(max(ks), num_assigned)
    preds, golds = _predictions(model, data, max(1, k_max))
    elapsed = time.perf_counter() - t0
    precisions = {}
    for k in ks:
        if not preds or k > num_assigned:
            precisions[k] = None
        else:
            precisions[k] = precision_at_k(preds, golds, k)
    record = report(
        precisions,
        predict_seconds=elapsed if preds else 0.0,
        model_bytes=os.path.getsize(args.model),
        num_edges=model.trellis.num_edges,
    )
    text = format_report(record)
    print(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return 0


def cmd_baseline(args) -> int:
    mode = _MODE_FLAGS[args.mode]
    train = _open_dataset(args.train, mode, args)
    test = _open_dataset(args.test, mode, args, label_dict=train.label_dict)
    trellis = build_trellis(max(2, train.num_labels))
    num_edges = trellis.num_edges
    oracle = oracle_top_frequent(
        [ex.labels for ex in train], [ex.labels for ex in test], num_edges
    )
    print("edges %d" % num_edges)
    print("oracle@1 %.4f" % oracle)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ltls",
        description="Log-time log-space extreme classification over a trellis DAG",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model with online SGD")
    p.add_argument("--data", required=True)
    p.add_argument("--model-out", required=True)
    p.add_argument("--mode", choices=sorted(_MODE_FLAGS), default="multiclass")
    p.add_argument("--epochs", type=_positive_int, default=10)
    p.add_argument("--lr", type=_positive_float, default=0.1)
    p.add_argument("--l1", type=_nonneg_float, default=0.0)
    p.add_argument("--beam-m", type=_positive_int, default=None,
                   help="assignment beam size (default: ceil(log2 C))")
    p.add_argument("--seed", type=int, default=0)
    _add_data_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="write top-k label predictions")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--topk", type=_positive_int, default=1)
    p.add_argument("--out", default=None)
    _add_data_flags(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="precision@k report on a test set")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=_positive_int, default=5)
    p.add_argument("--out", default=None)
    _add_data_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("baseline", help="top-E frequent-label oracle baseline")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--mode", choices=sorted(_MODE_FLAGS), default="multiclass")
    _add_data_flags(p)
    p.set_defaults(func=cmd_baseline)
    return parser


_ERROR_CATEGORIES = (
    (IntegrityError, "integrity-error"),
    (CapacityError, "capacity-error"),
    (ParseError, "format-error"),
    (FormatError, "format-error"),
    (OSError, "io-error"),
    (ValueError, "usage-error"),
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except tuple(exc for exc, _ in _ERROR_CATEGORIES) as err:
        for exc_type, category in _ERROR_CATEGORIES:
            if isinstance(err, exc_type):
                print("%s: %s" % (category, err), file=sys.stderr)
                break
        return 1


if __name__ == "__main__":
    sys.exit(main())
