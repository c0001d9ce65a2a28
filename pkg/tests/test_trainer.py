import random

import numpy as np
import pytest

from ltls import (
    AssignmentTable,
    CapacityError,
    Example,
    SparseVector,
    TrainConfig,
    TrainState,
    WeightMatrix,
    assign_label,
    build_trellis,
    find_violation_multiclass,
    find_violation_multilabel,
    index_to_path,
    score_path,
    separation_ranking_loss,
    train_epoch,
)
from ltls.trainer import (
    MODE_MULTICLASS_RANK,
    MODE_MULTICLASS_SOFTMAX,
    MODE_MULTILABEL_RANK,
)
from conftest import brute_force_path_scores

# C=5 edge scores giving path scores (3, 2.5, 1, 0.5, 0.2): the early-exit
# edge carries 3, the step-1 transitions carry the auxiliary-path scores.
C5_SCORES = np.array([0.0, 0.0, 2.5, 0.5, 1.0, 0.2, 0.0, 0.0, 0.0, 3.0])


def sv(*pairs):
    return SparseVector.from_pairs(pairs)


def example(labels, *pairs):
    return Example(features=SparseVector.from_pairs(pairs), labels=frozenset(labels))


class TestAssignmentTable:
    def test_assign_and_audit(self):
        t = AssignmentTable(5)
        t.assign(7, 2)
        t.assign(9, 0)
        t.audit()
        assert t.label_to_path == {7: 2, 9: 0}
        assert t.path_to_label == {2: 7, 0: 9}
        assert t.num_free == 3
        assert not t.is_free(2) and t.is_free(1)

    def test_double_assignment_rejected(self):
        t = AssignmentTable(3)
        t.assign(0, 1)
        with pytest.raises(ValueError):
            t.assign(0, 2)
        with pytest.raises(ValueError):
            t.assign(5, 1)

    def test_random_free_capacity_error(self):
        t = AssignmentTable(2)
        t.assign(0, 0)
        t.assign(1, 1)
        with pytest.raises(CapacityError):
            t.random_free(random.Random(0))

    def test_random_free_is_seed_deterministic(self):
        t = AssignmentTable(10)
        t.assign(0, 3)
        draws = [t.random_free(random.Random(42)) for _ in range(5)]
        assert len(set(draws)) == 1
        assert t.is_free(draws[0])


class TestAssignLabel:
    def test_empty_table_gets_top1(self, rng):
        t = build_trellis(22)
        table = AssignmentTable(22)
        h = rng.randn(t.num_edges)
        best = max(
            range(22),
            key=lambda i: (score_path(t, h, index_to_path(t, i)), -i),
        )
        got = assign_label(table, t, h, label=0, rng=random.Random(0), beam_m=5)
        assert got == best
        table.audit()

    def test_fallback_random_free_path(self):
        t = build_trellis(5)
        table = AssignmentTable(5)
        h = np.zeros(t.num_edges)
        # occupy the top-2 decoded paths (0 and 1 under zero scores)
        table.assign(100, 0)
        table.assign(101, 1)
        got = assign_label(table, t, h, label=102, rng=random.Random(7), beam_m=2)
        assert got in (2, 3, 4)
        again = AssignmentTable(5)
        again.assign(100, 0)
        again.assign(101, 1)
        assert (
            assign_label(again, t, h, label=102, rng=random.Random(7), beam_m=2)
            == got
        )

    def test_sequential_fill_becomes_bijection(self, rng):
        t = build_trellis(5)
        table = AssignmentTable(5)
        r = random.Random(3)
        for label in range(5):
            h = rng.randn(t.num_edges)
            assign_label(table, t, h, label, r, beam_m=2)
            table.audit()
        assert table.num_free == 0
        assert sorted(table.label_to_path) == [0, 1, 2, 3, 4]
        with pytest.raises(CapacityError):
            assign_label(table, t, np.zeros(t.num_edges), 5, r, beam_m=2)


class TestSeparationRankingLoss:
    def test_examples(self):
        assert separation_ranking_loss(2.0, 0.5) == 0.0
        assert separation_ranking_loss(2.0, 1.5) == pytest.approx(0.5)
        for x in (-3.0, 0.0, 17.5):
            assert separation_ranking_loss(x, x) == 1.0


class TestFindViolationMulticlass:
    def test_satisfied_margin(self, rng):
        t = build_trellis(4)
        h = np.zeros(t.num_edges)
        h[2] = 5.0  # top->top transition: only path 0 leads, by > 1
        loss, pos, neg = find_violation_multiclass(t, h, index_to_path(t, 0))
        assert loss == 0.0
        assert pos.index == 0

    def test_c4_instance(self):
        from test_inference import C4_SCORES

        t = build_trellis(4)
        true_path = index_to_path(t, 0)  # the 0.9-scoring path
        loss, pos, neg = find_violation_multiclass(t, C4_SCORES, true_path)
        assert neg.index == 2
        assert neg.score == pytest.approx(1.3)
        assert loss == pytest.approx(1.4)

    def test_all_zero_tie(self):
        t = build_trellis(22)
        for true_idx in (0, 5, 13):
            loss, pos, neg = find_violation_multiclass(
                t, np.zeros(t.num_edges), index_to_path(t, true_idx)
            )
            assert loss == 1.0
            assert neg.index == (1 if true_idx == 0 else 0)


class TestFindViolationMultilabel:
    def test_satisfied_margin(self):
        t = build_trellis(4)
        h = np.zeros(t.num_edges)
        h[0] = 5.0  # paths 0 and 2 (through the top source edge) lead
        loss, _, _ = find_violation_multilabel(
            t, h, [index_to_path(t, 0), index_to_path(t, 2)]
        )
        assert loss == 0.0

    def test_c5_instance(self):
        t = build_trellis(5)
        positives = [index_to_path(t, 0), index_to_path(t, 2)]
        loss, pos, neg = find_violation_multilabel(t, C5_SCORES, positives)
        assert pos.index == 2 and pos.score == pytest.approx(1.0)
        assert neg.index == 1 and neg.score == pytest.approx(2.5)
        assert loss == pytest.approx(2.5)

    def test_degenerate_positive_sets_rejected(self):
        t = build_trellis(4)
        with pytest.raises(ValueError):
            find_violation_multilabel(t, np.zeros(t.num_edges), [])
        with pytest.raises(ValueError):
            find_violation_multilabel(
                t, np.zeros(t.num_edges), [index_to_path(t, i) for i in range(4)]
            )

    def test_negative_matches_brute_force(self, rng):
        t = build_trellis(22)
        for _ in range(200):
            h = rng.randn(t.num_edges)
            npos = rng.randint(1, 6)
            pos_idx = set(int(i) for i in rng.choice(22, size=npos, replace=False))
            loss, pos, neg = find_violation_multilabel(
                t, h, [index_to_path(t, i) for i in sorted(pos_idx)]
            )
            scores = brute_force_path_scores(t, h)
            best_neg = max(
                (i for i in range(22) if i not in pos_idx),
                key=lambda i: (scores[i], -i),
            )
            worst_pos = min(pos_idx, key=lambda i: (scores[i], i))
            assert neg.index == best_neg
            assert neg.index not in pos_idx
            assert pos.index == worst_pos
            assert loss == pytest.approx(
                max(0.0, 1.0 + scores[best_neg] - scores[worst_pos]), abs=1e-12
            )


def fresh_state(c, d):
    t = build_trellis(c)
    return TrainState(
        trellis=t,
        weights=WeightMatrix(t.num_edges, d),
        table=AssignmentTable(c),
    )


class TestTrainEpoch:
    def test_empty_dataset(self):
        state = fresh_state(4, 3)
        stats = train_epoch(state, [], TrainConfig(), random.Random(0))
        assert stats.num_examples == 0
        assert stats.num_violations == 0
        assert stats.mean_loss == 0.0
        assert state.weights.update_count == 0
        assert state.table.num_free == 4

    def test_single_example_becomes_separable(self):
        state = fresh_state(8, 4)
        data = [example([0], (0, 1.0), (2, -1.0))]
        cfg = TrainConfig(mode=MODE_MULTICLASS_RANK, learning_rate=0.5)
        r = random.Random(0)
        last = None
        for _ in range(30):
            last = train_epoch(state, data, cfg, r)
        assert last.num_violations == 0
        assert last.mean_loss == 0.0

    def test_separable_two_class_toy(self):
        data = [
            example([0], (0, 1.0)),
            example([1], (0, -1.0)),
            example([0], (0, 0.9)),
            example([1], (0, -1.1)),
        ]
        state = fresh_state(2, 1)
        cfg = TrainConfig(mode=MODE_MULTICLASS_RANK, epochs=5)
        r = random.Random(0)
        for _ in range(cfg.epochs):
            train_epoch(state, data, cfg, r)
        from ltls import predict_topk

        correct = 0
        for ex in data:
            pred = predict_topk(
                state.trellis, state.weights, state.table, ex.features, 1
            )
            correct += pred.labels[0] in ex.labels
        assert correct == len(data)

    def test_multilabel_mode_trains(self):
        data = [
            example([0, 1], (0, 1.0)),
            example([2], (1, 1.0)),
            example([0, 1], (0, 0.8)),
            example([], (2, 1.0)),  # empty label set: skipped
        ]
        state = fresh_state(5, 3)
        cfg = TrainConfig(mode=MODE_MULTILABEL_RANK)
        r = random.Random(0)
        stats = train_epoch(state, data, cfg, r)
        assert stats.num_examples == 3
        state.table.audit()
        assert set(state.table.label_to_path) == {0, 1, 2}

    def test_softmax_mode_loss_nonnegative_and_decreasing(self):
        data = [example([0], (0, 1.0)), example([1], (0, -1.0))]
        state = fresh_state(2, 1)
        cfg = TrainConfig(mode=MODE_MULTICLASS_SOFTMAX, learning_rate=0.2)
        r = random.Random(0)
        losses = [train_epoch(state, data, cfg, r).mean_loss for _ in range(20)]
        assert all(l >= 0 for l in losses)
        assert losses[-1] < losses[0]

    def test_margin_increase_after_violation(self, rng):
        from ltls import path_edges

        state = fresh_state(22, 6)
        t = state.trellis
        state.weights.current[:] = rng.randn(t.num_edges, 6)
        x = sv((0, 1.0), (3, -2.0), (5, 0.5))
        scores = state.weights.edge_scores(x)
        loss, pos, neg = find_violation_multiclass(t, scores, index_to_path(t, 9))
        assert loss > 0
        pe, ne = path_edges(t, pos.path), path_edges(t, neg.path)
        state.weights.apply_rank_update(x, pe, ne, lr=0.1)
        new_scores = state.weights.edge_scores(x)
        old_margin = pos.score - neg.score
        new_margin = score_path(t, new_scores, pos.path) - score_path(
            t, new_scores, neg.path
        )
        expected = 0.1 * x.norm_sq() * len(set(pe) ^ set(ne))
        assert new_margin - old_margin == pytest.approx(expected, rel=1e-9)

    def test_bitwise_determinism(self):
        def run():
            data = [
                example([i % 7], ((i * 3) % 5, 1.0 + 0.1 * i), ((i + 2) % 5 + 5, -0.5))
                for i in range(40)
            ]
            state = fresh_state(7, 10)
            cfg = TrainConfig(mode=MODE_MULTICLASS_RANK, rng_seed=11)
            r = random.Random(cfg.rng_seed)
            for _ in range(3):
                train_epoch(state, data, cfg, r)
            return state

        a, b = run(), run()
        assert np.array_equal(a.weights.current, b.weights.current)
        assert np.array_equal(a.weights.averaged(), b.weights.averaged())
        assert a.table.label_to_path == b.table.label_to_path

    def test_multiclass_rejects_multilabel_examples(self):
        state = fresh_state(4, 2)
        with pytest.raises(ValueError):
            train_epoch(
                state,
                [example([0, 1], (0, 1.0))],
                TrainConfig(mode=MODE_MULTICLASS_RANK),
                random.Random(0),
            )


class TestTrainConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            TrainConfig(epochs=0)
        with pytest.raises(ValueError):
            TrainConfig(beam_m=0)
        with pytest.raises(ValueError):
            TrainConfig(mode="bogus")
        with pytest.raises(ValueError):
            TrainConfig(l1_lambda=-1.0)

    def test_default_beam_is_log_c(self):
        assert TrainConfig().resolve_beam(105) == 7
        assert TrainConfig().resolve_beam(2) == 1
        assert TrainConfig(beam_m=50).resolve_beam(22) == 22
