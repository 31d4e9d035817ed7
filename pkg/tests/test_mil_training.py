import numpy as np
import pytest

from bwsdetect.errors import TrainingDataError
from bwsdetect.evalrun import SynthConfig, generate_vector_bags
from bwsdetect.mil import (
    Bag,
    ModelWeights,
    TrainConfig,
    infer_labeling,
    loss_augmented_score,
    objective,
    predict_bag,
    standard_mil,
    train,
)
from bwsdetect.mil.training import _BatchEngine, _GenericEngine

from conftest import UNIT_W, score_bag

SMIL = standard_mil()


class TestLossAugmentedScore:
    def test_correct_side_dominates(self):
        assert loss_augmented_score(UNIT_W, SMIL, score_bag([5, -1, 2]),
                                    +1) == pytest.approx(8.0)

    def test_wrong_side_dominates(self):
        assert loss_augmented_score(UNIT_W, SMIL, score_bag([-10, -10]),
                                    +1) == pytest.approx(21.0)

    def test_zero_weights_hinge_is_one(self):
        w = ModelWeights(np.zeros(3))
        bag = Bag(np.array([[4.0, 5.0, 6.0]]))
        assert loss_augmented_score(w, SMIL, bag, -1) == pytest.approx(1.0)


class TestObjective:
    def test_zero_weights_counts_bags(self):
        w = ModelWeights(np.zeros(2))
        bags = [Bag(np.array([[3.0, 1.0]]), label=+1, bag_id="a"),
                Bag(np.array([[1.0, 1.0], [0.0, 2.0]]), label=-1, bag_id="b")]
        assert objective(w, SMIL, bags, lam=1.0) == pytest.approx(2.0)

    def test_hand_worked_value(self):
        w = ModelWeights(np.array([1.0, 1.0]))  # ||w||^2 = 2
        bag = Bag(np.array([[-10.0, 0.0], [-10.0, 0.0]]), label=+1)
        assert objective(w, SMIL, [bag], lam=1.0) == pytest.approx(22.0)

    def test_margin_met_contributes_nothing(self):
        w = ModelWeights(np.array([2.0]))
        bag = score_bag([3.0])
        bag.label = +1
        # L = max(0 + 6, 1 - 6) = 6 = R
        loss = loss_augmented_score(w, SMIL, bag, +1)
        _, restricted = infer_labeling(w, SMIL, bag, +1)
        assert loss - restricted == 0.0

    def test_unlabeled_bag_rejected(self):
        with pytest.raises(ValueError):
            objective(UNIT_W, SMIL, [score_bag([1.0])], lam=1.0)

    def test_hinge_nonnegative_random(self, rng):
        for _ in range(50):
            m = int(rng.integers(1, 9))
            d = int(rng.integers(1, 5))
            bag = Bag(rng.normal(size=(m, d)),
                      label=int(rng.choice([-1, 1])))
            w = ModelWeights(rng.normal(size=d))
            loss = loss_augmented_score(w, SMIL, bag, bag.label)
            _, restricted = infer_labeling(w, SMIL, bag, bag.label)
            assert loss - restricted >= -1e-12


def separable_bags(seed=11, n=50):
    return [s.bag for s in generate_vector_bags(
        SynthConfig(n_pos=n, n_neg=n, seed=seed))]


class TestTrain:
    @pytest.mark.parametrize("solver", ["subgradient", "cutting_plane"])
    def test_separable_set_reaches_full_accuracy(self, solver):
        bags = separable_bags()
        weights, trace = train(bags, TrainConfig(inner_solver=solver, seed=11))
        acc = np.mean([predict_bag(weights, SMIL, b)[0] == b.label
                       for b in bags])
        assert acc == 1.0
        diffs = np.diff(trace.objectives)
        assert np.all(diffs <= 1e-9)

    def test_contradictory_bags_plateau(self):
        feats = np.array([[1.0, 0.5], [0.2, -0.3], [0.9, 0.1]])
        bags = [Bag(feats.copy(), label=+1, bag_id="p"),
                Bag(feats.copy(), label=-1, bag_id="n")]
        weights, trace = train(bags, TrainConfig(seed=0))
        # irreducible ambiguity: at least 1 of hinge per bag remains
        assert trace.objectives[-1] >= 2.0 - 1e-9
        assert np.all(np.diff(trace.objectives) <= 1e-9)

    def test_single_class_rejected(self):
        bags = [Bag(np.ones((2, 2)), label=+1, bag_id=str(i))
                for i in range(3)]
        with pytest.raises(TrainingDataError, match="3 positive / 0"):
            train(bags, TrainConfig())

    def test_unlabeled_rejected(self):
        bags = [Bag(np.ones((1, 2)), label=+1), Bag(np.ones((1, 2)))]
        with pytest.raises(ValueError):
            train(bags, TrainConfig())

    def test_trace_objective_matches_reference(self):
        bags = separable_bags(seed=5, n=10)
        cfg = TrainConfig(seed=5, max_outer_iters=3,
                          outer_tolerance=1e-12)
        weights, trace = train(bags, cfg)
        ref = objective(weights, SMIL, bags, cfg.lam)
        assert trace.objectives[-1] == pytest.approx(ref, abs=1e-9)

    def test_deterministic_for_fixed_inputs(self):
        bags = separable_bags(seed=2, n=15)
        w1, t1 = train(bags, TrainConfig(seed=2))
        w2, t2 = train(bags, TrainConfig(seed=2))
        assert np.array_equal(w1.w, w2.w)
        assert t1.objectives == t2.objectives

    def test_bias_column_learns_offset(self):
        # all instances share x > 0; only the bias can separate the classes
        rng = np.random.default_rng(4)
        bags = []
        for i in range(20):
            m = int(rng.integers(2, 5))
            lo, hi = (2.0, 3.0) if i % 2 == 0 else (0.5, 1.0)
            feats = rng.uniform(lo, hi, size=(m, 1))
            bags.append(Bag(feats, label=+1 if i % 2 == 0 else -1,
                            bag_id=str(i)))
        weights, _ = train(bags, TrainConfig(bias_included=True, seed=4))
        assert weights.bias_included
        assert weights.w.shape == (2,)
        augmented = [Bag(np.hstack([b.features, np.ones((b.m, 1))]),
                         label=b.label) for b in bags]
        acc = np.mean([predict_bag(weights, SMIL, b)[0] == b.label
                       for b in augmented])
        assert acc == 1.0


class TestEngineAgreement:
    """The batched standard-MIL path must match the per-bag generic path."""

    def test_linearize_and_loss_augmented_agree(self, rng):
        bags = [Bag(rng.normal(size=(int(rng.integers(1, 7)), 3)),
                    label=int(rng.choice([-1, 1])), bag_id=str(i))
                for i in range(12)]
        if not any(b.label == +1 for b in bags):
            bags[0].label = +1
        if not any(b.label == -1 for b in bags):
            bags[1].label = -1
        batch = _BatchEngine(bags, bias=False)
        generic = _GenericEngine(bags, SMIL, bias=False)
        for _ in range(5):
            w = rng.normal(size=3)
            p1, c1 = batch.linearize(w)
            p2, c2 = generic.linearize(w)
            np.testing.assert_allclose(p1, p2, atol=1e-12)
            np.testing.assert_allclose(c1, c2, atol=1e-12)
            v1, q1, _ = batch.loss_augmented(w)
            v2, q2, _ = generic.loss_augmented(w)
            np.testing.assert_allclose(v1, v2, atol=1e-9)
            np.testing.assert_allclose(q1, q2, atol=1e-9)
            np.testing.assert_allclose(batch.restricted(w),
                                       generic.restricted(w), atol=1e-9)

    def test_custom_model_uses_generic_path(self):
        # a "custom" copy of the standard assumption trains the same way
        from bwsdetect.mil.types import (CardinalityModel, FORBIDDEN)
        custom = CardinalityModel(
            "custom",
            lambda p, n: FORBIDDEN if p == 0 else 0.0,
            lambda p, n: 0.0 if p == 0 else FORBIDDEN)
        bags = separable_bags(seed=8, n=8)
        w_std, t_std = train(bags, TrainConfig(seed=8))
        w_cus, t_cus = train(bags, TrainConfig(seed=8), model=custom)
        np.testing.assert_allclose(w_std.w, w_cus.w, atol=1e-9)
        np.testing.assert_allclose(t_std.objectives, t_cus.objectives,
                                   atol=1e-9)
