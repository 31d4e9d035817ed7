"""Max-margin training of the multi-instance model.

The objective sum_n (L_n - R_n) + lambda/2 ||w||^2 is a difference of convex
functions: L_n (loss-augmented max) is convex in w, R_n (restricted max) is
too, so -R_n is concave. The outer loop fixes the labeling achieving R_n
under the current weights, which replaces R_n with a linear touching
underestimate; the inner solver then minimizes the resulting convex upper
bound. Accepting an inner solution only when it does not increase the bound
makes the recorded objective sequence non-increasing by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import (
    DimensionMismatchError,
    InfeasibleInferenceError,
    NumericalError,
    TrainingDataError,
)
from .inference import infer_labeling
from .types import (
    NEGATIVE,
    POSITIVE,
    STANDARD_MIL,
    Bag,
    CardinalityModel,
    InstanceLabeling,
    ModelWeights,
    TrainConfig,
    standard_mil,
)

def loss_augmented_score(w: ModelWeights, model: CardinalityModel, bag: Bag,
                         y_true: int) -> float:
    """max over Y of [Y != y_true] + F(X, Y); the hinge numerator L_n."""
    best = -np.inf
    for candidate in (POSITIVE, NEGATIVE):
        try:
            _, score = infer_labeling(w, model, bag, candidate)
        except InfeasibleInferenceError:
            continue
        value = (0.0 if candidate == y_true else 1.0) + score
        best = max(best, value)
    if not np.isfinite(best):
        raise InfeasibleInferenceError("both bag labels are infeasible")
    return float(best)


def objective(w: ModelWeights, model: CardinalityModel, bags: Sequence[Bag],
              lam: float) -> float:
    """sum_n (L_n - R_n) + lam/2 ||w||^2 over labeled bags."""
    total = 0.0
    for bag in bags:
        if bag.label is None:
            raise ValueError(f"bag {bag.bag_id!r} is unlabeled")
        loss = loss_augmented_score(w, model, bag, bag.label)
        _, restricted = infer_labeling(w, model, bag, bag.label)
        total += loss - restricted
    return float(total + 0.5 * lam * np.dot(w.w, w.w))


@dataclass
class TrainTrace:
    """Objective value after each outer iteration (index 0 = initial w)."""

    objectives: List[float] = field(default_factory=list)
    converged: bool = False
    outer_iters: int = 0
    inner_solver: str = "subgradient"
    seed: int = 0


# ---------------------------------------------------------------------------
# Scoring engines: vectorized fast path for the standard assumption, and a
# per-bag fallback that works with any cardinality model. Both expose the
# minimum needed by the solvers: linearization features, loss-augmented
# values/subgradient features, and the true objective.
# ---------------------------------------------------------------------------


class _BatchEngine:
    """All-bags-at-once inference for the standard MIL cardinality model."""

    def initial_weights(self) -> np.ndarray:
        pos = self.labels == POSITIVE
        pos_mean = (self.feats[pos].sum(axis=(0, 1))
                    / self.mask[pos].sum())
        neg_mean = (self.feats[~pos].sum(axis=(0, 1))
                    / self.mask[~pos].sum())
        return pos_mean - neg_mean

    def __init__(self, bags: Sequence[Bag], bias: bool):
        n = len(bags)
        dims = {bag.dim for bag in bags}
        if len(dims) != 1:
            raise DimensionMismatchError(
                f"bags disagree on feature dimension: {sorted(dims)}")
        d = dims.pop() + (1 if bias else 0)
        m_max = max(bag.m for bag in bags)
        self.feats = np.zeros((n, m_max, d))
        self.mask = np.zeros((n, m_max), dtype=bool)
        self.m = np.array([bag.m for bag in bags])
        self.labels = np.array([bag.label for bag in bags])
        for i, bag in enumerate(bags):
            self.feats[i, :bag.m, :bag.dim] = bag.features
            if bias:
                self.feats[i, :bag.m, -1] = 1.0
            self.mask[i, :bag.m] = True
        self.colsum = self.feats.sum(axis=1)
        self.dim = d
        self._k_grid = np.arange(m_max + 1)

    def _sweep(self, w: np.ndarray):
        """Sorted prefix structure shared by every query at weights w."""
        s = self.feats @ w
        s = np.where(self.mask, s, -np.inf)
        order = np.argsort(-s, axis=1, kind="stable")
        sorted_s = np.take_along_axis(s, order, axis=1)
        sorted_s = np.where(np.isfinite(sorted_s), sorted_s, 0.0)
        prefix = np.concatenate(
            [np.zeros((s.shape[0], 1)), np.cumsum(sorted_s, axis=1)], axis=1)
        total = prefix[np.arange(s.shape[0]), self.m]
        totals = 2.0 * prefix - total[:, None]
        valid = self._k_grid[None, :] <= self.m[:, None]
        # standard assumption: k = 0 forbidden for Y=+1, k >= 1 for Y=-1
        pos_totals = np.where(valid, totals, -np.inf)
        pos_totals[:, 0] = -np.inf
        k_star = np.argmax(pos_totals, axis=1)
        f_pos = pos_totals[np.arange(s.shape[0]), k_star]
        f_neg = -total
        return order, k_star, f_pos, f_neg

    def _psi_topk(self, order: np.ndarray, k: np.ndarray) -> np.ndarray:
        """sum of top-k feature rows minus the rest: 2 * topsum - colsum."""
        sorted_feats = np.take_along_axis(self.feats, order[:, :, None], axis=1)
        csum = np.concatenate(
            [np.zeros((order.shape[0], 1, self.dim)),
             np.cumsum(sorted_feats, axis=1)], axis=1)
        topsum = csum[np.arange(order.shape[0]), k]
        return 2.0 * topsum - self.colsum

    def linearize(self, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        order, k_star, _, _ = self._sweep(w)
        psi = np.where((self.labels == POSITIVE)[:, None],
                       self._psi_topk(order, k_star), -self.colsum)
        return psi, np.zeros(len(self.m))

    def loss_augmented(self, w: np.ndarray):
        order, k_star, f_pos, f_neg = self._sweep(w)
        val_pos = np.where(self.labels == POSITIVE, 0.0, 1.0) + f_pos
        val_neg = np.where(self.labels == NEGATIVE, 0.0, 1.0) + f_neg
        choose_pos = val_pos >= val_neg
        values = np.where(choose_pos, val_pos, val_neg)
        psi = np.where(choose_pos[:, None],
                       self._psi_topk(order, k_star), -self.colsum)
        return values, psi, np.zeros(len(self.m))

    def restricted(self, w: np.ndarray) -> np.ndarray:
        _, _, f_pos, f_neg = self._sweep(w)
        return np.where(self.labels == POSITIVE, f_pos, f_neg)


class _GenericEngine:
    """Per-bag path through the public inference API; any cardinality model."""

    def __init__(self, bags: Sequence[Bag], model: CardinalityModel, bias: bool):
        dims = {bag.dim for bag in bags}
        if len(dims) != 1:
            raise DimensionMismatchError(
                f"bags disagree on feature dimension: {sorted(dims)}")
        self.model = model
        if bias:
            self.bags = [
                Bag(np.hstack([b.features, np.ones((b.m, 1))]),
                    label=b.label, bag_id=b.bag_id) for b in bags]
        else:
            self.bags = list(bags)
        self.labels = np.array([bag.label for bag in bags])
        self.dim = dims.pop() + (1 if bias else 0)

    def _wrap(self, w: np.ndarray) -> ModelWeights:
        return ModelWeights(w, lam=1.0)

    def _psi(self, bag: Bag, labeling: InstanceLabeling) -> np.ndarray:
        return labeling.labels @ bag.features

    def linearize(self, w: np.ndarray):
        wm = self._wrap(w)
        psi = np.empty((len(self.bags), self.dim))
        card = np.empty(len(self.bags))
        for i, bag in enumerate(self.bags):
            labeling, _ = infer_labeling(wm, self.model, bag, bag.label)
            psi[i] = self._psi(bag, labeling)
            card[i] = self.model.potential(labeling.m_pos, labeling.m_neg,
                                           bag.label)
        return psi, card

    def loss_augmented(self, w: np.ndarray):
        wm = self._wrap(w)
        values = np.empty(len(self.bags))
        psi = np.empty((len(self.bags), self.dim))
        card = np.empty(len(self.bags))
        for i, bag in enumerate(self.bags):
            best = None
            for candidate in (POSITIVE, NEGATIVE):
                try:
                    labeling, score = infer_labeling(wm, self.model, bag,
                                                     candidate)
                except InfeasibleInferenceError:
                    continue
                value = (0.0 if candidate == bag.label else 1.0) + score
                if best is None or value > best[0]:
                    best = (value, labeling, candidate)
            if best is None:
                raise InfeasibleInferenceError(
                    f"bag {bag.bag_id!r}: both labels infeasible")
            value, labeling, candidate = best
            values[i] = value
            psi[i] = self._psi(bag, labeling)
            card[i] = self.model.potential(labeling.m_pos, labeling.m_neg,
                                           candidate)
        return values, psi, card

    def restricted(self, w: np.ndarray) -> np.ndarray:
        wm = self._wrap(w)
        return np.array([infer_labeling(wm, self.model, bag, bag.label)[1]
                         for bag in self.bags])

    def initial_weights(self) -> np.ndarray:
        pos_sum = np.zeros(self.dim)
        neg_sum = np.zeros(self.dim)
        n_pos = n_neg = 0
        for bag in self.bags:
            if bag.label == POSITIVE:
                pos_sum += bag.features.sum(axis=0)
                n_pos += bag.m
            else:
                neg_sum += bag.features.sum(axis=0)
                n_neg += bag.m
        return pos_sum / n_pos - neg_sum / n_neg


def _engine_objective(engine, w: np.ndarray, lam: float) -> float:
    values, _, _ = engine.loss_augmented(w)
    return float(values.sum() - engine.restricted(w).sum()
                 + 0.5 * lam * np.dot(w, w))


# ---------------------------------------------------------------------------
# Inner solvers for the convex upper bound
#   B(w) = sum_n L_n(w) - w . psi_n - c_n + lam/2 ||w||^2
# ---------------------------------------------------------------------------


def _bound_value(engine, w, psi_sum, c_sum, lam) -> float:
    values, _, _ = engine.loss_augmented(w)
    return float(values.sum() - np.dot(psi_sum, w) - c_sum
                 + 0.5 * lam * np.dot(w, w))


def _subgradient_inner(engine, w0, psi_sum, c_sum, config: TrainConfig):
    """Projected subgradient descent with steps eta0/sqrt(t), best iterate kept.

    Steps move along the normalized subgradient direction, so eta0 is a
    distance in weight space and the schedule sweeps scales from eta0 down
    to eta0/sqrt(T) regardless of bag count or feature magnitude. Iterates
    are projected onto the ball that must contain the minimizer
    (lam/2 ||w*||^2 <= B(w*) <= B(0)); the walk restarts from the incumbent
    periodically so the shrinking steps refine around it, and a running
    average of iterates is probed as a cheap stabilizer.
    """
    lam = config.lam

    def evaluate(w):
        values, psi, _ = engine.loss_augmented(w)
        value = float(values.sum() - np.dot(psi_sum, w) - c_sum
                      + 0.5 * lam * np.dot(w, w))
        return value, psi

    f_zero, _ = evaluate(np.zeros_like(w0))
    radius = np.sqrt(max(2.0 * f_zero / lam, 1.0))

    w = w0.copy()
    w_best = w0.copy()
    f_best, _ = evaluate(w0)
    avg = w0.copy()
    f_mark = f_best
    patience = 60
    since_mark = 0
    for t in range(1, config.max_inner_iters + 1):
        f, psi = evaluate(w)
        if f < f_best:
            f_best, w_best = f, w.copy()
        grad = psi.sum(axis=0) - psi_sum + lam * w
        gnorm = np.linalg.norm(grad)
        if gnorm < 1e-15:
            break
        step = config.eta0 / np.sqrt(t) if config.step_decay == "inv_sqrt" \
            else config.eta0
        w = w - step * grad / gnorm
        norm = np.linalg.norm(w)
        if norm > radius:
            w *= radius / norm
        avg += (w - avg) / (t + 1)
        if t % 10 == 0:
            f_avg, _ = evaluate(avg)
            if f_avg < f_best:
                f_best, w_best = f_avg, avg.copy()
        if t % 50 == 0:
            w = w_best.copy()
        since_mark += 1
        if since_mark >= patience:
            if f_mark - f_best < config.inner_tolerance:
                break
            f_mark = f_best
            since_mark = 0
    f_avg, _ = evaluate(avg)
    if f_avg < f_best:
        f_best, w_best = f_avg, avg.copy()
    return w_best, f_best


def _project_capped_simplex(alpha: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {alpha >= 0, sum(alpha) <= 1}."""
    clipped = np.maximum(alpha, 0.0)
    if clipped.sum() <= 1.0:
        return clipped
    # project onto the simplex boundary: sort-based threshold
    u = np.sort(alpha)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(u) + 1)
    rho = np.max(np.nonzero(u - css / idx > 0)[0]) + 1
    theta = css[rho - 1] / rho
    return np.maximum(alpha - theta, 0.0)


def _cutting_plane_inner(engine, w0, psi_sum, c_sum, config: TrainConfig):
    """One-slack cutting-plane minimization of the convex bound.

    Each iterate contributes the cut h(w) >= a.w + b to the piecewise-linear
    hinge part; the restricted master problem min lam/2||w||^2 + max(0, cuts)
    is solved in its dual by projected gradient ascent over
    {alpha >= 0, sum alpha <= 1}. Terminates when the model value reaches the
    incumbent within inner_tolerance.
    """
    lam = config.lam
    cuts_a: List[np.ndarray] = []
    cuts_b: List[float] = []
    w = w0.copy()
    f_best = _bound_value(engine, w0, psi_sum, c_sum, lam)
    w_best = w0.copy()
    for _ in range(config.max_inner_iters):
        values, psi, _ = engine.loss_augmented(w)
        hinge = float(values.sum() - np.dot(psi_sum, w) - c_sum)
        a = psi.sum(axis=0) - psi_sum
        cuts_a.append(a)
        cuts_b.append(hinge - float(np.dot(a, w)))

        amat = np.array(cuts_a)
        bvec = np.array(cuts_b)
        gram = amat @ amat.T / lam
        lipschitz = max(float(np.linalg.norm(gram, 2)), 1e-12)
        alpha = np.zeros(len(cuts_b))
        for _ in range(500):
            new = _project_capped_simplex(
                alpha + (bvec - gram @ alpha) / lipschitz)
            if np.max(np.abs(new - alpha)) < 1e-12:
                alpha = new
                break
            alpha = new
        w = -(amat.T @ alpha) / lam
        model_val = float(0.5 * lam * np.dot(w, w)
                          + max(0.0, float(np.max(amat @ w + bvec))))
        f = _bound_value(engine, w, psi_sum, c_sum, lam)
        if f < f_best:
            f_best = f
            w_best = w.copy()
        if f_best - model_val <= config.inner_tolerance:
            break
    return w_best, f_best


def train(bags: Sequence[Bag], config: Optional[TrainConfig] = None,
          model: Optional[CardinalityModel] = None,
          feature_fingerprint: str = "") -> Tuple[ModelWeights, TrainTrace]:
    """Fit weights on labeled bags; returns the model and its objective trace.

    Raises TrainingDataError when one class is missing, NumericalError when
    the objective goes non-finite.
    """
    config = config or TrainConfig()
    model = model or standard_mil()
    for bag in bags:
        if bag.label is None:
            raise ValueError(f"bag {bag.bag_id!r} is unlabeled")
    n_pos = sum(1 for bag in bags if bag.label == POSITIVE)
    n_neg = len(bags) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise TrainingDataError(
            f"training needs both classes: {n_pos} positive / {n_neg} "
            f"negative bags given")

    if model.kind == STANDARD_MIL:
        engine = _BatchEngine(bags, config.bias_included)
    else:
        engine = _GenericEngine(bags, model, config.bias_included)
    inner = (_subgradient_inner if config.inner_solver == "subgradient"
             else _cutting_plane_inner)

    # starting at zero would tie every instance score, leaving the first
    # linearization's witness choice to an index tie-break; pointing the
    # initial weights from negative-bag instances toward positive-bag
    # instances starts the alternation in a data-determined basin instead
    w = engine.initial_weights()
    norm = np.linalg.norm(w)
    w = w / norm if norm > 1e-12 else np.zeros(engine.dim)
    obj = _engine_objective(engine, w, config.lam)
    trace = TrainTrace(objectives=[obj], inner_solver=config.inner_solver,
                       seed=config.seed)
    for outer in range(1, config.max_outer_iters + 1):
        psi, card = engine.linearize(w)
        psi_sum = psi.sum(axis=0)
        c_sum = float(card.sum())
        w_new, _ = inner(engine, w, psi_sum, c_sum, config)
        obj_new = _engine_objective(engine, w_new, config.lam)
        if not np.isfinite(obj_new):
            raise NumericalError(
                f"objective became non-finite at outer iteration {outer} "
                f"(|w| = {np.linalg.norm(w_new):.3g}); reduce eta0 or check "
                f"feature scaling")
        if obj_new > obj:  # float noise only; keep the trace non-increasing
            obj_new = obj
        else:
            w = w_new
        trace.objectives.append(obj_new)
        trace.outer_iters = outer
        decrease = obj - obj_new
        obj = obj_new
        if decrease < config.outer_tolerance:
            trace.converged = True
            break
    weights = ModelWeights(w, lam=config.lam,
                           feature_fingerprint=feature_fingerprint,
                           bias_included=config.bias_included)
    return weights, trace
