import numpy as np
import pytest

from frfselect import (
    DegenerateLabelsError,
    FitResult,
    SolverConfig,
    SolverTrace,
    TaskDataset,
    WeightMatrix,
    backward_step,
    empirical_loss_mtl,
    empirical_loss_single,
    fit,
    forward_step,
    l21_norm,
    lambda_schedule_update,
    validate_trace,
)
from frfselect.solver import (
    StepRecord,
    TERMINATED_LAMBDA_FLOOR,
    TERMINATED_MAX_ITERS,
    TERMINATED_NO_IMPROVING_STEP,
)


def random_instance(rng, n_feat, n_tasks, n_samples):
    tasks = []
    freqs = np.arange(1.0, n_feat + 1.0)
    for l in range(n_tasks):
        feats = rng.normal(size=(n_samples, n_feat))
        labels = rng.integers(0, 2, size=n_samples)
        labels[0], labels[1] = 0, 1  # both classes present
        tasks.append(TaskDataset(feats, labels, freqs, f"t{l}"))
    return tuple(tasks)


def naive_forward(W, tasks, eps):
    """Exhaustive scan mirror of forward_step's contract."""
    L = len(tasks)
    per_now = [empirical_loss_single(W[:, l], tasks[l]) for l in range(L)]
    best = None
    for j in range(W.shape[0]):
        for l in range(L):
            for s_idx, sign in enumerate((1, -1)):
                W2 = W.copy()
                W2[j, l] += sign * eps
                own = empirical_loss_single(W2[:, l], tasks[l])
                if not own < per_now[l]:
                    continue
                key = (empirical_loss_mtl(W2, tasks), j, l, s_idx)
                if best is None or key < best:
                    best = key
                    best_move = (j, l, sign, l21_norm(W2))
    if best is None:
        return None
    return best_move + (best[0],)


def naive_backward(W, tasks, eps, xi, lam):
    """Exhaustive scan mirror of backward_step's contract."""
    L = len(tasks)
    emp_now = empirical_loss_mtl(W, tasks)
    total_now = emp_now + lam * l21_norm(W)
    best = None
    for l in range(L):
        for j in range(W.shape[0]):
            if W[j, l] == 0.0:
                continue
            sign = -1 if W[j, l] > 0 else 1
            W2 = W.copy()
            W2[j, l] += sign * eps
            emp_after = empirical_loss_mtl(W2, tasks)
            total_after = emp_after + lam * l21_norm(W2)
            if not total_now - total_after > xi:
                continue
            key = (emp_after, j, l)
            if best is None or key < best:
                best = key
                best_move = (j, l, sign, l21_norm(W2), emp_after)
    return None if best is None else best_move


class TestForwardStep:
    def test_matches_exhaustive_scan(self):
        rng = np.random.default_rng(42)
        cfg = SolverConfig(epsilon=0.3, xi=0.05)
        for case in range(25):
            n_feat = int(rng.integers(2, 6))
            n_tasks = int(rng.integers(1, 4))
            tasks = random_instance(rng, n_feat, n_tasks, int(rng.integers(6, 20)))
            W = rng.integers(-2, 3, size=(n_feat, n_tasks)) * cfg.epsilon
            got = forward_step(W, tasks, cfg)
            want = naive_forward(W, tasks, cfg.epsilon)
            assert got is not None, f"case {case}"
            j, l, sign, pen, emp = want
            assert (got.feature, got.task, got.sign) == (j, l, sign), f"case {case}"
            assert got.empirical_after == pytest.approx(emp, abs=1e-12)
            assert got.penalty_after == pytest.approx(pen, abs=1e-12)

    def test_reduces_touched_task_loss_strictly(self):
        rng = np.random.default_rng(3)
        cfg = SolverConfig(epsilon=0.2, xi=0.01)
        tasks = random_instance(rng, 4, 2, 12)
        W = np.zeros((4, 2))
        cand = forward_step(W, tasks, cfg)
        before = empirical_loss_single(W[:, cand.task], tasks[cand.task])
        W[cand.feature, cand.task] += cand.sign * cfg.epsilon
        after = empirical_loss_single(W[:, cand.task], tasks[cand.task])
        assert after < before

    def test_none_when_features_carry_no_signal(self):
        # all-zero features leave the loss at ln 2 whatever the weights
        freqs = np.array([1.0, 2.0])
        t = TaskDataset(np.zeros((4, 2)), np.array([1, 0, 1, 0]), freqs, "flat")
        cfg = SolverConfig(epsilon=0.5, xi=0.01)
        assert forward_step(np.zeros((2, 1)), [t], cfg) is None

    def test_tie_breaks_prefer_low_feature_then_plus(self):
        # duplicated feature columns make candidate losses exactly equal
        feats = np.array([[1.0, 1.0], [-1.0, -1.0], [0.5, 0.5], [-0.5, -0.5]])
        t = TaskDataset(feats, np.array([1, 0, 1, 0]), np.array([1.0, 2.0]), "dup")
        cfg = SolverConfig(epsilon=0.4, xi=0.01)
        cand = forward_step(np.zeros((2, 1)), [t], cfg)
        assert cand.feature == 0
        assert cand.sign == 1


class TestBackwardStep:
    def test_matches_exhaustive_scan(self):
        rng = np.random.default_rng(7)
        cfg = SolverConfig(epsilon=0.3, xi=0.001)
        hits = 0
        for case in range(40):
            n_feat = int(rng.integers(2, 6))
            n_tasks = int(rng.integers(1, 4))
            tasks = random_instance(rng, n_feat, n_tasks, int(rng.integers(6, 20)))
            W = rng.integers(-2, 3, size=(n_feat, n_tasks)) * cfg.epsilon
            if not W.any():
                continue
            lam = float(rng.uniform(0.0, 0.6))
            got = backward_step(W, tasks, cfg, lam)
            want = naive_backward(W, tasks, cfg.epsilon, cfg.xi, lam)
            if want is None:
                assert got is None, f"case {case}"
                continue
            hits += 1
            j, l, sign, pen, emp = want
            assert (got.feature, got.task, got.sign) == (j, l, sign), f"case {case}"
            assert got.empirical_after == pytest.approx(emp, abs=1e-12)
            assert got.penalty_after == pytest.approx(pen, abs=1e-12)
        assert hits >= 5  # the scan exercised qualifying cases, not only refusals

    def test_qualification_threshold_is_strict(self):
        # signal-free features: a step toward zero changes only the penalty,
        # so the improvement is exactly lam * epsilon
        freqs = np.array([1.0])
        t = TaskDataset(np.zeros((4, 1)), np.array([1, 0, 1, 0]), freqs, "flat")
        cfg = SolverConfig(epsilon=0.5, xi=0.01)
        W = np.array([[0.5]])
        qualifying = backward_step(W, [t], cfg, lam=0.03)  # 0.015 > xi
        assert qualifying is not None
        assert (qualifying.feature, qualifying.task, qualifying.sign) == (0, 0, -1)
        refused = backward_step(W, [t], cfg, lam=0.01)  # 0.005 < xi
        assert refused is None

    def test_zero_weights_give_none(self):
        rng = np.random.default_rng(1)
        tasks = random_instance(rng, 3, 1, 8)
        cfg = SolverConfig(epsilon=0.3, xi=0.01)
        assert backward_step(np.zeros((3, 1)), tasks, cfg, lam=0.5) is None

    def test_rejects_negative_lambda(self):
        rng = np.random.default_rng(1)
        tasks = random_instance(rng, 3, 1, 8)
        cfg = SolverConfig(epsilon=0.3, xi=0.01)
        with pytest.raises(ValueError):
            backward_step(np.full((3, 1), 0.3), tasks, cfg, lam=-0.1)


class TestLambdaSchedule:
    def test_first_step_sets_per_unit_gain(self):
        lam = lambda_schedule_update(None, 0.7, 0.5, 0.0, 0.2)
        assert lam == pytest.approx(1.0, abs=1e-15)

    def test_level_only_decreases(self):
        lam = lambda_schedule_update(1.0, 0.5, 0.45, 0.2, 0.4)  # gain 0.25
        assert lam == pytest.approx(0.25, abs=1e-15)
        lam = lambda_schedule_update(0.25, 0.45, 0.3, 0.4, 0.6)  # gain 0.75
        assert lam == 0.25

    def test_no_penalty_increase_keeps_level(self):
        assert lambda_schedule_update(0.7, 0.5, 0.4, 0.6, 0.6) == 0.7
        assert lambda_schedule_update(0.7, 0.5, 0.4, 0.6, 0.4) == 0.7
        assert lambda_schedule_update(None, 0.5, 0.4, 0.6, 0.4) is None


class TestSolverConfig:
    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            SolverConfig(epsilon=0.0, xi=0.01)
        with pytest.raises(ValueError):
            SolverConfig(epsilon=0.2, xi=0.0)
        with pytest.raises(ValueError):
            SolverConfig(epsilon=0.2, xi=-1.0)
        with pytest.raises(ValueError, match="exceed"):
            SolverConfig(epsilon=0.01, xi=0.2)
        with pytest.raises(ValueError):
            SolverConfig(epsilon=0.2, xi=0.01, max_iters=0)
        with pytest.raises(ValueError):
            SolverConfig(epsilon=0.2, xi=0.01, lambda_floor=-0.5)


def separable_task(n=20, seed=5):
    rng = np.random.default_rng(seed)
    half = n // 2
    feats = np.vstack(
        [
            np.column_stack([rng.normal(2.0, 0.3, half), rng.normal(0, 1, half)]),
            np.column_stack([rng.normal(-2.0, 0.3, half), rng.normal(0, 1, half)]),
        ]
    )
    labels = np.concatenate([np.ones(half, int), np.zeros(half, int)])
    return TaskDataset(feats, labels, np.array([5.0, 9.0]), "sep")


class TestFit:
    def test_weights_stay_on_the_lattice(self):
        cfg = SolverConfig(epsilon=0.2, xi=0.01, max_iters=100)
        res = fit([separable_task()], cfg)
        W = res.weights.values
        k = np.rint(W / cfg.epsilon)
        assert np.array_equal(W, k * cfg.epsilon)  # exact, not approximate

    def test_trace_validates_and_first_step_is_forward(self):
        cfg = SolverConfig(epsilon=0.2, xi=0.01, max_iters=200)
        res = fit([separable_task()], cfg)
        assert res.trace.steps[0].kind == "forward"
        validate_trace(res, cfg)

    def test_separable_task_classified_perfectly(self):
        cfg = SolverConfig(epsilon=0.2, xi=0.01, max_iters=300)
        task = separable_task()
        res = fit([task], cfg)
        std = res.standardization[0].apply(task.features)
        preds = (std @ res.weights.column(0) >= 0.0).astype(int)
        assert np.array_equal(preds, task.labels)

    def test_deterministic_repeat(self):
        cfg = SolverConfig(epsilon=0.2, xi=0.01, max_iters=150)
        a = fit([separable_task()], cfg)
        b = fit([separable_task()], cfg)
        assert np.array_equal(a.weights.values, b.weights.values)
        assert a.trace == b.trace
        assert a.lambda_final == b.lambda_final

    def test_level_never_increases(self):
        cfg = SolverConfig(epsilon=0.2, xi=0.01, max_iters=300)
        res = fit([separable_task()], cfg)
        lams = [s.lambda_after for s in res.trace.steps]
        assert all(b <= a for a, b in zip(lams, lams[1:]))
        assert res.lambda_final == lams[-1]

    def test_max_iters_respected(self):
        cfg = SolverConfig(epsilon=0.2, xi=0.01, max_iters=3)
        res = fit([separable_task()], cfg)
        assert len(res.trace.steps) <= 3
        assert res.trace.terminated_by == TERMINATED_MAX_ITERS

    def test_lambda_floor_stops_the_path(self):
        cfg = SolverConfig(epsilon=0.2, xi=0.01, max_iters=100, lambda_floor=1e9)
        res = fit([separable_task()], cfg)
        assert res.trace.terminated_by == TERMINATED_LAMBDA_FLOOR
        assert len(res.trace.steps) == 1

    def test_signal_free_task_stops_immediately(self):
        t = TaskDataset(
            np.zeros((4, 2)), np.array([1, 0, 1, 0]), np.array([1.0, 2.0]), "flat"
        )
        cfg = SolverConfig(epsilon=0.2, xi=0.01)
        res = fit([t], cfg, standardize=False)
        assert res.trace.terminated_by == TERMINATED_NO_IMPROVING_STEP
        assert res.trace.steps == ()
        assert res.lambda_final == 0.0
        assert not res.weights.values.any()

    def test_single_class_rejected(self):
        t = TaskDataset(
            np.ones((3, 2)), np.array([1, 1, 1]), np.array([1.0, 2.0]), "one"
        )
        with pytest.raises(DegenerateLabelsError):
            fit([t], SolverConfig(epsilon=0.2, xi=0.01))

    def test_mismatched_tasks_rejected(self):
        a = separable_task()
        b = TaskDataset(
            np.ones((4, 3)), np.array([1, 0, 1, 0]),
            np.array([1.0, 2.0, 3.0]), "wide",
        )
        with pytest.raises(ValueError, match="features"):
            fit([a, b], SolverConfig(epsilon=0.2, xi=0.01))
        c = TaskDataset(
            a.features, a.labels, np.array([6.0, 9.0]), "shifted"
        )
        with pytest.raises(ValueError, match="frequencies"):
            fit([a, c], SolverConfig(epsilon=0.2, xi=0.01))
        with pytest.raises(ValueError):
            fit([], SolverConfig(epsilon=0.2, xi=0.01))

    def test_standardize_false_keeps_raw_scale(self):
        cfg = SolverConfig(epsilon=0.2, xi=0.01, max_iters=50)
        res = fit([separable_task()], cfg, standardize=False)
        s = res.standardization[0]
        assert np.array_equal(s.mean, np.zeros(2))
        assert np.array_equal(s.scale, np.ones(2))

    def test_standardization_recorded(self):
        task = separable_task()
        cfg = SolverConfig(epsilon=0.2, xi=0.01, max_iters=50)
        res = fit([task], cfg)
        assert np.allclose(res.standardization[0].mean, task.features.mean(axis=0))

    def test_mtl_two_tasks_full_trace_is_consistent(self):
        cfg = SolverConfig(epsilon=0.3, xi=0.01, max_iters=200)
        rng = np.random.default_rng(11)
        tasks = random_instance(rng, 5, 2, 30)
        res = fit(tasks, cfg)
        validate_trace(res, cfg)
        assert res.weights.n_tasks == 2


def _result_with(steps, weights, eps):
    return FitResult(
        weights=WeightMatrix(np.asarray(weights, dtype=float)),
        trace=SolverTrace(tuple(steps), TERMINATED_NO_IMPROVING_STEP),
        lambda_final=steps[-1].lambda_after if steps else 0.0,
        standardization=(),
    )


def _record(i, kind, j, l, sign, emp, pen, lam):
    return StepRecord(i, kind, j, l, sign, emp, pen, emp + lam * pen, lam)


class TestValidateTrace:
    cfg = SolverConfig(epsilon=0.5, xi=0.01)

    def test_accepts_clean_trace(self):
        steps = [
            _record(1, "forward", 0, 0, 1, 0.6, 0.5, 0.2),
            _record(2, "forward", 1, 0, -1, 0.5, 1.0, 0.2),
        ]
        validate_trace(_result_with(steps, [[0.5], [-0.5]], 0.5), self.cfg)

    def test_rejects_increasing_level(self):
        steps = [
            _record(1, "forward", 0, 0, 1, 0.6, 0.5, 0.2),
            _record(2, "forward", 1, 0, 1, 0.5, 1.0, 0.9),
        ]
        with pytest.raises(ValueError, match="level increased"):
            validate_trace(_result_with(steps, [[0.5], [0.5]], 0.5), self.cfg)

    def test_rejects_off_lattice_weights(self):
        steps = [_record(1, "forward", 0, 0, 1, 0.6, 0.5, 0.2)]
        with pytest.raises(ValueError, match="integer multiples"):
            validate_trace(_result_with(steps, [[0.37]], 0.5), self.cfg)

    def test_rejects_leading_backward_step(self):
        steps = [_record(1, "backward", 0, 0, -1, 0.6, 0.0, 0.2)]
        with pytest.raises(ValueError, match="starts with a backward"):
            validate_trace(_result_with(steps, [[0.0]], 0.5), self.cfg)

    def test_rejects_backward_step_below_tolerance(self):
        steps = [
            _record(1, "forward", 0, 0, 1, 0.600, 0.5, 0.2),
            # at lam 0.2 the penalised loss moves 0.700 -> 0.699: below xi
            _record(2, "backward", 0, 0, -1, 0.699, 0.0, 0.2),
        ]
        with pytest.raises(ValueError, match="backward step"):
            validate_trace(_result_with(steps, [[0.0]], 0.5), self.cfg)

    def test_rejects_untouched_nonzero_coordinate(self):
        steps = [_record(1, "forward", 0, 0, 1, 0.6, 0.5, 0.2)]
        with pytest.raises(ValueError, match="never moved forward"):
            validate_trace(_result_with(steps, [[0.5], [0.5]], 0.5), self.cfg)
