"""
Tests for kernels, the SMO solver, training and the model file.
"""

import math

import numpy as np
import pytest

from cadet.data import Dataset, FeatureSchema, PatientState
from cadet.errors import (
    ConfigError,
    DimensionMismatch,
    FormatError,
    InfeasibleAlphas,
    SingleClassData,
)
from cadet.svm import (
    ClassWeighting,
    KernelSpec,
    TrainConfig,
    bias_for,
    class_costs,
    discriminant,
    discriminant_matrix,
    dual_objective,
    gram_matrix,
    kernel_eval,
    load_svm_model,
    max_kkt_violation,
    save_svm_model,
    solve_dual,
    train,
)
from cadet.svm.model import subsample_majority


# =============================================================================
# Fixtures
# =============================================================================


def dataset_from(points, labels, names=None):
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    names = names or [f"x{k}" for k in range(points.shape[1])]
    return Dataset.from_arrays(
        FeatureSchema.of(names),
        [f"P{i}" for i in range(len(points))],
        [0] * len(points),
        points,
        labels,
    )


@pytest.fixture
def two_point():
    """x=+1 ordered, x=-1 not ordered."""
    return dataset_from([1.0, -1.0], [1, 0])


def two_clusters(n=20, seed=0):
    rng = np.random.default_rng(seed)
    pos = rng.normal(size=(n, 2)) * 0.3 + np.array([2.0, 2.0])
    neg = rng.normal(size=(n, 2)) * 0.3 - np.array([2.0, 2.0])
    return dataset_from(np.vstack([pos, neg]), [1] * n + [0] * n)


# =============================================================================
# Kernels
# =============================================================================


class TestKernels:
    """Tests for kernel_eval and KernelSpec."""

    def test_linear_dot(self):
        """(1,2).(3,4) = 11."""
        assert kernel_eval(KernelSpec.linear(), [1, 2], [3, 4]) == 11.0

    def test_rbf_identity(self):
        """K(a, a) = 1 for any gamma."""
        for gamma in (0.01, 1.0, 50.0):
            assert kernel_eval(KernelSpec.rbf(gamma), [0.3, -2.0], [0.3, -2.0]) == 1.0

    def test_rbf_value(self):
        """gamma 0.5, distance 2 gives exp(-2)."""
        value = kernel_eval(KernelSpec.rbf(0.5), [0, 0], [2, 0])
        assert value == pytest.approx(math.exp(-2.0), abs=1e-15)
        assert value == pytest.approx(0.135335, abs=1e-6)

    def test_symmetry_bitwise(self):
        """K(a, b) == K(b, a) exactly."""
        rng = np.random.default_rng(3)
        for kernel in (KernelSpec.linear(), KernelSpec.rbf(0.7)):
            for _ in range(50):
                a, b = rng.normal(size=5), rng.normal(size=5)
                assert kernel_eval(kernel, a, b) == kernel_eval(kernel, b, a)

    def test_rbf_range(self):
        """0 < K <= 1 with 1 only on identical inputs."""
        rng = np.random.default_rng(4)
        for _ in range(50):
            a, b = rng.normal(size=3), rng.normal(size=3)
            value = kernel_eval(KernelSpec.rbf(0.2), a, b)
            assert 0.0 < value < 1.0

    def test_dimension_mismatch(self):
        """Vectors of different lengths are rejected."""
        with pytest.raises(DimensionMismatch):
            kernel_eval(KernelSpec.linear(), [1, 2], [1, 2, 3])

    def test_rbf_needs_positive_gamma(self):
        """gamma must be positive for rbf and absent for linear."""
        with pytest.raises(ConfigError):
            KernelSpec.rbf(0.0)
        with pytest.raises(ConfigError):
            KernelSpec(gamma=1.0)

    def test_gram_symmetric(self):
        """The Gram matrix is exactly symmetric."""
        x = np.random.default_rng(5).normal(size=(6, 3))
        gram = gram_matrix(KernelSpec.rbf(0.3), x)
        assert np.array_equal(gram, gram.T)


# =============================================================================
# Dual helpers
# =============================================================================


class TestDualHelpers:
    """Tests for dual_objective, max_kkt_violation and bias_for."""

    def test_zero_alphas(self):
        """a = 0 gives objective 0 and violation |1 - s*b| at f = b."""
        gram = np.eye(3)
        labels = [1, 0, 1]
        costs = np.ones(3)
        assert dual_objective(np.zeros(3), labels, gram) == 0.0
        assert max_kkt_violation(np.zeros(3), labels, gram, 0.0, costs) == 1.0
        # with b = 0.25, the no-order point needs -f >= 1: violation 1.25
        assert max_kkt_violation(np.zeros(3), labels, gram, 0.25, costs) == 1.25

    def test_infeasible(self):
        """Alphas breaking s'a = 0 or the box are rejected."""
        gram = np.eye(2)
        with pytest.raises(InfeasibleAlphas):
            dual_objective([1.0, 0.0], [1, 0], gram)
        with pytest.raises(InfeasibleAlphas):
            dual_objective([-1.0, -1.0], [1, 0], gram)
        with pytest.raises(InfeasibleAlphas):
            max_kkt_violation([2.0, 2.0], [1, 0], gram, 0.0, [1.0, 1.0])

    def test_two_point_optimum(self):
        """The hand-derived optimum of the 2-point problem."""
        gram = np.array([[1.0, -1.0], [-1.0, 1.0]])
        assert dual_objective([0.5, 0.5], [1, 0], gram) == 0.5
        assert bias_for([0.5, 0.5], [1, 0], gram, [10.0, 10.0]) == 0.0
        assert max_kkt_violation([0.5, 0.5], [1, 0], gram, 0.0, [10.0, 10.0]) == 0.0


# =============================================================================
# Training
# =============================================================================


class TestTrain:
    """Tests for train and the discriminant."""

    def test_two_point_closed_form(self, two_point):
        """alpha = 0.5 each, b = 0, f(x) = x."""
        model, diag = train(two_point, KernelSpec.linear(), TrainConfig(c=10.0))
        assert diag.converged
        assert model.support_count == 2
        assert sorted(abs(c) for c in model.coefficients) == [0.5, 0.5]
        assert model.bias == 0.0
        state = PatientState("Q", 0, (2.0,))
        assert discriminant(model, state) == 2.0
        assert discriminant(model, PatientState("Q", 0, (0.0,))) == pytest.approx(0.0, abs=1e-12)
        assert diag.dual_objective == pytest.approx(0.5, abs=1e-12)
        assert diag.max_kkt_violation <= 1e-3

    def test_deterministic(self):
        """Identical inputs give identical models and bitwise-equal values."""
        ds = two_clusters()
        first, _ = train(ds, KernelSpec.rbf(0.5))
        second, _ = train(ds, KernelSpec.rbf(0.5))
        assert first == second
        x = PatientState("Q", 0, (0.1, -0.4))
        assert discriminant(first, x) == discriminant(first, x)

    def test_separable_no_training_errors(self):
        """Two well-separated clusters are classified perfectly."""
        ds = two_clusters()
        for kernel in (KernelSpec.linear(), KernelSpec.rbf(0.5)):
            model, _ = train(ds, kernel, TrainConfig(c=10.0))
            f = discriminant_matrix(model, ds.features)
            assert np.all((f > 0) == (ds.decisions == 1))

    def test_converged_violation_within_tol(self):
        """A converged solve satisfies KKT to tol on its own Gram matrix."""
        ds = two_clusters(n=15, seed=9)
        x = (ds.features - ds.features.mean(axis=0)) / ds.features.std(axis=0)
        signs = 2.0 * ds.decisions - 1.0
        costs = np.full(len(ds), 1.0)
        kernel = KernelSpec.rbf(0.5)
        solution = solve_dual(x, signs, costs, kernel, tol=1e-4, max_passes=10_000, debug=True)
        assert solution.diagnostics.converged
        gram = gram_matrix(kernel, x)
        violation = max_kkt_violation(solution.alphas, signs, gram, solution.bias, costs)
        assert violation <= 1e-4 + 1e-9

    def test_update_cap_reported(self):
        """Stopping at max_passes is a diagnostic, not an error."""
        x = np.random.default_rng(2).normal(size=(60, 2))
        signs = np.where(np.arange(60) % 2 == 0, 1.0, -1.0)
        solution = solve_dual(x, signs, np.ones(60), KernelSpec.rbf(0.5), tol=1e-12, max_passes=1)
        assert solution.diagnostics.passes == 1
        assert not solution.diagnostics.converged

    def test_max_passes_counts_sweeps(self):
        """One training sweep is N pair updates."""
        rng = np.random.default_rng(4)
        ds = dataset_from(rng.normal(size=(60, 2)), [k % 2 for k in range(60)])
        _, diag = train(ds, KernelSpec.rbf(0.5), TrainConfig(max_passes=1, tol=1e-12))
        assert diag.passes == 60
        assert not diag.converged

    def test_single_class(self):
        """Training data needs both decisions."""
        with pytest.raises(SingleClassData):
            train(dataset_from([1.0, 2.0], [1, 1]), KernelSpec.linear())

    def test_dimension_mismatch(self, two_point):
        """States must match the model schema."""
        model, _ = train(two_point, KernelSpec.linear())
        with pytest.raises(DimensionMismatch):
            discriminant(model, PatientState("Q", 0, (1.0, 2.0)))

    def test_batch_matches_single(self):
        """Batch values do not depend on threads."""
        ds = two_clusters(n=40, seed=1)
        model, _ = train(ds, KernelSpec.rbf(0.5))
        queries = np.random.default_rng(0).normal(size=(300, 2))
        serial = discriminant_matrix(model, queries, threads=1)
        threaded = discriminant_matrix(model, queries, threads=4)
        assert np.array_equal(serial, threaded)
        single = [discriminant(model, PatientState("Q", 0, tuple(p))) for p in queries[:10]]
        assert np.allclose(serial[:10], single, atol=1e-12)


class TestClassCosts:
    """Tests for balanced costs and majority subsampling."""

    def test_balanced_costs(self):
        """The minority class gets C * N_maj / N_min."""
        decisions = np.array([0] * 8 + [1] * 2)
        costs = class_costs(decisions, 1.0, ClassWeighting.BALANCED)
        assert costs[:8].tolist() == [1.0] * 8
        assert costs[8:].tolist() == [4.0, 4.0]

    def test_unweighted(self):
        """No weighting leaves every cost at C."""
        decisions = np.array([0, 0, 0, 1])
        assert class_costs(decisions, 2.0, ClassWeighting.NONE).tolist() == [2.0] * 4

    def test_subsample_keeps_minority(self):
        """All minority rows survive; the total is capped."""
        decisions = np.array([0] * 100 + [1] * 5)
        rows = subsample_majority(decisions, 20, seed=3)
        assert rows.size == 20
        assert set(range(100, 105)) <= set(rows.tolist())
        assert np.array_equal(rows, np.sort(rows))
        assert np.array_equal(rows, subsample_majority(decisions, 20, seed=3))

    def test_subsample_noop_under_cap(self):
        """Small training sets are used whole."""
        decisions = np.array([0, 1, 0])
        assert subsample_majority(decisions, 10, seed=0).tolist() == [0, 1, 2]

    def test_train_config_validation(self):
        """c and tol must be positive."""
        with pytest.raises(ConfigError):
            TrainConfig(c=0.0)
        with pytest.raises(ConfigError):
            TrainConfig(tol=-1.0)


# =============================================================================
# Model file
# =============================================================================


class TestModelFile:
    """Tests for save_svm_model / load_svm_model."""

    def test_round_trip_bitwise(self, tmp_path):
        """A reloaded model scores bit for bit like the original."""
        ds = two_clusters(n=25, seed=6)
        model, _ = train(ds, KernelSpec.rbf(0.37))
        path = tmp_path / "model.txt"
        save_svm_model(model, path)
        loaded = load_svm_model(path)
        queries = np.random.default_rng(1).normal(size=(100, 2)) * 2
        assert np.array_equal(
            discriminant_matrix(model, queries), discriminant_matrix(loaded, queries)
        )
        assert loaded.kernel == model.kernel
        assert loaded.schema == model.schema

    def test_layout(self, tmp_path, two_point):
        """Header, kernel, bias, schema, means, scales, sv lines."""
        model, _ = train(two_point, KernelSpec.linear(), TrainConfig(c=10.0))
        path = tmp_path / "model.txt"
        save_svm_model(model, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "cadet-model v1"
        assert lines[1] == "kernel linear"
        assert lines[2] == "bias 0.0"
        assert lines[3] == "schema x0"
        assert lines[4] == "means 0.0"
        assert lines[5] == "scales 1.0"
        assert sorted(lines[6:]) == ["sv -0.5 -1.0", "sv 0.5 1.0"]

    def test_unknown_version(self, tmp_path, two_point):
        """cadet-model v2 is rejected on line 1."""
        model, _ = train(two_point, KernelSpec.linear())
        path = tmp_path / "model.txt"
        save_svm_model(model, path)
        text = path.read_text(encoding="utf-8").replace("cadet-model v1", "cadet-model v2")
        path.write_text(text, encoding="utf-8")
        with pytest.raises(FormatError) as exc:
            load_svm_model(path)
        assert exc.value.line == 1

    def test_truncated(self, tmp_path, two_point):
        """A file cut before the scales line is rejected with its line number."""
        model, _ = train(two_point, KernelSpec.linear())
        path = tmp_path / "model.txt"
        save_svm_model(model, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        path.write_text("\n".join(lines[:5]) + "\n", encoding="utf-8")
        with pytest.raises(FormatError) as exc:
            load_svm_model(path)
        assert exc.value.line == 6

    def test_bad_sv_width(self, tmp_path, two_point):
        """An sv line with the wrong number of features names its line."""
        model, _ = train(two_point, KernelSpec.linear())
        path = tmp_path / "model.txt"
        save_svm_model(model, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        lines[6] = lines[6] + " 3.0"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(FormatError) as exc:
            load_svm_model(path)
        assert exc.value.line == 7
