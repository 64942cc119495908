import itertools
import json
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fishscan.errors import (BadParameter, DimensionMismatch, EmptyDataset,
                             ModelVersionMismatch, SingleClass)
from fishscan.svm import (KernelSpec, SvmModel, decision_value, dual_objective, fit_scaler,
                          apply_scaler, kernel_eval, model_from_json, model_to_json, predict,
                          smo_solve, train_svm)


def grid_optimum(K, y, c_param, points=21):
    """Best dual value over a grid on the first n-1 multipliers, the last one
    solved from the equality constraint and kept only when it is in the box."""
    n = y.size
    axis = np.linspace(0.0, c_param, points)
    Q = (y[:, None] * y[None, :]) * K
    best = 0.0
    for head in itertools.product(axis, repeat=n - 1):
        head = np.array(head)
        last = -y[-1] * (y[:-1] @ head)
        if not -1e-12 <= last <= c_param + 1e-12:
            continue
        a = np.append(head, min(max(last, 0.0), c_param))
        best = max(best, a.sum() - 0.5 * a @ Q @ a)
    return best


def kkt_ok(model, X, y, tol):
    f = model.decision_values(X)
    margin = y * f
    full = np.zeros(y.size)
    Z = model.scaler.transform(X)
    for a, sv in zip(model.alphas, model.support_vectors):
        full[np.all(Z == sv, axis=1).nonzero()[0][:1]] = a
    c = model.c_param
    ok = np.where(full <= 0, margin >= 1 - tol,
                  np.where(full >= c, margin <= 1 + tol, np.abs(margin - 1) <= tol))
    return bool(ok.all())


# scaler

def test_scaler_single_column():
    s = fit_scaler([[1.0], [3.0]])
    np.testing.assert_array_equal(s.means, [2.0])
    np.testing.assert_array_equal(s.std_devs, [1.0])
    np.testing.assert_array_equal(apply_scaler(s, [[1.0], [3.0]]).ravel(), [-1.0, 1.0])


def test_scaler_constant_column():
    s = fit_scaler([[0.1, 5.0], [0.1, 7.0], [0.1, 9.0]])
    assert s.constant.tolist() == [True, False]
    np.testing.assert_array_equal(s.transform([[0.1, 7.0], [3.0, 7.0]])[:, 0], [0.0, 0.0])


def test_scaler_random_moments(rng):
    X = rng.normal(size=(5, 10)) * rng.uniform(0.001, 50, size=10)
    Z = fit_scaler(X).transform(X)
    np.testing.assert_allclose(Z.mean(axis=0), 0, atol=1e-10)
    np.testing.assert_allclose(Z.std(axis=0), 1, atol=1e-10)


def test_scaler_round_trip(rng):
    X = rng.normal(size=(20, 10))
    s = fit_scaler(X)
    np.testing.assert_allclose(s.inverse(s.transform(X)), X, atol=1e-10)


def test_scaler_errors():
    with pytest.raises(EmptyDataset):
        fit_scaler(np.empty((0, 3)))
    with pytest.raises(DimensionMismatch):
        fit_scaler([[1.0, 2.0]]).transform([1.0, 2.0, 3.0])


# kernels

def test_kernel_examples():
    assert kernel_eval(KernelSpec("linear"), [1, 1], [1, 1]) == 2.0
    for gamma in (0.01, 1.0, 30.0):
        assert kernel_eval(KernelSpec("gaussian", gamma=gamma), [0.3, -2], [0.3, -2]) == 1.0
    assert kernel_eval(KernelSpec("polynomial", degree=2, gamma=1.0, coef0=0.0), [1, 0], [2, 0]) == 4.0
    assert kernel_eval(KernelSpec("sigmoid", gamma=0.5, coef0=0.1), [1, 2], [3, 1]) == pytest.approx(
        np.tanh(0.5 * 5 + 0.1))


def test_kernel_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        kernel_eval(KernelSpec(), [1, 2], [1, 2, 3])


@pytest.mark.parametrize("kw", [{"kind": "rbf"}, {"kind": "polynomial", "degree": 0},
                                {"kind": "gaussian", "gamma": 0.0}, {"kind": "sigmoid", "gamma": -1}])
def test_kernel_spec_validation(kw):
    with pytest.raises(BadParameter):
        KernelSpec(**kw)


# dual objective

def test_dual_objective_examples():
    X, y = [[-1.0], [1.0]], [-1, 1]
    assert dual_objective([0, 0], X, y) == 0.0
    assert dual_objective([0.5, 0.5], X, y) == pytest.approx(0.5)


def test_dual_objective_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        dual_objective([0.5], [[1.0], [2.0]], [1, -1])


# training

def test_two_point_analytic():
    model = train_svm([[-1.0], [1.0]], [-1, 1], c_param=10.0)
    assert model.weights[0] == pytest.approx(1.0, abs=1e-3)
    assert model.bias == pytest.approx(0.0, abs=1e-3)
    np.testing.assert_allclose(model.alphas, [0.5, 0.5], atol=1e-3)
    assert decision_value(model, [3.0]) == pytest.approx(3.0, abs=1e-3)
    assert predict(model, [3.0]) == 1


def test_two_point_midpoint():
    model = train_svm([[0.0, 0.0], [2.0, 2.0]], [-1, 1], c_param=10.0, scale=False)
    assert abs(decision_value(model, [1.0, 1.0])) <= 1e-3


def test_conflicting_duplicates_small_c():
    X = [[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [-1.0, -1.0]]
    y = [1, -1, 1, -1]
    model = train_svm(X, y, c_param=0.05)
    assert model.converged
    # each of the clashing points must sit at a bound
    Z = model.scaler.transform(np.array(X))
    for a, sv in zip(model.alphas, model.support_vectors):
        if np.allclose(sv, Z[0]):
            assert a == 0.0 or a == model.c_param


def test_tie_at_zero_predicts_infected():
    model = train_svm([[-1.0], [1.0]], [-1, 1], c_param=10.0)
    exact = SvmModel(alphas=model.alphas, support_vectors=model.support_vectors,
                     support_labels=model.support_labels, bias=0.0, weights=np.array([1.0]),
                     c_param=10.0, kernel=model.kernel, scaler=model.scaler)
    assert decision_value(exact, [0.0]) == 0.0
    assert predict(exact, [0.0]) == 1


def test_support_vector_margin(rng):
    X = np.vstack([rng.normal(-3, 0.5, size=(15, 2)), rng.normal(3, 0.5, size=(15, 2))])
    y = np.repeat([-1, 1], 15)
    model = train_svm(X, y, c_param=100.0)
    f = model.decision_values(X)
    neg_sv = [i for i in range(30) if y[i] < 0 and np.any(
        np.all(np.isclose(model.support_vectors, model.scaler.transform(X[i])), axis=1))]
    assert neg_sv
    assert all(f[i] <= -1 + 1e-3 for i in neg_sv)


def test_predict_dimension_mismatch():
    model = train_svm([[-1.0, 0.0], [1.0, 0.0]], [-1, 1])
    with pytest.raises(DimensionMismatch):
        decision_value(model, [1.0])


@pytest.mark.parametrize("X,y,exc", [
    ([[1.0], [2.0]], [1, 1], SingleClass),
    (np.empty((0, 2)), [], EmptyDataset),
    ([[1.0], [2.0]], [1], DimensionMismatch),
    ([[1.0], [2.0]], [1, 0], BadParameter),
])
def test_training_errors(X, y, exc):
    with pytest.raises(exc):
        train_svm(X, y)


def test_nonpositive_c():
    with pytest.raises(BadParameter):
        train_svm([[0.0], [1.0]], [-1, 1], c_param=0.0)


def test_budget_exhaustion_flags(caplog, rng):
    X = rng.normal(size=(40, 3))
    y = np.where(rng.random(40) < 0.5, -1, 1)
    with caplog.at_level(logging.WARNING, logger="fishscan.svm"):
        model = train_svm(X, y, c_param=100.0, tol=1e-12, max_passes=0)
    assert not model.converged
    assert "before reaching tolerance" in caplog.text


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(1, 3),
       st.sampled_from([0.1, 1.0, 10.0]))
def test_constraints_kkt_and_grid_oracle(seed, n, d, c_param):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = np.array([-1.0, 1.0] + list(np.where(rng.random(n - 2) < 0.5, -1.0, 1.0)))
    tol = 1e-3
    model = train_svm(X, y, c_param=c_param, tol=tol, scale=False)
    assert model.converged
    assert np.all(model.alphas >= -1e-9) and np.all(model.alphas <= c_param + 1e-9)
    assert abs(model.alphas @ model.support_labels) <= 1e-6
    np.testing.assert_allclose(model.weights, (model.alphas * model.support_labels)
                               @ model.support_vectors, atol=1e-9)
    assert kkt_ok(model, X, y, tol)
    K = X @ X.T
    full = np.zeros(n)
    for a, sv in zip(model.alphas, model.support_vectors):
        full[np.all(X == sv, axis=1).nonzero()[0][0]] = a
    assert dual_objective(full, X, y) >= grid_optimum(K, y, c_param, points=11) - 1e-3


@pytest.mark.parametrize("kind", ["linear", "gaussian", "polynomial"])
def test_dual_monotone(rng, kind):
    X = rng.normal(size=(30, 3))
    y = np.where(X[:, 0] + 0.3 * rng.normal(size=30) > 0, 1.0, -1.0)
    K = KernelSpec(kind, degree=2, gamma=0.5, coef0=1.0).matrix(X, X)
    res = smo_solve(K, y, 1.0, tol=1e-6, trace=True)
    assert res.converged
    assert np.all(np.diff(res.objective_trace) >= -1e-10)


@pytest.mark.parametrize("kind", ["gaussian", "polynomial", "sigmoid"])
def test_nonlinear_kernels_fit(rng, kind):
    r = np.sqrt(rng.uniform(0, 1, 80))
    t = rng.uniform(0, 2 * np.pi, 80)
    X = np.c_[r * np.cos(t), r * np.sin(t)]
    y = np.where(r > 0.6, 1.0, -1.0)
    spec = KernelSpec(kind, degree=2, gamma=1.0, coef0=1.0 if kind == "polynomial" else 0.0)
    model = train_svm(X, y, c_param=10.0, kernel=spec, max_passes=2000)
    acc = np.mean(model.predict_labels(X) == y)
    assert model.weights is None
    if kind != "sigmoid":
        assert acc >= 0.9


def test_presentation_order_invariance(rng):
    X = np.vstack([rng.normal(-2, 0.6, size=(20, 2)), rng.normal(2, 0.6, size=(20, 2))])
    y = np.repeat([-1.0, 1.0], 20)
    probes = np.stack(np.meshgrid(np.linspace(-4, 4, 15), np.linspace(-4, 4, 15)), -1).reshape(-1, 2)
    base = train_svm(X, y, c_param=10.0, tol=1e-6).predict_labels(probes)
    for _ in range(3):
        perm = rng.permutation(40)
        again = train_svm(X[perm], y[perm], c_param=10.0, tol=1e-6).predict_labels(probes)
        np.testing.assert_array_equal(base, again)


def test_deterministic_given_seed(rng):
    X = rng.normal(size=(50, 4))
    y = np.where(rng.random(50) < 0.5, -1.0, 1.0)
    a = model_to_json(train_svm(X, y, seed=3))
    b = model_to_json(train_svm(X, y, seed=3))
    assert a == b


# persistence

@pytest.mark.parametrize("kind", ["linear", "gaussian"])
def test_json_round_trip(rng, kind):
    X = rng.normal(size=(25, 10))
    y = np.where(X[:, 0] > 0, 1.0, -1.0)
    model = train_svm(X, y, kernel=KernelSpec(kind))
    text = model_to_json(model)
    assert text.endswith("\n")
    again = model_from_json(text)
    np.testing.assert_array_equal(again.decision_values(X), model.decision_values(X))
    assert model_to_json(again) == text
    doc = json.loads(text)
    assert doc["version"] == 1 and doc["label_map"] == {"1": "infected", "-1": "fresh"}


def test_json_version_check(rng):
    X = rng.normal(size=(6, 2))
    doc = json.loads(model_to_json(train_svm(X, [1, -1, 1, -1, 1, -1])))
    doc["version"] = 99
    with pytest.raises(ModelVersionMismatch):
        model_from_json(json.dumps(doc))
