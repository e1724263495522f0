"""Soft-margin SVM over pair features, trained by an SMO dual solver.

The solver follows the standard working-set scheme: pick the maximal violating
pair with a second-order gain heuristic, solve the two-variable subproblem in
closed form, repeat until the KKT gap m(alpha) - M(alpha) drops below tol.
The scan order is fixed, so the result is deterministic for a given input; no
randomness is consumed (the seed parameter is accepted for interface
stability only).

The bias b is the mean of y_i - u_i over free support vectors, with a bound
midpoint fallback, so decision values match the usual dual convention
f(x) = sum_i alpha_i y_i K(x_i, x) + b.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

DEFAULT_C = 1.0
# A loose KKT gap leaves decision values ~1e-3 off the exact optimum, which
# is too coarse to certify against an exact reference solver; 1e-5 keeps the
# solver well inside the 1e-4 agreement band at negligible cost.
DEFAULT_TOL = 1e-5
DEFAULT_MAX_ITER = 10_000_000


class DegenerateTrainingError(ValueError):
    """Training set unusable: fewer than 2 samples or a class is absent."""


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"
    gamma: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf":
            if self.gamma is None or not (self.gamma > 0):
                raise ValueError("rbf kernel requires gamma > 0")
        elif self.gamma is not None:
            raise ValueError("linear kernel takes no gamma")


def default_kernel(feature_dim: int) -> KernelSpec:
    return KernelSpec(kind="rbf", gamma=1.0 / feature_dim)


def _kernel_matrix(spec: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if spec.kind == "linear":
        return A @ B.T
    d2 = (np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :]
          - 2.0 * (A @ B.T))
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-spec.gamma * d2)


@njit(cache=True)
def _smo_solve(K, y, C, tol, max_iter):  # pragma: no cover - exercised via fit
    l = y.shape[0]
    alpha = np.zeros(l)
    G = -np.ones(l)
    tau = 1e-12
    iters = 0
    while iters < max_iter:
        # working-set selection: i = argmax violation, j = best second-order gain
        gmax = -1e300
        i = -1
        for t in range(l):
            if y[t] > 0:
                if alpha[t] < C and -G[t] >= gmax:
                    gmax = -G[t]
                    i = t
            else:
                if alpha[t] > 0.0 and G[t] >= gmax:
                    gmax = G[t]
                    i = t
        gmax2 = -1e300
        j = -1
        obj_min = 1e300
        if i >= 0:
            for t in range(l):
                if y[t] > 0:
                    if alpha[t] > 0.0:
                        if G[t] >= gmax2:
                            gmax2 = G[t]
                        grad_diff = gmax + G[t]
                        if grad_diff > 0.0:
                            quad = K[i, i] + K[t, t] - 2.0 * K[i, t]
                            if quad <= 0.0:
                                quad = tau
                            obj = -(grad_diff * grad_diff) / quad
                            if obj <= obj_min:
                                obj_min = obj
                                j = t
                else:
                    if alpha[t] < C:
                        if -G[t] >= gmax2:
                            gmax2 = -G[t]
                        grad_diff = gmax - G[t]
                        if grad_diff > 0.0:
                            quad = K[i, i] + K[t, t] - 2.0 * K[i, t]
                            if quad <= 0.0:
                                quad = tau
                            obj = -(grad_diff * grad_diff) / quad
                            if obj <= obj_min:
                                obj_min = obj
                                j = t
        if i < 0 or j < 0 or gmax + gmax2 < tol:
            break

        yi = y[i]
        yj = y[j]
        old_ai = alpha[i]
        old_aj = alpha[j]
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0.0:
            quad = tau
        if yi != yj:
            delta = (-G[i] - G[j]) / quad
            diff = old_ai - old_aj
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0.0:
                if alpha[j] < 0.0:
                    alpha[j] = 0.0
                    alpha[i] = diff
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[i] < 0.0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = old_ai + old_aj
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[j] < 0.0:
                    alpha[j] = 0.0
                    alpha[i] = total
                if alpha[i] < 0.0:
                    alpha[i] = 0.0
                    alpha[j] = total

        dai = alpha[i] - old_ai
        daj = alpha[j] - old_aj
        for t in range(l):
            G[t] += (yi * y[t] * K[i, t]) * dai + (yj * y[t] * K[j, t]) * daj
        iters += 1

    # bias: average over free SVs, else midpoint of the KKT bounds
    nr_free = 0
    sum_free = 0.0
    ub = 1e300
    lb = -1e300
    for t in range(l):
        yg = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0:
                if yg < ub:
                    ub = yg
            else:
                if yg > lb:
                    lb = yg
        elif alpha[t] <= 0.0:
            if y[t] > 0:
                if yg < ub:
                    ub = yg
            else:
                if yg > lb:
                    lb = yg
        else:
            nr_free += 1
            sum_free += yg
    if nr_free > 0:
        rho = sum_free / nr_free
    else:
        rho = (ub + lb) / 2.0
    return alpha, rho, iters


@dataclass(frozen=True, eq=False)
class ComparatorModel:
    """Trained comparator; immutable and safe for concurrent prediction."""

    kernel: KernelSpec
    support_vectors: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    C: float
    train_size: int

    def __post_init__(self) -> None:
        if len(self.dual_coefs) != len(self.support_vectors):
            raise ValueError("one dual coefficient per support vector")
        if len(self.dual_coefs) and np.max(np.abs(self.dual_coefs)) > self.C * (1 + 1e-9):
            raise ValueError("dual coefficients must satisfy |a_i| <= C")

    @property
    def feature_dim(self) -> int:
        return self.support_vectors.shape[1]

    def decision_many(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.feature_dim:
            raise ValueError(
                f"feature length {X.shape[1]} does not match training dimensionality "
                f"{self.feature_dim}")
        K = _kernel_matrix(self.kernel, X, self.support_vectors)
        return K @ self.dual_coefs + self.bias

    def decision(self, features: np.ndarray) -> float:
        return float(self.decision_many(features)[0])

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        return (self.decision_many(X) > 0).astype(np.int64)

    def predict(self, features: np.ndarray) -> int:
        return int(self.decision(features) > 0)


def _as_arrays(labeled) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray([p.features for p in labeled], dtype=np.float64)
    y01 = np.asarray([p.label for p in labeled], dtype=np.int64)
    return X, y01


def fit_arrays(X: np.ndarray, y01: np.ndarray, kernel: KernelSpec,
               C: float = DEFAULT_C, seed: int = 0, tol: float = DEFAULT_TOL,
               max_iter: int = DEFAULT_MAX_ITER) -> ComparatorModel:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y01 = np.asarray(y01, dtype=np.int64)
    if len(X) < 2 or len(set(y01.tolist())) < 2:
        raise DegenerateTrainingError(
            f"degenerate training set: {len(X)} samples, classes {sorted(set(y01.tolist()))}")
    if not (C > 0):
        raise ValueError("C must be positive")
    y = np.where(y01 == 1, 1.0, -1.0)
    K = np.ascontiguousarray(_kernel_matrix(kernel, X, X))
    alpha, rho, _ = _smo_solve(K, y, float(C), float(tol), int(max_iter))
    sv = alpha > 1e-12
    return ComparatorModel(
        kernel=kernel,
        support_vectors=np.ascontiguousarray(X[sv]),
        dual_coefs=alpha[sv] * y[sv],
        bias=-float(rho),
        C=float(C),
        train_size=len(X),
    )


def fit(labeled: Sequence, kernel: KernelSpec, C: float = DEFAULT_C,
        seed: int = 0, tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER) -> ComparatorModel:
    """Train on labeled pair samples; deterministic for a given input order."""
    X, y01 = _as_arrays(labeled)
    return fit_arrays(X, y01, kernel, C=C, seed=seed, tol=tol, max_iter=max_iter)


def decision(model, features: np.ndarray) -> float:
    return model.decision(features)


def predict(model, features: np.ndarray) -> int:
    # exact zero counts as class 0
    return model.predict(features)


def _fold_assignment(y01: np.ndarray, folds: int, seed: int) -> np.ndarray:
    """Stratified fold ids, shuffled per class so folds stay class-balanced."""
    rng = np.random.default_rng(seed)
    assign = np.empty(len(y01), dtype=np.int64)
    for cls in (0, 1):
        idx = np.flatnonzero(y01 == cls)
        rng.shuffle(idx)
        for pos, t in enumerate(idx):
            assign[t] = pos % folds
    return assign


def grid_search_fit(labeled: Sequence, folds: int, C_grid: Sequence[float],
                    gamma_grid: Sequence[float], seed: int = 0,
                    kernel_kind: str = "rbf", tol: float = DEFAULT_TOL) -> ComparatorModel:
    """Pick (C, gamma) by mean k-fold accuracy, then refit on everything.

    Ties go to smaller C, then smaller gamma.  Each class needs at least
    `folds` members so every training split keeps both classes.
    """
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if not len(C_grid) or (kernel_kind == "rbf" and not len(gamma_grid)):
        raise ValueError("empty hyperparameter grid")
    X, y01 = _as_arrays(labeled)
    if len(X) < 2 or len(set(y01.tolist())) < 2:
        raise DegenerateTrainingError(
            f"degenerate training set: {len(X)} samples, classes {sorted(set(y01.tolist()))}")
    counts = np.bincount(y01, minlength=2)
    if counts.min() < folds:
        raise DegenerateTrainingError(
            f"degenerate training set: class counts {counts.tolist()} too small for "
            f"{folds}-fold search")
    assign = _fold_assignment(y01, folds, seed)

    gammas = sorted(gamma_grid) if kernel_kind == "rbf" else [None]
    best = None
    for C in sorted(C_grid):
        for gamma in gammas:
            kernel = KernelSpec(kind=kernel_kind, gamma=gamma)
            correct = 0
            total = 0
            for f in range(folds):
                train = assign != f
                held = ~train
                model = fit_arrays(X[train], y01[train], kernel, C=C, seed=seed, tol=tol)
                pred = model.predict_many(X[held])
                correct += int(np.sum(pred == y01[held]))
                total += int(held.sum())
            score = correct / total
            if best is None or score > best[0]:
                best = (score, C, gamma)
    _, C, gamma = best
    kernel = KernelSpec(kind=kernel_kind, gamma=gamma)
    return fit_arrays(X, y01, kernel, C=C, seed=seed, tol=tol)


# -- serialization -------------------------------------------------------------

def serialize_model(model: ComparatorModel) -> str:
    blob = {
        "kind": model.kernel.kind,
        "gamma": model.kernel.gamma,
        "C": model.C,
        "bias": model.bias,
        "train_size": model.train_size,
        "feature_dim": model.feature_dim,
        "support_vectors": [[float(v) for v in row] for row in model.support_vectors],
        "dual_coefs": [float(v) for v in model.dual_coefs],
    }
    return json.dumps(blob, sort_keys=True)


def deserialize_model(text: str) -> ComparatorModel:
    blob = json.loads(text)
    return ComparatorModel(
        kernel=KernelSpec(kind=blob["kind"], gamma=blob["gamma"]),
        support_vectors=np.asarray(blob["support_vectors"], dtype=np.float64).reshape(
            len(blob["dual_coefs"]), blob["feature_dim"]),
        dual_coefs=np.asarray(blob["dual_coefs"], dtype=np.float64),
        bias=float(blob["bias"]),
        C=float(blob["C"]),
        train_size=int(blob["train_size"]),
    )


# -- fast surrogate ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LeastSquaresComparator:
    """Linear least-squares stand-in with the comparator prediction interface.

    Orders of magnitude cheaper than the SVM; used where a test or sweep only
    needs trace arithmetic, not margin quality.
    """

    weights: np.ndarray
    intercept: float

    @classmethod
    def fit(cls, labeled: Sequence, seed: int = 0) -> "LeastSquaresComparator":
        X, y01 = _as_arrays(labeled)
        if len(X) < 2 or len(set(y01.tolist())) < 2:
            raise DegenerateTrainingError(
                f"degenerate training set: {len(X)} samples, "
                f"classes {sorted(set(y01.tolist()))}")
        y = np.where(y01 == 1, 1.0, -1.0)
        A = np.hstack([X, np.ones((len(X), 1))])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        return cls(weights=coef[:-1], intercept=float(coef[-1]))

    @property
    def feature_dim(self) -> int:
        return len(self.weights)

    def decision_many(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.feature_dim:
            raise ValueError(
                f"feature length {X.shape[1]} does not match training dimensionality "
                f"{self.feature_dim}")
        return X @ self.weights + self.intercept

    def decision(self, features: np.ndarray) -> float:
        return float(self.decision_many(features)[0])

    def predict_many(self, X: np.ndarray) -> np.ndarray:
        return (self.decision_many(X) > 0).astype(np.int64)

    def predict(self, features: np.ndarray) -> int:
        return int(self.decision(features) > 0)
