"""nu-one-class SVM with an RBF kernel, trained by SMO on the dual

    min  1/2 a'Ka   s.t.  0 <= a_i <= 1/(nu n),  sum(a) = 1

with decision function f(x) = sum_i a_i K(x_i, x) - rho. Inputs are z-scored
per dimension before the kernel is applied.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

DEFAULT_NU = 0.05
DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITER = 100_000


class DegenerateData(ValueError):
    pass


class NonConvergence(RuntimeError):
    def __init__(self, model: "SvmModel", violation: float, iterations: int):
        super().__init__(f"SMO stopped after {iterations} iterations with KKT violation {violation:.3g}")
        self.model = model
        self.violation = violation
        self.iterations = iterations


def as_matrix(vectors) -> np.ndarray:
    if len(vectors) and hasattr(vectors[0], "as_array"):
        return np.vstack([v.as_array() for v in vectors])
    return np.atleast_2d(np.asarray(vectors, dtype=float))


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    sq = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@dataclass
class Scaler:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Scaler":
        std = x.std(axis=0)
        std[std < 1e-12] = 1.0
        return cls(x.mean(axis=0), std)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std


@dataclass
class SmoResult:
    alpha: np.ndarray
    rho: float
    violation: float
    iterations: int
    converged: bool


def smo_solve(K: np.ndarray, upper: float, tol: float = DEFAULT_TOL,
              max_iter: int = DEFAULT_MAX_ITER) -> SmoResult:
    """Two-coordinate descent on the one-class dual, maximal-violating-pair
    selection, starting from the uniform point a_i = 1/n."""
    n = K.shape[0]
    alpha = np.full(n, 1.0 / n)
    if upper - 1.0 / n < 1e-15:
        alpha[:] = upper
    grad = K @ alpha
    diag = np.diag(K).copy()
    violation = np.inf
    it = 0
    while True:
        can_up = alpha < upper
        can_down = alpha > 0
        g_up = np.where(can_up, grad, np.inf)
        g_down = np.where(can_down, grad, -np.inf)
        i = int(np.argmin(g_up))
        j = int(np.argmax(g_down))
        violation = float(g_down[j] - g_up[i])
        if violation <= tol or it >= max_iter:
            break
        it += 1
        eta = max(diag[i] + diag[j] - 2.0 * K[i, j], 1e-12)
        step = (grad[j] - grad[i]) / eta
        room_i = upper - alpha[i]
        room_j = alpha[j]
        if step >= room_i and room_i <= room_j:
            step = room_i
            alpha[i] = upper
            alpha[j] -= step
        elif step >= room_j:
            step = room_j
            alpha[i] += step
            alpha[j] = 0.0
        else:
            alpha[i] += step
            alpha[j] -= step
        grad += step * (K[:, i] - K[:, j])
    return SmoResult(alpha, _offset(alpha, grad, upper), max(violation, 0.0), it,
                     violation <= tol)


def _offset(alpha: np.ndarray, grad: np.ndarray, upper: float) -> float:
    free = (alpha > 0) & (alpha < upper)
    if free.any():
        return float(grad[free].mean())
    at_zero = grad[alpha <= 0]
    at_upper = grad[alpha >= upper]
    hi = at_zero.min() if at_zero.size else at_upper.max()
    lo = at_upper.max() if at_upper.size else at_zero.min()
    return float((hi + lo) / 2.0)


@dataclass
class SvmModel:
    nu: float
    gamma: float
    rho: float
    scaler: Scaler
    svs: np.ndarray        # support vectors, already scaled
    alphas: np.ndarray
    tol: float = DEFAULT_TOL
    violation: float = 0.0
    iterations: int = 0
    n_train: int = 0

    def decision_function(self, vectors) -> np.ndarray:
        x = self.scaler.transform(as_matrix(vectors))
        return rbf_kernel(x, self.svs, self.gamma) @ self.alphas - self.rho

    def predict(self, v) -> tuple[float, bool]:
        score = float(self.decision_function([v])[0])
        return score, is_outlier(score, self.tol)

    def predict_many(self, vectors) -> tuple[np.ndarray, np.ndarray]:
        scores = self.decision_function(vectors)
        return scores, scores < -self.tol

    def to_dict(self) -> dict:
        return {
            "nu": self.nu,
            "gamma": self.gamma,
            "rho": self.rho,
            "scaling": {"mean": self.scaler.mean.tolist(), "std": self.scaler.std.tolist()},
            "svs": self.svs.tolist(),
            "alphas": self.alphas.tolist(),
            "tol": self.tol,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        sc = d["scaling"]
        return cls(float(d["nu"]), float(d["gamma"]), float(d["rho"]),
                   Scaler(np.array(sc["mean"], dtype=float), np.array(sc["std"], dtype=float)),
                   np.array(d["svs"], dtype=float).reshape(-1, len(sc["mean"])),
                   np.array(d["alphas"], dtype=float), float(d.get("tol", DEFAULT_TOL)))

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "SvmModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def is_outlier(score: float, tol: float = DEFAULT_TOL) -> bool:
    """Scores within `tol` of zero are margin points (the solver only pins
    them down to the KKT tolerance) and count as inliers."""
    return score < -tol


def default_gamma(n_features: int) -> float:
    # unit variance per standardized dimension
    return 1.0 / n_features


def fit(vectors, nu: float = DEFAULT_NU, gamma: Optional[float] = None, tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER) -> SvmModel:
    x = as_matrix(vectors)
    n = x.shape[0]
    if not 0 < nu <= 1:
        raise ValueError(f"nu must lie in (0, 1], got {nu}")
    if n < 2:
        raise DegenerateData(f"need at least 2 training vectors, got {n}")
    if n * nu < 1:
        raise DegenerateData(f"n*nu = {n * nu:.3g} < 1: box constraint infeasible")
    if gamma is None:
        gamma = default_gamma(x.shape[1])
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    scaler = Scaler.fit(x)
    xs = scaler.transform(x)
    K = rbf_kernel(xs, xs, gamma)
    res = smo_solve(K, 1.0 / (nu * n), tol, max_iter)
    sv = res.alpha > 0
    model = SvmModel(nu, gamma, res.rho, scaler, xs[sv], res.alpha[sv], tol, res.violation,
                     res.iterations, n)
    if not res.converged:
        raise NonConvergence(model, res.violation, res.iterations)
    return model


def predict(model: SvmModel, v) -> tuple[float, bool]:
    return model.predict(v)


@dataclass
class CrossValidation:
    accuracies: list[float]

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))


def cross_validate(vectors, nu: float = DEFAULT_NU, gamma: Optional[float] = None, k: int = 10,
                   seed: int = 0, tol: float = DEFAULT_TOL) -> CrossValidation:
    """k-fold accuracy on positive-only data: the fraction of each held-out
    fold predicted as inliers by a model fit on the remaining folds."""
    x = as_matrix(vectors)
    n = x.shape[0]
    if k < 2 or n < k:
        raise ValueError(f"cross-validation needs 2 <= k <= n (k={k}, n={n})")
    order = np.random.default_rng(seed).permutation(n)
    folds = np.array_split(order, k)
    accs = []
    for i, held in enumerate(folds):
        train = np.concatenate([f for j, f in enumerate(folds) if j != i])
        model = fit(x[train], nu, gamma, tol)
        _, out = model.predict_many(x[held])
        accs.append(float(1.0 - out.mean()))
    return CrossValidation(accs)


def training_stats(model: SvmModel, vectors) -> dict:
    _, out = model.predict_many(vectors)
    return {"outlier_fraction": float(out.mean()),
            "sv_fraction": float(len(model.alphas) / model.n_train) if model.n_train else None}
