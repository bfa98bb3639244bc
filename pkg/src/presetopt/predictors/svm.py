"""Kernel SVM classifiers trained with SMO.

Binary machines solve the C-SVC dual with maximal-violating-pair working-set
selection (the first-order rule used by LIBSVM); multiclass problems are
handled one-vs-rest with the arg-max decision score.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Kernel:
    """A named kernel with its parameters, so trained models can be saved."""

    kind: str  # "poly", "rbf" or "linear"
    gamma: float = 1.0
    degree: int = 2
    coef0: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("poly", "rbf", "linear"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")

    def __call__(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        if self.kind == "poly":
            return (self.gamma * (A @ B.T) + self.coef0) ** self.degree
        if self.kind == "rbf":
            sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2 * A @ B.T
            return np.exp(-self.gamma * np.maximum(sq, 0.0))
        return A @ B.T


def polynomial_kernel(gamma: float, degree: int = 2, coef0: float = 1.0) -> Kernel:
    return Kernel("poly", float(gamma), int(degree), float(coef0))


def rbf_kernel(gamma: float) -> Kernel:
    return Kernel("rbf", float(gamma))


def linear_kernel() -> Kernel:
    return Kernel("linear")


@dataclass(frozen=True)
class BinarySVM:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i for each support vector
    bias: float
    alphas: np.ndarray  # full alpha vector, kept for diagnostics
    kkt_gap: float
    iterations: int

    def decision(self, K_sv: np.ndarray) -> np.ndarray:
        """Scores from a precomputed kernel block of shape (n_query, n_sv)."""
        return K_sv @ self.dual_coef + self.bias


def smo_train(
    K: np.ndarray,
    y: np.ndarray,
    C: float = 1.0,
    tol: float = 1e-3,
    max_iter: int | None = None,
) -> tuple[np.ndarray, float, float, int]:
    """Solve ``min 1/2 a'Qa - e'a`` s.t. ``0 <= a <= C, y'a = 0``.

    ``K`` is the full kernel matrix and ``y`` holds +-1 labels. Returns
    ``(alpha, bias, kkt_gap, iterations)``; ``kkt_gap`` is the final maximal
    violation ``m(a) - M(a)``, below ``tol`` at convergence.
    """
    n = len(y)
    y = y.astype(float)
    if max_iter is None:
        max_iter = max(10_000, 100 * n)
    Q = K * np.outer(y, y)
    diag = np.diag(Q).copy()
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of the dual objective, Q a - e
    tau = 1e-12
    it = 0
    gap = np.inf
    while it < max_iter:
        yg = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            gap = 0.0
            break
        i = int(np.flatnonzero(up)[np.argmax(yg[up])])
        j = int(np.flatnonzero(low)[np.argmin(yg[low])])
        gap = float(yg[i] - yg[j])
        if gap < tol:
            break
        it += 1
        # two-variable subproblem along y_i d_i = -y_j d_j
        quad = diag[i] + diag[j] - 2.0 * y[i] * y[j] * Q[i, j]
        quad = max(quad, tau)
        step = gap / quad
        # box limits on the step (t >= 0, a_i += y_i t, a_j -= y_j t)
        t_i = (C - alpha[i]) if y[i] > 0 else alpha[i]
        t_j = alpha[j] if y[j] > 0 else (C - alpha[j])
        t = min(step, t_i, t_j)
        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        alpha[i] = min(max(alpha[i], 0.0), C)
        alpha[j] = min(max(alpha[j], 0.0), C)
        grad += t * (y[i] * Q[:, i] - y[j] * Q[:, j])

    # bias from free vectors, else midpoint of the feasible interval
    yg = -y * grad
    free = (alpha > 1e-12) & (alpha < C - 1e-12)
    if free.any():
        bias = float(yg[free].mean())
    else:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        hi = yg[up].max() if up.any() else 0.0
        lo = yg[low].min() if low.any() else 0.0
        bias = float((hi + lo) / 2)
    return alpha, bias, float(gap), it


def fit_binary_svm(
    X: np.ndarray,
    y: np.ndarray,
    kernel: Callable,
    C: float = 1.0,
    tol: float = 1e-3,
    max_iter: int | None = None,
    K: np.ndarray | None = None,
) -> BinarySVM:
    if K is None:
        K = kernel(X, X)
    alpha, bias, gap, it = smo_train(K, y, C=C, tol=tol, max_iter=max_iter)
    sv = alpha > 1e-12
    return BinarySVM(
        support_vectors=X[sv],
        dual_coef=(alpha * y)[sv],
        bias=bias,
        alphas=alpha,
        kkt_gap=gap,
        iterations=it,
    )


@dataclass(frozen=True)
class OneVsRestSVM:
    classes: tuple[int, ...]
    machines: tuple[BinarySVM, ...]
    kernel: Callable

    def scores(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        out = np.empty((len(X), len(self.classes)))
        for c, m in enumerate(self.machines):
            if len(m.support_vectors):
                out[:, c] = m.decision(self.kernel(X, m.support_vectors))
            else:
                out[:, c] = m.bias
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        if len(self.classes) == 1:
            return np.full(len(np.atleast_2d(X)), self.classes[0])
        # argmax returns the first maximum, i.e. the lowest class id on ties
        return np.asarray(self.classes)[np.argmax(self.scores(X), axis=1)]


def fit_one_vs_rest(
    X: np.ndarray,
    labels: np.ndarray,
    kernel: Callable,
    C: float = 1.0,
    tol: float = 1e-3,
    max_iter: int | None = None,
) -> OneVsRestSVM:
    classes = tuple(int(c) for c in np.unique(labels))
    if len(classes) == 1:
        return OneVsRestSVM(classes, (), kernel)
    K = kernel(X, X)
    machines = []
    for c in classes:
        y = np.where(labels == c, 1.0, -1.0)
        machines.append(fit_binary_svm(X, y, kernel, C=C, tol=tol, max_iter=max_iter, K=K))
    return OneVsRestSVM(classes, tuple(machines), kernel)
