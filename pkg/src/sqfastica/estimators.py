"""
Whitening and the three FastICA unmixing matrix estimators.

All estimators work on the whitened data ``z = S^{-1/2} (x - mean)`` and look
for an orthogonal ``U``; the returned unmixing matrix is
``Gamma = U S^{-1/2}``.  With ``T*(u) = mean[g(u'z) z] - mean[g'(u'z)] u``:

* ``defl`` finds the rows one at a time, deflating against earlier rows,
* ``sym`` updates all rows with ``T*`` and re-orthogonalizes
  ``U <- (T T')^{-1/2} T``,
* ``sym2`` does the same with rows weighted by ``mean[G(u'z)]``, which is the
  stationary point of the sum of squared ``E[G]`` rather than of their
  absolute values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.stats import ortho_group

from .exceptions import DegenerateUpdateError, DimensionError, SingularCovarianceError
from .nonlinearities import Nonlinearity, make_nonlinearity

__all__ = [
    "METHODS",
    "WhiteningResult",
    "UnmixingEstimate",
    "InitialRotation",
    "whiten",
    "random_orthogonal",
    "initial_rotation",
    "deflation_fastica",
    "symmetric_fastica",
    "squared_symmetric_fastica",
    "estimating_residual",
    "fastica",
]

METHODS = ("defl", "sym", "sym2")

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 2000
# Seed of the random start used for the preliminary estimate.
PRELIMINARY_SEED = 20160101


@dataclass(frozen=True)
class WhiteningResult:
    """Sample mean, symmetric inverse square root of the covariance and the
    whitened data (``p x n``)."""

    mean: np.ndarray
    S_inv_sqrt: np.ndarray
    Z_st: np.ndarray
    S: np.ndarray = field(repr=False)
    S_sqrt: np.ndarray = field(repr=False)


@dataclass
class UnmixingEstimate:
    """Result of one FastICA fit.

    ``Gamma = U @ S_inv_sqrt``.  ``residual`` is the largest violation of
    the method's sample estimating equations (see
    :func:`estimating_residual`).
    """

    Gamma: np.ndarray
    method: str
    iterations: int
    converged: bool
    residual: float
    U: np.ndarray
    whitening: Optional[WhiteningResult] = field(default=None, repr=False)

    def unmix(self, X) -> np.ndarray:
        """Estimated sources ``Gamma (x_i - mean)`` for data laid out ``p x n``."""
        X = np.asarray(X, dtype=float)
        return self.Gamma @ (X - self.whitening.mean[:, None])

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "Gamma": self.Gamma.tolist(),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "residual": float(self.residual),
        }


class InitialRotation(NamedTuple):
    U: np.ndarray
    preliminary_converged: bool


def _check_data(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError(f"data must be a p x n matrix, got ndim={X.ndim}")
    p, n = X.shape
    if p < 2:
        raise DimensionError("need at least two components")
    if n <= p:
        raise DimensionError(f"need more observations than components (p={p}, n={n})")
    if not np.all(np.isfinite(X)):
        raise ValueError("data contain non-finite values")
    return X


def whiten(X) -> WhiteningResult:
    """Center and whiten ``X`` (``p x n``, columns are observations).

    The covariance uses divisor ``n`` and ``S^{-1/2}`` is the symmetric root.
    """
    X = _check_data(X)
    n = X.shape[1]
    mean = X.mean(axis=1)
    Xc = X - mean[:, None]
    S = Xc @ Xc.T / n
    S = 0.5 * (S + S.T)
    d, V = np.linalg.eigh(S)
    if d[-1] <= 0 or d[0] < 1e-12 * d[-1]:
        raise SingularCovarianceError(
            f"sample covariance is singular (eigenvalues {d[0]:.3g} .. {d[-1]:.3g})"
        )
    S_inv_sqrt = (V / np.sqrt(d)) @ V.T
    S_inv_sqrt = 0.5 * (S_inv_sqrt + S_inv_sqrt.T)
    S_sqrt = (V * np.sqrt(d)) @ V.T
    S_sqrt = 0.5 * (S_sqrt + S_sqrt.T)
    return WhiteningResult(mean, S_inv_sqrt, S_inv_sqrt @ Xc, S, S_sqrt)


def random_orthogonal(p: int, seed=None) -> np.ndarray:
    """Haar-distributed ``p x p`` orthogonal matrix."""
    return ortho_group.rvs(dim=p, random_state=np.random.default_rng(seed))


def _sym_orth(T: np.ndarray) -> np.ndarray:
    """``(T T')^{-1/2} T``."""
    W, s, Vt = np.linalg.svd(T)
    if not s[0] > 0 or s[-1] <= 1e-12 * s[0]:
        raise DegenerateUpdateError(
            f"T T' is singular in the orthogonalization step (singular values {s})"
        )
    return W @ Vt


def _row_distance(U_new: np.ndarray, U_old: np.ndarray) -> float:
    # rows are only defined up to sign
    plus = np.linalg.norm(U_new + U_old, axis=1)
    minus = np.linalg.norm(U_new - U_old, axis=1)
    return float(np.max(np.minimum(plus, minus)))


def _tstar(U: np.ndarray, Z: np.ndarray, nl: Nonlinearity):
    """Rows ``T*(u_j)`` and the weights ``mean[G(u_j'z)]``."""
    n = Z.shape[1]
    Y = U @ Z
    T = nl.g(Y) @ Z.T / n - nl.gprime(Y).mean(axis=1)[:, None] * U
    return T, nl.G(Y).mean(axis=1)


def _fix_signs(U: np.ndarray, S_inv_sqrt: np.ndarray):
    Gamma = U @ S_inv_sqrt
    idx = np.argmax(np.abs(Gamma), axis=1)
    signs = np.sign(Gamma[np.arange(Gamma.shape[0]), idx])
    signs[signs == 0] = 1.0
    return signs[:, None] * U, signs[:, None] * Gamma


def _finish(U, method, iterations, converged, wr, nl) -> UnmixingEstimate:
    U, Gamma = _fix_signs(U, wr.S_inv_sqrt)
    est = UnmixingEstimate(Gamma, method, iterations, converged, np.nan, U, wr)
    est.residual = _residual_whitened(est, wr, nl)
    return est


def _check_start(U0, p) -> np.ndarray:
    U0 = np.asarray(U0, dtype=float)
    if U0.shape != (p, p):
        raise DimensionError(f"initial rotation must be {p} x {p}, got {U0.shape}")
    if not np.allclose(U0 @ U0.T, np.eye(p), atol=1e-8):
        raise ValueError("initial rotation is not orthogonal")
    return U0


def _symmetric_iteration(wr, nl, U0, tol, max_iter, squared):
    Z = wr.Z_st
    U = _sym_orth(_check_start(U0, Z.shape[0]))
    for it in range(1, max_iter + 1):
        T, nu = _tstar(U, Z, nl)
        if squared:
            if np.all(np.abs(nu) < 1e-12):
                raise DegenerateUpdateError(
                    "all weights mean[G(u'z)] vanish; the components look Gaussian under G"
                )
            T = nu[:, None] * T
        U_new = _sym_orth(T)
        dist = _row_distance(U_new, U)
        U = U_new
        if dist < tol:
            return U, it, True
    return U, max_iter, False


def symmetric_fastica(
    X,
    nl: Nonlinearity,
    U0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    whitening: Optional[WhiteningResult] = None,
) -> UnmixingEstimate:
    """Symmetric FastICA with the stabilized update ``T*``.

    Converges when every row moves (up to sign) by less than ``tol`` in
    Euclidean norm; on failure ``converged`` is ``False`` and the last
    iterate is returned.
    """
    wr = whitening if whitening is not None else whiten(X)
    U, it, ok = _symmetric_iteration(wr, nl, U0, tol, max_iter, squared=False)
    return _finish(U, "sym", it, ok, wr, nl)


def squared_symmetric_fastica(
    X,
    nl: Nonlinearity,
    U0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    whitening: Optional[WhiteningResult] = None,
) -> UnmixingEstimate:
    """Squared symmetric FastICA: rows of the symmetric update weighted by
    ``mean[G(u_j'z)]``."""
    wr = whitening if whitening is not None else whiten(X)
    U, it, ok = _symmetric_iteration(wr, nl, U0, tol, max_iter, squared=True)
    return _finish(U, "sym2", it, ok, wr, nl)


def deflation_fastica(
    X,
    nl: Nonlinearity,
    U0,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    whitening: Optional[WhiteningResult] = None,
    seed=0,
) -> UnmixingEstimate:
    """Deflation-based FastICA (modified Newton-Raphson step per row).

    Row ``j`` starts from ``U0[j]``.  A row that does not converge within
    ``max_iter`` steps is restarted once from a random direction (drawn
    from ``seed``) orthogonal to the rows already found.
    """
    wr = whitening if whitening is not None else whiten(X)
    Z = wr.Z_st
    p, n = Z.shape
    U0 = _check_start(U0, p)
    rng = np.random.default_rng(seed)
    U = np.zeros((p, p))
    total = 0
    all_ok = True

    def project(v, j):
        if j:
            v = v - U[:j].T @ (U[:j] @ v)
        return v

    for j in range(p):
        start = U0[j]
        ok = False
        for attempt in range(2):
            u = project(start, j)
            nu_ = np.linalg.norm(u)
            if nu_ < 1e-8:
                u = project(rng.standard_normal(p), j)
                nu_ = np.linalg.norm(u)
            u = u / nu_
            if j == p - 1:
                # the last row is fixed by orthogonality
                ok = True
                break
            for _ in range(max_iter):
                y = u @ Z
                w = Z @ nl.g(y) / n - nl.gprime(y).mean() * u
                w = project(w, j)
                norm_w = np.linalg.norm(w)
                if norm_w < 1e-14:
                    raise DegenerateUpdateError(f"zero update vector for component {j + 1}")
                w = w / norm_w
                total += 1
                dist = min(np.linalg.norm(w - u), np.linalg.norm(w + u))
                u = w
                if dist < tol:
                    ok = True
                    break
            if ok:
                break
            start = rng.standard_normal(p)
        U[j] = u
        all_ok = all_ok and ok
    return _finish(U, "defl", total, all_ok, wr, nl)


def initial_rotation(
    X,
    nl: Nonlinearity,
    seed=PRELIMINARY_SEED,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    whitening: Optional[WhiteningResult] = None,
) -> InitialRotation:
    """Data-driven orthogonal starting value.

    1. Preliminary estimate: squared symmetric FastICA with pow3 from a
       random start drawn from ``seed``.
    2. Order its rows by decreasing ``|mean G(u_j'z)|`` under ``nl``
       (stable sort).
    3. Re-orthogonalize the permuted rotation.

    If the preliminary fit fails, the random start itself is used and
    ``preliminary_converged`` is ``False``.
    """
    wr = whitening if whitening is not None else whiten(X)
    Z = wr.Z_st
    p = Z.shape[0]
    Q = random_orthogonal(p, seed)
    try:
        U, _, ok = _symmetric_iteration(wr, make_nonlinearity("pow3"), Q, tol, max_iter, True)
    except DegenerateUpdateError:
        U, ok = Q, False
    if not ok:
        U = Q
    strength = np.abs(nl.G(U @ Z).mean(axis=1))
    order = np.argsort(-strength, kind="stable")
    return InitialRotation(_sym_orth(U[order]), bool(ok))


# ---------------------------------------------------------------------------
# Estimating equations
# ---------------------------------------------------------------------------


def _residual_whitened(est: UnmixingEstimate, wr: WhiteningResult, nl: Nonlinearity) -> float:
    Gamma = np.asarray(est.Gamma, dtype=float)
    p = Gamma.shape[0]
    n = wr.Z_st.shape[1]
    constraint = np.max(np.abs(Gamma @ wr.S @ Gamma.T - np.eye(p)))
    # rows in whitened coordinates: gamma_j' (x - mean) = u_j' z
    Uh = Gamma @ wr.S_sqrt
    Y = Uh @ wr.Z_st
    T = nl.g(Y) @ wr.Z_st.T / n  # row j is T(u_j)
    if est.method == "defl":
        eq = 0.0
        for j in range(p):
            B = Uh[: j + 1]
            r = T[j] - B.T @ (B @ T[j])
            eq = max(eq, float(np.max(np.abs(r))))
    else:
        nu = nl.G(Y).mean(axis=1)
        if est.method == "sym":
            w = np.where(np.abs(nu) > 0, np.sign(nu), 0.0)
        elif est.method == "sym2":
            w = nu
        else:
            raise ValueError(f"unknown method {est.method!r}")
        # A[l, j] = u_l' T(u_j) w_j must be symmetric
        A = (Uh @ T.T) * w[None, :]
        eq = float(np.max(np.abs(A - A.T)))
    return float(max(eq, constraint))


def estimating_residual(est: UnmixingEstimate, X, nl: Nonlinearity) -> float:
    """Largest violation of the sample estimating equations of ``est.method``
    together with the constraints ``gamma_l' S gamma_j = delta_lj``.

    The deflation equations are measured after premultiplying by
    ``S^{-1/2}`` so that the value does not depend on the scale of the data;
    the symmetric equations are already affine invariant.
    """
    return _residual_whitened(est, whiten(X), nl)


def fastica(
    X,
    method: str = "sym2",
    nl: Optional[Nonlinearity] = None,
    U0=None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    seed=PRELIMINARY_SEED,
    whitening: Optional[WhiteningResult] = None,
) -> UnmixingEstimate:
    """Fit one of the three estimators, choosing the start with
    :func:`initial_rotation` unless ``U0`` is given."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    nl = nl if nl is not None else make_nonlinearity("tanh")
    wr = whitening if whitening is not None else whiten(X)
    if U0 is None:
        U0 = initial_rotation(None, nl, seed, tol, max_iter, whitening=wr).U
    fit = {
        "defl": deflation_fastica,
        "sym": symmetric_fastica,
        "sym2": squared_symmetric_fastica,
    }[method]
    return fit(None, nl, U0, tol, max_iter, whitening=wr)
