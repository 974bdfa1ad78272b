"""
Minimum distance index between an unmixing estimate and the true mixing matrix.

For the gain matrix ``G = Gamma_hat @ Omega`` the index is

    D = (p - 1)^(-1/2) * inf_C || C G - I ||_F

over matrices ``C`` with exactly one non-zero entry per row and column.
Matching row ``j`` of ``G`` to target ``e_i`` with the best scalar leaves a
squared residual ``1 - G_ji^2 / ||G_j||^2``, so the infimum is a linear
assignment problem on those scores.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import DimensionError

__all__ = [
    "gain_matrix",
    "minimum_distance_index",
    "mdi_bruteforce",
    "scaled_mdi_statistic",
    "match_rows",
]

_TINY_NORM = 1e-300


def gain_matrix(Gamma_hat, Omega) -> np.ndarray:
    Gamma_hat = np.asarray(Gamma_hat, dtype=float)
    Omega = np.asarray(Omega, dtype=float)
    if Gamma_hat.ndim != 2 or Gamma_hat.shape[0] != Gamma_hat.shape[1]:
        raise DimensionError(f"Gamma_hat must be square, got shape {Gamma_hat.shape}")
    if Omega.shape != Gamma_hat.shape:
        raise DimensionError(f"shape mismatch: {Gamma_hat.shape} vs {Omega.shape}")
    if Gamma_hat.shape[0] < 2:
        raise DimensionError("the minimum distance index needs p >= 2")
    return Gamma_hat @ Omega


def _scores(G: np.ndarray) -> np.ndarray:
    # scores[j, i] = G_ji^2 / ||G_j||^2, zero for vanishing rows
    sq = G * G
    norms = sq.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        scores = np.where(norms > _TINY_NORM**2, sq / norms, 0.0)
    return scores


def match_rows(Gamma_hat, Omega) -> np.ndarray:
    """Row permutation ``perm`` such that row ``perm[i]`` of ``Gamma_hat @ Omega``
    estimates target component ``i``."""
    G = gain_matrix(Gamma_hat, Omega)
    rows, cols = linear_sum_assignment(_scores(G), maximize=True)
    perm = np.empty_like(rows)
    perm[cols] = rows
    return perm


def minimum_distance_index(Gamma_hat, Omega) -> float:
    """Minimum distance index in ``[0, 1]`` (0 means perfect separation)."""
    G = gain_matrix(Gamma_hat, Omega)
    p = G.shape[0]
    scores = _scores(G)
    rows, cols = linear_sum_assignment(scores, maximize=True)
    d2 = (p - scores[rows, cols].sum()) / (p - 1)
    return float(math.sqrt(min(max(d2, 0.0), 1.0)))


def mdi_bruteforce(Gamma_hat, Omega) -> float:
    """Minimum distance index by enumerating all ``p!`` permutations (``p <= 7``).

    For each permutation the per-row optimal scale is used and the Frobenius
    distance is evaluated directly.
    """
    G = gain_matrix(Gamma_hat, Omega)
    p = G.shape[0]
    if p > 7:
        raise DimensionError(f"brute force enumeration limited to p <= 7, got p={p}")
    eye = np.eye(p)
    best = np.inf
    for perm in itertools.permutations(range(p)):
        rows = G[list(perm)]
        norms = np.einsum("ij,ij->i", rows, rows)
        diag = rows[np.arange(p), np.arange(p)]
        c = np.divide(diag, norms, out=np.zeros(p), where=norms > _TINY_NORM**2)
        dist = np.linalg.norm(c[:, None] * rows - eye)
        best = min(best, dist)
    return float(min(best / math.sqrt(p - 1), 1.0))


def scaled_mdi_statistic(Gamma_hat, Omega, n: int) -> float:
    """``n (p - 1) D^2``; its mean approaches the sum of off-diagonal ASVs."""
    p = np.asarray(Gamma_hat).shape[0]
    d = minimum_distance_index(Gamma_hat, Omega)
    return float(n * (p - 1) * d * d)
