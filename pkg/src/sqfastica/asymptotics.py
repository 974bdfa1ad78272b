"""
Population moment functionals, asymptotic variances and efficiencies.

For one standardized source ``z`` and a centred contrast ``G`` the relevant
expectations are

    nu = E[G(z)], mu = E[g(z)], sigma2 = Var[g(z)], lambda = E[g(z) z],
    delta = E[g'(z)], tau = E[g'(z) z], beta4 = E[z^4], s = sign(nu).

The off-diagonal asymptotic variances of the three estimators depend on a
pair of sources only through these numbers.  Writing
``alpha = (sigma2 - lambda^2) / (lambda - delta)^2`` and a method-specific
weight ``w`` (``1/0`` for deflation, ``s (lambda - delta)`` for symmetric,
``nu (lambda - delta)`` for squared symmetric FastICA)

    ASV(g_jl) + ASV(g_lj) = (w_j/(w_j+w_l))^2 (2 alpha_j + 1)
                          + (w_l/(w_j+w_l))^2 (2 alpha_l + 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Sequence

import numpy as np

from .distributions import SourceDistribution, expect, quadrature_rule
from .exceptions import IdentifiabilityError, ParameterError
from .nonlinearities import Nonlinearity

__all__ = [
    "MomentSet",
    "AsvPair",
    "moment_set",
    "alpha",
    "asv",
    "asv_diagonal",
    "asv_sum_theorem",
    "asv_sum",
    "are",
    "expected_mdi_limit",
    "check_g_conditions",
    "GConditionReport",
]

# |lambda - delta| below this counts as Gaussian-like
GAUSS_GUARD = 1e-8
# |nu| below this gives s = 0
SIGN_GUARD = 1e-10


@dataclass(frozen=True)
class MomentSet:
    nu: float
    mu: float
    sigma2: float
    lam: float
    delta: float
    tau: float
    beta4: float
    s: int

    @property
    def gaussian_like(self) -> bool:
        return abs(self.lam - self.delta) < GAUSS_GUARD


@dataclass(frozen=True)
class AsvPair:
    asv_jl: float
    asv_lj: float
    alpha_j: float
    alpha_l: float
    method: str
    sum: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "sum", self.asv_jl + self.asv_lj)


@lru_cache(maxsize=4096)
def moment_set(dist: SourceDistribution, nl: Nonlinearity) -> MomentSet:
    """Moment functionals of ``dist`` under ``nl`` by quadrature (cached)."""
    G, g, gp = nl.G, nl.g, nl.gprime

    def E(h):
        return expect(dist, h)

    nu = E(G)
    mu = E(g)
    sigma2 = max(E(lambda z: g(z) ** 2) - mu * mu, 0.0)
    lam = E(lambda z: g(z) * z)
    delta = E(gp)
    tau = E(lambda z: gp(z) * z)
    beta4 = E(lambda z: z**4)
    s = 0 if abs(nu) < SIGN_GUARD else int(math.copysign(1, nu))
    return MomentSet(
        float(nu), float(mu), float(sigma2), float(lam), float(delta), float(tau), float(beta4), s
    )


def alpha(m: MomentSet) -> float:
    """``(sigma2 - lambda^2) / (lambda - delta)^2``."""
    if m.gaussian_like:
        raise IdentifiabilityError("alpha is undefined for a Gaussian-like component")
    return (m.sigma2 - m.lam**2) / (m.lam - m.delta) ** 2


def _alpha_or_nan(m: MomentSet) -> float:
    return alpha(m) if not m.gaussian_like else float("nan")


def asv_diagonal(m: MomentSet) -> float:
    """Asymptotic variance of a diagonal entry, ``(beta4 - 1) / 4`` for every method."""
    return (m.beta4 - 1.0) / 4.0


def asv(method: str, mj: MomentSet, ml: MomentSet, j_first: bool = True) -> AsvPair:
    """Asymptotic variances of the off-diagonal pair ``(gamma_jl, gamma_lj)``.

    For ``defl`` the component extracted first matters: with
    ``j_first=True`` component ``j`` is found before ``l``.
    """
    if mj.gaussian_like and ml.gaussian_like:
        raise IdentifiabilityError("both components are Gaussian-like under this G")
    aj, al = _alpha_or_nan(mj), _alpha_or_nan(ml)

    if method == "defl":
        first = mj if j_first else ml
        if first.gaussian_like:
            raise IdentifiabilityError("the first extracted component is Gaussian-like")
        a_first = alpha(first)
        if j_first:
            jl, lj = a_first, a_first + 1.0
        else:
            jl, lj = a_first + 1.0, a_first
    elif method == "sym":
        den = ((mj.lam - mj.delta) * mj.s + (ml.lam - ml.delta) * ml.s) ** 2

        def off(a, b):
            return (a.sigma2 + b.sigma2 - a.lam**2 + b.delta * (b.delta - 2 * b.lam)) / den

        if den == 0.0:
            raise IdentifiabilityError("zero denominator in the symmetric ASV")
        jl, lj = off(mj, ml), off(ml, mj)
    elif method == "sym2":
        den = (mj.nu * (mj.lam - mj.delta) + ml.nu * (ml.lam - ml.delta)) ** 2

        def off(a, b):
            return (
                a.nu**2 * (a.sigma2 - a.lam**2)
                + b.nu**2 * (b.sigma2 + b.delta * (b.delta - 2 * b.lam))
            ) / den

        if den == 0.0:
            raise IdentifiabilityError("zero denominator in the squared symmetric ASV")
        jl, lj = off(mj, ml), off(ml, mj)
    else:
        raise ParameterError(f"unknown method {method!r}")
    return AsvPair(float(jl), float(lj), aj, al, method)


def _weights(method: str, mj: MomentSet, ml: MomentSet):
    if method == "defl":
        return 1.0, 0.0
    if method == "sym":
        return mj.s * (mj.lam - mj.delta), ml.s * (ml.lam - ml.delta)
    if method == "sym2":
        return mj.nu * (mj.lam - mj.delta), ml.nu * (ml.lam - ml.delta)
    raise ParameterError(f"unknown method {method!r}")


def asv_sum_theorem(method: str, mj: MomentSet, ml: MomentSet) -> float:
    """Off-diagonal ASV sum from the weighted ``2 alpha + 1`` form.

    Both components must be non-Gaussian under ``G``; for deflation ``j``
    is the component extracted first.
    """
    if mj.gaussian_like or ml.gaussian_like:
        raise IdentifiabilityError(
            "the weighted form needs two non-Gaussian components; use asv() instead"
        )
    wj, wl = _weights(method, mj, ml)
    tot = wj + wl
    return (wj / tot) ** 2 * (2 * alpha(mj) + 1) + (wl / tot) ** 2 * (2 * alpha(ml) + 1)


def _defl_first(mj: MomentSet, ml: MomentSet) -> bool:
    """True when ``j`` is extracted before ``l`` (larger ``|nu|`` first, ties keep order)."""
    return abs(mj.nu) >= abs(ml.nu)


def asv_sum(method: str, mj: MomentSet, ml: MomentSet) -> float:
    """``ASV(gamma_jl) + ASV(gamma_lj)``; deflation extracts the larger ``|nu|`` first."""
    j_first = _defl_first(mj, ml) if method == "defl" else True
    return asv(method, mj, ml, j_first).sum


def are(
    method_a: str,
    method_b: str,
    d1: SourceDistribution,
    d2: SourceDistribution,
    nl: Nonlinearity,
) -> float:
    """Asymptotic efficiency of ``method_a`` relative to ``method_b``:
    ``sum_b / sum_a`` (values above 1 favour ``method_a``)."""
    m1, m2 = moment_set(d1, nl), moment_set(d2, nl)
    return asv_sum(method_b, m1, m2) / asv_sum(method_a, m1, m2)


def expected_mdi_limit(
    method: str, dists: Sequence[SourceDistribution], nl: Nonlinearity
) -> float:
    """Limit of ``E[n (p-1) D^2]``: the sum of all off-diagonal ASVs.

    For deflation the components are ordered by decreasing ``|nu|``, the
    order in which :func:`~sqfastica.estimators.initial_rotation` extracts
    them.
    """
    ms = [moment_set(d, nl) for d in dists]
    if len(ms) < 2:
        raise ParameterError("need at least two components")
    if method == "defl":
        ms = sorted(ms, key=lambda m: -abs(m.nu))
    total = 0.0
    for j in range(len(ms)):
        for l in range(j + 1, len(ms)):
            total += asv(method, ms[j], ms[l], True).sum
    return total


# ---------------------------------------------------------------------------
# Consistency conditions on G
# ---------------------------------------------------------------------------


@dataclass
class GConditionReport:
    """Outcome of the rotation sweep in :func:`check_g_conditions`.

    For each condition ``holds[c]`` says whether the inequality held at
    every grid angle, ``worst_theta[c]`` is the angle of the largest
    ``lhs - rhs`` and ``worst_margin[c]`` that value (positive means
    violated).
    """

    theta: np.ndarray
    EG1: np.ndarray
    EG2: np.ndarray
    base: tuple
    holds: dict
    worst_theta: dict
    worst_margin: dict

    def lines(self) -> List[str]:
        out = [f"E[G(z1)] = {self.base[0]:.10g}, E[G(z2)] = {self.base[1]:.10g}"]
        for c in ("def", "sym", "sym2"):
            status = "holds" if self.holds[c] else "VIOLATED"
            out.append(
                f"{c:5s} {status:9s} worst theta = {self.worst_theta[c]:.6f} "
                f"margin = {self.worst_margin[c]:.6e}"
            )
        return out


def _tensor_rule(dist: SourceDistribution, G, tol: float):
    """Refine the fixed rule of ``dist`` until ``E[G]`` and ``E[z^4]`` match the
    adaptive quadrature within ``tol``."""
    targets = (expect(dist, G), expect(dist, lambda z: z**4))
    for level in (1, 2, 4, 8):
        x, w = quadrature_rule(dist, level)
        got = (float(np.sum(w * G(x))), float(np.sum(w * x**4)))
        if all(abs(a - b) <= tol * max(1.0, abs(b)) for a, b in zip(got, targets)):
            return x, w
    raise ParameterError(f"tensor quadrature for {dist} did not reach tolerance {tol}")


# Margins below this are treated as equality (round-off at theta = 0).
CONDITION_SLACK = 1e-10


def check_g_conditions(
    d1: SourceDistribution,
    d2: SourceDistribution,
    nl: Nonlinearity,
    grid: int = 721,
    tol: float = 1e-8,
) -> GConditionReport:
    """Sweep ``U(theta) = [[c, s], [-s, c]]`` over ``theta in [0, pi/2]`` and test

    * def:  ``|E G(u_k'z)| <= max(|E G(z1)|, |E G(z2)|)`` for both rows,
    * sym:  ``|E G(u_1'z)| + |E G(u_2'z)| <= |E G(z1)| + |E G(z2)|``,
    * sym2: the same with squares.

    Expectations use a tensor product of per-axis quadrature rules refined to
    ``tol``.
    """
    if grid < 8:
        raise ParameterError("grid must have at least 8 points")
    G = nl.G
    x1, w1 = _tensor_rule(d1, G, tol)
    x2, w2 = _tensor_rule(d2, G, tol)
    W = np.outer(w1, w2)
    base1, base2 = float(np.sum(w1 * G(x1))), float(np.sum(w2 * G(x2)))
    theta = np.linspace(0.0, 0.5 * np.pi, grid)
    e1 = np.empty(grid)
    e2 = np.empty(grid)
    for k, t in enumerate(theta):
        c, s = math.cos(t), math.sin(t)
        e1[k] = np.sum(W * G(c * x1[:, None] + s * x2[None, :]))
        e2[k] = np.sum(W * G(-s * x1[:, None] + c * x2[None, :]))
    margins = {
        "def": np.maximum(np.abs(e1), np.abs(e2)) - max(abs(base1), abs(base2)),
        "sym": np.abs(e1) + np.abs(e2) - abs(base1) - abs(base2),
        "sym2": e1**2 + e2**2 - base1**2 - base2**2,
    }
    holds, worst_t, worst_m = {}, {}, {}
    for c, m in margins.items():
        k = int(np.argmax(m))
        holds[c] = bool(m[k] <= CONDITION_SLACK)
        worst_t[c] = float(theta[k])
        worst_m[c] = float(m[k])
    return GConditionReport(theta, e1, e2, (base1, base2), holds, worst_t, worst_m)
