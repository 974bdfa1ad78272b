"""
Contrast functions G and their derivatives g = G' and g' = G''.

Each G is centred so that ``E[G(z)] = 0`` for a standard normal ``z``:

======  ==================  ====================  =====================
kind    G (before centring) g                     g'
======  ==================  ====================  =====================
pow3    z^4 / 4             z^3                   3 z^2
skew    z^3 / 3             z^2                   2 z
tanh    log cosh(a z) / a   tanh(a z)             a (1 - tanh^2(a z))
gaus    -exp(-a z^2/2) / a  z exp(-a z^2/2)       (1 - a z^2) exp(-a z^2/2)
======  ==================  ====================  =====================
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .exceptions import ParameterError

__all__ = ["Nonlinearity", "make_nonlinearity", "g_values", "NONLINEARITIES"]

NONLINEARITIES = ("pow3", "tanh", "gaus", "skew")

LOG2 = math.log(2.0)


def _logcosh(x):
    # log(cosh(x)) without overflow
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - LOG2


def _tanh_center(a: float) -> float:
    x, w = hermegauss(200)
    w = w / w.sum()
    return float(np.sum(w * _logcosh(a * x))) / a


@dataclass(frozen=True)
class Nonlinearity:
    """A centred contrast function ``G`` with its first two derivatives."""

    kind: str
    a: float = 1.0
    center: float = 0.0

    def G(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "pow3":
            raw = 0.25 * z**4
        elif self.kind == "skew":
            raw = z**3 / 3.0
        elif self.kind == "tanh":
            raw = _logcosh(self.a * z) / self.a
        else:
            raw = -np.exp(-0.5 * self.a * z**2) / self.a
        return raw - self.center

    def g(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "pow3":
            return z**3
        if self.kind == "skew":
            return z**2
        if self.kind == "tanh":
            return np.tanh(self.a * z)
        return z * np.exp(-0.5 * self.a * z**2)

    def gprime(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "pow3":
            return 3.0 * z**2
        if self.kind == "skew":
            return 2.0 * z
        if self.kind == "tanh":
            t = np.tanh(self.a * z)
            return self.a * (1.0 - t * t)
        return (1.0 - self.a * z**2) * np.exp(-0.5 * self.a * z**2)

    def __str__(self) -> str:
        if self.kind in ("tanh", "gaus"):
            return f"{self.kind}(a={self.a:g})"
        return self.kind


def make_nonlinearity(kind: str, a: float = 1.0) -> Nonlinearity:
    """Build one of ``pow3``, ``tanh``, ``gaus`` or ``skew``.

    ``a`` is the tuning constant of ``tanh`` and ``gaus`` and is ignored
    (stored as 1) for the polynomial kinds.
    """
    kind = kind.lower()
    if kind not in NONLINEARITIES:
        raise ParameterError(f"unknown nonlinearity {kind!r}; expected one of {NONLINEARITIES}")
    if kind in ("pow3", "skew"):
        return Nonlinearity(kind, 1.0, 0.75 if kind == "pow3" else 0.0)
    a = float(a)
    if not a > 0 or not math.isfinite(a):
        raise ParameterError(f"tuning parameter a must be positive for {kind}, got {a}")
    if kind == "tanh":
        return Nonlinearity(kind, a, _tanh_center(a))
    # E[exp(-a z^2 / 2)] = (1 + a)^(-1/2)
    return Nonlinearity(kind, a, -1.0 / (a * math.sqrt(1.0 + a)))


def g_values(nl: Nonlinearity, z) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(G(z), g(z), g'(z))`` elementwise, with the centring applied to G."""
    z = np.asarray(z, dtype=float)
    return nl.G(z), nl.g(z), nl.gprime(z)
