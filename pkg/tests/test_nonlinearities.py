import math

import numpy as np
import pytest

from sqfastica.distributions import expect, std_normal
from sqfastica.exceptions import ParameterError
from sqfastica.nonlinearities import NONLINEARITIES, g_values, make_nonlinearity

ALL = [make_nonlinearity(k, a) for k in NONLINEARITIES for a in (0.5, 1.0, 2.0)]


@pytest.mark.parametrize("nl", ALL, ids=lambda nl: f"{nl.kind}-{nl.a}")
def test_gaussian_centering(nl):
    assert abs(expect(std_normal(), nl.G)) < 1e-9


@pytest.mark.parametrize("nl", ALL, ids=lambda nl: f"{nl.kind}-{nl.a}")
def test_derivatives_match_finite_differences(nl):
    z = np.linspace(-4, 4, 50)
    h = 1e-5
    dG = (nl.G(z + h) - nl.G(z - h)) / (2 * h)
    dg = (nl.g(z + h) - nl.g(z - h)) / (2 * h)
    scale_g = np.maximum(np.abs(nl.g(z)), 1.0)
    scale_gp = np.maximum(np.abs(nl.gprime(z)), 1.0)
    assert np.max(np.abs(dG - nl.g(z)) / scale_g) < 1e-6
    assert np.max(np.abs(dg - nl.gprime(z)) / scale_gp) < 1e-6


def test_pow3():
    nl = make_nonlinearity("pow3")
    assert nl.g(2.0) == 8
    assert nl.G(2.0) == pytest.approx(3.25)
    G, g, gp = g_values(nl, np.array([0.0, 1.0]))
    np.testing.assert_allclose(G, [-0.75, -0.5])
    np.testing.assert_allclose(g, [0, 1])
    np.testing.assert_allclose(gp, [0, 3])


def test_gaus_center():
    nl = make_nonlinearity("gaus", 1.0)
    assert nl.center == pytest.approx(-1 / math.sqrt(2), abs=1e-15)
    G, _, _ = g_values(nl, np.array([0.0]))
    assert G[0] == pytest.approx(-1 + 1 / math.sqrt(2), abs=1e-15)


def test_tanh_at_zero():
    nl = make_nonlinearity("tanh", 1.0)
    assert nl.g(0.0) == 0
    assert nl.gprime(0.0) == 1


def test_skew_even_g():
    _, g, _ = g_values(make_nonlinearity("skew"), np.array([-1.0, 1.0]))
    np.testing.assert_allclose(g, [1, 1])


def test_logcosh_large_arguments_finite():
    nl = make_nonlinearity("tanh", 2.0)
    z = np.array([-1e4, 1e4])
    assert np.all(np.isfinite(nl.G(z)))
    assert nl.G(1e4) == pytest.approx(1e4 - math.log(2) / 2 - nl.center)


def test_bad_tuning_constant():
    for kind in ("tanh", "gaus"):
        with pytest.raises(ParameterError):
            make_nonlinearity(kind, 0.0)
    with pytest.raises(ParameterError):
        make_nonlinearity("cubic")
