import math

import numpy as np
import pytest
from scipy import stats

from sqfastica.distributions import (
    BIMODAL_Z2,
    bimodal_mixture,
    expect,
    make_exp_power,
    make_gamma_std,
    make_gauss_mix4,
    parse_dist_spec,
    quadrature_rule,
    sample,
    std_normal,
    uniform,
)
from sqfastica.exceptions import ParameterError

ALL_DISTS = [
    make_exp_power(0.5),
    make_exp_power(1),
    make_exp_power(1.5),
    make_exp_power(2),
    make_exp_power(4),
    make_gamma_std(1),
    make_gamma_std(3),
    make_gamma_std(6),
    std_normal(),
    uniform(),
    bimodal_mixture("z1"),
    bimodal_mixture("z2"),
]


@pytest.mark.parametrize("dist", ALL_DISTS, ids=str)
def test_standardized_moments(dist):
    assert abs(expect(dist, lambda x: 1.0) - 1) < 1e-8
    assert abs(expect(dist, lambda x: x)) < 1e-6
    assert abs(expect(dist, lambda x: x * x) - 1) < 1e-6


def test_ep2_is_standard_normal():
    x = np.linspace(-5, 5, 100)
    np.testing.assert_allclose(make_exp_power(2).pdf(x), stats.norm.pdf(x), rtol=0, atol=1e-12)


def test_laplace_density_and_kurtosis():
    lap = make_exp_power(1)
    assert lap.pdf(0.0) == pytest.approx(1 / math.sqrt(2), abs=1e-14)
    assert abs(expect(lap, lambda x: x**4) - 6) < 1e-6


def test_exponential():
    d = make_gamma_std(1)
    assert d.support()[0] == pytest.approx(-1.0)
    x = np.linspace(-0.99, 6, 50)
    np.testing.assert_allclose(d.pdf(x), np.exp(-(x + 1)), rtol=1e-12)
    assert d.pdf(-1.5) == 0
    assert abs(expect(d, lambda x: x**3) - 2) < 1e-6


@pytest.mark.parametrize("alpha", [0.7, 2.0, 5.0])
def test_gamma_skewness(alpha):
    assert expect(make_gamma_std(alpha), lambda x: x**3) == pytest.approx(2 / math.sqrt(alpha), abs=1e-6)


@pytest.mark.parametrize("beta", [0.5, 1, 3])
def test_ep_fourth_moment_closed_form(beta):
    # E x^4 = Gamma(5/b) Gamma(1/b) / Gamma(3/b)^2
    g = math.gamma
    want = g(5 / beta) * g(1 / beta) / g(3 / beta) ** 2
    assert expect(make_exp_power(beta), lambda x: x**4) == pytest.approx(want, rel=1e-8)


def test_uniform_moments():
    assert expect(uniform(), lambda x: x**4) == pytest.approx(9 / 5, abs=1e-12)


def test_parameter_errors():
    for bad in (0, -1.0):
        with pytest.raises(ParameterError):
            make_exp_power(bad)
        with pytest.raises(ParameterError):
            make_gamma_std(bad)
    with pytest.raises(ParameterError):
        make_gauss_mix4([(0.5, 0, 1), (0.4, 1, 1), (0.0, 0, 1), (0.0, 0, 1)])
    with pytest.raises(ParameterError):
        make_gauss_mix4([(0.5, 0, 1), (0.5, 1, 0), (0.0, 0, 1), (0.0, 0, 1)])


def test_single_component_mixture_is_normal():
    d = make_gauss_mix4([(1, 0, 1), (0, 0, 1), (0, 0, 1), (0, 0, 1)])
    x = np.linspace(-4, 4, 33)
    np.testing.assert_allclose(d.pdf(x), stats.norm.pdf(x), atol=1e-14)


def test_z2_raw_moments_near_standard():
    w, m, v = np.asarray(BIMODAL_Z2).T
    mean = np.sum(w * m)
    var = np.sum(w * (v + m**2)) - mean**2
    assert abs(mean) < 0.05
    assert abs(var - 1) < 0.05


def test_z1_is_bimodal():
    d = bimodal_mixture("z1")
    x = np.linspace(-3, 3, 2001)
    f = d.pdf(x)
    peaks = np.sum((f[1:-1] > f[:-2]) & (f[1:-1] > f[2:]))
    assert peaks >= 2


def test_sample_determinism():
    for d in ALL_DISTS:
        np.testing.assert_array_equal(sample(d, 100, 7), sample(d, 100, 7))


def test_sample_mean_normal():
    x = sample(std_normal(), 10**6, 3)
    assert abs(x.mean()) < 4 / 1000


def test_sample_kurtosis_laplace():
    x = sample(make_exp_power(1), 10**6, 4)
    assert abs(np.mean(x**4) - 6) < 0.05 * 6


@pytest.mark.parametrize("dist", ALL_DISTS, ids=str)
def test_sample_moments_within_mc_error(dist):
    x = sample(dist, 10**5, 11)
    for k in range(1, 5):
        mu = expect(dist, lambda t, k=k: t**k)
        sd = math.sqrt(expect(dist, lambda t, k=k: t ** (2 * k)) - mu**2)
        assert abs(np.mean(x**k) - mu) < 5 * sd / math.sqrt(x.size), k


@pytest.mark.parametrize("dist", ALL_DISTS, ids=str)
def test_quadrature_rule_matches_expect(dist):
    x, w = quadrature_rule(dist, 2)
    for h in (lambda t: t**2, lambda t: t**4, lambda t: np.logaddexp(t, -t) - np.log(2)):
        assert np.sum(w * h(x)) == pytest.approx(expect(dist, h), abs=1e-8)


def test_parse_dist_spec(tmp_path):
    assert str(parse_dist_spec("ep:1")) == "L"
    assert str(parse_dist_spec("ep:3")) == "EP3"
    assert str(parse_dist_spec("gamma:6")) == "G6"
    assert parse_dist_spec("normal").kind == "std_normal"
    assert parse_dist_spec("uniform").kind == "uniform"
    path = tmp_path / "m.txt"
    path.write_text("0.25 -1 0.5\n0.25 1 0.5\n0.25 -2 0.5\n0.25 2 0.5\n")
    d = parse_dist_spec(f"mix4:{path}")
    assert abs(expect(d, lambda x: x * x) - 1) < 1e-10
    with pytest.raises(ParameterError):
        parse_dist_spec("cauchy")
    with pytest.raises(ParameterError):
        parse_dist_spec("ep:abc")
