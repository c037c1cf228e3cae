import math

import numpy as np
import pytest

import stdpp

SEP = {"family": "sep_gauss_exp", "rho": 0.1, "alpha_s": 1.0, "alpha_t": 1.0}
WINDOW = (10.0, 10.0, 10.0)


def test_version():
    assert stdpp.__version__


def test_validate_reports_bound():
    r = stdpp.validate(SEP)
    assert r["valid"]
    assert r["rho_max"] == pytest.approx(1 / (2 * math.pi), rel=1e-12)
    bad = {"family": "matern_nonsep", "gamma": 1.0, "alpha_s": 1.0, "alpha_t": 1.0}
    assert not stdpp.validate(bad)["valid"]


def test_missing_field_raises():
    with pytest.raises(stdpp.InvalidParameter):
        stdpp.validate({"family": "matern_nonsep", "alpha_s": 1.0, "alpha_t": 1.0})
    with pytest.raises(ValueError):
        stdpp.validate({"family": "no_such_family"})


def test_normalize_fills_defaults():
    m = stdpp.normalize_model(SEP)
    assert m["sigma2_s"] == 1.0 and m["sigma2_t"] == 1.0


def test_kernel_and_pcf_closed_form():
    assert stdpp.kernel_value(SEP, 0.0, 0.0) == pytest.approx(0.1)
    g = stdpp.pcf(SEP, [0.0, 0.5, 1.0], [0.0, 0.5])
    assert g.shape == (3, 2)
    assert g[0, 0] == 0.0
    expected = 1 - math.exp(-2 * (0.25 + 0.5))
    assert g[1, 1] == pytest.approx(expected, rel=1e-12)


def test_kfun_methods_agree():
    u, t = [0.5, 1.0], [0.5, 1.0]
    a = stdpp.kfun(SEP, u, t, "closed_form")
    b = stdpp.kfun(SEP, u, t)
    np.testing.assert_allclose(a, b, rtol=1e-7)


def test_product_density_pair():
    pts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    c = 0.1 * math.exp(-1.0)
    assert stdpp.product_density(SEP, pts) == pytest.approx(0.01 - c * c, rel=1e-12)


def test_simulation_is_deterministic_and_inside_window():
    model = dict(SEP, rho=0.15)
    a = stdpp.simulate(model, WINDOW, seed=5, replicates=2)
    b = stdpp.simulate(model, WINDOW, seed=5, replicates=2)
    assert len(a) == 2
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
        assert x.shape[1] == 3
        assert np.all(x >= 0) and np.all(x <= 10)
    assert not np.array_equal(a[0], a[1])


def test_poisson_kfun_estimate():
    pats = stdpp.simulate_poisson(0.5, WINDOW, seed=3, replicates=20)
    assert stdpp.estimate_intensity(pats, WINDOW) == pytest.approx(0.5, rel=0.05)
    k = stdpp.estimate_kfun(pats, WINDOW, [1.0], [1.0])
    assert k[0, 0] == pytest.approx(math.pi, rel=0.1)
    g = stdpp.estimate_pcf(pats, WINDOW, [1.0], [1.0])
    assert g[0, 0] == pytest.approx(1.0, rel=0.15)


def test_fit_returns_dict():
    model = dict(SEP, rho=0.15)
    pats = stdpp.simulate(model, WINDOW, seed=9, replicates=4)
    grid = [0.25 * i for i in range(7)]
    res = stdpp.fit(pats, WINDOW, "sep_gauss_exp", {"alpha_s": (0.2, 3.0), "alpha_t": (0.2, 3.0)}, grid, grid)
    assert res["family"] == "sep_gauss_exp"
    assert res["converged"]
    assert 0.2 <= res["parameters"]["alpha_s"] <= 3.0


def test_points_outside_window_rejected():
    with pytest.raises(stdpp.InvalidParameter):
        stdpp.estimate_intensity([np.array([[11.0, 1.0, 1.0]])], WINDOW)
