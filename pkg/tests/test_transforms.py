from __future__ import annotations

import numpy as np
import pytest

import oracles as O
from freeprob import measures as M
from freeprob import transforms as T
from freeprob.errors import ConvergenceError, MassError, ValidationError


def upper_points(n, seed=0, lo=0.05, radius=4.0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-radius, radius, n) + 1j * rng.uniform(lo, radius, n)


def arcsine(x):
    return 1.0 / (np.pi * np.sqrt(4.0 - x * x))


def bernoulli_power_density(n, x):
    c2 = 4.0 * (n - 1.0)
    return n * np.sqrt(np.maximum(c2 - x * x, 0.0)) / (2 * np.pi * (n * n - x * x))


@pytest.fixture(scope="module")
def semi():
    return M.make_semicircle()


@pytest.fixture(scope="module")
def bern():
    return M.make_bernoulli()


# -- Cauchy transform ---------------------------------------------------------

@pytest.mark.parametrize("name,params,closed", [
    ("semicircle", {}, ("semicircle", {})),
    ("arcsine", {}, ("arcsine", {})),
    ("bernoulli", {}, ("bernoulli", {})),
    ("free_poisson", {"lam": 1.0}, ("free_poisson", {"lam": 1.0})),
    ("free_poisson", {"lam": 0.5}, ("free_poisson", {"lam": 0.5})),
    ("cauchy", {}, ("cauchy", {})),
])
def test_cauchy_matches_closed_form(name, params, closed):
    mu = M.zoo(name, **params)
    z = upper_points(50, lo=0.3)
    got = T.cauchy(mu, z)
    expect = T.closed_form(closed[0], **closed[1])(z)
    assert np.max(np.abs(got - expect)) < 1e-5


def test_semicircle_at_2i(semi):
    # quadrature oracle and the closed value i(1 - sqrt 2)
    exact = 1j * (1 - np.sqrt(2))
    assert O.cauchy_by_quadrature(O.semicircle_density, -2, 2, 2j) == pytest.approx(exact, abs=1e-9)
    assert T.cauchy(semi, 2j) == pytest.approx(exact, abs=1e-6)


def test_semicircle_moment_series(semi):
    # z = 2i lies on the circle of convergence |z| = 2 of the moment series,
    # so the series check uses a point well outside it
    z = 5j
    series = sum(O.catalan(k) / z ** (2 * k + 1) for k in range(25))
    assert T.cauchy(semi, z) == pytest.approx(series, abs=1e-6)


def test_cauchy_against_quadrature_free_poisson():
    f, a, b = O.free_poisson_density(2.0)
    mu = M.make_free_poisson(2.0)
    for z in (0.5 + 0.2j, 3.0 + 1.0j, -1.0 + 0.1j):
        assert T.cauchy(mu, z) == pytest.approx(O.cauchy_by_quadrature(f, a, b, z), abs=1e-5)


def test_cauchy_rejects_lower_half_plane(semi):
    for z in (1.0, 1.0 - 1j, np.array([1j, -1j])):
        with pytest.raises(ValidationError):
            T.cauchy(semi, z)


def test_h_and_f_transforms(semi):
    z = upper_points(20)
    assert np.allclose(T.f_transform(semi, z), 1 / T.cauchy(semi, z))
    assert np.allclose(T.htransform(semi, z), 1 / T.cauchy(semi, z) - z)
    assert T.htransform(M.make_dirac(1.5), 2j) == pytest.approx(-1.5)
    assert T.htransform(M.make_cauchy(), 2j) == pytest.approx(1j)


def test_closed_form_lookup():
    with pytest.raises(ValidationError):
        T.closed_form("nope")
    with pytest.raises(ValidationError):
        T.closed_form("semicircle", lam=2)
    assert T.closed_form("bernoulli_power", n=2)(3j) == pytest.approx(T.closed_form("arcsine")(3j))


def test_r_transform_series():
    assert T.r_transform_series(M.make_semicircle(), 6) == pytest.approx([0, 1, 0, 0, 0, 0], abs=1e-6)
    assert T.r_transform_series(M.make_free_poisson(2.0), 5) == pytest.approx([2.0] * 5, rel=1e-5)
    assert T.r_transform_series(M.make_bernoulli(), 6) == pytest.approx([0, 1, 0, -1, 0, 2])


# -- Stieltjes inversion -------------------------------------------------------

def test_invert_arcsine():
    grid = np.linspace(-2, 2, 4001)
    inv = T.stieltjes_invert(T.closed_form("arcsine"), grid, expected_mass=None)
    inner = np.abs(grid) <= 1.8
    assert np.max(np.abs(inv.density[inner] - arcsine(grid[inner]))) < 5e-3


def test_invert_semicircle_normalized():
    grid = np.linspace(-2.05, 2.05, 2001)
    inv = T.stieltjes_invert(T.closed_form("semicircle"), grid)
    dens = np.array([O.semicircle_density(x) for x in grid])
    inner = np.abs(grid) <= 1.9
    assert np.max(np.abs(inv.density[inner] - dens[inner])) < 2e-3
    assert np.max(np.abs(inv.density - dens)) < 1e-2
    assert M.trapezoid_weights(grid) @ inv.density == pytest.approx(1.0)
    mu = inv.to_measure()
    assert M.moments_of_measure(mu, 2)[1] == pytest.approx(1.0, abs=2e-3)


def test_invert_detects_point_mass():
    grid = np.linspace(-0.2, 3.2, 2001)
    with pytest.raises(MassError) as err:
        T.stieltjes_invert(T.closed_form("free_poisson", lam=0.5), grid)
    assert err.value.mass < 0.9


def test_invert_reports_missing_mass():
    # a window that misses most of the Cauchy law
    with pytest.raises(MassError):
        T.stieltjes_invert(T.closed_form("cauchy"), np.linspace(-3, 3, 601))
    inv = T.stieltjes_invert(T.closed_form("cauchy"), np.linspace(-3, 3, 601), expected_mass=None)
    assert inv.density == pytest.approx(1 / (np.pi * (1 + inv.grid ** 2)), abs=1e-3)


def test_invert_validation():
    G = T.closed_form("semicircle")
    with pytest.raises(ValidationError):
        T.stieltjes_invert(G, [0.0, 1.0])
    with pytest.raises(ValidationError):
        T.stieltjes_invert(G, [0.0, 2.0, 1.0])
    grid = np.linspace(-2, 2, 101)
    for eps in ([0.1], [0.1, 0.1], [0.1, -0.1]):
        with pytest.raises(ValidationError):
            T.stieltjes_invert(G, grid, eps=eps)


def test_extrapolation_is_exact_on_linear_data():
    s = [np.array([1.0 + 2.0 * e]) for e in (0.1, 0.2, 0.4)]
    assert T.extrapolate_density(s, [0.1, 0.2, 0.4]) == pytest.approx([1.0])


# -- subordination ----------------------------------------------------------------

def test_subordinate_dirac_is_shift(semi):
    r = T.subordinate(semi, M.make_dirac(0.7), 1 + 2j)
    assert r.omega == pytest.approx(1 - 0.7 + 2j, abs=1e-15)
    assert r.iterations == 1


def test_subordinate_cauchy_is_shift(semi):
    r = T.subordinate(semi, M.make_cauchy(), 0.3 + 0.5j)
    assert r.omega == pytest.approx(0.3 + 1.5j, abs=1e-15)


def test_bernoulli_subordination_closed_form(bern):
    z = upper_points(40, seed=3, lo=0.01)
    s = T.subordinate_many(bern, bern, z)
    expect = (z + np.sqrt(z - 2) * np.sqrt(z + 2)) / 2
    assert np.max(np.abs(s.omega - expect)) < 1e-8


@pytest.mark.parametrize("pair", [("semicircle", "free_poisson"), ("bernoulli", "arcsine"),
                                  ("three_atoms", "semicircle"), ("quartercircular", "four_atoms")])
def test_subordination_fixed_point_and_symmetry(pair):
    mu, nu = M.zoo(pair[0]), M.zoo(pair[1])
    z = upper_points(30, seed=5, lo=0.1)
    w1 = T.subordinate_many(mu, nu, z).omega
    w2 = T.subordinate_many(nu, mu, z).omega
    assert np.max(np.abs(T.subordination_map(mu, nu, z, w1) - w1)) < 1e-9
    # F_mu(w1) = F_nu(w2) = w1 + w2 - z
    assert np.max(np.abs(T.f_transform(mu, w1) - (w1 + w2 - z))) < 1e-8
    assert np.max(np.abs(T.f_transform(nu, w2) - (w1 + w2 - z))) < 1e-8
    assert np.all(w1.imag >= z.imag - 1e-12)


def test_aitken_agrees_and_helps(bern):
    z = np.array([0.1 + 0.01j, 1.9 + 0.005j, 0.5 + 0.1j])
    plain = T.subordinate_many(bern, bern, z)
    fast = T.subordinate_many(bern, bern, z, aitken=True)
    assert np.max(np.abs(plain.omega - fast.omega)) < 1e-8
    assert fast.iterations.sum() <= plain.iterations.sum()


def test_convergence_error(bern):
    with pytest.raises(ConvergenceError) as err:
        T.subordinate(bern, bern, 0.1 + 0.01j, max_iter=3)
    assert err.value.iterations == 3 and err.value.residual > 0
    s = T.subordinate_many(bern, bern, [0.1 + 0.01j], max_iter=3, strict=False)
    assert s.iterations[0] == 3


def test_subordinate_validation(bern):
    with pytest.raises(ValidationError):
        T.subordinate(bern, bern, 1.0)
    with pytest.raises(ValidationError):
        T.subordinate(bern, bern, 1j, tol=0)
    with pytest.raises(ValidationError):
        T.subordinate(bern, bern, [1j, 2j])


# -- free convolution --------------------------------------------------------------

def test_bernoulli_square_is_arcsine(bern):
    mu = T.free_convolve(bern, bern)
    x = mu.grid
    inner = np.abs(x) <= 1.9
    l1 = np.sum(M.trapezoid_weights(x[inner]) * np.abs(mu.values[inner] - arcsine(x[inner])))
    assert l1 < 1e-2
    assert mu.diagnostics["max_residual"] < 1e-9


def test_semicircle_sum_is_semicircle(semi):
    mu = T.free_convolve(semi, semi)
    sig = np.sqrt(2)
    expect = np.sqrt(np.maximum(8 - mu.grid ** 2, 0)) / (2 * np.pi * sig ** 2)
    assert np.max(np.abs(mu.values - expect)) < 1e-2
    assert M.moments_of_measure(mu, 4) == pytest.approx([0, 2, 0, 8], abs=2e-2)


def test_convolve_with_dirac(semi):
    assert T.free_convolve(M.make_dirac(1.0), M.make_dirac(2.0)) == M.make_dirac(3.0)
    s = T.free_convolve(semi, M.make_dirac(0.5))
    assert s == semi.shifted(0.5)
    assert T.free_convolve(M.make_dirac(0.5), semi) == semi.shifted(0.5)


def test_convolve_emergent_atom_raises():
    a = M.make_two_point(0.0, 1.0, 0.8)
    b = M.make_two_point(0.0, 1.0, 0.7)
    with pytest.raises(MassError):
        T.free_convolve(a, b)


def test_convolve_validation(semi, bern):
    with pytest.raises(ValidationError):
        T.free_convolve(M.make_cauchy(), semi)
    with pytest.raises(ValidationError):
        T.free_convolve(semi, bern, grid=np.linspace(-2, 2, 100))


def test_convolve_backends_agree(bern):
    a = T.free_convolve(bern, bern, backend="numpy", n_points=400)
    b = T.free_convolve(bern, bern, n_points=400)
    assert np.max(np.abs(a.values - b.values)) < 1e-8


# -- convolution powers ----------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 3, 4])
def test_bernoulli_powers(bern, n):
    mu = T.convolution_power(bern, n)
    c = 2 * np.sqrt(n - 1)
    inner = np.abs(mu.grid) <= 0.95 * c
    err = np.max(np.abs(mu.values[inner] - bernoulli_power_density(n, mu.grid[inner])))
    assert err < 1e-2
    assert mu.atoms == ()


def test_fractional_power(bern):
    mu = T.convolution_power(bern, 1.5)
    assert np.allclose(mu.atoms, [(-1.5, 0.25), (1.5, 0.25)])
    assert np.all(mu.values >= 0)
    assert mu.total_mass() == pytest.approx(1.0, abs=1e-6)


def test_free_poisson_power_keeps_atom():
    mu = T.convolution_power(M.make_free_poisson(0.5), 1.5)
    assert np.allclose(mu.atoms, [(0.0, 0.25)])
    assert M.moments_of_measure(mu, 2) == pytest.approx([0.75, 0.75 + 0.75 ** 2], abs=5e-3)


def test_power_edge_cases(semi):
    assert T.convolution_power(semi, 1) is semi
    assert T.convolution_power(M.make_dirac(1.0), 3) == M.make_dirac(3.0)
    with pytest.raises(ValidationError):
        T.convolution_power(semi, 0.5)
    assert T.power_atoms(M.make_bernoulli(), 3) == []


@pytest.mark.parametrize("lam", [0.5, 2.0, 4.0])
def test_free_poisson_density_by_inversion(lam):
    mu = M.make_free_poisson(lam)
    a, b = (1 - np.sqrt(lam)) ** 2, (1 + np.sqrt(lam)) ** 2
    grid = np.linspace(a + 0.05 * (b - a), b - 0.05 * (b - a), 801)
    inv = T.stieltjes_invert(T.closed_form("free_poisson", lam=lam), grid, eps=(1e-4, 5e-5),
                             expected_mass=None)
    assert np.max(np.abs(inv.density - mu.density_at(grid))) < 2e-3


@pytest.mark.parametrize("pair", [("semicircle", "free_poisson"), ("bernoulli", "bernoulli"),
                                  ("three_atoms", "arcsine")])
def test_omega_grows_like_z(pair):
    mu, nu = M.zoo(pair[0]), M.zoo(pair[1])
    y = np.array([1e2, 1e4, 1e6])
    w = T.subordinate_many(mu, nu, 1j * y).omega
    assert np.all(np.abs(w / (1j * y) - 1) < 10 / y)
