from __future__ import annotations

import io
from math import comb, pi

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles as O
from freeprob import measures as M
from freeprob.errors import ValidationError


@pytest.fixture(scope="module")
def semicircle():
    return M.make_semicircle()


# -- construction and validation ----------------------------------------------

def test_atomic_measures():
    mu = M.make_atomic([(1.0, 0.25), (-1.0, 0.75)])
    assert mu.atoms == ((-1.0, 0.75), (1.0, 0.25))
    assert mu.support_radius == 1.0 and not mu.has_density
    assert M.make_dirac(2.0).is_dirac
    assert M.make_bernoulli().atoms == ((-1.0, 0.5), (1.0, 0.5))


@pytest.mark.parametrize("atoms", [[(0.0, 0.5)], [(0.0, 1.5)], [(0.0, -0.1), (1.0, 1.1)],
                                   [(float("nan"), 1.0)]])
def test_rejects_bad_atoms(atoms):
    with pytest.raises(ValidationError):
        M.make_atomic(atoms)


def test_rejects_bad_density():
    g = np.linspace(0, 1, 11)
    with pytest.raises(ValidationError):
        M.Measure(grid=g, values=-np.ones(11))
    with pytest.raises(ValidationError):
        M.Measure(grid=g[::-1], values=np.ones(11))
    with pytest.raises(ValidationError):
        M.Measure(grid=g, values=2 * np.ones(11))
    with pytest.raises(ValidationError):
        M.Measure(grid=g, values=np.ones(11), support_radius=0.5)


def test_measures_are_immutable(semicircle):
    with pytest.raises(Exception):
        semicircle.values[0] = 1.0
    with pytest.raises(Exception):
        semicircle.name = "x"


@pytest.mark.parametrize("name", sorted(M.ZOO))
def test_zoo_masses(name):
    mu = M.zoo(name)
    assert mu.total_mass() == pytest.approx(1.0, abs=M.MASS_TOL)
    assert np.all(mu.quadrature()[1] >= 0)


def test_zoo_unknown():
    with pytest.raises(ValidationError):
        M.zoo("nope")


# -- moments against closed forms ----------------------------------------------

def test_semicircle_moments(semicircle):
    m = M.moments_of_measure(semicircle, 10)
    expect = [0 if n % 2 else O.catalan(n // 2) for n in range(1, 11)]
    assert m == pytest.approx(expect, rel=1e-6, abs=1e-6)


def test_semicircle_variance_scaling():
    m = M.moments_of_measure(M.make_semicircle(sigma=0.5), 4)
    assert m == pytest.approx([0, 0.25, 0, 2 * 0.25 ** 2], abs=1e-7)


def test_arcsine_moments():
    m = M.moments_of_measure(M.make_arcsine(), 8)
    expect = [0 if n % 2 else comb(n, n // 2) for n in range(1, 9)]
    assert m == pytest.approx(expect, abs=5e-5)


@pytest.mark.parametrize("lam", [1.0, 0.5, 2.0])
def test_free_poisson_moments(lam):
    m = M.moments_of_measure(M.make_free_poisson(lam), 5)
    expect = [float(O.moments_from_cumulants([lam] * 5, n)) for n in range(1, 6)]
    assert m == pytest.approx(expect, rel=1e-5)


def test_free_poisson_atom():
    mu = M.make_free_poisson(0.5)
    assert mu.atoms == ((0.0, 0.5),)
    assert mu.ac_mass() == pytest.approx(0.5, abs=1e-6)


def test_quartercircular_mean():
    assert M.moments_of_measure(M.make_quartercircular(), 1)[0] == pytest.approx(8 / (3 * pi), abs=1e-6)


def test_moment_validation():
    with pytest.raises(ValidationError):
        M.moments_of_measure(M.make_cauchy(), 2)
    with pytest.raises(ValidationError):
        M.moments_of_measure(M.make_bernoulli(), M.MAX_MOMENT_ORDER + 1)


def test_density_matches_function(semicircle):
    x = np.linspace(-1.9, 1.9, 41)
    got = semicircle.density_at(x)
    expect = [O.semicircle_density(t) for t in x]
    assert got == pytest.approx(expect, abs=2e-3)


# -- cdf and quantiles ---------------------------------------------------------------

def test_cdf_atoms_right_continuous():
    mu = M.zoo("three_atoms")
    assert mu.cdf([-2.5, -2.0, -1.5, -1.0, 1.0, 3.0]) == pytest.approx([0, .5, .5, .75, 1, 1])


def test_quantiles_three_atoms():
    mu = M.zoo("three_atoms")
    u = (np.arange(1, 9) - 0.5) / 8
    assert list(mu.quantile(u)) == [-2, -2, -2, -2, -1, -1, 1, 1]


def test_semicircle_cdf_and_quantile(semicircle):
    assert semicircle.cdf(0.0) == pytest.approx(0.5, abs=1e-6)
    # F(1) = 1/2 + (sqrt(3)/2 + pi/3) / (2 pi) for the standard semicircle
    f1 = 0.5 + (np.sqrt(3) / 2 + pi / 3) / (2 * pi)
    assert semicircle.cdf(1.0) == pytest.approx(f1, abs=1e-6)
    assert semicircle.quantile(f1) == pytest.approx(1.0, abs=1e-4)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.001, 0.999))
def test_quantile_inverts_cdf(u):
    mu = M.make_free_poisson(0.5)
    q = float(mu.quantile(u))
    assert mu.cdf(q) >= u - 1e-9
    assert mu.cdf(q - 1e-6) <= u + 1e-9


# -- transformations and serialization -----------------------------------------

def test_shift(semicircle):
    s = semicircle.shifted(1.0)
    assert M.moments_of_measure(s, 2) == pytest.approx([1.0, 2.0], abs=1e-6)
    assert M.make_bernoulli().shifted(1.0).atoms == ((0.0, 0.5), (2.0, 0.5))


@pytest.mark.parametrize("name", ["semicircle", "free_poisson", "three_atoms", "dirac"])
def test_json_round_trip(name):
    mu = M.zoo(name)
    assert M.Measure.from_json(mu.to_json()) == mu


def test_csv_round_trip(semicircle, tmp_path):
    buf = io.StringIO()
    M.write_density_csv(buf, semicircle.grid, semicircle.values)
    x, d = M.read_density_csv(buf.getvalue())
    assert np.array_equal(x, semicircle.grid) and np.array_equal(d, semicircle.values)
    path = tmp_path / "mu.csv"
    path.write_text(semicircle.to_csv())
    assert np.array_equal(M.load_measure(str(path)).values, semicircle.values)
    path = tmp_path / "mu.json"
    path.write_text(M.zoo("four_atoms").to_json())
    assert M.load_measure(str(path)) == M.zoo("four_atoms")


def test_from_density_normalizes():
    mu = M.from_density(lambda x: 1 - np.abs(x), -1, 1)
    assert mu.total_mass() == pytest.approx(1.0, abs=1e-9)
    assert M.moments_of_measure(mu, 2)[1] == pytest.approx(1 / 6, abs=1e-6)


def test_hat_averages_exact_mass():
    # cell averages of a uniform density integrate exactly under the trapezoid rule
    g = M.density_grid(-1.0, 1.0, 7)
    vals = M.hat_averages(lambda t: 0.5 * np.sin(t), g, -1.0, 1.0)
    assert vals == pytest.approx(np.full(g.size, 0.5), abs=1e-14)
    coarse = M.make_semicircle(points_per_unit=50)
    assert coarse.ac_mass() == pytest.approx(1.0, abs=1e-12)


# -- histograms -----------------------------------------------------------------

def test_histogram_basics():
    h = M.Histogram.from_samples([0.1, 0.2, 0.9, 5.0], 2, 0.0, 1.0)
    assert list(h.counts) == [2, 2] and h.total == 4
    assert h.density.sum() * 0.5 == pytest.approx(1.0)
    assert list(h.cdf_at_edges()) == [0, 0.5, 1.0]
    g = h.merge(h)
    assert list(g.counts) == [4, 4]
    with pytest.raises(ValidationError):
        h.merge(M.Histogram.from_samples([0.5], 3, 0.0, 1.0))


def test_histogram_csv_round_trip():
    rng = np.random.default_rng(0)
    h = M.Histogram.from_samples(rng.normal(size=1000), 37, -3.3, 3.1)
    assert M.Histogram.from_csv(h.to_csv()) == h
    assert h.to_csv().splitlines()[0] == "bin_lo,bin_hi,count,density"


def test_histogram_validation():
    with pytest.raises(ValidationError):
        M.Histogram(np.array([0.0, 1.0]), np.array([1, 2]), 3)
    with pytest.raises(ValidationError):
        M.Histogram(np.array([0.0, 1.0]), np.array([2]), 3)
    with pytest.raises(ValidationError):
        M.Histogram.from_csv("a,b\n")


def test_ks_distance(semicircle):
    rng = np.random.default_rng(1)
    samples = semicircle.quantile(rng.uniform(size=20000))
    h = M.Histogram.from_samples(samples, 80, -2.1, 2.1)
    assert M.ks_distance(h, semicircle) < 0.02
    shifted = M.Histogram.from_samples(samples + 0.5, 80, -2.1, 2.6)
    assert M.ks_distance(shifted, semicircle) > 0.15
