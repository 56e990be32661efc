"""Cauchy/F/H transforms, Stieltjes inversion, subordination and free convolution."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import cumulants as C
from .errors import ConvergenceError, MassError, NumericalError, ValidationError
from .kernels import get_backend
from .measures import Measure, make_dirac, moments_of_measure, trapezoid_weights

DEFAULT_TOL = 1e-11
DEFAULT_MAX_ITER = 20000
MASS_WINDOW = 0.02


def _as_upper(z) -> tuple[np.ndarray, bool]:
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(~(z.imag > 0)):
        bad = z[~(z.imag > 0)][0]
        raise ValidationError(f"z = {bad} is not in the upper half-plane")
    return z, scalar


def _out(a: np.ndarray, scalar: bool):
    return complex(a[0]) if scalar else a


def _csqrt_cut(z: np.ndarray, a: float, b: float) -> np.ndarray:
    """sqrt((z - a)(z - b)) with the cut on [a, b] and ~ z at infinity."""
    return np.sqrt(z - a) * np.sqrt(z - b)


def _nodes(mu: Measure) -> tuple[np.ndarray, np.ndarray]:
    x, q = mu.quadrature()
    if mu.atoms:
        x = np.concatenate([x, [a for a, _ in mu.atoms]])
        q = np.concatenate([q, [w for _, w in mu.atoms]])
    return x, q


# -- transforms of a measure ----------------------------------------------

def cauchy(mu: Measure, z, backend: str | None = None, threads: int | None = None):
    """G(z) = integral of 1/(z - t) dmu(t) on the upper half-plane."""
    z, scalar = _as_upper(z)
    if mu.analytic == "cauchy":
        return _out(1.0 / (z + 1j), scalar)
    x, q = _nodes(mu)
    return _out(get_backend(backend).cauchy(z, x, q, threads), scalar)


def f_transform(mu: Measure, z, backend: str | None = None):
    g = cauchy(mu, z, backend)
    if np.any(np.asarray(g) == 0):
        raise NumericalError("Cauchy transform vanished")
    return 1.0 / g


def htransform(mu: Measure, z, backend: str | None = None):
    """H(z) = F(z) - z; identically -a for a point mass at a."""
    if mu.is_dirac:
        a = mu.atoms[0][0]
        z, scalar = _as_upper(z)
        return _out(np.full(z.shape, -a + 0j), scalar)
    if mu.analytic == "cauchy":
        z, scalar = _as_upper(z)
        return _out(np.full(z.shape, 1j), scalar)
    return f_transform(mu, z, backend) - np.asarray(z)


@dataclass(frozen=True)
class TransformEvaluator:
    """An analytic map on the upper half-plane, evaluated on arrays."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, z):
        z, scalar = _as_upper(z)
        return _out(np.asarray(self.fn(z), dtype=complex), scalar)


def cauchy_evaluator(mu: Measure, backend: str | None = None) -> TransformEvaluator:
    return TransformEvaluator(f"G[{mu.name}]", lambda z: cauchy(mu, z, backend))


def _bernoulli_power_G(n: float):
    c = 2.0 * math.sqrt(n - 1.0)
    return lambda z: (n * _csqrt_cut(z, -c, c) - z * (n - 2.0)) / (2.0 * (z * z - n * n))


def _free_poisson_G(lam: float):
    a, b = (1 - math.sqrt(lam)) ** 2, (1 + math.sqrt(lam)) ** 2
    return lambda z: (z + 1.0 - lam - _csqrt_cut(z, a, b)) / (2.0 * z)


CLOSED_FORMS: dict[str, Callable[..., Callable[[np.ndarray], np.ndarray]]] = {
    "arcsine": lambda: (lambda z: 1.0 / _csqrt_cut(z, -2.0, 2.0)),
    "semicircle": lambda sigma=1.0: (
        lambda z: (z - _csqrt_cut(z, -2 * sigma, 2 * sigma)) / (2 * sigma * sigma)),
    "cauchy": lambda: (lambda z: 1.0 / (z + 1j)),
    "bernoulli": lambda: (lambda z: z / (z * z - 1.0)),
    "free_poisson": lambda lam=1.0: _free_poisson_G(lam),
    "bernoulli_power": lambda n=2.0: _bernoulli_power_G(n),
}


def closed_form(name: str, **params) -> TransformEvaluator:
    """Cauchy transform of a named law in closed form."""
    try:
        maker = CLOSED_FORMS[name]
    except KeyError:
        raise ValidationError(f"unknown closed form {name!r}; choose from {sorted(CLOSED_FORMS)}") from None
    try:
        fn = maker(**params)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for {name}: {exc}") from None
    return TransformEvaluator(name, fn)


def r_transform_series(mu: Measure, K: int) -> list[float]:
    """Free cumulants kappa_1..kappa_K, the coefficients of R(z) = sum kappa_n z^(n-1)."""
    if mu.noncompact:
        raise ValidationError("R-transform series needs compact support")
    if not 1 <= K <= C.MAX_LATTICE_ORDER:
        raise ValidationError(f"K must be in [1, {C.MAX_LATTICE_ORDER}]")
    return C.cumulants_from_moments(moments_of_measure(mu, K))


# -- Stieltjes inversion ----------------------------------------------------

@dataclass
class Inversion:
    grid: np.ndarray
    density: np.ndarray
    mass: float
    eps: tuple

    def to_dict(self) -> dict:
        return {"eps": list(self.eps), "mass": self.mass, "grid": self.grid.tolist(),
                "density": self.density.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Inversion":
        try:
            return cls(_check_grid(d["grid"]), np.asarray(d["density"], dtype=float),
                       float(d["mass"]), tuple(float(e) for e in d["eps"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed inversion record: {exc}") from None

    def to_measure(self, atoms: Sequence = (), name: str = "", diagnostics: dict | None = None,
                   support_radius: float = 0.0) -> Measure:
        return Measure(atoms=tuple(atoms), grid=self.grid, values=self.density, name=name,
                       support_radius=support_radius, diagnostics=diagnostics or {})


def default_eps(grid: np.ndarray) -> tuple[float, float]:
    h = (grid[-1] - grid[0]) / (grid.size - 1)
    return (4 * h, 2 * h)


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3 or np.any(np.diff(grid) <= 0):
        raise ValidationError("grid must be an ascending 1-d array with at least 3 points")
    return grid


def _check_eps(eps, grid) -> tuple:
    eps = default_eps(grid) if eps is None else tuple(float(e) for e in eps)
    if len(eps) < 2 or any(not e > 0 for e in eps) or len(set(eps)) != len(eps):
        raise ValidationError("eps schedule needs at least two distinct positive values")
    return eps


def extrapolate_density(samples: Sequence[np.ndarray], eps: Sequence[float]) -> np.ndarray:
    """Least-squares line in eps through -Im G(x + i eps)/pi, evaluated at eps = 0."""
    e = np.asarray(eps)
    A = np.stack([np.ones_like(e), e], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.stack(samples), rcond=None)
    return coef[0]


def point_mass_profile(samples: Sequence[np.ndarray], eps: Sequence[float]) -> np.ndarray:
    """Estimate of mu({x}) at each grid point from pi * eps * density.

    That product is constant in eps at an atom, of order sqrt(eps) next to an
    inverse-square-root edge and of order eps for a bounded density.  Fitting
    a + b sqrt(eps) through the two smallest offsets and keeping ``a`` removes
    the edge term and returns the atom weight.
    """
    order = np.argsort(eps)
    e1, e2 = eps[order[0]], eps[order[1]]
    w1 = np.pi * e1 * samples[order[0]]
    w2 = np.pi * e2 * samples[order[1]]
    r1, r2 = math.sqrt(e1), math.sqrt(e2)
    return (w1 * r2 - w2 * r1) / (r2 - r1)


def stieltjes_invert(G: Callable, grid, eps=None, normalize: bool = True,
                     expected_mass: float | None = 1.0,
                     mass_tol: float = MASS_WINDOW) -> Inversion:
    """Density -Im G(x + i0)/pi on ``grid`` by extrapolating eps -> 0.

    Raises MassError when the absolutely continuous mass is off by more than
    ``mass_tol`` relative to ``expected_mass``: either the integral is wrong
    or part of the mass sits in point masses.  Otherwise rescales to
    ``expected_mass`` if ``normalize``.  ``expected_mass=None`` skips both.
    """
    grid = _check_grid(grid)
    eps = _check_eps(eps, grid)
    samples = [-np.imag(np.asarray(G(grid + 1j * e))) / np.pi for e in eps]
    dens = extrapolate_density(samples, eps)
    dens = np.where(dens < -1e-12, 0.0, np.maximum(dens, 0.0))
    mass = float(trapezoid_weights(grid) @ dens)
    if expected_mass is None:
        return Inversion(grid, dens, mass, eps)
    if not expected_mass > 0:
        raise MassError("no absolutely continuous mass expected", mass=mass, expected=expected_mass)
    window = mass_tol * expected_mass
    atoms = point_mass_profile(samples, eps)
    k = int(np.argmax(atoms))
    if atoms[k] > window:
        raise MassError(f"point mass of weight ~{atoms[k]:.3g} near x = {grid[k]:.6g}; "
                        f"absolutely continuous mass falls short of {expected_mass:.6g}",
                        mass=mass - float(atoms[k]), expected=expected_mass)
    if abs(mass - expected_mass) > window:
        raise MassError(f"recovered mass {mass:.6g} differs from {expected_mass:.6g} by more "
                        f"than {mass_tol:.0%}", mass=mass, expected=expected_mass)
    if normalize:
        dens = dens * (expected_mass / mass)
    return Inversion(grid, dens, mass, eps)


# -- subordination ------------------------------------------------------------

@dataclass(frozen=True)
class SubordinationResult:
    z: complex
    omega: complex
    iterations: int
    residual: float


def _constant_h(m: Measure) -> complex | None:
    if m.is_dirac:
        return -m.atoms[0][0] + 0j
    if m.analytic == "cauchy":
        return 1j
    return None


@dataclass
class _Solved:
    omega: np.ndarray
    iterations: np.ndarray
    residual: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def subordinate_many(mu: Measure, nu: Measure, z, tol: float = DEFAULT_TOL,
                     max_iter: int = DEFAULT_MAX_ITER, aitken: bool = False,
                     backend: str | None = None, threads: int | None = None,
                     strict: bool = True) -> _Solved:
    """omega_1(z) with G_{mu boxplus nu} = G_mu(omega_1), for an array of z."""
    z, _ = _as_upper(z)
    if max_iter < 1 or not tol > 0:
        raise ValidationError("need tol > 0 and max_iter >= 1")
    h_nu, h_mu = _constant_h(nu), _constant_h(mu)
    if h_nu is not None:
        # g(w) = z + h_nu no longer depends on w
        return _Solved(z + h_nu, np.ones(z.size, dtype=int), np.zeros(z.size))
    if h_mu is not None:
        return _Solved(z + htransform(nu, z + h_mu, backend), np.ones(z.size, dtype=int),
                       np.zeros(z.size))
    mx, mw = _nodes(mu)
    nx, nw = _nodes(nu)
    st = get_backend(backend).subordinate(z, mx, mw, nx, nw, tol, max_iter, aitken, threads)
    bad = st.residual > tol * np.maximum(1.0, np.abs(z))
    if strict and np.any(bad):
        k = int(np.argmax(bad))
        raise ConvergenceError(
            f"subordination did not converge at z = {z[k]:.6g} after {st.iterations[k]} "
            f"iterations (residual {st.residual[k]:.3g})",
            z=complex(z[k]), residual=float(st.residual[k]), iterations=int(st.iterations[k]))
    return _Solved(st.omega, st.iterations, st.residual)


def subordinate(mu: Measure, nu: Measure, z, tol: float = DEFAULT_TOL,
                max_iter: int = DEFAULT_MAX_ITER, aitken: bool = False,
                backend: str | None = None) -> SubordinationResult:
    """Fixed point of w -> z + H_nu(z + H_mu(w)), iterated from w = z."""
    zz, scalar = _as_upper(z)
    if not scalar:
        raise ValidationError("subordinate takes a single point; use subordinate_many")
    s = subordinate_many(mu, nu, zz, tol, max_iter, aitken, backend)
    return SubordinationResult(complex(zz[0]), complex(s.omega[0]), int(s.iterations[0]),
                               float(s.residual[0]))


def subordination_map(mu: Measure, nu: Measure, z: complex, w, backend: str | None = None):
    """g_z(w) = z + H_nu(z + H_mu(w))."""
    return z + htransform(nu, z + htransform(mu, w, backend), backend)


# -- free convolution -----------------------------------------------------------

def default_grid(lo: float, hi: float, n: int = 2000, pad: float = 0.02) -> np.ndarray:
    """n points on [lo, hi] widened by ``pad`` of the half-width at both ends."""
    r = (hi - lo) / 2 * (1 + pad)
    c = (hi + lo) / 2
    return np.linspace(c - r, c + r, n)


def support_bounds(m: Measure) -> tuple[float, float]:
    """Smallest interval holding the atoms and the density grid."""
    xs = [x for x, _ in m.atoms]
    if m.grid is not None:
        xs += [float(m.grid[0]), float(m.grid[-1])]
    return min(xs), max(xs)


def _diag(stats: Sequence[_Solved], eps) -> dict:
    it = np.concatenate([s.iterations for s in stats])
    res = np.concatenate([s.residual for s in stats])
    return {"eps": list(eps), "max_iterations": int(it.max()), "mean_iterations": float(it.mean()),
            "max_residual": float(res.max())}


def _compact(m: Measure, what: str) -> None:
    if m.noncompact:
        raise ValidationError(f"{what}: {m.name or 'measure'} has non-compact support")


def free_convolve(mu: Measure, nu: Measure, grid=None, eps=None, tol: float = DEFAULT_TOL,
                  max_iter: int = DEFAULT_MAX_ITER, aitken: bool = False,
                  backend: str | None = None, threads: int | None = None,
                  n_points: int = 2000) -> Measure:
    """mu boxplus nu as atoms plus a density on ``grid``.

    Point masses are handled exactly (shifts); otherwise the density is
    -Im G_mu(omega_1(x + i eps))/pi extrapolated to eps = 0.
    """
    _compact(mu, "free_convolve")
    _compact(nu, "free_convolve")
    if mu.is_dirac and nu.is_dirac:
        return make_dirac(mu.atoms[0][0] + nu.atoms[0][0])
    if nu.is_dirac:
        return mu.shifted(nu.atoms[0][0])
    if mu.is_dirac:
        return nu.shifted(mu.atoms[0][0])
    (a0, a1), (b0, b1) = support_bounds(mu), support_bounds(nu)
    lo, hi = a0 + b0, a1 + b1
    grid = default_grid(lo, hi, n_points) if grid is None else _check_grid(grid)
    if grid[0] > lo + 1e-12 or grid[-1] < hi - 1e-12:
        raise ValidationError(f"output grid must cover the support [{lo:g}, {hi:g}]")
    eps = _check_eps(eps, grid)
    mx, mw = _nodes(mu)
    be = get_backend(backend)
    stats = []

    def G(z):
        s = subordinate_many(mu, nu, z, tol, max_iter, aitken, backend, threads)
        stats.append(s)
        return be.cauchy(s.omega, mx, mw, threads)

    inv = stieltjes_invert(G, grid, eps)
    return inv.to_measure(name=f"{mu.name}+{nu.name}", diagnostics=_diag(stats, eps))


def power_atoms(mu: Measure, t: float) -> list[tuple[float, float]]:
    """Atoms of mu^{boxplus t}: t*a with weight t*mu({a}) - (t - 1) where positive."""
    out = []
    for a, w in mu.atoms:
        m = t * w - (t - 1.0)
        if m > 1e-12:
            out.append((t * a, m))
    return out


def power_subordinate_many(mu: Measure, t: float, z, tol: float = DEFAULT_TOL,
                           max_iter: int = DEFAULT_MAX_ITER, backend: str | None = None,
                           threads: int | None = None, strict: bool = True) -> _Solved:
    """omega_t(z) with G_{mu^t} = G_mu(omega_t): fixed point of w -> z + (t-1) H_mu(w)."""
    z, _ = _as_upper(z)
    x, q = _nodes(mu)
    st = get_backend(backend).power_subordinate(z, x, q, t, tol, max_iter, threads)
    bad = st.residual > tol * np.maximum(1.0, np.abs(z))
    if strict and np.any(bad):
        k = int(np.argmax(bad))
        raise ConvergenceError(
            f"power subordination did not converge at z = {z[k]:.6g}",
            z=complex(z[k]), residual=float(st.residual[k]), iterations=int(st.iterations[k]))
    return _Solved(st.omega, st.iterations, st.residual)


def convolution_power(mu: Measure, t: float, grid=None, eps=None, tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER, backend: str | None = None,
                      threads: int | None = None, n_points: int = 2000) -> Measure:
    """mu^{boxplus t} for real t >= 1.

    Any atoms of the result are placed exactly and their poles removed from
    G before inversion, so only the continuous part is recovered numerically.
    """
    if not t >= 1:
        raise ValidationError(f"t must be >= 1, got {t}")
    _compact(mu, "convolution_power")
    if t == 1:
        return mu
    if mu.is_dirac:
        return make_dirac(t * mu.atoms[0][0])
    R = t * mu.support_radius
    grid = default_grid(-R, R, n_points) if grid is None else _check_grid(grid)
    eps = _check_eps(eps, grid)
    atoms = power_atoms(mu, t)
    ax = np.array([a for a, _ in atoms])
    aw = np.array([w for _, w in atoms])
    x, q = _nodes(mu)
    be = get_backend(backend)
    stats = []

    def G_cont(z):
        s = power_subordinate_many(mu, t, z, tol, max_iter, backend, threads)
        stats.append(s)
        g = be.cauchy(s.omega, x, q, threads)
        if atoms:
            g = g - (aw[None, :] / (z[:, None] - ax[None, :])).sum(axis=1)
        return g

    inv = stieltjes_invert(G_cont, grid, eps, expected_mass=1.0 - float(aw.sum()))
    return inv.to_measure(atoms=atoms, name=f"{mu.name}^{t:g}", diagnostics=_diag(stats, eps),
                          support_radius=max(R, float(np.max(np.abs(grid)))))
