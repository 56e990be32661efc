"""Probability measures on the real line: atoms plus a gridded density.

Density values stored on a grid are *hat averages*: value_i is the mean of
the density against the piecewise-linear hat function centred at x_i.  With
that choice the trapezoid rule reproduces the mass of the density exactly
(up to rounding), values stay finite at inverse-square-root edges, and the
trapezoid nodes/weights double as a positive quadrature rule for moments
and Cauchy transforms.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import NumericalError, ValidationError

MASS_TOL = 1e-6
DEFAULT_POINTS_PER_UNIT = 2000
EDGE_FRACTION = 0.05
EDGE_REFINE = 4
MAX_MOMENT_ORDER = 32

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2:
        return np.ones_like(grid)
    d = np.diff(grid)
    w = np.empty_like(grid)
    w[0] = d[0] / 2
    w[-1] = d[-1] / 2
    w[1:-1] = (d[:-1] + d[1:]) / 2
    return w


def _freeze(a):
    if a is None:
        return None
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Measure:
    """Atoms ``((x, w), ...)`` plus an optional density on an ascending grid."""

    atoms: tuple = ()
    grid: np.ndarray | None = None
    values: np.ndarray | None = None
    support_radius: float = 0.0
    name: str = ""
    noncompact: bool = False
    # set for laws whose transforms are known in closed form (e.g. "cauchy")
    analytic: str | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        atoms = tuple((float(x), float(w)) for x, w in self.atoms)
        for x, w in atoms:
            if not (0.0 < w <= 1.0 + MASS_TOL) or not math.isfinite(x):
                raise ValidationError(f"invalid atom ({x}, {w})")
        object.__setattr__(self, "atoms", tuple(sorted(atoms)))
        if (self.grid is None) != (self.values is None):
            raise ValidationError("grid and values must be given together")
        grid, values = _freeze(self.grid), _freeze(self.values)
        if grid is not None:
            if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
                raise ValidationError("density grid and values must be 1-d of equal length >= 2")
            if np.any(np.diff(grid) <= 0):
                raise ValidationError("density grid must be strictly ascending")
            if np.any(values < -1e-12) or not np.all(np.isfinite(values)):
                raise ValidationError("density values must be finite and nonnegative")
            values = _freeze(np.maximum(values, 0.0))
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        r = self.support_radius
        extent = max([abs(x) for x, _ in atoms] + ([float(np.max(np.abs(grid)))] if grid is not None else [0.0]))
        if r <= 0:
            r = extent if extent > 0 else 1.0
        elif extent > r * (1 + 1e-12):
            raise ValidationError(f"support radius {r} smaller than the support extent {extent}")
        object.__setattr__(self, "support_radius", float(r))
        mass = self.total_mass()
        if abs(mass - 1.0) > MASS_TOL:
            raise ValidationError(f"total mass {mass!r} is not 1")

    def __eq__(self, other):
        if not isinstance(other, Measure):
            return NotImplemented
        same_grid = (self.grid is None and other.grid is None) or (
            self.grid is not None and other.grid is not None
            and np.array_equal(self.grid, other.grid) and np.array_equal(self.values, other.values))
        return (same_grid and self.atoms == other.atoms
                and self.support_radius == other.support_radius
                and self.noncompact == other.noncompact and self.analytic == other.analytic)

    __hash__ = None

    # -- basic quantities -------------------------------------------------
    @property
    def has_density(self) -> bool:
        return self.grid is not None

    @property
    def is_dirac(self) -> bool:
        return self.grid is None and len(self.atoms) == 1

    @property
    def atom_mass(self) -> float:
        return sum(w for _, w in self.atoms)

    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and nonnegative weights for the absolutely continuous part."""
        if self.grid is None:
            return np.empty(0), np.empty(0)
        return np.asarray(self.grid), trapezoid_weights(self.grid) * self.values

    def ac_mass(self) -> float:
        return float(self.quadrature()[1].sum())

    def total_mass(self) -> float:
        return self.atom_mass + self.ac_mass()

    def density_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.grid is None:
            return np.zeros_like(x)
        return np.interp(x, self.grid, self.values, left=0.0, right=0.0)

    def shifted(self, a: float) -> "Measure":
        """Image under x -> x + a (exact on atoms and grid)."""
        return Measure(
            atoms=tuple((x + a, w) for x, w in self.atoms),
            grid=None if self.grid is None else self.grid + a,
            values=self.values,
            support_radius=self.support_radius + abs(a),
            name=f"{self.name}+{a:g}" if self.name else "",
            noncompact=self.noncompact,
            analytic=self.analytic,
        )

    # -- distribution function -------------------------------------------
    def _cdf_table(self):
        pts = [] if self.grid is None else [np.asarray(self.grid)]
        pts.append(np.array([x for x, _ in self.atoms]))
        xs = np.unique(np.concatenate(pts))
        dens = self.density_at(xs)
        seg = np.diff(xs) * (dens[:-1] + dens[1:]) / 2
        jumps = np.zeros_like(xs)
        for x, w in self.atoms:
            jumps[np.searchsorted(xs, x)] += w
        cont = np.concatenate([[0.0], np.cumsum(seg)])
        f_plus = cont + np.cumsum(jumps)
        f_minus = f_plus - jumps
        total = f_plus[-1]
        return xs, f_minus / total, f_plus / total

    def cdf(self, x) -> np.ndarray:
        xs, f_minus, f_plus = self._cdf_table()
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(xs, x, side="right")  # xs[k-1] <= x < xs[k]
        out = np.zeros_like(x)
        inside = (k > 0) & (k < xs.size)
        kk = k[inside]
        x0, x1 = xs[kk - 1], xs[kk]
        t = (x[inside] - x0) / (x1 - x0)
        out[inside] = f_plus[kk - 1] + t * (f_minus[kk] - f_plus[kk - 1])
        out[k >= xs.size] = 1.0
        return out

    def quantile(self, u, tol: float = 1e-12) -> np.ndarray:
        """Generalized inverse inf{x : F(x) >= u}."""
        xs, f_minus, f_plus = self._cdf_table()
        scalar = np.ndim(u) == 0
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if np.any((u < 0) | (u > 1)):
            raise ValidationError("quantile levels must lie in [0, 1]")
        k = np.minimum(np.searchsorted(f_plus, u - tol, side="left"), xs.size - 1)
        out = xs[k].copy()
        cont = (k > 0) & (f_minus[k] > u - tol)
        kk = k[cont]
        lo, hi = f_plus[kk - 1], f_minus[kk]
        t = np.where(hi > lo, (u[cont] - lo) / np.where(hi > lo, hi - lo, 1.0), 1.0)
        out[cont] = xs[kk - 1] + np.clip(t, 0.0, 1.0) * (xs[kk] - xs[kk - 1])
        return float(out[0]) if scalar else out

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        d = {
            "atoms": [{"x": x, "w": w} for x, w in self.atoms],
            "density": None if self.grid is None else {
                "grid": self.grid.tolist(), "values": self.values.tolist()},
            "support_radius": self.support_radius,
        }
        if self.name:
            d["name"] = self.name
        if self.noncompact:
            d["noncompact"] = True
        if self.analytic:
            d["analytic"] = self.analytic
        if self.diagnostics:
            d["diagnostics"] = self.diagnostics
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "Measure":
        try:
            atoms = [(a["x"], a["w"]) for a in d.get("atoms", [])]
            dens = d.get("density")
            grid = values = None
            if dens:
                grid, values = dens["grid"], dens["values"]
            return cls(atoms=atoms, grid=grid, values=values,
                       support_radius=float(d.get("support_radius", 0.0)),
                       name=d.get("name", ""), noncompact=bool(d.get("noncompact", False)),
                       analytic=d.get("analytic"), diagnostics=d.get("diagnostics", {}))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed measure JSON: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "Measure":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed measure JSON: {exc}") from None

    def to_csv(self) -> str:
        buf = io.StringIO()
        write_density_csv(buf, self.grid if self.grid is not None else [],
                          self.values if self.values is not None else [])
        return buf.getvalue()


def write_density_csv(fh, x: Iterable[float], density: Iterable[float]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["x", "density"])
    for a, b in zip(x, density):
        w.writerow([repr(float(a)), repr(float(b))])


def read_density_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["x", "density"]:
        raise ValidationError("density CSV must start with header x,density")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]]).reshape(-1, 2)
    return data[:, 0], data[:, 1]


def load_measure(path: str) -> Measure:
    """Read a measure from JSON, or a pure density from an x,density CSV."""
    with open(path) as fh:
        text = fh.read()
    if text.startswith("x,density"):
        x, d = read_density_csv(text)
        return Measure(grid=x, values=d, name=os.path.basename(path))
    return Measure.from_json(text)


# -- grids and density discretization --------------------------------------

def density_grid(a: float, b: float, points_per_unit: int = DEFAULT_POINTS_PER_UNIT,
                 refine_edges: bool = True) -> np.ndarray:
    """Uniform grid on [a, b], with the outer 5% at each edge subdivided 4x."""
    if not b > a:
        raise ValidationError("grid interval must have b > a")
    n = max(int(math.ceil((b - a) * points_per_unit)), 16)
    g = np.linspace(a, b, n + 1)
    if not refine_edges:
        return g
    k = max(int(math.ceil(EDGE_FRACTION * n)), 1)
    sub = np.linspace(0, 1, EDGE_REFINE + 1)[1:-1]
    extra = [g[j] + sub * (g[j + 1] - g[j]) for j in list(range(k)) + list(range(n - k, n))]
    return np.sort(np.concatenate([g] + extra))


def hat_averages(f_theta: Callable[[np.ndarray], np.ndarray], grid: np.ndarray,
                 a: float, b: float) -> np.ndarray:
    """Hat-function averages of a density supported on [a, b].

    ``f_theta(theta)`` must return f(x) * dx/dtheta for x = c - r cos(theta)
    (c, r the centre and half-width of [a, b]).  That substitution absorbs
    square-root and inverse-square-root behaviour at the edges, so plain
    Gauss-Legendre per panel is accurate.
    """
    c, r = (a + b) / 2, (b - a) / 2
    th = np.arccos(np.clip((c - grid) / r, -1.0, 1.0))
    t0, t1 = th[:-1], th[1:]
    half = (t1 - t0) / 2
    nodes = (t0 + t1)[:, None] / 2 + half[:, None] * _GL_X[None, :]
    x = c - r * np.cos(nodes)
    g = f_theta(nodes) * half[:, None] * _GL_W[None, :]
    h = np.diff(grid)[:, None]
    right = (g * (x - grid[:-1, None]) / h).sum(1)   # weight on the right hat
    left = g.sum(1) - right
    acc = np.zeros_like(grid)
    acc[:-1] += left
    acc[1:] += right
    return acc / trapezoid_weights(grid)


def from_density(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, *,
                 atoms: Sequence = (), ac_mass: float | None = None, name: str = "",
                 points_per_unit: int = DEFAULT_POINTS_PER_UNIT,
                 support_radius: float = 0.0) -> Measure:
    """Discretize a density on [a, b] (it may have integrable edge singularities)."""
    c, r = (a + b) / 2, (b - a) / 2
    grid = density_grid(a, b, points_per_unit)
    vals = hat_averages(lambda t: f(c - r * np.cos(t)) * r * np.sin(t), grid, a, b)
    target = 1.0 - sum(w for _, w in atoms) if ac_mass is None else ac_mass
    got = float(trapezoid_weights(grid) @ vals)
    if abs(got - target) > 1e-4 * max(target, 1e-300):
        raise NumericalError(f"density quadrature mass {got} differs from {target}")
    vals *= target / got
    return Measure(atoms=tuple(atoms), grid=grid, values=vals, name=name,
                   support_radius=support_radius)


# -- zoo ------------------------------------------------------------------

def make_dirac(a: float = 0.0) -> Measure:
    return Measure(atoms=((a, 1.0),), name=f"dirac({a:g})")


def make_atomic(atoms: Sequence, name: str = "") -> Measure:
    atoms = [(float(x), float(w)) for x, w in atoms]
    if not atoms or any(w <= 0 for _, w in atoms):
        raise ValidationError("atomic measure needs positive weights")
    total = sum(w for _, w in atoms)
    if abs(total - 1.0) > MASS_TOL:
        raise ValidationError(f"atom weights sum to {total}, not 1")
    merged: dict[float, float] = {}
    for x, w in atoms:
        merged[x] = merged.get(x, 0.0) + w
    return Measure(atoms=tuple(merged.items()), name=name)


def make_two_point(a: float, b: float, w: float = 0.5) -> Measure:
    if not 0.0 < w < 1.0:
        raise ValidationError("two-point weight must lie in (0, 1)")
    return make_atomic([(a, w), (b, 1.0 - w)], name=f"two_point({a:g},{b:g},{w:g})")


def make_bernoulli() -> Measure:
    return make_atomic([(-1.0, 0.5), (1.0, 0.5)], name="bernoulli")


def make_semicircle(sigma: float = 1.0, points_per_unit: int = DEFAULT_POINTS_PER_UNIT) -> Measure:
    if not sigma > 0:
        raise ValidationError("sigma must be positive")
    R = 2.0 * sigma
    f = lambda x: np.sqrt(np.maximum(R * R - x * x, 0.0)) / (2 * np.pi * sigma * sigma)
    return from_density(f, -R, R, name=f"semicircle({sigma:g})",
                        points_per_unit=max(points_per_unit, int(2000 / R)))


def make_free_poisson(lam: float = 1.0, points_per_unit: int = DEFAULT_POINTS_PER_UNIT) -> Measure:
    """Free Poisson (Marchenko-Pastur) law with rate ``lam``."""
    if not lam > 0:
        raise ValidationError("rate must be positive")
    a, b = (1 - math.sqrt(lam)) ** 2, (1 + math.sqrt(lam)) ** 2
    atoms = ((0.0, 1.0 - lam),) if lam < 1 else ()
    f = lambda x: np.sqrt(np.maximum((x - a) * (b - x), 0.0)) / (2 * np.pi * x)
    return from_density(f, a, b, atoms=atoms, ac_mass=min(lam, 1.0),
                        name=f"free_poisson({lam:g})",
                        points_per_unit=max(points_per_unit, int(4000 / (b - a))))


def make_arcsine(points_per_unit: int = DEFAULT_POINTS_PER_UNIT) -> Measure:
    f = lambda x: 1.0 / (np.pi * np.sqrt(np.maximum(4.0 - x * x, 1e-300)))
    return from_density(f, -2.0, 2.0, name="arcsine", points_per_unit=points_per_unit)


def make_quartercircular(points_per_unit: int = DEFAULT_POINTS_PER_UNIT) -> Measure:
    f = lambda x: np.sqrt(np.maximum(4.0 - x * x, 0.0)) / np.pi
    return from_density(f, 0.0, 2.0, name="quartercircular", points_per_unit=points_per_unit)


def make_cauchy(window: float = 50.0, points_per_unit: int = 200) -> Measure:
    """Standard Cauchy law.  The stored density is the restriction to
    [-window, window], renormalized; transforms use the exact closed form."""
    if not window > 0:
        raise ValidationError("window must be positive")
    inner = 2.0 / math.pi * math.atan(window)
    f = lambda x: 1.0 / (np.pi * (1.0 + x * x)) / inner
    m = from_density(f, -window, window, name="cauchy", points_per_unit=points_per_unit)
    return Measure(grid=m.grid, values=m.values, name="cauchy", noncompact=True,
                   analytic="cauchy", diagnostics={"window": window, "window_mass": inner})


ZOO: dict[str, Callable[[], Measure]] = {
    "semicircle": make_semicircle,
    "free_poisson": make_free_poisson,
    "bernoulli": make_bernoulli,
    "arcsine": make_arcsine,
    "quartercircular": make_quartercircular,
    "cauchy": make_cauchy,
    "dirac": make_dirac,
    "four_atoms": lambda: make_atomic([(-2, .25), (-1, .25), (1, .25), (2, .25)], name="four_atoms"),
    "three_atoms": lambda: make_atomic([(-2, .5), (-1, .25), (1, .25)], name="three_atoms"),
}


def zoo(name: str, **params) -> Measure:
    try:
        maker = ZOO[name]
    except KeyError:
        raise ValidationError(f"unknown measure {name!r}; choose from {sorted(ZOO)}") from None
    try:
        return maker(**params)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for {name}: {exc}") from None


def moments_of_measure(mu: Measure, K: int) -> list[float]:
    """m_1..m_K by exact atom sums plus density quadrature."""
    if not 1 <= K <= MAX_MOMENT_ORDER:
        raise ValidationError(f"moment order must be in [1, {MAX_MOMENT_ORDER}]")
    if mu.noncompact:
        raise ValidationError(f"{mu.name or 'measure'} has no moments (non-compact support)")
    mass = mu.total_mass()
    if abs(mass - 1.0) > MASS_TOL:
        raise NumericalError(f"mass invariant violated: {mass}")
    x, q = mu.quadrature()
    ax = np.array([a for a, _ in mu.atoms])
    aw = np.array([w for _, w in mu.atoms])
    out = []
    px, pa = np.ones_like(x), np.ones_like(ax)
    r = mu.support_radius
    for n in range(1, K + 1):
        px, pa = px * x, pa * ax
        m = float(q @ px + aw @ pa)
        if abs(m) > r ** n * (1 + 1e-9) + 1e-12:
            raise NumericalError(f"|m_{n}| = {abs(m)} exceeds r^n = {r ** n}")
        out.append(m)
    return out


# -- histograms -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    total: int

    def __post_init__(self):
        e = np.array(self.bin_edges, dtype=float)
        c = np.array(self.counts, dtype=np.int64)
        if e.ndim != 1 or c.shape != (e.size - 1,) or np.any(np.diff(e) <= 0):
            raise ValidationError("histogram needs ascending edges and len(counts) == len(edges)-1")
        if np.any(c < 0) or int(c.sum()) != int(self.total):
            raise ValidationError("histogram counts must be nonnegative and sum to total")
        e.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "bin_edges", e)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "total", int(self.total))

    def __eq__(self, other):
        if not isinstance(other, Histogram):
            return NotImplemented
        return (np.array_equal(self.bin_edges, other.bin_edges)
                and np.array_equal(self.counts, other.counts) and self.total == other.total)

    __hash__ = None

    @classmethod
    def from_samples(cls, samples, bins: int, lo: float, hi: float) -> "Histogram":
        samples = np.asarray(samples, dtype=float).ravel()
        edges = np.linspace(lo, hi, bins + 1)
        counts, _ = np.histogram(np.clip(samples, lo, hi), bins=edges)
        return cls(edges, counts, int(counts.sum()))

    def merge(self, other: "Histogram") -> "Histogram":
        if not np.array_equal(self.bin_edges, other.bin_edges):
            raise ValidationError("cannot merge histograms with different bins")
        return Histogram(self.bin_edges, self.counts + other.counts, self.total + other.total)

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.total * np.diff(self.bin_edges))

    def cdf_at_edges(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.counts)]) / self.total

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_lo", "bin_hi", "count", "density"])
        for lo, hi, c, d in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts, self.density):
            w.writerow([repr(float(lo)), repr(float(hi)), int(c), repr(float(d))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Histogram":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["bin_lo", "bin_hi", "count", "density"]:
            raise ValidationError("histogram CSV must start with bin_lo,bin_hi,count,density")
        body = rows[1:]
        edges = [float(r[0]) for r in body] + [float(body[-1][1])]
        counts = [int(r[2]) for r in body]
        return cls(np.array(edges), np.array(counts), sum(counts))

    def to_dict(self) -> dict:
        return {"bin_edges": self.bin_edges.tolist(), "counts": self.counts.tolist(),
                "total": self.total}


def ks_distance(hist: Histogram, mu: Measure) -> float:
    """Kolmogorov-Smirnov distance between the histogram and mu, at the bin edges."""
    return float(np.max(np.abs(hist.cdf_at_edges() - mu.cdf(hist.bin_edges))))
