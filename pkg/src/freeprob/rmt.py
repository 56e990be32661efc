"""Random-matrix Monte Carlo: samplers, spectra, trace moments, genus expansion."""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import partitions as P
from .errors import NumericalError, ValidationError
from .measures import Histogram, Measure

DEFAULT_BUDGET = 2e11   # trials * N^3 (rough flop count of one dense eigensolve per trial)
LARGE_BUDGET = 5e12


@dataclass(frozen=True)
class SimulationConfig:
    N: int
    trials: int
    seed: int = 0
    parallel: bool = False
    threads: int | None = None
    budget: float = DEFAULT_BUDGET

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValidationError("N must be an integer >= 2")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValidationError("trials must be an integer >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must fit in 64 unsigned bits")
        cost = float(self.trials) * float(self.N) ** 3
        if cost > self.budget:
            raise ValidationError(f"trials * N^3 = {cost:.3g} exceeds the compute budget "
                                  f"{self.budget:.3g} (use a larger budget to allow it)")

    def rng(self, trial: int, index: int = 0) -> np.random.Generator:
        """Independent counter-based stream for (trial, matrix index)."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(trial, index))
        return np.random.Generator(np.random.Philox(ss))

    def map_trials(self, fn: Callable[[int], object]) -> list:
        """fn(trial) for every trial, returned in trial order."""
        if self.parallel and self.trials > 1:
            workers = self.threads or None
            with ThreadPoolExecutor(max_workers=workers) as ex:
                return list(ex.map(fn, range(self.trials)))
        return [fn(t) for t in range(self.trials)]


# -- samplers -------------------------------------------------------------

def sample_gue(N: int, rng: np.random.Generator) -> np.ndarray:
    """GUE normalized so that E[a_ij a_kl] = delta_il delta_jk / N."""
    if N < 2:
        raise ValidationError("N must be >= 2")
    x = rng.standard_normal((N, N))
    y = rng.standard_normal((N, N))
    off = (x + 1j * y) / np.sqrt(2 * N)
    A = np.triu(off, 1)
    A = A + A.conj().T
    A[np.diag_indices(N)] = rng.standard_normal(N) / np.sqrt(N)
    return A


def rademacher(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.integers(0, 2, size=shape) * 2.0 - 1.0


def sample_wigner(N: int, entry_sampler: Callable = rademacher,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Real symmetric matrix of i.i.d. centred entries scaled by 1/sqrt(N)."""
    if N < 2:
        raise ValidationError("N must be >= 2")
    rng = np.random.default_rng() if rng is None else rng
    E = np.asarray(entry_sampler(rng, (N, N)), dtype=float)
    L = np.tril(E)
    return (L + np.tril(E, -1).T) / np.sqrt(N)


def sample_haar_unitary(N: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary via QR of a complex Ginibre matrix, with R's diagonal phases removed."""
    if N < 2:
        raise ValidationError("N must be >= 2")
    for _ in range(2):
        Z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / np.sqrt(2)
        Q, R = np.linalg.qr(Z)
        d = np.diag(R)
        if np.all(np.abs(d) > 0):
            return Q * (d / np.abs(d))[None, :]
    raise NumericalError("QR breakdown while sampling a Haar unitary")


def quantile_diagonal(mu: Measure, N: int) -> np.ndarray:
    """The N quantiles F^{-1}((j - 1/2)/N), j = 1..N."""
    if mu.noncompact:
        raise ValidationError("deterministic matrices need a compactly supported measure")
    if N < 1:
        raise ValidationError("N must be >= 1")
    return mu.quantile((np.arange(1, N + 1) - 0.5) / N)


def deterministic_from_measure(mu: Measure, N: int) -> np.ndarray:
    return np.diag(quantile_diagonal(mu, N))


# -- spectra --------------------------------------------------------------

def _check_hermitian(A: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if np.max(np.abs(A - A.conj().T), initial=0.0) > tol * scale:
        raise ValidationError("matrix is not Hermitian")
    return A


def eigenvalues_hermitian(A, check: bool = True) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix (LAPACK divide and conquer)."""
    if check:
        A = _check_hermitian(A)
    return np.linalg.eigvalsh(A)


def jacobi_eigenvalues(A, tol: float = 1e-14, max_sweeps: int = 100) -> np.ndarray:
    """Cyclic Jacobi on the real symmetric embedding [[Re, -Im], [Im, Re]].

    Slow but transparent; used as an independent check for small N.
    """
    A = _check_hermitian(A)
    N = A.shape[0]
    if N > 64:
        raise ValidationError("Jacobi oracle is limited to N <= 64")
    S = np.block([[A.real, -A.imag], [A.imag, A.real]]).astype(float)
    n = S.shape[0]
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(S, -1) ** 2))
        if off <= tol * max(1.0, np.linalg.norm(S)):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(S[p, q]) < 1e-300:
                    continue
                theta = (S[q, q] - S[p, p]) / (2 * S[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1)) if theta else 1.0
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                rp, rq = S[p, :].copy(), S[q, :].copy()
                S[p, :], S[q, :] = c * rp - s * rq, s * rp + c * rq
                cp, cq = S[:, p].copy(), S[:, q].copy()
                S[:, p], S[:, q] = c * cp - s * cq, s * cp + c * cq
    else:
        raise NumericalError("Jacobi sweeps did not converge")
    ev = np.sort(np.diag(S))
    return ev[::2]  # each eigenvalue appears twice in the embedding


def normalized_trace(A) -> complex:
    return complex(np.trace(A)) / A.shape[0]


# -- genus expansion ---------------------------------------------------------

@lru_cache(maxsize=None)
def genus_polynomial(m: int) -> dict[int, int]:
    """{exponent e: number of pairings pi of [m] with #(gamma pi) - 1 - m/2 = e}."""
    if m < 2 or m % 2 or m > 14:
        raise ValidationError("m must be even with 2 <= m <= 14")
    counts: dict[int, int] = {}
    for p in P.enumerate_pairings(m):
        e = P.genus_exponent(p)
        counts[e] = counts.get(e, 0) + 1
    return dict(sorted(counts.items(), reverse=True))


def genus_expansion_exact(m: int, N) -> float:
    """E[tr(A^m)] for an N x N GUE matrix: sum over pairings of N^{#(gamma pi) - 1 - m/2}."""
    if m % 2:
        raise ValidationError("genus expansion needs even m")
    return float(sum(c * float(N) ** e for e, c in genus_polynomial(m).items()))


def gue_moment_by_quadrature(m: int, N: int = 2, nodes: int = 0) -> float:
    """E[tr(A^m)] by tensor Gauss-Hermite quadrature over the N^2 real entry components."""
    if N > 2:
        raise ValidationError("quadrature oracle is limited to N <= 2")
    k = nodes or (m // 2 + 1)  # exact for polynomials of degree <= 2k - 1
    t, w = np.polynomial.hermite_e.hermegauss(k)
    w = w / w.sum()
    total = 0.0
    dims = N * N
    for idx in itertools.product(range(k), repeat=dims):
        g = t[list(idx)]
        A = np.zeros((N, N), dtype=complex)
        pos = 0
        for i in range(N):
            A[i, i] = g[pos] / np.sqrt(N)
            pos += 1
        for i in range(N):
            for j in range(i + 1, N):
                A[i, j] = (g[pos] + 1j * g[pos + 1]) / np.sqrt(2 * N)
                A[j, i] = np.conj(A[i, j])
                pos += 2
        total += np.prod(w[list(idx)]) * normalized_trace(np.linalg.matrix_power(A, m)).real
    return float(total)


# -- Monte Carlo estimators -----------------------------------------------------

def jackknife(values, stat: Callable = np.mean) -> tuple[float, float]:
    """(statistic, jackknife standard error)."""
    v = np.asarray(values, dtype=float)
    n = v.size
    if n < 2:
        return float(stat(v)), float("nan")
    est = float(stat(v))
    loo = np.array([stat(np.delete(v, i)) for i in range(n)])
    se = np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return est, float(se)


def gue_moments_mc(ms: Sequence[int], cfg: SimulationConfig) -> dict[int, tuple[float, float]]:
    """E[tr(A^m)] for each m, from eigenvalues of cfg.trials GUE samples."""
    ms = [int(m) for m in ms]
    if any(m < 1 for m in ms):
        raise ValidationError("moment orders must be >= 1")

    def one(trial):
        ev = eigenvalues_hermitian(sample_gue(cfg.N, cfg.rng(trial)), check=False)
        return [np.mean(ev ** m) for m in ms]

    data = np.array(cfg.map_trials(one))
    return {m: jackknife(data[:, k]) for k, m in enumerate(ms)}


def gue_moment_mc(m: int, cfg: SimulationConfig) -> tuple[float, float]:
    return gue_moments_mc([m], cfg)[m]


def mixed_gue_moment_mc(word: Sequence[int], cfg: SimulationConfig) -> tuple[float, float]:
    """E[tr(A_{p(1)} ... A_{p(m)})] for independent GUE matrices indexed by the letters."""
    word = list(word)
    if not word:
        raise ValidationError("word must be nonempty")
    letters = sorted(set(word))

    def one(trial):
        mats = {a: sample_gue(cfg.N, cfg.rng(trial, k)) for k, a in enumerate(letters)}
        M = mats[word[0]]
        for a in word[1:]:
            M = M @ mats[a]
        return normalized_trace(M).real

    return jackknife(cfg.map_trials(one))


def nc_pairings_below(word: Sequence[int]) -> int:
    """#{pi in NC_2(m) : pi <= ker(word)}, the large-N limit of the mixed moment."""
    if len(word) % 2:
        return 0
    ker = P.kernel(word)
    return sum(1 for p in P.enumerate_pairings(len(word), noncrossing_only=True) if P.leq(p, ker))


# -- spectral experiments -------------------------------------------------------

def _hist_range(radius: float, pad: float) -> tuple[float, float]:
    return -radius - pad, radius + pad


def rotated_sum_spectrum(mu_a: Measure, mu_b: Measure, cfg: SimulationConfig, bins: int = 120,
                         lo: float | None = None, hi: float | None = None) -> Histogram:
    """Eigenvalues of U diag(a) U* + diag(b), U Haar, pooled over trials."""
    a = quantile_diagonal(mu_a, cfg.N)
    b = quantile_diagonal(mu_b, cfg.N)
    r0, r1 = _hist_range(mu_a.support_radius + mu_b.support_radius, 0.05)
    lo, hi = (r0 if lo is None else lo), (r1 if hi is None else hi)

    def one(trial):
        U = sample_haar_unitary(cfg.N, cfg.rng(trial))
        M = (U * a[None, :]) @ U.conj().T
        M[np.diag_indices(cfg.N)] += b
        M = (M + M.conj().T) / 2
        return Histogram.from_samples(eigenvalues_hermitian(M, check=False), bins, lo, hi)

    return _merge(cfg.map_trials(one))


def gue_plus_deterministic_spectrum(mu_d: Measure, cfg: SimulationConfig, bins: int = 120,
                                    lo: float | None = None, hi: float | None = None) -> Histogram:
    """Eigenvalues of A + diag(d) with A GUE, pooled over trials."""
    d = quantile_diagonal(mu_d, cfg.N)
    r0, r1 = _hist_range(2.0 + mu_d.support_radius, 0.25)
    lo, hi = (r0 if lo is None else lo), (r1 if hi is None else hi)

    def one(trial):
        A = sample_gue(cfg.N, cfg.rng(trial))
        A[np.diag_indices(cfg.N)] += d
        return Histogram.from_samples(eigenvalues_hermitian(A, check=False), bins, lo, hi)

    return _merge(cfg.map_trials(one))


def _merge(hs: Sequence[Histogram]) -> Histogram:
    out = hs[0]
    for h in hs[1:]:
        out = out.merge(h)
    return out
