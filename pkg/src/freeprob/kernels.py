"""Backend selection for the hot loops.

The compiled extension is used when it imports; ``FREEPROB_PURE=1`` forces
the numpy fallback.  Batches are split into contiguous chunks and run on a
thread pool (the compiled loops release the GIL); every point is solved
independently, so results do not depend on the thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from types import ModuleType

import numpy as np

from . import _pykernels

try:
    from . import _kernels as _ckernels
except ImportError:  # extension not built
    _ckernels = None


def available_backends() -> list[str]:
    return (["cython"] if _ckernels is not None else []) + ["numpy"]


def default_threads() -> int:
    env = os.environ.get("FREEPROB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


@dataclass
class SolveStats:
    omega: np.ndarray
    iterations: np.ndarray
    residual: np.ndarray


@dataclass(frozen=True)
class Backend:
    name: str
    impl: ModuleType

    def _split(self, n: int, threads: int | None):
        threads = default_threads() if threads is None else max(1, threads)
        parts = min(threads, max(1, n // 64))
        bounds = np.linspace(0, n, parts + 1).astype(int)
        return threads, [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]

    def _run(self, fn, n: int, threads):
        threads, chunks = self._split(n, threads)
        if len(chunks) <= 1:
            for a, b in chunks:
                fn(a, b)
            return
        with ThreadPoolExecutor(max_workers=threads) as ex:
            for f in [ex.submit(fn, a, b) for a, b in chunks]:
                f.result()

    def cauchy(self, z, nodes, weights, threads: int | None = None) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        zr, zi = np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag)
        x = np.ascontiguousarray(nodes, dtype=float)
        w = np.ascontiguousarray(weights, dtype=float)
        out_r, out_i = np.empty(z.size), np.empty(z.size)

        def work(a, b):
            self.impl.cauchy_sum(zr[a:b], zi[a:b], x, w, out_r[a:b], out_i[a:b])

        self._run(work, z.size, threads)
        return out_r + 1j * out_i

    def _outputs(self, n):
        return np.empty(n), np.empty(n), np.empty(n, dtype=np.int_), np.empty(n)

    def subordinate(self, z, mu_nodes, mu_weights, nu_nodes, nu_weights, tol=1e-12,
                    max_iter=10000, aitken=False, threads: int | None = None) -> SolveStats:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        zr, zi = np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag)
        mx, mw, nx, nw = (np.ascontiguousarray(a, dtype=float)
                          for a in (mu_nodes, mu_weights, nu_nodes, nu_weights))
        o_r, o_i, o_it, o_res = self._outputs(z.size)

        def work(a, b):
            self.impl.subordinate_batch(zr[a:b], zi[a:b], mx, mw, nx, nw, float(tol),
                                        int(max_iter), bool(aitken), o_r[a:b], o_i[a:b],
                                        o_it[a:b], o_res[a:b])

        self._run(work, z.size, threads)
        return SolveStats(o_r + 1j * o_i, o_it, o_res)

    def power_subordinate(self, z, nodes, weights, t, tol=1e-12, max_iter=10000,
                          threads: int | None = None) -> SolveStats:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        zr, zi = np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag)
        x = np.ascontiguousarray(nodes, dtype=float)
        w = np.ascontiguousarray(weights, dtype=float)
        o_r, o_i, o_it, o_res = self._outputs(z.size)

        def work(a, b):
            self.impl.power_subordinate_batch(zr[a:b], zi[a:b], x, w, float(t), float(tol),
                                              int(max_iter), o_r[a:b], o_i[a:b],
                                              o_it[a:b], o_res[a:b])

        self._run(work, z.size, threads)
        return SolveStats(o_r + 1j * o_i, o_it, o_res)


_BACKENDS = {"numpy": Backend("numpy", _pykernels)}
if _ckernels is not None:
    _BACKENDS["cython"] = Backend("cython", _ckernels)


def get_backend(name: str | None = None) -> Backend:
    if name is None:
        if os.environ.get("FREEPROB_PURE", "") not in ("", "0") or _ckernels is None:
            name = "numpy"
        else:
            name = "cython"
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}") from None
