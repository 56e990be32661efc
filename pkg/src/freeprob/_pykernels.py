"""Pure numpy versions of the compiled kernels (same signatures, same results)."""

from __future__ import annotations

import numpy as np

_CHUNK = 1 << 22  # complex entries per temporary (z, node) block


def _cauchy(z: np.ndarray, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    out = np.empty(z.shape, dtype=complex)
    step = max(1, _CHUNK // max(1, x.size))
    for s in range(0, z.size, step):
        zz = z[s:s + step, None]
        out[s:s + step] = (w / (zz - x)).sum(axis=1)
    return out


def _h(z, x, w):
    return 1.0 / _cauchy(z, x, w) - z


def cauchy_sum(zr, zi, x, w, out_r, out_i):
    g = _cauchy(np.asarray(zr) + 1j * np.asarray(zi), np.asarray(x), np.asarray(w))
    out_r[:] = g.real
    out_i[:] = g.imag


def _iterate(z, step, tol, max_iter, aitken, out_r, out_i, out_iter, out_res):
    w = z.copy()
    wp = z.copy()
    thresh = tol * np.maximum(1.0, np.abs(z))
    res = np.zeros(z.size)
    iters = np.zeros(z.size, dtype=np.int64)
    active = np.arange(z.size)
    it = 0
    while active.size and it < max_iter:
        it += 1
        wa = w[active]
        wn = step(wa, active)
        r = np.abs(wn - wa)
        res[active] = r
        iters[active] = it
        done = r <= thresh[active]
        w[active[done]] = wn[done]
        keep = ~done
        act, wn, wa = active[keep], wn[keep], wa[keep]
        if aitken and it % 3 == 2:
            d1, d2 = wa - wp[act], wn - wa
            den = d2 - d1
            with np.errstate(all="ignore"):
                acc = wn - d2 * d2 / den
            ok = (den != 0) & np.isfinite(acc) & (acc.imag >= z[act].imag)
            wn = np.where(ok, acc, wn)
        wp[act] = wa
        w[act] = wn
        active = act
    out_r[:] = w.real
    out_i[:] = w.imag
    out_iter[:] = iters
    out_res[:] = res


def subordinate_batch(zr, zi, mx, mw, nx, nw, tol, max_iter, aitken,
                      out_r, out_i, out_iter, out_res):
    z = np.asarray(zr) + 1j * np.asarray(zi)
    mx, mw, nx, nw = map(np.asarray, (mx, mw, nx, nw))

    def step(w, idx):
        zz = z[idx]
        return zz + _h(zz + _h(w, mx, mw), nx, nw)

    _iterate(z, step, tol, max_iter, aitken, out_r, out_i, out_iter, out_res)


def power_subordinate_batch(zr, zi, x, w, t, tol, max_iter,
                            out_r, out_i, out_iter, out_res):
    z = np.asarray(zr) + 1j * np.asarray(zi)
    x, w = np.asarray(x), np.asarray(w)

    def step(v, idx):
        return z[idx] + (t - 1.0) * _h(v, x, w)

    _iterate(z, step, tol, max_iter, False, out_r, out_i, out_iter, out_res)
