"""Recurrent-cell kernels: the hot inner loops of seq2seq training/decoding.

Each kernel is written as a plain numpy function and JIT-compiled with numba
at import time. Set STYLEBOT_NO_NUMBA=1 to select the pure-numpy path (same
functions, uncompiled); the benchmark in benchmarks/bench_kernels.py compares
the two. All arrays are float64 and C-contiguous.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_enabled() -> bool:
    if os.environ.get("STYLEBOT_NO_NUMBA", "") not in ("", "0"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_enabled()


def gru_cell_py(x, h, wz, uz, bz, wr, ur, br, wh, uh, bh):
    """One GRU step: x (in,), h (hidden,) -> new hidden (hidden,)."""
    z = 1.0 / (1.0 + np.exp(-(x @ wz + h @ uz + bz)))
    r = 1.0 / (1.0 + np.exp(-(x @ wr + h @ ur + br)))
    c = np.tanh(x @ wh + (r * h) @ uh + bh)
    return (1.0 - z) * h + z * c


def gru_layer_forward_py(xs, h0, wz, uz, bz, wr, ur, br, wh, uh, bh):
    """Run one GRU layer over a whole sequence.

    xs (T, in), h0 (hidden,) -> outputs H plus the gate activations
    (Z, R, C), each (T, hidden), kept for the backward pass.
    """
    t_len = xs.shape[0]
    hidden = h0.shape[0]
    hs = np.empty((t_len, hidden))
    zs = np.empty((t_len, hidden))
    rs = np.empty((t_len, hidden))
    cs = np.empty((t_len, hidden))
    h = h0
    for t in range(t_len):
        x = xs[t]
        z = 1.0 / (1.0 + np.exp(-(x @ wz + h @ uz + bz)))
        r = 1.0 / (1.0 + np.exp(-(x @ wr + h @ ur + br)))
        c = np.tanh(x @ wh + (r * h) @ uh + bh)
        h = (1.0 - z) * h + z * c
        zs[t] = z
        rs[t] = r
        cs[t] = c
        hs[t] = h
    return hs, zs, rs, cs


def gru_layer_backward_py(xs, hs, h0, zs, rs, cs, dhs, dh_last, wz, uz, wr, ur, wh, uh):
    """Backprop one GRU layer over a sequence.

    dhs (T, hidden) are the per-step gradients flowing into the layer
    outputs; dh_last (hidden,) is an extra gradient on the final state (the
    decoder-initialization path). Returns gradients for the inputs, the
    initial state, and every parameter.
    """
    t_len = xs.shape[0]
    d_in = xs.shape[1]
    hidden = h0.shape[0]
    dxs = np.empty((t_len, d_in))
    dwz = np.zeros_like(wz)
    duz = np.zeros_like(uz)
    dbz = np.zeros(hidden)
    dwr = np.zeros_like(wr)
    dur = np.zeros_like(ur)
    dbr = np.zeros(hidden)
    dwh = np.zeros_like(wh)
    duh = np.zeros_like(uh)
    dbh = np.zeros(hidden)
    carry = np.zeros(hidden)
    for t in range(t_len - 1, -1, -1):
        dh = dhs[t] + carry
        if t == t_len - 1:
            dh = dh + dh_last
        hprev = h0 if t == 0 else hs[t - 1]
        z = zs[t]
        r = rs[t]
        c = cs[t]
        x = xs[t]

        dz = dh * (c - hprev)
        dc = dh * z
        dhprev = dh * (1.0 - z)

        dc_pre = dc * (1.0 - c * c)
        dwh += np.outer(x, dc_pre)
        duh += np.outer(r * hprev, dc_pre)
        dbh += dc_pre
        dx = dc_pre @ wh.T
        drh = dc_pre @ uh.T
        dr = drh * hprev
        dhprev = dhprev + drh * r

        dz_pre = dz * z * (1.0 - z)
        dwz += np.outer(x, dz_pre)
        duz += np.outer(hprev, dz_pre)
        dbz += dz_pre
        dx = dx + dz_pre @ wz.T
        dhprev = dhprev + dz_pre @ uz.T

        dr_pre = dr * r * (1.0 - r)
        dwr += np.outer(x, dr_pre)
        dur += np.outer(hprev, dr_pre)
        dbr += dr_pre
        dx = dx + dr_pre @ wr.T
        dhprev = dhprev + dr_pre @ ur.T

        dxs[t] = dx
        carry = dhprev
    return dxs, carry, dwz, duz, dbz, dwr, dur, dbr, dwh, duh, dbh


if NUMBA_ENABLED:
    from numba import njit

    gru_cell = njit(cache=True)(gru_cell_py)
    gru_layer_forward = njit(cache=True)(gru_layer_forward_py)
    gru_layer_backward = njit(cache=True)(gru_layer_backward_py)
else:
    gru_cell = gru_cell_py
    gru_layer_forward = gru_layer_forward_py
    gru_layer_backward = gru_layer_backward_py
