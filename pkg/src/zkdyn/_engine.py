"""Tangent-frame propagation with periodic Gram-Schmidt re-orthonormalization.

A stream is described in CSR form: ``codes[offsets[t]:offsets[t+1]]`` are the
letter codes consumed in step ``t`` (a step may hold zero letters).  Steps are
the time unit: re-orthonormalization happens every ``period`` steps, burn-in
and averaging are counted in steps.

Linear actions use a lookup table of constant Jacobians; nonlinear actions
get their Jacobians materialized chunk by chunk along the computed orbit.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .action import ZkAction, wrap
from .errors import DegenerateFrame, NumericalBlowup

DEGENERATE_THRESHOLD = 1e-300
CHUNK_STEPS = 4096

_OK, _BLOWUP, _DEGENERATE = 0, 1, 2


@njit(cache=True)
def _orthonormalize(Q, diag):
    # modified Gram-Schmidt, two passes per column
    d, p = Q.shape
    for j in range(p):
        for _ in range(2):
            for i in range(j):
                dot = 0.0
                for r in range(d):
                    dot += Q[r, i] * Q[r, j]
                for r in range(d):
                    Q[r, j] -= dot * Q[r, i]
        nrm = 0.0
        for r in range(d):
            nrm += Q[r, j] * Q[r, j]
        nrm = np.sqrt(nrm)
        diag[j] = nrm
        if not np.isfinite(nrm):
            return _BLOWUP
        if nrm < DEGENERATE_THRESHOLD:
            return _DEGENERATE
        for r in range(d):
            Q[r, j] /= nrm
    return _OK


@njit(cache=True)
def _matmul_into(M, Q, out):
    d, p = Q.shape
    for r in range(d):
        for c in range(p):
            acc = 0.0
            for s in range(d):
                acc += M[r, s] * Q[s, c]
            out[r, c] = acc


@njit(cache=True)
def _propagate(table, codes, offsets, probe_table, probe_codes, Q, S, P, state,
               t0, start, n_total, period):
    """Advance frame ``Q`` through one chunk of steps; mutates Q, S, P, state.

    state[0] counts probe steps, state[1] counts steps since the last QR.
    """
    n = offsets.shape[0] - 1
    d, p = Q.shape
    kp = probe_codes.shape[1]
    tmp = np.empty((d, p))
    diag = np.empty(p)
    since = state[1]
    for t in range(n):
        g = t0 + t
        if kp > 0 and g >= start and since == 0:
            for r in range(kp):
                _matmul_into(probe_table[probe_codes[t, r]], Q, tmp)
                status = _orthonormalize(tmp, diag)
                if status != _OK:
                    return status
                for j in range(p):
                    P[r, j] += np.log(diag[j])
            state[0] += 1
        for ell in range(offsets[t], offsets[t + 1]):
            _matmul_into(table[codes[ell]], Q, tmp)
            Q[:, :] = tmp
        since += 1
        if since >= period or g + 1 == start or g + 1 == n_total:
            status = _orthonormalize(Q, diag)
            if status != _OK:
                return status
            if g >= start:
                for j in range(p):
                    S[j] += np.log(diag[j])
            since = 0
    state[1] = since
    return _OK


def _raise_on(status: int) -> None:
    if status == _BLOWUP:
        raise NumericalBlowup("non-finite scale factor during re-orthonormalization")
    if status == _DEGENERATE:
        raise DegenerateFrame(f"re-orthonormalization produced a diagonal below {DEGENERATE_THRESHOLD:g}")


def initial_frame(dim: int) -> np.ndarray:
    return np.eye(dim)


def propagate_stream(action: ZkAction, codes: np.ndarray, offsets: np.ndarray, x0,
                     start: int, period: int, probes: bool = False,
                     frame: np.ndarray | None = None):
    """Push a frame through the stream; return per-column log sums.

    Returns ``(S, P, n_probe_steps, x_final)`` where ``S[j]`` is the summed log
    scale factor of frame column ``j`` over steps ``>= start`` and, when
    ``probes`` is set, ``P[i, j]`` is the summed Gram-Schmidt log expansion of
    column ``j`` under generator ``i`` taken at each orthonormal step start.
    """
    codes = np.ascontiguousarray(codes, dtype=np.int64)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    n_total = len(offsets) - 1
    d, k = action.dim, action.rank
    Q = initial_frame(d) if frame is None else np.array(frame, dtype=float)
    S = np.zeros(d)
    P = np.zeros((k if probes else 0, d))
    state = np.zeros(2, dtype=np.int64)
    x = wrap(x0)

    table = action.letter_matrices()
    if table is not None:
        table = np.ascontiguousarray(table)
        if probes:
            probe_table = np.ascontiguousarray(table[0::2])
            probe_codes = np.tile(np.arange(k, dtype=np.int64), (n_total, 1))
        else:
            probe_table = np.zeros((1, d, d))
            probe_codes = np.zeros((n_total, 0), dtype=np.int64)
        _raise_on(_propagate(table, codes, offsets, probe_table, probe_codes, Q, S, P, state,
                             0, start, n_total, period))
        return S, P, int(state[0]), None

    fwd = []
    jac = []
    for g in action.generators:
        fwd.extend([g.forward, g.inverse])
        jac.extend([g.jacobian, g.inverse_jacobian])
    for c0 in range(0, n_total, CHUNK_STEPS):
        c1 = min(c0 + CHUNK_STEPS, n_total)
        lo, hi = offsets[c0], offsets[c1]
        chunk_codes = codes[lo:hi]
        chunk_offsets = offsets[c0:c1 + 1] - lo
        letter_pts = np.empty((hi - lo, d))
        step_pts = np.empty((c1 - c0, d))
        for t in range(c1 - c0):
            step_pts[t] = x
            for ell in range(chunk_offsets[t], chunk_offsets[t + 1]):
                letter_pts[ell] = x
                x = wrap(fwd[chunk_codes[ell]](x))
        mats = np.empty((hi - lo, d, d))
        for c in np.unique(chunk_codes):
            mask = chunk_codes == c
            mats[mask] = jac[c](letter_pts[mask])
        if probes:
            probe_table = np.empty((c1 - c0, k, d, d))
            for i, g in enumerate(action.generators):
                probe_table[:, i] = g.jacobian(step_pts)
            probe_table = probe_table.reshape(-1, d, d)
            probe_codes = np.arange((c1 - c0) * k, dtype=np.int64).reshape(c1 - c0, k)
        else:
            probe_table = np.zeros((1, d, d))
            probe_codes = np.zeros((c1 - c0, 0), dtype=np.int64)
        _raise_on(_propagate(mats, np.arange(hi - lo, dtype=np.int64), chunk_offsets,
                             probe_table, probe_codes, Q, S, P, state, c0, start, n_total, period))
    return S, P, int(state[0]), x
