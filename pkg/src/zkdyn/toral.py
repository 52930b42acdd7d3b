"""Linear Z^k-actions on T^d and their smooth conjugates.

Commuting unimodular integer matrices act by x -> A x mod 1.  Their joint
spectrum is known in closed form (log-moduli of joint eigenvalues), which
makes them the reference models for every estimator in the package.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np
import sympy
from numba import njit

from .action import Generator, ZkAction, make_action, wrap
from .errors import (
    DimensionMismatch,
    EpsilonTooLarge,
    NotCommutingExact,
    NotIntegerMatrix,
    NotSimultaneouslyDiagonalizable,
    NotUnimodular,
)
from .spectrum import Block, LyapunovSpectrum, block_order_key

CAT = ((2, 1), (1, 1))

#: Shipped commuting unimodular families, keyed by name.
MODELS: dict[str, tuple] = {
    "identity": (((1, 0), (0, 1)), ((1, 0), (0, 1))),
    "cat_pair": (CAT, ((5, 3), (3, 2))),            # (A, A^2)
    "cat_inverse_pair": (CAT, ((1, -1), (-1, 2))),  # (A, A^-1)
    # companion matrix C of t^3 - 3t - 1 and C + I: two independent units on T^3
    "cubic_pair": (((0, 0, 1), (1, 0, 3), (0, 1, 0)), ((1, 0, 1), (1, 1, 3), (0, 1, 1))),
}

CAT_EXPONENT = float(np.log((3 + np.sqrt(5)) / 2))


def as_integer_matrix(m) -> np.ndarray:
    """Square integer matrix as an int64 array; refuses non-integer entries."""
    arr = np.asarray(m)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimensionMismatch(f"expected a square matrix, got shape {arr.shape}")
    if arr.dtype == bool or arr.dtype.kind not in "iuf":
        raise NotIntegerMatrix("matrix entries must be integers")
    if arr.dtype.kind == "f" and not np.all(np.isfinite(arr) & (arr == np.round(arr))):
        raise NotIntegerMatrix("matrix entries must be integers")
    return arr.astype(np.int64)


def integer_det(m) -> int:
    return int(sympy.Matrix(as_integer_matrix(m).tolist()).det())


def integer_inverse(m) -> np.ndarray:
    a = as_integer_matrix(m)
    if abs(integer_det(a)) != 1:
        raise NotUnimodular(f"det = {integer_det(a)}, need +-1")
    inv = sympy.Matrix(a.tolist()).inv()
    return np.array(inv.tolist(), dtype=np.int64)


def linear_generator(m, name: str = "") -> Generator:
    a = as_integer_matrix(m)
    a_inv = integer_inverse(a)
    fa, fa_inv = a.astype(float), a_inv.astype(float)
    d = a.shape[0]

    def forward(x):
        return wrap(np.asarray(x, dtype=float) @ fa.T)

    def inverse(x):
        return wrap(np.asarray(x, dtype=float) @ fa_inv.T)

    def jac(x):
        return np.broadcast_to(fa, np.shape(x)[:-1] + (d, d)).copy()

    def jac_inv(x):
        return np.broadcast_to(fa_inv, np.shape(x)[:-1] + (d, d)).copy()

    a.flags.writeable = False
    a_inv.flags.writeable = False
    return Generator(forward, inverse, jac, jac_inv, matrix=a, inverse_matrix=a_inv, name=name)


def _check_family(matrices) -> list[np.ndarray]:
    mats = [as_integer_matrix(m) for m in matrices]
    if not mats:
        raise DimensionMismatch("need at least one matrix")
    d = mats[0].shape[0]
    for m in mats:
        if m.shape != (d, d):
            raise DimensionMismatch("all matrices must have the same size")
        if abs(integer_det(m)) != 1:
            raise NotUnimodular(f"det = {integer_det(m)}, need +-1")
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            a, b = mats[i].astype(object), mats[j].astype(object)
            if not np.array_equal(a.dot(b), b.dot(a)):
                raise NotCommutingExact(f"matrices {i} and {j} do not commute")
    return mats


def from_matrices(matrices: Sequence, tol: float = 1e-9) -> ZkAction:
    """Linear Z^k-action x -> A_i x mod 1 generated by commuting unimodular matrices."""
    mats = _check_family(matrices)
    gens = [linear_generator(m, name=f"A{i + 1}") for i, m in enumerate(mats)]
    return make_action(gens, mats[0].shape[0], tol)


def _cluster_values(values: np.ndarray, tol: float) -> list[list[int]]:
    clusters: list[list[int]] = []
    for idx, v in enumerate(values):
        for c in clusters:
            if abs(values[c[0]] - v) <= tol * max(1.0, abs(v)):
                c.append(idx)
                break
        else:
            clusters.append([idx])
    return clusters


def analytic_spectrum(matrices: Sequence, seed: int = 0, attempts: int = 5,
                      tol: float = 1e-8) -> LyapunovSpectrum:
    """Exact joint spectrum of a commuting integer family.

    Eigenspaces of a random small-integer combination B = sum c_i A_i are
    tested for being joint eigenspaces (each A_i acts on them as a scalar).
    Rates are log-moduli of those joint eigenvalues; subspaces with identical
    rate tuples (conjugate pairs in particular) merge into one real block.
    """
    mats = _check_family(matrices)
    d = mats[0].shape[0]
    fmats = [m.astype(float) for m in mats]
    rng = np.random.default_rng(seed)
    for attempt in range(attempts):
        c = rng.integers(-3, 4, size=len(mats)) if attempt else np.arange(1, len(mats) + 1)
        if not np.any(c):
            continue
        b = sum(ci * m for ci, m in zip(c, fmats))
        evals, evecs = np.linalg.eig(b)
        scale = max(1.0, float(np.max(np.abs(evals))))
        pieces = []
        ok = True
        for cluster in _cluster_values(evals, tol):
            v = evecs[:, cluster]
            if np.linalg.matrix_rank(v, tol=1e-8) < len(cluster):
                ok = False  # defective B
                break
            pinv = np.linalg.pinv(v)
            rates = []
            for a in fmats:
                restricted = pinv @ a @ v
                mu = np.trace(restricted) / len(cluster)
                resid = np.linalg.norm(a @ v - mu * v) / max(1.0, np.linalg.norm(a))
                if resid > 1e-7 * scale:
                    ok = False
                    break
                rates.append(float(np.log(abs(mu))))
            if not ok:
                break
            pieces.append((len(cluster), rates))
        if ok:
            return _merge_pieces(pieces, d)
    raise NotSimultaneouslyDiagonalizable(
        "no joint eigenbasis found; estimate the spectrum numerically with generator_spectrum")


def _merge_pieces(pieces, d: int) -> LyapunovSpectrum:
    merged: list[list] = []
    for mult, rates in pieces:
        for entry in merged:
            if np.max(np.abs(np.subtract(entry[1], rates))) <= 1e-9:
                entry[0] += mult
                break
        else:
            merged.append([mult, list(rates)])
    blocks = [Block(m, tuple(r)) for m, r in merged]
    blocks.sort(key=lambda blk: block_order_key(blk.rates))
    return LyapunovSpectrum(tuple(blocks), d, exact=True)


def matrix_entropy(b) -> float:
    """Entropy of the toral automorphism x -> Bx: sum of positive log-moduli of eigenvalues.

    Eigenvalues are computed in multiprecision with twice as many digits as
    the largest entry, so huge lattice powers keep their contracting part.
    """
    if isinstance(b, np.ndarray) and b.dtype == object:
        rows = [[int(v) for v in row] for row in b.tolist()]  # arbitrary-precision entries
    else:
        rows = as_integer_matrix(b).tolist()
    det = int(sympy.Matrix(rows).det())
    if abs(det) != 1:
        raise NotUnimodular(f"det = {det}, need +-1")
    digits = max(len(str(abs(v))) for row in rows for v in row)
    with mpmath.workdps(2 * digits + 30):
        evals, _ = mpmath.eig(mpmath.matrix(rows))
        return float(sum(max(mpmath.mpf(0), mpmath.log(abs(ev))) for ev in evals))


def lattice_matrix(matrices: Sequence, n: Sequence[int]) -> np.ndarray:
    """Exact integer matrix of T^n = A_1^{n_1} ... A_k^{n_k} (object dtype, arbitrary precision)."""
    mats = _check_family(matrices)
    d = mats[0].shape[0]
    out = np.eye(d, dtype=np.int64).astype(object)
    for m, ni in zip(mats, n):
        base = m.astype(object) if ni >= 0 else integer_inverse(m).astype(object)
        for _ in range(abs(int(ni))):
            out = out.dot(base)
    return out


@dataclass(frozen=True)
class ConjugacyParams:
    """Amplitudes of h(x)_r = x_r + eps_r sin(2 pi x_r) / (2 pi)."""

    epsilon: tuple[float, ...]

    def __post_init__(self):
        eps = np.asarray(self.epsilon, dtype=float)
        if not np.all(np.abs(eps) < 1):
            raise EpsilonTooLarge("need |epsilon_r| < 1 for h to be a diffeomorphism")


@njit(cache=True)
def _h_flat(x, eps):
    out = np.empty_like(x)
    for n in range(x.size):
        out[n] = x[n] + eps[n] * np.sin(2 * np.pi * x[n]) / (2 * np.pi)
    return out


@njit(cache=True)
def _h_inv_flat(y, eps, xtol):
    # Newton clipped to the bracket |x - y| <= |eps|/(2 pi); bisection as fallback
    out = np.empty_like(y)
    for n in range(y.size):
        e, target = eps[n], y[n]
        spread = abs(e) / (2 * np.pi)
        lo, hi = target - spread, target + spread
        x = target - e * np.sin(2 * np.pi * target) / (2 * np.pi)
        converged = False
        for _ in range(30):
            step = (x + e * np.sin(2 * np.pi * x) / (2 * np.pi) - target) / (1 + e * np.cos(2 * np.pi * x))
            x = min(max(x - step, lo), hi)
            if abs(step) <= xtol:
                converged = True
                break
        if not converged:
            while hi - lo > xtol:
                mid = 0.5 * (lo + hi)
                if mid + e * np.sin(2 * np.pi * mid) / (2 * np.pi) < target:
                    lo = mid
                else:
                    hi = mid
            x = 0.5 * (lo + hi)
        out[n] = x
    return out


def _h(x, eps):
    x = np.asarray(x, dtype=float)
    e = np.broadcast_to(eps, x.shape)
    return _h_flat(x.ravel(), np.ascontiguousarray(e).ravel()).reshape(x.shape)


def _dh(x, eps):
    return 1 + eps * np.cos(2 * np.pi * x)


def _h_inv(y, eps, xtol=1e-13):
    """Coordinatewise inverse of h (h is increasing on each coordinate)."""
    y = np.asarray(y, dtype=float)
    e = np.broadcast_to(eps, y.shape)
    return _h_inv_flat(y.ravel(), np.ascontiguousarray(e).ravel(), xtol).reshape(y.shape)


def conjugate_action(action: ZkAction, params: ConjugacyParams | Sequence[float]) -> ZkAction:
    """Smooth conjugate h o f_i o h^-1 of every generator, with exact chain-rule Jacobians."""
    if not isinstance(params, ConjugacyParams):
        params = ConjugacyParams(tuple(float(e) for e in params))
    eps = np.asarray(params.epsilon, dtype=float)
    if eps.shape != (action.dim,):
        raise DimensionMismatch(f"need {action.dim} epsilons, got {eps.shape}")
    if not np.any(eps):
        return action

    def conj(g: Generator, name: str) -> Generator:
        def forward(y):
            return wrap(_h(wrap(g.forward(_h_inv(wrap(y), eps))), eps))

        def inverse(y):
            return wrap(_h(wrap(g.inverse(_h_inv(wrap(y), eps))), eps))

        def chain(y, fmap, fjac):
            x = _h_inv(wrap(y), eps)
            fx = wrap(fmap(x))
            inner = fjac(x) / _dh(x, eps)[..., None, :]
            return _dh(fx, eps)[..., :, None] * inner

        def jac(y):
            return chain(y, g.forward, g.jacobian)

        def jac_inv(y):
            return chain(y, g.inverse, g.inverse_jacobian)

        return Generator(forward, inverse, jac, jac_inv, name=name)

    gens = [conj(g, f"h{g.name}h^-1") for g in action.generators]
    return make_action(gens, action.dim, action.commutation_tolerance, action.max_word_length)
