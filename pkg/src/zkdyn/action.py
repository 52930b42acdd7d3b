"""Z^k-actions on the d-torus given by k commuting invertible generators.

Points are arrays of shape ``(d,)`` (or ``(..., d)`` for batches) with
coordinates in ``[0, 1)``.  Tangent vectors live in R^d; the torus is flat, so
a single global frame is used for every tangent space.

Words are sequences of letters ``(i, sign)`` with a zero-based generator index
``i`` and ``sign`` in ``{+1, -1}``.  Letters are applied left to right: the
first letter acts first.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.stats import qmc

from .errors import CommutationViolation, DimensionMismatch, NotInvertible, WordTooLong

Letter = tuple[int, int]
MapFn = Callable[[np.ndarray], np.ndarray]

#: Number of points on the deterministic sample grid used by validation.
N_SAMPLE_POINTS = 128
DEFAULT_MAX_WORD_LENGTH = 10**6


def wrap(x):
    """Reduce coordinates into ``[0, 1)``.

    ``np.mod`` can return exactly 1.0 for tiny negative inputs; those are
    folded back to 0 so the result is canonical and the operation idempotent.
    """
    y = np.mod(np.asarray(x, dtype=float), 1.0)
    return np.where(y >= 1.0, 0.0, y)


def torus_distance(x, y):
    """Euclidean distance on the flat torus (shortest representative)."""
    delta = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) % 1.0
    delta = np.minimum(delta, 1.0 - delta)
    return np.sqrt(np.sum(delta**2, axis=-1))


def sample_grid(dim: int, n: int = N_SAMPLE_POINTS) -> np.ndarray:
    """Deterministic low-discrepancy points in ``[0, 1)^dim`` (unscrambled Halton)."""
    return qmc.Halton(d=dim, scramble=False).random(n + 1)[1:]


@dataclass(frozen=True, eq=False)
class Generator:
    """One generator f of the action, with its inverse and both tangent maps.

    All four callables are vectorized: maps take ``(..., d)`` arrays and
    return ``(..., d)`` arrays (wrapping is done by the caller), tangent maps
    return ``(..., d, d)`` Jacobians.  ``matrix`` is set for linear
    generators, whose Jacobian is constant; the estimators then skip orbit
    tracking altogether.
    """

    forward: MapFn
    inverse: MapFn
    jacobian: MapFn
    inverse_jacobian: MapFn
    matrix: np.ndarray | None = None
    inverse_matrix: np.ndarray | None = None
    name: str = ""

    @property
    def is_linear(self) -> bool:
        return self.matrix is not None

    def inverted(self) -> "Generator":
        return Generator(
            forward=self.inverse,
            inverse=self.forward,
            jacobian=self.inverse_jacobian,
            inverse_jacobian=self.jacobian,
            matrix=self.inverse_matrix,
            inverse_matrix=self.matrix,
            name=f"{self.name}^-1" if self.name else "",
        )


def identity_generator(dim: int) -> Generator:
    eye = np.eye(dim)
    eye.flags.writeable = False

    def ident(x):
        return np.array(x, dtype=float)

    def jac(x):
        x = np.asarray(x)
        return np.broadcast_to(eye, x.shape[:-1] + (dim, dim)).copy()

    return Generator(ident, ident, jac, jac, matrix=np.eye(dim, dtype=np.int64),
                     inverse_matrix=np.eye(dim, dtype=np.int64), name="id")


@dataclass(frozen=True, eq=False)
class ZkAction:
    generators: tuple[Generator, ...]
    dim: int
    commutation_tolerance: float = 1e-9
    max_word_length: int = DEFAULT_MAX_WORD_LENGTH
    # letter code -> constant Jacobian, or None when some generator is nonlinear
    _const_jacobians: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def is_linear(self) -> bool:
        return self._const_jacobians is not None

    def generator(self, letter: Letter) -> Generator:
        i, sign = letter
        g = self.generators[i]
        return g if sign > 0 else g.inverted()

    def letter_matrices(self) -> np.ndarray | None:
        """Constant Jacobians indexed by letter code ``2*i + (sign < 0)``."""
        return self._const_jacobians


def letter_code(letter: Letter) -> int:
    i, sign = letter
    return 2 * int(i) + (1 if sign < 0 else 0)


def _max_inverse_defect(g: Generator, pts: np.ndarray) -> float:
    a = wrap(g.forward(wrap(g.inverse(pts))))
    b = wrap(g.inverse(wrap(g.forward(pts))))
    return float(max(torus_distance(a, pts).max(), torus_distance(b, pts).max()))


def make_action(generators: Sequence[Generator], dim: int, tol: float = 1e-9,
                max_word_length: int = DEFAULT_MAX_WORD_LENGTH) -> ZkAction:
    """Validate generators and assemble an immutable :class:`ZkAction`.

    Commutation and invertibility are checked on a deterministic Halton grid
    of ``N_SAMPLE_POINTS`` points.  Linear generators (``matrix`` set) are
    additionally checked for exact commutation in integer arithmetic.
    """
    generators = tuple(generators)
    if len(generators) < 1 or dim < 1:
        raise DimensionMismatch(f"need k >= 1 and d >= 1, got k={len(generators)}, d={dim}")
    for g in generators:
        for fn in (g.forward, g.inverse, g.jacobian, g.inverse_jacobian):
            if not callable(fn):
                raise TypeError("generator descriptors must supply four callables")

    pts = sample_grid(dim)
    for idx, g in enumerate(generators):
        try:
            shape = np.shape(g.forward(pts))
        except ValueError as exc:  # typically a broadcasting failure
            raise DimensionMismatch(f"generator {idx} cannot be evaluated on R^{dim}: {exc}") from exc
        if shape != pts.shape:
            raise DimensionMismatch(f"generator {idx} does not map R^{dim} to itself")
        defect = _max_inverse_defect(g, pts)
        if not defect <= tol:
            raise NotInvertible(f"generator {idx}: forward/inverse defect {defect:.3g} > {tol:g}")

    for i in range(len(generators)):
        for j in range(i + 1, len(generators)):
            gi, gj = generators[i], generators[j]
            if gi.is_linear and gj.is_linear:
                a = np.asarray(gi.matrix, dtype=object)
                b = np.asarray(gj.matrix, dtype=object)
                if not np.array_equal(a.dot(b), b.dot(a)):
                    raise CommutationViolation(f"generators {i} and {j} do not commute exactly")
            ij = wrap(gi.forward(wrap(gj.forward(pts))))
            ji = wrap(gj.forward(wrap(gi.forward(pts))))
            dist = float(torus_distance(ij, ji).max())
            if not dist <= tol:
                raise CommutationViolation(
                    f"generators {i} and {j}: max sampled commutator distance {dist:.3g} > {tol:g}")

    const = None
    if all(g.is_linear for g in generators):
        const = np.empty((2 * len(generators), dim, dim))
        for i, g in enumerate(generators):
            const[2 * i] = np.asarray(g.matrix, dtype=float)
            const[2 * i + 1] = np.asarray(g.inverse_matrix, dtype=float)
        const.flags.writeable = False
    return ZkAction(generators, dim, tol, max_word_length, const)


def _check_letter(action: ZkAction, letter: Letter) -> None:
    i, sign = letter
    if not 0 <= i < action.rank or sign not in (1, -1):
        raise ValueError(f"invalid letter {letter!r} for an action of rank {action.rank}")


def apply_word(action: ZkAction, word: Iterable[Letter], x) -> np.ndarray:
    """Apply the letters of ``word`` to ``x``, first letter first."""
    x = wrap(x)
    if x.shape[-1] != action.dim:
        raise DimensionMismatch(f"point has dimension {x.shape[-1]}, action has {action.dim}")
    for letter in word:
        _check_letter(action, letter)
        g = action.generators[letter[0]]
        x = wrap(g.forward(x) if letter[1] > 0 else g.inverse(x))
    return x


def lattice_word(n: Sequence[int]) -> list[Letter]:
    """Canonical word for T^n: generator 0 letters first, then generator 1, ...

    The order is immaterial for a genuine Z^k-action.
    """
    word: list[Letter] = []
    for i, ni in enumerate(n):
        word.extend([(i, 1 if ni > 0 else -1)] * abs(int(ni)))
    return word


def apply_lattice(action: ZkAction, n: Sequence[int], x) -> np.ndarray:
    n = [int(v) for v in n]
    if len(n) != action.rank:
        raise DimensionMismatch(f"lattice vector has length {len(n)}, action rank is {action.rank}")
    if any(abs(v) > action.max_word_length for v in n):
        raise WordTooLong(f"|n_i| exceeds max word length {action.max_word_length}")
    return apply_word(action, lattice_word(n), x)


def tangent_apply(action: ZkAction, letter: Letter, x, u) -> np.ndarray:
    """Derivative of the (possibly inverted) generator at ``x`` applied to ``u``."""
    _check_letter(action, letter)
    g = action.generators[letter[0]]
    jac = g.jacobian(wrap(x)) if letter[1] > 0 else g.inverse_jacobian(wrap(x))
    return jac @ np.asarray(u, dtype=float)


def word_jacobian(action: ZkAction, word: Iterable[Letter], x) -> np.ndarray:
    """Jacobian of the composed word at ``x`` (chain rule along the orbit)."""
    x = wrap(x)
    jac = np.eye(action.dim)
    for letter in word:
        _check_letter(action, letter)
        g = action.generators[letter[0]]
        if letter[1] > 0:
            jac = g.jacobian(x) @ jac
            x = wrap(g.forward(x))
        else:
            jac = g.inverse_jacobian(x) @ jac
            x = wrap(g.inverse(x))
    return jac


def invert_generators(action: ZkAction, mask: Sequence[bool]) -> ZkAction:
    """Action with f_i replaced by f_i^-1 wherever ``mask[i]`` is set.

    Inverting generators of a commuting family keeps it commuting, so the
    result is built without re-validation.
    """
    mask = [bool(m) for m in mask]
    if len(mask) != action.rank:
        raise DimensionMismatch(f"mask has length {len(mask)}, action rank is {action.rank}")
    gens = tuple(g.inverted() if m else g for g, m in zip(action.generators, mask))
    const = action.letter_matrices()
    if const is not None:
        const = const.copy()
        for i, m in enumerate(mask):
            if m:
                const[[2 * i, 2 * i + 1]] = const[[2 * i + 1, 2 * i]]
        const.flags.writeable = False
    return ZkAction(gens, action.dim, action.commutation_tolerance, action.max_word_length, const)
