"""Directional Lyapunov exponents and directional entropy.

Along a unit direction v the action is followed by the lattice points m_n
closest to n*v; the increments m_n - m_{n-1} form a nonautonomous sequence of
maps whose growth rates, normalized by n, are the directional exponents.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from ._engine import propagate_stream
from .action import Letter, ZkAction, invert_generators, lattice_word, letter_code
from .errors import NotRational, ValidationError, WordTooLong
from .random_action import EntropyEstimate, check_gammas
from .spectrum import EstimatorConfig, LyapunovSpectrum, generator_spectrum
from .toral import lattice_matrix, matrix_entropy

UNIT_TOL = 1e-12
MAX_DENOMINATOR = 10**6
RATIONAL_TOL = 4e-15
_PATH_CHUNK = 8192


def unit_direction(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValidationError("direction must be a non-empty vector")
    if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
        raise ValidationError(f"direction must have unit length, |v| = {np.linalg.norm(v)!r}")
    return v


@dataclass(frozen=True, eq=False)
class DirectionalPath:
    targets: np.ndarray     # (N+1, k): m_0 .. m_N
    increments: np.ndarray  # (N, k): m_n - m_{n-1}
    direction: np.ndarray


def _closest_points(ns: np.ndarray, v: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    target = ns[:, None] * v[None, :]
    cand = np.rint(target)[:, None, :] + shifts[None, :, :]
    dist = np.sum((cand - target[:, None, :]) ** 2, axis=-1)
    mask = dist == dist.min(axis=1, keepdims=True)
    norm = np.where(mask, np.sum(cand**2, axis=-1), np.inf)
    mask &= norm == norm.min(axis=1, keepdims=True)
    for i in range(v.size):
        ci = np.where(mask, cand[..., i], np.inf)
        mask &= ci == ci.min(axis=1, keepdims=True)
    return cand[np.arange(len(ns)), np.argmax(mask, axis=1)].astype(np.int64)


def lattice_path(v, N: int) -> DirectionalPath:
    """Lattice points m_0..m_N closest to n*v.

    Candidates are round(n v) and its 3^k - 1 neighbours.  Among the closest
    candidates the one of smallest norm wins, remaining ties go to the
    lexicographically smallest vector.
    """
    v = unit_direction(v)
    if N < 1:
        raise ValidationError("N must be >= 1")
    shifts = np.array(list(itertools.product((-1, 0, 1), repeat=v.size)), dtype=float)
    parts = [_closest_points(np.arange(a, min(a + _PATH_CHUNK, N + 1), dtype=float), v, shifts)
             for a in range(0, N + 1, _PATH_CHUNK)]
    targets = np.concatenate(parts)
    targets.flags.writeable = False
    increments = np.diff(targets, axis=0)
    increments.flags.writeable = False
    return DirectionalPath(targets, increments, v)


def _stream_arrays(increments: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Letter codes and per-step offsets for a sequence of lattice increments."""
    inc = np.asarray(increments, dtype=np.int64)
    k = inc.shape[1]
    counts = np.abs(inc)
    step_codes = 2 * np.arange(k, dtype=np.int64)[None, :] + (inc < 0)
    codes = np.repeat(step_codes.ravel(), counts.ravel())
    offsets = np.concatenate([[0], np.cumsum(counts.sum(axis=1))]).astype(np.int64)
    return codes, offsets


def directional_word_stream(action: ZkAction, path: DirectionalPath) -> Iterator[Letter]:
    """Letters of the nonautonomous system: each increment expands into
    ``|delta_i|`` copies of ``(i, sign(delta_i))``, i ascending."""
    inc = path.increments
    if inc.shape[1] != action.rank:
        raise ValidationError("path rank does not match the action")
    if inc.size and np.abs(inc).max() > action.rank:
        raise ValidationError("increments are too large for a unit-direction path")
    for step in inc:
        for i, delta in enumerate(step):
            yield from itertools.repeat((i, 1 if delta > 0 else -1), abs(int(delta)))


def directional_exponents(action: ZkAction, v, x0, cfg: EstimatorConfig) -> np.ndarray:
    """Growth rates along the lattice path of ``v``, sorted descending.

    The path has ``cfg.n_steps`` increments; time is the path index n (not
    the number of letters), burn-in is counted in path steps.
    """
    v = unit_direction(v)
    if v.size != action.rank:
        raise ValidationError(f"direction has {v.size} components, action rank is {action.rank}")
    path = lattice_path(v, cfg.n_steps)
    codes, offsets = _stream_arrays(path.increments)
    S, _, _, _ = propagate_stream(action, codes, offsets, x0, cfg.burn_in, cfg.reorth_period)
    return np.sort(S / (cfg.n_steps - cfg.burn_in))[::-1]


def formula_rates(spectrum: LyapunovSpectrum, v) -> np.ndarray:
    """Per-vector directional rates sum_i v_i lambda_ij, repeated by multiplicity, descending."""
    rates = np.repeat(spectrum.combined_rates(v), spectrum.multiplicities)
    return np.sort(rates)[::-1]


def directional_entropy(spectrum: LyapunovSpectrum, v) -> EntropyEstimate:
    v = unit_direction(v)
    if v.size != spectrum.rank:
        raise ValidationError("direction and spectrum rank differ")
    combined = spectrum.combined_rates(v)
    value = float(np.sum(spectrum.multiplicities * np.maximum(0.0, combined)))
    return EntropyEstimate(value, "pesin_formula")


def directional_entropy_dimension(spectrum: LyapunovSpectrum, v, gammas) -> EntropyEstimate:
    v = unit_direction(v)
    g = check_gammas(spectrum, gammas)
    combined = spectrum.combined_rates(v)
    return EntropyEstimate(float(np.sum(g * np.maximum(0.0, combined))), "dimension_formula")


def octant_reduce(action: ZkAction, v) -> tuple[ZkAction, np.ndarray]:
    """Invert every generator whose component of ``v`` is negative; return it with |v|."""
    v = unit_direction(v)
    negative = v < 0
    if not negative.any():
        return action, v
    return invert_generators(action, negative), np.abs(v)


def reduce_spectrum(spectrum: LyapunovSpectrum, v) -> LyapunovSpectrum:
    """Spectrum of the octant-reduced action: rates of inverted generators change sign."""
    signs = np.where(np.asarray(v) < 0, -1.0, 1.0)
    blocks = tuple(type(b)(b.multiplicity, tuple(float(s * r) for s, r in zip(signs, b.rates)))
                   for b in spectrum.blocks)
    return LyapunovSpectrum(blocks, spectrum.dim, spectrum.grouping_epsilon, spectrum.exact)


def rationalize(v, max_denominator: int = MAX_DENOMINATOR) -> tuple[np.ndarray, float]:
    """Primitive integer vector w and the minimal t > 0 with t*v = w.

    Component ratios against the largest component are matched by continued
    fractions with bounded denominator; a ratio that is not reproduced to
    within ``RATIONAL_TOL`` makes the direction count as irrational.
    """
    v = np.asarray(v, dtype=float)
    r = int(np.argmax(np.abs(v)))
    if v[r] == 0:
        raise NotRational("zero vector has no direction")
    fracs = []
    for vi in v:
        ratio = vi / v[r]
        frac = Fraction(ratio).limit_denominator(max_denominator)
        if abs(float(frac) - ratio) > RATIONAL_TOL:
            raise NotRational(f"no rationalization with denominator <= {max_denominator} for {v.tolist()}")
        fracs.append(frac)
    lcm = math.lcm(*(f.denominator for f in fracs))
    sign = 1 if v[r] > 0 else -1
    w = [sign * int(f * lcm) for f in fracs]
    g = math.gcd(*w)
    w = np.array([x // g for x in w], dtype=np.int64)
    t = float(np.linalg.norm(w) / np.linalg.norm(v))
    return w, t


@dataclass(frozen=True, eq=False)
class RationalCheck:
    lhs: EntropyEstimate
    rhs: EntropyEstimate
    t: float
    lattice_vector: np.ndarray
    rhs_oracle: EntropyEstimate | None = None


def rational_check(action: ZkAction, v, x0, cfg: EstimatorConfig,
                   spectrum: LyapunovSpectrum | None = None) -> RationalCheck:
    """Compare the directional entropy at a rational v with (1/t) h(T^{t v}).

    ``lhs`` comes from the joint spectrum (estimated unless ``spectrum`` is
    given).  ``rhs`` is the positive-exponent sum of the single map T^{t v},
    estimated by iterating its word ``cfg.n_steps`` times (QR per letter); for linear actions
    ``rhs_oracle`` evaluates the composed integer matrix exactly.
    """
    v = unit_direction(v)
    w, t = rationalize(v)
    if int(np.abs(w).max()) > action.max_word_length:
        raise WordTooLong(f"lattice vector {tuple(w)} exceeds the max word length")
    if spectrum is None:
        spectrum = generator_spectrum(action, x0, cfg)
    lhs = directional_entropy(spectrum, v)

    # one stream step per letter, so long words cannot collapse the frame between QRs
    word = np.array([letter_code(l) for l in lattice_word(w)], dtype=np.int64)
    codes = np.tile(word, cfg.n_steps)
    offsets = np.arange(len(codes) + 1, dtype=np.int64)
    S, _, _, _ = propagate_stream(action, codes, offsets, x0, cfg.burn_in * len(word), cfg.reorth_period)
    exps = S / (cfg.n_steps - cfg.burn_in)
    rhs = EntropyEstimate(float(np.sum(np.maximum(0.0, exps))) / t, "pesin_formula")

    oracle = None
    if all(g.is_linear for g in action.generators):
        mats = [g.matrix for g in action.generators]
        oracle = EntropyEstimate(matrix_entropy(lattice_matrix(mats, w)) / t, "matrix_oracle")
    return RationalCheck(lhs, rhs, t, w, oracle)


def extend_to_rk(spectrum: LyapunovSpectrum, v_raw) -> EntropyEstimate:
    """Directional entropy for any vector: 0 at the origin, |v| h(v/|v|) otherwise."""
    v = np.asarray(v_raw, dtype=float)
    norm = float(np.linalg.norm(v))
    if norm == 0:
        return EntropyEstimate(0.0, "pesin_formula")
    return EntropyEstimate(norm * directional_entropy(spectrum, v / norm).value, "pesin_formula")


@dataclass(frozen=True)
class SweepRow:
    theta: float
    v: tuple[float, ...]
    entropy_formula: float
    entropy_from_estimated_rates: float
    max_block_residual: float
    estimated_rates: tuple[float, ...]


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    modulus: float          # max |h(v_{s+1}) - h(v_s)| over adjacent nodes (cyclic)
    max_discrepancy: float  # max |formula - estimate-derived entropy|


def sweep_directions(resolution: int) -> tuple[np.ndarray, np.ndarray]:
    theta = 2 * np.pi * np.arange(resolution) / resolution
    return theta, np.stack([np.cos(theta), np.sin(theta)], axis=1)


def direction_sweep(action: ZkAction, spectrum: LyapunovSpectrum, resolution: int, x0,
                    cfg: EstimatorConfig, directions: Sequence | None = None) -> SweepResult:
    """Formula entropy vs estimated directional rates over many directions.

    For rank 2 the nodes are v = (cos theta, sin theta), theta = 2 pi s / resolution.
    Other ranks need an explicit ``directions`` list (theta is then NaN).
    """
    if directions is None:
        if action.rank != 2:
            raise ValidationError("angular sweeps need rank 2; pass explicit directions otherwise")
        if resolution < 8:
            raise ValidationError("resolution must be >= 8")
        thetas, vs = sweep_directions(resolution)
    else:
        vs = np.array([np.asarray(d, dtype=float) / np.linalg.norm(d) for d in directions])
        thetas = np.full(len(vs), np.nan)

    rows = []
    for theta, v in zip(thetas, vs):
        est = directional_exponents(action, v, x0, cfg)
        formula = directional_entropy(spectrum, v).value
        residual = float(np.max(np.abs(est - formula_rates(spectrum, v))))
        rows.append(SweepRow(float(theta), tuple(float(c) for c in v), formula,
                             float(np.sum(np.maximum(0.0, est))), residual,
                             tuple(float(r) for r in est)))
    h = np.array([r.entropy_formula for r in rows])
    modulus = float(np.max(np.abs(np.diff(np.append(h, h[0]))))) if len(h) > 1 else 0.0
    discrepancy = float(max(abs(r.entropy_formula - r.entropy_from_estimated_rates) for r in rows))
    return SweepResult(tuple(rows), modulus, discrepancy)
