"""Random compositions of the generators (i.i.d. over a weight vector m).

A sample omega is a finite, one-sided stretch of the letter sequence; the
skew product advances the fibre point by the head letter and shifts omega.
Entropy evaluators turn a joint spectrum into random-entropy values.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._engine import propagate_stream
from .action import ZkAction, wrap
from .errors import GammaOutOfRange, ValidationError
from .spectrum import EstimatorConfig, LyapunovSpectrum, generator_spectrum

ENTROPY_METHODS = ("pesin_formula", "ruelle_bound", "dimension_formula", "matrix_oracle")


@dataclass(frozen=True)
class RandomModel:
    weights: tuple[float, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValidationError("weights must be a non-empty vector")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError(f"weights must be non-negative and sum to 1, got {w.tolist()}")
        object.__setattr__(self, "weights", tuple(float(v) for v in w))

    @property
    def rank(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    method: str
    stderr: float = 0.0
    samples: int = 1

    def __post_init__(self):
        if self.method not in ENTROPY_METHODS:
            raise ValidationError(f"unknown entropy method {self.method!r}")
        if not np.isfinite(self.value) or not self.stderr >= 0:
            raise ValidationError("entropy value must be finite and stderr non-negative")

    def to_dict(self) -> dict:
        return {"value": float(self.value), "method": self.method,
                "stderr": float(self.stderr), "samples": int(self.samples)}


@dataclass(frozen=True, eq=False)
class OmegaSample:
    letters: np.ndarray  # zero-based generator indices
    seed: int
    model: RandomModel


def sample_omega(model: RandomModel, length: int, seed: int) -> OmegaSample:
    """``length`` i.i.d. generator indices drawn from ``model.weights``."""
    if length < 1:
        raise ValidationError("length must be >= 1")
    rng = np.random.default_rng(seed)
    letters = rng.choice(model.rank, size=length, p=np.asarray(model.weights))
    letters = letters.astype(np.int64)
    letters.flags.writeable = False
    return OmegaSample(letters, seed, model)


def skew_step(action: ZkAction, omega_head: int, x) -> np.ndarray:
    """Fibre part of the skew product: x -> f_head(x)."""
    if not 0 <= omega_head < action.rank:
        raise ValidationError(f"generator index {omega_head} out of range")
    return wrap(action.generators[omega_head].forward(wrap(x)))


@dataclass(frozen=True, eq=False)
class RandomExponents:
    seeds: tuple[int, ...]
    per_omega: np.ndarray  # (n_omegas, d), each row sorted descending
    mean: np.ndarray
    stddev: np.ndarray


def omega_exponents(action: ZkAction, omega: OmegaSample, x0, cfg: EstimatorConfig) -> np.ndarray:
    codes = 2 * omega.letters[:cfg.n_steps]
    if len(codes) < cfg.n_steps:
        raise ValidationError("omega sample shorter than n_steps")
    offsets = np.arange(cfg.n_steps + 1, dtype=np.int64)
    S, _, _, _ = propagate_stream(action, codes, offsets, x0, cfg.burn_in, cfg.reorth_period)
    return np.sort(S / (cfg.n_steps - cfg.burn_in))[::-1]


def random_exponents(action: ZkAction, model: RandomModel, x0, cfg: EstimatorConfig,
                     n_omegas: int) -> RandomExponents:
    """Random Lyapunov exponents for ``n_omegas`` samples (seeds cfg.seed, cfg.seed+1, ...).

    The cross-omega standard deviation (ddof=1) measures how far the
    estimates are from being non-random.
    """
    if n_omegas < 1:
        raise ValidationError("n_omegas must be >= 1")
    if model.rank != action.rank:
        raise ValidationError(f"model has {model.rank} weights, action has rank {action.rank}")
    seeds = tuple(cfg.seed + r for r in range(n_omegas))
    rows = [omega_exponents(action, sample_omega(model, cfg.n_steps, s), x0, cfg) for s in seeds]
    per_omega = np.array(rows)
    mean = per_omega.mean(axis=0)
    if n_omegas > 1:
        stddev = per_omega.std(axis=0, ddof=1)
        stddev[np.ptp(per_omega, axis=0) == 0] = 0.0
    else:
        stddev = np.zeros(action.dim)
    return RandomExponents(seeds, per_omega, mean, stddev)


def _check_model(spectrum: LyapunovSpectrum, model: RandomModel) -> None:
    if spectrum.rank != model.rank:
        raise ValidationError(f"spectrum has {spectrum.rank} rates per block, model has {model.rank} weights")


def random_entropy_pesin(spectrum: LyapunovSpectrum, model: RandomModel) -> EntropyEstimate:
    """Sum over blocks of d_j * max(0, sum_i m_i lambda_ij).

    This is the maximum over block subsets J of the weighted sum; the
    positive-part form picks exactly the blocks with positive combined rate.
    """
    _check_model(spectrum, model)
    combined = spectrum.combined_rates(model.weights)
    value = float(np.sum(spectrum.multiplicities * np.maximum(0.0, combined)))
    return EntropyEstimate(value, "pesin_formula")


def ruelle_holds(bound: EntropyEstimate, measured: EntropyEstimate, atol: float = 1e-9) -> bool:
    """``measured <= bound`` up to three combined standard errors and rounding slack ``atol``."""
    return bool(measured.value <= bound.value + 3 * (measured.stderr + bound.stderr) + atol)


def random_entropy_ruelle_check(spectrum: LyapunovSpectrum, model: RandomModel,
                                measured: EntropyEstimate, atol: float = 1e-9) -> bool:
    """True iff ``measured`` respects the Ruelle upper bound given by the spectrum."""
    return ruelle_holds(random_entropy_pesin(spectrum, model), measured, atol)


def check_gammas(spectrum: LyapunovSpectrum, gammas) -> np.ndarray:
    g = np.asarray(gammas, dtype=float)
    if g.shape != (len(spectrum.blocks),):
        raise GammaOutOfRange(f"need one gamma per block ({len(spectrum.blocks)}), got shape {g.shape}")
    if np.any(g < 0) or np.any(g > spectrum.multiplicities):
        raise GammaOutOfRange("need 0 <= gamma_j <= d_j for every block")
    return g


def random_entropy_dimension(spectrum: LyapunovSpectrum, model: RandomModel, gammas) -> EntropyEstimate:
    """Sum over blocks of gamma_j * max(0, sum_i m_i lambda_ij); gammas are supplied, not estimated."""
    _check_model(spectrum, model)
    g = check_gammas(spectrum, gammas)
    combined = spectrum.combined_rates(model.weights)
    return EntropyEstimate(float(np.sum(g * np.maximum(0.0, combined))), "dimension_formula")


def sample_initial_points(dim: int, n_points: int, seed: int) -> np.ndarray:
    """Uniform (Lebesgue) initial points for Monte-Carlo averages over the measure."""
    return np.random.default_rng(seed).random((n_points, dim))


def averaged_random_entropy(action: ZkAction, model: RandomModel, cfg: EstimatorConfig,
                            n_points: int = 16) -> EntropyEstimate:
    """Pesin-formula random entropy averaged over uniformly drawn initial points.

    Each point gets its own joint spectrum estimate; the result carries the
    Monte-Carlo standard error across points.
    """
    if n_points < 1:
        raise ValidationError("n_points must be >= 1")
    pts = sample_initial_points(action.dim, n_points, cfg.seed)
    values = np.array([random_entropy_pesin(generator_spectrum(action, x, cfg), model).value
                       for x in pts])
    stderr = float(values.std(ddof=1) / np.sqrt(n_points)) if n_points > 1 else 0.0
    return EntropyEstimate(float(values.mean()), "pesin_formula", stderr, n_points)
