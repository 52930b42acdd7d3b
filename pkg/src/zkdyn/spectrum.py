"""Lyapunov spectra of Z^k-actions by QR re-orthonormalization.

The joint spectrum is a list of blocks ``(d_j, (lambda_1j, ..., lambda_kj))``:
a multiplicity and one rate per generator.  Rates are in nats per iterate.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from ._engine import propagate_stream
from .action import Letter, ZkAction, letter_code
from .errors import GroupingAmbiguity, ValidationError


@dataclass(frozen=True)
class EstimatorConfig:
    n_steps: int = 10**5
    reorth_period: int = 1
    burn_in: int = 10**3
    grouping_epsilon: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.n_steps, int) and isinstance(self.burn_in, int)):
            raise ValidationError("n_steps and burn_in must be integers")
        if not self.n_steps > self.burn_in >= 0:
            raise ValidationError(f"need n_steps > burn_in >= 0, got {self.n_steps}, {self.burn_in}")
        if not (isinstance(self.reorth_period, int) and self.reorth_period >= 1):
            raise ValidationError("reorth_period must be an integer >= 1")
        if not self.grouping_epsilon > 0:
            raise ValidationError("grouping_epsilon must be positive")

    def replace(self, **changes) -> "EstimatorConfig":
        fields = dict(n_steps=self.n_steps, reorth_period=self.reorth_period, burn_in=self.burn_in,
                      grouping_epsilon=self.grouping_epsilon, seed=self.seed)
        fields.update(changes)
        return EstimatorConfig(**fields)


@dataclass(frozen=True)
class Block:
    multiplicity: int
    rates: tuple[float, ...]


@dataclass(frozen=True)
class LyapunovSpectrum:
    """Joint spectrum; ``exact`` marks analytic (eigenvalue) spectra."""

    blocks: tuple[Block, ...]
    dim: int
    grouping_epsilon: float = 0.05
    exact: bool = False

    def __post_init__(self):
        total = sum(b.multiplicity for b in self.blocks)
        if total != self.dim:
            raise ValidationError(f"block multiplicities sum to {total}, expected {self.dim}")
        if len({len(b.rates) for b in self.blocks}) > 1:
            raise ValidationError("all blocks must carry the same number of rates")

    @property
    def rank(self) -> int:
        return len(self.blocks[0].rates)

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([b.multiplicity for b in self.blocks])

    @property
    def rates(self) -> np.ndarray:
        """``(s, k)`` array: row j holds the rates of block j."""
        return np.array([b.rates for b in self.blocks], dtype=float)

    def volume_defect(self) -> np.ndarray:
        """Per-generator sum of multiplicity-weighted rates (0 when volume preserving)."""
        return self.multiplicities @ self.rates

    def combined_rates(self, weights) -> np.ndarray:
        """Per-block rate of a weighted combination of generators."""
        return self.rates @ np.asarray(weights, dtype=float)

    def to_dict(self) -> dict:
        return {"blocks": [{"d": b.multiplicity, "rates": [float(r) for r in b.rates]}
                           for b in self.blocks]}


def block_order_key(rates) -> tuple:
    """Blocks sort by the sum of their rates, then lexicographically."""
    return (float(np.sum(rates)),) + tuple(float(r) for r in rates)


def as_codes(word_stream, n: int) -> np.ndarray:
    """Materialize the first ``n`` letters of a stream as letter codes."""
    if isinstance(word_stream, np.ndarray) and word_stream.ndim == 2:
        arr = word_stream[:n]
        codes = 2 * arr[:, 0].astype(np.int64) + (arr[:, 1] < 0)
    else:
        codes = np.fromiter((letter_code(l) for l in itertools.islice(word_stream, n)),
                            dtype=np.int64)
    if len(codes) < n:
        raise ValidationError(f"word stream yielded {len(codes)} letters, need {n}")
    return codes


def _validate_codes(action: ZkAction, codes: np.ndarray) -> None:
    if codes.size and (codes.min() < 0 or codes.max() >= 2 * action.rank):
        raise ValidationError("word stream refers to a generator outside the action")


def qr_exponents(action: ZkAction, word_stream: Iterable[Letter], x0, cfg: EstimatorConfig) -> np.ndarray:
    """Finite-time Lyapunov exponents along a stream of letters, sorted descending.

    Each letter is one time step.  The frame is re-orthonormalized every
    ``cfg.reorth_period`` letters; log scale factors accumulated after
    ``cfg.burn_in`` letters are divided by ``n_steps - burn_in``.
    """
    codes = as_codes(word_stream, cfg.n_steps)
    _validate_codes(action, codes)
    offsets = np.arange(cfg.n_steps + 1, dtype=np.int64)
    S, _, _, _ = propagate_stream(action, codes, offsets, x0, cfg.burn_in, cfg.reorth_period)
    return np.sort(S / (cfg.n_steps - cfg.burn_in))[::-1]


class Grouping(NamedTuple):
    blocks: list[Block]
    ambiguous: bool


def _clusters(raw: np.ndarray, eps: float) -> list[list[int]]:
    n = len(raw)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a in range(n):
        for b in range(a + 1, n):
            if np.max(np.abs(raw[a] - raw[b])) <= eps:
                parent[find(a)] = find(b)
    groups: dict[int, list[int]] = {}
    for a in range(n):
        groups.setdefault(find(a), []).append(a)
    return sorted(groups.values())


def group_exponents(raw, epsilon: float) -> Grouping:
    """Cluster per-vector rate tuples into blocks.

    Two tuples are linked when their sup-norm distance is at most ``epsilon``;
    blocks are the connected components (transitive closure).  Block rates are
    member means.  The grouping is flagged ambiguous when some epsilon in
    ``[epsilon/2, 2*epsilon]`` would partition differently; since the partition
    only coarsens as epsilon grows, comparing the two endpoints decides this.
    """
    if not epsilon > 0:
        raise ValidationError("epsilon must be positive")
    raw = np.asarray(raw, dtype=float)
    if raw.ndim == 1:
        raw = raw[:, None]
    clusters = _clusters(raw, epsilon)
    ambiguous = _clusters(raw, epsilon / 2) != _clusters(raw, 2 * epsilon)
    blocks = [Block(len(c), tuple(float(v) for v in raw[c].mean(axis=0))) for c in clusters]
    blocks.sort(key=lambda b: block_order_key(b.rates))
    return Grouping(blocks, ambiguous)


def _combined_word(rank: int, powers) -> np.ndarray:
    return np.repeat(2 * np.arange(rank, dtype=np.int64), powers)


def _joint_raw(action: ZkAction, x0, cfg: EstimatorConfig, powers):
    word = _combined_word(action.rank, powers)
    codes = np.tile(word, cfg.n_steps)
    offsets = np.arange(cfg.n_steps + 1, dtype=np.int64) * len(word)
    S, P, n_probe, _ = propagate_stream(action, codes, offsets, x0, cfg.burn_in,
                                        cfg.reorth_period, probes=True)
    combined = S / (cfg.n_steps - cfg.burn_in)
    per_vector = (P / n_probe).T  # (d, k)
    return combined, per_vector


def _tie(combined: np.ndarray, per_vector: np.ndarray, eps: float) -> bool:
    # distinct blocks hiding behind coinciding combined exponents
    d = len(combined)
    for a in range(d):
        for b in range(a + 1, d):
            if abs(combined[a] - combined[b]) <= eps and np.max(np.abs(per_vector[a] - per_vector[b])) > eps:
                return True
    return False


def generator_spectrum(action: ZkAction, x0, cfg: EstimatorConfig) -> LyapunovSpectrum:
    """Estimate the joint spectrum ``{(d_j, lambda_ij)}`` along one orbit.

    The frame is aligned to the joint filtration by iterating the combined map
    f_1 ... f_k; at every orthonormal step the one-step Gram-Schmidt expansion
    of each frame column under each generator is averaged along the same
    orbit.  If the combined map cannot separate the blocks (tie or ambiguous
    grouping) the estimate is redone with f_1 f_2^2 ... f_k^k.
    """
    eps = cfg.grouping_epsilon
    for powers in (np.ones(action.rank, dtype=int), np.arange(1, action.rank + 1)):
        combined, per_vector = _joint_raw(action, x0, cfg, powers)
        grouping = group_exponents(per_vector, eps)
        if not grouping.ambiguous and not _tie(combined, per_vector, eps):
            return LyapunovSpectrum(tuple(grouping.blocks), action.dim, eps)
    raise GroupingAmbiguity("rates straddle the grouping epsilon even with the fallback word")
