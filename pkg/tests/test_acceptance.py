"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one PASS/FAIL line, printed in the pytest terminal summary
(and on stdout when the file is run directly).
"""
import itertools
import math
import subprocess
import sys
import time

import numpy as np
import pytest

import conftest
from oracles import CAT2_LOG, CAT_LOG, RATIONAL_11, WEIGHTED_07_03
from zkdyn.action import sample_grid, torus_distance, wrap
from zkdyn.directional import (
    direction_sweep,
    directional_entropy,
    directional_exponents,
    extend_to_rk,
    formula_rates,
    lattice_path,
    octant_reduce,
    rational_check,
    reduce_spectrum,
)
from zkdyn.random_action import RandomModel, random_entropy_pesin, random_exponents
from zkdyn.spectrum import Block, EstimatorConfig, LyapunovSpectrum, generator_spectrum
from zkdyn.toral import MODELS, analytic_spectrum, conjugate_action, from_matrices

X0 = np.array([0.1234, 0.5678])
CAT_PAIR = MODELS["cat_pair"]


def record(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def cat_action():
    return from_matrices(CAT_PAIR)


@pytest.fixture(scope="module")
def cat_exact():
    return analytic_spectrum(CAT_PAIR)


@pytest.fixture(scope="module")
def cat_estimated(cat_action):
    return generator_spectrum(cat_action, X0, EstimatorConfig(n_steps=10**5))


def test_1_generator_spectrum_oracle(cat_action):
    t0 = time.perf_counter()
    spec = generator_spectrum(cat_action, X0, EstimatorConfig(n_steps=10**5))
    elapsed = time.perf_counter() - t0
    expected = np.array([[-CAT_LOG, -CAT2_LOG], [CAT_LOG, CAT2_LOG]])
    ok_shape = list(spec.multiplicities) == [1, 1]
    err = float(np.max(np.abs(spec.rates - expected))) if ok_shape else math.inf
    record(1, ok_shape and err <= 1e-3 and elapsed <= 10,
           f"max |rate - oracle| = {err:.2e} (tol 1e-3), runtime {elapsed:.2f}s (<= 10s)")


def test_2_random_exponents(cat_action):
    model = RandomModel((0.7, 0.3))
    t0 = time.perf_counter()
    res = random_exponents(cat_action, model, X0, EstimatorConfig(n_steps=10**5), 10)
    short = random_exponents(cat_action, model, X0, EstimatorConfig(n_steps=10**4), 10)
    long = random_exponents(cat_action, model, X0, EstimatorConfig(n_steps=10**6), 10)
    elapsed = time.perf_counter() - t0
    mean_err = abs(res.mean[0] - WEIGHTED_07_03)
    shrinks = bool(np.all(long.stddev < short.stddev))
    ok = mean_err <= 1e-2 and float(res.stddev.max()) <= 1e-2 and shrinks and elapsed <= 120
    record(2, ok, f"|mean top - 1.3*lambda| = {mean_err:.2e}, stddev {res.stddev.max():.2e} (tol 1e-2), "
                  f"stddev 1e6 < 1e4: {shrinks}, runtime {elapsed:.1f}s (<= 120s)")


def test_3_linearity_in_weights(cat_action):
    m1 = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    cfg = EstimatorConfig(n_steps=10**5)
    means = np.array([random_exponents(cat_action, RandomModel((a, 1 - a)), X0, cfg, 10).mean
                      for a in m1])
    design = np.stack([m1, np.ones_like(m1)], axis=1)
    coef, *_ = np.linalg.lstsq(design, means, rcond=None)
    residual = float(np.max(np.abs(design @ coef - means)))
    record(3, residual <= 1e-2, f"max affine-fit residual {residual:.2e} (tol 1e-2)")


def test_4_directional_formula(cat_action, cat_exact):
    thetas = 2 * np.pi * (np.arange(32) + 0.5) / 32
    vs = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    vs /= np.linalg.norm(vs, axis=1, keepdims=True)
    quadrants = {(bool(v[0] > 0), bool(v[1] > 0)) for v in vs}
    cfg = EstimatorConfig(n_steps=10**5)
    worst = 0.0
    for v in vs:
        est = directional_exponents(cat_action, v, X0, cfg)
        worst = max(worst, float(np.max(np.abs(est - formula_rates(cat_exact, v)))))
        reduced, w = octant_reduce(cat_action, v)
        est_r = directional_exponents(reduced, w, X0, cfg)
        worst = max(worst, float(np.max(np.abs(est_r - formula_rates(reduce_spectrum(cat_exact, v), w)))))
    record(4, worst <= 5e-3 and len(quadrants) == 4,
           f"32 directions in {len(quadrants)} quadrants, max rate error {worst:.2e} (tol 5e-3), "
           "direct and octant-reduced")


def test_5_directional_entropy_curve(cat_action, cat_estimated):
    sweep = direction_sweep(cat_action, cat_estimated, 64, X0, EstimatorConfig(n_steps=10**5))
    worst = 0.0
    for row in sweep.rows:
        target = abs(math.cos(row.theta) + 2 * math.sin(row.theta)) * CAT_LOG
        worst = max(worst, abs(row.entropy_formula - target), abs(row.entropy_from_estimated_rates - target))
    kink = np.array([2.0, -1.0]) / math.sqrt(5)
    at_kink = directional_entropy(cat_estimated, kink).value
    est_kink = float(np.sum(np.maximum(0.0, directional_exponents(cat_action, kink, X0,
                                                                  EstimatorConfig(n_steps=10**5)))))
    ok = len(sweep.rows) == 64 and worst <= 1e-2 and max(at_kink, est_kink) <= 1e-2
    record(5, ok, f"64 nodes, max curve error {worst:.2e} (tol 1e-2); "
                  f"h at (2,-1)/sqrt5 = {at_kink:.2e} formula, {est_kink:.2e} estimated (<= 1e-2)")


def _rational_directions(max_den):
    out = []
    for a, b in itertools.product(range(-max_den, max_den + 1), repeat=2):
        if (a, b) != (0, 0) and math.gcd(a, b) == 1:
            out.append((a, b))
    return out


def test_6_rational_identity(cat_action, cat_estimated):
    dirs = _rational_directions(12)
    cfg = EstimatorConfig(n_steps=2000, burn_in=100)
    worst_oracle = worst_est = 0.0
    for a, b in dirs:
        v = np.array([a, b], dtype=float) / math.hypot(a, b)
        chk = rational_check(cat_action, v, X0, cfg, spectrum=cat_estimated)
        assert tuple(chk.lattice_vector) == (a, b)
        worst_oracle = max(worst_oracle, abs(chk.lhs.value - chk.rhs_oracle.value))
        worst_est = max(worst_est, abs(chk.lhs.value - chk.rhs.value))
    v11 = rational_check(cat_action, np.array([1.0, 1.0]) / math.sqrt(2), X0, cfg, spectrum=cat_estimated)
    ok = worst_oracle <= 1e-2 and worst_est <= 1e-2 and abs(v11.rhs_oracle.value - RATIONAL_11) <= 1e-12
    record(6, ok, f"{len(dirs)} primitive directions, max |lhs - rhs_oracle| = {worst_oracle:.2e}, "
                  f"max |lhs - rhs_estimated| = {worst_est:.2e} (tol 1e-2)")


def _brute_force_point(n, v):
    # exhaustive search of the 5^k cube around round(n v), explicit tie cascade
    centre = [round(n * c) for c in v]
    best = None
    for off in itertools.product(range(-2, 3), repeat=len(v)):
        m = tuple(c + o for c, o in zip(centre, off))
        key = (sum((mi - n * vi) ** 2 for mi, vi in zip(m, v)), sum(mi * mi for mi in m), m)
        if best is None or key < best:
            best = key
    return best[2]


def test_7_lattice_path_oracle():
    rng = np.random.default_rng(20240607)
    N = 1000
    mismatches = 0
    worst_ratio = 0.0
    for r in range(100):
        k = 2 if r % 2 == 0 else 3
        v = rng.normal(size=k)
        v /= np.linalg.norm(v)
        path = lattice_path(v, N)
        vl = [float(c) for c in v]
        for n in range(N + 1):
            if tuple(int(c) for c in path.targets[n]) != _brute_force_point(n, vl):
                mismatches += 1
        m = path.targets[1:].astype(float)
        ns = np.arange(1, N + 1)
        dev_l2 = np.linalg.norm(m / np.linalg.norm(m, axis=1, keepdims=True) - v, axis=1)
        dev_l1 = np.linalg.norm(m / np.abs(m).sum(axis=1, keepdims=True) - v / np.abs(v).sum(), axis=1)
        worst_ratio = max(worst_ratio, float(np.max(np.maximum(dev_l2, dev_l1) * ns)))
    record(7, mismatches == 0 and worst_ratio <= 2.0,
           f"100 directions x n <= 1000: {mismatches} mismatches vs cube search; "
           f"max n*|m_n/|m_n| - v| = {worst_ratio:.3f} (<= 2)")


def test_8_conjugacy_invariance(cat_action, cat_exact):
    t0 = time.perf_counter()
    conj = conjugate_action(cat_action, (0.3, 0.3))
    spec = generator_spectrum(conj, X0, EstimatorConfig(n_steps=10**5))
    elapsed = time.perf_counter() - t0
    same_shape = list(spec.multiplicities) == list(cat_exact.multiplicities)
    err = float(np.max(np.abs(spec.rates - cat_exact.rates))) if same_shape else math.inf
    pts = sample_grid(2)
    f, g = conj.generators
    comm = float(torus_distance(wrap(f.forward(wrap(g.forward(pts)))),
                                wrap(g.forward(wrap(f.forward(pts))))).max())
    ok = err <= 5e-3 and comm <= 1e-9 and elapsed <= 60
    record(8, ok, f"max rate error {err:.2e} (tol 5e-3), commutator {comm:.1e} (tol 1e-9), "
                  f"runtime {elapsed:.1f}s (<= 60s)")


def _subset_max(spec, weights):
    combined = spec.combined_rates(weights)
    best = 0.0
    s = len(spec.blocks)
    for r in range(1, s + 1):
        for subset in itertools.combinations(range(s), r):
            best = max(best, float(sum(spec.blocks[j].multiplicity * combined[j] for j in subset)))
    return best


def test_9_identities():
    rng = np.random.default_rng(7)
    exact_subset = True
    for _ in range(1000):
        # dyadic rates and weights keep every sum exact in binary floating point
        s, k = int(rng.integers(1, 6)), int(rng.integers(1, 4))
        mult = rng.integers(1, 4, size=s)
        rates = rng.integers(-256, 257, size=(s, k)) / 64.0
        cuts = np.sort(rng.integers(0, 9, size=k - 1))
        w = np.diff(np.concatenate([[0], cuts, [8]])) / 8.0
        spec = LyapunovSpectrum(tuple(Block(int(d), tuple(r)) for d, r in zip(mult, rates)), int(mult.sum()))
        if random_entropy_pesin(spec, RandomModel(tuple(w))).value != _subset_max(spec, w):
            exact_subset = False

    worst_volume = 0.0
    for name, mats in MODELS.items():
        action = from_matrices(mats)
        x0 = np.linspace(0.1, 0.7, action.dim)
        spec = generator_spectrum(action, x0, EstimatorConfig(n_steps=10**5))
        worst_volume = max(worst_volume, float(np.max(np.abs(spec.volume_defect()))))

    exact = analytic_spectrum(CAT_PAIR)
    homogeneous = True
    for v in (np.array([1.0, 1.0]) / math.sqrt(2), np.array([0.6, -0.8]), np.array([-3.0, 0.5])):
        h1 = extend_to_rk(exact, v).value
        for c in (0.5, 1.0, 2.0):
            homogeneous &= extend_to_rk(exact, c * v).value == c * h1
    zero = extend_to_rk(exact, np.zeros(2)).value == 0.0
    ok = exact_subset and worst_volume <= 1e-3 and homogeneous and zero
    record(9, ok, f"subset-max exact: {exact_subset}; max volume defect {worst_volume:.1e} (tol 1e-3) "
                  f"over {len(MODELS)} models; homogeneity exact: {homogeneous}; h(0) = 0: {zero}")


CONFIG = """\
[action]
matrices = [[[2, 1], [1, 1]], [[5, 3], [3, 2]]]

[run]
n_steps = 20000
burn_in = 500
seed = 11

[random]
weights = [0.6, 0.4]
n_omegas = 4
sample_points = 4

[direction]
v = [1, 1]

[sweep]
resolution = 16
"""


def test_10_determinism(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(CONFIG)
    identical = []
    for command in ("spectrum", "random", "direction", "sweep", "check"):
        outputs = []
        for rep in range(2):
            out = tmp_path / f"{command}{rep}.out"
            proc = subprocess.run([sys.executable, "-m", "zkdyn", command, "--config", str(cfg),
                                   "--out", str(out), "--quiet"], capture_output=True)
            assert proc.returncode == 0, proc.stderr.decode()
            outputs.append(out.read_bytes())
        identical.append(outputs[0] == outputs[1])
    record(10, all(identical), f"5 commands, byte-identical reruns: {sum(identical)}/5")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
