"""Batch front-end.

    zkdyn {spectrum,random,direction,sweep,check} --config run.toml [--out PATH] [--seed N] [--quiet]

Exit codes: 0 success, 2 configuration/validation error, 3 numerical failure,
4 rationality refusal (``check`` on a direction without a small-denominator
rationalization).  Results go to ``output.path`` (or ``--out``), stdout otherwise.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys

import numpy as np

from .config import RunConfig, load_config
from .directional import (
    direction_sweep,
    directional_entropy,
    directional_exponents,
    formula_rates,
    rational_check,
)
from .errors import NotRational, NotSimultaneouslyDiagonalizable, NumericalError, ValidationError
from .random_action import (
    EntropyEstimate,
    RandomModel,
    random_entropy_pesin,
    random_exponents,
    ruelle_holds,
    sample_initial_points,
)
from .spectrum import generator_spectrum
from .toral import analytic_spectrum, conjugate_action, from_matrices

log = logging.getLogger("zkdyn")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_NOT_RATIONAL = 0, 2, 3, 4

_num = {"type": "number"}
_nums = {"type": "array", "items": _num}
_blocks = {"type": "array", "items": {
    "type": "object", "required": ["d", "rates"], "additionalProperties": False,
    "properties": {"d": {"type": "integer", "minimum": 1}, "rates": _nums}}}
_entropy = {"type": "object", "required": ["value", "method", "stderr", "samples"],
            "additionalProperties": False,
            "properties": {"value": _num, "method": {"type": "string"},
                           "stderr": {"type": "number", "minimum": 0},
                           "samples": {"type": "integer", "minimum": 1}}}


def _obj(required: dict, optional: dict | None = None) -> dict:
    props = {**required, **(optional or {})}
    return {"type": "object", "required": sorted(required), "additionalProperties": False,
            "properties": props}


SCHEMAS = {
    "spectrum": _obj({
        "command": {"const": "spectrum"}, "dim": {"type": "integer"}, "rank": {"type": "integer"},
        "x0": _nums, "blocks": _blocks, "volume_defect": _nums,
        "analytic": {"oneOf": [{"type": "null"}, _obj({"blocks": _blocks})]},
        "abs_error": {"oneOf": [{"type": "null"}, {"type": "array", "items": _nums}]},
        "max_abs_error": {"oneOf": [{"type": "null"}, _num]},
    }),
    "random": _obj({
        "command": {"const": "random"}, "weights": _nums, "seeds": {"type": "array", "items": {"type": "integer"}},
        "per_omega": {"type": "array", "items": _nums}, "mean": _nums, "stddev": _nums,
        "formula_exponents": _nums, "pesin_entropy": _entropy, "measured_entropy": _entropy,
        "ruelle_check": {"type": "boolean"},
    }),
    "direction": _obj({
        "command": {"const": "direction"}, "v": _nums, "rates": _nums, "formula_rates": _nums,
        "max_rate_residual": _num, "entropy": _entropy, "entropy_from_rates": _num,
        "spectrum": _obj({"blocks": _blocks}),
    }),
    "sweep": _obj({
        "command": {"const": "sweep"}, "resolution": {"type": "integer"},
        "rows": {"type": "array", "items": _obj({
            "theta": {"oneOf": [{"type": "null"}, _num]}, "v": _nums, "entropy_formula": _num,
            "entropy_from_estimated_rates": _num, "max_block_residual": _num})},
        "modulus": _num, "max_discrepancy": _num,
    }),
    "check": _obj({
        "command": {"const": "check"}, "v": _nums, "lattice_vector": {"type": "array", "items": {"type": "integer"}},
        "t": _num, "lhs": _entropy, "rhs": _entropy,
        "rhs_oracle": {"oneOf": [{"type": "null"}, _entropy]},
        "tolerance": _num, "pass": {"type": "boolean"},
    }),
}


def sweep_header(rank: int) -> list[str]:
    return (["theta"] + [f"v{i + 1}" for i in range(rank)]
            + ["entropy_formula", "entropy_from_estimated_rates", "max_block_residual"])


def _floats(a) -> list[float]:
    return [float(x) for x in np.ravel(a)]


def build_action(cfg: RunConfig):
    action = from_matrices(cfg.matrices)
    if cfg.epsilon is not None:
        action = conjugate_action(action, cfg.epsilon)
    return action


def cmd_spectrum(cfg: RunConfig) -> dict:
    action = build_action(cfg)
    spec = generator_spectrum(action, cfg.x0, cfg.estimator)
    try:
        exact = analytic_spectrum(cfg.matrices)
    except NotSimultaneouslyDiagonalizable:
        exact = None
    abs_error = None
    if exact is not None and [b.multiplicity for b in exact.blocks] == [b.multiplicity for b in spec.blocks]:
        abs_error = np.abs(spec.rates - exact.rates).tolist()
    return {
        "command": "spectrum", "dim": action.dim, "rank": action.rank, "x0": _floats(cfg.x0),
        "blocks": spec.to_dict()["blocks"],
        "volume_defect": _floats(spec.volume_defect()),
        "analytic": exact.to_dict() if exact is not None else None,
        "abs_error": abs_error,
        "max_abs_error": float(np.max(abs_error)) if abs_error is not None else None,
    }


def cmd_random(cfg: RunConfig) -> dict:
    if cfg.weights is None:
        raise ValidationError("random.weights is required for the random command")
    model = RandomModel(cfg.weights)
    action = build_action(cfg)
    est = cfg.estimator
    result = random_exponents(action, model, cfg.x0, est, cfg.n_omegas)

    spectra = [generator_spectrum(action, x, est)
               for x in sample_initial_points(action.dim, cfg.sample_points, est.seed)]
    values = np.array([random_entropy_pesin(s, model).value for s in spectra])
    n = len(values)
    bound = EntropyEstimate(float(values.mean()), "pesin_formula",
                            float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0, n)
    positive = np.maximum(0.0, result.per_omega).sum(axis=1)
    m = len(positive)
    measured = EntropyEstimate(float(positive.mean()), "pesin_formula",
                               float(positive.std(ddof=1) / np.sqrt(m)) if m > 1 else 0.0, m)
    formula = np.sort(np.repeat(spectra[0].combined_rates(model.weights), spectra[0].multiplicities))[::-1]
    return {
        "command": "random", "weights": _floats(model.weights), "seeds": list(result.seeds),
        "per_omega": result.per_omega.tolist(), "mean": _floats(result.mean),
        "stddev": _floats(result.stddev), "formula_exponents": _floats(formula),
        "pesin_entropy": bound.to_dict(), "measured_entropy": measured.to_dict(),
        "ruelle_check": ruelle_holds(bound, measured),
    }


def _direction(cfg: RunConfig, name: str) -> np.ndarray:
    if cfg.direction is None:
        raise ValidationError(f"direction.v is required for the {name} command")
    return np.array(cfg.direction)


def cmd_direction(cfg: RunConfig) -> dict:
    v = _direction(cfg, "direction")
    action = build_action(cfg)
    spec = generator_spectrum(action, cfg.x0, cfg.estimator)
    rates = directional_exponents(action, v, cfg.x0, cfg.estimator)
    expected = formula_rates(spec, v)
    return {
        "command": "direction", "v": _floats(v), "rates": _floats(rates),
        "formula_rates": _floats(expected),
        "max_rate_residual": float(np.max(np.abs(rates - expected))),
        "entropy": directional_entropy(spec, v).to_dict(),
        "entropy_from_rates": float(np.sum(np.maximum(0.0, rates))),
        "spectrum": spec.to_dict(),
    }


def cmd_sweep(cfg: RunConfig) -> dict:
    action = build_action(cfg)
    spec = generator_spectrum(action, cfg.x0, cfg.estimator)
    directions = None if action.rank == 2 else ([cfg.direction] if cfg.direction else None)
    if directions is None and action.rank != 2:
        raise ValidationError("sweeps for rank != 2 need direction.v")
    res = direction_sweep(action, spec, cfg.resolution, cfg.x0, cfg.estimator, directions)
    log.info("sweep: modulus of continuity %.6g, max discrepancy %.6g", res.modulus, res.max_discrepancy)
    return {
        "command": "sweep", "resolution": cfg.resolution,
        "rows": [{"theta": None if np.isnan(r.theta) else r.theta, "v": list(r.v),
                  "entropy_formula": r.entropy_formula,
                  "entropy_from_estimated_rates": r.entropy_from_estimated_rates,
                  "max_block_residual": r.max_block_residual} for r in res.rows],
        "modulus": res.modulus, "max_discrepancy": res.max_discrepancy,
    }


def cmd_check(cfg: RunConfig) -> dict:
    v = _direction(cfg, "check")
    action = build_action(cfg)
    res = rational_check(action, v, cfg.x0, cfg.estimator)
    ok = abs(res.lhs.value - res.rhs.value) <= cfg.tolerance
    if res.rhs_oracle is not None:
        ok = ok and abs(res.lhs.value - res.rhs_oracle.value) <= cfg.tolerance
    return {
        "command": "check", "v": _floats(v), "lattice_vector": [int(x) for x in res.lattice_vector],
        "t": res.t, "lhs": res.lhs.to_dict(), "rhs": res.rhs.to_dict(),
        "rhs_oracle": res.rhs_oracle.to_dict() if res.rhs_oracle is not None else None,
        "tolerance": cfg.tolerance, "pass": bool(ok),
    }


COMMANDS = {"spectrum": cmd_spectrum, "random": cmd_random, "direction": cmd_direction,
            "sweep": cmd_sweep, "check": cmd_check}


def format_csv(report: dict, rank: int) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(sweep_header(rank))
    for row in report["rows"]:
        theta = float("nan") if row["theta"] is None else row["theta"]
        values = [theta, *row["v"], row["entropy_formula"],
                  row["entropy_from_estimated_rates"], row["max_block_residual"]]
        writer.writerow([format(float(x), ".12g") for x in values])
    return buf.getvalue()


def render(command: str, report: dict, cfg: RunConfig) -> str:
    fmt = cfg.output_format or ("csv" if command == "sweep" else "json")
    if fmt == "csv":
        if command != "sweep":
            raise ValidationError("csv output is only available for the sweep command")
        return format_csv(report, cfg.rank)
    return json.dumps(report, indent=2) + "\n"


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zkdyn", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--out", help="output path (overrides output.path)")
    parser.add_argument("--seed", type=int, help="seed (overrides run.seed)")
    parser.add_argument("--quiet", action="store_true", help="suppress progress messages")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr, force=True)
    try:
        cfg = load_config(args.config, seed_override=args.seed, out_override=args.out)
        log.info("running %s (n_steps=%d, seed=%d)", args.command, cfg.estimator.n_steps, cfg.estimator.seed)
        report = COMMANDS[args.command](cfg)
        _write(render(args.command, report, cfg), cfg.output_path)
    except NotRational as exc:
        print(f"NotRational: {exc}", file=sys.stderr)
        return EXIT_NOT_RATIONAL
    except (ValidationError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, ArithmeticError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except Exception as exc:  # anything unforeseen is reported as a numerical failure
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
