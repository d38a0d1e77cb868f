"""Command-line entry point.

Subcommands: ``simulate``, ``success-prob``, ``perm-bench``, ``distribution``,
``diagnose-gaussian``, ``check-resolution``.  Every subcommand accepts a
config file (TOML or JSON) plus flag overrides; flags win.  All randomness is
derived from the master seed via documented (tag, index) streams, outputs
embed the config hash and seed, and re-running a command with the same inputs
reproduces its artifacts byte for byte.

Exit codes: 0 success, 1 strict-mode resolution violation, 2 invalid
configuration or domain error, 3 cost-guard refusal, 4 numeric assertion
failure.  Failures print a one-line JSON error to stderr.
"""
from __future__ import annotations

import csv
import functools
import importlib.metadata
import json
import math
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

import click
import numpy as np

from . import __version__
from .config import SCHEMA_VERSION, ExperimentConfig, load_config
from .correlations import (
    DetectionOutcome,
    InputConfiguration,
    check_frequency_resolution,
    check_time_resolution,
    outcome_probability,
)
from .errors import (
    ConfigError,
    CostGuardError,
    DomainError,
    NumericGuardError,
    ResolutionError,
)
from .interferometer import haar_random, load_unitary
from .permanent import NAIVE_MAX_N, perm_fast, perm_naive
from .sampler import (
    ConditionalOutcomeSampler,
    brute_force_distribution,
    draw_sample,
    expected_sample_distribution,
    gaussian_entry_diagnostics,
    total_variation_distance,
)
from .scattershot import (
    ExperimentPlan,
    binomial_tail_probability,
    regularized_incomplete_beta,
    success_probability_mc,
    total_photon_statistics,
)
from .sources import max_inner_modes
from .streams import GENERATOR_NAME, make_rng

_EXIT_CODES = {
    ResolutionError: 1,
    ConfigError: 2,
    DomainError: 2,
    CostGuardError: 3,
    NumericGuardError: 4,
}


def _exit_code_for(exc: Exception) -> int:
    for klass in type(exc).__mro__:
        if klass in _EXIT_CODES:
            return _EXIT_CODES[klass]
    return 1


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, DomainError, CostGuardError, NumericGuardError) as exc:
            code = _exit_code_for(exc)
            payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
            click.echo(json.dumps(payload), err=True)
            sys.exit(code)
    return wrapper


def _resolve_output(path: str | None, default_name: str) -> Path:
    base = os.environ.get("SMBCS_OUT_DIR", ".")
    if path is None:
        return Path(base) / default_name
    p = Path(path)
    if not p.is_absolute() and base != ".":
        return Path(base) / p
    return p


def _config_options(fn):
    options = [
        click.option("--config", "-c", "config_path", type=click.Path(), default=None,
                     help="TOML or JSON config file; flags override its values."),
        click.option("--photons", "-N", "n_photons", type=int, default=None),
        click.option("--ports", "-M", "n_ports", type=int, default=None),
        click.option("--multiplier", "-a", "source_multiplier", type=float, default=None,
                     help="Sources per target photon (bank size is ceil(a*N))."),
        click.option("--gamma", type=float, default=None, help="SPDC squeezing in [0, 1)."),
        click.option("--inner-modes", "-k", "inner_modes", type=int, default=None),
        click.option("--flavor", type=click.Choice(["rfm", "rtm"]), default=None),
        click.option("--feed-forward/--no-feed-forward", "feed_forward", default=None),
        click.option("--strict-single-pair/--no-strict-single-pair", "strict_single_pair",
                     default=None),
        click.option("--herald-policy", type=click.Choice(["lowest_index", "uniform"]),
                     default=None),
        click.option("--epsilon", type=float, default=None,
                     help="Operational threshold for the 'much smaller than' conditions."),
        click.option("--bandwidth", type=float, default=None),
        click.option("--bins", type=int, default=None,
                     help="Detection bins across the envelope support."),
        click.option("--base-frequency", type=float, default=None),
        click.option("--base-time", type=float, default=None),
        click.option("--pulse-rate", type=float, default=None),
        click.option("--resolution-policy", type=click.Choice(["strict", "warn", "ignore"]),
                     default=None),
        click.option("--trials", type=int, default=None),
        click.option("--seed", type=int, default=None),
        click.option("--output", "-o", type=click.Path(), default=None),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _build_config(config_path, **overrides) -> ExperimentConfig:
    return load_config(config_path, overrides)


def _interferometer(cfg: ExperimentConfig, unitary_file: str | None):
    if unitary_file is not None:
        interf = load_unitary(unitary_file)
        if interf.dimension != cfg.n_ports:
            raise ConfigError(f"unitary file has M={interf.dimension} but config asks "
                              f"for {cfg.n_ports} ports")
        return interf
    return haar_random(cfg.n_ports, make_rng(cfg.seed, "unitary"))


def _meta_columns(cfg: ExperimentConfig) -> dict:
    return {"schema_version": SCHEMA_VERSION, "config_hash": cfg.config_hash(),
            "seed": cfg.seed}


def _write_csv(path: Path, fieldnames: list[str], rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _write_manifest(cfg: ExperimentConfig, path: Path, outputs: list[str],
                    subcommand: str) -> None:
    manifest = {
        "subcommand": subcommand,
        "config": cfg.canonical_dict(),
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "generator": GENERATOR_NAME,
        "versions": {"smbcs": __version__, "numpy": np.__version__},
        "outputs": outputs,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


@click.group()
@click.version_option(version=__version__, prog_name="smbcs")
def main():
    """Scattershot multiboson correlation sampling simulator."""


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

@main.command()
@_config_options
@click.option("--samples", type=int, default=None,
              help="Number of sampling attempts (defaults to config trials).")
@click.option("--unitary-file", type=click.Path(exists=True), default=None,
              help="Load a fixed interferometer instead of drawing one.")
@click.option("--manifest", "manifest_path", type=click.Path(), default=None)
@click.option("--tvd-csv", type=click.Path(), default=None,
              help="Also write total-variation-distance checkpoints against the "
                   "brute-force distribution (feed-forward plans only).")
@click.option("--tvd-every", type=int, default=10_000)
@click.option("--outcomes-file", type=click.Path(exists=True), default=None,
              help="Evaluate probabilities of caller-specified outcomes (JSON lines "
                   "with input_ports, inner_mode_indices, ports, values) instead of "
                   "sampling; honest mode for instances beyond the sampling guards.")
@_handle_errors
def simulate(config_path, samples, unitary_file, manifest_path, tvd_csv, tvd_every,
             outcomes_file, **overrides):
    """Draw complete sample records and write them as JSON lines."""
    cfg = _build_config(config_path, **overrides)
    interf = _interferometer(cfg, unitary_file)
    out_path = _resolve_output(cfg.output, "samples.jsonl")
    meta = _meta_columns(cfg)
    grid = cfg.grid()
    bin_width = cfg.bin_width()
    if outcomes_file is not None:
        rows = _evaluate_outcomes(cfg, interf, grid, bin_width, Path(outcomes_file))
        out_path.parent.mkdir(parents=True, exist_ok=True)
        with open(out_path, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row) + "\n")
        click.echo(f"wrote {len(rows)} outcome probabilities to {out_path}")
        return
    plan = cfg.plan()
    n_samples = cfg.trials if samples is None else samples
    sampler = ConditionalOutcomeSampler(interf, grid, bin_width)
    oracle = None
    checkpoints = []
    empirical: dict = {}
    n_success = 0
    if tvd_csv is not None:
        oracle = expected_sample_distribution(plan, interf, grid, bin_width, sampler=sampler)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        for index in range(n_samples):
            rng = make_rng(cfg.seed, "simulate", index)
            record = draw_sample(plan, interf, rng, grid, bin_width, sampler=sampler)
            line = {
                "schema_version": SCHEMA_VERSION,
                "sample_index": index,
                "seed": cfg.seed,
                "config_hash": meta["config_hash"],
                "failed": record.failed,
                "failure_reason": record.failure_reason,
                "n_tot": record.n_tot,
                "input_ports": list(record.input_ports),
                "inner_mode_indices": list(record.inner_mode_indices),
                "inner_modes": [m.to_json_dict() for m in record.inner_modes],
                "mode": None if record.outcome is None else record.outcome.mode.value,
                "ports": None if record.outcome is None else list(record.outcome.ports),
                "bins": None if record.outcome is None else list(record.outcome.values),
                "bin_width": bin_width,
                "probability": record.probability,
                "perm_modulus": (None if record.probability is None else
                                 math.sqrt(record.probability)),
            }
            fh.write(json.dumps(line) + "\n")
            if record.outcome is not None:
                n_success += 1
                key = record.outcome.key()
                empirical[key] = empirical.get(key, 0) + 1
            if oracle is not None and n_success and (index + 1) % tvd_every == 0:
                emp = {k: v / n_success for k, v in empirical.items()}
                checkpoints.append({**meta, "samples": index + 1, "successes": n_success,
                                    "tvd": total_variation_distance(emp, oracle.output_marginal)})
    outputs = [str(out_path)]
    if oracle is not None:
        tvd_path = _resolve_output(tvd_csv, "tvd.csv")
        _write_csv(tvd_path, ["schema_version", "config_hash", "seed", "samples",
                              "successes", "tvd"], checkpoints)
        outputs.append(str(tvd_path))
    manifest_file = _resolve_output(manifest_path or cfg.manifest, "manifest.json")
    _write_manifest(cfg, manifest_file, outputs, "simulate")
    click.echo(f"wrote {n_samples} records ({n_success} successful) to {out_path}")


def _evaluate_outcomes(cfg, interf, grid, bin_width, outcomes_path: Path) -> list[dict]:
    rows = []
    meta = _meta_columns(cfg)
    mode = cfg.detection_mode()
    for line_no, line in enumerate(outcomes_path.read_text(encoding="utf-8").splitlines()):
        line = line.strip()
        if not line:
            continue
        spec = json.loads(line)
        try:
            input_ports = tuple(int(p) for p in spec["input_ports"])
            indices = tuple(int(j) for j in spec["inner_mode_indices"])
            ports = tuple(int(p) for p in spec["ports"])
            values = tuple(float(v) for v in spec["values"])
        except KeyError as exc:
            raise ConfigError(f"outcome line {line_no}: missing field {exc}") from exc
        inputs = InputConfiguration(input_ports, tuple(grid.mode_for(j) for j in indices))
        outcome = DetectionOutcome(mode, ports, values, bin_width)
        prob = outcome_probability(interf, inputs, outcome, epsilon=cfg.epsilon,
                                   resolution_policy=cfg.resolution_policy)
        rows.append({**meta, "line": line_no, "input_ports": list(input_ports),
                     "inner_mode_indices": list(indices), "ports": list(ports),
                     "values": list(values), "probability": prob,
                     "perm_modulus": math.sqrt(prob)})
    return rows


# ---------------------------------------------------------------------------
# success-prob
# ---------------------------------------------------------------------------

@main.command("success-prob")
@_config_options
@click.option("--curve", type=click.Choice(["feed-forward", "no-feed-forward", "both"]),
              default="both")
@click.option("--mc-points", default=None,
              help="Comma-separated N values at which to add Monte Carlo estimates.")
@click.option("--p-fixed", type=float, default=None,
              help="Override the per-source delivery probability with a fixed value.")
@_handle_errors
def success_prob(config_path, curve, mc_points, p_fixed, **overrides):
    """Success-probability curves over N, analytic plus optional Monte Carlo."""
    cfg = _build_config(config_path, p_fixed=p_fixed, **overrides)
    if mc_points is not None:
        cfg.mc_points = tuple(int(x) for x in mc_points.split(",") if x.strip())
    modes = {"feed-forward": [True], "no-feed-forward": [False], "both": [True, False]}[curve]
    meta = _meta_columns(cfg)
    rows = []
    for feed_forward in modes:
        source = cfg.source(feed_forward=feed_forward)
        mode_name = "feed_forward" if feed_forward else "no_feed_forward"
        for n in range(cfg.n_min, cfg.n_max + 1, cfg.n_step):
            plan = ExperimentPlan(n, cfg.source_multiplier, source)
            p_analytic = _success_analytic(plan, cfg.p_fixed)
            mean, std = total_photon_statistics(plan)
            row = {
                "N": n, "a": cfg.source_multiplier, "gamma": cfg.gamma,
                "k": cfg.inner_modes, "mode": mode_name,
                "P_analytic": p_analytic, "P_mc": "", "mc_stderr": "", "trials": "",
                "seed": cfg.seed, "n_tot_mean": mean, "n_tot_std": std,
                "schema_version": meta["schema_version"], "config_hash": meta["config_hash"],
            }
            if n in cfg.mc_points and cfg.p_fixed is None:
                rng = make_rng(cfg.seed, "success-prob", n)
                estimate, stderr = success_probability_mc(plan, cfg.trials, rng)
                row.update({"P_mc": estimate, "mc_stderr": stderr, "trials": cfg.trials})
            rows.append(row)
    out_path = _resolve_output(cfg.output, "success_prob.csv")
    _write_csv(out_path, ["N", "a", "gamma", "k", "mode", "P_analytic", "P_mc",
                          "mc_stderr", "trials", "seed", "n_tot_mean", "n_tot_std",
                          "schema_version", "config_hash"], rows)
    click.echo(f"wrote {len(rows)} rows to {out_path}")


def _success_analytic(plan: ExperimentPlan, p_fixed: float | None) -> float:
    from .scattershot import success_probability_analytic

    if p_fixed is None:
        return success_probability_analytic(plan)
    n_src, n = plan.n_sources, plan.n_photons
    if n_src < n:
        return 0.0
    tail = binomial_tail_probability(n_src, n, p_fixed)
    if 0.0 < p_fixed < 1.0:
        beta = regularized_incomplete_beta(p_fixed, n, n_src - n + 1)
        if abs(tail - beta) > 1e-10:
            raise NumericGuardError("binomial tail and incomplete beta disagree")
        return beta
    return tail


# ---------------------------------------------------------------------------
# perm-bench
# ---------------------------------------------------------------------------

@main.command("perm-bench")
@_config_options
@click.option("--sizes", default="2,4,6,8,10,12,14,16",
              help="Comma-separated matrix orders to benchmark.")
@click.option("--repeats", type=int, default=3, help="Timing repeats; best is reported.")
@_handle_errors
def perm_bench(config_path, sizes, repeats, **overrides):
    """Benchmark the permanent kernels on random Gaussian matrices."""
    cfg = _build_config(config_path, **overrides)
    meta = _meta_columns(cfg)
    rng = make_rng(cfg.seed, "perm-bench")
    rows = []
    for n in (int(s) for s in sizes.split(",") if s.strip()):
        matrix = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
        kernels = [("fast", perm_fast)]
        if n <= NAIVE_MAX_N:
            kernels.append(("naive", perm_naive))
        for name, kernel in kernels:
            best = None
            value = 0j
            for _ in range(max(repeats, 1)):
                start = time.perf_counter_ns()
                value = kernel(matrix)
                elapsed = time.perf_counter_ns() - start
                best = elapsed if best is None else min(best, elapsed)
            rows.append({**meta, "n": n, "kernel": name, "wall_time_ns": best,
                         "perm_modulus": abs(value)})
    out_path = _resolve_output(cfg.output, "perm_bench.csv")
    _write_csv(out_path, ["schema_version", "config_hash", "seed", "n", "kernel",
                          "wall_time_ns", "perm_modulus"], rows)
    click.echo(f"wrote {len(rows)} rows to {out_path}")


# ---------------------------------------------------------------------------
# distribution
# ---------------------------------------------------------------------------

@main.command()
@_config_options
@click.option("--unitary-file", type=click.Path(exists=True), default=None)
@click.option("--inner-mode-indices", default=None,
              help="Comma-separated inner-mode index per photon (default s mod k).")
@_handle_errors
def distribution(config_path, unitary_file, inner_mode_indices, **overrides):
    """Brute-force outcome table for the configured input, as CSV."""
    cfg = _build_config(config_path, **overrides)
    interf = _interferometer(cfg, unitary_file)
    grid = cfg.grid()
    if inner_mode_indices is None:
        indices = tuple(s % cfg.inner_modes for s in range(cfg.n_photons))
    else:
        indices = tuple(int(x) for x in inner_mode_indices.split(","))
        if len(indices) != cfg.n_photons:
            raise ConfigError(f"need {cfg.n_photons} inner-mode indices, got {len(indices)}")
    ports = tuple(range(cfg.n_photons))
    inputs = InputConfiguration(ports, tuple(grid.mode_for(j) for j in indices))
    dist = brute_force_distribution(interf, inputs, cfg.detection_mode(), cfg.bin_width())
    meta = _meta_columns(cfg)
    rows = []
    for outcome, prob in dist.outcomes:
        rows.append({**meta,
                     "mode": outcome.mode.value,
                     "ports": "|".join(str(p) for p in outcome.ports),
                     "bins": "|".join(repr(v) for v in outcome.values),
                     "probability": prob,
                     "perm_modulus": math.sqrt(prob * _multiset_factorials(outcome)) if prob >= 0 else ""})
    out_path = _resolve_output(cfg.output, "distribution.csv")
    _write_csv(out_path, ["schema_version", "config_hash", "seed", "mode", "ports",
                          "bins", "probability", "perm_modulus"], rows)
    click.echo(f"wrote {len(rows)} outcomes (total probability {dist.total!r}) to {out_path}")


def _multiset_factorials(outcome: DetectionOutcome) -> float:
    counts: dict = {}
    for pair in zip(outcome.ports, outcome.values):
        counts[pair] = counts.get(pair, 0) + 1
    product = 1.0
    for c in counts.values():
        product *= math.factorial(c)
    # Undo bin_width^N so the modulus refers to the bare permanent.
    return product / outcome.bin_width ** len(outcome.ports)


# ---------------------------------------------------------------------------
# diagnose-gaussian
# ---------------------------------------------------------------------------

@main.command("diagnose-gaussian")
@_config_options
@click.option("--no-phases", is_flag=True, default=False,
              help="Skip the random inner-mode phases (second moments must match).")
@_handle_errors
def diagnose_gaussian(config_path, no_phases, **overrides):
    """Moment diagnostics of scaled Haar submatrix entries."""
    cfg = _build_config(config_path, **overrides)
    rng = make_rng(cfg.seed, "diagnose-gaussian")
    report = gaussian_entry_diagnostics(cfg.n_ports, cfg.n_photons, cfg.inner_modes,
                                        cfg.trials, rng, random_phases=not no_phases)
    payload = {**_meta_columns(cfg), **asdict(report)}
    payload["notes"] = list(report.notes)
    out_path = _resolve_output(cfg.output, "gaussian_report.json")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    verdict = "plausible" if report.gaussian_plausible else "NOT plausible"
    click.echo(f"gaussian entry statistics {verdict}; report at {out_path}")


# ---------------------------------------------------------------------------
# check-resolution
# ---------------------------------------------------------------------------

@main.command("check-resolution")
@_config_options
@click.option("--strict", is_flag=True, default=False,
              help="Exit non-zero when the resolution condition is violated.")
@_handle_errors
def check_resolution(config_path, strict, **overrides):
    """Validate the detector bin width against the indistinguishability conditions."""
    cfg = _build_config(config_path, **overrides)
    grid = cfg.grid()
    indices = tuple(s % cfg.inner_modes for s in range(cfg.n_photons))
    inputs = InputConfiguration(tuple(range(cfg.n_photons)),
                                tuple(grid.mode_for(j) for j in indices))
    bin_width = cfg.bin_width()
    if cfg.flavor == "rfm":
        report = check_time_resolution(inputs, bin_width, cfg.epsilon)
        bound = max_inner_modes(delta_t=bin_width, delta_omega=cfg.bandwidth / cfg.bins,
                                epsilon=cfg.epsilon)
    else:
        report = check_frequency_resolution(inputs, bin_width, cfg.epsilon)
        rate = cfg.pulse_rate
        if rate is not None:
            bound = max_inner_modes(delta_omega=bin_width, pulse_rate=rate,
                                    epsilon=cfg.epsilon)
        else:
            bound = max_inner_modes(delta_t=(1.0 / cfg.bandwidth) / cfg.bins,
                                    delta_omega=bin_width, epsilon=cfg.epsilon)
    payload = {
        **_meta_columns(cfg),
        "flavor": cfg.flavor,
        "bin_width": bin_width,
        "max_ratio": report.max_ratio,
        "satisfied": report.satisfied,
        "worst_pair": list(report.worst_pair),
        "epsilon": report.epsilon,
        "max_inner_modes_bound": bound,
    }
    out_path = _resolve_output(cfg.output, "resolution_report.json")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    click.echo(json.dumps(payload, sort_keys=True))
    if strict and not report.satisfied:
        raise ResolutionError(f"resolution ratio {report.max_ratio:.4g} exceeds "
                              f"epsilon {report.epsilon:g}")


def _main_version() -> str:  # pragma: no cover
    try:
        return importlib.metadata.version("smbcs")
    except importlib.metadata.PackageNotFoundError:
        return __version__


if __name__ == "__main__":  # pragma: no cover
    main()
