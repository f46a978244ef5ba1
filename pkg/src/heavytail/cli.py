"""Configuration-driven experiment runner.

Every module is exposed as one subcommand of the ``heavytail`` script:

``tails``      tail-constant curve of the scattering observable
``coupling``   regeneration statistics of the coupled chain
``spectral``   discretized operator: gap, corrector, truncated centerings
``converge``   stable-limit diagnostics for a configured ensemble
``kinetic``    Monte Carlo kinetic solution tables
``fracdiff``   fractional heat profile

Each run reads one flat key=value config file, writes its outputs plus
a ``manifest.json`` (config echo, package versions, wall time) into the
output directory, and exits 0 on success, 2 on a validation problem,
or 3 when a convergence gate fails.  Outputs are deterministic in the
config contents; the worker count never changes file bytes.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from typing import Dict, List

import numpy as np

from . import __version__
from . import boltzmann as bz
from . import coupling as cpl
from . import diagnostics as diag
from . import fracdiff as fd
from . import spectral as sp
from .chain_core import WeightSpec, iid_pareto, iid_reciprocal
from .config import EXPERIMENTS, ExperimentConfig, load_config, schema_help
from .errors import ConfigError, DomainError, HeavytailError, NumericError

__all__ = ["main", "run_experiment"]


def _write_json(path: str, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _run_tails(cfg: ExperimentConfig, out_dir: str) -> List[str]:
    p = cfg.params
    if p["lambda_max"] <= p["lambda_min"]:
        raise ConfigError("lambda_max must exceed lambda_min")
    grid = np.geomspace(p["lambda_min"], p["lambda_max"], p["lambda_count"])
    values = bz.tail_constant(list(grid))
    path = os.path.join(out_dir, "tails.csv")
    with open(path, "w", newline="") as fh:
        fh.write("lambda,tail_constant\n")
        for lam, val in zip(grid, values):
            fh.write(f"{lam:.17g},{val:.17g}\n")
    return ["tails.csv"]


def _run_coupling(cfg: ExperimentConfig, out_dir: str) -> List[str]:
    p = cfg.params
    spec = cpl.boltzmann_spec()
    model = bz.chain_model()
    theta, theta_se = cpl.theta_bar_estimate(spec, model, p["steps"], cfg.seed)
    rows = cpl.block_tail_report(spec, model, p["blocks"],
                                 list(p["lambda_grid"]), cfg.seed)
    cpl.write_block_tail_csv(rows, os.path.join(out_dir, "block_tails.csv"))
    regen = cpl.regen_condition_report(
        spec, model, n_max=p["n_max"],
        x_probes=cpl.default_probes(spec, model),
        seed=cfg.seed,
        runs_per_probe=p["runs_per_probe"])
    payload = {
        "theta_bar": theta,
        "theta_se": theta_se,
        "trajectory_steps": p["steps"],
        "block_ensemble_size": p["blocks"],
        "regen_total": regen.total,
        "regen_geometric_beyond": regen.geometric_beyond,
        "regen_binding_probe": regen.binding_probe,
        "regen_note": regen.note,
    }
    _write_json(os.path.join(out_dir, "coupling.json"), payload)
    return ["block_tails.csv", "coupling.json"]


def _run_spectral(cfg: ExperimentConfig, out_dir: str) -> List[str]:
    p = cfg.params
    model = bz.chain_model()
    outputs: List[str] = []
    report = []
    for m_size in p["grid_sizes"]:
        op = sp.discretize(model, int(m_size))
        gap = sp.spectral_gap(op, tol=min(p["tol"], 1e-10))
        psi_h = np.asarray([model.psi(k) for k in op.grid])
        sol = sp.solve_poisson(op, psi_h, tol=p["tol"])
        entry = {
            "M": int(m_size),
            "gap": gap,
            "corrector_residual": sol.residual,
            "corrector_terms": sol.terms_used,
            "c_N": {},
        }
        for n_val in p["n_trunc"]:
            _t, c_n = sp.truncated_poisson(op, psi_h, float(n_val),
                                           tol=p["tol"])
            entry["c_N"][f"{float(n_val):g}"] = c_n
        report.append(entry)
        if p["save_operator"]:
            name = f"operator_{int(m_size)}.txt"
            with open(os.path.join(out_dir, name), "w") as fh:
                fh.write(sp.op_to_text(op))
            outputs.append(name)
    _write_json(os.path.join(out_dir, "spectral.json"), {"operators": report})
    return outputs + ["spectral.json"]


def _converge_model(p: Dict[str, object]):
    name = p["model"]
    if name == "pareto":
        return iid_pareto(p["alpha"], symmetric=p["symmetric"])
    if name == "reciprocal":
        return iid_reciprocal(symmetric=p["symmetric"])
    return bz.chain_model()


def _run_converge(cfg: ExperimentConfig, out_dir: str) -> List[str]:
    p = cfg.params
    model = _converge_model(p)
    weights = None
    if p["mode"] == diag.MODE_WEIGHTED:
        weights = WeightSpec(p["weights"])
    spec = diag.EnsembleSpec(model=model, mode=p["mode"],
                             N_schedule=tuple(int(n) for n in p["n_schedule"]),
                             replicas=p["replicas"],
                             centering=p["centering"], t=p["t"],
                             weights=weights)
    le, t_scale = diag.target_exponent(spec)
    table = diag.generate_ensemble(spec, cfg.seed, workers=cfg.workers)
    outputs: List[str] = []
    if p["write_samples"]:
        diag.write_ensemble_csv(table, os.path.join(out_dir, "ensemble.csv"))
        outputs.append("ensemble.csv")
    report = diag.convergence_report(spec, le, cfg.seed, t_scale=t_scale,
                                     bootstrap=p["bootstrap"], table=table)
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    outputs.append("report.json")
    if report.failed:
        raise NumericError("convergence gate FAILED: "
                           "cf distance grew beyond bootstrap noise")
    return outputs


def _run_kinetic(cfg: ExperimentConfig, out_dir: str) -> List[str]:
    p = cfg.params
    u0 = fd.bump_initial_data(radius=p["radius"])
    tables = fd.mc_kinetic_multi(u0, list(p["n_schedule"]), p["t"],
                                 list(p["x_probes"]), list(p["k_probes"]),
                                 p["paths"], cfg.seed)
    outputs: List[str] = []
    for n_val in sorted(tables):
        name = f"kinetic_{n_val:g}.csv"
        fd.write_kinetic_csv(tables[n_val], os.path.join(out_dir, name))
        outputs.append(name)
    if p["compare"]:
        d_eff = fd.effective_diffusivity()
        ubar = fd.frac_heat_solve(u0.x_profile, p["t"], d_eff)
        path = os.path.join(out_dir, "l2k.csv")
        with open(path, "w", newline="") as fh:
            fh.write("N,x,error,se\n")
            for n_val in sorted(tables):
                err, se = fd.l2k_error(tables[n_val], ubar)
                for x, e, s in zip(tables[n_val].x_probes, err, se):
                    fh.write(f"{n_val:.17g},{x:.17g},{e:.17g},{s:.17g}\n")
        outputs.append("l2k.csv")
    return outputs


def _run_fracdiff(cfg: ExperimentConfig, out_dir: str) -> List[str]:
    p = cfg.params
    d_eff = p["diffusivity"] if p["diffusivity"] > 0.0 else fd.effective_diffusivity()
    if p["profile"] == "gaussian":
        width = p["width"]

        def profile(x):
            return np.exp(-x * x / (2.0 * width * width))
    else:
        profile = fd.bump_initial_data(radius=p["radius"]).x_profile
    fld = fd.frac_heat_solve(profile, p["t"], d_eff, L=p["box"], n=p["grid"])
    fd.write_field_csv(fld, os.path.join(out_dir, "field.csv"))
    return ["field.csv"]


_RUNNERS = {
    "tails": _run_tails,
    "coupling": _run_coupling,
    "spectral": _run_spectral,
    "converge": _run_converge,
    "kinetic": _run_kinetic,
    "fracdiff": _run_fracdiff,
}


def run_experiment(cfg: ExperimentConfig) -> List[str]:
    """Execute one experiment, returning the written file names.

    The manifest is written on both success and convergence failure, so
    a failed gate still leaves an audit trail.
    """
    out_dir = os.environ.get("OUTPUT_DIR", cfg.output_dir)
    os.makedirs(out_dir, exist_ok=True)
    start = time.monotonic()
    status = "ok"
    try:
        outputs = _RUNNERS[cfg.experiment](cfg, out_dir)
    except NumericError:
        status = "failed-convergence"
        outputs = sorted(fn for fn in os.listdir(out_dir)
                         if fn != "manifest.json")
        _write_manifest(cfg, out_dir, outputs, start, status)
        raise
    _write_manifest(cfg, out_dir, outputs, start, status)
    return outputs + ["manifest.json"]


def _write_manifest(cfg: ExperimentConfig, out_dir: str,
                    outputs: List[str], start: float, status: str) -> None:
    import numpy
    import scipy
    versions = {
        "python": sys.version.split()[0],
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "heavytail": __version__,
    }
    try:
        import numba
        versions["numba"] = numba.__version__
    except ImportError:
        pass
    manifest = {
        "config": cfg.echo(),
        "outputs": sorted(outputs),
        "status": status,
        "versions": versions,
        "wall_time_s": round(time.monotonic() - start, 3),
    }
    _write_json(os.path.join(out_dir, "manifest.json"), manifest)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heavytail",
        description="Heavy-tailed additive-functional experiments")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment",
                           epilog="config keys: " + "; ".join(schema_help(name)))
        p.add_argument("--config", required=True, help="key=value config file")
        p.add_argument("--workers", type=int, default=None,
                       help="worker count override (outputs unaffected)")
        p.add_argument("--seed", type=int, default=None,
                       help="seed override for the config file")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.experiment,
                          seed_override=args.seed,
                          workers_override=args.workers)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        outputs = run_experiment(cfg)
    except NumericError as exc:
        print(f"FAILED: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HeavytailError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    for name in outputs:
        print(name)
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
