"""Command-line orchestration: torus solves, stability runs, invariant suite.

Three subcommands share one YAML configuration file:

    torusns solve-torus --config run.yaml
    torusns simulate    --config run.yaml --torus out/torus_U.txt
    torusns verify      --config run.yaml [--seed N]

Every command writes its artifacts under the configured output directory
(overridable through the TORUSNS_OUTPUT_DIR environment variable) together
with a manifest listing each artifact and its SHA-256 digest. Exit status:
0 success, 2 convergence/stability failures, 3 configuration or I/O errors,
4 invariant-suite failures.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import snapshots
from . import stability as st
from . import torus as ts
from .config import RunConfig, load_config
from .errors import (
    BlowUp,
    ConfigParse,
    NoConvergence,
    ResonantMode,
    SnapshotMismatch,
    StepTooLarge,
    TorusnsError,
)
from .verify import run_invariant_suite

__all__ = ["main", "EXIT_OK", "EXIT_CONVERGENCE", "EXIT_CONFIG", "EXIT_INVARIANT"]

EXIT_OK = 0
EXIT_CONVERGENCE = 2
EXIT_CONFIG = 3
EXIT_INVARIANT = 4

OUTPUT_DIR_ENV = "TORUSNS_OUTPUT_DIR"


# --------------------------------------------------------------------------
# report rendering
# --------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, (list, tuple, np.ndarray)):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def render_report(title: str, sections) -> str:
    lines = [title, ""]
    for name, items in sections:
        lines.append(f"[{name}]")
        if isinstance(items, str):
            lines.extend(items.rstrip("\n").split("\n"))
        else:
            for key, value in items:
                lines.append(f"{key} = {_fmt(value)}")
        lines.append("")
    return "\n".join(lines)


def _config_echo(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.raw, sort_keys=True, default_flow_style=False)


def _resolve_output_dir(cfg: RunConfig) -> Path:
    out = os.environ.get(OUTPUT_DIR_ENV, cfg.output_dir)
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_manifest(outdir: Path, names) -> None:
    lines = []
    for name in sorted(names):
        digest = hashlib.sha256((outdir / name).read_bytes()).hexdigest()
        lines.append(f"{digest}  {name}")
    (outdir / "manifest.txt").write_text("\n".join(lines) + "\n")


def _frequency_section(cfg: RunConfig):
    gamma_est, ok = ts.certify_diophantine(cfg.omega, cfg.Lcheck)
    return gamma_est, ok, [
        ("omega", list(cfg.omega)),
        ("Lcheck", cfg.Lcheck),
        ("gamma_est", gamma_est),
        ("diophantine_ok", ok),
    ]


def _build_frequency(cfg: RunConfig) -> ts.FrequencySpec:
    gamma_est, ok = ts.certify_diophantine(cfg.omega, cfg.Lcheck)
    if ok and gamma_est >= ts.GAMMA_FLOOR:
        return ts.FrequencySpec.certify(cfg.omega, cfg.Lcheck)
    if cfg.forcing.zero_space_mean:
        # no averaged equation to solve, resonant frequencies are fine
        return ts.FrequencySpec.uncertified(cfg.omega)
    raise ResonantMode(
        f"omega={cfg.omega} is resonant up to Lcheck={cfg.Lcheck} and the "
        "forcing has a spatial-mean component"
    )


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_solve_torus(cfg: RunConfig) -> int:
    outdir = _resolve_output_dir(cfg)
    t0 = time.perf_counter()
    _, _, freq_items = _frequency_section(cfg)
    sections = [("config", _config_echo(cfg)), ("frequency", freq_items)]
    artifacts = ["report_solve.txt"]
    try:
        freq = _build_frequency(cfg)
        solution = ts.solve_torus(cfg.forcing, freq, cfg.solver)
    except (ResonantMode, NoConvergence) as exc:
        sections.append(
            ("error", [("kind", type(exc).__name__), ("message", str(exc))])
        )
        if isinstance(exc, NoConvergence):
            sections.append(
                (
                    "torus",
                    [
                        ("iterations", exc.iterations),
                        ("residual_history", exc.residual_history),
                    ],
                )
            )
        sections.append(("timings", [("solve_torus_s", time.perf_counter() - t0)]))
        (outdir / "report_solve.txt").write_text(
            render_report("torusns solve-torus report", sections)
        )
        write_manifest(outdir, artifacts)
        print(f"solve-torus failed: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    elapsed = time.perf_counter() - t0

    snapshots.write_field(outdir / "torus_U.txt", solution.U)
    snapshots.write_field(outdir / "torus_P.txt", solution.P)
    artifacts += ["torus_U.txt", "torus_P.txt"]

    torus_items = [
        ("iterations", solution.iterations),
        ("pde_residual", solution.pde_residual),
        ("norm_U", solution.norms[0]),
        ("norm_P", solution.norms[1]),
        ("norm_U_over_eps", solution.cstar),
        ("sigma", solution.idx.sigma),
        ("s", solution.idx.s),
        ("residual_history", solution.residual_history),
        ("max_div_defect", solution.max_div_defect),
    ]
    if solution.contraction is not None:
        torus_items.append(("contraction_factor", solution.contraction))
    sections.append(("torus", torus_items))
    sections.append(("timings", [("solve_torus_s", elapsed)]))
    (outdir / "report_solve.txt").write_text(
        render_report("torusns solve-torus report", sections)
    )
    write_manifest(outdir, artifacts)
    print(
        f"solve-torus: {solution.iterations} iterations, "
        f"pde residual {solution.pde_residual:.3e}, artifacts in {outdir}"
    )
    return EXIT_OK


def _simulate_sections(cfg: RunConfig, series: st.DecaySeries, blown: bool):
    return [
        ("alpha_fit", series.alpha_fit),
        ("fit_r2", series.fit_r2),
        ("fit_ok", series.fit_ok),
        ("weighted_sup", series.weighted_sup),
        ("orbital_constant", float(series.hs_norms.max()) / cfg.sim.delta),
        ("q_alpha_fit", series.q_alpha_fit),
        ("q_fit_r2", series.q_fit_r2),
        ("max_div_defect", series.max_div_defect),
        ("max_mean_defect", series.max_mean_defect),
        ("blowup", blown),
        ("samples", len(series.times)),
    ]


def cmd_simulate(cfg: RunConfig, torus_path: str) -> int:
    outdir = _resolve_output_dir(cfg)
    t0 = time.perf_counter()
    expected = cfg.grid.with_ncomp(cfg.grid.d)
    U = snapshots.read_field(torus_path, expect_grid=expected)
    torus = ts.TorusSolution.from_velocity(U, cfg.solver.idx)
    freq = _build_frequency(cfg)
    rng = np.random.default_rng(cfg.seed)
    v0 = st.random_perturbation(cfg.grid, cfg.sim.delta, cfg.sim.s, rng)
    sections = [("config", _config_echo(cfg))]
    artifacts = ["report_simulate.txt", "trajectory.tsv"]
    try:
        series = st.evolve(v0, torus, freq, cfg.sim)
        blown = False
    except BlowUp as exc:
        series = exc.series
        blown = True
    elapsed = time.perf_counter() - t0
    snapshots.write_trajectory(outdir / "trajectory.tsv", series)
    if series.final_state is not None:
        snapshots.write_field(outdir / "v_final.txt", series.final_state.v)
        artifacts.append("v_final.txt")
    sections.append(("stability", _simulate_sections(cfg, series, blown)))
    sections.append(("timings", [("simulate_s", elapsed)]))
    (outdir / "report_simulate.txt").write_text(
        render_report("torusns simulate report", sections)
    )
    write_manifest(outdir, artifacts)
    if blown:
        print("simulate: trajectory left the orbital ball (BlowUp)", file=sys.stderr)
        return EXIT_CONVERGENCE
    print(
        f"simulate: alpha_fit={series.alpha_fit:.4f}, "
        f"weighted_sup={series.weighted_sup:.3e}, artifacts in {outdir}"
    )
    return EXIT_OK


def cmd_verify(cfg: RunConfig, seed: int | None = None) -> int:
    outdir = _resolve_output_dir(cfg)
    t0 = time.perf_counter()
    use_seed = cfg.seed if seed is None else seed
    results = run_invariant_suite(seed=use_seed)
    elapsed = time.perf_counter() - t0
    rows = ["name count max_violation tol status"]
    for r in results:
        status = "pass" if r.passed else "FAIL"
        rows.append(
            f"{r.name} {r.count} {_fmt(r.max_violation)} {_fmt(r.tol)} {status}"
        )
    all_pass = all(r.passed for r in results)
    sections = [
        ("config", _config_echo(cfg)),
        ("invariants", "\n".join(rows)),
        (
            "summary",
            [
                ("seed", use_seed),
                ("checks", len(results)),
                ("failures", sum(not r.passed for r in results)),
                ("all_pass", all_pass),
            ],
        ),
        ("timings", [("verify_s", elapsed)]),
    ]
    (outdir / "report_verify.txt").write_text(
        render_report("torusns verify report", sections)
    )
    write_manifest(outdir, ["report_verify.txt"])
    for r in results:
        mark = "pass" if r.passed else "FAIL"
        print(f"{mark}  {r.name}  worst={r.max_violation:.3e}  tol={r.tol:g}")
    return EXIT_OK if all_pass else EXIT_INVARIANT


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torusns",
        description=(
            "Spectral construction of quasi-periodic Navier-Stokes tori and "
            "numerical verification of their stability."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_solve = sub.add_parser("solve-torus", help="construct the invariant torus")
    p_solve.add_argument("--config", required=True, help="YAML run configuration")
    p_sim = sub.add_parser("simulate", help="evolve a perturbation of a torus")
    p_sim.add_argument("--config", required=True, help="YAML run configuration")
    p_sim.add_argument("--torus", required=True, help="velocity torus snapshot")
    p_verify = sub.add_parser("verify", help="run the invariant suite")
    p_verify.add_argument("--config", required=True, help="YAML run configuration")
    p_verify.add_argument("--seed", type=int, default=None, help="override seed")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigParse as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "solve-torus":
            return cmd_solve_torus(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.torus)
        if args.command == "verify":
            return cmd_verify(cfg, args.seed)
    except (SnapshotMismatch, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ResonantMode, NoConvergence, StepTooLarge) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except TorusnsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    raise SystemExit(main())
