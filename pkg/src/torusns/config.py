"""Run-configuration files: one YAML document with nested sections.

Required sections are grid, frequency and forcing; solver, sim, seed and
output_dir have defaults. Forcing modes are listed explicitly as
(ell, j, comp, re, im) entries with the conjugate partner implied. Unknown
keys are rejected so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml

from .errors import ConfigParse
from .spectral import GridSpec, SobolevIndex
from .stability import SimConfig
from .torus import ForcingSpec, SolverConfig

__all__ = ["RunConfig", "load_config", "config_from_dict"]

DEFAULT_SEED = 20240801


@dataclass
class RunConfig:
    """Validated run description: grid, frequency, forcing and controls."""

    grid: GridSpec
    omega: tuple[float, ...]
    Lcheck: int
    forcing: ForcingSpec
    solver: SolverConfig
    sim: SimConfig
    seed: int
    output_dir: str
    raw: dict


def _section(data: dict, key: str, required: bool = True) -> dict:
    if key not in data:
        if required:
            raise ConfigParse(f"missing required section {key!r}")
        return {}
    value = data[key]
    if not isinstance(value, dict):
        raise ConfigParse(f"section {key!r} must be a mapping")
    return value


def _check_keys(d: dict, allowed: set[str], where: str):
    extra = set(d) - allowed
    if extra:
        raise ConfigParse(f"unknown keys in {where}: {sorted(extra)}")


def _get(d: dict, key: str, where: str, default=None, required: bool = False):
    if key not in d:
        if required:
            raise ConfigParse(f"missing key {key!r} in {where}")
        return default
    return d[key]


def _int_vec(value, length: int, what: str) -> tuple[int, ...]:
    try:
        vec = tuple(int(x) for x in value)
    except (TypeError, ValueError) as exc:
        raise ConfigParse(f"{what} must be a list of integers, got {value!r}") from exc
    if len(vec) != length:
        raise ConfigParse(f"{what} must have {length} entries, got {value!r}")
    return vec


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigParse("configuration must be a mapping")
    _check_keys(
        data,
        {"grid", "frequency", "forcing", "solver", "sim", "seed", "output_dir"},
        "top level",
    )

    gsec = _section(data, "grid")
    _check_keys(gsec, {"nu", "d", "Kphi", "Kx"}, "grid")
    try:
        grid = GridSpec(
            nu=int(_get(gsec, "nu", "grid", required=True)),
            d=int(_get(gsec, "d", "grid", required=True)),
            Kphi=int(_get(gsec, "Kphi", "grid", required=True)),
            Kx=int(_get(gsec, "Kx", "grid", required=True)),
            ncomp=int(_get(gsec, "d", "grid", required=True)),
        )
    except ValueError as exc:
        raise ConfigParse(f"invalid grid: {exc}") from exc

    fsec = _section(data, "frequency")
    _check_keys(fsec, {"omega", "Lcheck"}, "frequency")
    omega_raw = _get(fsec, "omega", "frequency", required=True)
    try:
        omega = tuple(float(x) for x in omega_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigParse(f"omega must be a list of reals, got {omega_raw!r}") from exc
    if len(omega) != grid.nu:
        raise ConfigParse(f"omega must have nu={grid.nu} entries, got {len(omega)}")
    Lcheck = int(_get(fsec, "Lcheck", "frequency", default=50))

    frc = _section(data, "forcing")
    _check_keys(frc, {"epsilon", "zero_space_mean", "modes"}, "forcing")
    epsilon = float(_get(frc, "epsilon", "forcing", required=True))
    zero_space_mean = bool(_get(frc, "zero_space_mean", "forcing", default=False))
    mode_entries = _get(frc, "modes", "forcing", default=[])
    if not isinstance(mode_entries, list):
        raise ConfigParse("forcing.modes must be a list")
    modes = []
    for k, entry in enumerate(mode_entries):
        if not isinstance(entry, dict):
            raise ConfigParse(f"forcing.modes[{k}] must be a mapping")
        _check_keys(entry, {"ell", "j", "comp", "re", "im"}, f"forcing.modes[{k}]")
        ell = _int_vec(
            _get(entry, "ell", f"forcing.modes[{k}]", required=True),
            grid.nu,
            f"forcing.modes[{k}].ell",
        )
        j = _int_vec(
            _get(entry, "j", f"forcing.modes[{k}]", required=True),
            grid.d,
            f"forcing.modes[{k}].j",
        )
        comp = int(_get(entry, "comp", f"forcing.modes[{k}]", required=True))
        if not (0 <= comp < grid.d):
            raise ConfigParse(f"forcing.modes[{k}].comp must be in [0, {grid.d})")
        amp = complex(
            float(_get(entry, "re", f"forcing.modes[{k}]", default=0.0)),
            float(_get(entry, "im", f"forcing.modes[{k}]", default=0.0)),
        )
        modes.append((ell, j, comp, amp))
    try:
        forcing = ForcingSpec.from_modes(grid, modes, epsilon, zero_space_mean)
    except ValueError as exc:
        raise ConfigParse(f"invalid forcing: {exc}") from exc

    ssec = _section(data, "solver", required=False)
    _check_keys(
        ssec, {"sigma", "s", "tol_residual", "max_iter", "contraction_probe"}, "solver"
    )
    idx = None
    if ("sigma" in ssec) != ("s" in ssec):
        raise ConfigParse("solver.sigma and solver.s must be given together")
    if "sigma" in ssec:
        try:
            idx = SobolevIndex(float(ssec["sigma"]), float(ssec["s"]))
        except ValueError as exc:
            raise ConfigParse(f"invalid solver index: {exc}") from exc
    try:
        solver = SolverConfig(
            idx=idx,
            tol_residual=float(_get(ssec, "tol_residual", "solver", default=1e-12)),
            max_iter=int(_get(ssec, "max_iter", "solver", default=40)),
            contraction_probe=bool(
                _get(ssec, "contraction_probe", "solver", default=False)
            ),
        )
    except ValueError as exc:
        raise ConfigParse(f"invalid solver section: {exc}") from exc

    msec = _section(data, "sim", required=False)
    _check_keys(
        msec, {"alpha", "delta", "dt", "T", "s", "integrator", "burn_in"}, "sim"
    )
    try:
        sim = SimConfig(
            alpha=float(_get(msec, "alpha", "sim", default=0.9)),
            delta=float(_get(msec, "delta", "sim", default=1e-3)),
            dt=float(_get(msec, "dt", "sim", default=1e-3)),
            T=float(_get(msec, "T", "sim", default=15.0)),
            s=float(_get(msec, "s", "sim", default=grid.d / 2.0 + 1.5)),
            integrator=str(_get(msec, "integrator", "sim", default="etd2")),
            burn_in=float(_get(msec, "burn_in", "sim", default=1.0)),
        )
    except ValueError as exc:
        raise ConfigParse(f"invalid sim section: {exc}") from exc

    seed = int(_get(data, "seed", "top level", default=DEFAULT_SEED))
    output_dir = str(_get(data, "output_dir", "top level", default="out"))

    return RunConfig(
        grid=grid,
        omega=omega,
        Lcheck=Lcheck,
        forcing=forcing,
        solver=solver,
        sim=sim,
        seed=seed,
        output_dir=output_dir,
        raw=data,
    )


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParse(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigParse(f"config {path} is not valid YAML: {exc}") from exc
    return config_from_dict(data)
