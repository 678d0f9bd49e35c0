"""Textual snapshot format for spectral fields, forcing terms and trajectories.

A field snapshot is a plain-text file: a header line carrying the grid, a
column-description comment, then one record per stored mode and component,

    ell_1 ... ell_nu  j_1 ... j_d  comp  re  im

(space fields omit the ell columns). Coefficients are printed with 17
significant digits so write -> read -> write is byte-identical. Forcing files
prepend one extra header line with the amplitude and the mean flags.
"""

from __future__ import annotations

import itertools
from pathlib import Path

from .errors import SnapshotMismatch
from .spectral import GridSpec, SpaceField, SpaceTimeField
from .torus import ForcingSpec

__all__ = [
    "write_field",
    "read_field",
    "write_forcing",
    "read_forcing",
    "write_trajectory",
]

_FIELD_MAGIC = "# torusns-field"
_FORCING_MAGIC = "# torusns-forcing"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _header(field) -> str:
    g = field.grid
    kind = "spacetime" if isinstance(field, SpaceTimeField) else "space"
    return (
        f"{_FIELD_MAGIC} kind={kind} nu={g.nu} d={g.d} "
        f"Kphi={g.Kphi} Kx={g.Kx} ncomp={g.ncomp}"
    )


def _mode_rows(field):
    g = field.grid
    if isinstance(field, SpaceTimeField):
        ell_range = itertools.product(range(-g.Kphi, g.Kphi + 1), repeat=g.nu)
        for ell in ell_range:
            for j in itertools.product(range(-g.Kx, g.Kx + 1), repeat=g.d):
                idx = tuple(l % g.nphi for l in ell) + tuple(k % g.nx for k in j)
                for comp in range(g.ncomp):
                    yield ell + j + (comp,), field.coeff[(comp,) + idx]
    else:
        for j in itertools.product(range(-g.Kx, g.Kx + 1), repeat=g.d):
            idx = tuple(k % g.nx for k in j)
            for comp in range(g.ncomp):
                yield j + (comp,), field.coeff[(comp,) + idx]


def field_to_text(field) -> str:
    g = field.grid
    cols = []
    if isinstance(field, SpaceTimeField):
        cols += [f"l{i+1}" for i in range(g.nu)]
    cols += [f"j{i+1}" for i in range(g.d)] + ["comp", "re", "im"]
    lines = [_header(field), "# columns: " + " ".join(cols)]
    for ints, c in _mode_rows(field):
        lines.append(
            " ".join(str(i) for i in ints) + " " + _fmt(c.real) + " " + _fmt(c.imag)
        )
    return "\n".join(lines) + "\n"


def write_field(path, field) -> None:
    Path(path).write_text(field_to_text(field))


def _parse_header(line: str) -> tuple[str, GridSpec]:
    if not line.startswith(_FIELD_MAGIC):
        raise SnapshotMismatch(f"not a field snapshot: {line[:40]!r}")
    kv = dict(tok.split("=", 1) for tok in line[len(_FIELD_MAGIC):].split())
    try:
        kind = kv["kind"]
        grid = GridSpec(
            nu=int(kv["nu"]),
            d=int(kv["d"]),
            Kphi=int(kv["Kphi"]),
            Kx=int(kv["Kx"]),
            ncomp=int(kv["ncomp"]),
        )
    except (KeyError, ValueError) as exc:
        raise SnapshotMismatch(f"malformed snapshot header: {line!r}") from exc
    if kind not in ("space", "spacetime"):
        raise SnapshotMismatch(f"unknown field kind {kind!r}")
    return kind, grid


def read_field(path, expect_grid: GridSpec | None = None):
    """Load a snapshot; optionally enforce that it matches an expected grid."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise SnapshotMismatch(f"{path}: empty snapshot")
    start = 0
    if lines[0].startswith(_FORCING_MAGIC):
        start = 1
    kind, grid = _parse_header(lines[start])
    if expect_grid is not None and (
        not grid.same_geometry(expect_grid) or grid.ncomp != expect_grid.ncomp
    ):
        raise SnapshotMismatch(
            f"{path}: snapshot grid {grid} does not match expected {expect_grid}"
        )
    if kind == "spacetime":
        field = SpaceTimeField.zeros(grid)
        nint = grid.nu + grid.d
    else:
        field = SpaceField.zeros(grid)
        nint = grid.d
    nrows = 0
    for line in lines[start + 1 :]:
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        if len(toks) != nint + 3:
            raise SnapshotMismatch(f"{path}: malformed record {line!r}")
        ints = [int(tok) for tok in toks[:nint]]
        comp = int(toks[nint])
        value = complex(float(toks[nint + 1]), float(toks[nint + 2]))
        if kind == "spacetime":
            ell = ints[: grid.nu]
            j = ints[grid.nu :]
            idx = (
                (comp,)
                + tuple(l % grid.nphi for l in ell)
                + tuple(k % grid.nx for k in j)
            )
        else:
            idx = (comp,) + tuple(k % grid.nx for k in ints)
        field.coeff[idx] = value
        nrows += 1
    expected = grid.ncomp * (grid.nphi**grid.nu if kind == "spacetime" else 1) * (
        grid.nx**grid.d
    )
    if nrows != expected:
        raise SnapshotMismatch(f"{path}: {nrows} records, expected {expected}")
    return field


def write_forcing(path, forcing: ForcingSpec) -> None:
    head = (
        f"{_FORCING_MAGIC} epsilon={_fmt(forcing.epsilon)} "
        f"zero_space_mean={int(forcing.zero_space_mean)}"
    )
    Path(path).write_text(head + "\n" + field_to_text(forcing.fhat))


def read_forcing(path) -> ForcingSpec:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(_FORCING_MAGIC):
        raise SnapshotMismatch(f"{path}: not a forcing file")
    kv = dict(tok.split("=", 1) for tok in lines[0][len(_FORCING_MAGIC):].split())
    try:
        epsilon = float(kv["epsilon"])
        zsm = bool(int(kv["zero_space_mean"]))
    except (KeyError, ValueError) as exc:
        raise SnapshotMismatch(f"{path}: malformed forcing header") from exc
    field = read_field(path)
    if not isinstance(field, SpaceTimeField):
        raise SnapshotMismatch(f"{path}: forcing must be a space-time field")
    return ForcingSpec(field, epsilon, zsm)


def write_trajectory(path, series) -> None:
    """Delimiter-separated trajectory records: t, H^s norm, q norm, weighted."""
    lines = ["# t hs_norm q_norm weighted"]
    for t, hs, q, w in zip(
        series.times, series.hs_norms, series.q_norms, series.weighted
    ):
        lines.append(" ".join(_fmt(x) for x in (t, hs, q, w)))
    Path(path).write_text("\n".join(lines) + "\n")
