"""Truncated Fourier fields on periodic domains and their spectral operators.

Two field kinds are supported: functions on the d-torus (``SpaceField``) and
functions on the product of a nu-torus of angles with the d-torus
(``SpaceTimeField``). Coefficients are stored densely in FFT ordering on odd
grids of size 2K+1 per axis, so the retained modes are exactly those with
max-norm at most K and there is no Nyquist mode to special-case. Real-valued
fields are represented by conjugate-symmetric coefficient arrays; the
symmetry is enforced by construction and re-imposed after every collocation
round trip.

All operators are mode-diagonal except the advection product u . grad(v),
which is evaluated pseudo-spectrally on an enlarged collocation grid (at
least 3K+1 points per axis) so quadratic products are alias-free on the
retained band.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft

from .errors import GridMismatch, NonZeroMean

__all__ = [
    "GridSpec",
    "SobolevIndex",
    "SpaceField",
    "SpaceTimeField",
    "wavenumbers",
    "reality_defect",
    "hermitize",
    "mean_tolerance",
    "space_norm",
    "mixed_norm",
    "h0_norm",
    "plancherel_inner",
    "mean_projections",
    "leray_project",
    "divergence",
    "gradient",
    "inverse_laplacian",
    "apply_x_multiplier",
    "advect",
    "sample_torus",
    "set_mode_pair",
    "get_mode",
    "random_space_field",
    "random_torus_field",
    "scale_to_norm",
]


# --------------------------------------------------------------------------
# grids and mode bookkeeping
# --------------------------------------------------------------------------

def wavenumbers(K: int) -> np.ndarray:
    """Integer wavenumbers 0..K,-K..-1 in FFT order for a grid of 2K+1 points."""
    n = 2 * K + 1
    return np.rint(np.fft.fftfreq(n, d=1.0 / n)).astype(int)


@dataclass(frozen=True)
class GridSpec:
    """Fixed truncation of the double Fourier basis.

    nu: number of angle variables; d: torus dimension; Kphi/Kx: max-norm
    cutoffs of the retained angle/space modes; ncomp: number of field
    components. Cutoffs are immutable; mixing fields from different grids
    raises GridMismatch.
    """

    nu: int
    d: int
    Kphi: int
    Kx: int
    ncomp: int

    def __post_init__(self):
        if self.nu < 1:
            raise ValueError(f"nu must be >= 1, got {self.nu}")
        if self.d < 2:
            raise ValueError(f"d must be >= 2, got {self.d}")
        if self.Kphi < 0:
            raise ValueError(f"Kphi must be >= 0, got {self.Kphi}")
        if self.Kx < 1:
            raise ValueError(f"Kx must be >= 1, got {self.Kx}")
        if self.ncomp < 1:
            raise ValueError(f"ncomp must be >= 1, got {self.ncomp}")

    @property
    def nphi(self) -> int:
        return 2 * self.Kphi + 1

    @property
    def nx(self) -> int:
        return 2 * self.Kx + 1

    def space_shape(self, ncomp: int | None = None) -> tuple[int, ...]:
        n = self.ncomp if ncomp is None else ncomp
        return (n,) + (self.nx,) * self.d

    def torus_shape(self, ncomp: int | None = None) -> tuple[int, ...]:
        n = self.ncomp if ncomp is None else ncomp
        return (n,) + (self.nphi,) * self.nu + (self.nx,) * self.d

    def with_ncomp(self, ncomp: int) -> "GridSpec":
        return dataclasses.replace(self, ncomp=ncomp)

    def same_geometry(self, other: "GridSpec") -> bool:
        return (self.nu, self.d, self.Kphi, self.Kx) == (
            other.nu,
            other.d,
            other.Kphi,
            other.Kx,
        )


@dataclass(frozen=True)
class SobolevIndex:
    """Regularity pair: sigma derivatives in the angles, s in space."""

    sigma: float
    s: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma}")
        if not (math.isfinite(self.s) and self.s >= 0):
            raise ValueError(f"s must be finite and >= 0, got {self.s}")


@lru_cache(maxsize=None)
def _jvec(d: int, K: int) -> np.ndarray:
    """Stacked integer wavenumber components, shape (d, nx, ..., nx)."""
    axes = np.meshgrid(*([wavenumbers(K)] * d), indexing="ij")
    arr = np.stack(axes, axis=0)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def _jsq(d: int, K: int) -> np.ndarray:
    arr = (_jvec(d, K) ** 2).sum(axis=0).astype(float)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def _bracket_sq(d: int, K: int) -> np.ndarray:
    """<k>^2 with <k> = max(1, |k|), over the mode box."""
    arr = np.maximum(1.0, _jsq(d, K))
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def _leray_tensor(d: int, K: int) -> np.ndarray:
    """Per-mode orthogonal projector I - j j^T / |j|^2 (identity at j = 0)."""
    j = _jvec(d, K).astype(float)
    jsq = _jsq(d, K).copy()
    jsq[(0,) * d] = 1.0  # j = 0 passes through unchanged
    proj = -j[:, None] * j[None, :] / jsq
    idx = np.arange(d)
    proj[idx, idx] += 1.0
    proj[(idx[:, None], idx[None, :]) + (0,) * d] = np.eye(d)
    proj.setflags(write=False)
    return proj


def _zero_index(naxes: int) -> tuple:
    return (Ellipsis,) + (0,) * naxes


# --------------------------------------------------------------------------
# field containers
# --------------------------------------------------------------------------

@dataclass(eq=False)
class SpaceField:
    """Vector- or scalar-valued function on the d-torus, one time slice.

    coeff has shape (ncomp, nx, ..., nx) in FFT ordering; conjugate symmetry
    coeff[-j] = conj(coeff[j]) encodes real-valuedness.
    """

    grid: GridSpec
    coeff: np.ndarray

    def __post_init__(self):
        expect = self.grid.space_shape()
        if self.coeff.shape != expect:
            raise ValueError(
                f"coefficient shape {self.coeff.shape} does not match grid {expect}"
            )
        if not np.iscomplexobj(self.coeff):
            self.coeff = self.coeff.astype(complex)

    @classmethod
    def zeros(cls, grid: GridSpec, ncomp: int | None = None) -> "SpaceField":
        g = grid if ncomp is None else grid.with_ncomp(ncomp)
        return cls(g, np.zeros(g.space_shape(), dtype=complex))

    @property
    def mode_axes(self) -> tuple[int, ...]:
        return tuple(range(1, 1 + self.grid.d))

    def copy(self) -> "SpaceField":
        return SpaceField(self.grid, self.coeff.copy())


@dataclass(eq=False)
class SpaceTimeField:
    """Function of (phi, x) on the nu-torus times the d-torus.

    coeff has shape (ncomp, nphi, ..., nphi, nx, ..., nx); conjugate symmetry
    couples (ell, j) with (-ell, -j).
    """

    grid: GridSpec
    coeff: np.ndarray

    def __post_init__(self):
        expect = self.grid.torus_shape()
        if self.coeff.shape != expect:
            raise ValueError(
                f"coefficient shape {self.coeff.shape} does not match grid {expect}"
            )
        if not np.iscomplexobj(self.coeff):
            self.coeff = self.coeff.astype(complex)

    @classmethod
    def zeros(cls, grid: GridSpec, ncomp: int | None = None) -> "SpaceTimeField":
        g = grid if ncomp is None else grid.with_ncomp(ncomp)
        return cls(g, np.zeros(g.torus_shape(), dtype=complex))

    @property
    def mode_axes(self) -> tuple[int, ...]:
        return tuple(range(1, 1 + self.grid.nu + self.grid.d))

    @property
    def phi_axes(self) -> tuple[int, ...]:
        return tuple(range(1, 1 + self.grid.nu))

    @property
    def x_axes(self) -> tuple[int, ...]:
        return tuple(range(1 + self.grid.nu, 1 + self.grid.nu + self.grid.d))

    def copy(self) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, self.coeff.copy())


Field = SpaceField | SpaceTimeField


def _check_same_geometry(a: Field, b: Field):
    if not a.grid.same_geometry(b.grid):
        raise GridMismatch(f"grids differ: {a.grid} vs {b.grid}")


def _wrap_like(f: Field, coeff: np.ndarray, ncomp: int) -> Field:
    g = f.grid.with_ncomp(ncomp)
    return type(f)(g, coeff)


# --------------------------------------------------------------------------
# reality handling
# --------------------------------------------------------------------------

def _conj_flip(coeff: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
    """Return conj(coeff) evaluated at the negated modes."""
    out = coeff
    for ax in axes:
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return np.conj(out)


def hermitize(coeff: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
    """Project onto the conjugate-symmetric subspace (real-valued fields)."""
    return 0.5 * (coeff + _conj_flip(coeff, axes))


def reality_defect(f: Field) -> float:
    """Max absolute deviation from coeff(-k) = conj(coeff(k))."""
    return float(np.abs(f.coeff - _conj_flip(f.coeff, f.mode_axes)).max())


def mean_tolerance(f: Field) -> float:
    """Scale-aware slack for zero-mean assertions: 1e-12 * (1 + H^0 norm)."""
    return 1e-12 * (1.0 + h0_norm(f))


# --------------------------------------------------------------------------
# mode access helpers
# --------------------------------------------------------------------------

def _mode_index(f: Field, ell, j) -> tuple:
    g = f.grid
    idx: list = [slice(None)]
    if isinstance(f, SpaceTimeField):
        ell = np.atleast_1d(np.asarray(ell, dtype=int))
        if ell.shape != (g.nu,):
            raise ValueError(f"expected {g.nu} angle indices, got {ell}")
        if np.abs(ell).max() > g.Kphi:
            raise ValueError(f"angle mode {ell} outside cutoff {g.Kphi}")
        idx.extend(int(l) % g.nphi for l in ell)
    j = np.atleast_1d(np.asarray(j, dtype=int))
    if j.shape != (g.d,):
        raise ValueError(f"expected {g.d} space indices, got {j}")
    if np.abs(j).max() > g.Kx:
        raise ValueError(f"space mode {j} outside cutoff {g.Kx}")
    idx.extend(int(k) % g.nx for k in j)
    return tuple(idx)


def get_mode(f: Field, j, ell=None) -> np.ndarray:
    """Coefficient vector in C^ncomp at space mode j (and angle mode ell)."""
    if isinstance(f, SpaceTimeField):
        if ell is None:
            raise ValueError("space-time fields need an angle mode index")
        return f.coeff[_mode_index(f, ell, j)].copy()
    return f.coeff[_mode_index(f, None, j)].copy()


def set_mode_pair(f: Field, j, amplitude, ell=None) -> None:
    """Write a coefficient and its conjugate mirror in place.

    For the self-paired mode (all indices zero) the amplitude must be real.
    """
    amp = np.asarray(amplitude, dtype=complex)
    if amp.shape != (f.grid.ncomp,):
        raise ValueError(f"amplitude must have shape ({f.grid.ncomp},)")
    if isinstance(f, SpaceTimeField):
        ell = np.zeros(f.grid.nu, dtype=int) if ell is None else np.asarray(ell)
        here = _mode_index(f, ell, j)
        mirror = _mode_index(f, -ell, -np.asarray(j))
    else:
        here = _mode_index(f, None, j)
        mirror = _mode_index(f, None, -np.asarray(j))
    if here == mirror:
        if np.abs(amp.imag).max() > 0:
            raise ValueError("the zero mode of a real field must be real")
        f.coeff[here] = amp.real
        return
    f.coeff[here] = amp
    f.coeff[mirror] = np.conj(amp)


# --------------------------------------------------------------------------
# norms
# --------------------------------------------------------------------------

def _space_weight(grid: GridSpec, s: float) -> np.ndarray:
    base = _bracket_sq(grid.d, grid.Kx)
    return base if s == 1.0 else base**s


def _phi_weight(grid: GridSpec, sigma: float) -> np.ndarray:
    base = _bracket_sq(grid.nu, grid.Kphi)
    return base if sigma == 1.0 else base**sigma


def space_norm(u: SpaceField, s: float) -> float:
    """Sobolev norm (sum_j <j>^{2s} |coeff(j)|^2)^{1/2}, <j> = max(1, |j|)."""
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    w = _space_weight(u.grid, s)
    return float(np.sqrt(np.sum(w * np.abs(u.coeff) ** 2)))


def mixed_norm(U: SpaceTimeField, idx: SobolevIndex) -> float:
    """Mixed norm (sum <ell>^{2 sigma} <j>^{2s} |coeff|^2)^{1/2}."""
    wphi = _phi_weight(U.grid, idx.sigma).reshape(
        (1,) + (U.grid.nphi,) * U.grid.nu + (1,) * U.grid.d
    )
    wx = _space_weight(U.grid, idx.s)
    return float(np.sqrt(np.sum(wphi * wx * np.abs(U.coeff) ** 2)))


def h0_norm(f: Field) -> float:
    """Plain L^2 coefficient norm (all weights one)."""
    return float(np.sqrt(np.sum(np.abs(f.coeff) ** 2)))


def plancherel_inner(a: Field, b: Field) -> complex:
    """Coefficient-space inner product sum conj(a) * b."""
    _check_same_geometry(a, b)
    return complex(np.sum(np.conj(a.coeff) * b.coeff))


# --------------------------------------------------------------------------
# projections and mode-diagonal operators
# --------------------------------------------------------------------------

def mean_projections(U: SpaceTimeField) -> tuple[SpaceTimeField, SpaceTimeField]:
    """Split into the spatial mean part (j = 0 only) and its complement."""
    zero = _zero_index(U.grid.d)
    u0 = np.zeros_like(U.coeff)
    u0[zero] = U.coeff[zero]
    uperp = U.coeff.copy()
    uperp[zero] = 0.0
    return SpaceTimeField(U.grid, u0), SpaceTimeField(U.grid, uperp)


def leray_project(u: Field) -> Field:
    """Orthogonal projection onto divergence-free fields, per Fourier mode.

    Nonzero modes get I - j j^T/|j|^2; the j = 0 coefficient passes through,
    so spatial means are preserved.
    """
    d = u.grid.d
    if u.grid.ncomp != d:
        raise ValueError(f"leray_project needs ncomp = d = {d}, got {u.grid.ncomp}")
    proj = _leray_tensor(d, u.grid.Kx)
    if isinstance(u, SpaceField):
        out = np.einsum("ab...,b...->a...", proj, u.coeff)
    else:
        nphi_flat = u.grid.nphi**u.grid.nu
        c = u.coeff.reshape((d, nphi_flat) + (u.grid.nx,) * d)
        out = np.einsum("ab...,bp...->ap...", proj, c).reshape(u.coeff.shape)
    return _wrap_like(u, out, d)


def divergence(u: Field) -> Field:
    """Spectral divergence: output coefficient i j . coeff(j), scalar field."""
    d = u.grid.d
    if u.grid.ncomp != d:
        raise ValueError(f"divergence needs ncomp = d = {d}, got {u.grid.ncomp}")
    j = _jvec(d, u.grid.Kx)
    if isinstance(u, SpaceTimeField):
        j = j.reshape((d,) + (1,) * u.grid.nu + (u.grid.nx,) * d)
    out = 1j * np.sum(j * u.coeff, axis=0)[None]
    return _wrap_like(u, out, 1)


def gradient(p: Field) -> Field:
    """Spectral gradient of a scalar field: i j coeff(j) per component."""
    if p.grid.ncomp != 1:
        raise ValueError(f"gradient needs a scalar field, got ncomp={p.grid.ncomp}")
    d = p.grid.d
    j = _jvec(d, p.grid.Kx)
    if isinstance(p, SpaceTimeField):
        j = j.reshape((d,) + (1,) * p.grid.nu + (p.grid.nx,) * d)
    out = 1j * j * p.coeff[0]
    return _wrap_like(p, out, d)


def inverse_laplacian(g: Field) -> Field:
    """Inverse of -Laplace on zero-mean scalars: coeff(j)/|j|^2, j != 0.

    Raises NonZeroMean when the spatial mean exceeds the scale-aware
    tolerance; the output always has exactly zero spatial mean.
    """
    if g.grid.ncomp != 1:
        raise ValueError(f"inverse_laplacian needs a scalar field, got {g.grid.ncomp}")
    tol = mean_tolerance(g)
    zero = _zero_index(g.grid.d)
    mean_mag = float(np.abs(g.coeff[zero]).max())
    if mean_mag > tol:
        raise NonZeroMean(f"spatial mean {mean_mag:.3e} exceeds tolerance {tol:.3e}")
    jsq = _jsq(g.grid.d, g.grid.Kx).copy()
    jsq[(0,) * g.grid.d] = 1.0
    if isinstance(g, SpaceTimeField):
        jsq = jsq.reshape((1,) * g.grid.nu + jsq.shape)
    out = g.coeff / jsq
    out[zero] = 0.0
    return _wrap_like(g, out, 1)


def apply_x_multiplier(u: Field, values: np.ndarray) -> Field:
    """Apply a diagonal Fourier multiplier given by its values on the x-modes."""
    if values.shape != (u.grid.nx,) * u.grid.d:
        raise ValueError("multiplier values must live on the x-mode box")
    m = values
    if isinstance(u, SpaceTimeField):
        m = values.reshape((1,) * u.grid.nu + values.shape)
    return _wrap_like(u, u.coeff * m, u.grid.ncomp)


# --------------------------------------------------------------------------
# pseudo-spectral products
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _dealias_plan(Ks: tuple[int, ...]) -> tuple[tuple[int, ...], tuple]:
    """Collocation sizes (>= 3K+1 per axis) and the pad/extract index map."""
    Ms = tuple(scipy.fft.next_fast_len(3 * K + 1) for K in Ks)
    idx = tuple(wavenumbers(K) % M for K, M in zip(Ks, Ms))
    return Ms, idx


def _mode_cutoffs(f: Field) -> tuple[int, ...]:
    g = f.grid
    if isinstance(f, SpaceTimeField):
        return (g.Kphi,) * g.nu + (g.Kx,) * g.d
    return (g.Kx,) * g.d


def _to_collocation(stack: np.ndarray, Ks: tuple[int, ...]) -> np.ndarray:
    """Zero-pad banded coefficients and evaluate on the collocation grid."""
    Ms, idx = _dealias_plan(Ks)
    lead = stack.shape[: stack.ndim - len(Ks)]
    big = np.zeros(lead + Ms, dtype=complex)
    big[np.ix_(*[range(n) for n in lead], *idx)] = stack
    axes = tuple(range(len(lead), big.ndim))
    vals = scipy.fft.ifftn(big, axes=axes)
    return vals.real * math.prod(Ms)


def _from_collocation(values: np.ndarray, Ks: tuple[int, ...]) -> np.ndarray:
    """Transform collocation values back and truncate to the retained band."""
    Ms, idx = _dealias_plan(Ks)
    lead = values.shape[: values.ndim - len(Ks)]
    axes = tuple(range(len(lead), values.ndim))
    big = scipy.fft.fftn(values.astype(complex), axes=axes) / math.prod(Ms)
    return big[np.ix_(*[range(n) for n in lead], *idx)]


def _grad_x_coeff(v: Field) -> np.ndarray:
    """Coefficients of all spatial partials, shape (ncomp, d, *modes)."""
    d = v.grid.d
    j = _jvec(d, v.grid.Kx)
    if isinstance(v, SpaceTimeField):
        j = j.reshape((d,) + (1,) * v.grid.nu + (v.grid.nx,) * d)
    return 1j * j[None, :] * v.coeff[:, None]


def _advect_core(
    ucoeff: np.ndarray, vcoeff_grad: np.ndarray, Ks: tuple[int, ...]
) -> np.ndarray:
    """Dealiased pointwise contraction u_a (d_a v_c) from coefficient inputs."""
    d = ucoeff.shape[0]
    m = vcoeff_grad.shape[0]
    mode_shape = ucoeff.shape[1:]
    stack = np.concatenate(
        [ucoeff, vcoeff_grad.reshape((m * d,) + mode_shape)], axis=0
    )
    vals = _to_collocation(stack, Ks)
    uvals = vals[:d]
    gvals = vals[d:].reshape((m, d) + vals.shape[1:])
    prod = np.einsum("a...,ca...->c...", uvals, gvals)
    out = _from_collocation(prod, Ks)
    axes = tuple(range(1, out.ndim))
    return hermitize(out, axes)


def advect(u: Field, v: Field) -> Field:
    """Pseudo-spectral advection u . grad(v), componentwise in v.

    The product is formed on a collocation grid large enough (2/3 rule) that
    modes inside the retained band are exact; everything beyond the cutoff is
    discarded. For a divergence-free u the output spatial mean vanishes.
    """
    _check_same_geometry(u, v)
    if type(u) is not type(v):
        raise GridMismatch("cannot advect a space field with a space-time field")
    d = u.grid.d
    if u.grid.ncomp != d:
        raise ValueError(f"advecting velocity needs ncomp = d = {d}")
    out = _advect_core(u.coeff, _grad_x_coeff(v), _mode_cutoffs(u))
    return _wrap_like(v, out, v.grid.ncomp)


# --------------------------------------------------------------------------
# torus sampling
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _lvec(nu: int, K: int) -> np.ndarray:
    axes = np.meshgrid(*([wavenumbers(K)] * nu), indexing="ij")
    arr = np.stack(axes, axis=0).astype(float)
    arr.setflags(write=False)
    return arr


def omega_dot_ell(grid: GridSpec, omega) -> np.ndarray:
    """omega . ell over the retained angle-mode box."""
    om = np.asarray(omega, dtype=float)
    if om.shape != (grid.nu,):
        raise ValueError(f"omega must have {grid.nu} entries, got {om.shape}")
    return np.tensordot(om, _lvec(grid.nu, grid.Kphi), axes=1)


def sample_torus(U: SpaceTimeField, omega, t: float) -> SpaceField:
    """Evaluate the torus function at angle omega * t: sums coeff * e^{i(omega.ell)t}."""
    phases = np.exp(1j * t * omega_dot_ell(U.grid, omega))
    ph = phases.reshape((1,) + phases.shape + (1,) * U.grid.d)
    out = (U.coeff * ph).sum(axis=U.phi_axes)
    return SpaceField(U.grid, out)


# --------------------------------------------------------------------------
# random fields (seeded diagnostics and perturbation directions)
# --------------------------------------------------------------------------

def _random_hermitian(rng: np.random.Generator, shape, axes) -> np.ndarray:
    g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return hermitize(g, axes)


def random_space_field(
    grid: GridSpec,
    rng: np.random.Generator,
    *,
    ncomp: int | None = None,
    zero_mean: bool = True,
    divergence_free: bool = False,
) -> SpaceField:
    """Isotropic complex-Gaussian field with the reality symmetry built in."""
    g = grid if ncomp is None else grid.with_ncomp(ncomp)
    coeff = _random_hermitian(rng, g.space_shape(), tuple(range(1, 1 + g.d)))
    f = SpaceField(g, coeff)
    if divergence_free:
        f = leray_project(f)
    if zero_mean:
        f.coeff[_zero_index(g.d)] = 0.0
    return f


def random_torus_field(
    grid: GridSpec,
    rng: np.random.Generator,
    *,
    ncomp: int | None = None,
    zero_space_mean: bool = True,
    divergence_free: bool = False,
) -> SpaceTimeField:
    g = grid if ncomp is None else grid.with_ncomp(ncomp)
    coeff = _random_hermitian(
        rng, g.torus_shape(), tuple(range(1, 1 + g.nu + g.d))
    )
    f = SpaceTimeField(g, coeff)
    if divergence_free:
        f = leray_project(f)
    if zero_space_mean:
        f.coeff[_zero_index(g.d)] = 0.0
    return f


def scale_to_norm(f: Field, target: float, idx_or_s) -> Field:
    """Rescale a nonzero field so its Sobolev norm equals target."""
    if isinstance(f, SpaceField):
        current = space_norm(f, float(idx_or_s))
    else:
        current = mixed_norm(f, idx_or_s)
    if current == 0.0:
        raise ValueError("cannot rescale the zero field")
    return _wrap_like(f, f.coeff * (target / current), f.grid.ncomp)
