"""Construction of quasi-periodic invariant tori by fixed-point iteration.

The velocity torus solves, in truncated Fourier space,

    omega . d_phi U - Lap U + P_L(U . grad U) = eps P_L f,   div U = 0,

with P_L the Leray projector. The spatial-mean slice decouples: it is solved
mode-by-mode through the angle derivative (this is where the diophantine
condition on omega enters), while the mean-free remainder is a fixed point of
U -> invert_drift_diffusion(P_L(eps f_perp - U . grad U)), a contraction for
small eps. The pressure is recovered afterwards from the divergence of the
momentum balance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral as sp
from .errors import NoConvergence, NonZeroMean, NonZeroSpaceMean, ResonantMode
from .spectral import GridSpec, SobolevIndex, SpaceTimeField

__all__ = [
    "GAMMA_FLOOR",
    "FrequencySpec",
    "ForcingSpec",
    "SolverConfig",
    "TorusSolution",
    "certify_diophantine",
    "default_index",
    "solve_averaged",
    "drift_diffusion_apply",
    "invert_drift_diffusion",
    "fixed_point_map",
    "solve_torus",
    "recover_pressure",
    "pde_residual",
    "momentum_residual",
    "contraction_probe",
]

# Retained angle modes whose divisor |omega . ell| falls below this are
# treated as resonant rather than divided by.
GAMMA_FLOOR = 1e-10


def certify_diophantine(omega, Lcheck: int) -> tuple[float, bool]:
    """Smallest |omega . ell| |ell|^nu over 0 < |ell|_inf <= Lcheck.

    A positive minimum certifies the diophantine lower bound up to the
    cutoff; modes beyond Lcheck are not inspected.
    """
    om = np.atleast_1d(np.asarray(omega, dtype=float))
    nu = om.shape[0]
    if Lcheck < 1:
        raise ValueError(f"Lcheck must be >= 1, got {Lcheck}")
    if np.all(om == 0.0):
        raise ValueError("omega must be nonzero")
    rng1d = np.arange(-Lcheck, Lcheck + 1)
    ell = np.stack(np.meshgrid(*([rng1d] * nu), indexing="ij"), axis=0).reshape(nu, -1)
    nonzero = np.any(ell != 0, axis=0)
    ell = ell[:, nonzero]
    dots = np.abs(om @ ell)
    norms = np.sqrt((ell.astype(float) ** 2).sum(axis=0))
    gamma_est = float(np.min(dots * norms**nu))
    return gamma_est, gamma_est > 0.0


@dataclass(frozen=True)
class FrequencySpec:
    """Frequency vector with its certified diophantine constant.

    gamma is the certified lower-bound constant clamped into (0, 1]; Lcheck
    records the mode cutoff the certification scanned. Resonant vectors can
    only be carried by uncertified specs, which are valid solely for forcing
    with zero spatial mean (no averaged equation to solve).
    """

    omega: tuple[float, ...]
    gamma: float
    Lcheck: int
    certified: bool = True

    def __post_init__(self):
        if self.certified and not (0.0 < self.gamma <= 1.0):
            raise ValueError(f"certified gamma must be in (0, 1], got {self.gamma}")

    @classmethod
    def certify(cls, omega, Lcheck: int = 50) -> "FrequencySpec":
        gamma_est, ok = certify_diophantine(omega, Lcheck)
        if not ok or gamma_est < GAMMA_FLOOR:
            raise ResonantMode(
                f"omega={tuple(np.atleast_1d(omega))} fails the diophantine check "
                f"up to Lcheck={Lcheck} (gamma_est={gamma_est:.3e})"
            )
        om = tuple(float(x) for x in np.atleast_1d(omega))
        return cls(om, min(1.0, gamma_est), Lcheck, certified=True)

    @classmethod
    def uncertified(cls, omega) -> "FrequencySpec":
        om = tuple(float(x) for x in np.atleast_1d(omega))
        return cls(om, 1.0, 0, certified=False)

    @property
    def nu(self) -> int:
        return len(self.omega)


@dataclass
class ForcingSpec:
    """Quasi-periodic forcing profile f with its amplitude eps.

    fhat stores the unscaled profile; the equation is driven by eps * f.
    Zero space-time average is mandatory; the zero_space_mean flag addition-
    ally requires every (ell, j=0) coefficient to vanish, which removes the
    need for any non-resonance condition on omega.
    """

    fhat: SpaceTimeField
    epsilon: float
    zero_space_mean: bool = False

    def __post_init__(self):
        if not (0.0 <= self.epsilon < 1.0):
            raise ValueError(f"epsilon must be in [0, 1), got {self.epsilon}")
        g = self.fhat.grid
        if g.ncomp != g.d:
            raise ValueError(f"forcing needs ncomp = d = {g.d}, got {g.ncomp}")
        tol = sp.mean_tolerance(self.fhat)
        zz = (Ellipsis,) + (0,) * (g.nu + g.d)
        if np.abs(self.fhat.coeff[zz]).max() > tol:
            raise ValueError("forcing must have zero space-time average")
        if self.zero_space_mean:
            j0 = (Ellipsis,) + (0,) * g.d
            # the j0 index touches all angle modes at spatial mode zero
            slab = self.fhat.coeff[(slice(None),) * (1 + g.nu) + (0,) * g.d]
            if np.abs(slab).max() > tol:
                raise ValueError(
                    "zero_space_mean is set but some (ell, j=0) coefficient is nonzero"
                )
        if sp.reality_defect(self.fhat) > 1e-12 * (1.0 + np.abs(self.fhat.coeff).max()):
            raise ValueError("forcing coefficients violate the reality symmetry")

    @classmethod
    def from_modes(
        cls,
        grid: GridSpec,
        modes,
        epsilon: float,
        zero_space_mean: bool = False,
    ) -> "ForcingSpec":
        """Build from (ell, j, comp, amplitude) entries, conjugate pairs implied."""
        f = SpaceTimeField.zeros(grid.with_ncomp(grid.d))
        for ell, j, comp, amp in modes:
            vec = np.zeros(grid.d, dtype=complex)
            vec[comp] = amp
            current = sp.get_mode(f, j, ell=ell)
            sp.set_mode_pair(f, j, current + vec, ell=ell)
        return cls(f, epsilon, zero_space_mean)

    def space_mean_slice(self) -> SpaceTimeField:
        """The (ell, j=0) part of the profile, as a field of its own."""
        f0, _ = sp.mean_projections(self.fhat)
        return f0

    def perp_coeff(self) -> np.ndarray:
        """Coefficients of the profile with the spatial-mean slice removed."""
        out = self.fhat.coeff.copy()
        out[(Ellipsis,) + (0,) * self.fhat.grid.d] = 0.0
        return out


def default_index(grid: GridSpec) -> SobolevIndex:
    """Solver default regularity: sigma = nu/2 + 2 and s = d/2 + 1.5."""
    return SobolevIndex(grid.nu / 2.0 + 2.0, grid.d / 2.0 + 1.5)


@dataclass(frozen=True)
class SolverConfig:
    """Fixed-point iteration controls.

    idx = None resolves to default_index(grid) at solve time. The stopping
    test is a relative successive-difference criterion; the assembled PDE
    residual is evaluated once afterwards and appended to the history.
    """

    idx: SobolevIndex | None = None
    tol_residual: float = 1e-12
    max_iter: int = 40
    contraction_probe: bool = False

    def __post_init__(self):
        if not self.tol_residual > 0:
            raise ValueError(f"tol_residual must be > 0, got {self.tol_residual}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class TorusSolution:
    """Converged torus with solver diagnostics.

    residual_history holds the successive-difference norms of the iteration
    followed by the assembled PDE residual as its final entry. cstar is the
    measured sup_k ||U_k|| / eps (nan when eps = 0). contraction holds the
    probe's maximum measured Lipschitz factor when it was requested.
    """

    U: SpaceTimeField
    P: SpaceTimeField
    iterations: int
    residual_history: list[float]
    norms: tuple[float, float]
    pde_residual: float
    cstar: float
    idx: SobolevIndex
    contraction: float | None = None
    max_div_defect: float = 0.0

    def __post_init__(self):
        g = self.U.grid
        scale = 1e-12 * (1.0 + g.Kx * float(np.abs(self.U.coeff).max()))
        defect = _div_defect(self.U)
        if defect > scale:
            raise ValueError(f"velocity torus is not divergence-free ({defect:.3e})")
        zz = (Ellipsis,) + (0,) * (g.nu + g.d)
        if np.abs(self.U.coeff[zz]).max() > sp.mean_tolerance(self.U):
            raise ValueError("velocity torus must have zero space-time mean")
        j0 = (Ellipsis,) + (0,) * g.d
        if np.abs(self.P.coeff[j0]).max() > sp.mean_tolerance(self.P):
            raise ValueError("pressure torus must have zero spatial mean")

    @classmethod
    def zero(cls, grid: GridSpec, idx: SobolevIndex | None = None) -> "TorusSolution":
        """The trivial torus (handy for perturbation tests around rest)."""
        g = grid.with_ncomp(grid.d)
        return cls(
            U=SpaceTimeField.zeros(g),
            P=SpaceTimeField.zeros(grid.with_ncomp(1)),
            iterations=0,
            residual_history=[0.0],
            norms=(0.0, 0.0),
            pde_residual=0.0,
            cstar=float("nan"),
            idx=idx or default_index(grid),
        )

    @classmethod
    def from_velocity(
        cls, U: SpaceTimeField, idx: SobolevIndex | None = None
    ) -> "TorusSolution":
        """Wrap a velocity torus loaded from disk; solver diagnostics absent."""
        idx = idx or default_index(U.grid)
        return cls(
            U=U,
            P=SpaceTimeField.zeros(U.grid.with_ncomp(1)),
            iterations=0,
            residual_history=[],
            norms=(sp.mixed_norm(U, idx), 0.0),
            pde_residual=float("nan"),
            cstar=float("nan"),
            idx=idx,
        )


def _div_defect(U) -> float:
    return float(np.abs(sp.divergence(U).coeff).max())


def _space_mean_defect(U: SpaceTimeField) -> float:
    j0 = (Ellipsis,) + (0,) * U.grid.d
    return float(np.abs(U.coeff[j0]).max())


# --------------------------------------------------------------------------
# linear solves
# --------------------------------------------------------------------------

def solve_averaged(f0: SpaceTimeField, freq: FrequencySpec) -> SpaceTimeField:
    """Invert the angle derivative on a spatial-mean slice.

    Input carries only j = 0 content with vanishing (0, 0) mode; the output
    satisfies omega . d_phi U0 = f0 with zero angle average. Any retained
    angle mode with |omega . ell| below GAMMA_FLOOR raises ResonantMode.
    """
    g = f0.grid
    j0 = (Ellipsis,) + (0,) * g.d
    other = f0.coeff.copy()
    other[j0] = 0.0
    if np.abs(other).max() > sp.mean_tolerance(f0):
        raise ValueError("solve_averaged expects a field with only j = 0 content")
    zz = (Ellipsis,) + (0,) * (g.nu + g.d)
    if np.abs(f0.coeff[zz]).max() > sp.mean_tolerance(f0):
        raise NonZeroMean("the (0, 0) coefficient must vanish")
    dots = sp.omega_dot_ell(g, freq.omega)
    ell0 = (0,) * g.nu
    small = np.abs(dots) < GAMMA_FLOOR
    small[ell0] = False
    if bool(small.any()):
        raise ResonantMode(
            "a retained angle mode has |omega . ell| < "
            f"{GAMMA_FLOOR:g}; cannot solve the averaged equation"
        )
    divisor = dots.copy()
    divisor[ell0] = 1.0
    divisor = divisor.reshape((1,) + dots.shape + (1,) * g.d)
    out = f0.coeff / (1j * divisor)
    out[(slice(None),) + ell0 + (slice(None),) * g.d] = 0.0
    return SpaceTimeField(g, out)


def _drift_diffusion_symbol(grid: GridSpec, freq: FrequencySpec) -> np.ndarray:
    """Per-mode symbol i omega . ell + |j|^2 over the full (ell, j) box."""
    dots = sp.omega_dot_ell(grid, freq.omega)
    jsq = sp._jsq(grid.d, grid.Kx)
    return 1j * dots.reshape(dots.shape + (1,) * grid.d) + jsq.reshape(
        (1,) * grid.nu + jsq.shape
    )


def drift_diffusion_apply(U: SpaceTimeField, freq: FrequencySpec) -> SpaceTimeField:
    """Apply omega . d_phi - Lap mode-by-mode."""
    sym = _drift_diffusion_symbol(U.grid, freq)
    return SpaceTimeField(U.grid, U.coeff * sym[None])


def invert_drift_diffusion(g: SpaceTimeField, freq: FrequencySpec) -> SpaceTimeField:
    """Invert omega . d_phi - Lap on fields with zero spatial mean.

    The divisor i omega . ell + |j|^2 has modulus at least |j|^2 >= 1 on the
    j != 0 modes, so no non-resonance condition is needed and the inverse
    gains two space derivatives: ||u||_{sigma, s+2} <= ||g||_{sigma, s}.
    """
    grid = g.grid
    defect = _space_mean_defect(g)
    if defect > sp.mean_tolerance(g):
        raise NonZeroSpaceMean(
            f"input has spatial mean {defect:.3e}; invert_drift_diffusion "
            "is only defined on zero-spatial-mean fields"
        )
    sym = _drift_diffusion_symbol(grid, freq).copy()
    j0 = (Ellipsis,) + (0,) * grid.d
    sym[j0] = 1.0
    out = g.coeff / sym[None]
    out[j0] = 0.0
    return SpaceTimeField(grid, out)


# --------------------------------------------------------------------------
# fixed point
# --------------------------------------------------------------------------

def fixed_point_map(
    U: SpaceTimeField, forcing: ForcingSpec, freq: FrequencySpec
) -> SpaceTimeField:
    """One application of the solver map on the mean-free, solenoidal part.

    Returns invert_drift_diffusion(P_L(eps f_perp - U . grad U)). The output
    is again divergence-free with zero spatial mean, so the ball of such
    fields is invariant and plain Picard iteration applies.
    """
    if not U.grid.same_geometry(forcing.fhat.grid):
        raise sp.GridMismatch("velocity iterate and forcing live on different grids")
    guard = 1e-8 * (1.0 + sp.h0_norm(U))
    if _space_mean_defect(U) > guard:
        raise NonZeroSpaceMean("fixed-point iterate has a spatial mean")
    if _div_defect(U) > guard * U.grid.Kx:
        raise ValueError("fixed-point iterate is not divergence-free")
    adv = sp.advect(U, U)
    W = forcing.epsilon * forcing.perp_coeff() - adv.coeff
    # the advection of a solenoidal field has zero spatial mean up to
    # roundoff; zero it exactly so the inversion precondition is sharp
    W[(Ellipsis,) + (0,) * U.grid.d] = 0.0
    projected = sp.leray_project(SpaceTimeField(U.grid, W))
    return invert_drift_diffusion(projected, freq)


def solve_torus(
    forcing: ForcingSpec, freq: FrequencySpec, cfg: SolverConfig
) -> TorusSolution:
    """Run the contraction iteration and assemble velocity plus pressure.

    Iterates U <- fixed_point_map(U) from U = 0 until the successive
    difference falls below tol_residual * max(1, ||U||), then adds the
    averaged-equation part, recovers the pressure and evaluates the
    assembled PDE residual (appended to residual_history).
    """
    grid = forcing.fhat.grid
    idx = cfg.idx or default_index(grid)
    eps = forcing.epsilon

    if forcing.zero_space_mean or eps == 0.0:
        U0 = SpaceTimeField.zeros(grid)
    else:
        if not freq.certified:
            raise ResonantMode(
                "forcing has a spatial-mean component; a certified diophantine "
                "frequency is required"
            )
        f0 = forcing.space_mean_slice()
        U0 = solve_averaged(
            SpaceTimeField(grid, eps * f0.coeff), freq
        )

    U = SpaceTimeField.zeros(grid)
    history: list[float] = []
    sup_ratio = 0.0
    max_div = 0.0
    iterations = 0
    converged = False
    for _ in range(cfg.max_iter):
        Unew = fixed_point_map(U, forcing, freq)
        iterations += 1
        diff = mixed_diff_norm(Unew, U, idx)
        history.append(diff)
        U = Unew
        max_div = max(max_div, _div_defect(U))
        norm_U = sp.mixed_norm(U, idx)
        if eps > 0.0:
            sup_ratio = max(sup_ratio, norm_U / eps)
        if diff <= cfg.tol_residual * max(1.0, norm_U):
            converged = True
            break
    if not converged:
        raise NoConvergence(
            f"no convergence after {iterations} iterations "
            f"(last difference {history[-1]:.3e})",
            iterations=iterations,
            residual_history=history,
        )

    full = SpaceTimeField(grid, U0.coeff + U.coeff)
    P = recover_pressure(full, forcing)
    residual = pde_residual(full, forcing, freq, idx)
    history.append(residual)

    contraction = None
    if cfg.contraction_probe:
        radius = 2.0 * max(sp.mixed_norm(full, idx), np.finfo(float).tiny)
        factors = contraction_probe(forcing, freq, idx, radius)
        contraction = float(factors.max())

    return TorusSolution(
        U=full,
        P=P,
        iterations=iterations,
        residual_history=history,
        norms=(sp.mixed_norm(full, idx), sp.mixed_norm(P, idx)),
        pde_residual=residual,
        cstar=sup_ratio if eps > 0.0 else float("nan"),
        idx=idx,
        contraction=contraction,
        max_div_defect=max_div,
    )


def mixed_diff_norm(a: SpaceTimeField, b: SpaceTimeField, idx: SobolevIndex) -> float:
    return sp.mixed_norm(SpaceTimeField(a.grid, a.coeff - b.coeff), idx)


def recover_pressure(U: SpaceTimeField, forcing: ForcingSpec) -> SpaceTimeField:
    """Zero-mean pressure from the divergence of the momentum balance.

    P = (-Lap)^{-1} div(U . grad U - eps f), mode-by-mode on j != 0.
    """
    adv = sp.advect(U, U)
    W = SpaceTimeField(
        U.grid, adv.coeff - forcing.epsilon * forcing.fhat.coeff
    )
    src = sp.divergence(W)
    return sp.inverse_laplacian(src)


def pde_residual(
    U: SpaceTimeField,
    forcing: ForcingSpec,
    freq: FrequencySpec,
    idx: SobolevIndex,
) -> float:
    """Norm of omega.d_phi U - Lap U + P_L(U.grad U) - eps P_L f at (sigma, s-2)."""
    lin = drift_diffusion_apply(U, freq)
    adv = sp.leray_project(sp.advect(U, U))
    f_proj = sp.leray_project(forcing.fhat)
    res = lin.coeff + adv.coeff - forcing.epsilon * f_proj.coeff
    ridx = SobolevIndex(idx.sigma, max(0.0, idx.s - 2.0))
    return sp.mixed_norm(SpaceTimeField(U.grid, res), ridx)


def momentum_residual(
    U: SpaceTimeField,
    P: SpaceTimeField,
    forcing: ForcingSpec,
    freq: FrequencySpec,
    idx: SobolevIndex,
) -> float:
    """Unprojected momentum residual including the pressure gradient."""
    lin = drift_diffusion_apply(U, freq)
    adv = sp.advect(U, U)
    gp = sp.gradient(P)
    res = lin.coeff + adv.coeff + gp.coeff - forcing.epsilon * forcing.fhat.coeff
    ridx = SobolevIndex(idx.sigma, max(0.0, idx.s - 2.0))
    return sp.mixed_norm(SpaceTimeField(U.grid, res), ridx)


def contraction_probe(
    forcing: ForcingSpec,
    freq: FrequencySpec,
    idx: SobolevIndex,
    radius: float,
    npairs: int = 50,
    seed: int = 20240801,
) -> np.ndarray:
    """Measured Lipschitz factors of the solver map over random pairs.

    Pairs are drawn divergence-free with zero spatial mean inside the ball of
    the given radius; the returned array holds one factor per pair.
    """
    grid = forcing.fhat.grid
    rng = np.random.default_rng(seed)
    factors = np.empty(npairs)
    for k in range(npairs):
        fields = []
        for _ in range(2):
            w = sp.random_torus_field(
                grid, rng, zero_space_mean=True, divergence_free=True
            )
            r = radius * rng.uniform(0.1, 1.0)
            fields.append(sp.scale_to_norm(w, r, idx))
        u1, u2 = fields
        img1 = fixed_point_map(u1, forcing, freq)
        img2 = fixed_point_map(u2, forcing, freq)
        num = mixed_diff_norm(img1, img2, idx)
        den = mixed_diff_norm(u1, u2, idx)
        factors[k] = num / den
    return factors
