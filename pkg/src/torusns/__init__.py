"""Spectral solvers for quasi-periodically forced incompressible flow on tori.

The package constructs small-amplitude invariant tori of the forced
Navier-Stokes equation by a norm-controlled fixed-point iteration in
truncated Fourier space, and verifies their orbital and asymptotic stability
by evolving perturbations with exact heat-semigroup exponential integrators
and fitting the exponential decay rate.
"""

from .errors import (
    BlowUp,
    ConfigParse,
    EmptySeries,
    GridMismatch,
    InsufficientSamples,
    NegativeTime,
    NoConvergence,
    NonZeroMean,
    NonZeroSpaceMean,
    ResonantMode,
    SnapshotMismatch,
    StepTooLarge,
    TorusnsError,
)
from .spectral import (
    GridSpec,
    SobolevIndex,
    SpaceField,
    SpaceTimeField,
    advect,
    divergence,
    get_mode,
    gradient,
    hermitize,
    inverse_laplacian,
    leray_project,
    mean_projections,
    mixed_norm,
    random_space_field,
    random_torus_field,
    reality_defect,
    sample_torus,
    scale_to_norm,
    set_mode_pair,
    space_norm,
    wavenumbers,
)
from .stability import (
    DecaySeries,
    PerturbationState,
    SimConfig,
    duhamel_apply,
    evolve,
    fit_decay,
    heat_propagate,
    perturbation_rhs,
    power_decay_max,
    random_perturbation,
    recover_pressure_q,
    weighted_norm,
)
from .torus import (
    ForcingSpec,
    FrequencySpec,
    SolverConfig,
    TorusSolution,
    certify_diophantine,
    contraction_probe,
    default_index,
    fixed_point_map,
    invert_drift_diffusion,
    momentum_residual,
    pde_residual,
    recover_pressure,
    solve_averaged,
    solve_torus,
)

__version__ = "0.1.0"
