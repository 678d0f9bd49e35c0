"""Independent brute-force oracles for cross-checking the spectral paths.

Everything here is written with plain python loops over explicit mode
indices and stays deliberately ignorant of how the package computes the same
quantities (FFT layouts, vectorized weights, dealiased transforms).
"""

import itertools
import math

import numpy as np

from torusns.spectral import SpaceField, SpaceTimeField, get_mode


def _space_modes(grid):
    return itertools.product(range(-grid.Kx, grid.Kx + 1), repeat=grid.d)


def _phi_modes(grid):
    return itertools.product(range(-grid.Kphi, grid.Kphi + 1), repeat=grid.nu)


def brute_space_norm(field: SpaceField, s: float) -> float:
    total = 0.0
    for j in _space_modes(field.grid):
        mag = math.sqrt(sum(x * x for x in j))
        bracket = max(1.0, mag)
        c = get_mode(field, j)
        total += bracket ** (2 * s) * float(np.sum(np.abs(c) ** 2))
    return math.sqrt(total)


def brute_mixed_norm(field: SpaceTimeField, sigma: float, s: float) -> float:
    total = 0.0
    for ell in _phi_modes(field.grid):
        lmag = max(1.0, math.sqrt(sum(x * x for x in ell)))
        for j in _space_modes(field.grid):
            jmag = max(1.0, math.sqrt(sum(x * x for x in j)))
            c = get_mode(field, j, ell=ell)
            total += lmag ** (2 * sigma) * jmag ** (2 * s) * float(
                np.sum(np.abs(c) ** 2)
            )
    return math.sqrt(total)


def conv_advect_space(u: SpaceField, v: SpaceField) -> np.ndarray:
    """Dense convolution of u . grad v truncated to the retained band."""
    g = u.grid
    out = np.zeros(v.coeff.shape, dtype=complex)
    modes = list(_space_modes(g))
    for j1 in modes:
        uc = get_mode(u, j1)
        if not np.any(uc):
            continue
        for j2 in modes:
            total = tuple(a + b for a, b in zip(j1, j2))
            if any(abs(m) > g.Kx for m in total):
                continue
            vc = get_mode(v, j2)
            dot = sum(uc[a] * j2[a] for a in range(g.d))
            idx = tuple(m % g.nx for m in total)
            out[(slice(None),) + idx] += 1j * dot * vc
    return out


def conv_advect_spacetime(u: SpaceTimeField, v: SpaceTimeField) -> np.ndarray:
    g = u.grid
    out = np.zeros(v.coeff.shape, dtype=complex)
    modes = [
        ell + j for ell in _phi_modes(g) for j in _space_modes(g)
    ]
    for m1 in modes:
        uc = u.coeff[(slice(None),) + _wrap(g, m1)]
        if not np.any(uc):
            continue
        for m2 in modes:
            total = tuple(a + b for a, b in zip(m1, m2))
            cuts = (g.Kphi,) * g.nu + (g.Kx,) * g.d
            if any(abs(m) > c for m, c in zip(total, cuts)):
                continue
            vc = v.coeff[(slice(None),) + _wrap(g, m2)]
            j2 = m2[g.nu :]
            dot = sum(uc[a] * j2[a] for a in range(g.d))
            out[(slice(None),) + _wrap(g, total)] += 1j * dot * vc
    return out


def _wrap(grid, mode):
    sizes = (grid.nphi,) * grid.nu + (grid.nx,) * grid.d
    return tuple(m % n for m, n in zip(mode, sizes))


def brute_diophantine_min(omega, Lcheck: int) -> float:
    """min |omega . ell| |ell|^nu over the cutoff box, by explicit loops."""
    omega = list(omega)
    nu = len(omega)
    best = math.inf
    for ell in itertools.product(range(-Lcheck, Lcheck + 1), repeat=nu):
        if all(x == 0 for x in ell):
            continue
        dot = abs(sum(w * l for w, l in zip(omega, ell)))
        norm = math.sqrt(sum(l * l for l in ell))
        best = min(best, dot * norm**nu)
    return best


def grid_scan_max(n: int, zeta: float, points: int = 200001) -> float:
    """Grid maximum of y^n e^{-zeta y} on [0, 10 n / zeta]."""
    y = np.linspace(0.0, 10.0 * n / zeta, points)
    return float(np.max(y**n * np.exp(-zeta * y)))


def heat_factor(j, t: float) -> float:
    return math.exp(-t * sum(x * x for x in j))
