"""First-order magnetic-field corrections and exact-vs-perturbative sweeps."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from .models import (
    ModelId,
    ModelParams,
    build_hamiltonian,
    build_parity,
    model_space,
    sector_eigenpairs,
)
from .operators import OMEGA3, ConvergenceError, QRabiError


def _check_model(model) -> ModelId:
    model = ModelId.parse(model)
    if model not in (ModelId.R1, ModelId.R2):
        raise QRabiError(f"closed-form corrections exist for R1 and R2, not {model.value}")
    return model


def perturbative_correction(model, params: ModelParams, k: int) -> float:
    """Energy shift ``eps_k`` of the sector-``k`` cat state, first order in ``B``.

    One mode: ``2B exp(-3a^2/2) cos(2 pi k/3 + phi - sqrt(3) a^2/2)``;
    two modes: ``2B exp(-3a^2) cos(2 pi k/3 + phi)``; ``a = lam/omega``.
    """
    model = _check_model(model)
    if k not in (0, 1, 2):
        raise QRabiError(f"sector index must be 0, 1 or 2, got {k!r}")
    a2 = params.alpha ** 2
    B, phi = params.b_field, params.phi
    if model is ModelId.R1:
        return 2 * B * math.exp(-1.5 * a2) * math.cos(2 * math.pi * k / 3 + phi - math.sqrt(3) / 2 * a2)
    return 2 * B * math.exp(-3 * a2) * math.cos(2 * math.pi * k / 3 + phi)


def energy_offset(model, params: ModelParams) -> float:
    """``-m lam^2 / omega``, the common shift of the displaced-oscillator ground states."""
    return -ModelId.parse(model).n_modes * params.lam ** 2 / params.omega


def perturbative_energy(model, params: ModelParams, k: int) -> float:
    """Full first-order estimate ``eps_k - m lam^2/omega`` of the sector-``k`` level."""
    return perturbative_correction(model, params, k) + energy_offset(model, params)


def perturbative_triplet(model, params: ModelParams) -> np.ndarray:
    return np.array([perturbative_correction(model, params, k) for k in range(3)])


@dataclass
class SpectrumResult:
    """Exact and first-order spectra on a coupling grid.

    ``exact`` holds the ``count`` lowest offset-removed levels per point, sorted;
    ``exact_by_k`` the lowest offset-removed level of each parity sector;
    ``perturbative`` the three ``eps_k``. Failed points carry NaN rows and a
    message in ``failures``.
    """

    lambda_grid: np.ndarray
    exact: np.ndarray
    exact_by_k: np.ndarray
    perturbative: np.ndarray
    params: ModelParams
    model: ModelId
    truncation: int
    parity_labels: np.ndarray = None
    failures: Dict[int, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def deviation(self, mask=None) -> float:
        """Max ``|exact_by_k - eps_k|`` over the grid points selected by ``mask``."""
        d = np.abs(self.exact_by_k - self.perturbative)
        if mask is not None:
            d = d[np.asarray(mask)]
        return float(np.nanmax(d)) if d.size else 0.0


def _label(state, parity) -> int:
    """Sector index from the parity expectation (nearest cube root of unity)."""
    p = state.expect(parity)
    return int(np.argmin([abs(p - OMEGA3 ** k) for k in range(3)]))


def spectrum_sweep(model, params: ModelParams, lambda_grid: Sequence[float], count: int = 3,
                   truncation: int = 50, tol: float = 1e-10) -> SpectrumResult:
    """Exact low spectra (per parity sector) and first-order values along ``lambda_grid``."""
    model = _check_model(model)
    grid = np.asarray(lambda_grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise QRabiError("lambda grid is empty")
    if count < 3:
        raise QRabiError(f"count must be >= 3, got {count}")
    if not np.all(np.isfinite(grid)):
        raise QRabiError("lambda grid contains non-finite values")
    space = model_space(model, truncation)
    parity = build_parity(model, space)
    exact = np.full((grid.size, count), np.nan)
    by_k = np.full((grid.size, 3), np.nan)
    labels = np.full((grid.size, 3), -1)
    pert = np.zeros((grid.size, 3))
    failures = {}
    for i, lam in enumerate(grid):
        p = params.replace(lam=float(lam))
        pert[i] = perturbative_triplet(model, p)
        try:
            H = build_hamiltonian(model, p, space)
            levels = []
            for k in range(3):
                pairs = sector_eigenpairs(H, parity, k, count, tol)
                by_k[i, k] = pairs[0][0] - energy_offset(model, p)
                labels[i, k] = _label(pairs[0][1], parity)
                levels.extend(e for e, _ in pairs)
            exact[i] = np.sort(levels)[:count] - energy_offset(model, p)
        except (ConvergenceError, np.linalg.LinAlgError) as exc:
            failures[i] = f"lambda={lam:.12g}: {exc}"
    return SpectrumResult(grid, exact, by_k, pert, params, model, truncation, labels, failures)
