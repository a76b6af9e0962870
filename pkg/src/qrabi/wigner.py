"""Boson, qutrit and joint qutrit-boson Wigner functions.

Kernels follow the displaced-parity construction ``Tr[rho D(2z) Pi]``. Each
boson mode contributes ``1/pi`` and the qutrit ``1/3``, so the joint function
of a qutrit and two modes carries ``1/(3 pi^2)``. Phase-space measure is
``dq dp`` with ``z = (q + i p)/sqrt(2)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from .operators import (
    OMEGA3,
    FockMode,
    HilbertSpace,
    Operator,
    QRabiError,
    Qutrit,
    StateVector,
    qudit_clock_shift,
)
from .states import (
    CatKind,
    DensityMatrix,
    cat_normalization,
    check_truncation,
)

SQRT3 = math.sqrt(3.0)
BATCH = 256


def displacement_elements(alphas, truncation: int) -> np.ndarray:
    """Exact Fock matrix elements ``<m|D(alpha)|n>``, ``m, n <= truncation``, for a batch of alphas.

    Uses ``<n+k|D|n> = g_n^k e^{ik arg alpha}`` with the normalized Laguerre
    functions ``g_n^k = sqrt(n!/(n+k)!) x^{k/2} e^{-x/2} L_n^k(x)``, ``x = |alpha|^2``,
    generated by their three-term recurrence in ``n``. The entries are those of
    the untruncated operator, not of ``expm`` of a truncated generator.
    """
    al = np.atleast_1d(np.asarray(alphas, dtype=complex))
    d = truncation + 1
    x = (np.abs(al) ** 2)[:, None]
    k = np.arange(d)[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        logx = np.log(x)
        g0 = np.where(x > 0, np.exp(0.5 * k * logx - 0.5 * x - 0.5 * gammaln(k + 1)), (k == 0) * 1.0)
    # g[:, n, k] for n + k <= truncation
    g = np.zeros((al.size, d, d))
    g[:, 0, :] = g0
    prev = np.zeros_like(g0)
    cur = g0
    for n in range(d - 1):
        nxt = ((2 * n + 1 + k - x) * cur - np.sqrt(n * (n + k)) * prev) / np.sqrt((n + 1) * (n + k + 1))
        g[:, n + 1, :] = nxt
        prev, cur = cur, nxt
    phase = np.exp(1j * np.angle(al))[:, None] ** k
    D = np.zeros((al.size, d, d), dtype=complex)
    idx = np.arange(d)
    for kk in range(d):
        n = idx[: d - kk]
        D[:, n + kk, n] = g[:, n, kk] * phase[:, kk:kk + 1]
        if kk:
            D[:, n, n + kk] = g[:, n, kk] * ((-1) ** kk * phase[:, kk:kk + 1].conj())
    return D


def displacement(z: complex, truncation: int) -> Operator:
    """``D(z) = exp(z a^dag - z* a)`` restricted to the first ``truncation + 1`` Fock states."""
    check_truncation(z, truncation)
    space = HilbertSpace.modes(truncation, 1)
    return Operator(space, displacement_elements([z], truncation)[0])


def boson_parity(truncation: int) -> Operator:
    n = np.arange(truncation + 1)
    return Operator(HilbertSpace.modes(truncation, 1), np.diag((-1.0) ** n), hermitian=True)


def _qutrit_kernel(a: int, b: int) -> np.ndarray:
    """``D_Q(2a, 2b) Pi_Q`` as a dense 3x3 array."""
    return qutrit_displacement(2 * a, 2 * b).toarray() @ qutrit_parity().toarray()


def qutrit_displacement(a: int, b: int) -> Operator:
    """``D_Q(a, b) = w^{-ab/2} Z^b X^a`` with ``1/2`` taken as the inverse of 2 mod 3."""
    a, b = int(a) % 3, int(b) % 3
    Z, X = qudit_clock_shift(3)
    M = np.linalg.matrix_power(Z.toarray(), b) @ np.linalg.matrix_power(X.toarray(), a)
    return Operator(Z.space, OMEGA3 ** ((-a * b * 2) % 3) * M)


def qutrit_parity() -> Operator:
    """``Pi_Q |i> = |-i mod 3>``."""
    P = np.zeros((3, 3))
    for i in range(3):
        P[(-i) % 3, i] = 1
    return Operator(HilbertSpace((Qutrit(),)), P, hermitian=True)


@dataclass(frozen=True)
class PhasePoint:
    z1: complex = 0j
    z2: Optional[complex] = None
    a: Optional[int] = None
    b: Optional[int] = None


class SectionKind(str, enum.Enum):
    DIAG = "DIAG"
    FRINGE = "FRINGE"


@dataclass(frozen=True)
class PlaneSection:
    """Two-dimensional cut ``w -> (z1, z2)`` through the two-mode phase space.

    ``DIAG`` maps ``w -> (s w, s w*)``; the default ``s = 1/sqrt(2)`` puts every
    Gaussian of the Z3 cat on the plane, ``s = 1`` is the wider cut used for
    ground states. ``FRINGE`` depends on the qutrit coordinate ``b`` and
    exposes the interference fringes.
    """

    kind: SectionKind = SectionKind.DIAG
    b: int = 0
    scale: float = 1 / math.sqrt(2)

    def __post_init__(self):
        object.__setattr__(self, "kind", SectionKind(str(getattr(self.kind, "value", self.kind)).upper()))

    def map(self, w) -> Tuple[np.ndarray, np.ndarray]:
        w = np.asarray(w, dtype=complex)
        if self.kind is SectionKind.DIAG:
            return self.scale * w, self.scale * w.conj()
        b = self.b % 3
        t1 = math.pi / 4 + 2 * math.pi * b / 3
        t2 = math.pi / 4 - 2 * math.pi * b / 3
        z1 = OMEGA3 ** b * (math.cos(t1) * w.real + math.sin(t1) * w.imag)
        z2 = OMEGA3 ** (-b) * (math.cos(t2) * w.real - math.sin(t2) * w.imag)
        return self.scale * math.sqrt(2) * z1, self.scale * math.sqrt(2) * z2

    def describe(self) -> str:
        s = f"{self.scale:.12g}"
        if self.kind is SectionKind.DIAG:
            return f"DIAG: z1 = {s}*w, z2 = {s}*conj(w)"
        return (f"FRINGE(b={self.b % 3}): z1 = {s}*sqrt(2)*w^b*(cos(pi/4+2pi b/3) Re w + sin(pi/4+2pi b/3) Im w), "
                f"z2 = {s}*sqrt(2)*w^-b*(cos(pi/4-2pi b/3) Re w - sin(pi/4-2pi b/3) Im w)")


def _layout(space: HilbertSpace):
    f = space.factors
    has_q = isinstance(f[0], Qutrit)
    modes = f[1:] if has_q else f
    if not all(isinstance(m, FockMode) for m in modes) or (len(modes) > 2) or (not has_q and not modes):
        raise QRabiError(f"unsupported space for Wigner evaluation: {f}")
    if any(isinstance(m, Qutrit) for m in modes):
        raise QRabiError("the qutrit must be the first factor")
    return has_q, [m.truncation for m in modes]


def _as_density(rho) -> DensityMatrix:
    if isinstance(rho, StateVector):
        return DensityMatrix.pure(rho)
    if isinstance(rho, DensityMatrix):
        return rho
    raise QRabiError(f"expected StateVector or DensityMatrix, got {type(rho).__name__}")


def _reduced_traces(rho: DensityMatrix, zs: Sequence[np.ndarray]) -> np.ndarray:
    """``G[p, q, q'] = sum_i p_i <v_i^{(q)}| K_boson(p) |v_i^{(q')}>`` for every point ``p``."""
    has_q, truncs = _layout(rho.space)
    nq = 3 if has_q else 1
    r = len(rho.weights)
    T = rho.vectors.T.reshape((r, nq) + tuple(t + 1 for t in truncs))
    npts = len(zs[0]) if zs else 1
    out = np.empty((npts, nq, nq), dtype=complex)
    for start in range(0, npts, BATCH):
        stop = min(start + BATCH, npts)
        U = np.broadcast_to(T, (stop - start,) + T.shape)
        for m, (z, N) in enumerate(zip(zs, truncs)):
            K = displacement_elements(2 * np.asarray(z[start:stop]), N) * ((-1.0) ** np.arange(N + 1))
            axis = 3 + m
            U = np.moveaxis(U, axis, -1)
            Kt = np.swapaxes(K, 1, 2).reshape((stop - start,) + (1,) * (U.ndim - 3) + (N + 1, N + 1))
            U = np.moveaxis(U @ Kt, -1, axis)
        conj = T.conj().reshape(r, nq, -1)
        out[start:stop] = np.einsum("i,iqx,piwx->pqw", rho.weights, conj,
                                    U.reshape(stop - start, r, nq, -1))
    return out


def _finish(vals: np.ndarray, prefactor: float) -> np.ndarray:
    vals = prefactor * vals
    worst = float(np.max(np.abs(vals.imag))) if vals.size else 0.0
    if worst > 1e-10:
        raise QRabiError(f"Wigner trace has imaginary residue {worst:.3e}")
    return vals.real


def _prefactor(space: HilbertSpace) -> float:
    has_q, truncs = _layout(space)
    return (1 / 3 if has_q else 1.0) / math.pi ** len(truncs)


def wigner_values(rho, z1=None, z2=None, qutrit_coords: Iterable[Tuple[int, int]] = ((0, 0),)) -> np.ndarray:
    """Vectorized Wigner function: array of shape ``(len(qutrit_coords), n_points)``.

    Pure-boson spaces ignore ``qutrit_coords`` (one row is returned).
    """
    rho = _as_density(rho)
    has_q, truncs = _layout(rho.space)
    zs = [np.atleast_1d(np.asarray(z, dtype=complex)) for z in (z1, z2)[:len(truncs)]]
    if any(z is None for z in (z1, z2)[:len(truncs)]):
        raise QRabiError(f"{len(truncs)} boson coordinate(s) required")
    if len(zs) == 2 and zs[0].shape != zs[1].shape:
        raise QRabiError("z1 and z2 must have the same shape")
    if truncs:
        G = _reduced_traces(rho, zs)
    else:
        G = rho.matrix[None]
    pre = _prefactor(rho.space)
    if not has_q:
        return _finish(G[:, 0, 0][None], pre)
    coords = list(qutrit_coords)
    KQ = np.array([_qutrit_kernel(a, b) for a, b in coords])
    vals = np.einsum("cqw,pqw->cp", KQ, G)
    return _finish(vals, pre)


def wigner_value(rho, point: PhasePoint) -> float:
    rho = _as_density(rho)
    has_q, truncs = _layout(rho.space)
    if has_q != (point.a is not None and point.b is not None):
        raise QRabiError("qutrit coordinates (a, b) must be given exactly when the state has a qutrit")
    if (len(truncs) == 2) != (point.z2 is not None):
        raise QRabiError("z2 must be given exactly for two-mode states")
    coords = [(point.a, point.b)] if has_q else [(0, 0)]
    z2 = [point.z2] if point.z2 is not None else None
    return float(wigner_values(rho, [point.z1], z2, coords)[0, 0])


def qutrit_wigner(rho_q) -> np.ndarray:
    """3x3 table ``W_Q(q, p)`` of a qutrit density matrix (rows ``q``, columns ``p``)."""
    rho_q = np.asarray(rho_q, dtype=complex)
    vals = np.array([[np.trace(rho_q @ _qutrit_kernel(q, p)) for p in range(3)] for q in range(3)]) / 3
    return _finish(vals, 1.0)


class CatWignerKind(str, enum.Enum):
    Z2_1B = "Z2_1B"
    Z3_2B = "Z3_2B"
    Z3_Q2B = "Z3_Q2B"


def z2_cat_normalization(alpha: complex, sign: int) -> float:
    return 2 * (1 + sign * math.exp(-2 * abs(alpha) ** 2))


def analytic_cat_wigner(kind, k_or_sign: int, alpha: complex, point: PhasePoint,
                        form: str = "printed") -> float:
    """Closed-form Wigner functions of the cat states.

    ``Z2_1B``: even/odd one-mode cat ``(|a> + s|-a>)``, ``k_or_sign = +1/-1``.
    ``Z3_2B``: two-mode Z3 cat, sector ``k``, normalized with the exact ``N_3``.
    ``Z3_Q2B``: joint qutrit-two-mode cat, sector ``k``, prefactor ``1/(9 pi^2)``.

    ``form="printed"`` evaluates the published closed forms. For the two Z3
    kinds these disagree with the definitional Wigner function in the
    interference term; ``form="corrected"`` gives the exact expressions
    (interference term doubled, Z3_2B cosine rotated by ``w^{-b}``, Z3_Q2B
    phase ``2 pi (k - a)/3``), which agree with the trace formula to rounding.
    """
    kind = CatWignerKind(str(getattr(kind, "value", kind)).upper())
    if form not in ("printed", "corrected"):
        raise QRabiError(f"form must be 'printed' or 'corrected', got {form!r}")
    fixed = form == "corrected"
    al = complex(alpha)
    z1 = complex(point.z1)
    w = OMEGA3
    if kind is CatWignerKind.Z2_1B:
        if point.z2 is not None or point.a is not None:
            raise QRabiError("Z2_1B takes a single-mode point")
        s = 1 if k_or_sign >= 0 else -1
        val = (math.exp(-2 * abs(al - z1) ** 2) + math.exp(-2 * abs(al + z1) ** 2)
               + s * 2 * math.exp(-2 * abs(z1) ** 2) * math.cos(4 * (al * z1.conjugate()).imag))
        return val / (math.pi * z2_cat_normalization(al, s))
    if point.z2 is None:
        raise QRabiError(f"{kind.value} needs a two-mode point")
    z2 = complex(point.z2)
    k = int(k_or_sign) % 3
    cross = 2.0 if fixed else 1.0
    if kind is CatWignerKind.Z3_2B:
        if point.a is not None:
            raise QRabiError("Z3_2B takes a boson-only point")
        tot = 0.0
        for b in range(3):
            tot += math.exp(-2 * abs(al - w ** b * z1) ** 2 - 2 * abs(al - w ** (-b) * z2) ** 2)
            u, v = (w ** (-b), w ** b) if fixed else (w ** b, w ** (-b))
            tot += cross * (math.exp(-abs(al + 2 * w ** b * z1) ** 2 / 2 - abs(al + 2 * w ** (-b) * z2) ** 2 / 2)
                            * math.cos(2 * SQRT3 * (al * (u * z1.conjugate() - v * z2.conjugate())).real
                                       + 2 * math.pi * k / 3))
        return tot / (math.pi ** 2 * cat_normalization(CatKind.B2, k, al))
    if point.a is None or point.b is None:
        raise QRabiError("Z3_Q2B needs qutrit coordinates (a, b)")
    a, b = point.a % 3, point.b % 3
    phase = (k - a) if fixed else (a + k)
    val = (math.exp(-2 * abs(al - w ** (-b) * z1) ** 2 - 2 * abs(al - w ** b * z2) ** 2)
           + cross * math.exp(-abs(al + 2 * w ** (-b) * z1) ** 2 / 2 - abs(al + 2 * w ** b * z2) ** 2 / 2)
           * math.cos(2 * SQRT3 * (al * (w ** b * z1.conjugate() - w ** (-b) * z2.conjugate())).real
                      + 2 * math.pi * phase / 3))
    return val / (9 * math.pi ** 2)


def calibration_constant(analytic, numeric) -> float:
    """Least-squares global factor ``c`` minimizing ``|c * analytic - numeric|``."""
    x = np.asarray(analytic, dtype=float)
    y = np.asarray(numeric, dtype=float)
    den = float(x @ x)
    if den == 0:
        raise QRabiError("analytic values vanish identically")
    return float(x @ y) / den


def cat_blob_centers(alpha: complex, b: int) -> dict:
    """Centers ``(z1, z2)`` of the two Gaussians of the ``(a, b)`` panel of the joint Z3 cat."""
    w = OMEGA3
    al = complex(alpha)
    return {
        "corner": (w ** b * al, w ** (-b) * al),
        "interference": (-w ** b * al / 2, -w ** (-b) * al / 2),
    }


@dataclass
class WignerGrid:
    section: PlaneSection
    w_samples: np.ndarray
    values: np.ndarray
    qutrit_coords: Optional[Tuple[int, int]]
    system: str
    extent: float = 0.0

    def argmax_w(self) -> complex:
        i = np.unravel_index(np.argmax(self.values), self.values.shape)
        return complex(self.w_samples[i])


def grid_samples(extent: float, resolution: int) -> np.ndarray:
    if resolution < 2:
        raise QRabiError(f"resolution must be >= 2, got {resolution}")
    if not extent > 0:
        raise QRabiError(f"extent must be > 0, got {extent}")
    axis = np.linspace(-extent, extent, resolution)
    return axis[None, :] + 1j * axis[:, None]


def wigner_panels(rho, section: PlaneSection, extent: float, resolution: int,
                  coords: Sequence[Tuple[int, int]]) -> List[WignerGrid]:
    """Grids for several qutrit coordinates sharing one boson section (kernels reused)."""
    rho = _as_density(rho)
    has_q, truncs = _layout(rho.space)
    if len(truncs) != 2:
        raise QRabiError("plane sections are defined for two-mode states")
    W = grid_samples(extent, resolution)
    z1, z2 = section.map(W.ravel())
    vals = wigner_values(rho, z1, z2, coords if has_q else [(0, 0)])
    system = "Q2B" if has_q else "2B"
    return [WignerGrid(section, W, v.reshape(W.shape), c if has_q else None, system, extent)
            for c, v in zip(coords if has_q else [None], vals)]


def wigner_grid(rho, section: PlaneSection, extent: float, resolution: int,
                qutrit_coords: Optional[Tuple[int, int]] = None) -> WignerGrid:
    coords = [qutrit_coords] if qutrit_coords is not None else [(0, 0)]
    return wigner_panels(rho, section, extent, resolution, coords)[0]
