"""Coherent states, Z3 cat states and the reference density matrices.

Normalization constants of superpositions are computed from the Gram matrix
of analytic coherent-state overlaps, so they are exact at every amplitude.
The truncated vectors are renormalized numerically afterwards.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from .operators import (
    OMEGA3,
    HilbertSpace,
    QRabiError,
    StateVector,
    fourier_state,
)


class CatKind(str, enum.Enum):
    QB1 = "QB1"
    Q2B = "Q2B"
    B2 = "B2"


class DensityKind(str, enum.Enum):
    Q2B_CAT = "Q2B_CAT"
    MIX = "MIX"
    PRODUCT_2B = "PRODUCT_2B"


def _parse(enum_cls, value):
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(str(value).upper())
    except ValueError:
        raise QRabiError(f"unknown kind {value!r}; expected one of {[m.value for m in enum_cls]}") from None


def required_truncation(alpha: complex) -> int:
    r = abs(alpha)
    return int(np.ceil(r * r + 8 * r + 10))


def check_truncation(alpha: complex, truncation: int):
    need = required_truncation(alpha)
    if truncation < need:
        raise QRabiError(
            f"truncation {truncation} too small for |alpha| = {abs(alpha):.6g}; need N_max >= {need}")


def coherent_amplitudes(alpha: complex, truncation: int) -> np.ndarray:
    """Unnormalized ``e^{-|a|^2/2} a^n / sqrt(n!)`` for ``n = 0..truncation`` (no guard)."""
    alpha = complex(alpha)
    n = np.arange(truncation + 1)
    out = np.zeros(truncation + 1, dtype=complex)
    if alpha == 0:
        out[0] = 1.0
        return out
    logmag = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(logmag + 1j * n * np.angle(alpha))


def coherent_overlap(beta: complex, gamma: complex) -> complex:
    """``<beta|gamma>`` for untruncated coherent states."""
    beta, gamma = complex(beta), complex(gamma)
    return np.exp(-0.5 * abs(beta) ** 2 - 0.5 * abs(gamma) ** 2 + beta.conjugate() * gamma)


def coherent_state(alpha: complex, truncation: int) -> StateVector:
    check_truncation(alpha, truncation)
    return StateVector.normalized(HilbertSpace.modes(truncation, 1), coherent_amplitudes(alpha, truncation))


@dataclass(frozen=True)
class _Component:
    """One product term ``coeff * |qutrit> (x) |beta_1> (x) ... (x) |beta_m>``."""

    coeff: complex
    qutrit: np.ndarray | None
    betas: Tuple[complex, ...]


def _components(kind: CatKind, k: int, alpha: complex) -> List[_Component]:
    w = OMEGA3
    if kind is CatKind.QB1:
        # Relabeled so that the term phases w^{-lk} give parity eigenvalue w^k.
        return [_Component(w ** (-l * k), fourier_state(3, l).amplitudes, (w ** l * alpha,))
                for l in range(3)]
    if kind is CatKind.Q2B:
        return [_Component(w ** (l * k), fourier_state(3, (-l) % 3).amplitudes,
                           (w ** (-l) * alpha, w ** l * alpha)) for l in range(3)]
    return [_Component(w ** (j * k), None, (w ** (-j) * alpha, w ** j * alpha)) for j in range(3)]


def gram_norm(components: Sequence[_Component]) -> float:
    """Squared norm of a superposition from analytic overlaps."""
    total = 0j
    for ci in components:
        for cj in components:
            ov = ci.coeff.conjugate() * cj.coeff
            if ci.qutrit is not None:
                ov *= np.vdot(ci.qutrit, cj.qutrit)
            for bi, bj in zip(ci.betas, cj.betas):
                ov *= coherent_overlap(bi, bj)
            total += ov
    return float(total.real)


def _vector(components: Sequence[_Component], truncation: int) -> np.ndarray:
    out = 0
    for c in components:
        t = c.coeff
        factors = ([c.qutrit] if c.qutrit is not None else []) + \
                  [coherent_amplitudes(b, truncation) for b in c.betas]
        vec = factors[0]
        for f in factors[1:]:
            vec = np.kron(vec, f)
        out = out + t * vec
    return np.asarray(out, dtype=complex)


def cat_space(kind, truncation: int) -> HilbertSpace:
    kind = _parse(CatKind, kind)
    if kind is CatKind.QB1:
        return HilbertSpace.qutrit_modes(truncation, 1)
    if kind is CatKind.Q2B:
        return HilbertSpace.qutrit_modes(truncation, 2)
    return HilbertSpace.modes(truncation, 2)


def cat_normalization(kind, k: int, alpha: complex) -> float:
    """Gram-matrix squared norm of the unnormalized cat superposition (e.g. ``N_3`` for ``B2``)."""
    kind = _parse(CatKind, kind)
    _check_k(k)
    return gram_norm(_components(kind, k, alpha))


def _check_k(k):
    if k not in (0, 1, 2):
        raise QRabiError(f"sector index must be 0, 1 or 2, got {k!r}")


def cat_state(kind, k: int, alpha: complex, truncation: int) -> StateVector:
    """Three-component Z3 cat state.

    ``QB1``: ``sum_l w^{-lk} |w^l a> |w^l>`` on qutrit (x) mode;
    ``Q2B``: ``sum_l w^{lk} |w^{-l} a> |w^l a> |w^{-l}>`` on qutrit (x) mode (x) mode;
    ``B2``: ``sum_j w^{jk} |w^{-j} a> |w^j a>`` on mode (x) mode. Qutrit kets are
    Fourier states. ``QB1`` and ``Q2B`` are eigenvectors of the R1 and R2
    parities with eigenvalue ``w^k``.
    """
    kind = _parse(CatKind, kind)
    _check_k(k)
    check_truncation(alpha, truncation)
    comps = _components(kind, k, alpha)
    vec = _vector(comps, truncation) / np.sqrt(gram_norm(comps))
    return StateVector.normalized(cat_space(kind, truncation), vec)


class DensityMatrix:
    """Density matrix held as a weighted ensemble ``sum_i p_i |v_i><v_i|``.

    The ensemble form keeps two-mode states at realistic truncations
    (dimension ~ 8000) out of dense storage; :attr:`matrix` materializes it.
    """

    def __init__(self, space: HilbertSpace, weights, vectors):
        w = np.asarray(weights, dtype=float).reshape(-1)
        V = np.asarray(vectors, dtype=complex)
        if V.ndim == 1:
            V = V[:, None]
        if V.shape != (space.dim, w.size):
            raise QRabiError(f"ensemble vectors of shape {V.shape} do not match {space.dim} x {w.size}")
        if np.any(w < 0):
            raise QRabiError("ensemble weights must be non-negative")
        norms = np.linalg.norm(V, axis=0)
        V = V / norms
        w = w / w.sum()
        self.space, self.weights, self.vectors = space, w, V
        if abs(self.trace() - 1) > 1e-10:
            raise QRabiError("density matrix trace deviates from 1")

    @classmethod
    def pure(cls, state: StateVector) -> "DensityMatrix":
        return cls(state.space, [1.0], state.amplitudes)

    @classmethod
    def from_matrix(cls, space: HilbertSpace, matrix, tol: float = 1e-10) -> "DensityMatrix":
        rho = np.asarray(matrix, dtype=complex)
        if abs(rho - rho.conj().T).max() > 1e-12:
            raise QRabiError("density matrix is not Hermitian")
        w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
        if w.min() < -tol:
            raise QRabiError(f"density matrix has negative eigenvalue {w.min():.3e}")
        keep = w > tol
        return cls(space, w[keep], v[:, keep])

    @property
    def matrix(self) -> np.ndarray:
        return (self.vectors * self.weights) @ self.vectors.conj().T

    def trace(self) -> float:
        return float(np.sum(self.weights * np.linalg.norm(self.vectors, axis=0) ** 2))

    def purity(self) -> float:
        G = self.vectors.conj().T @ self.vectors
        return float(np.real(np.einsum("i,j,ij,ij->", self.weights, self.weights, G, G.conj())))

    def eigenvalues(self) -> np.ndarray:
        """Nonzero spectrum, from the weighted Gram matrix of the ensemble."""
        s = np.sqrt(self.weights)
        G = (self.vectors * s).conj().T @ (self.vectors * s)
        return np.sort(np.linalg.eigvalsh(G))[::-1]

    def expect(self, op) -> complex:
        M = op.matrix if hasattr(op, "matrix") else op
        return complex(np.sum(self.weights * np.einsum("ij,ij->j", self.vectors.conj(), M @ self.vectors)))

    def qutrit_reduced(self) -> np.ndarray:
        """Trace out every boson mode; the qutrit must be factor 0."""
        if not self.space.qutrit_slots == [0]:
            raise QRabiError("qutrit_reduced needs the qutrit as factor 0")
        T = self.vectors.T.reshape(len(self.weights), 3, -1)
        return np.einsum("i,iqa,ira->qr", self.weights, T, T.conj())

    def trace_out_qutrit(self) -> "DensityMatrix":
        """Boson-only ensemble ``Tr_Q rho``; the qutrit must be factor 0."""
        if not self.space.qutrit_slots == [0]:
            raise QRabiError("trace_out_qutrit needs the qutrit as factor 0")
        rest = HilbertSpace(self.space.factors[1:])
        T = self.vectors.T.reshape(len(self.weights), 3, rest.dim)
        vecs, ws = [], []
        for p, t in zip(self.weights, T):
            for q in range(3):
                n2 = float(np.vdot(t[q], t[q]).real)
                if n2 > 1e-300:
                    vecs.append(t[q])
                    ws.append(p * n2)
        return DensityMatrix(rest, ws, np.array(vecs).T)


def reference_density(kind, k: int, alpha: complex, truncation: int) -> DensityMatrix:
    """Entangled cat, classical mixture, or unentangled two-boson cat on qutrit (x) mode (x) mode."""
    kind = _parse(DensityKind, kind)
    _check_k(k)
    check_truncation(alpha, truncation)
    space = HilbertSpace.qutrit_modes(truncation, 2)
    if kind is DensityKind.Q2B_CAT:
        return DensityMatrix.pure(cat_state(CatKind.Q2B, k, alpha, truncation))
    if kind is DensityKind.MIX:
        w = OMEGA3
        comps = [_Component(1.0, fourier_state(3, i).amplitudes, (w ** (-i) * alpha, w ** i * alpha))
                 for i in range(3)]
        vecs = np.array([_vector([c], truncation) for c in comps]).T
        return DensityMatrix(space, [1 / 3] * 3, vecs)
    boson = cat_state(CatKind.B2, k, alpha, truncation)
    vec = np.kron(fourier_state(3, 0).amplitudes, boson.amplitudes)
    return DensityMatrix(space, [1.0], vec)
