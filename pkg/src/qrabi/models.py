"""Hamiltonians of the Z3 Rabi family, their symmetry generators and sectors.

Conventions: the qutrit is factor 0, boson modes follow. ``Z = diag(1, w, w^2)``
and ``X|j> = |j+1 mod 3>``. The one-mode interaction is ``-lam (a^dag X^dag + a X)``,
i.e. the 3x3 block form with ``-lam a^dag`` right of the diagonal, which is the
form that commutes with ``exp(2 pi i a^dag a / 3) Z``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .operators import (
    OMEGA3,
    FockMode,
    HilbertSpace,
    Operator,
    QRabiError,
    Qutrit,
    StateVector,
    embed,
    fock_annihilation,
    lowest_eigh,
    number_operator,
    qudit_clock_shift,
)


class ModelId(str, enum.Enum):
    R1 = "R1"
    R2 = "R2"
    R2P = "R2P"
    ALT = "ALT"

    @property
    def n_modes(self) -> int:
        return 1 if self is ModelId.R1 else 2

    @classmethod
    def parse(cls, value) -> "ModelId":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise QRabiError(f"unknown model {value!r}; expected one of {[m.value for m in cls]}") from None


@dataclass(frozen=True)
class ModelParams:
    """Boson frequency, magnetic amplitude and phase, coupling."""

    omega: float = 1.0
    b_field: float = 0.1
    phi: float = 7 * math.pi / 6
    lam: float = 0.0

    def __post_init__(self):
        for name in ("omega", "b_field", "phi", "lam"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise QRabiError(f"{name} must be finite, got {v!r}")
        if self.omega <= 0:
            raise QRabiError(f"omega must be > 0, got {self.omega}")
        if self.b_field < 0:
            raise QRabiError(f"b_field must be >= 0, got {self.b_field}")
        if self.lam < 0:
            raise QRabiError(f"lam must be >= 0, got {self.lam}")

    def replace(self, **changes) -> "ModelParams":
        return ModelParams(**{**self.__dict__, **changes})

    @property
    def alpha(self) -> float:
        """Coherent amplitude ``lam/omega`` of the deep-strong-coupling cat states."""
        return self.lam / self.omega


def model_space(model, truncation: int) -> HilbertSpace:
    return HilbertSpace.qutrit_modes(truncation, ModelId.parse(model).n_modes)


def _check_space(model: ModelId, space: HilbertSpace):
    f = space.factors
    ok = (len(f) == 1 + model.n_modes and isinstance(f[0], Qutrit)
          and all(isinstance(x, FockMode) for x in f[1:]))
    if not ok:
        raise QRabiError(f"model {model.value} needs qutrit + {model.n_modes} Fock mode(s), got {f}")


def qutrit_ops(space: HilbertSpace) -> Tuple[Operator, Operator]:
    Z, X = qudit_clock_shift(3)
    return embed(Z, space, 0), embed(X, space, 0)


def magnetic_term(space: HilbertSpace, b_field: float, phi: float) -> Operator:
    Z, _ = qutrit_ops(space)
    return Operator(space, b_field * (np.exp(1j * phi) * Z.matrix + np.exp(-1j * phi) * Z.matrix.getH()),
                    hermitian=True)


def build_hamiltonian(model, params: ModelParams, space: HilbertSpace) -> Operator:
    model = ModelId.parse(model)
    _check_space(model, space)
    Om, lam = params.omega, params.lam
    _, X = qutrit_ops(space)
    X, Xd = X.matrix, X.matrix.getH()
    a = [fock_annihilation(space, s).matrix for s in space.fock_slots]
    ad = [m.getH() for m in a]
    H = Om * sum(number_operator(space, s).matrix for s in space.fock_slots)
    H = H + magnetic_term(space, params.b_field, params.phi).matrix
    if model is ModelId.R1:
        H = H - lam * (ad[0] @ Xd + a[0] @ X)
    elif model is ModelId.R2:
        H = H - lam * (a[0] + ad[1]) @ X - lam * (ad[0] + a[1]) @ Xd
    elif model is ModelId.R2P:
        x1 = (a[0] + ad[0]) / math.sqrt(2)
        x2 = (a[1] + ad[1]) / math.sqrt(2)
        H = H - lam * (x1 + 1j * x2) @ X - lam * (x1 - 1j * x2) @ Xd
    else:
        H = H - lam * ((ad[0] + ad[1]) @ Xd + (a[0] + a[1]) @ X)
    H = 0.5 * (H + H.getH())
    return Operator(space, H, hermitian=True)


def rotation_generator(space: HilbertSpace) -> Operator:
    """``x1 p2 - x2 p1 = i (a1 a2^dag - a1^dag a2)`` on the two boson modes of ``space``."""
    s1, s2 = space.fock_slots[:2]
    a1, a2 = fock_annihilation(space, s1).matrix, fock_annihilation(space, s2).matrix
    G = 1j * (a1 @ a2.getH() - a1.getH() @ a2)
    return Operator(space, G, hermitian=True)


@lru_cache(maxsize=8)
def _rotation_unitary(truncation: int) -> sp.csr_matrix:
    # The generator conserves n1 + n2, so it is exponentiated one shell at a time.
    # Complete shells (n1 + n2 <= truncation) have integer spectra; on the
    # clipped shells above them the eigenvalues are rounded to integers so the
    # result stays an exact order-3 unitary.
    bos = HilbertSpace.modes(truncation, 2)
    G = rotation_generator(bos).matrix.tocsr()
    total = bos.occupations(0) + bos.occupations(1)
    U = sp.lil_matrix((bos.dim, bos.dim), dtype=complex)
    for n in range(2 * truncation + 1):
        idx = np.flatnonzero(total == n)
        block = G[idx][:, idx].toarray()
        w, v = np.linalg.eigh(block)
        if n > truncation:
            w = np.rint(w)
        # R2P generator sign: exp(-2 pi i/3 (x1 p2 - x2 p1)) pairs with Z for the
        # coupling (x1 + i x2) X as written.
        Ub = (v * np.exp(-2j * np.pi / 3 * w)) @ v.conj().T
        U[np.ix_(idx, idx)] = Ub
    return U.tocsr()


def build_parity(model, space: HilbertSpace) -> Operator:
    """Z3 symmetry generator of ``model``: a boson phase or rotation times the clock matrix."""
    model = ModelId.parse(model)
    _check_space(model, space)
    Z, _ = qutrit_ops(space)
    slots = space.fock_slots
    if model is ModelId.R2P:
        trunc = space.factors[slots[0]].truncation
        if space.factors[slots[1]].truncation != trunc:
            raise QRabiError("R2P parity needs equal truncations on both modes")
        U = sp.kron(sp.identity(3, format="csr"), _rotation_unitary(trunc))
        return Operator(space, (U @ Z.matrix).tocsr())
    if model is ModelId.R1:
        charge = space.occupations(slots[0])
    elif model is ModelId.R2:
        charge = space.occupations(slots[0]) - space.occupations(slots[1])
    else:
        charge = space.occupations(slots[0]) + space.occupations(slots[1])
    phase = np.exp(2j * np.pi / 3 * charge)
    return Operator(space, sp.diags(phase) @ Z.matrix)


def _is_order3(P: Operator, tol: float = 1e-10) -> bool:
    P3 = P.matrix @ P.matrix @ P.matrix
    diff = P3 - sp.identity(P.space.dim, format="csr")
    return (abs(diff).max() if diff.nnz else 0.0) <= tol


def sector_projector(parity: Operator, k: int) -> Operator:
    """``P_k = (1/3) sum_j w^{-kj} parity^j`` onto the eigenspace with eigenvalue ``w^k``."""
    if k not in (0, 1, 2):
        raise QRabiError(f"sector index must be 0, 1 or 2, got {k!r}")
    if not _is_order3(parity):
        raise QRabiError("parity operator is not of order 3")
    I = sp.identity(parity.space.dim, format="csr", dtype=complex)
    P1 = parity.matrix
    P2 = P1 @ P1
    Pk = (I + OMEGA3 ** (-k) * P1 + OMEGA3 ** (-2 * k) * P2) / 3.0
    Pk.data[np.abs(Pk.data) < 1e-15] = 0
    Pk.eliminate_zeros()
    return Operator(parity.space, Pk, hermitian=True)


def sector_indices(parity: Operator, k: int) -> np.ndarray:
    """Basis indices of sector ``k`` for a parity that is diagonal in the product basis."""
    m = parity.matrix
    off = m - sp.diags(m.diagonal())
    if off.nnz and abs(off).max() > 1e-12:
        raise QRabiError("sector_indices needs a diagonal parity operator")
    d = m.diagonal()
    return np.flatnonzero(np.abs(d - OMEGA3 ** k) < 1e-9)


def sector_eigenpairs(H: Operator, parity: Operator, k: int, count: int,
                      tol: float = 1e-10) -> List[Tuple[float, StateVector]]:
    """Lowest eigenpairs of ``H`` inside sector ``k``, embedded back into the full space."""
    idx = sector_indices(parity, k)
    count = min(count, len(idx))
    w, v = lowest_eigh(H.matrix[idx][:, idx], count, tol)
    out = []
    for e, col in zip(w, v.T):
        full = np.zeros(H.space.dim, dtype=complex)
        full[idx] = col
        out.append((float(e), StateVector.normalized(H.space, full)))
    return out


def build_transformed_hamiltonian(model, params: ModelParams, k: int, truncation: int) -> Operator:
    """Sector-``k`` Hamiltonian in the dressed-boson frame, on pure Fock space.

    One mode: ``Om (b^dag - lam/Om)(b - lam/Om) - lam^2/Om + 2B cos[2 pi/3 (b^dag b - k) - phi]``.
    Two modes: the same shifted oscillator on each mode, with the cosine
    argument built from ``L3 = n1 - n2``.
    """
    model = ModelId.parse(model)
    if model not in (ModelId.R1, ModelId.R2):
        raise QRabiError(f"transformed Hamiltonian is defined for R1 and R2, not {model.value}")
    if k not in (0, 1, 2):
        raise QRabiError(f"sector index must be 0, 1 or 2, got {k!r}")
    Om, lam, B, phi = params.omega, params.lam, params.b_field, params.phi
    space = HilbertSpace.modes(truncation, model.n_modes)
    n = [space.occupations(s) for s in range(model.n_modes)]
    charge = n[0] if model is ModelId.R1 else n[0] - n[1]
    diag = Om * sum(n) + 2 * B * np.cos(2 * np.pi / 3 * (charge - k) - phi)
    H = sp.diags(diag.astype(complex))
    for s in range(model.n_modes):
        b = fock_annihilation(space, s).matrix
        H = H - lam * (b + b.getH())
    return Operator(space, H.tocsr(), hermitian=True)


def magnetic_perturbation(model, params: ModelParams, k: int, truncation: int) -> Operator:
    """The Fock-diagonal cosine term alone (the first-order perturbation in sector ``k``)."""
    model = ModelId.parse(model)
    zero = params.replace(lam=0.0, omega=params.omega)
    H = build_transformed_hamiltonian(model, zero, k, truncation)
    space = H.space
    nsum = sum(space.occupations(s) for s in range(model.n_modes))
    return Operator(space, H.matrix - sp.diags(params.omega * nsum.astype(complex)), hermitian=True)


def su2_generators(space: HilbertSpace) -> Tuple[Operator, Operator, Operator]:
    """Schwinger generators ``L1 = a1^dag a2 + h.c.``, ``L2 = -i a1^dag a2 + h.c.``, ``L3 = n1 - n2``.

    The sign of ``L2`` makes ``[L1, L2] = 2i L3``; the opposite sign gives ``-2i L3``.
    """
    slots = space.fock_slots
    if len(slots) != 2 or len(space.factors) != 2:
        raise QRabiError("su2_generators needs a space made of exactly two Fock modes")
    a1, a2 = (fock_annihilation(space, s).matrix for s in slots)
    hop = a1.getH() @ a2
    L1 = Operator(space, hop + hop.getH(), hermitian=True)
    L2 = Operator(space, -1j * hop + 1j * hop.getH(), hermitian=True)
    L3 = Operator(space, a1.getH() @ a1 - a2.getH() @ a2, hermitian=True)
    return L1, L2, L3


def oscillator_2d(space: HilbertSpace, omega: float = 1.0) -> Operator:
    """``Om (n1 + n2 + 1)`` on a two-mode Fock space."""
    s1, s2 = space.fock_slots
    n = space.occupations(s1) + space.occupations(s2) + 1
    return Operator(space, sp.diags(omega * n.astype(complex)), hermitian=True)


def rotation_exponential_dense(truncation: int) -> np.ndarray:
    """Reference ``expm`` of the truncated rotation generator (used as a test oracle)."""
    bos = HilbertSpace.modes(truncation, 2)
    return scipy.linalg.expm(-2j * np.pi / 3 * rotation_generator(bos).toarray())
