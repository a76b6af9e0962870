"""Hilbert spaces, sparse operators and the low-lying eigensolver.

Every composite space is an ordered product of factors. The index layout is
row-major over the factors in declared order, so the qutrit (when present)
is the slowest index.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

OMEGA3 = np.exp(2j * np.pi / 3)

DENSE_CUTOFF = 512


class QRabiError(ValueError):
    """Base class for invalid inputs raised by this package."""


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (achieved residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class Qutrit:
    dim: int = field(default=3, init=False)

    def __repr__(self) -> str:
        return "Qutrit()"


@dataclass(frozen=True)
class FockMode:
    truncation: int

    def __post_init__(self):
        if int(self.truncation) != self.truncation or self.truncation < 1:
            raise QRabiError(f"Fock truncation must be an integer >= 1, got {self.truncation!r}")

    @property
    def dim(self) -> int:
        return self.truncation + 1


@dataclass(frozen=True)
class Qudit:
    """Generic ``n``-level factor; only used for clock/shift matrices with ``n != 3``."""

    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise QRabiError(f"qudit dimension must be an integer >= 2, got {self.dim!r}")


Factor = Union[Qutrit, FockMode, Qudit]


@dataclass(frozen=True)
class HilbertSpace:
    factors: Tuple[Factor, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise QRabiError("a Hilbert space needs at least one factor")
        for f in self.factors:
            if not isinstance(f, (Qutrit, FockMode, Qudit)):
                raise QRabiError(f"unknown factor {f!r}")

    @classmethod
    def qutrit_modes(cls, truncation: int, n_modes: int) -> "HilbertSpace":
        return cls((Qutrit(),) + tuple(FockMode(truncation) for _ in range(n_modes)))

    @classmethod
    def modes(cls, truncation: int, n_modes: int) -> "HilbertSpace":
        return cls(tuple(FockMode(truncation) for _ in range(n_modes)))

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def fock_slots(self) -> List[int]:
        return [i for i, f in enumerate(self.factors) if isinstance(f, FockMode)]

    @property
    def qutrit_slots(self) -> List[int]:
        return [i for i, f in enumerate(self.factors) if isinstance(f, Qutrit)]

    def occupations(self, slot: int) -> np.ndarray:
        """Per-basis-state value of the local index at ``slot`` (Fock number or qutrit level)."""
        dims = self.dims
        grid = np.arange(dims[slot])
        before = int(np.prod(dims[:slot]))
        after = int(np.prod(dims[slot + 1:]))
        return np.tile(np.repeat(grid, after), before)

    def below_boundary(self) -> np.ndarray:
        """Mask of basis states where every mode occupation is below its truncation."""
        mask = np.ones(self.dim, dtype=bool)
        for s in self.fock_slots:
            mask &= self.occupations(s) < self.factors[s].truncation
        return mask


class Operator:
    """Sparse square matrix bound to a :class:`HilbertSpace`.

    Instances are treated as immutable; arithmetic returns new operators.
    """

    __slots__ = ("space", "matrix", "hermitian")

    def __init__(self, space: HilbertSpace, matrix, hermitian: bool = False):
        m = sp.csr_matrix(matrix, dtype=complex)
        if m.shape != (space.dim, space.dim):
            raise QRabiError(f"matrix shape {m.shape} does not match space dimension {space.dim}")
        if hermitian:
            scale = abs(m).max() if m.nnz else 0.0
            if m.nnz and abs(m - m.getH()).max() > 1e-12 * max(scale, 1e-300):
                raise QRabiError("operator flagged Hermitian but M != M^dagger")
        self.space = space
        self.matrix = m
        self.hermitian = bool(hermitian)

    @property
    def shape(self):
        return self.matrix.shape

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.getH().tocsr(), self.hermitian)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def norm(self) -> float:
        return float(abs(self.matrix).max()) if self.matrix.nnz else 0.0

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        diff = self.matrix - self.matrix.getH()
        return (abs(diff).max() if diff.nnz else 0.0) <= rtol * max(self.norm(), 1e-300)

    def _check(self, other: "Operator"):
        if other.space != self.space:
            raise QRabiError("operators act on different spaces")

    def __add__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.space, self.matrix + other.matrix, self.hermitian and other.hermitian)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.space, self.matrix - other.matrix, self.hermitian and other.hermitian)

    def __mul__(self, c) -> "Operator":
        c = complex(c)
        return Operator(self.space, self.matrix * c, self.hermitian and c.imag == 0)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return self * -1

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.space, self.matrix @ other.matrix)
        return self.matrix @ np.asarray(other)

    def __repr__(self) -> str:
        return f"Operator(dims={self.space.dims}, nnz={self.matrix.nnz}, hermitian={self.hermitian})"


def commutator(A: Operator, B: Operator) -> Operator:
    return A @ B - B @ A


@dataclass(frozen=True)
class StateVector:
    space: HilbertSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.space.dim:
            raise QRabiError(f"state has {amps.size} amplitudes, space dimension is {self.space.dim}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, space: HilbertSpace, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        nrm = np.linalg.norm(amps)
        if nrm == 0:
            raise QRabiError("cannot normalize the zero vector")
        return cls(space, amps / nrm)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def expect(self, op: Operator) -> complex:
        return complex(np.vdot(self.amplitudes, op.matrix @ self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.space.dims)


def _factor(space: HilbertSpace, index: int, kind) -> Factor:
    if not 0 <= index < len(space.factors):
        raise QRabiError(f"factor index {index} out of range for {len(space.factors)} factors")
    f = space.factors[index]
    if not isinstance(f, kind):
        raise QRabiError(f"factor {index} is {f!r}, expected {kind.__name__}")
    return f


def annihilation_matrix(truncation: int) -> sp.csr_matrix:
    n = np.arange(1, truncation + 1)
    return sp.diags(np.sqrt(n).astype(complex), 1, shape=(truncation + 1, truncation + 1), format="csr")


def embed(op, space: HilbertSpace, slot: int) -> Operator:
    """Place a single-factor operator on ``slot`` with identities elsewhere."""
    m = op.matrix if isinstance(op, Operator) else sp.csr_matrix(op, dtype=complex)
    if not 0 <= slot < len(space.factors):
        raise QRabiError(f"slot {slot} out of range for {len(space.factors)} factors")
    d = space.dims[slot]
    if m.shape != (d, d):
        raise QRabiError(f"operator of shape {m.shape} cannot act on factor {slot} of dimension {d}")
    before = int(np.prod(space.dims[:slot]))
    after = int(np.prod(space.dims[slot + 1:]))
    full = sp.kron(sp.kron(sp.identity(before, format="csr"), m), sp.identity(after, format="csr"))
    herm = isinstance(op, Operator) and op.hermitian
    return Operator(space, full.tocsr(), herm)


def fock_annihilation(space: HilbertSpace, mode_index: int) -> Operator:
    """Truncated annihilation operator of the Fock factor at ``mode_index``."""
    f = _factor(space, mode_index, FockMode)
    return embed(annihilation_matrix(f.truncation), space, mode_index)


def number_operator(space: HilbertSpace, mode_index: int) -> Operator:
    _factor(space, mode_index, FockMode)
    return Operator(space, sp.diags(space.occupations(mode_index).astype(complex)), hermitian=True)


def _qudit_space(n: int) -> HilbertSpace:
    return HilbertSpace((Qutrit(),)) if n == 3 else HilbertSpace((Qudit(n),))


def qudit_clock_shift(n: int) -> Tuple[Operator, Operator]:
    """Clock ``Z = diag(w^j)`` and shift ``X|j> = |j+1 mod n>`` with ``w = exp(2 pi i/n)``.

    The operators live on a single :class:`Qutrit` factor for ``n == 3`` and
    on a :class:`Qudit` factor otherwise.
    """
    if int(n) != n or n < 2:
        raise QRabiError(f"clock/shift dimension must be an integer >= 2, got {n!r}")
    n = int(n)
    space = _qudit_space(n)
    w = np.exp(2j * np.pi / n)
    Z = sp.diags(w ** np.arange(n))
    X = sp.csr_matrix((np.ones(n), ((np.arange(n) + 1) % n, np.arange(n))), shape=(n, n))
    return Operator(space, Z, hermitian=(n == 2)), Operator(space, X, hermitian=(n == 2))


def fourier_state(n: int, k: int) -> StateVector:
    """``|w^k> = n^{-1/2} sum_j w^{kj} |j>``, the eigenvector of X with eigenvalue ``w^{-k}``."""
    if int(n) != n or n < 2:
        raise QRabiError(f"dimension must be an integer >= 2, got {n!r}")
    if not 0 <= k < n:
        raise QRabiError(f"Fourier index k={k} out of range for n={n}")
    space = _qudit_space(n)
    j = np.arange(n)
    return StateVector(space, np.exp(2j * np.pi * k * j / n) / np.sqrt(n))


def _dense_lowest(H: np.ndarray, count: int):
    return scipy.linalg.eigh(H, subset_by_index=[0, count - 1])


def gershgorin_floor(A: sp.csr_matrix) -> float:
    """Lower bound on the spectrum of a Hermitian sparse matrix."""
    diag = A.diagonal().real
    off = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(diag)
    return float(np.min(diag - off))


def _block_lanczos_top(apply, n: int, want: int, block: int, max_basis: int,
                       max_restarts: int, rng: np.random.Generator, accept):
    """Largest eigenpairs of a Hermitian linear map via restarted block Lanczos.

    Every new block is reorthogonalized twice against the full basis. After
    each sweep ``accept(theta, X)`` returns ``(done, residual, result)``;
    otherwise the sweep restarts from the leading ``block`` Ritz vectors.
    """
    V0 = rng.standard_normal((n, block)) + 1j * rng.standard_normal((n, block))
    last = None
    for _ in range(max_restarts):
        Q, _ = np.linalg.qr(V0)
        Qall, AV = Q, [apply(Q)]
        while Qall.shape[1] + block <= max_basis:
            W = AV[-1]
            W = W - Qall @ (Qall.conj().T @ W)
            W = W - Qall @ (Qall.conj().T @ W)
            Qn, R = np.linalg.qr(W)
            keep = np.abs(np.diag(R)) > 1e-12 * max(1.0, np.abs(np.diag(R)).max())
            if not keep.any():
                break
            Qn = Qn[:, keep]
            Qn = Qn - Qall @ (Qall.conj().T @ Qn)
            Qn, _ = np.linalg.qr(Qn)
            AV.append(apply(Qn))
            Qall = np.hstack([Qall, Qn])
        T = Qall.conj().T @ np.hstack(AV)
        theta, S = np.linalg.eigh(0.5 * (T + T.conj().T))
        theta, S = theta[::-1], S[:, ::-1]
        X = Qall @ S[:, :max(block, want)]
        done, last, result = accept(theta, X)
        if done:
            return result
        if Qall.shape[1] >= n:
            break
        V0 = X[:, :block]
    raise ConvergenceError(f"block Lanczos did not converge for {want} eigenpairs", last)


def _sparse_lowest(A: sp.csr_matrix, count: int, tol: float, block: int | None,
                   max_basis: int | None, max_restarts: int, seed: int):
    n = A.shape[0]
    scale = max(float(abs(A).max()), 1e-300)
    sigma = gershgorin_floor(A) - 1e-3 * scale - 1.0
    lu = spla.splu((A - sigma * sp.identity(n, format="csr")).tocsc())
    block = block or max(4, min(count + 2, 12))
    max_basis = min(n, max_basis or max(24 * block, 8 * count + 100))

    def accept(mu, X):
        # Rayleigh-Ritz on H itself: the shift-inverted Ritz values lose
        # accuracy by a factor ~ |E - sigma|^2 when mapped back.
        Q, _ = np.linalg.qr(X)
        HQ = A @ Q
        E, S = np.linalg.eigh(0.5 * (Q.conj().T @ HQ + (Q.conj().T @ HQ).conj().T))
        V = Q @ S[:, :count]
        res = np.linalg.norm(HQ @ S[:, :count] - V * E[:count], axis=0)
        worst = float(res.max()) / scale
        return worst <= tol, worst, (E[:count], V)

    return _block_lanczos_top(lu.solve, n, count, block, max_basis, max_restarts,
                              np.random.default_rng(seed), accept)


def lowest_eigh(matrix, count: int, tol: float = 1e-10, *, block: int | None = None,
                max_basis: int | None = None, max_restarts: int = 40, seed: int = 0):
    """Array-level eigensolver behind :func:`lowest_eigenpairs`; returns ``(values, vectors)``."""
    dim = matrix.shape[0]
    if not 1 <= count <= dim:
        raise QRabiError(f"count={count} must lie in [1, {dim}]")
    if dim < DENSE_CUTOFF:
        dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
        w, v = _dense_lowest(dense, count)
    else:
        w, v = _sparse_lowest(sp.csr_matrix(matrix), count, tol, block, max_basis,
                              max_restarts, seed)
    order = np.argsort(w, kind="stable")
    return np.asarray(w)[order], v[:, order]


def lowest_eigenpairs(H: Operator, count: int, tol: float = 1e-10,
                      **solver) -> List[Tuple[float, StateVector]]:
    """``count`` smallest eigenvalues of a Hermitian operator with unit eigenvectors.

    Spaces below :data:`DENSE_CUTOFF` are diagonalized densely. Larger ones
    run restarted block Lanczos on the shift-inverted operator
    ``(H - sigma)^-1`` with ``sigma`` under the Gershgorin floor, until every
    residual satisfies ``||Hv - Ev|| <= tol * max|H|``. Within a degenerate cluster the
    eigenvector basis is arbitrary.
    """
    if not H.is_hermitian():
        raise QRabiError("lowest_eigenpairs requires a Hermitian operator")
    w, v = lowest_eigh(H.matrix, count, tol, **solver)
    return [(float(e), StateVector.normalized(H.space, v[:, i])) for i, e in enumerate(w)]


def eigenvalues(H: Operator, count: int, tol: float = 1e-10) -> np.ndarray:
    if not H.is_hermitian():
        raise QRabiError("eigenvalues requires a Hermitian operator")
    return lowest_eigh(H.matrix, count, tol)[0]
