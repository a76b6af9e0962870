"""scikit-learn style wrappers around the spectrum and Wigner computations.

``SpectrumEstimator`` maps coupling values to offset-removed sector energies
(``transform``: exact diagonalization, ``predict``: first-order formula).
``JointWignerTransformer`` is fitted on a state and maps phase-space points
to Wigner values.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .models import ModelId, ModelParams
from .operators import QRabiError, StateVector
from .perturbation import perturbative_triplet, spectrum_sweep
from .states import DensityMatrix
from .wigner import wigner_values


def _lambdas(X) -> np.ndarray:
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single column of coupling values, got shape {X.shape}")
        X = X[:, 0]
    return X


class SpectrumEstimator(TransformerMixin, BaseEstimator):
    def __init__(self, model="R1", omega=1.0, b_field=0.1, phi=7 * np.pi / 6, truncation=50, tol=1e-10):
        self.model = model
        self.omega = omega
        self.b_field = b_field
        self.phi = phi
        self.truncation = truncation
        self.tol = tol

    def fit(self, X=None, y=None):
        model = ModelId.parse(self.model)
        if model not in (ModelId.R1, ModelId.R2):
            raise QRabiError(f"SpectrumEstimator supports R1 and R2, not {model.value}")
        if int(self.truncation) < 1:
            raise QRabiError(f"truncation must be >= 1, got {self.truncation}")
        self.model_ = model
        self.params_ = ModelParams(omega=self.omega, b_field=self.b_field, phi=self.phi)
        return self

    def transform(self, X):
        """Lowest offset-removed level of each sector, shape ``(n, 3)``."""
        check_is_fitted(self, "params_")
        res = spectrum_sweep(self.model_, self.params_, _lambdas(X), 3, int(self.truncation), self.tol)
        if res.failures:
            raise QRabiError("eigensolver failed at " + "; ".join(res.failures.values()))
        return res.exact_by_k

    def predict(self, X):
        """First-order ``eps_k`` for each coupling, shape ``(n, 3)``."""
        check_is_fitted(self, "params_")
        return np.array([perturbative_triplet(self.model_, self.params_.replace(lam=float(l)))
                         for l in _lambdas(X)]).reshape(-1, 3)


class JointWignerTransformer(TransformerMixin, BaseEstimator):
    """Rows of ``X`` are ``[Re z1, Im z1]``, ``[Re z1, Im z1, Re z2, Im z2]``, or the
    latter followed by the qutrit coordinates ``a, b`` when the state has a qutrit."""

    def fit(self, X, y=None):
        if isinstance(X, StateVector):
            X = DensityMatrix.pure(X)
        if not isinstance(X, DensityMatrix):
            raise TypeError(f"fit expects a StateVector or DensityMatrix, got {type(X).__name__}")
        self.density_ = X
        self.n_modes_ = len(X.space.fock_slots)
        self.has_qutrit_ = bool(X.space.qutrit_slots)
        self.n_features_in_ = 2 * self.n_modes_ + (2 if self.has_qutrit_ else 0)
        return self

    def transform(self, X):
        check_is_fitted(self, "density_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        z1 = X[:, 0] + 1j * X[:, 1]
        z2 = X[:, 2] + 1j * X[:, 3] if self.n_modes_ == 2 else None
        if not self.has_qutrit_:
            return wigner_values(self.density_, z1, z2)[0]
        ab = X[:, -2:]
        if np.any(ab != np.round(ab)):
            raise ValueError("qutrit coordinates must be integers")
        ab = ab.astype(int) % 3
        coords = [(a, b) for a in range(3) for b in range(3)]
        table = wigner_values(self.density_, z1, z2, coords)
        return table[ab[:, 0] * 3 + ab[:, 1], np.arange(len(X))]
