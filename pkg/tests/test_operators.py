import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from qrabi.operators import (
    DENSE_CUTOFF,
    ConvergenceError,
    FockMode,
    HilbertSpace,
    Operator,
    QRabiError,
    StateVector,
    commutator,
    embed,
    eigenvalues,
    fock_annihilation,
    fourier_state,
    lowest_eigenpairs,
    lowest_eigh,
    number_operator,
    qudit_clock_shift,
)
from qrabi.models import ModelParams, build_hamiltonian, model_space

W = np.exp(2j * np.pi / 3)


def test_space_layout():
    s = HilbertSpace.qutrit_modes(2, 1)
    assert s.dims == (3, 3)
    assert s.dim == 9
    assert s.fock_slots == [1]
    assert s.qutrit_slots == [0]
    np.testing.assert_array_equal(s.occupations(0), np.repeat([0, 1, 2], 3))
    np.testing.assert_array_equal(s.occupations(1), np.tile([0, 1, 2], 3))


def test_truncation_validated():
    with pytest.raises(QRabiError):
        FockMode(0)
    with pytest.raises(QRabiError):
        FockMode(2.5)


def test_annihilation_elements():
    a = fock_annihilation(HilbertSpace.modes(1, 1), 0).toarray()
    np.testing.assert_array_equal(a, [[0, 1], [0, 0]])
    a2 = fock_annihilation(HilbertSpace.modes(2, 1), 0).toarray()
    assert a2[1, 2] == pytest.approx(np.sqrt(2))
    n = number_operator(HilbertSpace.modes(3, 1), 0).toarray()
    np.testing.assert_array_equal(np.diag(n).real, [0, 1, 2, 3])


def test_annihilation_errors():
    s = HilbertSpace.qutrit_modes(2, 1)
    with pytest.raises(QRabiError):
        fock_annihilation(s, 0)
    with pytest.raises(QRabiError):
        fock_annihilation(s, 5)


def test_canonical_commutator_below_boundary():
    N = 12
    s = HilbertSpace.modes(N, 1)
    a = fock_annihilation(s, 0)
    c = commutator(a, a.dag()).toarray()
    np.testing.assert_allclose(c[:N, :N], np.eye(N), atol=1e-14)
    # the top entry carries the truncation artifact
    assert c[N, N] == pytest.approx(-N)


def test_clock_shift_qutrit():
    Z, X = qudit_clock_shift(3)
    z, x = Z.toarray(), X.toarray()
    np.testing.assert_allclose(np.diag(z), [1, W, W ** 2], atol=1e-15)
    np.testing.assert_array_equal(x, [[0, 0, 1], [1, 0, 0], [0, 1, 0]])
    assert np.abs(z @ x - W * x @ z).max() < 1e-14
    for m in (z, x):
        np.testing.assert_allclose(m.conj().T @ m, np.eye(3), atol=1e-14)
        np.testing.assert_allclose(np.linalg.matrix_power(m, 3), np.eye(3), atol=1e-14)


def test_clock_shift_pauli_limit():
    Z, X = qudit_clock_shift(2)
    np.testing.assert_allclose(Z.toarray(), np.diag([1, -1]), atol=1e-15)
    np.testing.assert_array_equal(X.toarray(), [[0, 1], [1, 0]])
    with pytest.raises(QRabiError):
        qudit_clock_shift(1)


@given(st.integers(2, 9))
def test_clock_shift_relation_any_n(n):
    Z, X = qudit_clock_shift(n)
    w = np.exp(2j * np.pi / n)
    z, x = Z.toarray(), X.toarray()
    assert np.abs(z @ x - w * x @ z).max() < 1e-13


def test_fourier_states():
    np.testing.assert_allclose(fourier_state(3, 0).amplitudes, np.ones(3) / np.sqrt(3))
    f1 = fourier_state(3, 1).amplitudes
    np.testing.assert_allclose(f1, np.array([1, W, W ** 2]) / np.sqrt(3))
    _, X = qudit_clock_shift(3)
    for k in range(3):
        f = fourier_state(3, k)
        assert f.norm() == pytest.approx(1.0)
        np.testing.assert_allclose(X.toarray() @ f.amplitudes, W ** (-k) * f.amplitudes, atol=1e-15)
    with pytest.raises(QRabiError):
        fourier_state(3, 3)


def test_embed_structure():
    Z, _ = qudit_clock_shift(3)
    s = HilbertSpace.qutrit_modes(1, 1)
    d = np.diag(embed(Z, s, 0).toarray())
    np.testing.assert_allclose(d, [1, 1, W, W, W ** 2, W ** 2], atol=1e-15)
    two = HilbertSpace.modes(1, 2)
    a2 = fock_annihilation(two, 1).toarray()
    # |n1 n2> -> index 2 n1 + n2
    assert a2[0, 1] == 1 and a2[2, 3] == 1
    assert a2[0, 2] == 0
    with pytest.raises(QRabiError):
        embed(Z, two, 0)


def test_operator_validation():
    s = HilbertSpace.modes(1, 1)
    with pytest.raises(QRabiError):
        Operator(s, np.eye(3))
    with pytest.raises(QRabiError):
        Operator(s, [[0, 1], [0, 0]], hermitian=True)
    m = sp.random(20, 20, density=0.2, random_state=1) * (1 + 1j)
    op = Operator(HilbertSpace.modes(19, 1), m)
    assert (op.dag().dag().matrix != op.matrix).nnz == 0


def test_state_vector_readonly():
    v = StateVector.normalized(HilbertSpace.modes(2, 1), [1, 1, 0])
    assert v.norm() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        v.amplitudes[0] = 2


def test_number_operator_spectrum():
    N = 10
    H = number_operator(HilbertSpace.modes(N, 1), 0)
    np.testing.assert_allclose(eigenvalues(H, N + 1), np.arange(N + 1), atol=1e-12)


def test_eigensolver_decoupled_limits():
    s = model_space("R1", 10)
    H0 = build_hamiltonian("R1", ModelParams(b_field=0.0, lam=0.0), s)
    np.testing.assert_allclose(eigenvalues(H0, 3), 0, atol=1e-12)
    H = build_hamiltonian("R1", ModelParams(b_field=0.1, phi=7 * np.pi / 6, lam=0.0), s)
    np.testing.assert_allclose(eigenvalues(H, 3), [-np.sqrt(3) / 10, 0, np.sqrt(3) / 10], atol=1e-12)


@pytest.mark.parametrize("count", [1, 4, 9])
def test_sparse_solver_matches_dense(count):
    # large enough for the Lanczos path, small enough for a dense oracle
    s = model_space("R1", 199)
    assert s.dim >= DENSE_CUTOFF
    H = build_hamiltonian("R1", ModelParams(b_field=0.13, phi=0.4, lam=1.1), s)
    pairs = lowest_eigenpairs(H, count)
    ref = np.linalg.eigvalsh(H.toarray())[:count]
    got = np.array([e for e, _ in pairs])
    np.testing.assert_allclose(got, ref, atol=1e-10)
    assert np.all(np.diff(got) >= -1e-12)
    scale = abs(H.matrix).max()
    for e, v in pairs:
        assert v.norm() == pytest.approx(1.0)
        assert np.linalg.norm(H.matrix @ v.amplitudes - e * v.amplitudes) <= 1e-10 * scale


def test_sparse_solver_degenerate_oscillator():
    s = HilbertSpace.modes(30, 2)
    H = number_operator(s, 0) + number_operator(s, 1)
    np.testing.assert_allclose(eigenvalues(H, 10), [0, 1, 1, 2, 2, 2, 3, 3, 3, 3], atol=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.floats(0, 2), st.floats(0, 0.5), st.floats(-np.pi, np.pi))
def test_dense_oracle_small_spaces(lam, b, phi):
    s = model_space("R1", 40)
    H = build_hamiltonian("R1", ModelParams(b_field=b, phi=phi, lam=lam), s)
    np.testing.assert_allclose(eigenvalues(H, 5), np.linalg.eigvalsh(H.toarray())[:5], atol=1e-10)


def test_eigensolver_errors():
    s = HilbertSpace.modes(3, 1)
    with pytest.raises(QRabiError):
        lowest_eigenpairs(Operator(s, np.triu(np.ones((4, 4)))), 1)
    with pytest.raises(QRabiError):
        lowest_eigh(np.eye(4), 5)
    s = model_space("R1", 299)
    H = build_hamiltonian("R1", ModelParams(lam=1.0), s)
    with pytest.raises(ConvergenceError) as info:
        lowest_eigh(H.matrix, 6, 1e-14, block=2, max_basis=8, max_restarts=1)
    assert info.value.residual > 0
