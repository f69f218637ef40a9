import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from helpers import haar, random_density
from udiscrim.errors import InputError
from udiscrim.linalg import (CNOT, SWAP, PartyStructure, PureState, UnitaryGate, apply_op, direct_sum,
                             eig_hermitian, eig_unitary, exp_i_hermitian, haar_random_unitary,
                             partial_trace, permutation_operator, random_local_unitary,
                             simultaneous_diagonalize, svd, tensor, trace_product)


def _rand_herm(d, rng):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (a + a.conj().T) / 2


@pytest.mark.parametrize("d", [1, 2, 3, 5, 8, 16, 32])
def test_eig_hermitian_matches_numpy(d):
    rng = np.random.default_rng(d)
    h = _rand_herm(d, rng)
    spec = eig_hermitian(h)
    v, w = spec.eigenvectors, spec.eigenvalues
    assert np.abs(v @ np.diag(w) @ v.conj().T - h).max() <= 1e-9
    assert np.abs(v.conj().T @ v - np.eye(d)).max() <= 1e-10
    assert np.allclose(np.sort(w), np.linalg.eigvalsh(h), atol=1e-10)


def test_eig_hermitian_degenerate():
    rng = np.random.default_rng(3)
    q = haar(6, rng)
    h = q @ np.diag([1, 1, 1, -2, -2, 5.0]) @ q.conj().T
    spec = eig_hermitian(h)
    v = spec.eigenvectors
    assert np.abs(v @ np.diag(spec.eigenvalues) @ v.conj().T - h).max() <= 1e-9


def test_eig_hermitian_rejects_non_hermitian():
    with pytest.raises(InputError):
        eig_hermitian(np.array([[0, 1], [0, 0]]))


@pytest.mark.parametrize("name", ["haar", "cnot", "swap", "uxu", "neg", "identity"])
def test_eig_unitary_residual(name):
    rng = np.random.default_rng(11)
    g = {
        "haar": haar(8, rng),
        "cnot": CNOT,
        "swap": SWAP,
        "uxu": np.kron(haar(2, rng), np.eye(2)) @ np.kron(np.eye(2), haar(2, rng)),
        "neg": np.diag([-1, -1, 1.0]),
        "identity": np.eye(4),
    }[name]
    spec = eig_unitary(g)
    v, lam = spec.eigenvectors, spec.eigenvalues
    assert np.abs(g @ v - v * lam).max() <= 1e-9
    assert np.abs(v.conj().T @ v - np.eye(len(lam))).max() <= 1e-9
    assert np.all(np.diff(spec.angles) >= -1e-12)


def test_eig_unitary_cnot_angles():
    ang = np.sort(eig_unitary(CNOT).angles)
    assert np.allclose(ang, [0, 0, 0, np.pi], atol=1e-12)


def test_simultaneous_diagonalize():
    rng = np.random.default_rng(5)
    q = haar(4, rng)
    a = q @ np.diag([1, 1, 2, 2.0]) @ q.conj().T
    b = q @ np.diag([3, 4, 5, 5.0]) @ q.conj().T
    v = simultaneous_diagonalize(a, b)
    for m in (a, b):
        d = v.conj().T @ m @ v
        assert np.abs(d - np.diag(np.diag(d))).max() <= 1e-9


@pytest.mark.parametrize("shape", [(4, 4), (3, 5), (6, 2), (8, 8)])
def test_svd_reconstruction(shape):
    rng = np.random.default_rng(sum(shape))
    m = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    u, s, v = svd(m)
    assert np.abs(u @ np.diag(s) @ v.conj().T - m).max() <= 1e-9
    assert np.allclose(s, np.linalg.svd(m, compute_uv=False), atol=1e-10)
    assert np.abs(u.conj().T @ u - np.eye(len(s))).max() <= 1e-10


def test_svd_rank_deficient():
    a = np.outer([1, 2, 3, 4], [5, 6, 7, 8j])
    u, s, v = svd(a)
    assert s[1] <= 1e-12 * s[0]
    assert np.abs(u @ np.diag(s) @ v.conj().T - a).max() <= 1e-9
    assert np.abs(u.conj().T @ u - np.eye(4)).max() <= 1e-10


def test_partial_trace_product_marginals():
    rng = np.random.default_rng(2)
    for _ in range(10):
        ra, rb, rc = random_density(2, rng), random_density(3, rng), random_density(2, rng)
        rho = np.kron(np.kron(ra, rb), rc)
        # direct summation oracle
        t = rho.reshape(2, 3, 2, 2, 3, 2)
        oracle_b = sum(t[a, :, c, a, :, c] for a in range(2) for c in range(2))
        assert np.abs(partial_trace(rho, (2, 3, 2), [1]) - oracle_b).max() <= 1e-10
        assert np.abs(partial_trace(rho, (2, 3, 2), [0, 2]) - np.kron(ra, rc)).max() <= 1e-10


def test_trace_product():
    rng = np.random.default_rng(0)
    u, v = haar(4, rng), haar(4, rng)
    assert abs(trace_product(u, v) - np.trace(v.conj().T @ u)) <= 1e-12


def test_permutation_operator_swap():
    assert np.array_equal(permutation_operator((2, 2), (1, 0)), SWAP)
    p = permutation_operator((2, 3, 2), (2, 1, 0))
    va, vb, vc = np.array([1, 2.0]), np.array([3, 4, 5.0]), np.array([6, 7.0])
    assert np.allclose(p @ np.kron(np.kron(va, vb), vc), np.kron(np.kron(vc, vb), va))


def test_apply_op_matches_kron():
    rng = np.random.default_rng(9)
    psi = rng.standard_normal(12) + 0j
    op = haar(4, rng)
    # op on parties (0, 2) of (2, 3, 2)
    full = permutation_operator((2, 2, 3), (0, 2, 1)) @ np.kron(op, np.eye(3)) @ \
        permutation_operator((2, 2, 3), (0, 2, 1)).T
    assert np.allclose(apply_op(psi, (2, 3, 2), op, (0, 2)), full @ psi)


def test_gate_validation():
    with pytest.raises(InputError):
        UnitaryGate(np.array([[1, 1], [0, 1]]))
    with pytest.raises(InputError):
        UnitaryGate(np.eye(4), (2, 3))
    with pytest.raises(InputError):
        PartyStructure((1, 2))
    g = UnitaryGate(CNOT, (2, 2))
    with pytest.raises(ValueError):
        g.matrix[0, 0] = 2
    with pytest.raises(InputError):
        PureState(np.array([1.0, 1.0]))


def test_haar_is_seeded_and_unitary():
    a = haar_random_unitary(5, 7).matrix
    b = haar_random_unitary(5, 7).matrix
    assert np.array_equal(a, b)
    assert np.abs(a.conj().T @ a - np.eye(5)).max() <= 1e-12
    loc = random_local_unitary((2, 3), 1)
    assert loc.dims == (2, 3)


def test_direct_sum_and_tensor():
    m = direct_sum(-np.eye(2), 1).matrix
    assert np.allclose(np.diag(m), [-1, -1, 1])
    assert tensor(np.eye(2), np.eye(3)).shape == (6, 6)


def test_exp_i_hermitian_matches_expm():
    rng = np.random.default_rng(4)
    h = _rand_herm(4, rng)
    assert np.abs(exp_i_hermitian(h).matrix - expm(1j * h)).max() <= 1e-10


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.integers(0, 2 ** 31 - 1))
def test_eig_unitary_property(phases, seed):
    q = haar(3, np.random.default_rng(seed))
    u = (q * np.exp(1j * np.array(phases))) @ q.conj().T
    spec = eig_unitary(u)
    v = spec.eigenvectors
    assert np.abs(u @ v - v * spec.eigenvalues).max() <= 1e-9
