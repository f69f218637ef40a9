"""Small dense complex linear algebra for gates on a few qudits.

Matrices are plain ``numpy`` complex arrays. ``UnitaryGate`` attaches a party
structure (the list of local dimensions) and validates unitarity once, at
construction. Spectral decompositions go through a cyclic complex Jacobi
solver so that every decomposition in the package shares one eigensolver and
one phase convention.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .config import tol
from .errors import InputError, NumericalFailure

SIGMA_I = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def dag(m: np.ndarray) -> np.ndarray:
    return np.conj(np.transpose(m))


def as_array(m) -> np.ndarray:
    """Return the complex matrix behind a gate, state, or array-like."""
    if isinstance(m, UnitaryGate):
        return m.matrix
    if isinstance(m, PureState):
        return m.vector
    return np.asarray(m, dtype=complex)


def max_norm(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.abs(m).max()) if m.size else 0.0


@dataclass(frozen=True)
class PartyStructure:
    local_dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.local_dims)
        if not dims:
            raise InputError("party structure needs at least one party")
        if any(d < 2 for d in dims):
            raise InputError(f"every local dimension must be >= 2, got {dims}")
        object.__setattr__(self, "local_dims", dims)

    @property
    def total(self) -> int:
        return int(np.prod(self.local_dims))

    def __len__(self):
        return len(self.local_dims)


def _dims_tuple(dims, total: int) -> tuple:
    if dims is None:
        return (total,)
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != total:
        raise InputError(f"local dims {dims} do not multiply to {total}")
    return dims


@dataclass(frozen=True, eq=False)
class UnitaryGate:
    """A unitary matrix with its tensor-factor structure.

    ``dims`` lists the local dimension of each party in tensor order. A single
    entry means "no party structure". Local dimensions of 1 are not allowed in
    ``PartyStructure`` but a bare ``(n,)`` is accepted here for n >= 1 so that
    scalars and single-level pieces can be wrapped.
    """

    matrix: np.ndarray
    dims: tuple = field(default=None)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InputError(f"gate matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InputError("gate matrix has non-finite entries")
        err = max_norm(dag(m) @ m - np.eye(m.shape[0]))
        if err > tol().unitarity:
            raise InputError(f"matrix is not unitary (max |U^dag U - I| = {err:.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", _dims_tuple(self.dims, m.shape[0]))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def structure(self) -> PartyStructure:
        return PartyStructure(self.dims)

    def dag(self) -> "UnitaryGate":
        return UnitaryGate(dag(self.matrix), self.dims)

    def __matmul__(self, other: "UnitaryGate") -> "UnitaryGate":
        other_m = as_array(other)
        return UnitaryGate(self.matrix @ other_m, self.dims)

    def __repr__(self):
        return f"UnitaryGate(dims={self.dims})"


def as_gate(m, dims=None) -> UnitaryGate:
    if isinstance(m, UnitaryGate):
        if dims is not None and tuple(dims) != m.dims:
            return UnitaryGate(m.matrix, dims)
        return m
    return UnitaryGate(m, dims)


@dataclass(frozen=True, eq=False)
class PureState:
    vector: np.ndarray
    dims: tuple = field(default=None)

    def __post_init__(self):
        v = np.array(self.vector, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > tol().unitarity:
            raise InputError(f"state is not normalized (norm {norm:.15f})")
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)
        object.__setattr__(self, "dims", _dims_tuple(self.dims, v.size))

    def density(self) -> np.ndarray:
        return np.outer(self.vector, np.conj(self.vector))


def check_density(rho, dims=None) -> np.ndarray:
    """Validate a density matrix and return it as an array."""
    rho = as_array(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InputError("density matrix must be square")
    if max_norm(rho - dag(rho)) > tol().hermiticity:
        raise InputError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol().unitarity:
        raise InputError(f"density matrix trace is {np.trace(rho):.12f}, not 1")
    w, _ = np.linalg.eigh(rho)
    if w.min() < -1e-10:
        raise InputError(f"density matrix has negative eigenvalue {w.min():.3e}")
    if dims is not None:
        _dims_tuple(dims, rho.shape[0])
    return rho


# ---------------------------------------------------------------------------
# products and traces


def tensor(*mats) -> np.ndarray:
    """Kronecker product; entry ((i,k),(j,l)) of tensor(A, B) is A[i,j] B[k,l]."""
    arrays = [as_array(m) for m in mats]
    return reduce(np.kron, arrays)


def trace_product(u, v) -> complex:
    """Return Tr(V^dag U)."""
    u, v = as_array(u), as_array(v)
    if u.shape != v.shape or u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise InputError(f"trace_product needs equal square shapes, got {u.shape} and {v.shape}")
    return complex(np.vdot(v, u))


def direct_sum(u, k: int) -> UnitaryGate:
    """Block-diagonal U (+) I_k."""
    if k < 0:
        raise InputError("direct_sum needs k >= 0")
    m = as_array(u)
    if k == 0:
        return as_gate(u)
    n = m.shape[0]
    out = np.eye(n + k, dtype=complex)
    out[:n, :n] = m
    return UnitaryGate(out)


def partial_trace(rho, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every party not listed in ``keep`` (party order is preserved)."""
    rho = as_array(rho)
    dims = tuple(int(d) for d in dims)
    keep = sorted(set(int(k) for k in keep))
    n = len(dims)
    if not keep or any(k < 0 or k >= n for k in keep):
        raise InputError(f"invalid subset {keep} for {n} parties")
    total = int(np.prod(dims))
    if rho.shape != (total, total):
        raise InputError(f"matrix shape {rho.shape} does not match dims {dims}")
    t = rho.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    res = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = int(np.prod([dims[i] for i in keep]))
    return res.reshape(d, d)


def apply_op(state: np.ndarray, dims: Sequence[int], op: np.ndarray, wires: Sequence[int]) -> np.ndarray:
    """Apply ``op`` to the listed parties of a state vector (or to the rows of a matrix)."""
    dims = tuple(dims)
    wires = list(wires)
    op = as_array(op)
    k = len(wires)
    sub = [dims[w] for w in wires]
    t = np.asarray(state).reshape(dims + (-1,))
    opt = op.reshape(tuple(sub) + tuple(sub))
    t = np.tensordot(opt, t, axes=(list(range(k, 2 * k)), wires))
    t = np.moveaxis(t, list(range(k)), wires)
    return t.reshape(np.asarray(state).shape)


def permutation_operator(dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Operator sending the factor of party i to slot ``perm[i]``.

    With dims (2, 2) and perm (1, 0) this is SWAP. Parties of different
    dimension may be moved; the output space then has the permuted dims.
    """
    dims = tuple(dims)
    perm = tuple(perm)
    n = len(dims)
    if sorted(perm) != list(range(n)):
        raise InputError(f"{perm} is not a permutation of {n} parties")
    total = int(np.prod(dims))
    eye = np.eye(total, dtype=complex).reshape(dims + (total,))
    # new axis perm[i] holds old axis i
    src = [0] * n
    for i, p in enumerate(perm):
        src[p] = i
    return np.transpose(eye, src + [n]).reshape(total, total)


# ---------------------------------------------------------------------------
# eigensolvers


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def angles(self) -> np.ndarray:
        return np.mod(np.angle(self.eigenvalues), 2 * np.pi)


def _jacobi(h: np.ndarray, max_sweeps: int = 80):
    """Cyclic Jacobi for a complex Hermitian matrix. Returns (w, V), unsorted."""
    a = np.array(h, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    if n == 1:
        return a.real.diagonal().copy(), v
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), v
    eps = np.finfo(float).eps
    iu = np.triu_indices(n, 1)
    for _ in range(max_sweeps):
        off = np.sqrt(2.0) * np.linalg.norm(a[iu])
        if off <= eps * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-3 * eps * scale:
                    continue
                phase = apq / r
                theta = (a[q, q].real - a[p, p].real) / (2.0 * r)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                g = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = dag(g) @ a[idx, :]
                v[:, idx] = v[:, idx] @ g
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
    else:
        raise NumericalFailure("Jacobi iteration did not converge")
    return a.diagonal().real.copy(), v


def _canonical_phases(vecs: np.ndarray) -> np.ndarray:
    vecs = vecs.copy()
    cut = tol().phase_canon
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        big = np.nonzero(np.abs(col) > cut)[0]
        if big.size:
            ph = col[big[0]] / abs(col[big[0]])
            vecs[:, j] = col / ph
    return vecs


def _check_hermitian(h: np.ndarray) -> np.ndarray:
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise InputError(f"matrix must be square, got {h.shape}")
    if max_norm(h - dag(h)) > tol().hermiticity:
        raise InputError("matrix is not Hermitian")
    return 0.5 * (h + dag(h))


def eig_hermitian(h) -> Spectrum:
    """Real eigenvalues in ascending order with orthonormal eigenvectors."""
    h = _check_hermitian(as_array(h))
    w, v = _jacobi(h)
    order = np.argsort(w, kind="stable")
    return Spectrum(w[order], _canonical_phases(v[:, order]))


def _clusters(values: np.ndarray, gap: float):
    """Split ascending ``values`` into runs whose consecutive spacing is <= gap."""
    groups, start = [], 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[i - 1] > gap:
            groups.append(list(range(start, i)))
            start = i
    return groups


def simultaneous_diagonalize(h1: np.ndarray, h2: np.ndarray) -> np.ndarray:
    """Common eigenbasis of two commuting Hermitian matrices.

    ``h1`` is diagonalized first; each near-degenerate eigenspace of ``h1``
    is then resolved with the compression of ``h2``.
    """
    w, v = _jacobi(h1)
    order = np.argsort(w, kind="stable")
    w, v = w[order], v[:, order]
    scale = max(1.0, float(np.abs(w).max()))
    for group in _clusters(w, tol().degeneracy * scale):
        if len(group) < 2:
            continue
        sub = v[:, group]
        b = dag(sub) @ h2 @ sub
        _, r = _jacobi(0.5 * (b + dag(b)))
        v[:, group] = sub @ r
    return v


# fixed rotation of the Hermitian split; avoids the exact H1 degeneracy of
# conjugate eigenvalue pairs exp(+-i t)
_SPLIT_ANGLE = 0.3819660112501051


def eig_unitary(u) -> Spectrum:
    """Eigen-decomposition of a unitary through its two commuting Hermitian parts.

    Eigenvalues are renormalized to unit modulus and ordered by angle in
    [0, 2 pi).
    """
    m = as_gate(u).matrix
    k = np.exp(-1j * _SPLIT_ANGLE) * m
    h1 = 0.5 * (k + dag(k))
    h2 = (k - dag(k)) / 2j
    v = simultaneous_diagonalize(h1, h2)
    lam = np.einsum("ij,ij->j", np.conj(v), m @ v)
    lam = lam / np.abs(lam)
    ang = np.mod(np.angle(lam), 2 * np.pi)
    order = np.argsort(ang, kind="stable")
    return Spectrum(lam[order], _canonical_phases(v[:, order]))


def svd(m):
    """Thin SVD ``M = U diag(s) V^dag`` from the eigendecomposition of ``M^dag M``.

    Singular values are recomputed as ``||M v||`` which keeps tiny values at
    the roundoff level of M rather than of M^dag M.
    """
    m = as_array(m)
    if m.ndim != 2:
        raise InputError("svd needs a matrix")
    rows, cols = m.shape
    k = min(rows, cols)
    w, v = _jacobi(dag(m) @ m)
    order = np.argsort(-w, kind="stable")
    v = v[:, order]
    mv = m @ v
    s = np.linalg.norm(mv, axis=0)
    order = np.argsort(-s, kind="stable")
    s, v, mv = s[order][:k], v[:, order][:, :k], mv[:, order][:, :k]
    u = np.zeros((rows, k), dtype=complex)
    null = tol().svd_null * max(1.0, float(s[0]) if k else 1.0)
    filled = []
    for j in range(k):
        if s[j] > null:
            col = mv[:, j] / s[j]
            for f in filled:  # reorthogonalize against earlier columns
                col = col - np.vdot(u[:, f], col) * u[:, f]
            nrm = np.linalg.norm(col)
            if nrm > 0.5:
                u[:, j] = col / nrm
                filled.append(j)
    # deterministic completion from the standard basis
    basis = iter(range(rows))
    for j in range(k):
        if j in filled:
            continue
        while True:
            e = np.zeros(rows, dtype=complex)
            e[next(basis)] = 1.0
            for f in filled:
                e = e - np.vdot(u[:, f], e) * u[:, f]
            nrm = np.linalg.norm(e)
            if nrm > 1e-6:
                u[:, j] = e / nrm
                filled.append(j)
                break
    return u, s, v


def exp_i_hermitian(h, dims=None) -> UnitaryGate:
    """exp(iH) for Hermitian H."""
    spec = eig_hermitian(h)
    v = spec.eigenvectors
    out = (v * np.exp(1j * spec.eigenvalues)) @ dag(v)
    return UnitaryGate(out, dims)


def haar_random_unitary(dim: int, seed: int, dims=None) -> UnitaryGate:
    """Haar-distributed unitary from QR of a seeded complex Gaussian matrix.

    The phases are fixed so the triangular factor has a real positive
    diagonal; this makes the output Haar distributed and seed-deterministic.
    """
    if dim < 1:
        raise InputError("dim must be >= 1")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return UnitaryGate(q, dims)


def random_local_unitary(dims: Sequence[int], seed: int) -> UnitaryGate:
    """Tensor product of independent Haar-random single-party unitaries."""
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(len(dims))
    factors = [haar_random_unitary(d, int(c.generate_state(1)[0])).matrix for d, c in zip(dims, children)]
    return UnitaryGate(tensor(*factors), dims)
