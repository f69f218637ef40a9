"""Entangled probe states and the one-way LOCC measurement for two orthogonal states."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm, orth
from scipy.optimize import brentq, least_squares

from ..config import tol
from ..errors import InputError, NoBasisFound
from ..linalg import PureState, UnitaryGate, dag, permutation_operator


def jamiolkowski_input(system_dims: Sequence[int], ancilla_dims: Optional[Sequence[int]] = None) -> PureState:
    """Product of maximally entangled system/ancilla pairs, ordered (A, A', B, B')."""
    system_dims = tuple(int(d) for d in system_dims)
    ancilla_dims = system_dims if ancilla_dims is None else tuple(int(d) for d in ancilla_dims)
    if len(system_dims) != 2 or len(ancilla_dims) != 2:
        raise InputError("expected dims for exactly two parties")
    if ancilla_dims != system_dims:
        raise InputError(f"ancilla dims {ancilla_dims} must equal system dims {system_dims}")
    da, db = system_dims
    phi_a = np.eye(da, dtype=complex).ravel() / np.sqrt(da)
    phi_b = np.eye(db, dtype=complex).ravel() / np.sqrt(db)
    return PureState(np.kron(phi_a, phi_b), (da, da, db, db))


# ---------------------------------------------------------------------------
# zero-diagonal bases


def _origin_simplex(z: np.ndarray):
    """Indices (2 or 3) of points whose convex hull holds the origin, with weights."""
    scale = np.abs(z).max()
    small = np.flatnonzero(np.abs(z) <= 1e-15 * max(scale, 1e-300))
    if small.size:
        return [int(small[0])], np.array([1.0])
    ang = np.angle(z)
    order = np.argsort(ang)
    a = ang[order]
    gaps = np.diff(np.concatenate([a, [a[0] + 2 * np.pi]]))
    g = int(np.argmax(gaps))
    i0 = order[(g + 1) % len(a)]          # hull runs counter-clockwise from i0 ...
    i1 = order[g]                         # ... to i1
    span = (ang[i1] - ang[i0]) % (2 * np.pi)
    segment = [int(i0), int(i1)], np.array([abs(z[i1]), abs(z[i0])]) / (abs(z[i0]) + abs(z[i1]))
    if abs(span - np.pi) <= 1e-12:
        return segment
    if span < np.pi:
        raise NoBasisFound("origin not inside the numerical range of the diagonal")

    def cross(p, q):
        return p.real * q.imag - p.imag * q.real

    # barycentric weights of the origin in (i0, k, i1); keep the most interior k
    best, best_w = None, None
    for k in order:
        t = (ang[k] - ang[i0]) % (2 * np.pi)
        if not 0.0 < t < span:
            continue
        w = np.array([cross(z[k], z[i1]), cross(z[i1], z[i0]), cross(z[i0], z[k])])
        area = w.sum()
        if area <= 1e-14 * scale ** 2:
            continue
        w = w / area
        if w.min() >= -1e-12 and (best_w is None or w.min() > best_w.min()):
            best, best_w = k, w
    if best is None:
        # all candidates collinear with the i0-i1 chord, which then passes through the origin
        return segment
    w = np.clip(best_w, 0.0, None)
    return [int(i0), int(best), int(i1)], w / w.sum()


def _segment_point(c: np.ndarray, x: np.ndarray, y: np.ndarray, target: complex) -> np.ndarray:
    """Unit vector f in span{x, y} with f^dag C f = target.

    ``target`` must lie on the segment between x^dag C x and y^dag C y.
    """
    a = np.vdot(x, c @ x)
    b = np.vdot(y, c @ y)
    if abs(b - a) <= 1e-300:
        return x
    s = float(np.real((target - a) / (b - a)))
    s = min(max(s, 0.0), 1.0)
    if s == 0.0:
        return x
    if s == 1.0:
        return y
    dxy = np.vdot(x, c @ y) / (b - a)
    dyx = np.vdot(y, c @ x) / (b - a)
    w = dxy - np.conj(dyx)
    phase = np.exp(-1j * np.angle(w)) if abs(w) > 0 else 1.0
    cross = np.real(phase * dxy + np.conj(phase) * dyx)

    def g(t):
        return np.sin(t) ** 2 + np.sin(t) * np.cos(t) * cross - s

    t = brentq(g, 0.0, np.pi / 2, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)
    return np.cos(t) * x + phase * np.sin(t) * y


def _zero_vector(c: np.ndarray) -> np.ndarray:
    """Unit f with f^dag C f = 0 for a traceless square C (numerical range argument)."""
    m = c.shape[0]
    eye = np.eye(m, dtype=complex)
    diag = np.diag(c).copy()
    idx, w = _origin_simplex(diag)
    if len(idx) == 1:
        return eye[:, idx[0]]
    if len(idx) == 2:
        return _segment_point(c, eye[:, idx[0]], eye[:, idx[1]], 0.0)
    i, k, j = idx
    wi, wk, wj = w
    q = (wi * diag[i] + wj * diag[j]) / (wi + wj)
    z = _segment_point(c, eye[:, i], eye[:, j], q)
    return _segment_point(c, z, eye[:, k], 0.0)


def _reflector(f: np.ndarray) -> np.ndarray:
    """v with (I - 2 v v^dag) f proportional to e_1; v is unit or zero."""
    alpha = -np.exp(1j * np.angle(f[0])) if abs(f[0]) > 0 else -1.0
    v = f.astype(complex)
    v[0] -= alpha
    nrm = np.linalg.norm(v)
    return v / nrm if nrm > 0 else v


_COMPRESS_MIN = 32


def _compressed_basis(c: np.ndarray) -> Optional[np.ndarray]:
    """Traceless low-rank C vanishes off span(range C, range C^dag): solve there, pad with the rest."""
    d = c.shape[0]
    scale = np.abs(c).max()
    if scale == 0.0:
        return np.eye(d, dtype=complex)
    if abs(np.trace(c)) > 1e-12 * d * scale:
        return None
    v = orth(np.hstack([c, dag(c)]), rcond=1e-14)
    k = v.shape[1]
    if 2 * k > d:
        return None
    inner = zero_diagonal_basis(dag(v) @ c @ v)
    full, _ = np.linalg.qr(v, mode="complete")
    return np.hstack([v @ inner, full[:, k:]])


def zero_diagonal_basis(c: np.ndarray) -> np.ndarray:
    """Unitary E with diag(E^dag C E) = Tr(C)/d, built one column at a time.

    Each column is a zero of the numerical range of the compressed matrix; a Householder
    reflector then deflates onto its orthogonal complement.
    """
    c = np.asarray(c, dtype=complex)
    d = c.shape[0]
    if d > _COMPRESS_MIN:
        e = _compressed_basis(c)
        if e is not None:
            return e
    cw = c - np.trace(c) / d * np.eye(d)
    q = np.eye(d, dtype=complex)
    cols = []
    for _ in range(d - 1):
        cw = cw - np.trace(cw) / cw.shape[0] * np.eye(cw.shape[0])
        f = _zero_vector(cw)
        f = f / np.linalg.norm(f)
        cols.append(q @ f)
        v = _reflector(f)
        # H = I - 2 v v^dag; its first column is parallel to f, the rest span f's complement
        cw = cw - 2.0 * np.outer(v, v.conj() @ cw)
        cw = cw - 2.0 * np.outer(cw @ v, v.conj())
        q = q - 2.0 * np.outer(q @ v, v.conj())
        cw, q = cw[1:, 1:], q[:, 1:]
    cols.append(q[:, 0])
    e = np.column_stack(cols)
    e, r = np.linalg.qr(e)
    return e * (np.diag(r) / np.abs(np.diag(r)))


def _search_basis(c: np.ndarray, seed: int, restarts: int = 20) -> np.ndarray:
    d = c.shape[0]
    iu = np.triu_indices(d, 1)

    def unitary(p):
        h = np.zeros((d, d), dtype=complex)
        h[np.diag_indices(d)] = p[:d]
        k = len(iu[0])
        h[iu] = p[d:d + k] + 1j * p[d + k:]
        h = h + np.triu(h, 1).conj().T
        return expm(1j * h)

    def resid(p):
        e = unitary(p)
        dg = np.diag(dag(e) @ c @ e)
        return np.concatenate([dg.real, dg.imag])

    rng = np.random.default_rng(seed)
    best, best_cost = None, np.inf
    for _ in range(restarts):
        p0 = rng.normal(size=d * d)
        res = least_squares(resid, p0, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400)
        cost = float(np.sum(res.fun ** 2) / 2)
        if cost < best_cost:
            best, best_cost = res.x, cost
        if cost <= tol().walgate_cost ** 2:
            break
    return unitary(best)


# ---------------------------------------------------------------------------
# LOCC measurement


def _as_matrix(psi, cut) -> tuple:
    """Reshape a bipartite state into an (Alice, Bob) coefficient matrix."""
    state = psi if isinstance(psi, PureState) else PureState(np.asarray(psi, dtype=complex))
    dims = state.dims
    alice = tuple(sorted(int(c) for c in cut))
    if not alice or any(not 0 <= a < len(dims) for a in alice):
        raise InputError(f"invalid cut {cut} for {len(dims)} parties")
    bob = tuple(i for i in range(len(dims)) if i not in alice)
    if not bob:
        raise InputError("the cut leaves Bob with no parties")
    perm = [0] * len(dims)
    for slot, party in enumerate(alice + bob):
        perm[party] = slot
    vec = state.vector
    if list(perm) != list(range(len(dims))):
        vec = permutation_operator(dims, perm) @ vec
    da = int(np.prod([dims[a] for a in alice]))
    return vec.reshape(da, -1), state.dims


def conditional_states(basis: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Row k holds Bob's unnormalized state after Alice finds basis vector k."""
    return dag(basis) @ psi


def walgate_measurement(psi0, psi1, cut=(0,), method: str = "constructive", seed: int = 0):
    """Alice basis making Bob's conditional states orthogonal for every outcome.

    Returns ``(basis, cost)`` where the basis columns are Alice's measurement
    vectors and ``cost = sum_k |<eta_k|nu_k>|^2``.
    """
    m0, _ = _as_matrix(psi0, cut)
    m1, _ = _as_matrix(psi1, cut)
    if m0.shape != m1.shape:
        raise InputError("states have different shapes")
    n0, n1 = np.linalg.norm(m0), np.linalg.norm(m1)
    if abs(n0 - 1) > 1e-8 or abs(n1 - 1) > 1e-8:
        raise InputError("states must be normalized")
    overlap = np.vdot(m0.ravel(), m1.ravel())
    if abs(overlap) > tol().overlap:
        raise InputError(f"states are not orthogonal: |<psi0|psi1>| = {abs(overlap):.3e}")
    c = m1 @ dag(m0)
    if method == "constructive":
        e = zero_diagonal_basis(c)
    elif method == "search":
        e = _search_basis(c, seed)
    else:
        raise InputError(f"unknown method {method!r}")
    cost = basis_cost(e, m0, m1)
    if cost > tol().walgate_cost:
        raise NoBasisFound(f"best Alice basis leaves cost {cost:.3e}")
    return UnitaryGate(e), cost


def basis_cost(e: np.ndarray, m0: np.ndarray, m1: np.ndarray) -> float:
    eta = conditional_states(e, m0)
    nu = conditional_states(e, m1)
    return float(np.sum(np.abs(np.sum(eta.conj() * nu, axis=1)) ** 2))


def bob_projectors(e: np.ndarray, m0: np.ndarray) -> list:
    """Normalized hypothesis-0 conditional states (None where that branch vanishes).

    A branch whose hypothesis-0 weight is below ``prob_prune`` is dropped: normalizing a
    near-null row amplifies its residual overlap with the other hypothesis.
    """
    out = []
    for row in conditional_states(e, m0):
        nrm = np.linalg.norm(row)
        out.append(row / nrm if nrm ** 2 > tol().prob_prune else None)
    return out
