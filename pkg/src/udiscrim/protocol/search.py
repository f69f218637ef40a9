"""Product inputs (optionally with local ancillas) giving orthogonal outputs.

For per-copy gates X0, X1 and W = X0^dag X1 we look for Alice and Bob states
with <a b| W^(x)n |a b> = 0. Exact constructions are tried first; a seeded
least-squares search over both factors covers the rest.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from ..config import tol
from ..errors import NotDistinguishableError
from ..gateclass import PRODUCT, classify_two_party
from ..linalg import SIGMA_X, SIGMA_Y, apply_op, dag
from ..spectra import orthogonal_input, sumset_arc

_SEARCH_LIMIT = 2 ** 16   # amplitudes per trial state in the numerical search


@dataclass
class ProductInput:
    n: int
    alice: np.ndarray          # vector on (A_1..A_n[, A'])
    bob: np.ndarray            # vector on (B_1..B_n[, B'])
    alice_dims: tuple
    bob_dims: tuple
    method: str
    overlap: float = float("nan")


def _layout(dims, n, ra, rb):
    da, db = dims
    a_dims = (da,) * n + ((ra,) if ra > 1 else ())
    b_dims = (db,) * n + ((rb,) if rb > 1 else ())
    return a_dims, b_dims


def copy_wires(n: int, alice_dims: tuple) -> list:
    """(A_c, B_c) wire pairs in the joint Alice-then-Bob register."""
    na = len(alice_dims)
    return [(c, na + c) for c in range(n)]


def overlap(w: np.ndarray, inp: ProductInput, dims) -> complex:
    state = np.kron(inp.alice, inp.bob)
    full = inp.alice_dims + inp.bob_dims
    out = state
    for wires in copy_wires(inp.n, inp.alice_dims):
        out = apply_op(out, full, w, wires)
    return complex(np.vdot(state, out))


def _basis_candidates(d: int) -> list:
    """Single-party test states: computational and Fourier bases, plus Pauli eigenstates for qubits."""
    eye = np.eye(d, dtype=complex)
    cands = [eye[:, k] for k in range(d)]
    f = np.exp(2j * np.pi * np.outer(np.arange(d), np.arange(d)) / d) / np.sqrt(d)
    cands += [f[:, k] for k in range(d)]
    if d == 2:
        for p in (SIGMA_X, SIGMA_Y):
            _, v = np.linalg.eigh(p)
            cands += [v[:, 0], v[:, 1]]
    return cands


def _restricted(w: np.ndarray, dims, side: int, s: np.ndarray) -> Optional[np.ndarray]:
    """Operator on the other party when ``side`` holds ``s`` and W leaves it there."""
    da, db = dims
    wt = w.reshape(da, db, da, db)
    if side == 1:
        op = np.einsum("b,ibjc,c->ij", s.conj(), wt, s)
    else:
        op = np.einsum("a,aibj,b->ij", s.conj(), wt, s)
    if np.abs(dag(op) @ op - np.eye(op.shape[0])).max() > 1e-10:
        return None
    return op


def _exact(w: np.ndarray, dims, n: int) -> Optional[ProductInput]:
    da, db = dims
    if n == 1 and abs(np.trace(w)) / (da * db) <= tol().trace_zero:
        a = np.eye(da, dtype=complex).ravel() / np.sqrt(da)
        b = np.eye(db, dtype=complex).ravel() / np.sqrt(db)
        return ProductInput(1, a, b, (da, da), (db, db), "choi")
    cls = classify_two_party(w, dims)
    if cls.label == PRODUCT:
        w1, w2 = cls.local_factors
        for side, (mine, d_mine, d_other) in enumerate(((w1, da, db), (w2, db, da))):
            if sumset_arc(mine, n) >= np.pi - tol().arc_slack:
                loc = orthogonal_input(mine, n).vector
                other = np.zeros(d_other ** n, dtype=complex)
                other[0] = 1.0
                a, b = (loc, other) if side == 0 else (other, loc)
                return ProductInput(n, a, b, (da,) * n, (db,) * n, "product-local")
    # one party parked in a state the gate preserves; the other sees a local unitary
    for side, (d_park, d_free) in ((1, (db, da)), (0, (da, db))):
        for s in _basis_candidates(d_park):
            op = _restricted(w, dims, side, s)
            if op is None or sumset_arc(op, n) < np.pi - tol().arc_slack:
                continue
            loc = orthogonal_input(op, n).vector
            park = s
            for _ in range(n - 1):
                park = np.kron(park, s)
            a, b = (loc, park) if side == 1 else (park, loc)
            return ProductInput(n, a, b, (da,) * n, (db,) * n, "eigen-park")
    return None


def _apply_copies(state, full, w, n, alice_dims):
    for wires in copy_wires(n, alice_dims):
        state = apply_op(state, full, w, wires)
    return state


def _numeric(w: np.ndarray, dims, n: int, rng, ra: int, rb: int, restarts: int) -> Optional[ProductInput]:
    a_dims, b_dims = _layout(dims, n, ra, rb)
    full = a_dims + b_dims
    sa, sb = int(np.prod(a_dims)), int(np.prod(b_dims))
    wd = dag(w)
    cache = {}

    def unpack(x):
        al = x[:sa] + 1j * x[sa:2 * sa]
        be = x[2 * sa:2 * sa + sb] + 1j * x[2 * sa + sb:]
        return al, be

    def evaluate(x):
        key = x.tobytes()
        if key not in cache:
            cache.clear()
            al, be = unpack(x)
            psi = np.kron(al, be)
            phi = _apply_copies(psi, full, w, n, a_dims)
            na, nb = np.vdot(al, al).real, np.vdot(be, be).real
            cache[key] = (al, be, psi, phi, na, nb, np.vdot(psi, phi) / (na * nb))
        return cache[key]

    def resid(x):
        f = evaluate(x)[-1]
        return np.array([f.real, f.imag])

    def jac(x):
        al, be, psi, phi, na, nb, f = evaluate(x)
        back = _apply_copies(psi, full, wd, n, a_dims).reshape(sa, sb).conj()
        fm = phi.reshape(sa, sb)
        s = na * nb
        dfa = back @ be / s - f * al.conj() / na          # d f / d alpha
        dfa_c = fm @ be.conj() / s - f * al / na           # d f / d alpha*
        dfb = back.T @ al / s - f * be.conj() / nb
        dfb_c = fm.T @ al.conj() / s - f * be / nb
        row = np.concatenate([dfa + dfa_c, 1j * (dfa - dfa_c), dfb + dfb_c, 1j * (dfb - dfb_c)])
        return np.vstack([row.real, row.imag])

    for _ in range(restarts):
        x0 = rng.normal(size=2 * (sa + sb))
        res = least_squares(resid, x0, jac=jac, method="trf", xtol=1e-15, ftol=1e-15,
                            gtol=1e-15, max_nfev=300)
        if np.hypot(*res.fun) <= 1e-13:
            al, be = unpack(res.x)
            return ProductInput(n, al / np.linalg.norm(al), be / np.linalg.norm(be), a_dims, b_dims,
                                "search" if ra == rb == 1 else "search-ancilla")
    return None


def find_product_input(x0, x1, dims, n_min: int = 1, n_max: Optional[int] = None,
                       seed: int = 0, restarts: int = 8) -> Optional[ProductInput]:
    """Smallest n in [n_min, n_max] with a certified product input, or None."""
    x0, x1 = np.asarray(x0, dtype=complex), np.asarray(x1, dtype=complex)
    dims = tuple(dims)
    n_max = tol().max_n if n_max is None else n_max
    w = dag(x0) @ x1
    rng = np.random.default_rng(seed)
    for n in range(max(1, n_min), n_max + 1):
        if sumset_arc(w, n) < np.pi - tol().arc_slack:
            continue
        candidates = [lambda: _exact(w, dims, n)]
        size = (dims[0] * dims[1]) ** n
        if size <= _SEARCH_LIMIT:
            candidates.append(lambda: _numeric(w, dims, n, rng, 1, 1, restarts))
        if size * size <= _SEARCH_LIMIT:
            candidates.append(lambda: _numeric(w, dims, n, rng, dims[0] ** n, dims[1] ** n, restarts))
        for make in candidates:
            try:
                found = make()
            except NotDistinguishableError:
                found = None
            if found is None:
                continue
            found.overlap = abs(overlap(w, found, dims))
            if found.overlap <= tol().overlap:
                return found
    return None
