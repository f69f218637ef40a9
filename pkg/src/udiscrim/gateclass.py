"""Structural analysis of multipartite gates.

* operator-Schmidt rank across a cut, and the product / product-times-swap test
* the two-qubit canonical decomposition
  ``U = phase (U1 x U2) exp(i(hx XX + hy YY + hz ZZ)) (U3 x U4)``
* the Lie algebra generated by all local gates together with their
  conjugates under U, and the finest party partition whose product group
  contains it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import tol
from .errors import InputError, NumericalFailure
from .linalg import (
    PAULIS,
    SIGMA_I,
    UnitaryGate,
    as_gate,
    dag,
    partial_trace,
    permutation_operator,
    simultaneous_diagonalize,
    svd,
    tensor,
)

PRODUCT = "Product"
PRODUCT_SWAP = "ProductSwap"
PARTITION_PRIMITIVE = "PartitionPrimitive"
IMPRIMITIVE = "Imprimitive"


@dataclass
class GateClass:
    label: str
    local_factors: Optional[list] = None
    partition: Optional[tuple] = None
    permutation: Optional[tuple] = None
    closure_dimension: Optional[int] = None

    @property
    def primitive(self) -> bool:
        return self.label != IMPRIMITIVE


# ---------------------------------------------------------------------------
# realignment and Schmidt rank


def _normalize_cut(dims: Sequence[int], cut) -> tuple:
    n = len(dims)
    side = sorted(set(int(c) for c in cut))
    if not side or len(side) == n or any(c < 0 or c >= n for c in side):
        raise InputError(f"invalid cut {cut} for {n} parties")
    rest = [i for i in range(n) if i not in side]
    return side, rest


def realign(u, dims: Sequence[int], cut) -> np.ndarray:
    """Reshuffle U so that entry ((i,j),(k,l)) equals U[(i,k),(j,l)].

    i, j index the parties in ``cut`` (row, column) and k, l the others.
    """
    m = np.asarray(u.matrix if isinstance(u, UnitaryGate) else u, dtype=complex)
    dims = tuple(dims)
    side, rest = _normalize_cut(dims, cut)
    n = len(dims)
    t = m.reshape(dims + dims)
    axes = side + [n + s for s in side] + rest + [n + r for r in rest]
    ds = int(np.prod([dims[s] for s in side]))
    dr = int(np.prod([dims[r] for r in rest]))
    return np.transpose(t, axes).reshape(ds * ds, dr * dr)


def schmidt_rank(u, cut=(0,), dims=None):
    """Operator-Schmidt rank and coefficients of U across ``cut``."""
    g = as_gate(u, dims)
    if len(g.dims) < 2:
        raise InputError("Schmidt rank needs at least two parties")
    _, s, _ = svd(realign(g.matrix, g.dims, cut))
    rank = int(np.sum(s > tol().schmidt))
    return rank, s


def _product_factors(m: np.ndarray, da: int, db: int):
    """Split a rank-one realignable matrix into A (x) B with A unitary-scaled.

    A is scaled so its largest-modulus entry is real positive; B takes the
    remaining phase.
    """
    r = realign(m, (da, db), (0,))
    left, s, right = svd(r)
    a = np.sqrt(s[0]) * left[:, 0].reshape(da, da)
    b = np.sqrt(s[0]) * np.conj(right[:, 0]).reshape(db, db)
    c = np.sqrt(da) / np.linalg.norm(a)
    a, b = a * c, b / c
    idx = np.unravel_index(np.argmax(np.abs(a)), a.shape)
    ph = a[idx] / abs(a[idx])
    return a / ph, b * ph


def _group_cut(m: np.ndarray, dims, side, rest) -> np.ndarray:
    """Reorder parties so ``side`` comes first."""
    order = list(side) + list(rest)
    perm = [order.index(i) for i in range(len(dims))]
    p = permutation_operator(dims, perm) if order != list(range(len(dims))) else np.eye(m.shape[0])
    return p @ m @ dag(p)


def split_product(m: np.ndarray, dims: Sequence[int], blocks) -> list:
    """Factor a product operator into one matrix per block of parties.

    Returns the block factors in block order; their tensor product,
    reordered to the original party order, reproduces ``m``.
    """
    dims = tuple(dims)
    blocks = [list(b) for b in blocks]
    if len(blocks) == 1:
        return [np.asarray(m)]
    first, rest = blocks[0], [p for b in blocks[1:] for p in b]
    grouped = _group_cut(np.asarray(m), dims, first, rest)
    da = int(np.prod([dims[i] for i in first]))
    db = int(np.prod([dims[i] for i in rest]))
    a, b = _product_factors(grouped, da, db)
    sub_dims = tuple(dims[i] for i in rest)
    sub_blocks = [[rest.index(p) for p in blk] for blk in blocks[1:]]
    return [a] + split_product(b, sub_dims, sub_blocks)


def classify_two_party(u, dims=None) -> GateClass:
    """Product, ProductSwap, or Imprimitive, by the Schmidt rank of U and U.SWAP."""
    g = as_gate(u, dims)
    if len(g.dims) != 2:
        raise InputError("classify_two_party needs exactly two parties; use multiparty_classify")
    da, db = g.dims
    m = g.matrix
    if schmidt_rank(m, (0,), g.dims)[0] == 1:
        a, b = _product_factors(m, da, db)
        if np.abs(tensor(a, b) - m).max() <= tol().reconstruction:
            return GateClass(PRODUCT, [a, b])
    if da == db:
        sw = permutation_operator((da, db), (1, 0))
        ms = m @ sw
        if schmidt_rank(ms, (0,), g.dims)[0] == 1:
            a, b = _product_factors(ms, da, db)
            if np.abs(tensor(a, b) @ sw - m).max() <= tol().reconstruction:
                return GateClass(PRODUCT_SWAP, [a, b])
    return GateClass(IMPRIMITIVE)


# ---------------------------------------------------------------------------
# two-qubit canonical decomposition

MAGIC = np.array(
    [[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]], dtype=complex
) / np.sqrt(2)

_PP = [tensor(p, p) for p in PAULIS]
# in the magic basis sigma_k (x) sigma_k is diagonal with these signs
_MAGIC_SIGNS = np.array([np.real(np.diag(dag(MAGIC) @ pp @ MAGIC)) for pp in _PP])
_SOLVE = np.vstack([_MAGIC_SIGNS, np.ones(4)]).T          # theta = _SOLVE @ (hx, hy, hz, phi)
# fixed mixing of the real and imaginary parts; separates conjugate pairs
_MIX = 0.6180339887498949


def canonical_gate(h) -> np.ndarray:
    """exp(i(hx XX + hy YY + hz ZZ)); the three terms commute."""
    out = np.eye(4, dtype=complex)
    for hk, pp in zip(h, _PP):
        out = out @ (np.cos(hk) * np.eye(4) + 1j * np.sin(hk) * pp)
    return out


@dataclass
class KakDecomposition:
    global_phase: complex
    locals_after: tuple          # (U1, U2), applied last
    canonical_vector: tuple      # (hx, hy, hz)
    locals_before: tuple         # (U3, U4), applied first

    def reconstruct(self) -> np.ndarray:
        a1, a2 = self.locals_after
        b1, b2 = self.locals_before
        return self.global_phase * tensor(a1, a2) @ canonical_gate(self.canonical_vector) @ tensor(b1, b2)


def _rot(axis: int, angle: float) -> np.ndarray:
    return np.cos(angle / 2) * SIGMA_I - 1j * np.sin(angle / 2) * PAULIS[axis]


class _Kak:
    """Mutable workspace: U = phase (a1 x a2) E(h) (b1 x b2)."""

    def __init__(self, phase, a, h, b):
        self.phase, self.a, self.h, self.b = phase, list(a), list(h), list(b)

    def shift(self, k: int, m: int):
        # E(h) = E(h - m pi/2 e_k) (i sigma_k x sigma_k)^m
        if m == 0:
            return
        self.h[k] -= m * np.pi / 2
        p = np.linalg.matrix_power(PAULIS[k], m % 2)
        self.b = [p @ self.b[0], p @ self.b[1]]
        self.phase *= 1j ** (m % 4)

    def flip(self, j: int, k: int):
        # conjugation by sigma_l (x) I negates the j and k terms
        l = 3 - j - k
        s = PAULIS[l]
        self.h[j], self.h[k] = -self.h[j], -self.h[k]
        self.a[0] = self.a[0] @ s
        self.b[0] = s @ self.b[0]

    def swap(self, j: int, k: int):
        # (R x R) E(h) (R x R)^dag exchanges the j and k terms for R = exp(-i pi/4 sigma_l)
        l = 3 - j - k
        r = _rot(l, np.pi / 2)
        self.h[j], self.h[k] = self.h[k], self.h[j]
        self.a = [self.a[0] @ dag(r), self.a[1] @ dag(r)]
        self.b = [r @ self.b[0], r @ self.b[1]]

    def canonicalize(self):
        for k in range(3):
            self.shift(k, int(np.round(self.h[k] / (np.pi / 2))))
        for _ in range(3):  # bubble sort on |h|, descending
            for j in range(2):
                if abs(self.h[j]) < abs(self.h[j + 1]):
                    self.swap(j, j + 1)
        hx, hy = self.h[0], self.h[1]
        if hx < 0 and hy < 0:
            self.flip(0, 1)
        elif hx < 0:
            self.flip(0, 2)
        elif hy < 0:
            self.flip(1, 2)
        # on the face hx = pi/4 the sign of hz is a convention
        if abs(self.h[0] - np.pi / 4) <= 1e-9 and self.h[2] < 0:
            self.shift(0, 1)
            self.flip(0, 2)


def kak_decompose(u) -> KakDecomposition:
    """Canonical decomposition of a two-qubit gate, with h in the Weyl chamber."""
    g = as_gate(u)
    if g.dim != 4 or g.dims not in ((2, 2), (4,)):
        raise InputError(f"kak_decompose needs a two-qubit gate, got dims {g.dims}")
    m = g.matrix
    det = np.linalg.det(m)
    root = det ** 0.25
    us = m / root
    up = dag(MAGIC) @ us @ MAGIC
    sym = up.T @ up
    x, y = sym.real, sym.imag
    o = simultaneous_diagonalize(x + _MIX * y, y).real
    # rows of the real eigenbasis can pick up tiny non-orthogonality; fix with QR
    o, r = np.linalg.qr(o)
    o = o * np.sign(np.diag(r))
    if np.linalg.det(o) < 0:
        o[:, 0] = -o[:, 0]
    d = np.diag(o.T @ sym @ o)
    theta = np.angle(d) / 2
    if int(np.round(theta.sum() / np.pi)) % 2:
        theta[0] += np.pi
    k1 = up @ o @ np.diag(np.exp(-1j * theta))
    coeffs = np.linalg.solve(_SOLVE, theta)
    h, phi = coeffs[:3], coeffs[3]
    left = MAGIC @ k1 @ dag(MAGIC)
    right = MAGIC @ o.T @ dag(MAGIC)
    a1, a2 = _product_factors(left, 2, 2)
    b1, b2 = _product_factors(right, 2, 2)
    work = _Kak(root * np.exp(1j * phi), (a1, a2), h, (b1, b2))
    work.canonicalize()
    out = KakDecomposition(complex(work.phase), tuple(work.a), tuple(float(v) + 0.0 for v in work.h), tuple(work.b))
    err = np.abs(out.reconstruct() - m).max()
    if err > tol().kak_reconstruction:
        raise NumericalFailure(f"KAK reconstruction error {err:.3e}")
    return out


def canonical_class(u) -> tuple:
    """Weyl-chamber coordinates (hx, hy, hz): invariant under local dressing."""
    return kak_decompose(u).canonical_vector


def in_weyl_chamber(h, slack: float = 1e-12) -> bool:
    hx, hy, hz = h
    return np.pi / 4 + slack >= hx >= hy - slack and hy + slack >= abs(hz)


# ---------------------------------------------------------------------------
# Lie closure


def gell_mann(d: int) -> list:
    """Hermitian traceless basis of su(d), orthogonal under Tr(A B)."""
    out = []
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[j, k] = s[k, j] = 1
            out.append(s)
            a = np.zeros((d, d), dtype=complex)
            a[j, k], a[k, j] = -1j, 1j
            out.append(a)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        out.append(np.diag(diag * np.sqrt(2.0 / (l * (l + 1)))).astype(complex))
    return out


def local_generators(dims: Sequence[int]) -> list:
    """i times the padded su(d_p) basis of every party."""
    dims = tuple(dims)
    gens = []
    for p, d in enumerate(dims):
        for gm in gell_mann(d):
            factors = [np.eye(e) for e in dims]
            factors[p] = gm
            gens.append(1j * tensor(*factors))
    return gens


class _Span:
    """Orthonormal basis, under Re Tr(A^dag B), of a real span of matrices."""

    def __init__(self, dim: int, threshold: float):
        self.dim = dim
        self.threshold = threshold
        self.vecs = np.zeros((0, 2 * dim * dim))
        self.mats = []

    def add(self, x: np.ndarray) -> bool:
        v = np.concatenate([x.real.ravel(), x.imag.ravel()])
        nrm = np.linalg.norm(v)
        if nrm < 1e-13:
            return False
        v = v / nrm
        for _ in range(2):
            v = v - self.vecs.T @ (self.vecs @ v)
        r = np.linalg.norm(v)
        if r <= self.threshold:
            return False
        v = v / r
        self.vecs = np.vstack([self.vecs, v])
        half = self.dim * self.dim
        self.mats.append((v[:half] + 1j * v[half:]).reshape(self.dim, self.dim))
        return True

    def __len__(self):
        return len(self.mats)


@dataclass
class LieClosureReport:
    closure_dimension: int
    matched_partition: tuple
    is_universal_on_partition_products: bool
    full_dimension: int
    rounds: int = 1
    residuals: dict = field(default_factory=dict)

    @property
    def imprimitive(self) -> bool:
        return self.closure_dimension == self.full_dimension


_MAX_CLOSURE_DIM = 64


def _close(span: _Span, gens: list, queue: list, full: int):
    while queue and len(span) < full:
        x = queue.pop()
        for g in gens:
            c = x @ g - g @ x
            if span.add(c):
                queue.append(span.mats[-1])
                if len(span) == full:
                    return


def set_partitions(items: Sequence[int]):
    """All set partitions of ``items``; blocks and their contents ordered."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def _canonical_partition(part) -> tuple:
    return tuple(sorted(tuple(sorted(b)) for b in part))


def _partition_projection(x: np.ndarray, dims: tuple, part) -> np.ndarray:
    total = x.shape[0]
    out = np.zeros_like(x)
    for block in part:
        rest = [i for i in range(len(dims)) if i not in block]
        if not rest:
            return x.copy()
        y = partial_trace(x, dims, block)
        d_rest = int(np.prod([dims[i] for i in rest]))
        order = list(block) + rest
        # tensor(y, I) lives on parties in ``order``; move back to natural order
        perm = [0] * len(dims)
        for slot, party in enumerate(order):
            perm[slot] = party
        p = permutation_operator(tuple(dims[i] for i in order), perm)
        out = out + p @ tensor(y / d_rest, np.eye(d_rest)) @ dag(p)
    out = out - (len(part) - 1) * np.trace(x) / total * np.eye(total)
    return out


def _partition_algebra_dim(dims: tuple, part) -> int:
    return sum(int(np.prod([dims[i] for i in b])) ** 2 - 1 for b in part) + 1


def lie_closure(u, dims=None) -> LieClosureReport:
    """Real Lie algebra generated by local gates and their conjugates under U.

    The algebra is enlarged by U-conjugates until U normalizes it, so the
    result is the algebra of the group generated by U and all local gates.
    """
    g = as_gate(u, dims)
    dims = g.dims
    total = g.dim
    if total > _MAX_CLOSURE_DIM:
        raise InputError(f"lie_closure is limited to total dimension {_MAX_CLOSURE_DIM}")
    m = g.matrix
    full = total * total
    span = _Span(total, tol().lie_residual)
    gens = local_generators(dims) + [1j * np.eye(total)]
    queue = []
    for x in gens:
        if span.add(x):
            queue.append(span.mats[-1])
    for x in local_generators(dims):
        y = m @ x @ dag(m)
        if span.add(y):
            queue.append(span.mats[-1])
            gens.append(y)
    rounds = 1
    while True:
        _close(span, gens, queue, full)
        if len(span) == full:
            break
        added = False
        for x in list(span.mats):
            y = m @ x @ dag(m)
            if span.add(y):
                queue.append(span.mats[-1])
                gens.append(y)
                added = True
        if not added:
            break
        rounds += 1

    best, residuals = None, {}
    for part in set_partitions(range(len(dims))):
        key = _canonical_partition(part)
        worst = 0.0
        for x in span.mats:
            worst = max(worst, float(np.linalg.norm(x - _partition_projection(x, dims, key))))
        residuals[key] = worst
        if worst <= tol().lie_residual and (best is None or len(key) > len(best)):
            best = key
    if best is None:
        raise NumericalFailure("closure is not contained in any partition algebra")
    return LieClosureReport(
        closure_dimension=len(span),
        matched_partition=best,
        is_universal_on_partition_products=len(span) == _partition_algebra_dim(dims, best),
        full_dimension=full,
        rounds=rounds,
        residuals=residuals,
    )


def _block_permutations(dims: tuple, part) -> list:
    """Party permutations that move whole blocks onto blocks of identical shape."""
    blocks = [list(b) for b in part]
    shapes = [tuple(dims[i] for i in b) for b in blocks]
    out = []
    for images in itertools.permutations(range(len(blocks))):
        if any(shapes[i] != shapes[j] for i, j in enumerate(images)):
            continue
        perm = [0] * len(dims)
        for i, j in enumerate(images):
            for src, dst in zip(blocks[i], blocks[j]):
                perm[src] = dst
        out.append(tuple(perm))
    # identity first
    ident = tuple(range(len(dims)))
    out.sort(key=lambda p: p != ident)
    return out


def permutation_cycles(perm: Sequence[int]) -> str:
    """1-based cycle notation, e.g. (0, 1 -> swap) gives '(1 2)'; identity gives '()'."""
    seen, cycles = set(), []
    for start in range(len(perm)):
        if start in seen or perm[start] == start:
            seen.add(start)
            continue
        cyc, i = [], start
        while i not in seen:
            seen.add(i)
            cyc.append(i + 1)
            i = perm[i]
        cycles.append("(" + " ".join(str(c) for c in cyc) + ")")
    return "".join(cycles) or "()"


def multiparty_classify(u, dims=None) -> GateClass:
    """Partition-primitivity label: the partition from the Lie closure plus the
    block permutation P with U P^-1 a product over the blocks."""
    g = as_gate(u, dims)
    dims = g.dims
    if len(dims) < 2:
        raise InputError("multiparty_classify needs at least two parties")
    rep = lie_closure(g)
    part = rep.matched_partition
    if rep.imprimitive or len(part) == 1:
        return GateClass(IMPRIMITIVE, partition=part, closure_dimension=rep.closure_dimension)
    m = g.matrix
    for perm in _block_permutations(dims, part):
        p = permutation_operator(dims, perm)
        core = m @ dag(p)
        if all(schmidt_rank(core, blk, dims)[0] == 1 for blk in part):
            factors = split_product(core, dims, part)
            return GateClass(PARTITION_PRIMITIVE, factors, part, perm, rep.closure_dimension)
    raise NumericalFailure(f"no block permutation makes U a product over {part}")


def classify_by_closure(u, dims=None) -> str:
    """Two-party label derived from the closure partition, with the Schmidt rank
    separating Product from ProductSwap."""
    g = as_gate(u, dims)
    rep = lie_closure(g)
    if len(rep.matched_partition) == 1:
        return IMPRIMITIVE
    if schmidt_rank(g.matrix, (0,), g.dims)[0] == 1:
        return PRODUCT
    return PRODUCT_SWAP
