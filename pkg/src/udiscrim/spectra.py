"""Covering arcs of eigenvalue sets and the run counts they imply.

Two gates U and V are perfectly distinguishable with N parallel uses exactly
when the eigenvalues of (U^dag V)^{(x)N} are not confined to an open
half-circle. The eigen-angles of a tensor power are the N-fold sums of the
single-copy angles, so everything here works on angle sumsets.
"""
from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import tol
from .errors import InputError, NotDistinguishableError
from .linalg import (
    PureState,
    as_array,
    as_gate,
    check_density,
    dag,
    direct_sum,
    eig_unitary,
    permutation_operator,
    tensor,
)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ArcReport:
    angles: np.ndarray
    delta: float
    largest_gap: float
    distinguishable_now: bool


@dataclass
class RunPlan:
    """Outcome of a run-count query. ``n_runs is None`` means not distinguishable."""

    n_runs: Optional[int]
    delta: float
    formula_n: Optional[int]
    arcs: list = field(default_factory=list)
    terms: list = field(default_factory=list)     # (probability, eigen-index tuple)
    eigenvectors: Optional[np.ndarray] = None     # columns indexed by the tuples
    input_state: Optional[PureState] = None
    certified_overlap: float = float("nan")

    @property
    def distinguishable(self) -> bool:
        return self.n_runs is not None


# ---------------------------------------------------------------------------
# angle sets


def _wrap(angles) -> np.ndarray:
    return np.mod(np.asarray(angles, dtype=float), TWO_PI)


def _merge(points: np.ndarray, prov: Optional[np.ndarray], gap: float):
    """Sort angles in [0, 2pi) and collapse runs closer than ``gap``."""
    points = _wrap(points)
    order = np.argsort(points, kind="stable")
    points = points[order]
    if prov is not None:
        prov = prov[order]
    if points.size == 0:
        return points, prov
    keep = np.ones(points.size, dtype=bool)
    keep[1:] = np.diff(points) > gap
    points = points[keep]
    if prov is not None:
        prov = prov[keep]
    if points.size > 1 and points[0] + TWO_PI - points[-1] <= gap:
        points = points[:-1]
        if prov is not None:
            prov = prov[:-1]
    return points, prov


def _thin(points: np.ndarray, prov: np.ndarray, cap: int):
    """Bound the number of sumset points without changing any gap wider than
    the cluster width: each greedy cluster keeps only its two extremes."""
    width = TWO_PI / cap
    while points.size > cap:
        keep = np.zeros(points.size, dtype=bool)
        start = 0
        for i in range(1, points.size + 1):
            if i == points.size or points[i] - points[start] > width:
                keep[start] = True
                keep[i - 1] = True
                start = i
        if keep.sum() <= cap:
            return points[keep], prov[keep]
        width *= 2.0
    return points, prov


def _gaps(points: np.ndarray) -> np.ndarray:
    if points.size < 2:
        return np.array([TWO_PI])
    return np.append(np.diff(points), points[0] + TWO_PI - points[-1])


def _arc(points: np.ndarray) -> ArcReport:
    if points.size < 2:
        return ArcReport(points, 0.0, TWO_PI, False)
    largest = float(_gaps(points).max())
    delta = TWO_PI - largest
    return ArcReport(points, delta, largest, delta >= np.pi - tol().arc_slack)


def covering_arc(eigenvalues: Sequence[complex]) -> ArcReport:
    """Length of the shortest arc of the unit circle holding every eigenvalue."""
    lam = np.asarray(eigenvalues, dtype=complex).reshape(-1)
    if lam.size == 0:
        raise InputError("covering_arc needs at least one eigenvalue")
    if np.abs(np.abs(lam) - 1.0).max() > tol().unit_modulus:
        raise InputError("eigenvalues must lie on the unit circle")
    points, _ = _merge(np.angle(lam), None, tol().angle_merge)
    return _arc(points)


def sumset_levels(angles: Sequence[float], max_n: int):
    """Yield ``(n, points, provenance)`` for n = 1..max_n.

    ``points`` are the distinct n-fold sums of ``angles`` mod 2 pi and row i of
    ``provenance`` lists which base angles add up to ``points[i]``.
    """
    base = np.asarray(angles, dtype=float)
    gap, cap = tol().angle_merge, tol().sumset_cap
    m = base.size
    points, prov = _merge(base, np.arange(m).reshape(m, 1), gap)
    points, prov = _thin(points, prov, cap)
    yield 1, points, prov
    for n in range(2, max_n + 1):
        sums = (points[:, None] + base[None, :]).reshape(-1)
        new_prov = np.concatenate(
            [np.repeat(prov, m, axis=0), np.tile(np.arange(m), points.size).reshape(-1, 1)], axis=1
        )
        points, prov = _merge(sums, new_prov, gap)
        points, prov = _thin(points, prov, cap)
        yield n, points, prov


def _distinct_eigen(w) -> tuple:
    """Distinct eigen-angles of a unitary with one eigenvector for each."""
    spec = eig_unitary(w)
    angles = spec.angles
    points, prov = _merge(angles, np.arange(angles.size).reshape(-1, 1), tol().angle_merge)
    return points, spec.eigenvectors[:, prov[:, 0]]


def _ceiling_rule(delta: float) -> Optional[int]:
    if delta <= 0.0:
        return None
    return max(1, math.ceil(np.pi / delta - tol().arc_slack))


# ---------------------------------------------------------------------------
# orthogonalizing weights


def _zero_weights(points: np.ndarray):
    """Convex weights over at most three points of the circle summing to 0.

    Returns ``(indices, probabilities)``. Requires the largest gap between
    consecutive points to be at most pi (up to slack).
    """
    slack = tol().arc_slack
    n = points.size
    # antipodal pair first: it also covers the boundary case delta ~ pi
    for i in range(n):
        target = (points[i] + np.pi) % TWO_PI
        j = bisect_left(points.tolist(), target) % n
        for k in (j - 1, j, (j + 1) % n):
            k %= n
            d = abs((points[k] - target + np.pi) % TWO_PI - np.pi)
            if k != i and d <= slack:
                return [i, k], np.array([0.5, 0.5])
    # every gap < pi: triangle through point 0 and the neighbours of its antipode
    a = 0
    rel = (points - points[a]) % TWO_PI
    inside = np.nonzero((rel > 0) & (rel < np.pi))[0]
    outside = np.nonzero(rel > np.pi)[0]
    if inside.size == 0 or outside.size == 0:
        raise NotDistinguishableError("eigenvalue products do not surround the origin")
    b = inside[np.argmax(rel[inside])]
    c = outside[np.argmin(rel[outside])]
    idx = [a, int(b), int(c)]
    th = points[idx]
    mat = np.vstack([np.cos(th), np.sin(th), np.ones(3)])
    p = np.linalg.solve(mat, np.array([0.0, 0.0, 1.0]))
    if p.min() < -1e-12:
        raise NotDistinguishableError("no triangle of eigenvalue products contains the origin")
    p = np.clip(p, 0.0, None)
    return idx, p / p.sum()


def _overlap_from_terms(w: np.ndarray, vecs: np.ndarray, terms) -> complex:
    """<psi| W^{(x)N} |psi> for psi = sum_t sqrt(p_t) (x)_k vecs[:, t_k]."""
    g = dag(vecs) @ w @ vecs
    total = 0.0 + 0.0j
    for p, s in terms:
        for q, t in terms:
            total += np.sqrt(p * q) * np.prod([g[i, j] for i, j in zip(s, t)])
    return complex(total)


def _materialize(vecs: np.ndarray, terms) -> np.ndarray:
    out = 0
    for p, t in terms:
        out = out + np.sqrt(p) * tensor(*[vecs[:, i] for i in t])
    return np.asarray(out).reshape(-1)


_MATERIALIZE_LIMIT = 1 << 16


def _plan_from_level(w: np.ndarray, vecs: np.ndarray, points, prov, n: int, dims) -> tuple:
    idx, p = _zero_weights(points)
    terms = [(float(pi), tuple(int(x) for x in prov[i])) for i, pi in zip(idx, p) if pi > 0.0]
    overlap = abs(_overlap_from_terms(w, vecs, terms))
    state = None
    if vecs.shape[0] ** n <= _MATERIALIZE_LIMIT:
        vec = _materialize(vecs, terms)
        state = PureState(vec / np.linalg.norm(vec), tuple(dims) * n)
    return terms, overlap, state


def orthogonal_input(w, n: int) -> PureState:
    """Input on n copies whose image under W^{(x)n} is orthogonal to itself.

    Raises ``NotDistinguishableError`` when the n-fold covering arc is below pi.
    """
    gate = as_gate(w)
    if n < 1:
        raise InputError("n must be >= 1")
    points, vecs = _distinct_eigen(gate)
    for level, pts, prov in sumset_levels(points, n):
        if level == n:
            if not _arc(pts).distinguishable_now:
                raise NotDistinguishableError(f"covering arc of W^(x){n} is below pi")
            idx, p = _zero_weights(pts)
            terms = [(float(pi), tuple(int(x) for x in prov[i])) for i, pi in zip(idx, p) if pi > 0.0]
            vec = _materialize(vecs, terms)
            return PureState(vec / np.linalg.norm(vec), gate.dims * n)
    raise AssertionError("unreachable")


def orthogonal_terms(w, n: int):
    """Like :func:`orthogonal_input` but returns ``(terms, eigenvectors)`` only."""
    points, vecs = _distinct_eigen(w)
    for level, pts, prov in sumset_levels(points, n):
        if level == n:
            if not _arc(pts).distinguishable_now:
                raise NotDistinguishableError(f"covering arc of W^(x){n} is below pi")
            idx, p = _zero_weights(pts)
            return [(float(pi), tuple(int(x) for x in prov[i])) for i, pi in zip(idx, p) if pi > 0.0], vecs
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# run counts


def _check_pair(u, v):
    u, v = as_gate(u), as_gate(v)
    if u.dim != v.dim:
        raise InputError(f"dimension mismatch: {u.dim} vs {v.dim}")
    return u, v


def min_runs(u, v, max_n: Optional[int] = None) -> RunPlan:
    """Smallest number of parallel uses separating U from V perfectly."""
    u, v = _check_pair(u, v)
    max_n = tol().max_n if max_n is None else int(max_n)
    if not 1 <= max_n <= 16:
        raise InputError("max_n must be between 1 and 16")
    w = dag(u.matrix) @ v.matrix
    points, vecs = _distinct_eigen(w)
    first = _arc(points)
    plan = RunPlan(None, first.delta, _ceiling_rule(first.delta))
    if points.size < 2:
        plan.arcs = [0.0]
        return plan
    for n, pts, prov in sumset_levels(points, max_n):
        arc = _arc(pts)
        plan.arcs.append(arc.delta)
        if arc.distinguishable_now:
            plan.n_runs = n
            plan.terms, plan.certified_overlap, plan.input_state = _plan_from_level(
                w, vecs, pts, prov, n, u.dims)
            plan.eigenvectors = vecs
            break
    return plan


def min_runs_embedded(u, v, k: int, max_n: Optional[int] = None) -> RunPlan:
    """``min_runs`` after padding both gates with k extra levels on which they act trivially."""
    u, v = _check_pair(u, v)
    return min_runs(direct_sum(u, k), direct_sum(v, k), max_n)


def sumset_arc(u, n: int) -> float:
    """Covering arc of the n-fold sumset of a unitary's eigen-angles."""
    points, _ = _distinct_eigen(u)
    delta = 0.0
    for _, pts, _ in sumset_levels(points, n):
        delta = _arc(pts).delta
    return delta


def product_local_arcs(u1, u2, n: int):
    """Covering arcs of U1^{(x)n} and U2^{(x)n} and whether product inputs suffice.

    For W = U1 (x) U2 with product input |r>|s> the overlap factorizes, so one
    of the two factors alone must reach an arc of pi.
    """
    d1 = sumset_arc(u1, n)
    d2 = sumset_arc(u2, n)
    return d1, d2, max(d1, d2) >= np.pi - tol().arc_slack


def local_product_runs(u1, u2, max_n: Optional[int] = None) -> Optional[int]:
    """Smallest n at which :func:`product_local_arcs` succeeds, or None."""
    max_n = tol().max_n if max_n is None else int(max_n)
    for n in range(1, max_n + 1):
        if product_local_arcs(u1, u2, n)[2]:
            return n
    return None


# ---------------------------------------------------------------------------
# controlled unitaries


@dataclass(frozen=True)
class ControlTraceReport:
    lhs: complex
    rhs: complex
    x: float
    min_n_control: Optional[int]


def _power_state(rho: np.ndarray, d: int, n: int, label: str) -> np.ndarray:
    if rho.shape[0] == d ** n:
        return rho
    if rho.shape[0] == d:
        return tensor(*([rho] * n)) if n > 1 else rho
    raise InputError(f"{label} must act on one copy (dim {d}) or on {n} copies (dim {d ** n})")


def control_unitary_trace(p1, u, rho_a, rho_b, n: int, max_n: Optional[int] = None) -> ControlTraceReport:
    """Trace of the n-fold controlled gate W = P1 (x) I + (I - P1) (x) u on a product input.

    ``rho_a`` and ``rho_b`` may be single-copy states (then their n-th tensor
    power is used) or states on Alice's / Bob's n copies. Alice's state must
    lie in the span of the all-P1 and all-(I - P1) sectors; this is what lets
    the trace collapse to x + (1 - x) sum_i b_i <b_i|rho_B|b_i>.
    """
    p1 = as_array(p1)
    if p1.ndim != 2 or p1.shape[0] != p1.shape[1]:
        raise InputError("P1 must be square")
    if np.abs(p1 @ p1 - p1).max() > tol().projector or np.abs(p1 - dag(p1)).max() > tol().projector:
        raise InputError("P1 is not an orthogonal projector")
    ug = as_gate(u)
    da, db = p1.shape[0], ug.dim
    if n < 1:
        raise InputError("n must be >= 1")
    ra = _power_state(check_density(rho_a), da, n, "rho_A")
    rb = _power_state(check_density(rho_b), db, n, "rho_B")

    p2 = np.eye(da) - p1
    p1n = tensor(*([p1] * n))
    p2n = tensor(*([p2] * n))
    x = float(np.real(np.trace(p1n @ ra)))
    leak = 1.0 - x - float(np.real(np.trace(p2n @ ra)))
    if abs(leak) > tol().projector:
        raise InputError("rho_A has weight on mixed control sectors; the two-term formula does not apply")

    # direct evaluation on the interleaved (A1 B1 A2 B2 ...) register
    w = tensor(p1, np.eye(db)) + tensor(p2, ug.matrix)
    wn = tensor(*([w] * n))
    grouped = tensor(ra, rb)
    dims = (da,) * n + (db,) * n
    perm = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    pop = permutation_operator(dims, perm) if n > 1 else np.eye(da * db)
    interleaved = pop @ grouped @ dag(pop)
    lhs = complex(np.trace(wn @ interleaved))

    spec = eig_unitary(tensor(*([ug.matrix] * n)))
    b = spec.eigenvalues
    bv = spec.eigenvectors
    weights = np.real(np.einsum("ij,ik,kj->j", np.conj(bv), rb, bv))
    rhs = complex(x + (1.0 - x) * np.sum(b * weights))

    return ControlTraceReport(lhs, rhs, x, control_min_runs(ug, max_n))


def control_min_runs(u, max_n: Optional[int] = None) -> Optional[int]:
    """Smallest n with {1} together with the spectrum of u^{(x)n} spanning an arc >= pi."""
    max_n = tol().max_n if max_n is None else int(max_n)
    points, _ = _distinct_eigen(u)
    for n, pts, _ in sumset_levels(points, max_n):
        merged, _ = _merge(np.append(pts, 0.0), None, tol().angle_merge)
        if _arc(merged).distinguishable_now:
            return n
    return None
