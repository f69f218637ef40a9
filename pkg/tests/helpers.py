"""Independent reference computations used as test oracles."""
import itertools

import numpy as np
from scipy.linalg import expm

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)
XX, YY, ZZ = np.kron(X, X), np.kron(Y, Y), np.kron(Z, Z)


def haar(d, rng):
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def local(rng):
    return np.kron(haar(2, rng), haar(2, rng))


def canonical(hx, hy, hz):
    return expm(1j * (hx * XX + hy * YY + hz * ZZ))


def traceless_unitary(d, rng):
    """Q diag(e^{i(a + 2 pi k / d)}) Q^dag: eigenphases evenly spaced, so the trace vanishes."""
    q = haar(d, rng)
    a = rng.uniform(0, 2 * np.pi)
    lam = np.exp(1j * (a + 2 * np.pi * np.arange(d) / d))
    return (q * lam) @ q.conj().T


def random_state(d, rng):
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_density(d, rng, rank=None):
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def arc_of_angles(angles):
    """Smallest covering arc of points on the circle, by sorting and largest gap."""
    a = np.sort(np.mod(np.asarray(angles, dtype=float), 2 * np.pi))
    if a.size == 0:
        return 0.0
    gaps = np.diff(np.concatenate([a, [a[0] + 2 * np.pi]]))
    return 2 * np.pi - gaps.max()


def brute_force_runs(angles, max_n=12, slack=1e-9):
    """Smallest N with the N-fold angle sums covering an arc >= pi, by enumeration."""
    angles = list(angles)
    for n in range(1, max_n + 1):
        sums = [sum(c) for c in itertools.combinations_with_replacement(angles, n)]
        # distinct points only; exact duplicates mod 2 pi do not change the arc
        if arc_of_angles(sums) >= np.pi - slack:
            return n
    return None


def kron_all(mats):
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out
