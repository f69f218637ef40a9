"""Two-hypothesis plans and their execution against an oracle.

A plan fixes a per-copy circuit (oracle calls interleaved with local gates),
the number of parallel copies, a product input and the one-way measurement.
Plans depend only on the hypotheses, so one plan serves many trials.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..config import tol
from ..errors import (BudgetExceeded, InputError, NotDistinguishableError,
                      StrategyInapplicable)
from ..gateclass import IMPRIMITIVE, classify_two_party, kak_decompose
from ..linalg import SIGMA_I, SIGMA_X, SIGMA_Y, SIGMA_Z, PureState, apply_op, as_gate, dag, tensor
from ..spectra import min_runs
from .measurement import bob_projectors, walgate_measurement
from .oracle import Oracle, Transcript, Verdict, score
from .search import ProductInput, copy_wires, find_product_input

PIPELINE_BUDGET = 20
_STATE_LIMIT = 2 ** 22


# ---------------------------------------------------------------------------
# circuits


@dataclass
class Circuit:
    """Time-ordered steps: ``None`` is an oracle call, ``(a, b)`` a local layer."""

    steps: list = field(default_factory=list)
    name: str = "direct"

    @property
    def uses(self) -> int:
        return sum(s is None for s in self.steps)

    def gate(self) -> "Circuit":
        self.steps.append(None)
        return self

    def local(self, a, b) -> "Circuit":
        a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
        if self.steps and self.steps[-1] is not None:
            pa, pb = self.steps[-1]
            self.steps[-1] = (a @ pa, b @ pb)
        else:
            self.steps.append((a, b))
        return self

    def extend(self, other: "Circuit") -> "Circuit":
        for s in other.steps:
            if s is None:
                self.gate()
            else:
                self.local(*s)
        return self

    def evaluate(self, x) -> np.ndarray:
        m = np.asarray(x, dtype=complex)
        out = np.eye(m.shape[0], dtype=complex)
        for s in self.steps:
            out = (m if s is None else tensor(*s)) @ out
        return out


def _strip(kak) -> Circuit:
    """S(X) = (a1 x a2)^dag X (b1 x b2)^dag, mapping the gate itself to its canonical core."""
    (a1, a2), (b1, b2) = kak.locals_after, kak.locals_before
    return Circuit().local(dag(b1), dag(b2)).gate().local(dag(a1), dag(a2))


FOLD_AXES = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}


def fold_circuit(kak, axis: str = "x") -> Circuit:
    """f(X) = A S(X) A S(X) with A = P (x) I for the Pauli P on ``axis``.

    A commutes with one of XX, YY, ZZ and anticommutes with the other two, so f(G) is
    proportional to exp(2i h_P PP): the fold keeps a single coordinate of G.
    """
    c = Circuit(name="fold" if axis == "x" else f"fold-{axis}")
    for _ in range(2):
        c.extend(_strip(kak)).local(FOLD_AXES[axis], SIGMA_I)
    return c


CONJUGATORS = {
    "YI": (SIGMA_Y, SIGMA_I), "ZI": (SIGMA_Z, SIGMA_I),
    "IY": (SIGMA_I, SIGMA_Y), "IZ": (SIGMA_I, SIGMA_Z),
}


def conjugation_circuit(kak, label: str) -> Circuit:
    """g(X) = A' f(X) A'^dag f(X); g(G) is proportional to the identity."""
    a, b = CONJUGATORS[label]
    c = Circuit(name=f"conjugation-{label}")
    c.extend(fold_circuit(kak)).local(dag(a), dag(b))
    c.extend(fold_circuit(kak)).local(a, b)
    return c


def inverse_circuit(kak) -> Circuit:
    """R(X) = G^dag X, with G^dag assembled from three further forward calls."""
    (a1, a2), (b1, b2) = kak.locals_after, kak.locals_before
    z, x = (SIGMA_Z, SIGMA_I), (SIGMA_X, SIGMA_I)
    c = Circuit(name="inverse").gate().local(dag(a1), dag(a2))
    # E(-h) = [Z S Z][X Z S Z S X] as a matrix product, so time order is reversed
    body = [x, "S", z, "S", z, x, z, "S", z]
    for item in body:
        if item == "S":
            c.extend(_strip(kak))
        else:
            c.local(*item)
    return c.local(dag(b1), dag(b2))


def _phase_equivalent(x0: np.ndarray, x1: np.ndarray) -> bool:
    d = x0.shape[0]
    return abs(np.trace(dag(x0) @ x1)) / d >= 1.0 - tol().trace_zero


def _single_axis(f: np.ndarray) -> Optional[float]:
    """x with f proportional to exp(i x XX), else None."""
    xx = np.kron(SIGMA_X, SIGMA_X)
    c0 = np.trace(f) / 4
    c1 = np.trace(xx @ f) / 4
    if np.abs(f - c0 * np.eye(4) - c1 * xx).max() > 1e-9:
        return None
    if abs(c0) > 1e-12 and abs((c1 / c0).real) > 1e-9:
        return None
    return float(np.arctan2(abs(c1), abs(c0)))


# ---------------------------------------------------------------------------
# plans


@dataclass
class PairPlan:
    pair: tuple
    circuit: Circuit
    inp: ProductInput
    basis: np.ndarray
    bob_states: list
    walgate_cost: float
    branch: str
    dims: tuple

    @property
    def n_copies(self) -> int:
        return self.inp.n

    @property
    def uses(self) -> int:
        return self.circuit.uses * self.inp.n

    @property
    def wires(self) -> dict:
        na, nb = len(self.inp.alice_dims), len(self.inp.bob_dims)
        return {"alice": set(range(na)), "bob": set(range(na, na + nb))}


def _bipartite_dims(g) -> tuple:
    dims = g.dims
    if len(dims) == 1:
        r = int(round(np.sqrt(dims[0])))
        if r * r == dims[0] and r >= 2:
            return r, r
        raise InputError(f"gate dims {dims} do not describe two parties")
    return dims[0], int(np.prod(dims[1:]))


def _run_copies(state, plan_inp: ProductInput, circuit: Circuit, apply_gate, transcript=None):
    full = plan_inp.alice_dims + plan_inp.bob_dims
    for a_w, b_w in copy_wires(plan_inp.n, plan_inp.alice_dims):
        for s in circuit.steps:
            if s is None:
                state = apply_gate(state, full, (a_w, b_w))
            else:
                state = apply_op(state, full, s[0], (a_w,))
                state = apply_op(state, full, s[1], (b_w,))
                if transcript is not None:
                    transcript.local("alice", (a_w,))
                    transcript.local("bob", (b_w,))
    return state


def _simulate(inp: ProductInput, circuit: Circuit, m: np.ndarray) -> np.ndarray:
    state = np.kron(inp.alice, inp.bob)
    return _run_copies(state, inp, circuit, lambda s, d, w: apply_op(s, d, m, w))


def _finish(pair, u, v, circuit: Circuit, inp: ProductInput, branch: str, dims) -> PairPlan:
    size = int(np.prod(inp.alice_dims + inp.bob_dims))
    if size > _STATE_LIMIT:
        raise StrategyInapplicable(f"plan needs {size} amplitudes, above the simulation limit")
    sa = int(np.prod(inp.alice_dims))
    out0 = _simulate(inp, circuit, u).reshape(sa, -1)
    out1 = _simulate(inp, circuit, v).reshape(sa, -1)
    grouped = out0.shape
    basis, cost = walgate_measurement(PureState(out0.ravel(), grouped), PureState(out1.ravel(), grouped))
    basis = basis.matrix
    return PairPlan(tuple(pair), circuit, inp, basis, bob_projectors(basis, out0), cost, branch, dims)


def plan_choi(u, v, pair=(0, 1)) -> PairPlan:
    u, v = as_gate(u), as_gate(v)
    dims = _bipartite_dims(u)
    t = abs(np.trace(dag(v.matrix) @ u.matrix)) / u.dim
    if t > tol().trace_zero:
        raise StrategyInapplicable(f"|Tr(V^dag U)|/d = {t:.3e} is not zero")
    inp = find_product_input(u.matrix, v.matrix, dims, 1, 1)
    if inp is None or inp.method != "choi":
        raise StrategyInapplicable("entangled-ancilla input did not certify orthogonal outputs")
    return _finish(pair, u.matrix, v.matrix, Circuit().gate(), inp, "choi", dims)


def plan_parallel(u, v, pair=(0, 1), max_n: Optional[int] = None, seed: int = 0) -> PairPlan:
    u, v = as_gate(u), as_gate(v)
    dims = _bipartite_dims(u)
    max_n = tol().max_n if max_n is None else max_n
    rp = min_runs(u, v, max_n)
    if rp.n_runs is None:
        raise StrategyInapplicable(f"no global run count up to {max_n}")
    inp = find_product_input(u.matrix, v.matrix, dims, rp.n_runs, max_n, seed=seed)
    if inp is None:
        raise StrategyInapplicable(f"no product input found for n in [{rp.n_runs}, {max_n}]")
    return _finish(pair, u.matrix, v.matrix, Circuit().gate(), inp, f"parallel-{inp.method}", dims)


def _pipeline_candidates(u: np.ndarray, v: np.ndarray) -> list:
    cu, cv = classify_two_party(u, (2, 2)), classify_two_party(v, (2, 2))
    ku, kv = kak_decompose(u), kak_decompose(v)
    direct = ("direct", Circuit().gate())
    fold_u = ("fold-U", fold_circuit(ku))
    fold_v = ("fold-V", fold_circuit(kv))
    axis_u = [(f"fold-U-{a}", fold_circuit(ku, a)) for a in ("y", "z")]
    axis_v = [(f"fold-V-{a}", fold_circuit(kv, a)) for a in ("y", "z")]
    conj_u = [("conjugation-U-" + k, conjugation_circuit(ku, k)) for k in CONJUGATORS]
    conj_v = [("conjugation-V-" + k, conjugation_circuit(kv, k)) for k in CONJUGATORS]
    inv_u = ("inverse-U", inverse_circuit(ku))
    inv_v = ("inverse-V", inverse_circuit(kv))
    if cu.primitive and cv.primitive:
        first = [("primitive", direct[1])]
    elif cu.label == IMPRIMITIVE and cv.label != IMPRIMITIVE:
        first = [("one-primitive", fold_u[1])]
    elif cv.label == IMPRIMITIVE and cu.label != IMPRIMITIVE:
        first = [("one-primitive", fold_v[1])]
    else:
        fu_u = fold_u[1].evaluate(u)
        fu_v = fold_u[1].evaluate(v)
        if _phase_equivalent(fu_u, fu_v):
            # equal x: the other folds keep h_y or h_z, where the pair must differ
            first = [("same-class", c) for _, c in axis_u] + [("same-class", inv_u[1])]
        elif _single_axis(fu_v) is not None:
            first = [("single-axis", fold_u[1])]
        else:
            first = [("conjugation", c) for _, c in conj_u]
    rest = [direct, fold_u, fold_v] + axis_u + axis_v + [inv_u, inv_v] + conj_u + conj_v
    return first + rest


_BRANCHES = ("primitive", "one-primitive", "same-class", "single-axis", "conjugation")


def _is_fallback(label: str) -> bool:
    return label not in _BRANCHES


def plan_pipeline(u, v, pair=(0, 1), budget: int = PIPELINE_BUDGET, seed: int = 0) -> PairPlan:
    u, v = as_gate(u), as_gate(v)
    if u.dim != 4 or v.dim != 4:
        raise StrategyInapplicable("the pipeline handles two-qubit gates only")
    um, vm = u.matrix, v.matrix
    if _phase_equivalent(um, vm):
        raise NotDistinguishableError("hypotheses differ only by a global phase", pair=tuple(pair))
    tried = set()

    def attempt(circ):
        x0, x1 = circ.evaluate(um), circ.evaluate(vm)
        sig = (circ.uses, np.round(dag(x0) @ x1, 12).tobytes())
        if sig in tried or _phase_equivalent(x0, x1):
            return None
        tried.add(sig)
        return find_product_input(x0, x1, (2, 2), 1, budget // circ.uses, seed=seed)

    candidates = _pipeline_candidates(um, vm)
    primary = [c for c in candidates if not _is_fallback(c[0])]
    # the branch's own circuits first, fallbacks after; cheapest total within each group
    for group in (primary, candidates[len(primary):]):
        found = []
        for branch, circ in group:
            if circ.uses > budget:
                continue
            inp = attempt(circ)
            if inp is not None:
                found.append((circ.uses * inp.n, len(found), branch, circ, inp))
        if found:
            _, _, branch, circ, inp = min(found, key=lambda t: t[:2])
            return _finish(pair, um, vm, circ, inp, branch, (2, 2))
    rp = min_runs(u, v, 16)
    need = "more than 16" if rp.n_runs is None else str(rp.n_runs)
    raise BudgetExceeded(f"no plan within {budget} oracle uses (a global parallel strategy alone needs {need})")


def plan_auto(u, v, pair=(0, 1), seed: int = 0, budget: int = PIPELINE_BUDGET) -> PairPlan:
    u, v = as_gate(u), as_gate(v)
    if _phase_equivalent(u.matrix, v.matrix):
        raise NotDistinguishableError("hypotheses differ only by a global phase", pair=tuple(pair))
    try:
        return plan_choi(u, v, pair)
    except StrategyInapplicable:
        pass
    if u.dim == 4 and u.dims in ((2, 2), (4,)):
        return plan_pipeline(u, v, pair, budget, seed)
    return plan_parallel(u, v, pair, seed=seed)


# ---------------------------------------------------------------------------
# execution


def outcome_distribution(plan: PairPlan, gate: np.ndarray) -> dict:
    """Exact probability of each verdict in ``plan.pair`` when ``gate`` is inside."""
    out = _simulate(plan.inp, plan.circuit, np.asarray(gate, dtype=complex))
    return _distribution(plan, out)


def _distribution(plan: PairPlan, state: np.ndarray) -> dict:
    sa = int(np.prod(plan.inp.alice_dims))
    rows = dag(plan.basis) @ state.reshape(sa, -1)
    p0 = 0.0
    for eta, row in zip(plan.bob_states, rows):
        if eta is not None:
            p0 += abs(np.vdot(eta, row)) ** 2
    p0 = min(max(p0, 0.0), 1.0)
    i, j = plan.pair
    return {i: p0, j: 1.0 - p0}


def execute(plan: PairPlan, oracle: Oracle, rng: np.random.Generator, transcript: Transcript):
    """Run one test; returns (guessed hypothesis, exact distribution)."""
    state = np.kron(plan.inp.alice, plan.inp.bob)
    state = _run_copies(state, plan.inp, plan.circuit, oracle.apply, transcript)
    dist = _distribution(plan, state)
    wires = plan.wires
    sa = int(np.prod(plan.inp.alice_dims))
    rows = dag(plan.basis) @ state.reshape(sa, -1)
    probs = np.sum(np.abs(rows) ** 2, axis=1)
    probs[probs < tol().prob_prune] = 0.0
    k = int(rng.choice(len(probs), p=probs / probs.sum()))
    transcript.measure("alice", sorted(wires["alice"]))
    transcript.msg("alice", k)
    eta = plan.bob_states[k]
    row = rows[k] / np.linalg.norm(rows[k])
    p_first = 0.0 if eta is None else abs(np.vdot(eta, row)) ** 2
    pb = np.array([p_first, 1.0 - p_first])
    pb[pb < tol().prob_prune] = 0.0
    b = int(rng.choice(2, p=pb / pb.sum()))
    transcript.measure("bob", sorted(wires["bob"]))
    transcript.msg("bob", b)
    return plan.pair[b], dist


def _rng(seed):
    return np.random.default_rng(np.random.SeedSequence(seed))


def run_pair(plan: PairPlan, oracle: Oracle, seed=None):
    transcript = Transcript()
    oracle.transcript = transcript
    start = oracle.use_counter
    guess, dist = execute(plan, oracle, _rng(seed), transcript)
    transcript.verdict(guess)
    oracle.transcript = None
    v = Verdict(guess, oracle.use_counter - start, distribution=dist, branch=plan.branch,
                tests=[(plan.pair, guess)])
    return score(v, oracle), transcript


STRATEGIES = ("choi_single_run", "parallel_n")


def locc_discriminate(oracle: Oracle, strategy: str = "choi_single_run", seed=None,
                      max_n: Optional[int] = None, plan_seed: int = 0):
    """Two-hypothesis LOCC discrimination; returns (Verdict, Transcript)."""
    if len(oracle) != 2:
        raise InputError("locc_discriminate needs exactly two hypotheses")
    u, v = oracle.hypotheses
    if strategy == "choi_single_run":
        plan = plan_choi(u, v)
    elif strategy == "parallel_n":
        plan = plan_parallel(u, v, max_n=max_n, seed=plan_seed)
    else:
        raise InputError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    return run_pair(plan, oracle, seed)


def two_qubit_pipeline(oracle: Oracle, seed=None, budget: int = PIPELINE_BUDGET, plan_seed: int = 0):
    if len(oracle) != 2:
        raise InputError("two_qubit_pipeline needs exactly two hypotheses")
    u, v = oracle.hypotheses
    plan = plan_pipeline(u, v, budget=budget, seed=plan_seed)
    return run_pair(plan, oracle, seed)


# ---------------------------------------------------------------------------
# many hypotheses


def check_pairwise(hypotheses: Sequence) -> None:
    gates = [as_gate(h).matrix for h in hypotheses]
    for i in range(len(gates)):
        for j in range(i + 1, len(gates)):
            if _phase_equivalent(gates[i], gates[j]):
                raise NotDistinguishableError(
                    f"hypotheses {i + 1} and {j + 1} differ only by a global phase", pair=(i + 1, j + 1))


class EliminationPlanner:
    """Caches one pair plan per candidate pair."""

    def __init__(self, hypotheses: Sequence, seed: int = 0, planner=plan_auto):
        self.gates = [as_gate(h) for h in hypotheses]
        self.seed = seed
        self.planner = planner
        self._plans = {}

    def plan(self, i: int, j: int) -> PairPlan:
        if (i, j) not in self._plans:
            self._plans[(i, j)] = self.planner(self.gates[i], self.gates[j], pair=(i, j), seed=self.seed)
        return self._plans[(i, j)]

    def final_distribution(self, hidden: int) -> dict:
        """Exact distribution of the surviving index, following every branch."""
        gate = self.gates[hidden].matrix
        memo = {}

        def walk(alive):
            if len(alive) == 1:
                return {alive[0]: 1.0}
            if alive in memo:
                return memo[alive]
            i, j = alive[0], alive[1]
            total = {}
            for guess, p in outcome_distribution(self.plan(i, j), gate).items():
                if p <= tol().prob_prune:
                    continue
                drop = j if guess == i else i
                for k, q in walk(tuple(a for a in alive if a != drop)).items():
                    total[k] = total.get(k, 0.0) + p * q
            memo[alive] = total
            return total

        return walk(tuple(range(len(self.gates))))


def discriminate_many(oracle: Oracle, seed=None, planner: Optional[EliminationPlanner] = None,
                      plan_seed: int = 0):
    """M-1 pairwise eliminations; returns (Verdict, Transcript)."""
    check_pairwise(oracle.hypotheses)
    planner = planner or EliminationPlanner(oracle.hypotheses, plan_seed)
    rng = _rng(seed)
    transcript = Transcript()
    oracle.transcript = transcript
    start = oracle.use_counter
    alive = list(range(len(oracle)))
    tests = []
    branches = []
    while len(alive) > 1:
        i, j = alive[0], alive[1]
        plan = planner.plan(i, j)
        guess, _ = execute(plan, oracle, rng, transcript)
        alive.remove(j if guess == i else i)
        tests.append(((i, j), guess))
        branches.append(plan.branch)
    transcript.verdict(alive[0])
    oracle.transcript = None
    v = Verdict(alive[0], oracle.use_counter - start, tests=tests, branch=",".join(branches))
    v.distribution = planner.final_distribution(oracle.reveal())
    return score(v, oracle), transcript
