import numpy as np
import pytest
from scipy.linalg import expm

from helpers import XX, ZZ, X, I2, canonical, haar, local, random_state
from udiscrim.errors import (BudgetExceeded, InputError, NoBasisFound, NotDistinguishableError,
                             StrategyInapplicable)
from udiscrim.linalg import CNOT, CZ, PureState, apply_op
from udiscrim.protocol import (EliminationPlanner, Oracle, Transcript, discriminate_many, execute,
                               jamiolkowski_input, locc_discriminate, outcome_distribution, plan_pipeline,
                               two_qubit_pipeline, walgate_measurement)
from udiscrim.protocol.measurement import bob_projectors, conditional_states, zero_diagonal_basis
from udiscrim.protocol.search import find_product_input

I4 = np.eye(4)


# ---------------------------------------------------------------------------
# inputs and measurement


def test_jamiolkowski_qubits():
    phi = jamiolkowski_input((2, 2))
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert np.allclose(phi.vector, np.kron(bell, bell))
    assert phi.dims == (2, 2, 2, 2)
    rho = phi.density().reshape([2] * 8)
    marg_a = np.einsum("abcdebcd->ae", rho)
    assert np.abs(marg_a - np.eye(2) / 2).max() <= 1e-10


def test_jamiolkowski_rejects_mismatch():
    with pytest.raises(InputError):
        jamiolkowski_input((2, 3), (2, 2))


def test_choi_identity_random_pairs():
    rng = np.random.default_rng(0)
    phi = jamiolkowski_input((2, 3))
    for _ in range(100):
        u, v = haar(6, rng), haar(6, rng)
        w = v.conj().T @ u
        out = apply_op(phi.vector, phi.dims, w, (0, 2))
        assert abs(np.vdot(phi.vector, out) - np.trace(w) / 6) <= 1e-10


def test_choi_traceless_pauli():
    phi = jamiolkowski_input((2, 2))
    out = apply_op(phi.vector, phi.dims, np.kron(X, I2), (0, 2))
    assert abs(np.vdot(phi.vector, out)) <= 1e-15


def test_walgate_bell_pair():
    b0 = PureState(np.array([1, 0, 0, 1]) / np.sqrt(2), (2, 2))
    b1 = PureState(np.array([1, 0, 0, -1]) / np.sqrt(2), (2, 2))
    basis, cost = walgate_measurement(b0, b1)
    assert cost <= 1e-20
    plus = np.array([1, 1]) / np.sqrt(2)
    cols = basis.matrix
    # each column is |+> or |-> up to phase
    overlaps = sorted(abs(np.vdot(plus, cols[:, k])) ** 2 for k in range(2))
    assert overlaps == pytest.approx([0.0, 1.0], abs=1e-12)


def test_walgate_computational_pair():
    basis, cost = walgate_measurement(PureState(np.eye(4)[0], (2, 2)), PureState(np.eye(4)[3], (2, 2)))
    assert cost == 0.0


def test_walgate_rejects_overlap():
    with pytest.raises(InputError):
        walgate_measurement(PureState(np.eye(4)[0], (2, 2)), PureState(np.ones(4) / 2, (2, 2)))


def _orthogonal_pair(d, rng):
    a = random_state(d * d, rng)
    b = random_state(d * d, rng)
    b = b - np.vdot(a, b) * a
    return a, b / np.linalg.norm(b)


@pytest.mark.parametrize("method", ["constructive", "search"])
def test_walgate_random(method):
    rng = np.random.default_rng(3)
    for _ in range(5):
        a, b = _orthogonal_pair(3, rng)
        basis, cost = walgate_measurement(PureState(a, (3, 3)), PureState(b, (3, 3)), method=method)
        eta = conditional_states(basis.matrix, a.reshape(3, 3))
        nu = conditional_states(basis.matrix, b.reshape(3, 3))
        assert cost <= 1e-10
        assert np.abs(np.sum(eta.conj() * nu, axis=1)).max() <= 1e-5


def test_walgate_cut_on_second_party():
    rng = np.random.default_rng(4)
    a, b = _orthogonal_pair(2, rng)
    _, cost = walgate_measurement(PureState(a, (2, 2)), PureState(b, (2, 2)), cut=(1,))
    assert cost <= 1e-10


def test_zero_diagonal_basis_traceless():
    rng = np.random.default_rng(6)
    c = rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7))
    c -= np.trace(c) / 7 * np.eye(7)
    e = zero_diagonal_basis(c)
    assert np.abs(e.conj().T @ e - np.eye(7)).max() <= 1e-12
    assert np.abs(np.diag(e.conj().T @ c @ e)).max() <= 1e-12


def test_zero_diagonal_basis_near_collinear():
    # a rotated Hermitian matrix puts every diagonal entry on one line through the origin
    rng = np.random.default_rng(16)
    for k in range(300):
        d = int(rng.integers(2, 8))
        h = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        noise = 10.0 ** rng.uniform(-16, -9) * rng.standard_normal((d, d))
        c = np.exp(1j * rng.uniform(0, 2 * np.pi)) * (h + h.conj().T) + noise
        c -= np.trace(c) / d * np.eye(d)
        e = zero_diagonal_basis(c)
        assert np.abs(np.diag(e.conj().T @ c @ e)).max() <= 1e-11 * np.abs(c).max()


def test_zero_diagonal_basis_low_rank_large():
    rng = np.random.default_rng(17)
    d = 128
    m0 = np.outer(random_state(d, rng), random_state(d, rng))
    m1 = np.outer(random_state(d, rng), random_state(d, rng)) + np.outer(random_state(d, rng), random_state(d, rng))
    m1 -= np.vdot(m0, m1) * m0
    m1 /= np.linalg.norm(m1)
    c = m1 @ m0.conj().T
    e = zero_diagonal_basis(c)
    assert np.abs(e.conj().T @ e - np.eye(d)).max() <= 1e-12
    assert np.abs(np.diag(e.conj().T @ c @ e)).max() <= 1e-13


def test_bob_ignores_near_null_branches():
    # branch 0 carries weight 1e-24 under hypothesis 0; normalizing it would be noise
    e = np.eye(2)
    m0 = np.array([[1e-12, 0], [0, 1.0]])
    m0 /= np.linalg.norm(m0)
    projectors = bob_projectors(e, m0)
    assert projectors[0] is None and projectors[1] is not None


def test_walgate_search_failure_is_loud(monkeypatch):
    import udiscrim.protocol.measurement as meas
    monkeypatch.setattr(meas, "_search_basis", lambda c, seed, restarts=20: np.eye(c.shape[0]))
    rng = np.random.default_rng(8)
    a, b = _orthogonal_pair(2, rng)
    with pytest.raises(NoBasisFound):
        walgate_measurement(PureState(a, (2, 2)), PureState(b, (2, 2)), method="search")


# ---------------------------------------------------------------------------
# oracle


def test_oracle_counts_and_hides():
    o = Oracle([I4, XX], seed=5)
    assert o.use_counter == 0
    psi = np.eye(4)[0].astype(complex)
    o.apply(psi, (2, 2), (0, 1))
    o.apply(psi, (2, 2), (0, 1), inverse=True)
    assert o.use_counter == 2
    assert Oracle([I4, XX], seed=5).reveal() == o.reveal()
    assert not hasattr(o, "hidden_index")
    with pytest.raises(StrategyInapplicable):
        Oracle([I4, XX], allow_inverse=False).apply(psi, (2, 2), (0, 1), inverse=True)
    with pytest.raises(InputError):
        Oracle([I4])
    with pytest.raises(InputError):
        Oracle([I4, np.eye(2)])


def test_oracle_inverse_applies_adjoint():
    g = haar(4, np.random.default_rng(1))
    o = Oracle([g, I4], hidden_index=0)
    psi = random_state(4, np.random.default_rng(2))
    back = o.apply(o.apply(psi, (2, 2), (0, 1)), (2, 2), (0, 1), inverse=True)
    assert np.allclose(back, psi)


def test_transcript_log_format():
    t = Transcript()
    t.use()
    t.use(inverse=True)
    t.local("alice", (0,))
    t.msg("alice", 3)
    t.verdict(1)
    assert t.to_log() == "USE fwd\nUSE inv\nMSG alice 3\nVERDICT 1\n"


# ---------------------------------------------------------------------------
# two-hypothesis strategies


def test_choi_single_run_example():
    for hidden in (0, 1):
        v, t = locc_discriminate(Oracle([I4, XX], hidden_index=hidden), "choi_single_run", seed=1)
        assert v.correct and v.oracle_uses == 1
        assert v.success_probability_exact == pytest.approx(1.0, abs=1e-9)
        assert t.uses == 1


def test_choi_inapplicable_for_cz():
    with pytest.raises(StrategyInapplicable):
        locc_discriminate(Oracle([I4, CZ]), "choi_single_run")


def test_parallel_cz_single_run():
    for hidden in (0, 1):
        for seed in range(50):
            v, _ = locc_discriminate(Oracle([I4, CZ], hidden_index=hidden), "parallel_n", seed=seed)
            assert v.correct and v.oracle_uses == 1


def test_parallel_needs_two_runs():
    u, w = I4, np.kron(np.diag([1, 1j]), I2)
    v, _ = locc_discriminate(Oracle([u, w], hidden_index=1), "parallel_n", seed=0)
    assert v.correct and v.oracle_uses == 2


def test_parallel_inapplicable_for_phase_pair():
    with pytest.raises(StrategyInapplicable):
        locc_discriminate(Oracle([I4, 1j * I4]), "parallel_n")


def test_unknown_strategy():
    with pytest.raises(InputError):
        locc_discriminate(Oracle([I4, XX]), "guess")


def test_product_input_search_certifies():
    rng = np.random.default_rng(10)
    u, v = haar(4, rng), haar(4, rng)
    inp = find_product_input(u, v, (2, 2), 1, 4)
    assert inp is not None and inp.overlap <= 1e-9


# ---------------------------------------------------------------------------
# pipeline


def test_pipeline_dressed_cnot():
    rng = np.random.default_rng(11)
    v = local(rng) @ CNOT @ local(rng)
    for hidden in (0, 1):
        verdict, _ = two_qubit_pipeline(Oracle([CNOT, v], hidden_index=hidden), seed=hidden)
        assert verdict.correct and verdict.oracle_uses <= 20
        assert verdict.success_probability_exact == pytest.approx(1.0, abs=1e-9)


def test_pipeline_single_axis_branch():
    u, v = expm(0.3j * XX), expm(0.7j * XX)
    plan = plan_pipeline(u, v)
    assert plan.branch == "single-axis"
    assert plan.inp.method == "eigen-park"
    for hidden in (0, 1):
        verdict, _ = two_qubit_pipeline(Oracle([u, v], hidden_index=hidden))
        assert verdict.correct and verdict.oracle_uses <= 20


def test_pipeline_same_class_uses_other_axis():
    rng = np.random.default_rng(18)
    a, b = local(rng), local(rng)
    u = a @ canonical(0.6, 0.3, 0.1) @ b
    v = a @ canonical(0.6, 0.1, -0.05) @ b
    plan = plan_pipeline(u, v)
    assert plan.branch == "same-class" and plan.circuit.name in ("fold-y", "fold-z")
    for hidden in (0, 1):
        verdict, _ = two_qubit_pipeline(Oracle([u, v], hidden_index=hidden), seed=hidden)
        assert verdict.correct and verdict.oracle_uses <= 20


def test_pipeline_phase_pair():
    with pytest.raises(NotDistinguishableError):
        two_qubit_pipeline(Oracle([CNOT, np.exp(0.4j) * CNOT]))


def test_pipeline_budget_is_enforced():
    # arc of U^dag V is 0.02, so any strategy needs more than 150 uses
    with pytest.raises(BudgetExceeded):
        plan_pipeline(I4, expm(0.01j * XX))


def test_pipeline_branch_labels():
    rng = np.random.default_rng(12)
    assert plan_pipeline(local(rng), local(rng)).branch == "primitive"
    assert plan_pipeline(local(rng), haar(4, rng)).branch == "one-primitive"
    assert plan_pipeline(haar(4, rng), haar(4, rng)).branch == "conjugation"


def test_pipeline_uses_match_transcript():
    rng = np.random.default_rng(13)
    u, v = haar(4, rng), haar(4, rng)
    o = Oracle([u, v], hidden_index=1)
    verdict, t = two_qubit_pipeline(o, seed=3)
    assert verdict.oracle_uses == o.use_counter == t.uses <= 20


# ---------------------------------------------------------------------------
# many hypotheses


def test_discriminate_many_paulis():
    hyp = [I4, XX, ZZ]
    planner = EliminationPlanner(hyp)
    for hidden in range(3):
        for seed in range(20):
            v, t = discriminate_many(Oracle(hyp, hidden_index=hidden), seed=seed, planner=planner)
            assert v.correct and len(v.tests) == 2
            assert v.success_probability_exact == pytest.approx(1.0, abs=1e-9)
            assert sum(line.startswith("MSG bob") for line in t.lines()) == 2


def test_discriminate_many_two_gates():
    v, _ = discriminate_many(Oracle([I4, XX], hidden_index=1), seed=0)
    assert v.correct and len(v.tests) == 1


def test_discriminate_many_names_phase_pair():
    with pytest.raises(NotDistinguishableError) as err:
        discriminate_many(Oracle([CNOT, 1j * CNOT, I4]))
    assert err.value.pair == (1, 2)


# ---------------------------------------------------------------------------
# invariants


def test_transcript_determinism():
    rng = np.random.default_rng(14)
    hyp = [haar(4, rng), haar(4, rng), CNOT]
    logs = []
    for _ in range(2):
        _, t = discriminate_many(Oracle(hyp, seed=9), seed=21)
        logs.append(t.to_log().encode())
    assert logs[0] == logs[1]


def test_locality_audit():
    rng = np.random.default_rng(15)
    plan = plan_pipeline(haar(4, rng), haar(4, rng))
    o = Oracle([haar(4, rng), I4], hidden_index=0)
    t = Transcript()
    o.transcript = t
    execute(plan, o, np.random.default_rng(0), t)
    assert t.locality_violations(plan.wires) == []
    kinds = [e.kind for e in t.events if e.kind in ("measure", "msg")]
    assert kinds == ["measure", "msg", "measure", "msg"]
    t.local("bob", (0,))          # Bob touching Alice's wire
    assert t.locality_violations(plan.wires)
    bad = Transcript()
    bad.measure("alice", (0,))
    bad.measure("bob", (1,))      # no message in between
    assert bad.locality_violations({"alice": {0}, "bob": {1}})


def test_sampled_frequency_matches_exact():
    hyp = [I4, XX, haar(4, np.random.default_rng(0))]
    planner = EliminationPlanner(hyp)
    plan = planner.plan(0, 1)
    exact = outcome_distribution(plan, hyp[2])[0]
    assert 0.05 < exact < 0.95
    rng = np.random.default_rng(123)
    trials = 400
    hits = 0
    for _ in range(trials):
        o = Oracle(hyp, hidden_index=2)
        guess, dist = execute(plan, o, rng, Transcript())
        assert dist[0] == pytest.approx(exact, abs=1e-12)
        hits += guess == 0
    sigma = np.sqrt(exact * (1 - exact) / trials)
    assert abs(hits / trials - exact) <= 3 * sigma
