"""Hidden-gate black box, classical transcript, and verdict records."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import InputError, StrategyInapplicable
from ..linalg import UnitaryGate, apply_op, as_gate, dag


@dataclass(frozen=True)
class Event:
    kind: str                 # use | msg | verdict | local | measure
    party: Optional[str] = None
    payload: Optional[int] = None
    wires: tuple = ()
    inverse: bool = False


class Transcript:
    """Ordered record of oracle uses, local actions and classical messages.

    Only ``use``, ``msg`` and ``verdict`` events are part of the text log;
    ``local`` and ``measure`` events are kept for the locality audit.
    """

    def __init__(self):
        self.events: list[Event] = []

    def use(self, inverse: bool = False):
        self.events.append(Event("use", inverse=inverse))

    def msg(self, party: str, outcome: int):
        self.events.append(Event("msg", party, int(outcome)))

    def verdict(self, index: int):
        self.events.append(Event("verdict", payload=int(index)))

    def local(self, party: str, wires):
        self.events.append(Event("local", party, wires=tuple(wires)))

    def measure(self, party: str, wires):
        self.events.append(Event("measure", party, wires=tuple(wires)))

    @property
    def uses(self) -> int:
        return sum(e.kind == "use" for e in self.events)

    @property
    def messages(self) -> list:
        return [(e.party, e.payload) for e in self.events if e.kind == "msg"]

    def lines(self) -> list:
        out = []
        for e in self.events:
            if e.kind == "use":
                out.append("USE inv" if e.inverse else "USE fwd")
            elif e.kind == "msg":
                out.append(f"MSG {e.party} {e.payload}")
            elif e.kind == "verdict":
                out.append(f"VERDICT {e.payload}")
        return out

    def to_log(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    def locality_violations(self, wires_of: dict) -> list:
        """Local actions or measurements touching another party's wires.

        ``wires_of`` maps a party name to the set of wires it owns. A Bob
        action that follows an Alice measurement must also be preceded by an
        Alice message.
        """
        bad = []
        last_measure = {}
        last_msg = {}
        for pos, e in enumerate(self.events):
            if e.kind in ("local", "measure"):
                owned = wires_of.get(e.party, set())
                if not set(e.wires) <= set(owned):
                    bad.append((pos, e))
            if e.kind == "measure":
                for other, mpos in last_measure.items():
                    if other != e.party and last_msg.get(other, -1) < mpos:
                        bad.append((pos, e))
                last_measure[e.party] = pos
            if e.kind == "msg":
                last_msg[e.party] = pos
        return bad


@dataclass
class Verdict:
    guessed_index: int
    oracle_uses: int
    success_probability_exact: float = float("nan")
    correct: Optional[bool] = None
    distribution: dict = field(default_factory=dict)
    branch: str = ""
    tests: list = field(default_factory=list)


class Oracle:
    """Black box holding one of M hypothesis gates.

    The hidden index is drawn from ``seed`` unless given explicitly. Every
    forward or inverse invocation increments ``use_counter`` by one.
    """

    def __init__(self, hypotheses: Sequence, seed: Optional[int] = None,
                 hidden_index: Optional[int] = None, allow_inverse: bool = True):
        gates = [as_gate(h) for h in hypotheses]
        if len(gates) < 2:
            raise InputError("an oracle needs at least two hypotheses")
        if len({g.dim for g in gates}) != 1:
            raise InputError("all hypotheses must have the same dimension")
        self._gates = gates
        if hidden_index is None:
            hidden_index = int(np.random.default_rng(seed).integers(len(gates)))
        if not 0 <= hidden_index < len(gates):
            raise InputError("hidden index out of range")
        self._hidden = int(hidden_index)
        self.allow_inverse = allow_inverse
        self.use_counter = 0
        self.transcript: Optional[Transcript] = None

    @property
    def hypotheses(self) -> list:
        return list(self._gates)

    @property
    def dims(self) -> tuple:
        return self._gates[0].dims

    def __len__(self):
        return len(self._gates)

    def apply(self, state: np.ndarray, dims, wires, inverse: bool = False) -> np.ndarray:
        if inverse and not self.allow_inverse:
            raise StrategyInapplicable("this oracle does not allow inverse invocation")
        self.use_counter += 1
        if self.transcript is not None:
            self.transcript.use(inverse)
        m = self._gates[self._hidden].matrix
        return apply_op(state, dims, dag(m) if inverse else m, wires)

    def reveal(self) -> int:
        """Hidden index, for scoring once a protocol has finished."""
        return self._hidden


def score(verdict: Verdict, oracle: Oracle) -> Verdict:
    hidden = oracle.reveal()
    verdict.correct = verdict.guessed_index == hidden
    verdict.success_probability_exact = float(verdict.distribution.get(hidden, 0.0))
    return verdict


def gate_of(x) -> UnitaryGate:
    return as_gate(x)
