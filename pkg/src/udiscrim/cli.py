"""Command-line entry point: ``udiscrim <command> ...``.

Gate files are JSON objects ``{"dims": [...], "matrix": [[[re, im], ...], ...]}``.
Reports go to stdout as JSON with a fixed key order.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from typing import Optional

import numpy as np

from . import config
from .errors import (BudgetExceeded, DiscrimError, InputError, NoBasisFound, NotDistinguishableError,
                     NumericalFailure, StrategyInapplicable)
from .gateclass import (PRODUCT, classify_two_party, kak_decompose, lie_closure, multiparty_classify,
                        permutation_cycles)
from .linalg import UnitaryGate, as_gate, dag
from .protocol import (EliminationPlanner, Oracle, check_pairwise, discriminate_many, plan_choi,
                       plan_parallel, plan_pipeline, run_pair)
from .spectra import local_product_runs, min_runs, min_runs_embedded, product_local_arcs

EXIT_OK, EXIT_INPUT, EXIT_INAPPLICABLE, EXIT_NUMERICAL = 0, 2, 3, 4


# ---------------------------------------------------------------------------
# serialization


def _num(x: float) -> str:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return json.dumps(str(x))
    if x == int(x) and abs(x) < 1e16:
        return f"{x:.1f}"
    return f"{x:.17g}"


def dumps(obj, indent: int = 2, level: int = 0) -> str:
    """JSON with every float written to 17 significant digits."""
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent, level + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return "[" + _num(obj.real) + ", " + _num(obj.imag) + "]"
    return json.dumps(str(obj))


def matrix_to_pairs(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def gate_to_json(gate: UnitaryGate) -> str:
    return dumps({"dims": list(gate.dims), "matrix": matrix_to_pairs(gate.matrix)}) + "\n"


def write_gate(path: str, gate) -> None:
    with open(path, "w") as fh:
        fh.write(gate_to_json(as_gate(gate)))


def parse_gate(text: str) -> UnitaryGate:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"gate file is not valid JSON: {exc}") from None
    if not isinstance(data, dict) or "dims" not in data or "matrix" not in data:
        raise InputError("gate file needs 'dims' and 'matrix' keys")
    dims = data["dims"]
    if not isinstance(dims, list) or not all(isinstance(d, int) for d in dims):
        raise InputError("'dims' must be a list of integers")
    try:
        arr = np.asarray(data["matrix"], dtype=float)
    except (TypeError, ValueError):
        raise InputError("'matrix' must hold [re, im] pairs") from None
    total = int(np.prod(dims)) if dims else 0
    if arr.shape[-1:] != (2,) or arr.size != 2 * total * total:
        raise InputError(f"'matrix' must hold {total}x{total} [re, im] pairs")
    m = (arr[..., 0] + 1j * arr[..., 1]).reshape(total, total)
    return UnitaryGate(m, tuple(dims))


def read_gate(path: str) -> UnitaryGate:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_gate(text)


def _digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


# ---------------------------------------------------------------------------
# commands


def _partition(part) -> list:
    return [[i + 1 for i in blk] for blk in part]


def cmd_classify(args) -> dict:
    g = read_gate(args.gate)
    if len(g.dims) == 2:
        cls = classify_two_party(g)
        out = {"label": cls.label}
        if cls.local_factors is not None:
            out["factors"] = [matrix_to_pairs(f) for f in cls.local_factors]
        return out
    cls = multiparty_classify(g)
    out = {"label": cls.label, "partition": _partition(cls.partition or ()),
           "closure_dimension": cls.closure_dimension}
    if cls.permutation is not None:
        out["permutation"] = permutation_cycles(cls.permutation)
    return out


def _run_plan_report(plan) -> dict:
    return {
        "n_runs": plan.n_runs,
        "verdict": "distinguishable" if plan.distinguishable else "NotDistinguishable",
        "delta": plan.delta,
        "ceiling_n": plan.formula_n,
        "arcs": list(plan.arcs),
        "certified_overlap": None if math.isnan(plan.certified_overlap) else plan.certified_overlap,
    }


def cmd_minruns(args) -> dict:
    u, v = read_gate(args.u), read_gate(args.v)
    if u.dim != v.dim:
        raise InputError(f"dimension mismatch: {u.dim} vs {v.dim}")
    max_n = args.max_n
    if args.embed:
        out = _run_plan_report(min_runs_embedded(u, v, args.embed, max_n))
        out["embed"] = args.embed
    else:
        out = _run_plan_report(min_runs(u, v, max_n))
    if args.local_product:
        w = as_gate(dag(u.matrix) @ v.matrix, u.dims)
        if len(w.dims) != 2:
            raise InputError("--local-product needs two-party gates")
        cls = classify_two_party(w)
        if cls.label != PRODUCT:
            out["local_product"] = {"applicable": False, "reason": f"W = U^dag V is {cls.label}"}
        else:
            w1, w2 = cls.local_factors
            d1, d2, ok = product_local_arcs(w1, w2, 1)
            out["local_product"] = {"applicable": True, "delta_a": d1, "delta_b": d2,
                                    "product_input_suffices": bool(ok),
                                    "n_runs": local_product_runs(w1, w2, max_n)}
    return out


def cmd_kak(args) -> dict:
    g = read_gate(args.gate)
    if g.dim != 4:
        raise InputError(f"kak needs a 4x4 gate, got dims {g.dims}")
    k = kak_decompose(g)
    return {
        "canonical_vector": list(k.canonical_vector),
        "global_phase": k.global_phase,
        "locals_after": [matrix_to_pairs(m) for m in k.locals_after],
        "locals_before": [matrix_to_pairs(m) for m in k.locals_before],
        "reconstruction_residual": float(np.abs(k.reconstruct() - g.matrix).max()),
    }


def cmd_lie_closure(args) -> dict:
    g = read_gate(args.gate)
    rep = lie_closure(g)
    out = {"closure_dimension": rep.closure_dimension, "full_dimension": rep.full_dimension,
           "partition": _partition(rep.matched_partition),
           "universal_on_partition": rep.is_universal_on_partition_products, "rounds": rep.rounds}
    if len(g.dims) >= 2 and not rep.imprimitive:
        cls = multiparty_classify(g)
        if cls.permutation is not None:
            out["permutation"] = permutation_cycles(cls.permutation)
    return out


_PAIR_PLANNERS = {
    "choi": lambda u, v, seed, max_n: plan_choi(u, v),
    "parallel": lambda u, v, seed, max_n: plan_parallel(u, v, max_n=max_n, seed=seed),
    "pipeline2q": lambda u, v, seed, max_n: plan_pipeline(u, v, seed=seed),
}


def _trial_seeds(seed: int, trials: int) -> list:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(trials)]


def cmd_simulate(args, log_lines: list) -> dict:
    gates = [read_gate(p) for p in args.gates]
    if len({g.dim for g in gates}) != 1:
        raise InputError("all gates must have the same dimension")
    if args.trials < 1:
        raise InputError("--trials must be positive")
    seeds = _trial_seeds(args.seed, args.trials)
    try:
        if args.strategy == "eliminate":
            check_pairwise(gates)
            planner = EliminationPlanner(gates, seed=args.seed)
            runner = lambda oracle, s: discriminate_many(oracle, seed=[s, 1], planner=planner)
            plan_info = {}
        else:
            if len(gates) != 2:
                raise InputError(f"strategy {args.strategy} needs exactly two gates")
            check_pairwise(gates)
            plan = _PAIR_PLANNERS[args.strategy](gates[0], gates[1], args.seed, args.max_n)
            runner = lambda oracle, s: run_pair(plan, oracle, seed=[s, 1])
            plan_info = {"branch": plan.branch, "copies": plan.n_copies, "uses_per_trial": plan.uses,
                         "input": plan.inp.method, "walgate_cost": plan.walgate_cost}
    except NotDistinguishableError as exc:
        pair = list(exc.pair) if exc.pair is not None else [1, 2]
        return {"verdict": "NotDistinguishable", "pair": pair, "reason": str(exc)}
    trials = []
    for t, s in enumerate(seeds):
        oracle = Oracle(gates, seed=[s, 0])
        verdict, transcript = runner(oracle, s)
        log_lines.extend(transcript.lines())
        if verdict.oracle_uses != oracle.use_counter:
            raise NumericalFailure("oracle use accounting mismatch")
        trials.append({"trial": t, "hidden": oracle.reveal(), "guess": verdict.guessed_index,
                       "correct": bool(verdict.correct), "oracle_uses": verdict.oracle_uses,
                       "tests": len(verdict.tests),
                       "success_probability_exact": verdict.success_probability_exact})
    uses = [t["oracle_uses"] for t in trials]
    return {
        "strategy": args.strategy,
        "plan": plan_info,
        "summary": {
            "trials": len(trials),
            "correct": sum(t["correct"] for t in trials),
            "min_success_probability_exact": min(t["success_probability_exact"] for t in trials),
            "oracle_uses_min": min(uses), "oracle_uses_max": max(uses),
            "oracle_uses_mean": float(np.mean(uses)),
        },
        "trials": trials,
    }


# ---------------------------------------------------------------------------
# argument handling


def _tol_overrides(items) -> dict:
    fields = {f.name: f.type for f in dataclasses.fields(config.Tolerances)}
    out = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep or name not in fields:
            raise InputError(f"bad --tol {item!r}; known names: {', '.join(fields)}")
        try:
            out[name] = int(value) if fields[name] in (int, "int") else float(value)
        except ValueError:
            raise InputError(f"bad value in --tol {item!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", action="append", metavar="NAME=VALUE",
                        help="override a numerical tolerance (repeatable)")
    p = argparse.ArgumentParser(prog="udiscrim", description="Perfect discrimination of unitary gates.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", parents=[common], help="Product / ProductSwap / Imprimitive label")
    c.add_argument("gate")
    c.set_defaults(func=cmd_classify, inputs=["gate"])

    c = sub.add_parser("minruns", parents=[common], help="minimal number of parallel uses")
    c.add_argument("u")
    c.add_argument("v")
    c.add_argument("--embed", type=int, default=0, metavar="K", help="pad both gates with K trivial levels")
    c.add_argument("--local-product", action="store_true", help="product-input criterion for product W")
    c.add_argument("--max-n", type=int, default=None)
    c.set_defaults(func=cmd_minruns, inputs=["u", "v"])

    c = sub.add_parser("kak", parents=[common], help="two-qubit canonical decomposition")
    c.add_argument("gate")
    c.set_defaults(func=cmd_kak, inputs=["gate"])

    c = sub.add_parser("simulate", parents=[common], help="run the LOCC protocol against a hidden gate")
    c.add_argument("gates", nargs="+")
    c.add_argument("--seed", type=int, default=None, help="default: $UDISCRIM_SEED or 0")
    c.add_argument("--trials", type=int, default=1)
    c.add_argument("--strategy", choices=["choi", "parallel", "pipeline2q", "eliminate"], default="choi")
    c.add_argument("--max-n", type=int, default=None)
    c.add_argument("--log", default=None, help="write the transcript log here")
    c.set_defaults(func=cmd_simulate, inputs=["gates"])

    c = sub.add_parser("lie-closure", parents=[common], help="Lie closure dimension and partition")
    c.add_argument("gate")
    c.set_defaults(func=cmd_lie_closure, inputs=["gate"])
    return p


def _inputs(args) -> list:
    paths = []
    for name in args.inputs:
        val = getattr(args, name)
        paths.extend(val if isinstance(val, list) else [val])
    out = []
    for path in paths:
        try:
            out.append({"path": path, "sha256": _digest(path)})
        except OSError:
            out.append({"path": path, "sha256": None})
    return out


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", "absent") is None:
        env = os.environ.get("UDISCRIM_SEED")
        try:
            args.seed = int(env) if env else 0
        except ValueError:
            print("error: UDISCRIM_SEED must be an integer", file=sys.stderr)
            return EXIT_INPUT
    echo = {k: v for k, v in vars(args).items() if k not in ("func", "inputs")}
    log_lines: list = []
    try:
        changes = _tol_overrides(args.tol)
        with config.override(**changes) as active:
            if args.func is cmd_simulate:
                results = cmd_simulate(args, log_lines)
            else:
                results = args.func(args)
            tolerances = active.as_dict()
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (StrategyInapplicable, BudgetExceeded) as exc:
        print(f"inapplicable: {exc}", file=sys.stderr)
        return EXIT_INAPPLICABLE
    except (NoBasisFound, NumericalFailure) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DiscrimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    report = {"command": echo, "inputs": _inputs(args), "results": results, "tolerances": tolerances}
    sys.stdout.write(dumps(report) + "\n")
    if getattr(args, "log", None):
        with open(args.log, "w") as fh:
            fh.write("".join(line + "\n" for line in log_lines))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
