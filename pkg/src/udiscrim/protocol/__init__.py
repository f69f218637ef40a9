"""Oracle simulation and LOCC discrimination protocols."""
from .measurement import conditional_states, jamiolkowski_input, walgate_measurement, zero_diagonal_basis
from .oracle import Event, Oracle, Transcript, Verdict, score
from .search import ProductInput, find_product_input
from .strategies import (PIPELINE_BUDGET, Circuit, EliminationPlanner, PairPlan, check_pairwise,
                         conjugation_circuit, discriminate_many, execute, fold_circuit, inverse_circuit,
                         locc_discriminate, outcome_distribution, plan_auto, plan_choi, plan_parallel,
                         plan_pipeline, run_pair, two_qubit_pipeline)

__all__ = [
    "Circuit", "EliminationPlanner", "Event", "Oracle", "PIPELINE_BUDGET", "PairPlan", "ProductInput",
    "Transcript", "Verdict", "check_pairwise", "conditional_states", "conjugation_circuit",
    "discriminate_many", "execute", "find_product_input", "fold_circuit", "inverse_circuit",
    "jamiolkowski_input", "locc_discriminate", "outcome_distribution", "plan_auto", "plan_choi",
    "plan_parallel", "plan_pipeline", "run_pair", "score", "two_qubit_pipeline", "walgate_measurement",
    "zero_diagonal_basis",
]
