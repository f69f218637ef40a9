"""Perfect discrimination of multipartite unitary gates under global and local strategies."""
from .config import Tolerances, override, set_tolerances, tol
from .errors import (BudgetExceeded, DiscrimError, InputError, NoBasisFound, NotDistinguishableError,
                     NumericalFailure, StrategyInapplicable)
from .gateclass import (GateClass, KakDecomposition, LieClosureReport, canonical_class, classify_two_party,
                        kak_decompose, lie_closure, multiparty_classify, schmidt_rank)
from .linalg import (PartyStructure, PureState, Spectrum, UnitaryGate, direct_sum, eig_hermitian, eig_unitary,
                     haar_random_unitary, partial_trace, random_local_unitary, svd, tensor, trace_product)
from .protocol import (Oracle, Transcript, Verdict, discriminate_many, jamiolkowski_input, locc_discriminate,
                       two_qubit_pipeline, walgate_measurement)
from .spectra import (ArcReport, RunPlan, control_unitary_trace, covering_arc, min_runs, min_runs_embedded,
                      orthogonal_input, product_local_arcs)

__version__ = "0.1.0"

__all__ = [
    "ArcReport",
    "BudgetExceeded",
    "DiscrimError",
    "GateClass",
    "InputError",
    "KakDecomposition",
    "LieClosureReport",
    "NoBasisFound",
    "NotDistinguishableError",
    "NumericalFailure",
    "Oracle",
    "PartyStructure",
    "PureState",
    "RunPlan",
    "Spectrum",
    "StrategyInapplicable",
    "Tolerances",
    "Transcript",
    "UnitaryGate",
    "Verdict",
    "canonical_class",
    "classify_two_party",
    "control_unitary_trace",
    "covering_arc",
    "direct_sum",
    "discriminate_many",
    "eig_hermitian",
    "eig_unitary",
    "haar_random_unitary",
    "jamiolkowski_input",
    "kak_decompose",
    "lie_closure",
    "locc_discriminate",
    "min_runs",
    "min_runs_embedded",
    "multiparty_classify",
    "orthogonal_input",
    "override",
    "partial_trace",
    "product_local_arcs",
    "random_local_unitary",
    "schmidt_rank",
    "set_tolerances",
    "svd",
    "tensor",
    "tol",
    "trace_product",
    "two_qubit_pipeline",
    "walgate_measurement",
]
