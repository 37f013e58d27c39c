"""Fully-quantum versus measure-first generative learning on phase states.

Simulation harness for a concept class of relational sampling problems:
hidden-string concepts over Boolean phase states, an exact fully-quantum
learner, measure-first baselines with a bounded classical record, the Hidden
Matching game they reduce to, and a PRF distinguisher harness.
"""

from .concepts import BoolFunc, Distribution, concept_distribution, tv_distance
from .errors import MfsepError
from .evaluation import EvalCriteria, evaluate_learnability, separation_experiment
from .fqlearner import build_ux, fully_quantum_learn
from .gf2bits import BitVec
from .mflearner import Strategy, measure_first_learn

__version__ = "0.1.0"

__all__ = [
    "BitVec",
    "BoolFunc",
    "Distribution",
    "EvalCriteria",
    "MfsepError",
    "Strategy",
    "build_ux",
    "concept_distribution",
    "evaluate_learnability",
    "fully_quantum_learn",
    "measure_first_learn",
    "separation_experiment",
    "tv_distance",
]
