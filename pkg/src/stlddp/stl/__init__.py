"""STL syntax, parsing, fragment checks and exact robustness."""

from .formula import (Always, And, Eventually, NegPred, Not, Or, Pred,
                      Specification, Until, canonical, format_formula,
                      predicates_of, validate_fragment)
from .parser import parse_formula, parse_spec, tokenize
from .predicates import (DEFAULT_BALL_EPS, AffinePredicate, BallPredicate,
                         BoxPredicate, Predicate, eval_predicate,
                         predicate_from_dict, predicate_to_dict)
from .semantics import (Signal, exact_robustness, path_robustness,
                        state_robustness, verdict)

__all__ = [
    "Always", "And", "Eventually", "NegPred", "Not", "Or", "Pred", "Specification",
    "Until", "canonical", "format_formula", "predicates_of", "validate_fragment",
    "parse_formula", "parse_spec", "tokenize", "DEFAULT_BALL_EPS", "AffinePredicate",
    "BallPredicate", "BoxPredicate", "Predicate", "eval_predicate",
    "predicate_from_dict", "predicate_to_dict", "Signal", "exact_robustness",
    "path_robustness", "state_robustness", "verdict",
]
