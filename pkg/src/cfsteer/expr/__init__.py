from .core import MAX_DEGREE, MAX_TRIG_POWER, MixedTrigExpr, Term, TrigArgument, TrigFactor, multiply, substitute
from .euler import ExpCanonicalTerm, euler_expand
from .params import ParamAffine, ParamPolynomial
from .parser import parse
from .symbols import SymbolTable, Variable

__all__ = [
    "ExpCanonicalTerm", "MAX_DEGREE", "MAX_TRIG_POWER", "MixedTrigExpr", "ParamAffine",
    "ParamPolynomial", "SymbolTable", "Term", "TrigArgument", "TrigFactor", "Variable",
    "euler_expand", "multiply", "parse", "substitute",
]
