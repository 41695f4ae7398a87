"""Exact symbolic expression kernel."""

from .rat import rat, is_rat, is_integer, as_int, QNUM
from .expr import (
    Expr, EXPR_ZERO, EXPR_ONE,
    num_, var_, sin_, cos_, tan_, cot_, exp_, ln_, F_, sder_, expr_pow,
    normalize, differentiate, substitute,
    SamplePolicy, eval_at, eval_with_gradient, eval_float,
    is_zero, ZeroDecision, ZERO_CERTIFIED, ZERO_PROBABLE, NONZERO,
    KernelError, UnsupportedFormError, EvalError, PoleError, InconclusiveError,
    DEFAULT_SEED,
)

__all__ = [
    "rat", "is_rat", "is_integer", "as_int", "QNUM",
    "Expr", "EXPR_ZERO", "EXPR_ONE",
    "num_", "var_", "sin_", "cos_", "tan_", "cot_", "exp_", "ln_", "F_",
    "sder_", "expr_pow", "normalize", "differentiate", "substitute",
    "SamplePolicy", "eval_at", "eval_with_gradient", "eval_float",
    "is_zero", "ZeroDecision", "ZERO_CERTIFIED", "ZERO_PROBABLE", "NONZERO",
    "KernelError", "UnsupportedFormError", "EvalError", "PoleError",
    "InconclusiveError", "DEFAULT_SEED",
]
