"""Layered temporal logics over sequences of words and trees."""

from .compiler import (
    BETA, Cell, Partition, SatResult, Semantics, compile_formula, eval_formula,
    partition_formulas, sat_check,
)
from .ltl import eval_lasso, pltl_to_buchi
from .syntax import (
    AllPaths, Always, And, Const, Eventually, Exists, Formula, FormulaSyntaxError, Iff,
    Implies, Inner, LayeringError, Next, Not, Or, Prop, SomePath, Until, parse_formula, render,
    size,
)
from .trees import eval_tree, pathctl_to_fta

compile = compile_formula

__all__ = [
    "AllPaths", "Always", "And", "BETA", "Cell", "compile", "compile_formula", "Const",
    "eval_formula", "eval_lasso", "eval_tree", "Eventually", "Exists", "Formula",
    "FormulaSyntaxError", "Iff", "Implies", "Inner", "LayeringError", "Next", "Not", "Or",
    "parse_formula", "Partition", "partition_formulas", "pathctl_to_fta", "pltl_to_buchi",
    "Prop", "render", "sat_check", "SatResult", "Semantics", "size", "SomePath", "Until",
]
