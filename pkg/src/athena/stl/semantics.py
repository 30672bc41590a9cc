"""Quantitative robustness and boolean satisfaction on sampled traces.

Discrete-grid semantics evaluated at time 0. Temporal operators select the
grid samples u with t+a <= u <= t+b (ends inclusive, TIME_TOL slack); min
and max over those samples give Globally and Eventually. Robustness is
computed bottom-up as one array per subformula, trimmed to the prefix of
sample indices whose full window fits inside the trace.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from ..errors import HorizonError
from ..signals import TIME_TOL
from .nodes import (
    And,
    AtomExpr,
    Eventually,
    Formula,
    Globally,
    Implies,
    Not,
    Or,
    Predicate,
    Trace,
)

__all__ = ["robustness", "satisfied", "formula_horizon"]


def formula_horizon(f: Formula) -> float:
    """Largest time instant (seconds) the formula can reference from t=0."""
    if isinstance(f, Predicate):
        return 0.0
    if isinstance(f, Not):
        return formula_horizon(f.child)
    if isinstance(f, (And, Or, Implies)):
        return max(formula_horizon(f.left), formula_horizon(f.right))
    if isinstance(f, (Globally, Eventually)):
        return f.b + formula_horizon(f.child)
    raise TypeError(f"not a formula node: {f!r}")


def _window_offsets(a: float, b: float, step: float) -> tuple[int, int]:
    """Sample-index offsets selected by [t+a, t+b] on a uniform grid."""
    k_lo = max(0, math.ceil((a - TIME_TOL) / step))
    k_hi = math.floor((b + TIME_TOL) / step)
    if k_lo > k_hi:
        raise ValueError(
            f"interval [{a:g},{b:g}] selects no grid samples at step {step:g}"
        )
    return k_lo, k_hi


def _sliding(arr: np.ndarray, k_lo: int, k_hi: int, out_len: int, take_min: bool) -> np.ndarray:
    """out[i] = min/max(arr[i+k_lo : i+k_hi+1]) for i in range(out_len)."""
    w = k_hi - k_lo + 1
    if w == 1:
        return arr[k_lo : k_lo + out_len]
    filt = minimum_filter1d if take_min else maximum_filter1d
    full = filt(arr, size=w, mode="nearest")
    start = k_lo + w // 2
    return full[start : start + out_len]


def _atom_values(expr: AtomExpr, trace: Trace) -> np.ndarray:
    acc = np.zeros(trace.grid.n_samples)
    for name, coeff in expr.terms:
        acc = acc + coeff * trace.channel(name)
    acc = acc + expr.const
    if expr.absolute:
        acc = np.abs(acc)
    return acc


def _rho(f: Formula, trace: Trace) -> np.ndarray:
    """Robustness of f at every sample index where it is defined."""
    if isinstance(f, Predicate):
        e = _atom_values(f.expr, trace)
        if f.cmp in ("<", "<="):
            return f.bound - e
        return e - f.bound
    if isinstance(f, Not):
        return -_rho(f.child, trace)
    if isinstance(f, (And, Or, Implies)):
        left = _rho(f.left, trace)
        right = _rho(f.right, trace)
        n = min(len(left), len(right))
        if isinstance(f, And):
            return np.minimum(left[:n], right[:n])
        if isinstance(f, Or):
            return np.maximum(left[:n], right[:n])
        return np.maximum(-left[:n], right[:n])
    if isinstance(f, (Globally, Eventually)):
        child = _rho(f.child, trace)
        k_lo, k_hi = _window_offsets(f.a, f.b, trace.grid.step)
        out_len = len(child) - k_hi
        if out_len < 1:
            raise HorizonError(
                f"trace end {trace.grid.end:g}s is too short for {f}"
                f" (needs {formula_horizon(f):g}s)"
            )
        return _sliding(child, k_lo, k_hi, out_len, take_min=isinstance(f, Globally))
    raise TypeError(f"not a formula node: {f!r}")


def _sat(f: Formula, trace: Trace) -> np.ndarray:
    """Boolean satisfaction (uint8) of f at every defined sample index."""
    if isinstance(f, Predicate):
        e = _atom_values(f.expr, trace)
        if f.cmp == "<":
            res = e < f.bound
        elif f.cmp == "<=":
            res = e <= f.bound
        elif f.cmp == ">":
            res = e > f.bound
        else:
            res = e >= f.bound
        return res.astype(np.uint8)
    if isinstance(f, Not):
        return 1 - _sat(f.child, trace)
    if isinstance(f, (And, Or, Implies)):
        left = _sat(f.left, trace)
        right = _sat(f.right, trace)
        n = min(len(left), len(right))
        if isinstance(f, And):
            return left[:n] & right[:n]
        if isinstance(f, Or):
            return left[:n] | right[:n]
        return (1 - left[:n]) | right[:n]
    if isinstance(f, (Globally, Eventually)):
        child = _sat(f.child, trace)
        k_lo, k_hi = _window_offsets(f.a, f.b, trace.grid.step)
        out_len = len(child) - k_hi
        if out_len < 1:
            raise HorizonError(
                f"trace end {trace.grid.end:g}s is too short for {f}"
                f" (needs {formula_horizon(f):g}s)"
            )
        return _sliding(child, k_lo, k_hi, out_len, take_min=isinstance(f, Globally))
    raise TypeError(f"not a formula node: {f!r}")


def robustness(f: Formula, trace: Trace) -> float:
    """Space robustness of f on the trace, evaluated at time 0.

    Positive means satisfied, negative violated; magnitude is the margin in
    the units of the predicate expressions.
    """
    return float(_rho(f, trace)[0])


def satisfied(f: Formula, trace: Trace) -> bool:
    """Classical boolean semantics at time 0 (strict comparators exact)."""
    return bool(_sat(f, trace)[0])
