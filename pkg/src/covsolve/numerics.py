"""Numerically robust primitives: epsilon steps and finite-difference gradients.

The search works on real vectors whose coordinates ultimately round back to
machine-typed values, so a useful perturbation must be large enough to
survive both 64-bit float addition and the type rounding.  Two step sizes
are provided: one relative to a single value, and one along a line through
the typed grid.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .vecspace import ExtractionError, Signature, round_vector

#: Significand digits of a 64-bit float; steps shift the lower half of them.
_DIGITS = 53
_HALF_DIGITS = _DIGITS // 2

_SMALLEST_SUBNORMAL = 5e-324


class NoStepError(ValueError):
    """No epsilon along the line changes the rounded vector."""


def epsilon_from_value(a: float) -> float:
    """Smallest useful step from ``a``: changes its lower significand half.

    Writes ``a = m * 2**n`` with ``0.5 < |m| <= 1`` and returns
    ``2**(n - 26)``.  For ``a = 0`` the exponent is taken as 0, giving
    ``2**-26``.  The result added to ``a`` always changes ``a``'s
    representation (magnitudes below ~2**-1048 would underflow the formula;
    those clamp to the smallest subnormal to keep the guarantee).
    """
    if not math.isfinite(a):
        raise ValueError(f"epsilon step of non-finite value {a!r}")
    if a == 0.0:
        n = 0
    else:
        m, e = math.frexp(a)  # |m| in [0.5, 1)
        n = e - 1 if abs(m) == 0.5 else e
    try:
        eps = math.ldexp(1.0, n - _HALF_DIGITS)
    except OverflowError:
        eps = math.inf
    if eps == 0.0:
        return _SMALLEST_SUBNORMAL
    return eps


def epsilon_along_line(
    origin: np.ndarray,
    direction: np.ndarray,
    eps1: float,
    signature: Signature,
) -> float:
    """Step size along ``origin + eps*direction`` that moves the rounded point.

    Samples ``2 * dim`` points on the line, the first at ``eps1``, each next
    one advanced by the smallest coordinate step that reaches the next
    representable value of some coordinate's type.  Among the samples whose
    rounded vector differs from the rounded origin, returns the epsilon
    minimising the maximum of the step length and the distance of the
    rounded point from the line.

    Raises NoStepError when every sample rounds back onto the origin.
    """
    origin = np.asarray(origin, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    with np.errstate(over="ignore"):
        gg = float(direction @ direction)
    if gg == 0.0:
        raise ValueError("line direction must be nonzero")
    if not math.isfinite(gg):
        raise ValueError("line direction overflows")
    if eps1 <= 0.0:
        raise ValueError("initial epsilon must be positive")

    rounded_origin = round_vector(origin, signature)
    n_samples = 2 * origin.shape[0]

    best_eps: float | None = None
    best_score = math.inf

    with np.errstate(over="ignore", invalid="ignore"):
        point = origin + eps1 * direction
        for _ in range(n_samples):
            if not np.all(np.isfinite(point)):
                break
            try:
                rounded = round_vector(point, signature)
            except ExtractionError:
                break
            if not np.array_equal(rounded, rounded_origin):
                eps = float(((point - origin) @ direction) / gg)
                step_len = abs(eps) * math.sqrt(gg)
                t = float(((rounded - origin) @ direction) / gg)
                line_dist = float(np.linalg.norm(rounded - (origin + t * direction)))
                score = max(step_len, line_dist)
                if score < best_score:
                    best_score = score
                    best_eps = eps
            increment = _min_coordinate_step(rounded, direction, signature)
            if increment is None or increment <= 0.0 or not math.isfinite(increment):
                break
            point = point + increment * direction

    if best_eps is None:
        raise NoStepError("no sample along the line changes the rounded vector")
    return best_eps


def _min_coordinate_step(rounded: np.ndarray, direction: np.ndarray,
                         signature: Signature) -> float | None:
    """Smallest line step advancing some coordinate to its next typed value."""
    best = None
    for j, g_j in enumerate(direction):
        if g_j == 0.0:
            continue
        nxt = signature.types[j].next_value(float(rounded[j]), math.copysign(1.0, g_j))
        if nxt is None:
            continue
        step = (nxt - float(rounded[j])) / g_j
        if best is None or step < best:
            best = step
    return best


def finite_diff_gradient(
    func: Callable[[np.ndarray], float | None],
    origin_value: float,
    dim: int,
    line_eps: Callable[[int], float | None],
) -> np.ndarray:
    """Forward-difference gradient of a black-box function of a local vector.

    ``func`` maps a local offset vector to a value, or None when the call
    fails.  ``origin_value`` is the already-known value at the zero vector.
    ``line_eps(j)`` supplies the per-axis step, or None when no step exists.
    A failing call on axis j is retried with the negated step; if both fail
    the partial derivative degrades to zero.
    """
    grad = np.zeros(dim, dtype=np.float64)
    for j in range(dim):
        eps = line_eps(j)
        if eps is None or eps == 0.0:
            continue
        axis = np.zeros(dim, dtype=np.float64)
        axis[j] = eps
        value = func(axis)
        if value is None:
            axis[j] = -eps
            value = func(axis)
            if value is None:
                continue
            grad[j] = (value - origin_value) / -eps
        else:
            grad[j] = (value - origin_value) / eps
    return grad
