"""Half-space constraints in local spaces: construction, transformation, clipping.

A constraint (n, s, P) keeps the predicate P(n . (u - s*n), 0) true; freshly
constructed constraints use the gradient axis of the new space as their
normal, so each non-equality prefix predicate becomes one half-space.
Constraints are carried into deeper spaces by projecting the normal, and
candidate vectors are pushed into the feasible region by iterated
projection (clipping).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .localspace import LocalBasis
from .numerics import epsilon_from_value
from .vecspace import Comparator

#: Projections divide by these dot products; smaller magnitudes are skipped.
DIVISION_GUARD = 1e-12

#: Default bound on clipping rounds.
CLIP_ROUNDS = 10

#: Over-relaxation factor for rounds after the first.  Plain boundary
#: projections only converge asymptotically in narrow wedges (inward
#: normals at obtuse angles); overshooting the boundary reaches the
#: feasible region within the round limit.
RELAXATION = 1.8


@dataclass(frozen=True)
class Constraint:
    """Half-space (or hyperplane complement) in a local space."""

    normal: np.ndarray
    offset: float
    comp: Comparator

    def __post_init__(self):
        if self.comp is Comparator.EQ:
            # equality predicates never produce constraints; the shift
            # function h below would be undefined for them
            raise ValueError("EQ constraints are never constructed")


ConstraintSet = Sequence[Constraint]


def satisfies(u: np.ndarray, constraint: Constraint) -> bool:
    """Whether ``u`` lies in the constraint's admissible region.

    Vectors whose residual is not finite (overflowed candidates) satisfy
    nothing; they are reported as violations rather than errors.
    """
    n = constraint.normal
    with np.errstate(over="ignore", invalid="ignore"):
        residual = float(n @ u - constraint.offset * (n @ n))
    if not math.isfinite(residual):
        return False
    return constraint.comp.holds(residual)


def satisfies_all(u: np.ndarray, constraints: ConstraintSet) -> bool:
    """True when the set is empty or every member holds."""
    return all(satisfies(u, c) for c in constraints)


def make_constraint(comp: Comparator, f_value: float, grad_norm: float,
                    new_dim: int) -> Constraint | None:
    """Constraint for one prefix predicate, in the next level's coordinates.

    The normal is the final axis of the new space (the gradient direction);
    the offset places the hyperplane where the linearised function crosses
    zero.  Equality comparators need no constraint: their whole admissible
    set was already removed from the space.  A zero gradient produces no
    constraint either, since no gradient axis exists.
    """
    if comp is Comparator.EQ or grad_norm <= 0.0:
        return None
    offset = -f_value / grad_norm
    if not math.isfinite(offset):
        return None
    normal = np.zeros(new_dim, dtype=np.float64)
    normal[new_dim - 1] = 1.0
    return Constraint(normal, offset, comp)


def transform_constraint(constraint: Constraint, basis: LocalBasis) -> Constraint | None:
    """Carry a constraint into the next level's space.

    The normal is projected onto the new basis; the offset is rescaled so
    the hyperplane still meets the projected normal's line at the original
    plane.  When the normal is orthogonal to the whole new space the
    constraint cannot be expressed there and None is returned.
    """
    n = constraint.normal
    m = basis.vectors @ n
    # n . n' with n' the back-lifted projection equals |m|^2
    nn_prime = float(m @ m)
    if nn_prime < DIVISION_GUARD:
        return None
    offset = constraint.offset * float(n @ n) / nn_prime
    if not math.isfinite(offset):
        return None
    return Constraint(m, offset, constraint.comp)


def _shift(comp: Comparator, coord: float) -> float:
    """Shift off the hyperplane for strict comparators (the function h)."""
    if comp in (Comparator.LE, Comparator.GE):
        return 0.0
    eps = epsilon_from_value(coord)
    if comp is Comparator.LT:
        return -eps
    return eps  # NEQ, GT


def _nudge_inside(u: np.ndarray, constraint: Constraint) -> np.ndarray:
    """Fix a projection that rounding left an ulp outside the half-space.

    The exact projection lands on the boundary (or eps off it); float dot
    products can flip the residual's sign.  One epsilon-sized push along the
    normal dominates that noise without visibly moving the vector.
    """
    n = constraint.normal
    nn = float(n @ n)
    if nn < DIVISION_GUARD:
        return u
    coord = float(n @ u) / nn
    if not math.isfinite(coord):
        return u
    eps = epsilon_from_value(coord)
    sign = -1.0 if constraint.comp in (Comparator.LE, Comparator.LT) else 1.0
    return u + sign * eps * n


def clip(u: np.ndarray, constraints: ConstraintSet,
         grad: np.ndarray | None = None, *, rounds: int = CLIP_ROUNDS) -> np.ndarray:
    """Project ``u`` into the constraint region, at most ``rounds`` times over.

    The first round projects each violated constraint exactly onto its
    boundary (shifted by h(P) for strict comparators); later rounds
    over-relax the projection, overshooting the boundary, which turns the
    asymptotic zig-zag between acute constraint pairs into convergence
    within the round limit.  When ``grad`` is given, the first round
    instead projects along the component of the normal orthogonal to the
    gradient, which preserves the candidate's value under the linearised
    last function; later rounds revert to normal projection since the
    tangent variant converges poorly.  The result may still violate the set
    if it is empty or concave; callers tolerate that.
    """
    u = np.array(u, dtype=np.float64)
    if not np.all(np.isfinite(u)):
        return u  # nothing meaningful to project; callers filter these out
    if satisfies_all(u, constraints):
        return u
    with np.errstate(over="ignore", invalid="ignore"):
        for round_no in range(rounds):
            tangent = grad is not None and round_no == 0 and float(grad @ grad) > 0.0
            relax = 1.0 if round_no == 0 else RELAXATION
            for c in constraints:
                if satisfies(u, c):
                    continue
                n = c.normal
                nn = float(n @ n)
                coord = float(n @ u) / nn if nn >= DIVISION_GUARD else 0.0
                if not math.isfinite(coord):
                    continue
                if tangent:
                    m = n - (float(n @ grad) / float(grad @ grad)) * grad
                    nm = float(n @ m)
                    if abs(nm) < DIVISION_GUARD:
                        continue
                    u = u + (c.offset * nn / nm - float(n @ u) / nm
                             + _shift(c.comp, coord)) * m
                else:
                    if nn < DIVISION_GUARD:
                        continue
                    u = u + relax * (c.offset - coord + _shift(c.comp, coord)) * n
                if not satisfies(u, c):
                    u = _nudge_inside(u, c)
            if satisfies_all(u, constraints):
                break
    return u
