"""Iterative search for a solution of a coverage problem.

Each iteration rebuilds the chain of local spaces and constraint sets at the
current valuation, generates candidate vectors in the last local space by
three strategies (a gradient-descent step, bit mutations, random samples),
and accepts the first candidate that either solves the problem or brings
the last function's value strictly closer to satisfying its comparator.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .constraints import Constraint, clip, make_constraint, transform_constraint
from .localspace import BasisChain, next_basis
from .numerics import (
    NoStepError,
    epsilon_along_line,
    epsilon_from_value,
    finite_diff_gradient,
)
from .problem import (
    BlackBoxFn,
    CoverageProblem,
    InvalidProblemError,
    Outcome,
    eval_prefix,
)
from .vecspace import Comparator, ExtractionError, Valuation, embed, extract

logger = logging.getLogger(__name__)

#: Pivot coordinates below this magnitude cannot anchor a bit mutation.
PIVOT_GUARD = 1e-12

GRAD_STEP = "grad-step"
BIT_MUT = "bit-mut"
RANDOM = "random"


@dataclass(frozen=True)
class SolverConfig:
    """Budgets and tuning knobs of the search."""

    max_iterations: int = 100
    max_evaluations: int = 100_000
    rng_seed: int = 0
    clip_limit: int = 10
    bit_mut_steps: int = 10
    samples_per_cube: int = 100
    alpha: float = 0.01
    cube_scale: float = 100.0
    tangent_projection: bool = True

    def __post_init__(self):
        for name in ("max_iterations", "max_evaluations", "clip_limit",
                     "bit_mut_steps", "samples_per_cube"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly between 0 and 1")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be non-negative")


class Status(enum.Enum):
    SOLVED = "SOLVED"
    FAILED_NO_PROGRESS = "FAILED_NO_PROGRESS"
    FAILED_BUDGET = "FAILED_BUDGET"


@dataclass(frozen=True)
class IterationRecord:
    """The candidate accepted in one iteration and its last-function value."""

    iteration: int
    source: str
    value: float


@dataclass(frozen=True)
class SolverResult:
    status: Status
    solution: Valuation | None
    iterations_used: int
    evaluations_used: int
    log: tuple[IterationRecord, ...]

    @property
    def solved(self) -> bool:
        return self.status is Status.SOLVED


@dataclass(frozen=True)
class IterationState:
    """Everything one iteration derives from the current valuation."""

    problem: CoverageProblem
    valuation: Valuation
    vec: np.ndarray
    chain: BasisChain
    csets: tuple[tuple[Constraint, ...], ...]
    grad_n: np.ndarray
    prefix_values: tuple[float, ...]

    @property
    def f_n(self) -> float:
        return self.prefix_values[-1]

    @property
    def final_constraints(self) -> tuple[Constraint, ...]:
        return self.csets[-1]


class _BudgetExhausted(Exception):
    pass


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def charge(self) -> None:
        if self.used >= self.limit:
            raise _BudgetExhausted
        self.used += 1


def _counted(fn: BlackBoxFn, budget: _Budget) -> BlackBoxFn:
    def charged_eval(valuation: Valuation) -> float | None:
        budget.charge()
        return fn.eval(valuation)

    return BlackBoxFn(fn.params, charged_eval, fn.name)


def _local_gradient(fn: BlackBoxFn, origin_value: float, chain: BasisChain,
                    level: int, vec: np.ndarray, signature,
                    eps_seed: float) -> np.ndarray:
    """Finite-difference gradient of ``fn`` at the origin of a local space."""
    lifted = chain.lifted(level)

    def f_local(u: np.ndarray) -> float | None:
        point = vec + u @ lifted
        if not np.all(np.isfinite(point)):
            return None
        try:
            valuation = extract(point, signature)
        except ExtractionError:
            return None
        return fn.call(valuation)

    def line_eps(j: int) -> float | None:
        try:
            return epsilon_along_line(vec, lifted[j], eps_seed, signature)
        except NoStepError:
            return None

    return finite_diff_gradient(f_local, origin_value, lifted.shape[0], line_eps)


def build_spaces(problem: CoverageProblem, valuation: Valuation,
                 config: SolverConfig | None = None, *,
                 fns: Sequence[BlackBoxFn] | None = None) -> IterationState:
    """Local bases, constraint sets, and the last function's gradient at ``valuation``.

    Level 1 is the axis basis with no constraints.  For every prefix
    function the gradient in its local space is estimated numerically, the
    next basis is built (with the gradient axis appended unless the
    comparator is equality), the predicate's own constraint is added, and
    all earlier constraints are carried over into the new space.

    ``config`` is accepted for call-site uniformity; the construction has
    no tunables (step seeds follow the current valuation).
    """
    fns = tuple(fns) if fns is not None else problem.fns
    comps = problem.comps
    signature = valuation.signature
    vec = embed(valuation)

    record = eval_prefix(fns, comps, valuation)
    if record.outcome is not Outcome.LAST_FALSE:
        raise InvalidProblemError(
            f"iteration entry is not a coverage problem: {record.outcome.value}")
    values = record.values

    eps_seed = epsilon_from_value(float(np.max(np.abs(vec))))
    chain = BasisChain(len(signature))
    csets: list[tuple[Constraint, ...]] = [()]

    n = len(fns)
    for i in range(1, n):
        grad = _local_gradient(fns[i - 1], values[i - 1], chain, i, vec,
                               signature, eps_seed)
        grad_norm = float(np.linalg.norm(grad))
        append = comps[i - 1] is not Comparator.EQ and grad_norm > 0.0
        basis = chain.extend(next_basis(grad, chain.dim_at(i),
                                        append_gradient=append))
        items: list[Constraint] = []
        fresh = make_constraint(comps[i - 1], values[i - 1], grad_norm, basis.size)
        if fresh is not None:
            items.append(fresh)
        for old in csets[i - 1]:
            moved = transform_constraint(old, basis)
            if moved is not None:
                items.append(moved)
        csets.append(tuple(items))

    grad_n = _local_gradient(fns[n - 1], values[n - 1], chain, n, vec,
                             signature, eps_seed)
    return IterationState(problem, valuation, vec, chain, tuple(csets),
                          grad_n, values)


_P_VALUES = {
    Comparator.EQ: lambda t, e: (t,),
    Comparator.NEQ: lambda t, e: (t - e, t + e),
    Comparator.LT: lambda t, e: (t - e,),
    Comparator.LE: lambda t, e: (t - e, t),
    Comparator.GT: lambda t, e: (t + e,),
    Comparator.GE: lambda t, e: (t, t + e),
}


def grad_step_candidates(state: IterationState,
                         config: SolverConfig) -> list[np.ndarray]:
    """Candidates from one linearised descent step of the last function.

    The step length t solves the linear model F[I + t*grad] = 0; the
    comparator decides which of t, t-eps, t+eps are useful landing points.
    Besides the full gradient direction, a step is taken along every single
    axis with a nonzero partial derivative, which helps escaping local
    minima.  Every candidate is clipped by the constraint set.
    """
    grad = state.grad_n
    with np.errstate(over="ignore"):
        gg = float(grad @ grad)
    if gg == 0.0:
        return []
    comp = state.problem.comps[-1]
    constraints = state.final_constraints
    clip_grad = grad if config.tangent_projection else None
    f_n = state.f_n
    signature = state.valuation.signature
    out: list[np.ndarray] = []

    def steps_along(direction: np.ndarray) -> None:
        dd = float(direction @ direction)
        if dd == 0.0 or not math.isfinite(dd):
            return
        t = -f_n / dd
        if not math.isfinite(t):
            return
        d_root = state.chain.lift(direction)
        z = ((1.0 - config.alpha) * float(np.max(np.abs(state.vec + t * d_root)))
             + config.alpha * abs(f_n))
        try:
            eps = epsilon_along_line(state.vec, d_root, epsilon_from_value(z),
                                     signature) if math.isfinite(z) else 0.0
        except NoStepError:
            eps = 0.0
        for p in _P_VALUES[comp](t, eps):
            out.append(clip(p * direction, constraints, clip_grad,
                            rounds=config.clip_limit))

    with np.errstate(over="ignore", invalid="ignore"):
        steps_along(grad)
        for j in range(grad.shape[0]):
            if grad[j] != 0.0:
                axis_step = np.zeros_like(grad)
                axis_step[j] = grad[j]
                steps_along(axis_step)
    return out


def pin_to_plane(u: np.ndarray, pivot: int, coords: np.ndarray,
                 y: float) -> np.ndarray:
    """Recompute the pivot coordinate so that ``u`` lifts onto the target plane.

    The plane is sum_k u_k * coords_k = y, with ``coords`` the root-space
    i-th coordinates of the basis vectors.
    """
    u = u.copy()
    partial = float(u @ coords) - u[pivot] * coords[pivot]
    u[pivot] = (y - partial) / coords[pivot]
    return u


def plane_descent_gradient(u: np.ndarray, pivot: int,
                           coords: np.ndarray) -> np.ndarray:
    """Gradient of the squared distance to the plane target, pivot held dependent.

    With the pivot coordinate always recomputed from the others, the partial
    derivatives reduce to 2*(u_k - u_p * coords_k / coords_p) and the pivot's
    own partial is zero.
    """
    g = 2.0 * (u - (u[pivot] / coords[pivot]) * coords)
    g[pivot] = 0.0
    return g


def bit_mutation_candidates(state: IterationState,
                            config: SolverConfig) -> list[np.ndarray]:
    """One candidate per bit of each integer parameter of the last function.

    Flipping bit j of a value changes it by y = +-2**(j-1) (in unsigned
    arithmetic), so the mutated inputs lie on the root-space plane where
    coordinate i moved by exactly y.  The candidate is the local-space
    vector lifting closest to that plane point, found by a fixed number of
    descent steps that keep one pivot coordinate pinned to the plane.
    Candidates are deliberately left unclipped: vectors escaping the path
    early still make useful inputs elsewhere.
    """
    signature = state.valuation.signature
    lifted = state.chain.lifted(len(state.chain))
    dim_local = lifted.shape[0]
    if dim_local == 0:
        return []
    params = set(state.problem.fns[-1].params)
    out: list[np.ndarray] = []

    for i, (name, typ) in enumerate(zip(signature.names, signature.types)):
        if name not in params:
            continue
        if not typ.is_integer:
            logger.debug("bit mutations skip float-typed variable %s", name)
            continue
        coords = lifted[:, i]
        pivot = int(np.argmax(np.abs(coords)))
        if abs(coords[pivot]) < PIVOT_GUARD:
            continue  # no basis vector reaches this variable's axis
        width = typ.bit_width
        raw = int(state.valuation.values[i]) & ((1 << width) - 1)
        target_axis = np.zeros(state.chain.root_dim, dtype=np.float64)
        target_axis[i] = 1.0
        with np.errstate(over="ignore", invalid="ignore"):
            for j in range(1, width + 1):
                bit = (raw >> (j - 1)) & 1
                y = float((1 - 2 * bit) * (1 << (j - 1)))
                u = np.zeros(dim_local, dtype=np.float64)
                u[pivot] = y
                for _ in range(config.bit_mut_steps):
                    g = plane_descent_gradient(u, pivot, coords)
                    gg = float(g @ g)
                    if gg > PIVOT_GUARD:
                        diff = u @ lifted - y * target_axis
                        f_val = float(diff @ diff)
                        u = u + (-f_val / gg) * g
                    u = pin_to_plane(u, pivot, coords, y)
                    if gg <= PIVOT_GUARD:
                        break
                out.append(u)
    return out


def random_candidates(state: IterationState, config: SolverConfig,
                      rng: np.random.Generator) -> list[np.ndarray]:
    """Uniform samples from cubes around the origin and the descent target.

    The cube half-edge grows logarithmically with the last function's
    magnitude.  Every sample is emitted twice, clipped and raw: unclipped
    vectors escape the current path more easily, which is still worthwhile.
    """
    dim_local = state.chain.dim_at(len(state.chain))
    if dim_local == 0:
        return []
    constraints = state.final_constraints
    clip_grad = state.grad_n if config.tangent_projection else None
    half_edge = config.cube_scale * math.log(abs(state.f_n) + 1.0)

    centers = [np.zeros(dim_local, dtype=np.float64)]
    with np.errstate(over="ignore", invalid="ignore"):
        gg = float(state.grad_n @ state.grad_n)
        if math.isfinite(gg) and gg > 0.0:
            target = (-state.f_n / gg) * state.grad_n
            if np.all(np.isfinite(target)):
                centers.append(target)

    out: list[np.ndarray] = []
    for center in centers:
        for _ in range(config.samples_per_cube):
            sample = center + rng.uniform(-half_edge, half_edge, size=dim_local)
            out.append(clip(sample, constraints, clip_grad,
                            rounds=config.clip_limit))
            out.append(sample)
    return out


def improves(comp: Comparator, old_value: float, new_value: float) -> bool:
    """Whether ``new_value`` is strictly closer to satisfying ``comp`` against 0."""
    if comp is Comparator.EQ:
        return abs(new_value) < abs(old_value)
    if comp is Comparator.NEQ:
        return abs(new_value) > abs(old_value)
    if comp in (Comparator.LT, Comparator.LE):
        return new_value < old_value
    return new_value > old_value


def _candidates(state: IterationState, config: SolverConfig,
                rng: np.random.Generator) -> Iterable[tuple[str, np.ndarray]]:
    for u in grad_step_candidates(state, config):
        yield GRAD_STEP, u
    for u in bit_mutation_candidates(state, config):
        yield BIT_MUT, u
    for u in random_candidates(state, config, rng):
        yield RANDOM, u


def solve(problem: CoverageProblem,
          config: SolverConfig | None = None) -> SolverResult:
    """Search for a solution of ``problem``.

    The problem should be reduced first (see ``problem.reduce_problem``);
    solving works on unreduced problems too, just in more dimensions.
    Identical problem, configuration and seed give an identical result.
    """
    config = config or SolverConfig()
    budget = _Budget(config.max_evaluations)
    fns = tuple(_counted(fn, budget) for fn in problem.fns)
    comps = problem.comps
    comp_last = comps[-1]
    rng = np.random.default_rng(config.rng_seed)

    current = problem.init
    log: list[IterationRecord] = []
    iteration = 0
    try:
        while iteration < config.max_iterations:
            iteration += 1
            state = build_spaces(problem, current, config, fns=fns)
            accepted: Valuation | None = None
            for source, u in _candidates(state, config, rng):
                with np.errstate(over="ignore", invalid="ignore"):
                    point = state.vec + state.chain.lift(u)
                if not np.all(np.isfinite(point)):
                    continue
                try:
                    candidate = extract(point, current.signature)
                except ExtractionError:
                    continue
                record = eval_prefix(fns, comps, candidate)
                if record.outcome is Outcome.DIVERGED:
                    continue
                value = record.values[-1]
                if record.outcome is Outcome.FULL_TRUE:
                    log.append(IterationRecord(iteration, source, value))
                    return SolverResult(Status.SOLVED, candidate, iteration,
                                        budget.used, tuple(log))
                if improves(comp_last, state.f_n, value):
                    log.append(IterationRecord(iteration, source, value))
                    accepted = candidate
                    break
            if accepted is None:
                return SolverResult(Status.FAILED_NO_PROGRESS, None, iteration,
                                    budget.used, tuple(log))
            current = accepted
    except _BudgetExhausted:
        pass
    return SolverResult(Status.FAILED_BUDGET, None, iteration, budget.used,
                        tuple(log))
