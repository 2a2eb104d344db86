"""Box-constrained minimization with numerically estimated gradients.

The solver is a projected quasi-Newton method: limited-memory curvature
updates combined with gradient projection onto the box. Feasibility is
maintained by projection (every iterate is clipped into the box, never
penalized), accepted objective values are non-increasing by construction,
and the whole routine is deterministic given its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteObjective
from .validation import as_float_array, check_bounds_pair, check_finite, check_positive

_LBFGS_MEMORY = 10
_ARMIJO_C1 = 1e-4
_MAX_BACKTRACKS = 40
_MAX_EXPANSIONS = 40


@dataclass(frozen=True)
class Bounds:
    """Elementwise lower/upper bounds; lower[k] <= upper[k] is enforced."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, hi = check_bounds_pair(self.lower, self.upper, "Bounds")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def size(self) -> int:
        return self.lower.size

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(x, self.lower), self.upper)


@dataclass(frozen=True)
class SolveOptions:
    """Iteration and tolerance knobs; all strictly positive."""

    max_iterations: int = 100
    gradient_step: float = 1e-6
    objective_tolerance: float = 1e-8
    step_tolerance: float = 1e-8

    def __post_init__(self):
        if self.max_iterations <= 0:
            raise ValueError("max_iterations must be positive")
        check_positive(self.gradient_step, "gradient_step")
        check_positive(self.objective_tolerance, "objective_tolerance")
        check_positive(self.step_tolerance, "step_tolerance")


@dataclass(frozen=True)
class SolveResult:
    x: np.ndarray
    objective: float
    iterations: int
    converged: bool


def _evaluate(f, x: np.ndarray) -> float:
    value = float(f(x))
    if not math.isfinite(value):
        raise NonFiniteObjective(f"objective returned {value!r} at x={x!r}")
    return value


def finite_diff_gradient(f, x, step: float) -> np.ndarray:
    """Central-difference gradient (f(x+h e_k) - f(x-h e_k)) / (2h)."""
    x = as_float_array(np.atleast_1d(x), name="x").copy()
    check_finite(x, "x")
    step = check_positive(step, "step")
    grad = np.empty_like(x)
    for k in range(x.size):
        orig = x[k]
        x[k] = orig + step
        f_plus = _evaluate(f, x)
        x[k] = orig - step
        f_minus = _evaluate(f, x)
        x[k] = orig
        grad[k] = (f_plus - f_minus) / (2.0 * step)
    return grad


def _lbfgs_direction(grad, s_list, y_list, rho_list, free):
    """Two-loop recursion restricted to the free variables."""
    q = np.where(free, -grad, 0.0)
    if not s_list:
        return q
    alphas = []
    for s, y, rho in zip(reversed(s_list), reversed(y_list), reversed(rho_list)):
        alpha = rho * float(s @ q)
        alphas.append(alpha)
        q = q - alpha * y
    s_last, y_last = s_list[-1], y_list[-1]
    gamma = float(s_last @ y_last) / float(y_last @ y_last)
    q = gamma * q
    for (s, y, rho), alpha in zip(zip(s_list, y_list, rho_list), reversed(alphas)):
        beta = rho * float(y @ q)
        q = q + (alpha - beta) * s
    return np.where(free, q, 0.0)


def minimize(f, x0, bounds: Bounds, options: SolveOptions = SolveOptions(),
             callback=None) -> SolveResult:
    """Minimize ``f`` over the box, starting from ``x0`` (clamped if outside).

    Convergence is declared when the decrease of the objective over one
    accepted step falls below ``objective_tolerance`` or the projected
    gradient's infinity norm falls below ``step_tolerance``; hitting
    ``max_iterations`` instead is reported as ``converged=False``.

    ``callback(x, fx)`` is invoked at the start point and after every
    accepted iterate, so the visited objective sequence can be observed
    (it is non-increasing).
    """
    x = bounds.clip(as_float_array(np.atleast_1d(x0), name="x0"))
    check_finite(x, "x0")
    lo, hi = bounds.lower, bounds.upper
    h = options.gradient_step

    fx = _evaluate(f, x)
    if callback is not None:
        callback(x.copy(), fx)
    grad = finite_diff_gradient(f, x, h)

    s_list: list[np.ndarray] = []
    y_list: list[np.ndarray] = []
    rho_list: list[float] = []
    converged = False
    iterations = 0

    for iterations in range(1, options.max_iterations + 1):
        projected_grad = x - np.minimum(np.maximum(x - grad, lo), hi)
        if float(np.abs(projected_grad).max()) < options.step_tolerance:
            converged = True
            iterations -= 1
            break

        # Variables pinned at an active bound with the gradient pushing
        # outward are frozen for this iteration's quasi-Newton direction.
        eps = 1e-12
        free = ~(((x <= lo + eps) & (grad > 0.0)) | ((x >= hi - eps) & (grad < 0.0)))
        direction = _lbfgs_direction(grad, s_list, y_list, rho_list, free)
        if float(direction @ grad) >= 0.0:
            direction = np.where(free, -grad, 0.0)

        # Backtracking Armijo search along the projection arc.
        step = 1.0
        x_new = None
        f_new = fx
        backtracked = False
        for _ in range(_MAX_BACKTRACKS):
            candidate = np.minimum(np.maximum(x + step * direction, lo), hi)
            delta = candidate - x
            if not np.any(delta):
                break
            f_cand = _evaluate(f, candidate)
            if f_cand <= fx + _ARMIJO_C1 * float(grad @ delta) and f_cand <= fx:
                x_new, f_new = candidate, f_cand
                break
            step *= 0.5
            backtracked = True

        # Forward expansion: if the unit step was accepted outright, the
        # direction may be underscaled (stale curvature along a flat valley);
        # double the step while the Armijo bound holds and each doubling
        # still grows the decrease substantially.
        if x_new is not None and not backtracked:
            for _ in range(_MAX_EXPANSIONS):
                candidate = np.minimum(np.maximum(x + 2.0 * step * direction, lo), hi)
                delta = candidate - x
                if np.array_equal(candidate, x_new):
                    break
                f_cand = _evaluate(f, candidate)
                if (f_cand <= fx + _ARMIJO_C1 * float(grad @ delta)
                        and fx - f_cand >= 1.5 * (fx - f_new)):
                    step *= 2.0
                    x_new, f_new = candidate, f_cand
                else:
                    break

        if x_new is None:
            # No acceptable decrease along either direction: treat as
            # converged at the resolution the line search can see.
            converged = True
            iterations -= 1
            break

        grad_new = finite_diff_gradient(f, x_new, h)
        s = x_new - x
        y = grad_new - grad
        sy = float(s @ y)
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            s_list.append(s)
            y_list.append(y)
            rho_list.append(1.0 / sy)
            if len(s_list) > _LBFGS_MEMORY:
                s_list.pop(0)
                y_list.pop(0)
                rho_list.pop(0)

        decrease = fx - f_new
        x, fx, grad = x_new, f_new, grad_new
        if callback is not None:
            callback(x.copy(), fx)
        if decrease < options.objective_tolerance:
            converged = True
            break

    return SolveResult(x=x, objective=fx, iterations=iterations, converged=converged)
