"""Scaled conjugate gradient minimisation (Moller, 1993).

No line search: each iteration estimates the curvature along the search
direction from a finite difference of gradients, regularised by a scale
parameter ``lambda`` that is adapted from how well the local quadratic model
predicted the actual decrease.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NumericalError, ParameterError

Oracle = Callable[[np.ndarray], tuple[float, np.ndarray]]

LAMBDA_MAX = 1e100
TINY = 1e-300


@dataclass(frozen=True)
class ScgConfig:
    sigma0: float = 1e-4
    lambda_init: float = 1e-6
    max_iterations: int = 2000
    grad_tol: float = 1e-8
    obj_tol: float = 1e-12

    def __post_init__(self):
        for name in ("sigma0", "lambda_init", "max_iterations", "grad_tol", "obj_tol"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"ScgConfig.{name} must be positive")


@dataclass
class ScgResult:
    """Outcome of :func:`minimize`.

    ``trace`` holds the objective at the start point followed by the
    objective after every accepted step.
    """

    params: np.ndarray
    objective: float
    iterations: int
    converged_by: str
    trace: list[float] = field(default_factory=list)


def _evaluate(oracle, w, iteration):
    f, g = oracle(w)
    f = float(f)
    g = np.asarray(g, dtype=np.float64)
    if g.shape != w.shape:
        raise NumericalError(
            f"gradient shape {g.shape} does not match parameters {w.shape}", iteration
        )
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise NumericalError(f"non-finite objective or gradient at iteration {iteration}", iteration)
    return f, g


def minimize(oracle: Oracle, start, cfg: ScgConfig | None = None) -> ScgResult:
    """Minimise ``oracle`` from ``start``.

    Parameters
    ----------
    oracle : callable
        ``oracle(w) -> (value, gradient)``.
    start : array_like
        Initial parameter vector; not modified.
    cfg : ScgConfig, optional

    Returns
    -------
    ScgResult
        ``converged_by`` is ``"gradient"`` when the gradient norm fell below
        ``grad_tol``, ``"objective"`` when an accepted step decreased the
        objective by less than ``obj_tol`` times its previous magnitude (or
        ``lambda`` saturated, meaning no decrease is attainable), and ``"max_iter"`` otherwise.

    Raises
    ------
    NumericalError
        If the oracle returns a non-finite value; ``.iteration`` tells when.
    """
    cfg = cfg or ScgConfig()
    w = np.array(start, dtype=np.float64, copy=True)
    n = w.size
    f, g = _evaluate(oracle, w, 0)
    trace = [f]
    if np.linalg.norm(g) < cfg.grad_tol:
        return ScgResult(w, f, 0, "gradient", trace)

    r = -g
    p = r.copy()
    lam = cfg.lambda_init
    lam_bar = 0.0
    success = True
    delta = 0.0
    accepted = 0
    converged_by = "max_iter"
    iteration = 0

    while iteration < cfg.max_iterations:
        iteration += 1
        p2 = float(p @ p)
        if success:
            sigma = cfg.sigma0 / np.sqrt(p2)
            _, g_sigma = _evaluate(oracle, w + sigma * p, iteration)
            delta = float(p @ (g_sigma - g)) / sigma

        # Scale the curvature, then force it positive if the Hessian
        # estimate is indefinite along p.
        delta += (lam - lam_bar) * p2
        if delta <= 0.0:
            lam_bar = 2.0 * (lam - delta / p2)
            delta = -delta + lam * p2
            lam = lam_bar

        mu = float(p @ r)
        if mu <= TINY or abs(delta) < TINY:
            p = r.copy()
            lam_bar = 0.0
            success = True
            continue

        alpha = mu / delta
        w_new = w + alpha * p
        f_new, g_new = _evaluate(oracle, w_new, iteration)
        comparison = 2.0 * delta * (f - f_new) / (mu * mu)

        if comparison >= 0.0:
            decrease = f - f_new
            # Relative to the objective before the step, so the test does not
            # depend on the scale of the targets or the number of samples.
            decrease_limit = cfg.obj_tol * max(abs(f), TINY)
            r_new = -g_new
            accepted += 1
            if accepted % n == 0:
                p_next = r_new.copy()
            else:
                beta = (float(r_new @ r_new) - float(r_new @ r)) / mu
                p_next = r_new + beta * p
            w, f, g, r = w_new, f_new, g_new, r_new
            trace.append(f)
            lam_bar = 0.0
            success = True
            if comparison >= 0.75:
                lam *= 0.25
        else:
            lam_bar = lam
            success = False
            p_next = p

        if comparison < 0.25:
            lam = min(lam + delta * (1.0 - comparison) / p2, LAMBDA_MAX)

        if success:
            if np.linalg.norm(g) < cfg.grad_tol:
                converged_by = "gradient"
                break
            if decrease < decrease_limit:
                converged_by = "objective"
                break
        elif lam >= LAMBDA_MAX:
            converged_by = "objective"
            break
        p = p_next

    return ScgResult(w, f, iteration, converged_by, trace)
