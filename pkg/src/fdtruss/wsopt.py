"""Bound-constrained local minimization of the smoothed weighted sum.

Minimizes F*(q) = mu_x Fx(q~) + mu_y Fy(q~), with |.| smoothed by
sqrt(q^2 + c), over the force-density box. The descent is a projected
quasi-Newton (BFGS) iteration with central finite-difference gradients
through the full realization pipeline and an Armijo backtracking line
search; a handful of perturbed restarts guard against the landscape's
nonconvexity (topology changes, smoothed kinks).

Two single-aspect-ratio drivers are built on top of it: scaling_method
stretches the structure by r in x and minimizes with unit weights;
weighted_method keeps the structure and minimizes with weights
(r^2, 1), then maps the solution onto the stretched structure. Their
compliances agree at true optima; comparing them exercises the central
scaling-to-weights equivalence.
"""

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .energy import ObjectiveValues, normalize_volume, split_objectives, weighted_sum
from .errors import NoProgressWarning, SingularEquilibrium, SingularStiffness, StartInfeasible
from .fdm import DEFAULT_Q_BOUND
from .fea import (CONSISTENCY_SNAP_REL, TrussDesign, compliance,
                  realize_consistent, realize_design)
from .ground import GroundStructure, scale_structure
from .moga import initial_force_densities


@dataclass
class WSConfig:
    """Parameters of the weighted-sum minimization.

    start defaults to the uniform-section densities of the ground
    structure. smooth_raw_q evaluates the smoothing on the raw design
    variables instead of the equilibrium-consistent densities (an
    alternative reading of the smoothed objective; off by default).
    """

    mu_x: float = 1.0
    mu_y: float = 1.0
    c: float = 1e-10
    tol_rel: float = 1e-8
    max_iters: int = 500
    fd_step: float = 1e-6
    start: np.ndarray | None = None
    q_lower: float = -DEFAULT_Q_BOUND
    q_upper: float = DEFAULT_Q_BOUND
    grad_tol: float = 1e-8
    n_starts: int = 3
    perturb_halfwidth: float = 10.0
    n_hops: int = 6
    rng_seed: int = 0
    smooth_raw_q: bool = False

    def validate(self):
        if self.mu_x < 0 or self.mu_y < 0:
            raise ValueError("weights must be nonnegative")
        if self.c <= 0:
            raise ValueError("smoothing constant must be positive")
        if self.tol_rel <= 0 or self.fd_step <= 0:
            raise ValueError("tolerances and fd_step must be positive")
        if self.max_iters < 1 or self.n_starts < 1:
            raise ValueError("max_iters and n_starts must be at least 1")
        if self.n_hops < 0:
            raise ValueError("n_hops must be nonnegative")
        if not self.q_lower < self.q_upper:
            raise ValueError("q_lower must be below q_upper")


@dataclass
class WSResult:
    q: np.ndarray
    f_star: float
    objectives: ObjectiveValues
    status: str  # converged | max_iters | no_progress
    iterations: int
    n_evaluations: int


def _objective_fn(g, cfg, sigma_bar, E):
    def fun(q):
        try:
            d = realize_design(g, q, sigma_bar, E)
        except (SingularEquilibrium, SingularStiffness):
            return np.inf
        q_eval = q if cfg.smooth_raw_q else d.q_tilde
        return weighted_sum(d.geometry, q_eval, cfg.mu_x, cfg.mu_y,
                            sigma_bar, E, cfg.c)
    return fun


def finite_difference_gradient(fun, x, fd_step, f0=None):
    """Central-difference gradient with per-coordinate steps
    h_i = fd_step * max(1, |x_i|); falls back to one-sided differences
    when a probe point cannot be analyzed."""
    n = x.size
    grad = np.zeros(n)
    if f0 is None:
        f0 = fun(x)
    for i in range(n):
        h = fd_step * max(1.0, abs(x[i]))
        xp = x.copy()
        xp[i] += h
        fp = fun(xp)
        xp[i] = x[i] - h
        fm = fun(xp)
        if np.isfinite(fp) and np.isfinite(fm):
            grad[i] = (fp - fm) / (2.0 * h)
        elif np.isfinite(fp):
            grad[i] = (fp - f0) / h
        elif np.isfinite(fm):
            grad[i] = (f0 - fm) / h
        else:
            grad[i] = 0.0
    return grad


def _projected_gradient(x, grad, lo, hi):
    pg = grad.copy()
    tol = 1e-12 * max(1.0, abs(hi - lo))
    pg[(x <= lo + tol) & (grad > 0)] = 0.0
    pg[(x >= hi - tol) & (grad < 0)] = 0.0
    return pg


def _descent(fun, x0, cfg, max_iters):
    """One projected-BFGS run from x0. Returns (x, f, status, iters, evals)."""
    lo, hi = cfg.q_lower, cfg.q_upper
    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    n = x.size
    n_evals = 1
    f = fun(x)
    if not np.isfinite(f):
        raise StartInfeasible("objective is not finite at the start point")

    Hinv = np.eye(n)
    grad_prev = None
    s_prev = None
    status = "max_iters"
    it = 0
    for it in range(1, max_iters + 1):
        grad = finite_difference_gradient(fun, x, cfg.fd_step, f)
        n_evals += 2 * n
        if grad_prev is not None and s_prev is not None:
            yk = grad - grad_prev
            sy = float(yk @ s_prev)
            if sy > 1e-12 * np.linalg.norm(yk) * np.linalg.norm(s_prev):
                rho = 1.0 / sy
                V = np.eye(n) - rho * np.outer(s_prev, yk)
                Hinv = V @ Hinv @ V.T + rho * np.outer(s_prev, s_prev)

        pg = _projected_gradient(x, grad, lo, hi)
        if np.max(np.abs(pg)) <= cfg.grad_tol:
            status = "converged"
            break

        d = -(Hinv @ grad)
        tol = 1e-12 * max(1.0, abs(hi - lo))
        d[(x <= lo + tol) & (d < 0)] = 0.0
        d[(x >= hi - tol) & (d > 0)] = 0.0
        if float(d @ grad) >= 0.0 or not np.any(d):
            Hinv = np.eye(n)
            d = -pg

        accepted = False
        t = 1.0
        while t >= 1e-12:
            xn = np.clip(x + t * d, lo, hi)
            step = xn - x
            pred = float(grad @ step)
            if pred < 0.0:
                fn = fun(xn)
                n_evals += 1
                if np.isfinite(fn) and fn <= f + 1e-4 * pred:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            status = "no_progress"
            break

        s_prev = xn - x
        grad_prev = grad
        decrease = f - fn
        x, f = xn, fn
        if decrease < cfg.tol_rel * max(1.0, abs(f)):
            status = "converged"
            break
    return x, f, status, it, n_evals


def _fp_polish(g, fun, x, f, sigma_bar, E, max_steps=60):
    """Greedy fully-stressed redesign steps q <- q~(q), kept only while
    they lower the objective. Pulls the iterate toward the manifold of
    self-consistent densities, where the objective equals the realized
    design's energy; the descent then restarts with fresh curvature."""
    steps = 0
    for _ in range(max_steps):
        try:
            d = realize_design(g, x, sigma_bar, E)
        except (SingularEquilibrium, SingularStiffness):
            break
        xn = d.q_tilde.copy()
        scale = np.abs(xn).max(initial=0.0)
        if scale <= 0.0:
            break
        xn[np.abs(xn) < CONSISTENCY_SNAP_REL * scale] = 0.0
        fn = fun(xn)
        if not np.isfinite(fn) or fn >= f:
            break
        x, f = xn, fn
        steps += 1
    return x, f, steps


def _minimize_one_start(g, fun, x0, cfg, sigma_bar, E):
    """Alternate projected-BFGS legs with fully-stressed polish steps
    until the iteration budget runs out or a round stops improving."""
    budget = cfg.max_iters
    x = x0
    f = None
    status = "max_iters"
    iters = 0
    evals = 0
    while budget > 0:
        x, f, status, it, ev = _descent(fun, x, cfg, budget)
        budget -= it
        iters += it
        evals += ev
        x2, f2, steps = _fp_polish(g, fun, x, f, sigma_bar, E)
        evals += steps
        if f2 >= f * (1.0 - 1e-12) and status != "max_iters":
            break
        x, f = x2, f2
    return x, f, status, iters, evals


def minimize(g: GroundStructure, config: WSConfig, sigma_bar, E=1.0) -> WSResult:
    """Minimize the smoothed weighted sum from a few starts, keep the best.

    Starts are the configured point (default: the uniform-section
    densities q0) plus perturbations q0 +/- uniform noise; max_iters is
    a per-start budget of descent iterations. The best start is then
    refined by basin hops (perturb the incumbent, re-descend, keep
    improvements) up to n_hops times, stopping after a full cycle of
    hop widths without improvement. Raises StartInfeasible when none of
    the starts can be analyzed and warns NoProgressWarning when the
    best run stalled before tolerance.
    """
    config.validate()
    start = (np.asarray(config.start, dtype=float)
             if config.start is not None else initial_force_densities(g))
    if start.size != g.m:
        raise ValueError(f"start must have length {g.m}")
    fun = _objective_fn(g, config, sigma_bar, E)

    rng = np.random.default_rng(config.rng_seed)
    starts = [start]
    while len(starts) < config.n_starts:
        delta = rng.uniform(-config.perturb_halfwidth,
                            config.perturb_halfwidth, size=g.m)
        starts.append(start + delta)
        if len(starts) < config.n_starts:
            starts.append(start - delta)

    best = None
    total_evals = 0
    total_iters = 0
    for x0 in starts[: config.n_starts]:
        try:
            x, f, status, iters, evals = _minimize_one_start(
                g, fun, x0, config, sigma_bar, E)
        except StartInfeasible:
            # symmetric problems can make the nominal q0 an exactly
            # singular equilibrium point; the perturbed starts cover it
            continue
        total_evals += evals
        total_iters += iters
        if best is None or f < best[1]:
            best = (x, f, status)
    if best is None:
        raise StartInfeasible("no start point could be analyzed")

    hop_widths = config.perturb_halfwidth * np.array([0.2, 0.5, 1.0, 2.0])
    since_improved = 0
    for hop in range(config.n_hops):
        if since_improved >= hop_widths.size:
            break
        hw = hop_widths[hop % hop_widths.size]
        xp = np.clip(best[0] + rng.uniform(-hw, hw, size=g.m),
                     config.q_lower, config.q_upper)
        try:
            x, f, status, iters, evals = _minimize_one_start(
                g, fun, xp, config, sigma_bar, E)
        except StartInfeasible:
            since_improved += 1
            continue
        total_evals += evals
        total_iters += iters
        if f < best[1]:
            best = (x, f, status)
            since_improved = 0
        else:
            since_improved += 1

    x, f, status = best
    if status == "no_progress":
        warnings.warn("weighted-sum descent stalled; returning best point "
                      "found", NoProgressWarning)
    d = realize_design(g, x, sigma_bar, E)
    vals = split_objectives(d.geometry, d.q_tilde, sigma_bar, E)
    vals.mu_x = config.mu_x
    vals.mu_y = config.mu_y
    vals.F_star = f
    vals.c = config.c
    return WSResult(q=x, f_star=f, objectives=vals, status=status,
                    iterations=total_iters, n_evaluations=total_evals)


# -- single-aspect-ratio drivers -------------------------------------------

@dataclass
class MethodResult:
    """Realized, volume-normalized outcome of a single-ratio method."""

    design: TrussDesign
    compliance: float
    structure: GroundStructure
    q: np.ndarray
    ws: WSResult


def _realize_normalized(gs, q_raw, V_target, sigma_bar, E, ws):
    d, q = realize_consistent(gs, q_raw, sigma_bar, E)
    nd, _ = normalize_volume(d, V_target)
    return MethodResult(design=nd, compliance=compliance(nd, gs),
                        structure=gs, q=q, ws=ws)


def scaling_design(g, r, V_target, sigma_bar, E=1.0, config=None) -> MethodResult:
    """Stretch the structure by r in x, minimize with unit weights."""
    if r <= 0:
        raise ValueError("aspect ratio r must be positive")
    gs = scale_structure(g, r, 1.0)
    cfg = replace(config, mu_x=1.0, mu_y=1.0) if config else WSConfig()
    ws = minimize(gs, cfg, sigma_bar, E)
    return _realize_normalized(gs, ws.q, V_target, sigma_bar, E, ws)


def scaling_method(g, r, V_target, sigma_bar, E=1.0, config=None):
    """Compliance of the scaling-method optimum at aspect ratio r."""
    return scaling_design(g, r, V_target, sigma_bar, E, config).compliance


def weighted_design(g, r, V_target, sigma_bar, E=1.0, config=None) -> MethodResult:
    """Minimize on the unscaled structure with weights (r^2, 1) and map
    the solution onto the r-scaled structure."""
    if r <= 0:
        raise ValueError("aspect ratio r must be positive")
    cfg = replace(config, mu_x=r * r, mu_y=1.0) if config \
        else WSConfig(mu_x=r * r, mu_y=1.0)
    ws = minimize(g, cfg, sigma_bar, E)
    gs = scale_structure(g, r, 1.0)
    return _realize_normalized(gs, ws.q, V_target, sigma_bar, E, ws)


def weighted_method(g, r, V_target, sigma_bar, E=1.0, config=None):
    """Compliance of the weighted-sum optimum realized at aspect ratio r."""
    return weighted_design(g, r, V_target, sigma_bar, E, config).compliance
