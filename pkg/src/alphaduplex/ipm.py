"""Log-barrier interior-point solver for the joint power/overlap problem.

The constrained maximization (utility over per-cell user powers, BS powers,
and overlap fractions, subject to box and budget constraints) is handled by
the classic barrier scheme: minimize

    phi(x) = -[ U(x) + (1/tau) * sum_i log(-f_i(x)) ]

over strictly feasible x, for a geometrically increasing tau, until the gap
proxy m/tau falls below tolerance.  Inner minimizations use damped Newton
steps with an Armijo backtracking line search and a fraction-to-boundary
rule that keeps every iterate strictly inside the polytope.

Two numerical choices matter for robustness here.  First, the solver works
on scaled variables (user powers in units of p_u_max, BS powers in units of
p_b_tot/N) and on the utility normalized by its magnitude at the start
point; raw utilities are of order 1e9 bits/s and would otherwise make the
fixed tolerances meaningless.  Second, the Newton matrix combines a
finite-difference Hessian of the *utility* gradient with the exact Hessian
of the barrier term: differencing across the barrier pole near a boundary
would corrupt the curvature exactly where the solver spends its final
iterations.  The constraints are affine, so the barrier Hessian is exact
and free.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import (
    InfeasiblePointError,
    InfeasibleSpecError,
    InvalidParameterError,
    StalledLineSearchError,
    UtilityDomainError,
)
from .links import DecisionVector, LinkEvaluator, LinkMetrics, UtilityKind
from .overlap import PulseOverlapProfile
from .scenario import NetworkRealization, SystemParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    tau0: float = 1.0
    mu: float = 10.0
    eps_outer: float = 1e-6          # stop when m/tau drops below this
    eps_inner: float = 1e-8          # Newton decrement threshold
    max_inner: int = 100
    armijo_c: float = 1e-4
    backtrack_rho: float = 0.5
    boundary_frac: float = 0.99      # fraction-to-boundary margin
    fd_step: float = 1e-6            # Hessian differencing step, scaled coords
    t_min: float = 1e-12
    collect_trace: bool = False


@dataclass
class BarrierProblem:
    """A generic smooth maximization over an affine polytope A x <= b.

    ``utility`` and ``gradient`` act on points in the problem's own
    coordinates; ``gradient_batch`` (optional) takes an (M, dim) stack of
    points.  Network problems are adapted onto this shape by ProblemSpec.
    """

    dim: int
    utility: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    A: np.ndarray
    b: np.ndarray
    gradient_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float).reshape(-1, self.dim)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        if len(self.A) != len(self.b):
            raise InvalidParameterError("A and b row counts differ")

    @property
    def m(self) -> int:
        return len(self.b)


@dataclass(frozen=True)
class ProblemSpec:
    """The network optimization instance handed to the solver.

    ``fixed_alpha`` pins every cell's overlap fraction and removes the alpha
    block from the decision space (half/full duplex benchmarks); the
    constraint count drops from 5N+1 to 3N+1 accordingly.
    """

    params: SystemParams
    utility_kind: UtilityKind
    net: NetworkRealization
    profile: PulseOverlapProfile
    fixed_alpha: Optional[float] = None

    @property
    def n_cells(self) -> int:
        return self.params.N

    @property
    def dim(self) -> int:
        return 2 * self.n_cells if self.fixed_alpha is not None else 3 * self.n_cells

    @property
    def m(self) -> int:
        n = self.n_cells
        return 3 * n + 1 if self.fixed_alpha is not None else 5 * n + 1

    def constraint_set(self) -> tuple[np.ndarray, np.ndarray]:
        """Affine rows (A, b) with f_i(x) = A x - b <= 0, in raw units.

        Order: user-power lower bounds, user-power caps, BS-power floors,
        the single BS budget row, then (free-alpha problems only) overlap
        lower and upper bounds.
        """
        n = self.n_cells
        p = self.params
        eye = np.eye(n)
        zero = np.zeros((n, n))
        rows = [
            np.hstack([-eye, zero]),
            np.hstack([eye, zero]),
            np.hstack([zero, -eye]),
            np.hstack([np.zeros((1, n)), np.ones((1, n))]),
        ]
        rhs = [
            np.zeros(n),
            np.full(n, p.p_u_max),
            np.full(n, -p.p_b_min),
            np.array([p.p_b_tot]),
        ]
        if self.fixed_alpha is None:
            rows = [np.hstack([r, np.zeros((len(r), n))]) for r in rows]
            rows.append(np.hstack([zero, zero, -eye]))
            rows.append(np.hstack([zero, zero, eye]))
            rhs.append(np.full(n, -p.alpha_min))
            rhs.append(np.ones(n))
        return np.vstack(rows), np.concatenate(rhs)

    def scale(self) -> np.ndarray:
        """Per-coordinate scale: p_u in p_u_max, p_b in p_b_tot/N, alpha raw."""
        n = self.n_cells
        p = self.params
        blocks = [np.full(n, p.p_u_max), np.full(n, p.p_b_tot / n)]
        if self.fixed_alpha is None:
            blocks.append(np.ones(n))
        return np.concatenate(blocks)

    def pack(self, x: DecisionVector) -> np.ndarray:
        """DecisionVector to scaled solver coordinates."""
        n = self.n_cells
        raw = (
            np.concatenate([x.p_u, x.p_b])
            if self.fixed_alpha is not None
            else x.stacked()
        )
        return raw / self.scale()

    def unpack(self, z: np.ndarray) -> DecisionVector:
        n = self.n_cells
        raw = np.asarray(z, dtype=float) * self.scale()
        if self.fixed_alpha is not None:
            return DecisionVector(
                p_u=raw[:n].copy(),
                p_b=raw[n:].copy(),
                alpha=np.full(n, float(self.fixed_alpha)),
            )
        return DecisionVector.from_stacked(raw, n)

    def constraint_values(self, x: DecisionVector) -> np.ndarray:
        """f_i(x) = A x - b for this problem's own constraint set."""
        A, b = self.constraint_set()
        raw = (
            np.concatenate([x.p_u, x.p_b])
            if self.fixed_alpha is not None
            else x.stacked()
        )
        return A @ raw - b


@dataclass
class OptimizationResult:
    x_opt: object
    utility: float
    metrics: Optional[LinkMetrics]
    outer_iterations: int
    total_newton_steps: int
    final_gap_proxy: float
    converged: bool
    starts_used: int = 1
    trace: Optional[list] = None
    diagnostics: list = field(default_factory=list)


class _Engine:
    """Scaled view of a problem: coordinates z, constraints A z <= b."""

    def __init__(self, problem):
        if isinstance(problem, ProblemSpec):
            spec = problem
            ev = LinkEvaluator(spec.net, spec.profile)
            n = spec.n_cells
            S = spec.scale()
            A_raw, b = spec.constraint_set()
            fixed = spec.fixed_alpha
            kind = spec.utility_kind
            if fixed is not None:
                alpha_row = np.full(n, float(fixed))

                def split(Z):
                    raw = Z * S
                    al = np.broadcast_to(alpha_row, raw[:, :n].shape)
                    return raw[:, :n], raw[:, n:], al

                def util(z):
                    pu, pb, al = split(z[None, :])
                    return float(ev.utility_batch(pu, pb, al, kind)[0])

                def grad_batch(Z):
                    pu, pb, al = split(np.atleast_2d(Z))
                    g = ev.gradient_batch(pu, pb, al, kind, include_alpha=False)
                    return g * S[None, :]

            else:

                def split(Z):
                    raw = Z * S
                    return raw[:, :n], raw[:, n : 2 * n], raw[:, 2 * n :]

                def util(z):
                    pu, pb, al = split(z[None, :])
                    return float(ev.utility_batch(pu, pb, al, kind)[0])

                def grad_batch(Z):
                    pu, pb, al = split(np.atleast_2d(Z))
                    g = ev.gradient_batch(pu, pb, al, kind, include_alpha=True)
                    return g * S[None, :]

            self.spec = spec
            self.dim = spec.dim
            self.A = A_raw * S[None, :]
            self.b = b
            self.utility = util
            self.grad_batch = grad_batch
            self.S = S
        elif isinstance(problem, BarrierProblem):
            bp = problem
            self.spec = None
            self.dim = bp.dim
            self.A = bp.A
            self.b = bp.b
            self.utility = lambda z: float(bp.utility(z))
            if bp.gradient_batch is not None:
                self.grad_batch = lambda Z: np.asarray(bp.gradient_batch(np.atleast_2d(Z)))
            else:
                self.grad_batch = lambda Z: np.vstack(
                    [bp.gradient(row) for row in np.atleast_2d(Z)]
                )
            self.S = np.ones(bp.dim)
        else:
            raise InvalidParameterError(
                f"expected ProblemSpec or BarrierProblem, got {type(problem).__name__}"
            )
        self.m = len(self.b)

    def grad(self, z: np.ndarray) -> np.ndarray:
        return self.grad_batch(z[None, :])[0]

    def margins(self, z: np.ndarray) -> np.ndarray:
        """b - A z; strictly positive on the interior."""
        return self.b - self.A @ z

    def pack_point(self, x) -> np.ndarray:
        if self.spec is not None and isinstance(x, DecisionVector):
            return self.spec.pack(x)
        return np.asarray(x, dtype=float).reshape(self.dim)

    def unpack_point(self, z: np.ndarray):
        if self.spec is not None:
            return self.spec.unpack(z)
        return np.asarray(z, dtype=float).copy()

    def phi(self, z: np.ndarray, tau: float, sigma: float) -> tuple[float, float]:
        """(barrier objective with normalized utility, raw utility).

        Returns +inf (not an exception) off the interior or where the
        utility is undefined, which is what the line search wants.
        """
        marg = self.margins(z)
        if np.any(marg <= 0):
            return np.inf, np.nan
        u = self.utility(z)
        if not np.isfinite(u):
            return np.inf, u
        val = -(u / sigma + np.sum(np.log(marg)) / tau)
        return float(val), u

    def grad_phi(self, z: np.ndarray, tau: float, sigma: float) -> np.ndarray:
        marg = self.margins(z)
        if np.any(marg <= 0):
            raise InfeasiblePointError("barrier gradient requested off the interior")
        return -self.grad(z) / sigma + (self.A.T @ (1.0 / marg)) / tau

    def barrier_hessian(self, z: np.ndarray, tau: float) -> np.ndarray:
        marg = self.margins(z)
        w = 1.0 / (marg * marg)
        return (self.A.T * w[None, :]) @ self.A / tau

    def fd_utility_hessian(self, z: np.ndarray, fd_step: float) -> np.ndarray:
        """Central finite differences of the analytic utility gradient."""
        d = self.dim
        h = fd_step * (1.0 + np.abs(z))
        pts = np.repeat(z[None, :], 2 * d, axis=0)
        idx = np.arange(d)
        pts[2 * idx, idx] += h
        pts[2 * idx + 1, idx] -= h
        for attempt in range(4):
            try:
                g = self.grad_batch(pts)
                break
            except UtilityDomainError:
                # A probe crossed into undefined territory; shrink the stencil.
                h = h / 16.0
                pts = np.repeat(z[None, :], 2 * d, axis=0)
                pts[2 * idx, idx] += h
                pts[2 * idx + 1, idx] -= h
        else:
            raise
        cols = (g[0::2] - g[1::2]) / (2.0 * h[:, None])
        H = cols.T
        return 0.5 * (H + H.T)


def _pd_direction(H: np.ndarray, grad: np.ndarray):
    """Newton direction from H shifted to positive definiteness.

    Returns (direction, decrement, shift) or None when no shift in the
    ladder makes the factorization succeed (caller falls back to steepest
    descent).
    """
    if not np.all(np.isfinite(H)):
        return None
    scale = max(float(np.max(np.abs(np.diag(H)))), 1e-12)
    for lam in (0.0, 1e-8, 1e-6, 1e-4, 1e-2, 1.0, 1e2):
        shift = lam * scale
        try:
            f = cho_factor(H + shift * np.eye(len(H)), lower=True, check_finite=False)
            d = -cho_solve(f, grad, check_finite=False)
        except (LinAlgError, ValueError):
            continue
        if not np.all(np.isfinite(d)):
            continue
        dec = float(-grad @ d)
        if dec >= 0:
            return d, dec, shift
    return None


def barrier_objective(x, tau: float, problem) -> float:
    """-[U(x) + (1/tau) sum log(-f_i(x))], the minimized quantity, raw units."""
    if not tau > 0:
        raise InvalidParameterError(f"tau must be positive, got {tau}")
    eng = _Engine(problem)
    z = eng.pack_point(x)
    marg = eng.margins(z)
    if np.any(marg <= 0):
        raise InfeasiblePointError(
            f"point violates {int(np.sum(marg <= 0))} constraint(s); "
            "the barrier needs a strictly feasible point"
        )
    u = eng.utility(z)
    if not np.isfinite(u):
        raise UtilityDomainError("utility undefined at the given point")
    return float(-(u + np.sum(np.log(marg)) / tau))


def newton_step(x, tau: float, problem, opts: SolverOptions = None, sigma: float = 1.0):
    """Newton direction and decrement for the barrier objective at x.

    The direction is returned in the problem's raw coordinates; the
    decrement grad^T H^{-1} grad is coordinate-invariant.
    """
    opts = opts or SolverOptions()
    eng = _Engine(problem)
    z = eng.pack_point(x)
    g = eng.grad_phi(z, tau, sigma)
    H = eng.fd_utility_hessian(z, opts.fd_step)
    Hfull = -H / sigma + eng.barrier_hessian(z, tau)
    out = _pd_direction(Hfull, g)
    if out is None:
        logger.warning("Newton matrix not factorizable after max shift; steepest descent")
        d = -g
        dec = float(g @ g)
    else:
        d, dec, _ = out
    return d * eng.S, dec


def backtracking_line_search(x, direction, tau: float, problem, opts: SolverOptions = None, sigma: float = 1.0) -> float:
    """Armijo backtracking with a 0.99 fraction-to-boundary cap; returns t."""
    opts = opts or SolverOptions()
    eng = _Engine(problem)
    z = eng.pack_point(x)
    d = np.asarray(direction, dtype=float).reshape(eng.dim) / eng.S
    g = eng.grad_phi(z, tau, sigma)
    return _search(eng, z, d, g, tau, sigma, opts)


def _search(eng: _Engine, z, d, grad_phi, tau, sigma, opts: SolverOptions) -> float:
    slope = float(grad_phi @ d)
    Ad = eng.A @ d
    marg = eng.margins(z)
    pos = Ad > 0
    t_cross = float(np.min(marg[pos] / Ad[pos])) if np.any(pos) else np.inf
    t = min(1.0, opts.boundary_frac * t_cross)
    phi0, _ = eng.phi(z, tau, sigma)
    while t >= opts.t_min:
        trial, _ = eng.phi(z + t * d, tau, sigma)
        if np.isfinite(trial) and trial <= phi0 + opts.armijo_c * t * slope:
            return t
        t *= opts.backtrack_rho
    raise StalledLineSearchError(
        f"line search stalled below t={opts.t_min:g} (slope {slope:.3e})"
    )


def find_feasible_start(problem) -> DecisionVector:
    """Strictly feasible start: box midpoints, BS powers between floor and even split."""
    if not isinstance(problem, ProblemSpec):
        raise InvalidParameterError("find_feasible_start needs a network ProblemSpec")
    p = problem.params
    n = problem.n_cells
    if p.p_b_min * n >= p.p_b_tot:
        raise InfeasibleSpecError(
            f"N*p_b_min = {p.p_b_min * n:g} W must be below p_b_tot = {p.p_b_tot:g} W"
        )
    if not p.p_u_max > 0:
        raise InfeasibleSpecError("p_u_max must be positive")
    if problem.fixed_alpha is None and not p.alpha_min < 1.0:
        raise InfeasibleSpecError("alpha_min must be below 1 for a free-alpha problem")
    alpha = (
        np.full(n, float(problem.fixed_alpha))
        if problem.fixed_alpha is not None
        else np.full(n, 0.5 * (p.alpha_min + 1.0))
    )
    return DecisionVector(
        p_u=np.full(n, 0.5 * p.p_u_max),
        p_b=np.full(n, p.p_b_min + 0.5 * (p.p_b_tot / n - p.p_b_min)),
        alpha=alpha,
    )


def clamp_to_interior(x: DecisionVector, problem: ProblemSpec, margin: float = 1e-9) -> DecisionVector:
    """Pull a (possibly boundary) point strictly inside the constraint box."""
    p = problem.params
    n = problem.n_cells
    pu = np.clip(x.p_u, margin * p.p_u_max, (1.0 - margin) * p.p_u_max)
    span = p.p_b_tot - n * p.p_b_min
    floor = p.p_b_min + margin * span / n
    pb = np.maximum(x.p_b, floor)
    cap = p.p_b_tot - margin * span
    excess = pb.sum() - cap
    if excess > 0:
        # Shrink toward the floor so the budget row gets slack too.
        kappa = (cap - n * p.p_b_min) / (pb.sum() - n * p.p_b_min)
        pb = p.p_b_min + (pb - p.p_b_min) * kappa
    if problem.fixed_alpha is not None:
        alpha = np.full(n, float(problem.fixed_alpha))
    else:
        lo = p.alpha_min + margin * (1.0 - p.alpha_min)
        hi = 1.0 - margin * (1.0 - p.alpha_min)
        alpha = np.clip(x.alpha, lo, hi)
    return DecisionVector(p_u=pu, p_b=pb, alpha=alpha)


def is_strictly_feasible(x, problem) -> bool:
    eng = _Engine(problem)
    try:
        z = eng.pack_point(x)
    except (InvalidParameterError, ValueError):
        return False
    return bool(np.all(eng.margins(z) > 0))


def solve(problem, x0=None, opts: SolverOptions = None) -> OptimizationResult:
    """Barrier outer loop; returns the best strictly interior iterate seen.

    The recorded utility is re-evaluated at the returned point, and the
    best-so-far record is monotone across outer iterations by construction.
    Line-search stalls terminate the inner loop and mark the result as not
    converged instead of raising.
    """
    opts = opts or SolverOptions()
    eng = _Engine(problem)
    if x0 is None:
        x0 = find_feasible_start(problem)
    z = eng.pack_point(x0)
    if np.any(eng.margins(z) <= 0):
        raise InfeasiblePointError("x0 must be strictly feasible")

    u0 = eng.utility(z)
    if not np.isfinite(u0):
        raise UtilityDomainError("utility undefined at the start point")
    sigma = max(1.0, abs(u0))

    best_z = z.copy()
    best_u = u0
    diagnostics: list[str] = []
    trace = [] if opts.collect_trace else None

    tau = opts.tau0
    outer = 0
    total_steps = 0
    converged = False
    while True:
        steps = 0
        stalled = False
        reached = False
        for _ in range(opts.max_inner):
            g = eng.grad_phi(z, tau, sigma)
            H = -eng.fd_utility_hessian(z, opts.fd_step) / sigma + eng.barrier_hessian(z, tau)
            out = _pd_direction(H, g)
            if out is None:
                diagnostics.append(f"tau={tau:g}: fallback to steepest descent")
                d = -g
                dec = float(g @ g)
            else:
                d, dec, _ = out
            if dec <= opts.eps_inner:
                reached = True
                break
            try:
                t = _search(eng, z, d, g, tau, sigma, opts)
            except StalledLineSearchError:
                # The quasi-Newton direction can go bad from finite-difference
                # noise; the gradient direction is descent by construction, so
                # only a stall along both counts as a real stall.
                try:
                    d = -g
                    t = _search(eng, z, d, g, tau, sigma, opts)
                except StalledLineSearchError as exc:
                    diagnostics.append(f"tau={tau:g}: {exc}")
                    stalled = True
                    break
            z = z + t * d
            steps += 1
            u = eng.utility(z)
            if np.isfinite(u) and u > best_u:
                best_u = u
                best_z = z.copy()
        total_steps += steps
        outer += 1
        gap = eng.m / tau
        if trace is not None:
            trace.append(
                {
                    "tau": tau,
                    "inner_steps": steps,
                    "utility": eng.utility(z),
                    "best_utility": best_u,
                    "gap_proxy": gap,
                }
            )
        if stalled:
            # Contract: a stalled inner loop returns the best iterate so far
            # with converged left False.
            break
        if not reached:
            diagnostics.append(
                f"tau={tau:g}: inner budget exhausted above decrement tolerance"
            )
        if gap < opts.eps_outer or eng.m == 0:
            # Converged means the target gap was reached and the final stage
            # was actually minimized to the inner tolerance.
            converged = reached
            break
        tau *= opts.mu

    final_gap = eng.m / tau if eng.m else 0.0
    x_opt = eng.unpack_point(best_z)
    utility_val = eng.utility(best_z)
    metrics = None
    if eng.spec is not None:
        ev = LinkEvaluator(eng.spec.net, eng.spec.profile)
        metrics = ev.metrics(x_opt)
    return OptimizationResult(
        x_opt=x_opt,
        utility=float(utility_val),
        metrics=metrics,
        outer_iterations=outer,
        total_newton_steps=total_steps,
        final_gap_proxy=float(final_gap),
        converged=converged,
        starts_used=1,
        trace=trace,
        diagnostics=diagnostics,
    )


def _random_interior(problem: ProblemSpec, rng: np.random.Generator) -> DecisionVector:
    """Uniform draw inside the box, BS powers inside the even-split region."""
    p = problem.params
    n = problem.n_cells
    pu = p.p_u_max * rng.uniform(0.05, 0.95, size=n)
    pb = p.p_b_min + (p.p_b_tot / n - p.p_b_min) * rng.uniform(0.05, 0.95, size=n)
    if problem.fixed_alpha is not None:
        alpha = np.full(n, float(problem.fixed_alpha))
    else:
        alpha = p.alpha_min + (1.0 - p.alpha_min) * rng.uniform(0.05, 0.95, size=n)
    return DecisionVector(p_u=pu, p_b=pb, alpha=alpha)


def multi_start_solve(
    problem: ProblemSpec,
    n_starts: int,
    seed,
    extra_starts: Sequence[DecisionVector] = (),
    opts: SolverOptions = None,
) -> OptimizationResult:
    """Best-of-starts wrapper around solve.

    Starts are the deterministic feasible start, then (n_starts - 1) random
    interior points drawn from ``seed``, then any ``extra_starts`` (clamped
    strictly inside).  Deterministic for a fixed seed.
    """
    if n_starts < 1:
        raise InvalidParameterError(f"n_starts must be >= 1, got {n_starts}")
    rng = np.random.default_rng(seed)
    starts = [find_feasible_start(problem)]
    for _ in range(n_starts - 1):
        starts.append(_random_interior(problem, rng))
    for x in extra_starts:
        starts.append(clamp_to_interior(x, problem))

    best = None
    total_steps = 0
    for x0 in starts:
        res = solve(problem, x0=x0, opts=opts)
        total_steps += res.total_newton_steps
        if best is None or res.utility > best.utility:
            best = res
    best.starts_used = len(starts)
    best.total_newton_steps = total_steps
    return best
