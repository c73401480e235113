"""Weighted analysis-l1 solver and the iteratively reweighted lp loop.

The inner problem

    min_x ||W Psi x||_1   subject to   ||y - A x||_2 <= eps

is solved with a primal-dual hybrid gradient method on the saddle form
``min_x max_{|p| <= W} Re<p, Psi x> + i_C(x)``.  Every primal iterate is
projected onto ``C`` and is therefore feasible.  Optimality is certified by
a duality gap: the dual iterate is first made exactly dual feasible (its
synthesis must lie in ``range(A^*)``), and the dual objective of the
restored point is a lower bound on the optimum.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq
from scipy.sparse.linalg import LinearOperator, cg

from .errors import DimensionMismatch, Infeasible, InvalidP, InvalidRange, NotConverged
from .sensing import SensingOperator, is_conjugate_symmetric
from .stability import top_s_support
from .transforms import AnalysisOperator, canonical_dual_operator, estimate_operator_norm

SNAPSHOT_LIMIT = 16384


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the reweighted loop and its inner solver.

    ``mu=None`` selects ``1 / ||Psi A^* y||_inf``.  ``real_valued=None``
    restricts iterates to real vectors whenever the data allow it (real
    dense operator and real data, or a conjugate-symmetric Fourier mask).
    """

    p: float = 1.0
    mu: float | None = None
    nu: float = 1e-2
    epsilon: float = 0.0
    outer_iters: int = 10
    inner_max_iters: int = 5000
    inner_tol: float = 1e-4
    seed: int = 0
    warm_start: bool = False
    real_valued: bool | None = None
    check_every: int = 20

    def __post_init__(self):
        if not (0 < self.p <= 1):
            raise InvalidP(f"p must lie in (0, 1], got {self.p}")
        if self.mu is not None and not self.mu > 0:
            raise InvalidRange("mu must be positive")
        if not self.nu > 0:
            raise InvalidRange("nu must be positive")
        if self.epsilon < 0:
            raise InvalidRange("epsilon must be nonnegative")
        if self.outer_iters < 1 or self.inner_max_iters < 1 or self.check_every < 1:
            raise InvalidRange("iteration counts must be positive")
        if not self.inner_tol > 0:
            raise InvalidRange("inner_tol must be positive")


@dataclass
class InnerSolution:
    x: np.ndarray
    objective: float
    dual_objective: float
    gap: float
    residual: float
    iterations: int
    converged: bool
    dual: np.ndarray = field(repr=False, default=None)


@dataclass
class OuterRecord:
    k: int
    objective: float
    residual: float
    rel_change: float
    gap: float
    inner_iterations: int
    inner_converged: bool
    digest: str
    snapshot: np.ndarray | None = field(default=None, repr=False)
    rel_error: float | None = None


@dataclass
class ReconstructionResult:
    x_hat: np.ndarray
    per_outer: list[OuterRecord]
    converged: bool
    weights_final: np.ndarray
    mu: float
    config: SolverConfig

    @property
    def rel_changes(self) -> np.ndarray:
        return np.array([r.rel_change for r in self.per_outer])

    @property
    def rel_errors(self) -> np.ndarray:
        return np.array([np.nan if r.rel_error is None else r.rel_error for r in self.per_outer])


# ------------------------------------------------------- fidelity ball

class FidelityBall:
    """Projection onto ``{x : ||y - A x|| <= eps}`` and the matching dual algebra.

    Operators with orthonormal rows use closed forms.  Dense operators use a
    thin SVD: the projection solves ``(I + t A^*A) z = x + t A^* y`` for the
    multiplier ``t >= 0`` by a one-dimensional root search.
    """

    def __init__(self, A: SensingOperator, y, eps: float, real: bool):
        self.A = A
        self.y = np.asarray(y)
        self.eps = float(eps)
        self.real = real
        self.ortho = A.orthonormal_rows
        if not self.ortho:
            if A.matrix is None:
                raise DimensionMismatch("matrix-free sensing operators need orthonormal rows")
            U, sv, Vh = np.linalg.svd(A.matrix, full_matrices=False)
            r = int(np.sum(sv > sv[0] * 1e-12)) if sv.size else 0
            self.U, self.sv, self.Vh = U[:, :r], sv[:r], Vh[:r]
            self.b = self.U.conj().T @ self.y
            outside = float(np.linalg.norm(self.y - self.U @ self.b))
        else:
            outside = 0.0
        # distance from y to range(A)
        self.outside = outside
        tol = 1e-10 * max(1.0, float(np.linalg.norm(self.y)))
        if outside > self.eps + tol:
            raise Infeasible(f"eps={self.eps:.3g} is below the distance {outside:.3g} "
                             "from y to range(A)")
        self.eps_eff = math.sqrt(max(self.eps ** 2 - outside ** 2, 0.0))

    def _cast(self, x):
        return x.real if self.real else x

    def project(self, x):
        if self.ortho:
            r = self.A.apply(x) - self.y
            nr = float(np.linalg.norm(r))
            if nr <= self.eps:
                return x
            return self._cast(x - self.A.adjoint(r * (1 - self.eps / nr)))
        xi = self.Vh @ x
        g = self.sv * xi - self.b
        if float(np.linalg.norm(g)) <= self.eps_eff:
            return x
        s2 = self.sv ** 2
        if self.eps_eff == 0.0:
            zeta = self.b / self.sv
        else:
            g2 = np.abs(g) ** 2
            target = self.eps_eff ** 2

            def phi(t):
                return float(np.sum(g2 / (1 + t * s2) ** 2)) - target

            hi = 1.0 / float(s2.max())
            while phi(hi) > 0:
                hi *= 4.0
            t = brentq(phi, 0.0, hi, xtol=1e-14 * hi, rtol=1e-15, maxiter=500)
            zeta = (xi + t * self.sv * self.b) / (1 + t * s2)
        return self._cast(x + self.Vh.conj().T @ (zeta - xi))

    def null_projector(self, x):
        """Orthogonal projector onto ``null(A)``."""
        if self.ortho:
            return self._cast(x - self.A.adjoint(self.A.apply(x)))
        return self._cast(x - self.Vh.conj().T @ (self.Vh @ x))

    def adjoint_pinv(self, v):
        """``q`` with ``A^* q = v`` for ``v`` in ``range(A^*)``."""
        if self.ortho:
            return self.A.apply(v)
        return self.U @ ((self.Vh @ v) / self.sv)

    def residual(self, x) -> float:
        return float(np.linalg.norm(self.y - self.A.apply(x)))


def _default_real(A: SensingOperator, Psi: AnalysisOperator, y) -> bool:
    if not Psi.real:
        return False
    if A.matrix is not None:
        return not np.iscomplexobj(A.matrix) and not np.iscomplexobj(y)
    if A.mask is not None and is_conjugate_symmetric(A.mask):
        return True
    return False


# ------------------------------------------------------- inner solver

def _dual_value(Psi, ball: FidelityBall, p, W, real):
    """Lower bound on the optimum from a restored dual-feasible point."""
    u = ball.null_projector(Psi.adjoint(p))
    if float(np.linalg.norm(u)) > 0:
        dtype = np.float64 if real else np.complex128

        # P S P + (I - P) is nonsingular and agrees with P S P on range(P)
        def mv(w):
            Pw = ball.null_projector(w)
            return ball.null_projector(Psi.adjoint(Psi.forward(Pw))) + (w - Pw)

        op = LinearOperator((Psi.n, Psi.n), matvec=mv, dtype=dtype)
        w, _ = cg(op, u.astype(dtype), x0=u.astype(dtype), rtol=1e-10, atol=0.0, maxiter=200)
        p = p - Psi.forward(ball.null_projector(w))
    mod = np.abs(p)
    active = mod > 0
    t = 1.0
    if np.any(active):
        t = min(1.0, float(np.min(W[active] / mod[active])))
    q = -ball.adjoint_pinv(Psi.adjoint(t * p))
    return -float(np.real(np.vdot(q, ball.y))) - ball.eps * float(np.linalg.norm(q))


def _solve_inner(Psi: AnalysisOperator, ball: FidelityBall, W, L, max_iters, tol,
                 check_every, real, x0=None, p0=None) -> InnerSolution:
    x = ball.project(ball.A.adjoint(ball.y) if x0 is None else x0)
    x = x.real if real else x
    p = np.zeros(Psi.N, dtype=np.float64 if real else np.complex128) if p0 is None else p0.copy()
    p = p / np.maximum(1.0, np.abs(p) / W)
    tau = sigma = 0.99 / L
    alpha, eta, balance = 0.5, 0.95, 1.5
    x_bar = x
    Kx = Psi.forward(x)
    best_P, best_D, best_x = math.inf, -math.inf, x
    gap = math.inf
    it = 0
    for it in range(1, max_iters + 1):
        p_old, x_old, Kx_old = p, x, Kx
        p = p + sigma * Psi.forward(x_bar)
        p = p / np.maximum(1.0, np.abs(p) / W)
        KTp = Psi.adjoint(p)
        x = ball.project(x - tau * KTp)
        Kx = Psi.forward(x)
        x_bar = 2 * x - x_old

        # residual balancing of the two step sizes
        dx, dp = x_old - x, p_old - p
        r_primal = float(np.linalg.norm(dx / tau - (Psi.adjoint(p_old) - KTp)))
        r_dual = float(np.linalg.norm(dp / sigma - (Kx_old - Kx)))
        if r_primal > balance * r_dual:
            tau, sigma, alpha = tau / (1 - alpha), sigma * (1 - alpha), alpha * eta
        elif r_dual > balance * r_primal:
            tau, sigma, alpha = tau * (1 - alpha), sigma / (1 - alpha), alpha * eta

        if it % check_every == 0 or it == max_iters:
            P = float(np.sum(W * np.abs(Kx)))
            if P < best_P:
                best_P, best_x = P, x
            best_D = max(best_D, _dual_value(Psi, ball, p, W, real))
            gap = 0.0 if best_P <= 1e-300 else max(best_P - best_D, 0.0) / best_P
            if gap <= tol:
                break
    return InnerSolution(best_x, best_P, best_D, gap, ball.residual(best_x), it,
                         gap <= tol, p)


def _prepare(A: SensingOperator, Psi: AnalysisOperator, y, eps, real_valued):
    y = np.asarray(y)
    if y.shape != (A.m,):
        raise DimensionMismatch(f"y has shape {y.shape}, operator has m={A.m}")
    if Psi.n != A.n:
        raise DimensionMismatch(f"Psi acts on n={Psi.n}, A on n={A.n}")
    real = _default_real(A, Psi, y) if real_valued is None else bool(real_valued)
    ball = FidelityBall(A, y, eps, real)
    if Psi.norm_bound is not None:
        L = Psi.norm_bound
    else:
        L = 1.05 * estimate_operator_norm(Psi, 30)
    return ball, real, max(L, 1e-12)


def weighted_l1_analysis(A: SensingOperator, Psi: AnalysisOperator, W, y, epsilon: float,
                         max_iters: int = 5000, tol: float = 1e-6, check_every: int = 20,
                         real_valued: bool | None = None, x0=None,
                         strict: bool = False) -> InnerSolution:
    """Solve ``min ||W Psi x||_1  s.t.  ||y - A x|| <= epsilon``.

    Returns an :class:`InnerSolution` whose ``gap`` is the certified relative
    primal-dual gap.  With ``strict=True`` a gap above ``tol`` at
    ``max_iters`` raises :class:`NotConverged` (the solution is attached as
    ``exc.solution``).

    Raises
    ------
    Infeasible
        If ``epsilon`` is below the distance from ``y`` to ``range(A)``.
    """
    W = np.asarray(W, dtype=float)
    if W.shape != (Psi.N,) or not np.all(np.isfinite(W)) or np.any(W < 0):
        raise InvalidRange("weights must be finite, nonnegative and of length N")
    ball, real, L = _prepare(A, Psi, y, epsilon, real_valued)
    sol = _solve_inner(Psi, ball, W, L, max_iters, tol, check_every, real, x0=x0)
    if strict and not sol.converged:
        exc = NotConverged(f"relative gap {sol.gap:.3g} above {tol:g} after {sol.iterations}")
        exc.solution = sol
        raise exc
    return sol


# ------------------------------------------------------- outer loop

def update_weights(coeffs, mu: float, nu: float, p: float) -> np.ndarray:
    """``W = 1 / (mu |Psi x| + nu)^(1-p)``; bounded above by ``nu^(p-1)``."""
    return 1.0 / (mu * np.abs(coeffs) + nu) ** (1 - p)


def _digest(x) -> str:
    return hashlib.sha256(np.ascontiguousarray(x).tobytes()).hexdigest()[:16]


def reweighted_lp(A: SensingOperator, Psi: AnalysisOperator, y, config: SolverConfig,
                  reference=None) -> ReconstructionResult:
    """Iteratively reweighted analysis-l1 approximation of lp minimization.

    Starts from ``W = 1`` and performs exactly ``config.outer_iters`` weighted
    solves, updating the weights after each one.  The relative change of
    the first solve is measured against the backprojection ``A^* y``.
    ``reference`` (the ground truth, if known) adds relative errors to the
    per-iteration records.
    """
    ball, real, L = _prepare(A, Psi, y, config.epsilon, config.real_valued)
    y = np.asarray(y)
    x_prev = A.adjoint(y)
    x_prev = x_prev.real if real else x_prev
    c_prev = Psi.forward(x_prev)
    mu = config.mu
    if mu is None:
        peak = float(np.max(np.abs(c_prev))) if c_prev.size else 0.0
        mu = 1.0 / peak if peak > 0 else 1.0
    ref_norm = None
    if reference is not None:
        reference = np.asarray(reference).reshape(-1)
        ref_norm = max(float(np.linalg.norm(reference)), 1e-300)

    W = np.ones(Psi.N)
    records = []
    x0 = p0 = None
    all_converged = True
    x = x_prev
    for k in range(config.outer_iters):
        sol = _solve_inner(Psi, ball, W, L, config.inner_max_iters, config.inner_tol,
                           config.check_every, real, x0=x0, p0=p0)
        x = sol.x
        c = Psi.forward(x)
        nc = float(np.linalg.norm(c))
        change = float(np.linalg.norm(c - c_prev)) / nc if nc > 0 else 0.0
        all_converged &= sol.converged
        records.append(OuterRecord(
            k=k + 1,
            objective=sol.objective,
            residual=sol.residual,
            rel_change=change,
            gap=sol.gap,
            inner_iterations=sol.iterations,
            inner_converged=sol.converged,
            digest=_digest(x),
            snapshot=x.copy() if Psi.n <= SNAPSHOT_LIMIT else None,
            rel_error=None if ref_norm is None
            else float(np.linalg.norm(x - reference)) / ref_norm,
        ))
        if config.warm_start:
            x0, p0 = x, sol.dual
        W = update_weights(c, mu, config.nu, config.p)
        c_prev = c
    return ReconstructionResult(x, records, all_converged, W, mu, config)


def reweighted_lp_dual(A: SensingOperator, Psi: AnalysisOperator, y, config: SolverConfig,
                       reference=None) -> ReconstructionResult:
    """:func:`reweighted_lp` with the canonical-dual analysis operator."""
    return reweighted_lp(A, canonical_dual_operator(Psi), y, config, reference)


def best_s_term(coefficients, s: int) -> np.ndarray:
    """Keep the ``s`` largest-modulus entries (ties to the lowest index)."""
    c = np.asarray(coefficients)
    if not (0 <= s <= c.size):
        raise InvalidRange(f"s must lie in [0, {c.size}], got {s}")
    out = np.zeros_like(c)
    if s:
        keep = top_s_support(c, s)
        out[keep] = c[keep]
    return out


def with_overrides(config: SolverConfig, **changes) -> SolverConfig:
    """Copy of ``config`` with the non-``None`` entries of ``changes`` applied."""
    return replace(config, **{k: v for k, v in changes.items() if v is not None})
