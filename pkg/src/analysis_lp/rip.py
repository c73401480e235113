"""Empirical Psi-RIP constants, localization factors and measurement bounds.

Both estimators are Monte-Carlo searches and therefore return *lower* bounds
on the true constants: computing either exactly is combinatorial.  Every
trial draws from its own generator seeded with ``(seed, trial)``, so results
do not depend on evaluation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFrame, InvalidBlockSize, InvalidP, InvalidRange
from .sensing import SensingOperator
from .transforms import AnalysisOperator

SKIP_NORM = 1e-12


@dataclass(frozen=True)
class RipEstimate:
    s: int
    delta_hat: float
    trials: int
    seed: int
    per_trial_ratios: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class LocalizationEstimate:
    L_hat: float
    s: int
    trials: int
    seed: int


@dataclass(frozen=True)
class MeasurementBound:
    m_required: int
    rhs: float
    inputs: dict
    variant: str
    form: str = "theorem"


def _trial_rng(seed, trial):
    return np.random.default_rng([int(seed), int(trial)])


def _sparse_trial(rng, N, s):
    support = rng.permutation(N)[:s]
    c = np.zeros(N)
    c[support] = rng.standard_normal(s)
    return c, support


def estimate_psi_rip(A: SensingOperator, Psi: AnalysisOperator, s: int,
                     trials: int = 100, seed: int = 0,
                     keep_ratios: bool = True) -> RipEstimate:
    """Lower bound ``max_t |r_t - 1|`` with ``r_t = ||A Psi^* c||^2 / ||Psi^* c||^2``.

    Supports are uniform without replacement; coefficients are Gaussian.
    Trials with ``||Psi^* c|| < 1e-12`` are skipped.
    """
    if not (1 <= s <= Psi.N):
        raise InvalidRange(f"sparsity must lie in [1, N={Psi.N}], got {s}")
    if trials < 1:
        raise InvalidRange("need at least one trial")
    ratios = []
    skipped = 0
    for t in range(trials):
        c, _ = _sparse_trial(_trial_rng(seed, t), Psi.N, s)
        v = Psi.adjoint(c)
        nv = np.linalg.norm(v)
        if nv < SKIP_NORM:
            skipped += 1
            continue
        ratios.append(float(np.linalg.norm(A.apply(v)) ** 2 / nv ** 2))
    if skipped > trials / 2:
        raise DegenerateFrame(f"{skipped} of {trials} trials had vanishing synthesis")
    ratios = np.array(ratios)
    delta = float(np.max(np.abs(ratios - 1.0)))
    return RipEstimate(s, delta, trials, seed, ratios if keep_ratios else None)


def psi_rip_profile(A, Psi, sparsities, trials=100, seed=0) -> list[RipEstimate]:
    """Estimates for increasing ``s`` made monotone by reusing smaller-``s`` trials.

    Any ``s``-sparse witness is also ``s'``-sparse for ``s' >= s``, so the
    running maximum is still a valid lower bound.
    """
    out = []
    best = 0.0
    for s in sorted(sparsities):
        est = estimate_psi_rip(A, Psi, s, trials, seed)
        best = max(best, est.delta_hat)
        out.append(RipEstimate(s, best, trials, seed, est.per_trial_ratios))
    return out


# ----------------------------------------------------------- localization

def _gram_columns(Psi: AnalysisOperator, support):
    """Columns ``Psi Psi^* e_lambda`` for ``lambda`` in ``support`` (N x s)."""
    cols = []
    for lam in support:
        e = np.zeros(Psi.N)
        e[lam] = 1.0
        cols.append(Psi.forward(Psi.adjoint(e)))
    return np.stack(cols, axis=1)


def _localization_value(G_cols, support, c_T, s):
    # ||Psi^* c||^2 = c^* G_TT c
    G_TT = G_cols[support_index(support)]
    norm2 = float(np.real(np.vdot(c_T, G_TT @ c_T)))
    if norm2 < SKIP_NORM ** 2:
        return None, None
    c_T = c_T / math.sqrt(norm2)
    return float(np.sum(np.abs(G_cols @ c_T)) / math.sqrt(s)), c_T


def support_index(support):
    return np.asarray(support)


def _local_ascent(G_cols, support, c_T, s, steps):
    """Ascent for ``max ||G_T c||_1  s.t.  c^* G_TT c = 1`` on a fixed support.

    Each step maximizes the linearization ``Re <g, c>`` over the ellipsoid,
    which never decreases a convex objective.
    """
    G_TT = G_cols[support]
    value, c_T = _localization_value(G_cols, support, c_T, s)
    for _ in range(steps):
        u = G_cols @ c_T
        sign = np.where(np.abs(u) > 0, u / np.where(u == 0, 1, np.abs(u)), 0)
        g = G_cols.conj().T @ sign
        d, *_ = np.linalg.lstsq(G_TT, g, rcond=None)
        new_value, new_c = _localization_value(G_cols, support, d, s)
        if new_value is None or new_value <= value * (1 + 1e-15):
            break
        value, c_T = new_value, new_c
    return value


def estimate_localization(Psi: AnalysisOperator, s: int, trials: int = 100,
                          seed: int = 0, ascent_steps: int = 20,
                          exhaustive: bool = False) -> LocalizationEstimate:
    """Lower bound on ``L = sup ||Psi Psi^* c||_1 / sqrt(s)`` over unit-synthesis-norm,
    ``s``-sparse ``c``.

    With ``exhaustive=True`` and ``s = 1`` every singleton is evaluated and the
    result is exact.
    """
    if not (1 <= s <= Psi.N):
        raise InvalidRange(f"sparsity must lie in [1, N={Psi.N}], got {s}")
    if exhaustive:
        if s != 1:
            raise InvalidRange("exhaustive mode is only exact for s = 1")
        best = 0.0
        for lam in range(Psi.N):
            e = np.zeros(Psi.N)
            e[lam] = 1.0
            v = Psi.adjoint(e)
            nv = np.linalg.norm(v)
            if nv < SKIP_NORM:
                continue
            best = max(best, float(np.sum(np.abs(Psi.forward(v))) / nv))
        return LocalizationEstimate(best, 1, Psi.N, seed)

    best, best_state = -1.0, None
    skipped = 0
    for t in range(trials):
        c, support = _sparse_trial(_trial_rng(seed, t), Psi.N, s)
        v = Psi.adjoint(c)
        nv = np.linalg.norm(v)
        if nv < SKIP_NORM:
            skipped += 1
            continue
        value = float(np.sum(np.abs(Psi.forward(v))) / nv / math.sqrt(s))
        if value > best:
            best, best_state = value, (support, c[support])
    if skipped > trials / 2:
        raise DegenerateFrame(f"{skipped} of {trials} trials had vanishing synthesis")
    if ascent_steps and best_state is not None:
        support, c_T = best_state
        G_cols = _gram_columns(Psi, support)
        best = max(best, _local_ascent(G_cols, support, c_T.astype(G_cols.dtype), s,
                                       ascent_steps))
    return LocalizationEstimate(best, s, trials, seed)


# ------------------------------------------------------- measurement bound

def measurement_bound(K, c1, delta, s, L, N, gamma, C=1.0, d2=None,
                      form: str = "theorem") -> dict[str, MeasurementBound]:
    """Number of rows sufficient for the Psi-RIP of order ``s`` with constant ``delta``.

    ``form="theorem"`` evaluates

        m >= C K / c1 * delta^-2 s L^2 max{log^3(s L^2) log N, log(1/gamma)}

    and, with ``d2`` given, the identifiable-dual variant with ``1/c1``
    replaced by ``d2``.  ``form="appendix"`` evaluates

        m >= C delta^-2 s (K L)^2 c1^-2 max{log^3(s (K L)^2 c1^-2) log N, log(1/gamma)}

    with the same replacement.  Returns ``{"primal_bound": ..., ["identifiable_bound": ...]}``
    plus the key ``"smaller"`` naming the tighter variant.
    """
    for name, val in (("K", K), ("c1", c1), ("s", s), ("L", L), ("N", N), ("C", C)):
        if not val > 0:
            raise InvalidRange(f"{name} must be positive, got {val}")
    if not (0 < delta < 1):
        raise InvalidRange(f"delta must lie in (0, 1), got {delta}")
    if not (0 < gamma < 1):
        raise InvalidRange(f"gamma must lie in (0, 1), got {gamma}")
    if d2 is not None and not d2 > 0:
        raise InvalidRange(f"d2 must be positive, got {d2}")
    if form not in ("theorem", "appendix"):
        raise InvalidRange(f"unknown form {form!r}")

    inputs = dict(K=K, c1=c1, d2=d2, delta=delta, s=s, L=L, N=N, gamma=gamma, C=C)

    def evaluate(inv_c1):
        if form == "theorem":
            log_arg = s * L ** 2
            prefactor = C * K * inv_c1
        else:
            log_arg = s * (K * L * inv_c1) ** 2
            prefactor = C * (K * inv_c1) ** 2
        branch = max(math.log(log_arg) ** 3 * math.log(N), math.log(1.0 / gamma))
        return prefactor * delta ** -2 * s * L ** 2 * branch

    def wrap(rhs, variant):
        # the relative slack keeps float round-up (e.g. delta^-2 for delta -> 1) from
        # adding a spurious extra row
        m = max(1, math.ceil(rhs * (1 - 1e-12)))
        return MeasurementBound(m, rhs, inputs, variant, form)

    out = {"primal_bound": wrap(evaluate(1.0 / c1), "primal_bound")}
    if d2 is not None:
        out["identifiable_bound"] = wrap(evaluate(d2), "identifiable_bound")
        smaller = min(out.values(), key=lambda b: b.rhs)
        out["smaller"] = smaller.variant
    else:
        out["smaller"] = "primal_bound"
    return out


# ----------------------------------------------------------- block tails

def block_tail_terms(c, M: int, p: float, exclude=None) -> tuple[float, float]:
    """Both sides of ``sum_{j>=2} ||c_{T_j}||_2^p <= ||c||_p^p / M^(1-p/2)``.

    ``c`` is sorted by decreasing modulus and cut into consecutive blocks
    ``T_1, T_2, ...`` of size ``M`` (the last block may be shorter).  Entries
    listed in ``exclude`` (the top-``s`` set ``T_0``) are removed first.
    """
    if not (0 < p <= 1):
        raise InvalidP(f"p must lie in (0, 1], got {p}")
    if int(M) != M or M < 1:
        raise InvalidBlockSize(f"block size must be a positive integer, got {M}")
    M = int(M)
    a = np.abs(np.asarray(c)).ravel()
    if exclude is not None:
        keep = np.ones(a.size, dtype=bool)
        keep[np.asarray(exclude, dtype=int)] = False
        a = a[keep]
    a = np.sort(a)[::-1]
    rhs = float(np.sum(a ** p)) / M ** (1 - p / 2)
    tail = a[M:]
    if tail.size == 0:
        return 0.0, rhs
    nblocks = -(-tail.size // M)
    padded = np.zeros(nblocks * M)
    padded[: tail.size] = tail
    norms = np.sqrt(np.sum(padded.reshape(nblocks, M) ** 2, axis=1))
    return float(np.sum(norms ** p)), rhs


def sorted_block_tail_check(c, M: int, p: float, exclude=None, slack: float = 1e-12) -> bool:
    """True when the block-tail inequality holds up to ``slack`` (relative)."""
    lhs, rhs = block_tail_terms(c, M, p, exclude)
    return lhs <= rhs + slack * max(1.0, rhs)
