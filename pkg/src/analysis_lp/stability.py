"""Stability constants for analysis-based lp recovery.

The three families of constants (general frame with identifiable dual,
Parseval frame, canonical-dual analysis) all lead to an estimate

    Gamma1 ||z||^p - Gamma2 eta <= (2 eps)^p,   eta = 2 tail / s^(1 - p/2),

with ``z = x - x*`` and ``tail = ||Psi x - (Psi x)_s||_p^p``.  Solving for
``||z||^p`` gives ``C1 eps^p + C2 tail / s^(1-p/2)`` with ``C1 = 2^p / Gamma1``
and ``C2 = 2 Gamma2 / Gamma1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidP, InvalidRange, NonPositiveConstant
from .transforms import AnalysisOperator

VARIANTS = ("primal", "parseval", "dual")


@dataclass(frozen=True)
class RipThresholds:
    """Hypotheses on the Psi-RIP constant under which the bounds are stated.

    The general theorems ask for ``delta_nu < general``; the Parseval
    corollary asks for ``delta_{7s} < parseval``.  Both are kept so that
    either reading can be selected.
    """

    general: float = 0.5
    parseval: float = 0.6

    def admits(self, variant: str, delta: float) -> bool:
        limit = self.parseval if variant == "parseval" else self.general
        return delta < limit


@dataclass(frozen=True)
class StabilityConstants:
    p: float
    gamma1: float
    gamma2: float
    rho: float
    M: float
    s: int
    delta_sM: float
    delta_M: float
    c1: float
    c2: float
    d1: float
    d2: float
    Gamma1: float
    Gamma2: float
    C1: float
    C2: float
    variant: str
    # 1/sqrt(c1) when the frame was rescaled to c1 = 1, else 1
    frame_scale: float = 1.0
    notes: dict = field(default_factory=dict, compare=False)


def _check_common(p, delta_sM, delta_M, rho, gamma1, gamma2):
    if not (0 < p <= 1):
        raise InvalidP(f"p must lie in (0, 1], got {p}")
    for name, val in (("delta_sM", delta_sM), ("delta_M", delta_M)):
        if not (0 <= val < 1):
            raise InvalidRange(f"{name} must lie in [0, 1), got {val}")
    for name, val in (("rho", rho), ("gamma1", gamma1), ("gamma2", gamma2)):
        if not val > 0:
            raise InvalidRange(f"{name} must be positive, got {val}")


def _finish(G1_radicand, G1_sub, G2_radicand, G2_sub, strict, terms):
    """Evaluate ``sqrt(radicand) - sqrt(sub)`` for both constants.

    A negative radicand yields ``nan`` (the displayed formula is undefined);
    with ``strict`` any non-positive result raises.
    """
    def one(rad, sub):
        return math.sqrt(rad) - math.sqrt(sub) if rad >= 0 else math.nan

    G1 = one(G1_radicand, G1_sub)
    G2 = one(G2_radicand, G2_sub)
    if strict:
        for which, val, rad, sub in (("Gamma1", G1, G1_radicand, G1_sub),
                                     ("Gamma2", G2, G2_radicand, G2_sub)):
            if not val > 0:
                raise NonPositiveConstant(which, {**terms, "radicand": rad,
                                                  "subtracted": sub, "value": val})
    return G1, G2


def gamma_primal(p, c1, c2, d1, d2, delta_sM, delta_M, rho, gamma1, gamma2,
                 strict: bool = True) -> tuple[float, float]:
    """Constants for a general frame with an identifiable dual.

    Evaluates

        Gamma1 = sqrt(2 g1 c1^(p/2) (1-d_sM)^p (c1^p d1^(2p)
                      - (g1 / (2 c1^(p/2)) + rho^(2-p) c2^p d2^(2p) (1+g2))))
                 - sqrt((c2 d2^2 (1+d_M))^p rho^(2-p))
        Gamma2 = sqrt(2 g1 c1^(p/2) (1-d_sM)^p rho^(2-p) (1/g2 + 1))
                 - sqrt((c2 d2^2 (1+d_M))^p rho^(2-p))
    """
    _check_common(p, delta_sM, delta_M, rho, gamma1, gamma2)
    for name, val in (("c1", c1), ("c2", c2), ("d1", d1), ("d2", d2)):
        if not val > 0:
            raise InvalidRange(f"{name} must be positive, got {val}")
    r = rho ** (2 - p)
    bracket = c1 ** p * d1 ** (2 * p) - (gamma1 / (2 * c1 ** (p / 2))
                                         + r * c2 ** p * d2 ** (2 * p) * (1 + gamma2))
    lead = 2 * gamma1 * c1 ** (p / 2) * (1 - delta_sM) ** p
    sub = (c2 * d2 ** 2 * (1 + delta_M)) ** p * r
    return _finish(lead * bracket, sub, lead * r * (1 / gamma2 + 1), sub, strict,
                   {"bracket": bracket, "p": p, "rho": rho})


def gamma_parseval(p, delta_sM, delta_M, rho, gamma1, gamma2,
                   strict: bool = True) -> tuple[float, float]:
    """Constants for a Parseval frame.

    Evaluates

        Gamma1 = sqrt(2 g1 (1-d_sM)^p (1 - (g1/2 + rho^(2-p) (1+g2))))
                 - sqrt((1+d_M)^p rho^(2-p))
        Gamma2 = sqrt(2 g1 (1-d_sM)^p rho^(2-p) (1/g2 + 1)) - sqrt((1+d_M)^p rho^(2-p))
    """
    _check_common(p, delta_sM, delta_M, rho, gamma1, gamma2)
    r = rho ** (2 - p)
    bracket = 1 - (gamma1 / 2 + r * (1 + gamma2))
    lead = 2 * gamma1 * (1 - delta_sM) ** p
    sub = (1 + delta_M) ** p * r
    return _finish(lead * bracket, sub, lead * r * (1 / gamma2 + 1), sub, strict,
                   {"bracket": bracket, "p": p, "rho": rho})


def gamma_dual(p, c1, c2, delta_sM, delta_M, rho, gamma1, gamma2,
               strict: bool = True) -> tuple[float, float]:
    """Constants for analysis with the canonical dual frame.

    Evaluates

        Gamma1 = sqrt(2 g1 / c2^p (1 - c2^p g1 / 2 - rho^(2-p) (1+g2) / c1^(2p)) (1-d_sM)^p)
                 - sqrt((1+d_M)^p (c2/c1)^p rho^(2-p))
        Gamma2 = sqrt((1-d_sM)^p rho^(2-p) (1 + 1/g2) 2 g1 / c1^p)
                 - sqrt(rho^(2-p) (c2/c1)^p (1+d_M)^p)
    """
    _check_common(p, delta_sM, delta_M, rho, gamma1, gamma2)
    for name, val in (("c1", c1), ("c2", c2)):
        if not val > 0:
            raise InvalidRange(f"{name} must be positive, got {val}")
    r = rho ** (2 - p)
    bracket = 1 - c2 ** p * gamma1 / 2 - r * (1 + gamma2) / c1 ** (2 * p)
    G1_rad = 2 * gamma1 / c2 ** p * bracket * (1 - delta_sM) ** p
    sub = (1 + delta_M) ** p * (c2 / c1) ** p * r
    G2_rad = (1 - delta_sM) ** p * r * (1 + 1 / gamma2) * 2 * gamma1 / c1 ** p
    return _finish(G1_rad, sub, G2_rad, sub, strict,
                   {"bracket": bracket, "p": p, "rho": rho})


# ----------------------------------------------------- parameter choices

def primal_parameters(p, s, c1=1.0, c2=1.0, d1=1.0, d2=1.0, exponent: str = "verbatim"):
    """``(gamma1, M)`` for the general case.

    ``gamma1 = c1^(3p/2) d1^(2p)`` and

        M = s 2 (1+2^-p)^e c2^(p/(p-2)) d2^(2p/(p-2)) / c1^(p/(p-2))

    with ``e = 1/(p-2)`` (``exponent="verbatim"``) or ``e = 1/(2-p)``
    (``exponent="reciprocal"``).  ``M`` is returned unrounded.
    """
    if exponent not in ("verbatim", "reciprocal"):
        raise InvalidRange(f"unknown exponent choice {exponent!r}")
    e = 1 / (p - 2) if exponent == "verbatim" else 1 / (2 - p)
    gamma1 = c1 ** (1.5 * p) * d1 ** (2 * p)
    M = s * 2 * (1 + 2.0 ** -p) ** e * c2 ** (p / (p - 2)) * d2 ** (2 * p / (p - 2)) \
        / c1 ** (p / (p - 2))
    return gamma1, M


def parseval_parameters(p, s):
    """``gamma1 = 1`` and ``M = 6 s``."""
    return 1.0, 6.0 * s


def dual_parameters(p, s, c1=1.0, gamma1_factor: float = 1.0):
    """``gamma1 = gamma1_factor c1^-p`` and ``M = s (2 / c1^(2p))^(1/(2-p))``."""
    if not (0 < gamma1_factor <= 1):
        raise InvalidRange("gamma1_factor must lie in (0, 1]")
    return gamma1_factor * c1 ** -p, s * (2 / c1 ** (2 * p)) ** (1 / (2 - p))


# -------------------------------------------------------- constants

def stability_constants(variant: str, p: float, s: int, M: float, *, gamma1: float,
                        gamma2: float = 1e-4, delta_sM: float = 0.0,
                        delta_M: float | None = None, c1: float = 1.0, c2: float = 1.0,
                        d1: float = 1.0, d2: float = 1.0,
                        rescale: bool = True) -> StabilityConstants:
    """Assemble Gamma1, Gamma2, C1, C2 for one parameter choice.

    ``rho = s / M``.  ``delta_M`` defaults to ``delta_sM`` (the RIP constant is
    nondecreasing in the order).  For the primal variant with ``c1 < 1`` and
    ``rescale=True`` the frame is scaled by ``t = 1/sqrt(c1)``: this maps
    ``(c1, c2, d1, d2)`` to ``(1, c2/c1, c1 d1, c1 d2)``, leaves ``C1``
    unchanged and multiplies ``C2`` by ``t^-p`` since the tail of ``t Psi x``
    is ``t^p`` times the original one.
    """
    if variant not in VARIANTS:
        raise InvalidRange(f"variant must be one of {VARIANTS}, got {variant!r}")
    if s < 1 or not M > 0:
        raise InvalidRange("need s >= 1 and M > 0")
    if delta_M is None:
        delta_M = delta_sM
    rho = s / M
    scale = 1.0
    notes = {"C1": "2^p / Gamma1", "C2": "2 Gamma2 / Gamma1"}
    if variant == "primal":
        cc1, cc2, dd1, dd2 = c1, c2, d1, d2
        if rescale and c1 < 1:
            scale = 1 / math.sqrt(c1)
            cc1, cc2, dd1, dd2 = 1.0, c2 / c1, d1 * c1, d2 * c1
            notes["rescaled"] = f"frame scaled by {scale:.6g}"
        G1, G2 = gamma_primal(p, cc1, cc2, dd1, dd2, delta_sM, delta_M, rho, gamma1, gamma2)
    elif variant == "parseval":
        G1, G2 = gamma_parseval(p, delta_sM, delta_M, rho, gamma1, gamma2)
    else:
        G1, G2 = gamma_dual(p, c1, c2, delta_sM, delta_M, rho, gamma1, gamma2)
    C1 = 2 ** p / G1
    C2 = 2 * G2 / G1 * scale ** p
    return StabilityConstants(p, gamma1, gamma2, rho, M, s, delta_sM, delta_M, c1, c2,
                              d1, d2, G1, G2, C1, C2, variant, scale, notes)


def error_bound(constants: StabilityConstants, epsilon: float, tail_p_norm: float,
                s: int | None = None) -> float:
    """``C1 eps^p + C2 tail / s^(1-p/2)`` where ``tail`` is already raised to ``p``."""
    if epsilon < 0 or tail_p_norm < 0:
        raise InvalidRange("epsilon and tail must be nonnegative")
    s = constants.s if s is None else s
    p = constants.p
    return constants.C1 * epsilon ** p + constants.C2 * tail_p_norm / s ** (1 - p / 2)


# ------------------------------------------------------ admissible sparsity

@dataclass(frozen=True)
class AdmissibleSparsity:
    s_max: int
    bound: float
    nu: float
    variant: str


def admissible_sparsity(variant: str, p: float, *, c1: float = 1.0, c2: float = 1.0,
                        d2: float = 1.0, q: float | None = None, N: int | None = None,
                        nu_form: str = "theorem") -> AdmissibleSparsity:
    """Largest ``s`` satisfying the sparsity hypothesis, and the RIP order at it.

    Primal and Parseval: ``s < q / (2 d2^2 (1+2^-p)^(1/(p-2)))`` (Parseval uses
    ``d2 = 1``).  Dual: ``s < N (c1^(2p)/3)^(1/(2-p))``.  The inequality is
    strict so ``s_max = ceil(bound) - 1``.

    The RIP order for the primal case is
    ``nu = s 2 (1+2^-p)^(1/(p-2)) c2^(p/(p-2)) d2^k / c1^(p/(p-2))`` with
    ``k = p/(p-2)`` (``nu_form="theorem"``) or ``k = 2p/(p-2)``
    (``nu_form="proof"``); Parseval uses ``7 s``; dual uses ``s (3/c1^(2p))^(1/(2-p))``.
    """
    if not (0 < p <= 1):
        raise InvalidP(f"p must lie in (0, 1], got {p}")
    if variant not in VARIANTS:
        raise InvalidRange(f"variant must be one of {VARIANTS}, got {variant!r}")
    if nu_form not in ("theorem", "proof"):
        raise InvalidRange(f"unknown nu_form {nu_form!r}")
    if variant == "dual":
        if N is None or N < 0 or not c1 > 0:
            raise InvalidRange("dual variant needs N >= 0 and c1 > 0")
        bound = N * (c1 ** (2 * p) / 3) ** (1 / (2 - p))
    else:
        if q is None or q < 0 or not d2 > 0:
            raise InvalidRange("primal variants need q >= 0 and d2 > 0")
        dd2 = 1.0 if variant == "parseval" else d2
        bound = q / (2 * dd2 ** 2 * (1 + 2.0 ** -p) ** (1 / (p - 2)))
    # strict inequality; the tolerance keeps float noise from admitting s = bound
    s_max = max(0, math.ceil(bound * (1 - 1e-12)) - 1)
    if variant == "primal":
        k = p / (p - 2) if nu_form == "theorem" else 2 * p / (p - 2)
        nu = s_max * 2 * (1 + 2.0 ** -p) ** (1 / (p - 2)) * c2 ** (p / (p - 2)) * d2 ** k \
            / c1 ** (p / (p - 2))
    elif variant == "parseval":
        nu = 7.0 * s_max
    else:
        nu = s_max * (3 / c1 ** (2 * p)) ** (1 / (2 - p))
    return AdmissibleSparsity(s_max, bound, nu, variant)


# -------------------------------------------------------- cone constraint

def top_s_support(values, s: int) -> np.ndarray:
    """Indices of the ``s`` largest moduli, ties broken by lowest index."""
    a = np.abs(np.asarray(values)).ravel()
    order = np.lexsort((np.arange(a.size), -a))
    return np.sort(order[:s])


def cone_constraint_check(Psi: AnalysisOperator, x, x_star, s: int, p: float,
                          tol: float | None = None) -> tuple[bool, float]:
    """Check ``||(Psi z)_{T0^c}||_p^p <= 2 ||(Psi x)_{T0^c}||_p^p + ||(Psi z)_{T0}||_p^p``.

    ``z = x - x_star`` and ``T0`` is the top-``s`` set of ``|Psi x|``.  The
    inequality needs only ``||Psi x_star||_p^p <= ||Psi x||_p^p``; an
    approximate minimizer exceeding this by ``e`` can violate it by at most
    ``e``, which is the default tolerance.  Returns ``(holds, rhs - lhs)``.
    """
    if not (0 < p <= 1):
        raise InvalidP(f"p must lie in (0, 1], got {p}")
    cx = Psi.forward(np.asarray(x))
    cz = Psi.forward(np.asarray(x) - np.asarray(x_star))
    T0 = top_s_support(cx, s)
    off = np.ones(cx.size, dtype=bool)
    off[T0] = False
    lhs = float(np.sum(np.abs(cz[off]) ** p))
    rhs = float(2 * np.sum(np.abs(cx[off]) ** p) + np.sum(np.abs(cz[~off]) ** p))
    slack = rhs - lhs
    if tol is None:
        excess = float(np.sum(np.abs(Psi.forward(np.asarray(x_star))) ** p)
                       - np.sum(np.abs(cx) ** p))
        tol = max(0.0, excess)
    return slack >= -(tol + 1e-12 * max(1.0, rhs)), slack
