"""Finite frames: bounds, duals and structural properties.

A frame is stored as an ``(N, n)`` array whose rows are the frame vectors
``psi_lambda``.  Inner products are conjugate-linear in the second argument,
so the analysis coefficients of ``x`` are ``conj(Phi) @ x`` and synthesis of
``c`` is ``Phi.T @ c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import nnls

from .errors import DimensionMismatch, IllConditioned, InvalidP, RankDeficient

DUAL_TOL = 1e-8
SCALABILITY_TOL = 1e-8
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class Frame:
    """A finite spanning system of ``N`` vectors in ``n`` dimensions."""

    vectors: np.ndarray
    bounds: tuple[float, float] = field(compare=False)
    max_norm: float = field(compare=False)

    @property
    def N(self) -> int:
        return self.vectors.shape[0]

    @property
    def n(self) -> int:
        return self.vectors.shape[1]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.vectors)

    def frame_operator(self) -> np.ndarray:
        """``S = sum_lambda psi_lambda psi_lambda^*`` as an ``n x n`` matrix."""
        V = self.vectors
        return V.T @ V.conj()

    def analysis(self, x):
        return self.vectors.conj() @ x

    def synthesis(self, c):
        return self.vectors.T @ c


def build_frame(vectors) -> Frame:
    """Validate ``vectors`` and return a :class:`Frame` with cached bounds.

    Raises
    ------
    DimensionMismatch
        If the list is empty or the vectors have different lengths.
    RankDeficient
        If the vectors do not span the ambient space.
    """
    try:
        V = np.array(vectors)
    except ValueError as exc:  # ragged input
        raise DimensionMismatch("frame vectors must share one dimension") from exc
    if V.ndim != 2 or V.shape[0] == 0 or V.dtype == object:
        raise DimensionMismatch("expected a non-empty list of equal-length vectors")
    V = V.astype(np.complex128 if np.iscomplexobj(V) else np.float64)
    N, n = V.shape
    if N < n or np.linalg.matrix_rank(V) < n:
        raise RankDeficient(f"{N} vectors do not span a space of dimension {n}")
    V.setflags(write=False)
    eig = np.linalg.eigvalsh(V.T @ V.conj())
    bounds = (float(eig[0]), float(eig[-1]))
    max_norm = float(np.max(np.linalg.norm(V, axis=1)))
    return Frame(V, bounds, max_norm)


def frame_bounds(frame: Frame) -> tuple[float, float]:
    """Extreme eigenvalues ``(c1, c2)`` of the frame operator."""
    eig = np.linalg.eigvalsh(frame.frame_operator())
    return float(eig[0]), float(eig[-1])


def canonical_dual(frame: Frame) -> np.ndarray:
    """Rows ``S^{-1} psi_lambda`` of the canonical dual frame.

    Raises :class:`IllConditioned` when ``cond(S) > 1e12``.
    """
    S = frame.frame_operator()
    c1, c2 = frame_bounds(frame)
    if c1 <= 0 or c2 / c1 > MAX_CONDITION:
        raise IllConditioned(f"frame operator condition number {c2 / max(c1, 1e-300):.3g}")
    # S is Hermitian, so (S^{-1} psi)^T = psi^T S^{-T} = psi^T conj(S)^{-1}
    return np.linalg.solve(S, frame.vectors.T).T


def _dual_residual(frame: Frame, candidate: np.ndarray) -> float:
    D = np.asarray(candidate)
    if D.shape != frame.vectors.shape:
        raise DimensionMismatch(
            f"candidate has shape {D.shape}, frame has {frame.vectors.shape}"
        )
    # sum_lambda dual_lambda psi_lambda^*
    T = D.T @ frame.vectors.conj()
    return float(np.linalg.norm(T - np.eye(frame.n)))


def verify_dual(frame: Frame, candidate) -> bool:
    """True iff ``sum dual_lambda psi_lambda^* = I`` within ``1e-8 sqrt(n)``."""
    return _dual_residual(frame, candidate) <= DUAL_TOL * math.sqrt(frame.n)


def _outer_product_system(frame: Frame) -> tuple[np.ndarray, np.ndarray]:
    """Real linear system ``B w = vec(I)`` for ``sum w_lambda psi psi^* = I``.

    Rows are the independent real entries of a Hermitian matrix: the diagonal,
    the real parts of the strict upper triangle and, for complex frames, the
    imaginary parts of the strict upper triangle.
    """
    V = frame.vectors
    n = frame.n
    iu = np.triu_indices(n, 1)
    outers = V[:, :, None] * V.conj()[:, None, :]  # (N, n, n)
    blocks = [outers[:, np.arange(n), np.arange(n)].real, outers[:, iu[0], iu[1]].real]
    target = [np.ones(n), np.zeros(len(iu[0]))]
    if frame.is_complex:
        blocks.append(outers[:, iu[0], iu[1]].imag)
        target.append(np.zeros(len(iu[0])))
    B = np.concatenate(blocks, axis=1).T
    return B, np.concatenate(target)


@dataclass(frozen=True)
class DualReport:
    """Outcome of the dual analysis of a frame."""

    dual_vectors: np.ndarray
    identifiable: bool
    d1: float | None
    d2: float | None
    scalable: bool
    scaling_weights: np.ndarray | None
    residual: float
    positively_scalable: bool = False
    identifiable_dual: np.ndarray | None = None


def identifiability(frame: Frame, tol: float = DUAL_TOL, seed: int = 0):
    """Search for a dual of the form ``(c_lambda psi_lambda)``.

    Returns ``(identifiable, d1, d2, dual)``.  The minimum-norm solution of
    ``sum c_lambda psi psi^* = I`` is taken first; if it has vanishing
    entries, random directions in the null space are tried so that a solution
    with all ``c_lambda != 0`` is found whenever one exists generically.
    """
    B, t = _outer_product_system(frame)
    if B.shape[0] == B.shape[1] and np.linalg.cond(B) < MAX_CONDITION:
        # unique solution; LU keeps exact small-integer solutions exact
        c = np.linalg.solve(B, t)
    else:
        c, *_ = np.linalg.lstsq(B, t, rcond=None)
    scale = math.sqrt(frame.n)
    if np.linalg.norm(B @ c - t) > tol * scale:
        return False, None, None, None

    def nonzero(v):
        return np.min(np.abs(v)) > 1e-10 * max(np.max(np.abs(v)), 1e-300)

    if not nonzero(c):
        _, sv, vh = np.linalg.svd(B)
        rank = int(np.sum(sv > sv[0] * 1e-12)) if sv.size else 0
        null = vh[rank:]
        found = False
        if null.shape[0]:
            rng = np.random.default_rng(seed)
            for _ in range(20):
                trial = c + null.T @ rng.standard_normal(null.shape[0])
                if nonzero(trial):
                    c, found = trial, True
                    break
        if not found:
            return False, None, None, None
    mod = np.abs(c)
    dual = c[:, None] * frame.vectors
    return True, float(mod.min()), float(mod.max()), dual


def scalability(frame: Frame, tol: float = SCALABILITY_TOL):
    """Nonnegative least squares for ``sum w_lambda psi psi^* = I``.

    Returns ``(scalable, weights or None, residual)`` where ``weights`` are the
    squared scalars ``w = c^2``.
    """
    B, t = _outer_product_system(frame)
    w, residual = nnls(B, t, maxiter=50 * B.shape[1])
    residual = float(residual)
    if residual <= tol:
        return True, w, residual
    return False, None, residual


def dual_report(frame: Frame) -> DualReport:
    ident, d1, d2, ident_dual = identifiability(frame)
    scal, w, residual = scalability(frame)
    positive = bool(scal and np.all(w > 1e-12 * max(float(np.max(w)), 1e-300)))
    return DualReport(
        dual_vectors=canonical_dual(frame),
        identifiable=ident,
        d1=d1,
        d2=d2,
        scalable=scal,
        scaling_weights=w,
        residual=residual,
        positively_scalable=positive,
        identifiable_dual=ident_dual,
    )


def q_controllability(frame_or_bounds, p: float, N: int | None = None) -> int:
    """Largest ``q`` with ``(c1/c2)^(p/(2-p)) >= q/N``.

    Accepts a :class:`Frame` or a pair ``(c1, c2)`` together with ``N``.
    """
    if not (0 < p <= 1):
        raise InvalidP(f"p must lie in (0, 1], got {p}")
    if isinstance(frame_or_bounds, Frame):
        c1, c2 = frame_or_bounds.bounds
        N = frame_or_bounds.N
    else:
        c1, c2 = frame_or_bounds
        if N is None:
            raise TypeError("N is required when passing bounds")
    value = N * (c1 / c2) ** (p / (2 - p))
    # relative slack absorbs eigensolver round-off for tight frames
    return int(math.floor(value * (1 + 1e-9)))


# ---------------------------------------------------------------- text format

def format_matrix_text(rows: np.ndarray) -> str:
    """Serialize an ``(N, n)`` array in the ``n N real|complex`` text format."""
    rows = np.atleast_2d(np.asarray(rows))
    N, n = rows.shape
    kind = "complex" if np.iscomplexobj(rows) else "real"
    lines = [f"{n} {N} {kind}"]
    for row in rows:
        if kind == "complex":
            vals = np.empty(2 * n)
            vals[0::2], vals[1::2] = row.real, row.imag
        else:
            vals = row
        lines.append(" ".join(repr(float(v)) for v in vals))
    return "\n".join(lines) + "\n"


def parse_matrix_text(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise DimensionMismatch("empty frame file")
    head = lines[0].split()
    if len(head) != 3 or head[2] not in ("real", "complex"):
        raise DimensionMismatch(f"bad header line {lines[0]!r}")
    n, N, kind = int(head[0]), int(head[1]), head[2]
    width = 2 * n if kind == "complex" else n
    body = lines[1:]
    if len(body) != N:
        raise DimensionMismatch(f"header announces {N} rows, found {len(body)}")
    data = np.array([[float(v) for v in ln.split()] for ln in body]).reshape(N, -1)
    if data.shape[1] != width:
        raise DimensionMismatch(f"expected {width} values per row, found {data.shape[1]}")
    if kind == "complex":
        return data[:, 0::2] + 1j * data[:, 1::2]
    return data


def save_frame(frame_or_rows, path) -> None:
    rows = frame_or_rows.vectors if isinstance(frame_or_rows, Frame) else frame_or_rows
    Path(path).write_text(format_matrix_text(rows))


def load_frame(path) -> Frame:
    return build_frame(parse_matrix_text(Path(path).read_text()))


def save_coefficients(coeffs, path) -> None:
    """Coefficient vectors use the frame format with ``n = 1``."""
    Path(path).write_text(format_matrix_text(np.asarray(coeffs).reshape(-1, 1)))


def load_coefficients(path) -> np.ndarray:
    return parse_matrix_text(Path(path).read_text())[:, 0]
