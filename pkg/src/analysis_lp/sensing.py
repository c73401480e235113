"""Measurement operators ``A: C^n -> C^m``.

Dense operators keep their matrix so that the solver can build exact
projections onto the data-fidelity ball.  The masked Fourier operator uses
the unitary 2D DFT, so its rows are orthonormal and ``A A^* = I``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import EmptyMask, InvalidShape, MeasureInvalid, OrthogonalityViolated

ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class SensingOperator:
    apply: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]
    m: int
    n: int
    kind: str
    matrix: np.ndarray | None = field(default=None, repr=False)
    mask: np.ndarray | None = field(default=None, repr=False)
    row_indices: np.ndarray | None = None
    row_measure: np.ndarray | None = field(default=None, repr=False)
    # A A^* = I exactly (orthonormal rows)
    orthonormal_rows: bool = False

    def __call__(self, x):
        return self.apply(x)


def dense_operator(matrix, kind: str = "dense") -> SensingOperator:
    A = np.array(matrix)
    if A.ndim != 2 or A.shape[0] < 1:
        raise InvalidShape(f"expected a non-empty matrix, got shape {A.shape}")
    A.setflags(write=False)
    AH = A.conj().T
    m, n = A.shape
    ortho = bool(np.allclose(A @ AH, np.eye(m), atol=1e-12))
    return SensingOperator(
        apply=lambda x: A @ np.asarray(x),
        adjoint=lambda y: AH @ np.asarray(y),
        m=m,
        n=n,
        kind=kind,
        matrix=A,
        orthonormal_rows=ortho,
    )


def gaussian_operator(m: int, n: int, seed: int | None = 0) -> SensingOperator:
    """i.i.d. ``N(0, 1/m)`` matrix, reproducible under ``seed``."""
    if not (1 <= m <= n):
        raise InvalidShape(f"need 1 <= m <= n, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n)) / math.sqrt(m)
    return dense_operator(A, kind="gaussian")


def dft_matrix(n: int) -> np.ndarray:
    """Non-normalized DFT, orthonormal with respect to the uniform measure."""
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n)


def check_orthogonality(base, measure) -> float:
    """``max |sum_i nu_i conj(r_i(k)) r_i(j) - delta_jk|``."""
    R = np.asarray(base)
    nu = np.asarray(measure, dtype=float)
    G = R.conj().T @ (nu[:, None] * R)
    return float(np.max(np.abs(G - np.eye(R.shape[1]))))


def subsampled_orthogonal(base, measure, m: int, seed: int | None = 0,
                          replace: bool = True) -> SensingOperator:
    """Draw ``m`` rows of ``base`` according to ``measure`` and scale by ``1/sqrt(m)``.

    ``base`` must satisfy ``sum_i nu_i r_i^* r_i = I``.  With ``replace=True``
    (the default) indices are drawn i.i.d.; otherwise without repetition.
    """
    R = np.asarray(base)
    nu = np.asarray(measure, dtype=float)
    if R.ndim != 2 or nu.shape != (R.shape[0],):
        raise MeasureInvalid("measure must have one weight per row of base")
    if np.any(nu < 0) or abs(nu.sum() - 1.0) > 1e-10:
        raise MeasureInvalid("measure must be a probability vector")
    if not (1 <= m) or (not replace and m > np.count_nonzero(nu)):
        raise InvalidShape(f"cannot draw m={m} rows")
    err = check_orthogonality(R, nu)
    if err > ORTHO_TOL:
        raise OrthogonalityViolated(f"rows violate the nu-orthonormality condition by {err:.3g}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(R.shape[0], size=m, replace=replace, p=nu)
    op = dense_operator(R[idx] / math.sqrt(m), kind="subsampled_rows")
    return SensingOperator(
        apply=op.apply,
        adjoint=op.adjoint,
        m=op.m,
        n=op.n,
        kind=op.kind,
        matrix=op.matrix,
        row_indices=idx,
        row_measure=nu,
        orthonormal_rows=op.orthonormal_rows,
    )


# ------------------------------------------------------------- radial masks

def radial_mask(side: int, num_lines: int):
    """Digital radial lines through DC on a centered ``side x side`` grid.

    Lines are at angles ``k pi / num_lines``.  Each line is rasterized by
    stepping one pixel along its dominant axis and rounding the other
    coordinate, which is the Bresenham point set for a line through the
    origin.  Frequencies are restricted to the disc of radius ``side/2`` and
    wrapped modulo ``side``, so the mask is symmetric under ``k -> -k``.

    Returns ``(mask, m)`` where ``mask[side//2, side//2]`` is DC.
    """
    if side < 8 or num_lines < 1:
        raise EmptyMask(f"need side >= 8 and num_lines >= 1, got {side}, {num_lines}")
    c = side // 2
    mask = np.zeros((side, side), dtype=bool)
    t = np.arange(-c, c + 1)
    for k in range(num_lines):
        theta = k * np.pi / num_lines
        cs, sn = math.cos(theta), math.sin(theta)
        if abs(cs) >= abs(sn):
            kx = t
            ky = np.round(t * sn / cs).astype(int)
        else:
            ky = t
            kx = np.round(t * cs / sn).astype(int)
        inside = kx * kx + ky * ky <= c * c
        # row index is the vertical frequency, column the horizontal one
        mask[(ky[inside] + c) % side, (kx[inside] + c) % side] = True
    mask[c, c] = True
    return mask, int(mask.sum())


def masked_fft_operator(mask) -> SensingOperator:
    """Unitary 2D DFT restricted to ``mask`` (DC at the grid center).

    Measurements are ordered row-major over the centered mask.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2 or mask.shape[0] != mask.shape[1]:
        raise InvalidShape("mask must be a square 2D array")
    m = int(mask.sum())
    if m == 0:
        raise EmptyMask("mask selects no frequencies")
    side = mask.shape[0]
    shape = mask.shape
    frozen = mask.copy()
    frozen.setflags(write=False)

    def apply(x):
        X = np.fft.fftshift(np.fft.fft2(np.asarray(x).reshape(shape), norm="ortho"))
        return X[frozen]

    def adjoint(y):
        Z = np.zeros(shape, dtype=np.complex128)
        Z[frozen] = y
        return np.fft.ifft2(np.fft.ifftshift(Z), norm="ortho").reshape(-1)

    return SensingOperator(
        apply=apply,
        adjoint=adjoint,
        m=m,
        n=side * side,
        kind="masked_fft",
        mask=frozen,
        orthonormal_rows=True,
    )


def is_conjugate_symmetric(mask) -> bool:
    """Whether the centered mask is invariant under ``k -> -k (mod side)``."""
    mask = np.asarray(mask, dtype=bool)
    side = mask.shape[0]
    c = side // 2
    idx = (c - (np.arange(side) - c)) % side
    return bool(np.array_equal(mask, mask[np.ix_(idx, idx)]))
