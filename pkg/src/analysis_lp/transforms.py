"""Analysis/synthesis operator pairs for the sparsifying frames.

All operators act on flat vectors.  Two-dimensional transforms take a
row-major flattened ``side x side`` image and return the concatenation of
their bands, coarsest band first, each band in raster order.

The undecimated Haar transform uses periodic boundaries and the filters

    low:  a_j[k] = (a_{j-1}[k] + a_{j-1}[k + 2^(j-1)]) / 2
    high: d_j[k] = (a_{j-1}[k] - a_{j-1}[k + 2^(j-1)]) / 2

which satisfy ``|H|^2 + |G|^2 = 1`` and therefore give a Parseval frame.
The ``unit_norm`` normalization rescales every band so that each atom has
unit Euclidean norm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .errors import IllConditioned, InvalidSize
from .frames import Frame, MAX_CONDITION

NORMALIZATIONS = ("parseval", "unit_norm")


@dataclass(frozen=True)
class AnalysisOperator:
    """A frame given through its analysis map and the adjoint synthesis map.

    ``forward`` maps ``C^n -> C^N`` (coefficients ``<x, psi_lambda>``) and
    ``adjoint`` maps ``C^N -> C^n`` (``sum c_lambda psi_lambda``).
    """

    forward: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]
    n: int
    N: int
    levels: int | None = None
    is_parseval: bool = False
    name: str = "operator"
    image_shape: tuple[int, ...] | None = None
    # exact upper bound on ||Psi|| (= sqrt(c2)) when it is known analytically
    norm_bound: float | None = None
    max_atom_norm: float | None = None
    # x -> S^{-1} x, when an exact inverse of the frame operator is available
    frame_inverse: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    # eigenvalues of S, when S is diagonalized by a known transform
    frame_spectrum: np.ndarray | None = field(default=None, repr=False)
    bands: tuple[tuple[str, slice], ...] = ()
    identifiable_constants: tuple[float, float] | None = None
    real: bool = True

    def frame_operator(self, x):
        return self.adjoint(self.forward(x))

    def inverse_frame_operator(self, x, tol: float = 1e-10, maxiter: int = 2000):
        """Apply ``S^{-1}``; falls back to conjugate gradients."""
        if self.is_parseval:
            return np.array(x, copy=True)
        if self.frame_inverse is not None:
            return self.frame_inverse(x)
        x = np.asarray(x)
        dtype = np.complex128 if np.iscomplexobj(x) else np.float64
        op = LinearOperator((self.n, self.n), matvec=self.frame_operator, dtype=dtype)
        out, info = cg(op, x, rtol=tol, atol=0.0, maxiter=maxiter)
        if info != 0:
            raise IllConditioned(f"frame operator inversion did not reach {tol:g} ({info})")
        return out

    def dense(self) -> np.ndarray:
        """Materialize the ``N x n`` analysis matrix (small sizes only)."""
        eye = np.eye(self.n)
        return np.stack([self.forward(e) for e in eye], axis=1)


# ------------------------------------------------------------------ helpers

def _check_power_of_two(size: int, what: str) -> int:
    if size < 1 or size & (size - 1):
        raise InvalidSize(f"{what} must be a power of two, got {size}")
    return int(round(math.log2(size)))


def _low(a, shift, axis):
    return 0.5 * (a + np.roll(a, -shift, axis=axis))


def _high(a, shift, axis):
    return 0.5 * (a - np.roll(a, -shift, axis=axis))


def _low_t(a, shift, axis):
    return 0.5 * (a + np.roll(a, shift, axis=axis))


def _high_t(a, shift, axis):
    return 0.5 * (a - np.roll(a, shift, axis=axis))


def _spectrum_inverse(spectrum: np.ndarray, shape):
    if spectrum.min() <= 0 or spectrum.max() / spectrum.min() > MAX_CONDITION:
        raise IllConditioned("frame operator is (numerically) singular")

    def inverse(x):
        x = np.asarray(x)
        out = np.fft.ifftn(np.fft.fftn(x.reshape(shape)) / spectrum)
        out = out.reshape(-1)
        return out.real if not np.iscomplexobj(x) else out

    return inverse


# --------------------------------------------------------------- 1D Haar

def undecimated_haar(n: int, J: int, normalization: str = "parseval") -> AnalysisOperator:
    """Undecimated (a trous) Haar frame on periodic signals of length ``n``.

    Coefficients are ordered ``[a_J, d_J, d_{J-1}, ..., d_1]``; the frame has
    ``N = n (J + 1)`` elements.
    """
    depth = _check_power_of_two(n, "signal length")
    if not (1 <= J <= depth):
        raise InvalidSize(f"levels must lie in [1, {depth}], got {J}")
    if normalization not in NORMALIZATIONS:
        raise InvalidSize(f"unknown normalization {normalization!r}")

    # band order: approx at J, then details J..1; atom norms 2^{-j/2}
    band_levels = [J] + list(range(J, 0, -1))
    if normalization == "unit_norm":
        scales = np.array([2.0 ** (j / 2) for j in band_levels])
    else:
        scales = np.ones(J + 1)

    def forward(x):
        a = np.asarray(x).reshape(n)
        details = []
        for j in range(1, J + 1):
            shift = 2 ** (j - 1)
            details.append(_high(a, shift, 0))
            a = _low(a, shift, 0)
        bands = [a] + details[::-1]
        return np.concatenate([s * b for s, b in zip(scales, bands)])

    def adjoint(c):
        c = np.asarray(c).reshape(J + 1, n)
        a = scales[0] * c[0]
        for idx, j in enumerate(range(J, 0, -1), start=1):
            shift = 2 ** (j - 1)
            a = _low_t(a, shift, 0) + _high_t(scales[idx] * c[idx], shift, 0)
        return a

    names = [f"a{J}"] + [f"d{j}" for j in range(J, 0, -1)]
    bands = tuple((nm, slice(i * n, (i + 1) * n)) for i, nm in enumerate(names))
    return _finish(forward, adjoint, n, (n,), J, normalization, scales, bands, "haar1d")


# --------------------------------------------------------------- 2D Haar

def undecimated_haar_2d(side: int, J: int, normalization: str = "parseval") -> AnalysisOperator:
    """Separable undecimated Haar frame on periodic ``side x side`` images.

    Each level contributes the bands ``LH, HL, HH`` (filter on axis 0 first,
    axis 1 second) and the coarsest approximation ``LL_J`` is stored first:
    ``[LL_J, LH_J, HL_J, HH_J, ..., LH_1, HL_1, HH_1]``, so that
    ``N = side^2 (3J + 1)``.
    """
    depth = _check_power_of_two(side, "image side")
    if not (1 <= J <= depth):
        raise InvalidSize(f"levels must lie in [1, {depth}], got {J}")
    if normalization not in NORMALIZATIONS:
        raise InvalidSize(f"unknown normalization {normalization!r}")

    n = side * side
    band_levels = [J] + [j for j in range(J, 0, -1) for _ in range(3)]
    if normalization == "unit_norm":
        scales = np.array([2.0 ** j for j in band_levels])
    else:
        scales = np.ones(3 * J + 1)

    def forward(x):
        a = np.asarray(x).reshape(side, side)
        levels = []
        for j in range(1, J + 1):
            shift = 2 ** (j - 1)
            lo0, hi0 = _low(a, shift, 0), _high(a, shift, 0)
            levels.append((_high(lo0, shift, 1), _low(hi0, shift, 1), _high(hi0, shift, 1)))
            a = _low(lo0, shift, 1)
        bands = [a]
        for trio in levels[::-1]:
            bands.extend(trio)
        return np.concatenate([(s * b).reshape(-1) for s, b in zip(scales, bands)])

    def adjoint(c):
        c = np.asarray(c).reshape(3 * J + 1, side, side)
        a = scales[0] * c[0]
        k = 1
        for j in range(J, 0, -1):
            shift = 2 ** (j - 1)
            lh, hl, hh = (scales[k + i] * c[k + i] for i in range(3))
            k += 3
            lo0 = _low_t(a, shift, 1) + _high_t(lh, shift, 1)
            hi0 = _low_t(hl, shift, 1) + _high_t(hh, shift, 1)
            a = _low_t(lo0, shift, 0) + _high_t(hi0, shift, 0)
        return a.reshape(-1)

    names = [f"LL{J}"] + [f"{o}{j}" for j in range(J, 0, -1) for o in ("LH", "HL", "HH")]
    bands = tuple((nm, slice(i * n, (i + 1) * n)) for i, nm in enumerate(names))
    return _finish(forward, adjoint, n, (side, side), J, normalization, scales, bands, "haar2d")


def _finish(forward, adjoint, n, shape, J, normalization, scales, bands, kind):
    N = n * len(bands)
    parseval = normalization == "parseval"
    # S is a circular convolution: its symbol is the DFT of S applied to a delta
    delta = np.zeros(n)
    delta[0] = 1.0
    kernel = adjoint(forward(delta)).reshape(shape)
    spectrum = np.fft.fftn(kernel).real
    if parseval:
        spectrum = np.ones(shape)
    # every atom of a band has the same norm, so one atom per band suffices
    atom_norms = np.array([np.linalg.norm(adjoint(_unit(i * n, N))) for i in range(len(bands))])
    # unit-norm atoms are the Parseval ones scaled by s_b, so the dual atoms are
    # psi / s_b^2 and the identifiability constants are min/max of 1/s_b^2
    inv_sq = 1.0 / np.asarray(scales, dtype=float) ** 2
    return AnalysisOperator(
        forward=forward,
        adjoint=adjoint,
        n=n,
        N=N,
        levels=J,
        is_parseval=parseval,
        name=f"{kind}(J={J},{normalization})",
        image_shape=shape,
        norm_bound=float(math.sqrt(spectrum.max())),
        max_atom_norm=float(atom_norms.max()),
        frame_inverse=None if parseval else _spectrum_inverse(spectrum, shape),
        frame_spectrum=spectrum,
        bands=bands,
        identifiable_constants=(float(inv_sq.min()), float(inv_sq.max())),
    )


def _unit(index, size):
    e = np.zeros(size)
    e[index] = 1.0
    return e


# ------------------------------------------------------------ dense frames

def matrix_operator(frame: Frame) -> AnalysisOperator:
    """Analysis operator of an explicit :class:`Frame`."""
    V = frame.vectors
    Vc = V.conj()
    c1, c2 = frame.bounds
    S = frame.frame_operator()
    tight = abs(c1 - 1.0) < 1e-10 and abs(c2 - 1.0) < 1e-10

    def inverse(x):
        return np.linalg.solve(S, x)

    return AnalysisOperator(
        forward=lambda x: Vc @ np.asarray(x),
        adjoint=lambda c: V.T @ np.asarray(c),
        n=frame.n,
        N=frame.N,
        is_parseval=tight,
        name=f"matrix(n={frame.n},N={frame.N})",
        norm_bound=math.sqrt(c2),
        max_atom_norm=frame.max_norm,
        frame_inverse=None if tight else inverse,
        real=not frame.is_complex,
    )


def identity_operator(n: int) -> AnalysisOperator:
    from .frames import build_frame

    return matrix_operator(build_frame(np.eye(n)))


def canonical_dual_operator(op: AnalysisOperator) -> AnalysisOperator:
    """Analysis operator ``x -> (<x, S^{-1} psi_lambda>)`` of the canonical dual.

    Parseval operators are returned unchanged.
    """
    if op.is_parseval:
        return op
    inv = op.inverse_frame_operator
    spectrum = None if op.frame_spectrum is None else 1.0 / op.frame_spectrum
    return AnalysisOperator(
        forward=lambda x: op.forward(inv(x)),
        adjoint=lambda c: inv(op.adjoint(c)),
        n=op.n,
        N=op.N,
        levels=op.levels,
        is_parseval=False,
        name=f"dual[{op.name}]",
        image_shape=op.image_shape,
        norm_bound=None if spectrum is None else float(math.sqrt(spectrum.max())),
        frame_inverse=(lambda x: op.frame_operator(x)),
        frame_spectrum=spectrum,
        bands=op.bands,
        real=op.real,
    )


def estimate_operator_norm(op: AnalysisOperator, iters: int = 30, seed: int = 0) -> float:
    """Power iteration on ``Psi^* Psi``; returns an estimate of ``||Psi||``."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(iters):
        y = op.frame_operator(x)
        lam = float(np.linalg.norm(y))
        if lam == 0.0:
            return 0.0
        x = y / lam
    return math.sqrt(lam)


def subsample_mask(N: int, stride: int) -> np.ndarray:
    """Boolean mask keeping every ``stride``-th coefficient of the band vector."""
    keep = np.zeros(N, dtype=bool)
    keep[::stride] = True
    return keep
