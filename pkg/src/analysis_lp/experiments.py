"""Desk-scale reconstruction experiments and frame-bound tables.

Every CSV starts with the comment line ``#analysis-lp v1`` and every data
row carries the seed.  Wall-clock timings are written to a separate
``summary.csv`` so that the data files are byte-reproducible.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, cg, eigsh

from .errors import (AnalysisLpError, InvalidP, InvalidRange, InvalidSize,
                     IterationNotConverged)
from .frames import q_controllability
from .imageio import load_image, save_mask, write_pgm
from .phantom import shepp_logan
from .sensing import gaussian_operator, masked_fft_operator, radial_mask
from .solver import SolverConfig, best_s_term, reweighted_lp, reweighted_lp_dual
from .transforms import AnalysisOperator, subsample_mask, undecimated_haar_2d

CSV_HEADER = "#analysis-lp v1"


def write_csv(path, columns, rows) -> None:
    """Comma-separated file with the version comment line first."""
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def read_csv(path) -> list[dict]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise InvalidRange(f"{path} does not start with {CSV_HEADER!r}")
    return list(csv.DictReader(lines[1:]))


# ------------------------------------------------------------ spec files

@dataclass(frozen=True)
class ExperimentSpec:
    name: str = "fourier"
    phantom: str = "shepp_logan"
    phantom_file: str | None = None
    side: int = 128
    levels: int = 3
    normalization: str = "parseval"
    sensing: str = "radial"
    lines: int = 30
    m: int | None = None
    p_grid: tuple[float, ...] = (0.5, 1.0)
    solver: SolverConfig = field(default_factory=SolverConfig)
    variant: str = "primal"
    output_dir: str = "results"
    seed: int = 0

    def __post_init__(self):
        if self.side < 1 or self.side & (self.side - 1):
            raise InvalidSize(f"side must be a power of two, got {self.side}")
        bad = [p for p in self.p_grid if not (0 < p <= 1)]
        if bad or not self.p_grid:
            raise InvalidP(f"p_grid values must lie in (0, 1], got {self.p_grid}")
        if self.phantom not in ("shepp_logan", "file"):
            raise InvalidRange(f"unknown phantom {self.phantom!r}")
        if self.phantom == "file":
            if not self.phantom_file or not Path(self.phantom_file).is_file():
                raise FileNotFoundError(f"phantom file {self.phantom_file!r} does not exist")
        if self.sensing not in ("radial", "gaussian"):
            raise InvalidRange(f"unknown sensing {self.sensing!r}")
        if self.sensing == "gaussian" and not self.m:
            raise InvalidRange("gaussian sensing needs m")
        if self.variant not in ("primal", "dual"):
            raise InvalidRange(f"unknown variant {self.variant!r}")


_SOLVER_KEYS = {"mu": float, "nu": float, "epsilon": float, "outer_iters": int,
                "inner_max_iters": int, "inner_tol": float, "warm_start": None,
                "check_every": int}
_SPEC_KEYS = {"name": str, "phantom": str, "phantom_file": str, "side": int, "levels": int,
              "normalization": str, "sensing": str, "lines": int, "m": int,
              "variant": str, "output_dir": str, "seed": int}


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise InvalidRange(f"not a boolean: {text!r}")


def parse_spec(text: str, base_dir=None) -> ExperimentSpec:
    """Parse flat ``key = value`` lines (``#`` starts a comment).

    ``p_grid`` is a comma-separated list.  Relative ``phantom_file`` paths
    are resolved against ``base_dir``.
    """
    spec_kw, solver_kw = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidRange(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "p_grid":
            spec_kw["p_grid"] = tuple(float(v) for v in value.split(",") if v.strip())
        elif key in _SPEC_KEYS:
            spec_kw[key] = _SPEC_KEYS[key](value)
        elif key in _SOLVER_KEYS:
            conv = _SOLVER_KEYS[key]
            solver_kw[key] = _bool(value) if conv is None else conv(value)
        else:
            raise InvalidRange(f"line {lineno}: unknown key {key!r}")
    if base_dir is not None and spec_kw.get("phantom_file"):
        path = Path(spec_kw["phantom_file"])
        if not path.is_absolute():
            spec_kw["phantom_file"] = str(Path(base_dir) / path)
    seed = spec_kw.get("seed", 0)
    spec_kw["solver"] = SolverConfig(seed=seed, **solver_kw)
    return ExperimentSpec(**spec_kw)


def load_spec(path) -> ExperimentSpec:
    path = Path(path)
    return parse_spec(path.read_text(), base_dir=path.parent)


def spec_to_dict(spec: ExperimentSpec) -> dict:
    d = asdict(spec)
    d["p_grid"] = list(spec.p_grid)
    return d


# ------------------------------------------------------ Fourier experiment

@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    rows: list[dict]
    final_errors: dict[float, float]
    reconstructions: dict[float, np.ndarray] = field(repr=False)
    mask: np.ndarray | None = field(repr=False)
    m: int
    sampling_fraction: float
    wall_clock: float
    input_hash: str
    failures: dict[float, str] = field(default_factory=dict)
    files: list[str] = field(default_factory=list)

    def errors_for(self, p: float) -> np.ndarray:
        return np.array([r["rel_error"] for r in self.rows if r["p"] == p])

    def changes_for(self, p: float) -> np.ndarray:
        return np.array([r["rel_change"] for r in self.rows if r["p"] == p])


def _ground_truth(spec: ExperimentSpec) -> np.ndarray:
    if spec.phantom == "shepp_logan":
        return shepp_logan(spec.side)
    img = load_image(spec.phantom_file)
    if img.shape != (spec.side, spec.side):
        raise InvalidSize(f"phantom file is {img.shape}, experiment asks for side {spec.side}")
    return img


def _input_hash(spec: ExperimentSpec, x0: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(json.dumps(spec_to_dict(spec), sort_keys=True, default=str).encode())
    h.update(np.ascontiguousarray(x0).tobytes())
    return h.hexdigest()[:16]


def run_fourier_experiment(spec: ExperimentSpec, write: bool = True) -> ExperimentReport:
    """Reconstruct the phantom from radial Fourier (or Gaussian) samples for each ``p``.

    Solver failures for one ``p`` are recorded in ``report.failures`` and do
    not stop the remaining runs.
    """
    start = time.perf_counter()
    img = _ground_truth(spec)
    x0 = img.reshape(-1)
    mask = None
    if spec.sensing == "radial":
        mask, m = radial_mask(spec.side, spec.lines)
        A = masked_fft_operator(mask)
    else:
        A = gaussian_operator(spec.m, spec.side ** 2, spec.seed)
        m = spec.m
    y = A.apply(x0)
    Psi = undecimated_haar_2d(spec.side, spec.levels, spec.normalization)
    solve = reweighted_lp if spec.variant == "primal" else reweighted_lp_dual

    rows, finals, recons, failures = [], {}, {}, {}
    for p in spec.p_grid:
        config = SolverConfig(**{**asdict(spec.solver), "p": p, "seed": spec.seed})
        try:
            result = solve(A, Psi, y, config, reference=x0)
        except AnalysisLpError as exc:
            failures[p] = f"{type(exc).__name__}: {exc}"
            continue
        for rec in result.per_outer:
            rows.append({"p": p, "outer_iter": rec.k, "rel_error": rec.rel_error,
                         "rel_change": rec.rel_change, "objective": rec.objective,
                         "residual": rec.residual, "gap": rec.gap,
                         "inner_converged": int(rec.inner_converged), "seed": spec.seed})
        finals[p] = result.per_outer[-1].rel_error
        recons[p] = np.real(result.x_hat).reshape(spec.side, spec.side)

    report = ExperimentReport(
        spec=spec, rows=rows, final_errors=finals, reconstructions=recons, mask=mask,
        m=m, sampling_fraction=m / spec.side ** 2, wall_clock=time.perf_counter() - start,
        input_hash=_input_hash(spec, x0), failures=failures,
    )
    if write:
        _write_fourier(report, img)
    return report


def _write_fourier(report: ExperimentReport, img) -> None:
    spec = report.spec
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cols = ["p", "outer_iter", "rel_error", "rel_change", "objective", "residual", "gap",
            "inner_converged", "seed"]
    write_csv(out / "fourier_errors.csv", cols, report.rows)
    files = [out / "fourier_errors.csv"]
    write_pgm(out / "phantom.pgm", img, 0.0, 1.0)
    files.append(out / "phantom.pgm")
    if report.mask is not None:
        save_mask(out / "mask.pgm", report.mask)
        files.append(out / "mask.pgm")
    for p, rec in report.reconstructions.items():
        path = out / f"recon_p{p:g}.pgm"
        write_pgm(path, rec, 0.0, 1.0)
        files.append(path)
    summary = [{"name": spec.name, "m": report.m,
                "sampling_fraction": report.sampling_fraction,
                "wall_clock_s": report.wall_clock, "input_hash": report.input_hash,
                "failures": json.dumps({str(k): v for k, v in report.failures.items()}),
                "config": json.dumps(spec_to_dict(spec), sort_keys=True, default=str),
                "seed": spec.seed}]
    write_csv(out / "summary.csv", list(summary[0]), summary)
    files.append(out / "summary.csv")
    report.files = [str(f) for f in files]


# ------------------------------------------------------ s-term experiment

def natural_image(side: int = 256) -> np.ndarray:
    """The scikit-image ``camera`` photograph, block-averaged to ``side x side``."""
    from skimage import data

    img = data.camera().astype(float) / 255.0
    if img.shape[0] % side:
        raise InvalidSize(f"side {side} does not divide {img.shape[0]}")
    f = img.shape[0] // side
    return img.reshape(side, f, side, f).mean(axis=(1, 3))


def psnr(reference, estimate, peak: float = 1.0) -> float:
    mse = float(np.mean((np.asarray(reference) - np.asarray(estimate)) ** 2))
    return math.inf if mse == 0 else 10 * math.log10(peak ** 2 / mse)


@dataclass
class StermReport:
    levels: int
    normalization: str
    keep_fraction: float
    stride: int
    s: int
    available: int
    rel_error: float
    psnr: float
    reconstruction: np.ndarray = field(repr=False)


def _restricted_synthesis_solve(Psi: AnalysisOperator, keep, c, tol=1e-10, maxiter=3000):
    """Least-squares estimate ``argmin ||(Psi x)_keep - c_keep||`` via CG on normal equations."""
    def restrict(v):
        out = np.zeros(Psi.N)
        out[keep] = v[keep]
        return out

    rhs = Psi.adjoint(restrict(c))

    def mv(x):
        return Psi.adjoint(restrict(Psi.forward(x)))

    op = LinearOperator((Psi.n, Psi.n), matvec=mv, dtype=float)
    x, _ = cg(op, rhs, rtol=tol, atol=0.0, maxiter=maxiter)
    return x


def run_sterm_experiment(image, levels: int, keep_fraction: float, stride: int = 1,
                         normalization: str = "unit_norm", output_dir=None,
                         seed: int = 0, reconstruction: str = "lsq") -> StermReport:
    """Best ``s``-term approximation in the redundant Haar frame, ``s = keep_fraction side^2``.

    With ``stride > 1`` only every ``stride``-th entry of the concatenated
    coefficient vector is eligible.  The full frame is inverted with its
    canonical dual.  For a strided subsystem ``reconstruction="lsq"`` uses
    the canonical dual of the subsystem itself, i.e. the least-squares fit
    to the kept coefficients; ``"scaled_dual"`` applies the full-frame
    canonical dual to the zero-filled vector and multiplies by ``stride``.
    """
    if reconstruction not in ("lsq", "scaled_dual"):
        raise InvalidRange(f"unknown reconstruction {reconstruction!r}")
    img = np.asarray(image, dtype=float)
    side = img.shape[0]
    if img.shape != (side, side):
        raise InvalidSize("image must be square")
    if not (0 < keep_fraction <= 1):
        raise InvalidRange(f"keep_fraction must lie in (0, 1], got {keep_fraction}")
    if int(stride) != stride or stride < 1:
        raise InvalidRange(f"stride must be a positive integer, got {stride}")
    Psi = undecimated_haar_2d(side, levels, normalization)
    c = Psi.forward(img.reshape(-1))
    keep = subsample_mask(Psi.N, stride)
    available = int(keep.sum())
    s = min(int(round(keep_fraction * side * side)), available)
    cs = best_s_term(np.where(keep, c, 0.0), s)
    if stride == 1 or reconstruction == "scaled_dual":
        x = stride * Psi.inverse_frame_operator(Psi.adjoint(cs))
    else:
        x = _restricted_synthesis_solve(Psi, keep, cs)
    rec = x.reshape(side, side)
    err = float(np.linalg.norm(rec - img) / np.linalg.norm(img))
    report = StermReport(levels, normalization, keep_fraction, int(stride), s, available,
                         err, psnr(img, rec), rec)
    if output_dir is not None:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        tag = f"J{levels}_keep{keep_fraction:g}_stride{stride}"
        write_pgm(out / f"sterm_{tag}.pgm", rec, 0.0, 1.0)
    return report


def sterm_rows(reports, seed: int = 0) -> list[dict]:
    return [{"levels": r.levels, "normalization": r.normalization,
             "keep_fraction": r.keep_fraction, "stride": r.stride, "s": r.s,
             "rel_error": r.rel_error, "psnr": r.psnr, "seed": seed} for r in reports]


STERM_COLUMNS = ["levels", "normalization", "keep_fraction", "stride", "s", "rel_error",
                 "psnr", "seed"]


# ------------------------------------------------------ frame-bound table

def lanczos_frame_bounds(Psi: AnalysisOperator, tol: float = 1e-10, seed: int = 0,
                         maxiter: int | None = None) -> tuple[float, float]:
    """Extreme eigenvalues of ``S = Psi^* Psi`` by Lanczos iteration.

    Raises :class:`IterationNotConverged` if ARPACK does not converge.
    """
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(Psi.n)
    op = LinearOperator((Psi.n, Psi.n), matvec=Psi.frame_operator, dtype=float)
    try:
        hi = eigsh(op, k=1, which="LA", tol=tol, v0=v0, maxiter=maxiter,
                   return_eigenvectors=False)[0]
        lo = eigsh(op, k=1, which="SA", tol=tol, v0=v0, maxiter=maxiter,
                   return_eigenvectors=False)[0]
    except ArpackNoConvergence as exc:
        raise IterationNotConverged(f"Lanczos did not converge for {Psi.name}") from exc
    return float(lo), float(hi)


FRAME_TABLE_COLUMNS = ["J", "side", "normalization", "c1", "c2", "ratio", "inv_N"]


def frame_bound_table(specs, p_grid=(0.5, 1.0), seed: int = 0) -> list[dict]:
    """Frame bounds of ``haar2d`` for each ``(side, J, normalization)`` in ``specs``.

    Rows hold ``c1, c2, c1/c2, 1/N`` and one ``q_max_p<p>`` column per ``p``.
    """
    rows = []
    for side, J, normalization in specs:
        Psi = undecimated_haar_2d(side, J, normalization)
        c1, c2 = lanczos_frame_bounds(Psi, seed=seed)
        row = {"J": J, "side": side, "normalization": normalization, "c1": c1, "c2": c2,
               "ratio": c1 / c2, "inv_N": 1.0 / Psi.N}
        for p in p_grid:
            row[f"q_max_p{p:g}"] = q_controllability((c1, c2), p, Psi.N)
        row["seed"] = seed
        rows.append(row)
    return rows


def frame_table_columns(p_grid) -> list[str]:
    return FRAME_TABLE_COLUMNS + [f"q_max_p{p:g}" for p in p_grid] + ["seed"]
