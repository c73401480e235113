"""Command line interface ``analysis-lp``.

Operators are given as ``kind:key=value,...`` strings::

    radial:side=128,lines=30        gaussian:m=24,n=32,seed=0
    identity:n=32                   file:path/to/matrix.txt
    haar2d:side=128,levels=3,norm=parseval
    haar1d:n=64,levels=3,norm=unit_norm
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AnalysisLpError, InvalidRange, NonPositiveConstant
from .experiments import (STERM_COLUMNS, frame_bound_table, frame_table_columns,
                          load_spec, natural_image, run_fourier_experiment,
                          run_sterm_experiment, sterm_rows, write_csv)
from .frames import build_frame, dual_report, load_coefficients, parse_matrix_text, save_coefficients
from .imageio import load_image, write_pgm
from .rip import estimate_localization, measurement_bound, psi_rip_profile
from .sensing import dense_operator, gaussian_operator, masked_fft_operator, radial_mask
from .solver import SolverConfig, reweighted_lp, reweighted_lp_dual
from .stability import (admissible_sparsity, dual_parameters, parseval_parameters,
                        primal_parameters, stability_constants)
from .transforms import (identity_operator, matrix_operator, undecimated_haar,
                         undecimated_haar_2d)


def parse_operator_spec(text: str) -> tuple[str, dict]:
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    if kind == "file":
        return kind, {"path": rest}
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        if "=" not in item:
            raise InvalidRange(f"bad operator parameter {item!r} in {text!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        params[k] = v
    return kind, params


def _int(params, key, default=None):
    if key not in params:
        if default is None:
            raise InvalidRange(f"missing parameter {key!r}")
        return default
    return int(params[key])


def build_sensing(text: str):
    kind, prm = parse_operator_spec(text)
    if kind == "radial":
        mask, _ = radial_mask(_int(prm, "side"), _int(prm, "lines"))
        return masked_fft_operator(mask)
    if kind == "gaussian":
        return gaussian_operator(_int(prm, "m"), _int(prm, "n"), _int(prm, "seed", 0))
    if kind == "identity":
        return dense_operator(np.eye(_int(prm, "n")), kind="identity")
    if kind == "file":
        return dense_operator(parse_matrix_text(Path(prm["path"]).read_text()))
    raise InvalidRange(f"unknown sensing operator {kind!r}")


def build_transform(text: str):
    """Returns ``(operator, frame_or_None)``."""
    kind, prm = parse_operator_spec(text)
    norm = prm.get("norm", "parseval")
    if kind == "haar2d":
        return undecimated_haar_2d(_int(prm, "side"), _int(prm, "levels"), norm), None
    if kind == "haar1d":
        return undecimated_haar(_int(prm, "n"), _int(prm, "levels"), norm), None
    if kind == "identity":
        frame = build_frame(np.eye(_int(prm, "n")))
        return identity_operator(frame.n), frame
    if kind == "file":
        frame = build_frame(parse_matrix_text(Path(prm["path"]).read_text()))
        return matrix_operator(frame), frame
    raise InvalidRange(f"unknown transform {kind!r}")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


# ------------------------------------------------------------ commands

def cmd_fourier(args) -> int:
    spec = load_spec(args.spec)
    if args.output_dir:
        from dataclasses import replace

        spec = replace(spec, output_dir=args.output_dir)
    report = run_fourier_experiment(spec)
    for p, err in report.final_errors.items():
        print(f"p={p:g} final rel_error={err:.6g}")
    for p, msg in report.failures.items():
        print(f"p={p:g} failed: {msg}", file=sys.stderr)
    print(f"wrote {len(report.files)} files to {spec.output_dir}")
    return 1 if report.failures and not report.final_errors else 0


def cmd_sterm(args) -> int:
    if args.image == "camera":
        img = natural_image(args.side)
    else:
        img = load_image(args.image)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for J in _ints(args.levels):
        for item in args.configs.split(","):
            keep, stride = item.split(":")
            rep = run_sterm_experiment(img, J, float(keep), int(stride), args.norm,
                                       output_dir=out, reconstruction=args.reconstruction)
            reports.append(rep)
            print(f"J={J} keep={float(keep):g} stride={int(stride)} "
                  f"rel_error={rep.rel_error:.5f} psnr={rep.psnr:.2f}")
    write_csv(out / "sterm.csv", STERM_COLUMNS, sterm_rows(reports, args.seed))
    return 0


def cmd_frame_table(args) -> int:
    specs = []
    for item in args.specs.split(","):
        side, J = item.split(":")
        specs.append((int(side), int(J), args.norm))
    p_grid = _floats(args.p_grid)
    rows = frame_bound_table(specs, p_grid, args.seed)
    write_csv(args.out, frame_table_columns(p_grid), rows)
    for r in rows:
        print(f"side={r['side']} J={r['J']} c1/c2={r['ratio']:.6g} 1/N={r['inv_N']:.6g}")
    return 0


def _frame_constants(Psi, frame):
    """``(c1, d2)`` for the measurement bound."""
    if frame is not None:
        rep = dual_report(frame)
        return frame.bounds[0], rep.d2
    if Psi.is_parseval:
        return 1.0, 1.0
    c1 = float(Psi.frame_spectrum.min()) if Psi.frame_spectrum is not None else None
    d2 = Psi.identifiable_constants[1] if Psi.identifiable_constants else None
    return c1, d2


def cmd_rip(args) -> int:
    A = build_sensing(args.operator)
    Psi, frame = build_transform(args.frame)
    c1, d2 = _frame_constants(Psi, frame)
    if args.c1 is not None:
        c1 = args.c1
    if c1 is None:
        raise InvalidRange("lower frame bound unknown; pass --c1")
    rows = []
    for est in psi_rip_profile(A, Psi, _ints(args.s), args.trials, args.seed):
        loc = estimate_localization(Psi, est.s, args.trials, args.seed)
        L = max(loc.L_hat, 1e-300)
        bounds = measurement_bound(args.K, c1, args.delta, est.s, L, Psi.N, args.gamma,
                                   args.C, d2=d2, form=args.form)
        ident = bounds.get("identifiable_bound")
        rows.append({"s": est.s, "trials": est.trials, "delta_hat": est.delta_hat,
                     "L_hat": loc.L_hat, "m_bound_primal": bounds["primal_bound"].m_required,
                     "m_bound_identifiable": "" if ident is None else ident.m_required,
                     "seed": args.seed})
        print(f"s={est.s} delta_hat={est.delta_hat:.6g} L_hat={loc.L_hat:.6g}")
    cols = ["s", "trials", "delta_hat", "L_hat", "m_bound_primal", "m_bound_identifiable", "seed"]
    write_csv(args.out, cols, rows)
    return 0


CONSTANTS_COLUMNS = ["p", "variant", "gamma1", "gamma2_param", "rho", "M", "Gamma1", "Gamma2",
                     "C1", "C2", "s_max", "nu", "status", "seed"]


def constants_rows(variants, p_grid, s=1, delta=0.0, gamma2=1e-4, c1=1.0, c2=1.0, d1=1.0,
                   d2=1.0, q=None, N=None, exponent="verbatim", nu_form="theorem", seed=0):
    rows = []
    for variant in variants:
        for p in p_grid:
            if variant == "primal":
                g1, M = primal_parameters(p, s, c1, c2, d1, d2, exponent)
            elif variant == "parseval":
                g1, M = parseval_parameters(p, s)
            else:
                g1, M = dual_parameters(p, s, c1)
            row = {"p": p, "variant": variant, "gamma1": g1, "gamma2_param": gamma2,
                   "rho": s / M, "M": M, "seed": seed}
            try:
                sc = stability_constants(variant, p, s, M, gamma1=g1, gamma2=gamma2,
                                         delta_sM=delta, c1=c1, c2=c2, d1=d1, d2=d2)
                row.update(Gamma1=sc.Gamma1, Gamma2=sc.Gamma2, C1=sc.C1, C2=sc.C2, status="ok")
            except NonPositiveConstant as exc:
                row.update(Gamma1=math.nan, Gamma2=math.nan, C1=math.nan, C2=math.nan,
                           status=f"nonpositive_{exc.which}")
            qq = N if q is None else q
            if variant == "dual" or qq is not None:
                adm = admissible_sparsity(variant, p, c1=c1, c2=c2, d2=d2, q=qq, N=N,
                                          nu_form=nu_form)
                row.update(s_max=adm.s_max, nu=adm.nu)
            else:
                row.update(s_max="", nu="")
            rows.append(row)
    return rows


def cmd_constants(args) -> int:
    variants = ["primal", "parseval", "dual"] if args.variant == "all" else [args.variant]
    if "dual" in variants and args.N is None:
        raise InvalidRange("the dual variant needs --N")
    rows = constants_rows(variants, _floats(args.p_grid), args.s, args.delta, args.gamma2,
                          args.c1, args.c2, args.d1, args.d2, args.q, args.N,
                          args.exponent, args.nu_form, args.seed)
    write_csv(args.out, CONSTANTS_COLUMNS, rows)
    bad = sum(r["status"] != "ok" for r in rows)
    print(f"wrote {len(rows)} rows to {args.out} ({bad} with non-positive constants)")
    return 0


def cmd_solve(args) -> int:
    A = build_sensing(args.operator)
    Psi, _ = build_transform(args.frame)
    y = load_coefficients(args.input)
    config = SolverConfig(p=args.p, mu=args.mu, nu=args.nu, epsilon=args.epsilon,
                          outer_iters=args.outer_iters, inner_max_iters=args.inner_max_iters,
                          inner_tol=args.inner_tol, seed=args.seed)
    solve = reweighted_lp if args.variant == "primal" else reweighted_lp_dual
    result = solve(A, Psi, y, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    x = result.x_hat
    save_coefficients(x, out / "solution.txt")
    rows = [{"outer_iter": r.k, "objective": r.objective, "residual": r.residual,
             "rel_change": r.rel_change, "gap": r.gap, "inner_iterations": r.inner_iterations,
             "inner_converged": int(r.inner_converged), "digest": r.digest,
             "seed": args.seed} for r in result.per_outer]
    write_csv(out / "diagnostics.csv", list(rows[0]), rows)
    if Psi.image_shape is not None and len(Psi.image_shape) == 2:
        write_pgm(out / "solution.pgm", np.real(x).reshape(Psi.image_shape))
    (out / "config.json").write_text(json.dumps({**vars(args), "mu_used": result.mu},
                                                default=str, indent=1))
    print(f"converged={result.converged} residual={rows[-1]['residual']:.3g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="analysis-lp",
                                 description="Analysis-based lp recovery experiments.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fourier-exp", help="radial Fourier reconstruction over a p-grid")
    f.add_argument("--spec", required=True)
    f.add_argument("--output-dir")
    f.set_defaults(func=cmd_fourier)

    t = sub.add_parser("sterm-exp", help="best s-term approximation in redundant Haar frames")
    t.add_argument("--image", default="camera", help="PGM file or 'camera'")
    t.add_argument("--side", type=int, default=256)
    t.add_argument("--levels", default="2,4")
    t.add_argument("--configs", default="0.9:1,0.3:4", help="keep:stride pairs")
    t.add_argument("--norm", default="unit_norm", choices=["unit_norm", "parseval"])
    t.add_argument("--reconstruction", default="lsq", choices=["lsq", "scaled_dual"])
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", default="results/sterm")
    t.set_defaults(func=cmd_sterm)

    b = sub.add_parser("frame-table", help="frame bounds and q_max of haar2d frames")
    b.add_argument("--specs", default="64:1,64:2,64:3,64:4", help="side:J entries")
    b.add_argument("--norm", default="unit_norm", choices=["unit_norm", "parseval"])
    b.add_argument("--p-grid", default="0.5,1.0")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default="frame_table.csv")
    b.set_defaults(func=cmd_frame_table)

    r = sub.add_parser("rip-estimate", help="Monte-Carlo Psi-RIP and localization estimates")
    r.add_argument("--operator", required=True)
    r.add_argument("--frame", required=True)
    r.add_argument("--s", default="1,2,4")
    r.add_argument("--trials", type=int, default=100)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--K", type=float, default=1.0)
    r.add_argument("--c1", type=float)
    r.add_argument("--delta", type=float, default=0.5)
    r.add_argument("--gamma", type=float, default=0.01)
    r.add_argument("--C", type=float, default=1.0)
    r.add_argument("--form", default="theorem", choices=["theorem", "appendix"])
    r.add_argument("--out", default="rip.csv")
    r.set_defaults(func=cmd_rip)

    c = sub.add_parser("constants", help="stability constants over a p-grid")
    c.add_argument("--variant", default="all", choices=["primal", "parseval", "dual", "all"])
    c.add_argument("--p-grid", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")
    c.add_argument("--s", type=int, default=1)
    c.add_argument("--delta", type=float, default=0.0)
    c.add_argument("--gamma2", type=float, default=1e-4)
    for name in ("c1", "c2", "d1", "d2"):
        c.add_argument(f"--{name}", type=float, default=1.0)
    c.add_argument("--q", type=float)
    c.add_argument("--N", type=int)
    c.add_argument("--exponent", default="verbatim", choices=["verbatim", "reciprocal"])
    c.add_argument("--nu-form", default="theorem", choices=["theorem", "proof"])
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", default="constants.csv")
    c.set_defaults(func=cmd_constants)

    s = sub.add_parser("solve", help="reweighted lp reconstruction from measurements")
    s.add_argument("--p", type=float, default=1.0)
    s.add_argument("--mu", type=float)
    s.add_argument("--nu", type=float, default=1e-2)
    s.add_argument("--epsilon", type=float, default=0.0)
    s.add_argument("--outer-iters", type=int, default=10)
    s.add_argument("--inner-tol", type=float, default=1e-4)
    s.add_argument("--inner-max-iters", type=int, default=5000)
    s.add_argument("--variant", default="primal", choices=["primal", "dual"])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--input", required=True, help="measurement vector file")
    s.add_argument("--operator", required=True)
    s.add_argument("--frame", required=True)
    s.add_argument("--out", default="solve_out")
    s.set_defaults(func=cmd_solve)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (AnalysisLpError, FileNotFoundError) as exc:
        print(f"analysis-lp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
