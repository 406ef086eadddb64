"""Command line front end for assembling, basis building and experiment runs."""

import os

# Apply the thread cap before numpy initializes its BLAS pools.  Effective
# when this module is the first numpy importer in the process, which is the
# normal situation for the console entry point; otherwise it is a no-op.
_threads = os.environ.get("OPTBASIS_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import obf
from .basis import RsvdParams, defining_relation_errors
from .bayes import check_reconstruction_bound, nwidth_eval, trace_objective
from .config import ELLIPTIC_FAMILIES, config_to_dict, load_config
from .exceptions import BoundViolation, OptbasisError
from .experiments import (
    build_problem,
    compute_problem_basis,
    error_curve,
    nonlinear_error_curve,
    oracle_problem_basis,
    reference_solution,
)
from .linalg import factorize

SWEEP_EPS_VALUES = (1.0, 0.25, 0.0625)


def _fmt(x):
    return format(float(x), ".16e")


def _write_csv(path, header, rows):
    lines = [header]
    for row in rows:
        parts = [str(row[0])] + [_fmt(v) for v in row[1:]]
        lines.append(",".join(parts))
    Path(path).write_text("\n".join(lines) + "\n")


def _load_config(args):
    config = load_config(args.config)
    if getattr(args, "paper_scale", False):
        config = config.with_paper_scale()
    return config


def _rsvd_params(config, args):
    params = config.rsvd
    updates = {}
    if getattr(args, "rank", None) is not None:
        updates["rank"] = args.rank
    if getattr(args, "oversample", None) is not None:
        updates["oversampling"] = args.oversample
    if getattr(args, "power", None) is not None:
        updates["power"] = args.power
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    return replace(params, **updates) if updates else params


def _nonlinear_settings(config, args):
    settings = config.nonlinear
    updates = {}
    if getattr(args, "tol", None) is not None:
        updates["tol"] = args.tol
    if getattr(args, "max_iter", None) is not None:
        updates["max_iter"] = args.max_iter
    if getattr(args, "relax", None) is not None:
        updates["relax"] = args.relax
    return replace(settings, **updates) if updates else settings


class _Checks:
    """Collects named pass/fail lines and the overall exit status."""

    def __init__(self):
        self.failed = 0

    def record(self, name, ok, detail=""):
        tag = "ok" if ok else "FAIL"
        suffix = f" ({detail})" if detail else ""
        print(f"{tag:4s} {name}{suffix}")
        if not ok:
            self.failed += 1

    def exit_code(self):
        return 1 if self.failed else 0


def cmd_assemble_check(args):
    config = _load_config(args)
    setup = build_problem(config)
    checks = _Checks()

    try:
        solver = factorize(setup.operator)
        checks.record("operator factorizes", True, f"N = {setup.n_dofs}")
    except OptbasisError as exc:
        checks.record("operator factorizes", False, str(exc))
        return checks.exit_code()

    rng = np.random.Generator(np.random.Philox(1234))
    v = rng.standard_normal(setup.n_dofs)
    roundtrip = np.linalg.norm(setup.fx.solve(setup.fx.apply(v)) - v)
    checks.record("weight factor roundtrip", roundtrip <= 1e-10 * np.linalg.norm(v),
                  f"residual {roundtrip:.3e}")

    if config.family in ELLIPTIC_FAMILIES:
        asym = abs(setup.operator - setup.operator.T).max()
        checks.record("operator symmetric", asym == 0.0, f"defect {asym:.3e}")
        ones = np.ones(setup.n_dofs)
        u = solver.solve(ones)
        checks.record("maximum principle", u.min() >= -1e-12, f"min {u.min():.3e}")
        n = config.m_intervals - 1
        idx = np.arange(n * n).reshape(n, n)
        inner = idx[1:-1, 1:-1].ravel()
        if inner.size:
            sums = np.asarray(setup.operator.sum(axis=1)).ravel()[inner]
            scale = abs(setup.operator.diagonal()).max()
            checks.record("interior row sums vanish", abs(sums).max() <= 1e-9 * scale,
                          f"max {abs(sums).max():.3e}")
    elif config.is_rte:
        from .transport import hg_kernel_matrix

        kernel = hg_kernel_matrix(config.g, config.n_angles)
        row_defect = abs(kernel.sum(axis=1) / config.n_angles - 1.0).max()
        checks.record("kernel rows normalized", row_defect <= 1e-12,
                      f"defect {row_defect:.3e}")
        coo = setup.operator.tocoo()
        off = coo.data[coo.row != coo.col]
        checks.record("off-diagonal signs", off.max() <= 1e-12 if off.size else True)
        checks.record("diagonal positive", setup.operator.diagonal().min() > 0.0)
        zero = solver.solve(np.zeros(setup.n_dofs))
        checks.record("zero source gives zero solution", abs(zero).max() == 0.0)

    return checks.exit_code()


def _relation_summary(basis, solver, setup):
    r = basis.rank
    sample = sorted(set([0, r // 2, r - 1]) | set(range(0, r, max(1, r // 8))))
    return defining_relation_errors(basis, solver, setup.fx, setup.fy, sample)


def cmd_basis(args):
    config = _load_config(args)
    setup = build_problem(config)
    solver = factorize(setup.operator)
    basis = compute_problem_basis(setup, _rsvd_params(config, args), solver)
    errors = _relation_summary(basis, solver, setup)
    for name, value in errors.items():
        print(f"{name}: {value:.3e}")
    side = obf.write_basis(args.out, basis, config_to_dict(config))
    print(f"wrote rank-{basis.rank} basis to {args.out} (sidecar {side})")
    return 0


def cmd_sv_decay(args):
    config = _load_config(args)
    setup = build_problem(config)
    basis = compute_problem_basis(setup, _rsvd_params(config, args))
    lam = basis.singular_values
    rows = [(i + 1, lam[i] / lam[0]) for i in range(basis.rank)]
    _write_csv(args.out, "i,lambda_rel", rows)
    print(f"wrote {len(rows)} singular value ratios to {args.out}")
    return 0


def _curve_grid(config, setup):
    if config.family in ELLIPTIC_FAMILIES:
        return setup.grid
    return None


def cmd_solve_linear(args):
    config = _load_config(args)
    if config.is_semilinear:
        print("error: solve-linear needs a linear problem family", file=sys.stderr)
        return 2
    setup = build_problem(config)
    solver = factorize(setup.operator)
    basis = compute_problem_basis(setup, _rsvd_params(config, args), solver)
    u_ref = reference_solution(setup, solver)
    if np.linalg.norm(u_ref) == 0.0:
        print("error: reference solution vanishes, relative errors undefined",
              file=sys.stderr)
        return 2
    nmax = args.nmax if args.nmax is not None else basis.rank
    nmax = min(nmax, basis.rank)
    curve = error_curve(u_ref, basis, setup.fx, setup.source,
                        list(range(1, nmax + 1)), grid=_curve_grid(config, setup))
    _write_csv(args.out, curve.header(), curve.rows())
    print(f"wrote error curve for n = 1..{nmax} to {args.out}")
    return 0


def cmd_solve_nonlinear(args):
    config = _load_config(args)
    if not config.is_semilinear:
        print("error: solve-nonlinear needs a semilinear problem family", file=sys.stderr)
        return 2
    setup = build_problem(config)
    solver = factorize(setup.operator)
    basis = compute_problem_basis(setup, _rsvd_params(config, args), solver)
    settings = _nonlinear_settings(config, args)
    u_ref = reference_solution(setup, solver)
    nmax = args.nmax if args.nmax is not None else basis.rank
    nmax = min(nmax, basis.rank)
    curve = nonlinear_error_curve(u_ref, basis, setup.fx, setup.source, setup.term,
                                  list(range(1, nmax + 1)), settings,
                                  grid=_curve_grid(config, setup))
    _write_csv(args.out, curve.header(), curve.rows())
    print(f"wrote fixed-point error curve for n = 1..{nmax} to {args.out}")
    return 0


def cmd_oracle_svd(args):
    config = _load_config(args)
    setup = build_problem(config)
    basis = oracle_problem_basis(setup)
    side = obf.write_basis(args.out, basis, config_to_dict(config))
    head = ", ".join(f"{v:.6e}" for v in basis.singular_values[:10])
    print(f"leading singular values: {head}")
    print(f"wrote rank-{basis.rank} oracle basis to {args.out} (sidecar {side})")
    return 0


def cmd_nwidth_check(args):
    config = _load_config(args)
    setup = build_problem(config)
    solver = factorize(setup.operator)
    green = solver.solve(np.eye(setup.n_dofs))
    basis = oracle_problem_basis(setup)
    lam = basis.singular_values
    checks = _Checks()
    rng = np.random.Generator(np.random.Philox(777))
    for n in range(1, min(5, setup.n_dofs - 1) + 1):
        width = nwidth_eval(green, setup.fx, setup.fy, basis.right_vectors[:, :n])
        checks.record(f"width at optimal n = {n} matches next singular value",
                      abs(width - lam[n]) <= 1e-9,
                      f"|{width:.6e} - {lam[n]:.6e}|")
        worst = 0.0
        ok = True
        for _ in range(args.samples):
            cand = rng.standard_normal((setup.n_dofs, n))
            w = nwidth_eval(green, setup.fx, setup.fy, cand)
            worst = max(worst, lam[n] - w)
            if w < lam[n] - 1e-9:
                ok = False
        checks.record(f"random candidates dominated at n = {n}", ok,
                      f"worst slack {worst:.3e}")
    return checks.exit_code()


def cmd_bayes_check(args):
    config = _load_config(args)
    setup = build_problem(config)
    solver = factorize(setup.operator)
    green = solver.solve(np.eye(setup.n_dofs))
    checks = _Checks()
    svals = np.linalg.svd(green, compute_uv=False)
    u_left = np.linalg.svd(green)[0]
    n = min(4, setup.n_dofs - 1)
    report = trace_objective(green, u_left[:, :n])
    closed = float(np.sum(svals[:n] ** 2))
    checks.record("objective at optimum matches closed form",
                  abs(report.objective - closed) <= 1e-9 * max(1.0, closed),
                  f"gap {abs(report.objective - closed):.3e}")
    total = float(np.trace(green @ green.T))
    checks.record("trace conservation",
                  abs(report.total_trace - total) <= 1e-8 * max(1.0, total),
                  f"gap {abs(report.total_trace - total):.3e}")
    rng = np.random.Generator(np.random.Philox(4242))
    dominated = True
    violations = 0
    for _ in range(args.samples):
        m = rng.standard_normal((setup.n_dofs, n))
        if trace_objective(green, m).objective > report.objective + 1e-9:
            dominated = False
        f = rng.standard_normal(setup.n_dofs)
        try:
            check_reconstruction_bound(green, m, f)
        except BoundViolation:
            violations += 1
    checks.record("random observations dominated", dominated)
    checks.record("reconstruction bound holds", violations == 0,
                  f"{violations} violations in {args.samples} draws")
    return checks.exit_code()


def cmd_sweep(args):
    config = _load_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for eps in SWEEP_EPS_VALUES:
        if config.is_rte:
            swept = replace(config, eps1=eps, eps2=eps)
        elif config.family in ELLIPTIC_FAMILIES:
            swept = replace(config, eps=eps)
        else:
            print("error: sweep needs a PDE problem family", file=sys.stderr)
            return 2
        setup = build_problem(swept)
        basis = compute_problem_basis(setup, _rsvd_params(swept, args))
        lam = basis.singular_values
        rows = [(i + 1, lam[i] / lam[0]) for i in range(basis.rank)]
        path = out_dir / f"sv_decay_eps{eps:g}.csv"
        _write_csv(path, "i,lambda_rel", rows)
        written.append(path)
    for path in written:
        print(f"wrote {path}")
    return 0


def _add_common(sub, out_required=False, rsvd=False, nmax=False, nonlinear=False,
                samples=None):
    sub.add_argument("--config", required=True, help="path to a JSON experiment config")
    sub.add_argument("--paper-scale", action="store_true",
                     help="override the grid to the full-resolution setting")
    if out_required:
        sub.add_argument("--out", required=True, help="output file or directory")
    if rsvd:
        sub.add_argument("--rank", type=int, help="basis rank override")
        sub.add_argument("--oversample", type=int, help="extra sketch columns")
        sub.add_argument("--power", type=int, help="subspace iteration passes")
        sub.add_argument("--seed", type=int, help="sketch seed override")
    if nmax:
        sub.add_argument("--nmax", type=int, help="largest truncation level in the curve")
    if nonlinear:
        sub.add_argument("--tol", type=float, help="fixed-point step tolerance")
        sub.add_argument("--max-iter", type=int, dest="max_iter",
                         help="fixed-point iteration budget")
        sub.add_argument("--relax", type=float, help="fixed-point relaxation factor")
    if samples is not None:
        sub.add_argument("--samples", type=int, default=samples,
                         help="number of random draws")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="optbasis",
        description="Reduced bases for discretized PDE solution operators",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("assemble-check",
                              help="assemble a problem and run structural checks")
    _add_common(sub)
    sub.set_defaults(func=cmd_assemble_check)

    sub = commands.add_parser("basis", help="compute a randomized basis and write it")
    _add_common(sub, out_required=True, rsvd=True)
    sub.set_defaults(func=cmd_basis)

    sub = commands.add_parser("sv-decay", help="write relative singular value decay")
    _add_common(sub, out_required=True, rsvd=True)
    sub.set_defaults(func=cmd_sv_decay)

    sub = commands.add_parser("solve-linear",
                              help="projection error curve against a direct solve")
    _add_common(sub, out_required=True, rsvd=True, nmax=True)
    sub.set_defaults(func=cmd_solve_linear)

    sub = commands.add_parser("solve-nonlinear",
                              help="fixed-point error curve against a Newton solve")
    _add_common(sub, out_required=True, rsvd=True, nmax=True, nonlinear=True)
    sub.set_defaults(func=cmd_solve_nonlinear)

    sub = commands.add_parser("oracle-svd",
                              help="dense SVD oracle basis for small problems")
    _add_common(sub, out_required=True)
    sub.set_defaults(func=cmd_oracle_svd)

    sub = commands.add_parser("nwidth-check",
                              help="verify the width identity and subspace optimality")
    _add_common(sub, samples=100)
    sub.set_defaults(func=cmd_nwidth_check)

    sub = commands.add_parser("bayes-check",
                              help="verify the trace objective and reconstruction bound")
    _add_common(sub, samples=100)
    sub.set_defaults(func=cmd_bayes_check)

    sub = commands.add_parser("sweep",
                              help="singular value decay across the scale separation sweep")
    _add_common(sub, out_required=True, rsvd=True)
    sub.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OptbasisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
