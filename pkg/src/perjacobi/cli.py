"""Command-line front end.

Exit status: 0 on success, 1 when arguments or input files are invalid,
2 when a computation fails or a verification does not hold.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import examples as ex
from .cpoly import CPoly, RootSet, max_coeff_diff
from .floquet import (
    branch_points,
    chi_gamma_wronskian,
    monodromy,
    unperturbed_discriminant,
    wronskian,
)
from .inverse import (
    InverseProblem,
    ambiguity_demo,
    solve_inverse,
    two_spectra_reconstruct,
)
from .operator import (
    SignPattern,
    borg_family,
    load_operator,
    normalize,
    reflect,
    shift,
    sign_flip,
    unperturbed,
)
from .spectral import (
    antiperiodic_eigenvalues,
    borg_classify,
    characteristic_polynomial,
    classify_eigenvalue,
    dirichlet_spectrum,
    double_period_matrix,
    floquet_matrix,
    floquet_spectrum,
    interval_spectrum_check,
    jordan_structure,
    periodic_eigenvalues,
    trace_identities,
    trace_spectrum,
)
from .toda import dirichlet_evolution_check, flow_invariants, integrate, trajectory_csv

VERBS = ("discriminant", "spectrum", "eigs", "dirichlet", "classify", "inverse", "reconstruct", "toda", "verify", "demo")
DEMOS = ("example1", "example2", "example3i", "example3ii", "example3iii", "example4", "pathological", "borg")
NEEDS_INPUT = set(VERBS) - {"demo"}


class ValidationError(Exception):
    pass


class ComputationError(Exception):
    pass


def fmt_real(x):
    s = f"{x:.12g}"
    return "0" if s == "-0" else s


def fmt_complex(z):
    """``re+imi`` with 12 significant digits; parts below ``1e-12 |z|`` are dropped."""
    z = complex(z)
    tiny = 1e-12 * max(1.0, abs(z))
    re = z.real if abs(z.real) > tiny else 0.0
    im = z.imag if abs(z.imag) > tiny else 0.0
    if im == 0.0:
        return fmt_real(re)
    sign = "-" if im < 0 else "+"
    return f"{fmt_real(re)}{sign}{fmt_real(abs(im))}i"


def _pair(z):
    return [float(z.real), float(z.imag)]


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def build_parser():
    p = _Parser(prog="perjacobi", description="Spectral computations for periodic Jacobi operators.")
    p.add_argument("verb", choices=VERBS)
    p.add_argument("name", nargs="?", help="example name for 'demo'")
    p.add_argument("--input", help="operator, problem or spectra JSON file")
    p.add_argument("--output", help="write JSON or CSV here instead of stdout")
    p.add_argument("--kappa", type=float, help="Floquet parameter in [0, pi] for 'eigs'")
    p.add_argument("--slices", type=int, default=256, help="kappa slices for spectrum tracing")
    p.add_argument("--starts", type=int, help="multistart count for 'inverse' (default 200 N!)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t-end", type=float, default=1.0, dest="t_end")
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--svg", help="SVG scatter of the spectrum arcs")
    p.add_argument("--threads", type=int, default=1)
    return p


def _validate(args):
    if args.verb in NEEDS_INPUT and not args.input:
        raise ValidationError(f"'{args.verb}' needs --input")
    if args.verb == "demo":
        if args.name is not None and args.name not in DEMOS + ("all",):
            raise ValidationError(f"unknown demo '{args.name}'; choose from {', '.join(DEMOS)} or all")
    elif args.name is not None:
        raise ValidationError(f"unexpected argument '{args.name}'")
    if args.slices < 2:
        raise ValidationError("--slices must be at least 2")
    if args.starts is not None and args.starts < 1:
        raise ValidationError("--starts must be positive")
    if args.threads < 1:
        raise ValidationError("--threads must be positive")
    if not (args.step > 0 and math.isfinite(args.step)):
        raise ValidationError("--step must be positive")
    if not (args.t_end > 0 and math.isfinite(args.t_end)):
        raise ValidationError("--t-end must be positive")
    if args.kappa is not None and not 0 <= args.kappa <= math.pi:
        raise ValidationError("--kappa must lie in [0, pi]")
    if args.svg and args.verb != "spectrum":
        raise ValidationError("--svg applies to 'spectrum' only")


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc


def _load_op(path):
    _read_json(path)
    try:
        return load_operator(path)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def _emit(args, text, out):
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        out.write(text)


def svg_scatter(arcs, width=480, height=480):
    """Minimal SVG of spectrum arcs as polylines, fitted with a 5% margin."""
    pts = arcs.points()
    if len(pts) == 0:
        pts = np.array([0j])
    x0, x1 = pts.real.min(), pts.real.max()
    y0, y1 = pts.imag.min(), pts.imag.max()
    span = max(x1 - x0, y1 - y0, 1e-9)
    m = 0.05 * span
    vx, vy, vw, vh = x0 - m, -(y1 + m), (x1 - x0) + 2 * m or span, (y1 - y0) + 2 * m or span
    stroke = span / 300
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="{vx:.6g} {vy:.6g} {vw:.6g} {vh:.6g}">'
    )
    out = [head]
    for arc in arcs.arcs:
        coords = " ".join(f"{z.real:.6g},{-z.imag:.6g}" for z in arc.lam)
        out.append(
            f'<polyline fill="none" stroke="black" stroke-width="{stroke:.3g}" points="{coords}"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_discriminant(args, out):
    op = _load_op(args.input)
    md = monodromy(op)
    c = md.delta.coeffs
    out.write(" ".join(fmt_complex(z) for z in c[::-1]) + "\n")
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(_dump({"N": op.N, "delta": [_pair(z) for z in c]}))


def cmd_spectrum(args, out):
    op = _load_op(args.input)
    arcs = trace_spectrum(monodromy(op), args.slices, threads=args.threads)
    _emit(args, arcs.to_csv(), out)
    if args.svg:
        with open(args.svg, "w") as fh:
            fh.write(svg_scatter(arcs))


def cmd_eigs(args, out):
    op = _load_op(args.input)
    md = monodromy(op)
    fams = [periodic_eigenvalues(md), antiperiodic_eigenvalues(md)]
    if args.kappa is not None:
        fams.append(floquet_spectrum(md, args.kappa))
    _emit(args, _dump({"families": [f.to_dict() for f in fams]}), out)


def cmd_dirichlet(args, out):
    op = _load_op(args.input)
    if op.N < 2:
        raise ValidationError("the Dirichlet problem needs N >= 2")
    md = monodromy(op)
    fam = dirichlet_spectrum(op, md)
    tr = trace_identities(op, md)
    _emit(args, _dump({"dirichlet": fam.to_dict(), "trace_residuals": tr.residuals}), out)


def cmd_classify(args, out):
    op = _load_op(args.input)
    md = monodromy(op)
    bp = branch_points(md)
    eig = []
    for z, _ in bp.all_roots:
        c = classify_eigenvalue(op, z, md)
        eig.append(
            {
                "lambda": _pair(c.lam),
                "multiplier": c.multiplier,
                "structure": c.structure,
                "branch_point": c.branch_point,
                "pathology_second_kind": c.pathology_second_kind,
            }
        )
    info = jordan_structure(double_period_matrix(op), bp.all_roots)
    jordan = [
        {
            "lambda": _pair(j.value),
            "algebraic": j.algebraic,
            "geometric": j.geometric,
            "generalized": j.generalized,
            "borderline": j.borderline,
        }
        for j in info
    ]
    bc = borg_classify(op, args.slices)
    borg = {"outcome": bc.outcome, "reason": bc.reason, "checks": bc.checks}
    if bc.k is not None:
        borg["k"] = bc.k
        borg["s"] = _pair(bc.s)
    _emit(args, _dump({"eigenvalues": eig, "jordan": jordan, "borg": borg}), out)


def cmd_inverse(args, out):
    try:
        problem = InverseProblem.from_dict(_read_json(args.input))
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    res = solve_inverse(problem, args.starts, args.seed, args.threads)
    _emit(args, _dump(res.to_dict()), out)


def _read_roots(d, key):
    try:
        vals = np.array([complex(float(r), float(i)) for r, i in d[key]])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"'{key}' must be a list of [re, im] pairs") from exc
    return RootSet(vals, np.ones(len(vals), dtype=int), 0.0)


def cmd_reconstruct(args, out):
    d = _read_json(args.input)
    mu, nu = _read_roots(d, "zeros_n"), _read_roots(d, "zeros_n1")
    if len(nu.values) < 1 or len(mu.values) != len(nu.values) - 1:
        raise ValidationError("need N-1 values in 'zeros_n' and N values in 'zeros_n1'")
    b = two_spectra_reconstruct(mu, nu)
    _emit(args, _dump({"potential": [_pair(z) for z in b]}), out)


def cmd_toda(args, out):
    op = _load_op(args.input)
    traj = integrate(op, args.t_end, args.step)
    report = {
        "discriminant_drift": traj.discriminant_drift,
        "aborted": traj.aborted,
        "diagnostic": traj.diagnostic,
        "invariants": flow_invariants(traj),
    }
    # states just before an abort are near a singularity; only audit clean runs
    if not traj.aborted and len(traj.states) >= 3 and op.N >= 2:
        ev = dirichlet_evolution_check(traj)
        report["dirichlet_evolution"] = {
            "max_relative_residual": ev.max_relative_residual,
            "checked": ev.checked,
            "skipped": ev.skipped,
        }
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(trajectory_csv(traj))
    out.write(_dump(report))
    if traj.aborted:
        raise ComputationError(traj.diagnostic)


def verify_operator(op, rng, kappas=10, tol=1e-7):
    """Run the identity suite on one operator; returns ``{name: residual}``."""
    N = op.N
    md = monodromy(op)
    fs = md.fs
    one = CPoly([1.0])
    scale = max(1.0, float(np.abs(md.delta.coeffs).max()))
    res = {
        "wronskian": max(max_coeff_diff(wronskian(fs, n), one) for n in range(-1, N + 1)),
        "chi_gamma_wronskian": max(
            max_coeff_diff(chi_gamma_wronskian(fs, n), CPoly([op.a_at(0) / op.a_at(n)])) for n in range(-1, N + 1)
        ),
        "det_monodromy": max_coeff_diff(md.det_S(), one),
        "two_discriminant_forms": max_coeff_diff(md.delta, fs.chi[N] + fs.gamma[N + 1]) / scale,
    }
    # the determinant identities hold for the normalized operator
    opn, _ = normalize(op)
    mdn = monodromy(opn)
    sn = max(1.0, float(np.abs(mdn.delta.coeffs).max()))
    res["floquet_matrix"] = max(
        max_coeff_diff(characteristic_polynomial(floquet_matrix(opn, k)), mdn.delta - 2 * np.cos(k)) / sn
        for k in rng.uniform(0, np.pi, kappas)
    )
    res["double_period_matrix"] = max_coeff_diff(
        characteristic_polynomial(double_period_matrix(opn)), mdn.delta_squared_minus_4
    ) / (sn * sn)
    res["shift"] = max(max_coeff_diff(monodromy(shift(op, l)).delta, md.delta) for l in range(N)) / scale
    res["reflect"] = max_coeff_diff(monodromy(reflect(op)).delta, md.delta) / scale
    tau = SignPattern(rng.choice([-1, 1], size=N))
    res["sign_flip"] = max_coeff_diff(monodromy(sign_flip(op, tau)).delta, (-1) ** tau.nu * md.delta) / scale
    if N >= 2:
        tr = trace_identities(op, md)
        res["trace"] = tr.max_residual() / max(1.0, float(np.abs(op.b).max()))
    return res


def cmd_verify(args, out):
    op = _load_op(args.input)
    res = verify_operator(op, np.random.default_rng(args.seed))
    bad = sorted(k for k, v in res.items() if not v <= 1e-7)
    _emit(args, _dump({"residuals": res, "passed": not bad}), out)
    if bad:
        raise ComputationError(f"identities failed: {', '.join(bad)}")


def _check(out, ok, label):
    out.write(f"{'ok  ' if ok else 'FAIL'} {label}\n")
    return bool(ok)


def _demo_example1(args, out):
    ok = True
    for alpha in (0, 1, 1j):
        r = ambiguity_demo(alpha)
        out.write(f"alpha = {fmt_complex(alpha)}\n")
        for s, b in zip((1, -1), r.potentials):
            out.write(f"  sigma = {s:+d}: b = " + " ".join(fmt_complex(z) for z in b) + "\n")
        out.write("  cubic = " + " ".join(fmt_complex(z) for z in r.expected.coeffs) + "\n")
        ok &= _check(out, r.dirichlet_gap <= 1e-9, f"gamma(4) equals the cubic for both signs ({r.dirichlet_gap:.1e})")
        ok &= _check(out, r.neumann_gap <= 1e-9, f"chi(5) equals minus the cubic for both signs ({r.neumann_gap:.1e})")
        ok &= _check(out, r.potentials_differ, "the two potentials differ in every entry")
    return ok


def _demo_example2(args, out):
    ok = True
    for name, op, target in (("2(i)", ex.example_2i(), [-2, 0, 1]), ("2(ii)", ex.example_2ii(), [2, 0, -4, 0, 1])):
        d = monodromy(op).delta
        gap = max_coeff_diff(d, CPoly(target))
        out.write(f"example {name}: delta = " + " ".join(fmt_complex(z) for z in d.coeffs[::-1]) + "\n")
        ok &= _check(out, gap <= 1e-9, f"delta matches the free discriminant ({gap:.1e})")
        iv = interval_spectrum_check(op, args.slices)
        ok &= _check(out, iv.verdict == "interval", f"spectrum verdict: {iv.verdict}")
    return ok


def _print_solutions(out, res):
    for b in res.solutions:
        out.write("  " + " ".join(fmt_complex(z) for z in b) + "\n")


def _solve_free(N, args):
    return solve_inverse(InverseProblem(N, unperturbed_discriminant(N)), args.starts, args.seed, args.threads)


def _demo_example3i(args, out):
    ok = True
    for N in (2, 3):
        res = _solve_free(N, args)
        out.write(f"N = {N}: {len(res)} solution(s)\n")
        _print_solutions(out, res)
        ok &= _check(out, len(res) == 1 and np.abs(res.solutions[0]).max() <= 1e-6, "only the zero potential")
    return ok


def _demo_example3ii(args, out):
    res = _solve_free(4, args)
    out.write(f"N = 4: {len(res)} solutions\n")
    _print_solutions(out, res)
    ok = _check(out, len(res) == 9, "exactly 9 solutions")
    known = [np.zeros(4)] + ex.free_spectrum_solutions_n4()
    ok &= _check(out, all(res.contains(b) for b in known), "zero plus the 8 tabulated potentials")
    return ok


def _demo_example3iii(args, out):
    res = _solve_free(5, args)
    out.write(f"N = 5: {len(res)} solutions, orbit sizes {sorted(len(g) for g in res.orbits())}\n")
    _print_solutions(out, res)
    ok = _check(out, len(res) >= 41, "at least 41 solutions")
    for i, b in enumerate(ex.rho_family_printed(), 1):
        ok &= _check(out, res.contains(b), f"tabulated rho-vector {i} is a solution")
    ok &= _check(out, all(res.contains(b) for b in ex.rho_family_verified()), "rho-vectors 1, 4 and conjugates found")
    return ok


def _demo_example4(args, out):
    ok = True
    for name, op, free in (
        ("potential (1+i, 1-i, -1+i, -1-i)", ex.example_3ii(), False),
        ("unperturbed", unperturbed(4), True),
    ):
        md = monodromy(op)
        info = jordan_structure(double_period_matrix(op), branch_points(md).all_roots)
        out.write(f"{name}: L_8 Jordan profile\n")
        for j in info:
            out.write(
                f"  lambda = {fmt_complex(j.value)}: algebraic {j.algebraic}, geometric {j.geometric}\n"
            )
        if not free:
            blocks = all(
                (j.geometric == 1 and j.generalized == 2) if j.algebraic == 2 else j.algebraic == 1 for j in info
            )
            ok &= _check(out, blocks and len(info) == 5, "simple at +-2, 2x2 blocks at -sqrt2, 0, sqrt2")
        else:
            ok &= _check(out, all(j.geometric == j.algebraic for j in info), "diagonalizable")
    return ok


def _demo_pathological(args, out):
    op = ex.pathological()
    fam = dirichlet_spectrum(op)
    out.write("dirichlet: " + ", ".join(f"{fmt_complex(z)} (x{m})" for z, m in fam.values) + "\n")
    return _check(out, len(fam.values) == 1 and fam.values.multiplicity_near(0.0) == 3, "0 with multiplicity 3")


def _demo_borg(args, out):
    ok = True
    for M in (1, 2, 3):
        for k in range(M):
            op = borg_family(M, k)
            gap = max_coeff_diff(monodromy(op).delta, unperturbed_discriminant(2 * M))
            bc = borg_classify(op, args.slices)
            out.write(f"M = {M}, k = {k}: outcome {bc.outcome}, k found {bc.k}\n")
            ok &= _check(out, gap <= 1e-7, f"delta is the free discriminant ({gap:.1e})")
            ok &= _check(out, bc.outcome == "classified" and bc.k == k, "classified with the right k")
    return ok


def cmd_demo(args, out):
    names = DEMOS if args.name in (None, "all") else (args.name,)
    results = {}
    for name in names:
        out.write(f"== {name}\n")
        results[name] = globals()[f"_demo_{name}"](args, out)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(_dump({"passed": results}))
    failed = [n for n, ok in results.items() if not ok]
    if failed:
        raise ComputationError(f"demo checks failed: {', '.join(failed)}")


def run(argv=None, out=None, err=None):
    """Parse ``argv``, dispatch, and return the exit status."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = build_parser().parse_args(argv)
        _validate(args)
        globals()[f"cmd_{args.verb}"](args, out)
    except ValidationError as exc:
        err.write(f"error: {exc}\n")
        return 1
    except (ComputationError, ArithmeticError, RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        err.write(f"computation failed: {type(exc).__name__}: {exc}\n")
        return 2
    return 0


def main():
    sys.exit(run())
