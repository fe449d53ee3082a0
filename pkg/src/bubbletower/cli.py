"""Command-line frontend: ``bubbletower <subcommand> [options]``.

Exit codes: 0 success, 2 invalid input, 3 solver did not converge, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernel, masses, newton, quad, scales, spectrum, tower
from .errors import ConsistencyError, ConvergenceError, NumericalError, ValidationError

log = logging.getLogger("bubbletower")

EXIT_OK, EXIT_INVALID, EXIT_NOT_CONVERGED, EXIT_NUMERICAL = 0, 2, 3, 4
OUTPUT_DIR_ENV = "BUBBLETOWER_OUTPUT_DIR"
LN10 = math.log(10.0)


# -- formatting -----------------------------------------------------------------

def fmt_number(x) -> str:
    """17 significant digits for floats, plain integers for integral exact values."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else fmt_number(float(x))
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def to_json(obj) -> str:
    """Deterministic JSON with fixed float formatting."""
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    return fmt_number(obj)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt_number(v).replace("null", "nan") for v in row])
    return buf.getvalue()


@dataclass
class Result:
    """A subcommand's output: a JSON-able summary and optionally a table."""

    summary: dict
    header: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    exit_code: int = EXIT_OK

    def render(self, fmt):
        if fmt == "csv":
            if self.header:
                return to_csv(self.header, self.rows)
            return to_csv(list(self.summary), [list(self.summary.values())])
        out = dict(self.summary)
        if self.header:
            out["rows"] = [dict(zip(self.header, r)) for r in self.rows]
        return to_json(out) + "\n"


# -- argument handling ----------------------------------------------------------

def parse_number(text):
    """Rational literals stay exact ("2", "3/2", "0.5"); anything else is a float."""
    text = str(text).strip()
    try:
        if any(c in text for c in "eEinfINFnN"):
            raise ValueError
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        try:
            return float(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _common(p):
    g = p.add_argument_group("system")
    g.add_argument("--preset", choices=sorted(spectrum.PRESETS))
    for name in ("a", "b", "alpha1", "alpha2"):
        g.add_argument(f"--{name}", type=parse_number)
    o = p.add_argument_group("output")
    o.add_argument("--format", choices=("json", "csv"), default="json")
    o.add_argument("--output", help="output file (relative paths resolve under $%s)" % OUTPUT_DIR_ENV)
    o.add_argument("--config", help="key=value file; command-line flags take precedence")
    o.add_argument("--jobs", type=int, default=1)
    o.add_argument("-v", "--verbose", action="store_true")


def _lambda_opts(p, sweep=False):
    g = p.add_argument_group("lambda")
    if sweep:
        g.add_argument("--log10-lambda", type=float, nargs="+", required=True)
        g.add_argument("--coupled", action="store_true",
                       help="at k = k_max put the minor component on the admissibility boundary")
    else:
        g.add_argument("--log10-lambda", type=float)
        g.add_argument("--log10-lambda1", type=float)
        g.add_argument("--log10-lambda2", type=float)
        g.add_argument("--lambda1", type=float)
        g.add_argument("--lambda2", type=float)
    g.add_argument("--gamma", type=float, default=1.0)
    g.add_argument("--lambda-bar", type=float, default=1.0)


SUBCOMMANDS = (
    "betas", "kmax", "masses", "mass-table", "symmetry", "deltas", "tower-dump",
    "theta-sup", "residual-sweep", "identities", "kernel", "newton", "continuation",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bubbletower", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sp = {}
    for name in SUBCOMMANDS:
        sp[name] = sub.add_parser(name)
        if name not in ("identities", "kernel"):
            _common(sp[name])
        else:
            o = sp[name].add_argument_group("output")
            o.add_argument("--format", choices=("json", "csv"), default="json")
            o.add_argument("--output")
            o.add_argument("--config")
            o.add_argument("--jobs", type=int, default=1)
            o.add_argument("-v", "--verbose", action="store_true")
    for name in ("betas", "masses", "deltas", "tower-dump", "theta-sup", "residual-sweep", "newton", "continuation"):
        sp[name].add_argument("--k", type=int, required=name not in ("betas",))
    for name in ("betas", "mass-table", "symmetry"):
        sp[name].add_argument("--k-limit", type=int)
    sp["masses"].add_argument("--product", action="store_true", help="use the P_l product formulas")
    sp["symmetry"].add_argument("--divisors-only", action="store_true")
    for name in ("deltas", "tower-dump", "newton"):
        _lambda_opts(sp[name])
    for name in ("theta-sup", "residual-sweep"):
        _lambda_opts(sp[name], sweep=True)
    sp["deltas"].add_argument("--h00", type=float, default=0.0)
    sp["tower-dump"].add_argument("--points", type=int, default=401)
    sp["tower-dump"].add_argument("--s-min", type=float)
    sp["residual-sweep"].add_argument("--p", type=float, default=1.05)
    sp["residual-sweep"].add_argument("--panels-per-decade", type=int, default=10)
    sp["identities"].add_argument("--beta", type=float, required=True)
    sp["kernel"].add_argument("--alpha", type=float, required=True)
    sp["kernel"].add_argument("--m", type=int, default=1)
    sp["kernel"].add_argument("--n-max", type=int, default=5)
    sp["kernel"].add_argument("--samples", type=int, default=100)
    for name in ("newton", "continuation"):
        sp[name].add_argument("--nodes-per-unit", type=int, default=100)
        sp[name].add_argument("--max-iter", type=int, default=50)
    sp["newton"].add_argument("--dump", action="store_true", help="emit the solution profile as the table")
    c = sp["continuation"]
    c.add_argument("--log10-lambda-start", type=float, required=True)
    c.add_argument("--log10-lambda-end", type=float, required=True)
    c.add_argument("--steps", type=int, default=4)
    c.add_argument("--gamma", type=float, default=1.0)
    return parser


def read_config(path) -> list:
    """Turn ``key = value`` lines into argv tokens; ``#`` starts a comment."""
    tokens = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key=value")
            key, value = (x.strip() for x in line.split("=", 1))
            flag = "--" + key.replace("_", "-")
            if value.lower() in ("true", "yes", "on"):
                tokens.append(flag)
            elif value.lower() in ("false", "no", "off", ""):
                continue
            else:
                tokens.append(flag)
                tokens.extend(value.split())
    return tokens


def _merge_config(argv):
    argv = list(argv)
    cfg = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            cfg = argv[i + 1]
        elif tok.startswith("--config="):
            cfg = tok.split("=", 1)[1]
    if cfg is None:
        return argv
    pos = next((i for i, t in enumerate(argv) if t in SUBCOMMANDS), None)
    if pos is None:
        return argv
    # file values come first so later command-line flags override them
    return argv[: pos + 1] + read_config(cfg) + argv[pos + 1 :]


def params_from_args(args) -> spectrum.SystemParams:
    base = spectrum.PRESETS.get(args.preset) if getattr(args, "preset", None) else None
    values = {}
    for name in ("a", "b", "alpha1", "alpha2"):
        v = getattr(args, name, None)
        if v is None and base is not None:
            v = getattr(base, name)
        if v is None:
            raise ValidationError(f"--{name} is required (or use --preset)")
        values[name] = v
    return spectrum.SystemParams(**values)


def lambda_from_args(args) -> scales.LambdaPair:
    l1 = args.log10_lambda1 if args.log10_lambda1 is not None else args.log10_lambda
    l2 = args.log10_lambda2 if args.log10_lambda2 is not None else args.log10_lambda
    if args.lambda1 is not None:
        if args.lambda1 <= 0:
            raise ValidationError("--lambda1 must be positive")
        l1 = math.log10(args.lambda1)
    if args.lambda2 is not None:
        if args.lambda2 <= 0:
            raise ValidationError("--lambda2 must be positive")
        l2 = math.log10(args.lambda2)
    if l1 is None and l2 is None:
        raise ValidationError("lambda is required (--log10-lambda, --log10-lambda1/2 or --lambda1/2)")
    l1 = l2 if l1 is None else l1
    l2 = l1 if l2 is None else l2
    return scales.LambdaPair.from_log10(l1, l2)


def _sweep_pair(params, k, log10_value, coupled, gamma):
    if not coupled:
        return scales.LambdaPair.from_log10(log10_value)
    return scales.admissible_pair(spectrum.compute_betas(params, k), k, log10_value * LN10, gamma)


def _kmax_value(kmax):
    return None if math.isinf(kmax) else int(kmax)


def _top_k(params, k_limit):
    kmax = spectrum.compute_kmax(params)
    if math.isinf(kmax) and k_limit is None:
        raise ValidationError("k_max is infinite; pass --k-limit")
    return int(kmax if k_limit is None else min(kmax, k_limit))


def _map(fn, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


# -- subcommands ----------------------------------------------------------------

def cmd_betas(args):
    params = params_from_args(args)
    k = args.k if args.k is not None else _top_k(params, args.k_limit)
    seq = spectrum.compute_betas(params, k)
    rows = [[ell, seq[ell]] for ell in range(1, k + 1)]
    return Result({"kmax": _kmax_value(seq.kmax), "betas": list(seq.betas)}, ["ell", "beta"], rows)


def cmd_kmax(args):
    params = params_from_args(args)
    kmax = spectrum.compute_kmax(params)
    return Result({"kmax": _kmax_value(kmax), "infinite": math.isinf(kmax)})


def cmd_masses(args):
    params = params_from_args(args)
    if args.product:
        pair = masses.local_masses_product(params, args.k)
    else:
        pair = masses.local_masses(spectrum.compute_betas(params, args.k), args.k)
    return Result({"m1_over_2pi": pair.m1_over_2pi, "m2_over_2pi": pair.m2_over_2pi})


def cmd_mass_table(args):
    params = params_from_args(args)
    table = masses.enumerate_mass_table(params, args.k_limit)
    rows = [[p.k, p.orientation, p.m1_over_2pi, p.m2_over_2pi] for p in table]
    return Result({"count": len(rows)}, ["k", "orientation", "m1_over_2pi", "m2_over_2pi"], rows)


def cmd_symmetry(args):
    params = params_from_args(args)
    k = _top_k(params, args.k_limit)
    info = masses.symmetry_order(spectrum.compute_betas(params, k), divisors_only=args.divisors_only)
    return Result({
        "m": info.m,
        "even_index_set": sorted(info.even_index_set),
        "chosen_m_ell": {str(ell): v for ell, v in sorted(info.chosen_m_ell.items())},
        "domain_compatible": masses.domain_compatible(info.m),
    })


def cmd_deltas(args):
    params = params_from_args(args)
    lam = lambda_from_args(args)
    seq = spectrum.compute_betas(params, args.k)
    if args.k > seq.kmax:
        raise ValidationError(f"k={args.k} exceeds k_max={seq.kmax}")
    sc = scales.solve_log_deltas(seq, args.k, lam, args.h00)
    expo = scales.closed_form_exponents(seq, args.k)
    rows = [[ell, x, x / LN10, *expo["delta"][ell - 1]] for ell, x in enumerate(sc.log_deltas, start=1)]
    summary = {
        "log_deltas": list(sc.log_deltas),
        "admissible": scales.admissible(seq, args.k, lam, args.gamma, args.lambda_bar),
    }
    return Result(summary, ["ell", "log_delta", "log10_delta", "exp_lambda1", "exp_lambda2"], rows)


def cmd_tower_dump(args):
    params = params_from_args(args)
    tw = tower.build_tower(params, args.k, lambda_from_args(args))
    s_min = tw.default_s_min() if args.s_min is None else args.s_min
    if args.points < 2:
        raise ValidationError("--points must be at least 2")
    s = np.linspace(s_min, 0.0, args.points)
    rows = tower.profile_rows(tw, s).tolist()
    header = ["s", "W1", "W2", "Theta_active", "log|R1|", "sign1", "log|R2|", "sign2"]
    return Result({"k": args.k, "log_deltas": list(tw.log_deltas)}, header, rows)


def _theta_point(job):
    params, k, lam = job
    tw = tower.build_tower(params, k, lam)
    return [tower.theta_sup(tw, ell) for ell in range(1, k + 1)]


def cmd_theta_sup(args):
    params = params_from_args(args)
    lams = [_sweep_pair(params, args.k, x, args.coupled, args.gamma) for x in args.log10_lambda]
    sups = _map(_theta_point, [(params, args.k, lam) for lam in lams], args.jobs)
    rows = [[x, ell, v] for x, vals in zip(args.log10_lambda, sups) for ell, v in enumerate(vals, start=1)]
    return Result({"k": args.k, "points": len(lams)}, ["log10_lambda", "ell", "theta_sup"], rows)


def _residual_point(job):
    params, k, lam, p, ppd = job
    tw = tower.build_tower(params, k, lam)
    grid = quad.RadialGrid(tw.default_s_min(), 0.0, ppd)
    rep = quad.lp_residual_norm(tw, p, grid)
    return rep.norm1, rep.norm2


def cmd_residual_sweep(args):
    params = params_from_args(args)
    xs = list(args.log10_lambda)
    lams = [_sweep_pair(params, args.k, x, args.coupled, args.gamma) for x in xs]
    jobs = [(params, args.k, lam, args.p, args.panels_per_decade) for lam in lams]
    norms = _map(_residual_point, jobs, args.jobs)
    rows = []
    for i, (x, (n1, n2)) in enumerate(zip(xs, norms)):
        slope = math.nan
        if i >= 2:
            pts = [(xs[j], math.log10(norms[j][0] + norms[j][1])) for j in range(i + 1)]
            slope, _ = quad.fit_scaling(pts)
        rows.append([x, n1, n2, slope])
    summary = {"k": args.k, "p": args.p, "slope": rows[-1][3] if len(rows) >= 3 else None}
    return Result(summary, ["log10_lambda", "norm1", "norm2", "slope_so_far"], rows)


def cmd_identities(args):
    beta = args.beta
    s1, s2 = quad.step4_identities(beta)
    return Result({
        "beta": beta,
        "step4": [s1, s2],
        "step4_expected": [-2 * math.pi * beta, -4 * math.pi],
        "bubble_mass": quad.bubble_mass(beta),
        "bubble_mass_expected": 4 * math.pi * beta,
    })


def cmd_kernel(args):
    rho = np.logspace(-2, 2, args.samples)
    rows = []
    for n in range(0, args.n_max + 1):
        for sign in (1, -1):
            if n == 0 and sign == -1:
                continue
            rows.append([n, "+" if sign > 0 else "-", kernel.ode_residual(n, args.alpha, sign, rho),
                         kernel.is_bounded(n, args.alpha, sign)])
    modes = kernel.bounded_modes(args.alpha, args.m)
    summary = {
        "alpha": args.alpha,
        "m": args.m,
        "mode_cutoff": kernel.mode_cutoff(args.alpha),
        "bounded_modes": [{"n": md.n, "sign": "+" if md.sign > 0 else "-", "angular": md.angular,
                           "dirichlet_energy": kernel.dirichlet_energy(md)} for md in modes],
        "max_ode_residual": max(r[2] for r in rows),
    }
    return Result(summary, ["n", "sign", "ode_residual", "bounded"], rows)


def _newton_summary(rep):
    out = rep.summary()
    out["masses"] = {"m1_over_2pi": out.pop("m1_over_2pi"), "m2_over_2pi": out.pop("m2_over_2pi")}
    return out


def cmd_newton(args):
    params = params_from_args(args)
    lam = lambda_from_args(args)
    opts = newton.DampingOptions(max_iterations=args.max_iter)
    rep = newton.solve(params, args.k, lam, nodes_per_unit=args.nodes_per_unit, damping=opts,
                       gamma=args.gamma)
    res = Result(_newton_summary(rep))
    if args.dump:
        res.header = ["s", "u1", "u2", "W1", "W2", "phi1", "phi2"]
        res.rows = np.column_stack([rep.s, rep.u1, rep.u2, rep.W1, rep.W2, rep.phi1, rep.phi2]).tolist()
    if not rep.converged:
        res.exit_code = EXIT_NOT_CONVERGED
    return res


def cmd_continuation(args):
    params = params_from_args(args)
    start = scales.LambdaPair.from_log10(args.log10_lambda_start)
    end = scales.LambdaPair.from_log10(args.log10_lambda_end)
    opts = newton.DampingOptions(max_iterations=args.max_iter)
    reps = newton.continuation(params, args.k, start, end, args.steps, nodes_per_unit=args.nodes_per_unit,
                               damping=opts, gamma=args.gamma)
    rows = [[r.lam.log_lambda1 / LN10, r.converged, r.iterations, r.final_residual,
             r.masses.m1_over_2pi, r.masses.m2_over_2pi, r.phi_max] for r in reps]
    done = len(reps) == args.steps and all(r.converged for r in reps)
    header = ["log10_lambda", "converged", "iterations", "final_residual", "m1_over_2pi", "m2_over_2pi", "phi_sup"]
    return Result({"steps": len(reps), "completed": done}, header, rows,
                  EXIT_OK if done else EXIT_NOT_CONVERGED)


HANDLERS = {
    "betas": cmd_betas, "kmax": cmd_kmax, "masses": cmd_masses, "mass-table": cmd_mass_table,
    "symmetry": cmd_symmetry, "deltas": cmd_deltas, "tower-dump": cmd_tower_dump,
    "theta-sup": cmd_theta_sup, "residual-sweep": cmd_residual_sweep, "identities": cmd_identities,
    "kernel": cmd_kernel, "newton": cmd_newton, "continuation": cmd_continuation,
}


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
        return
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        path = os.path.join(base, path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        argv = _merge_config(argv)
    except (OSError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        result = HANDLERS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (NumericalError, ConsistencyError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _write(result.render(args.format), args.output)
    return result.exit_code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
