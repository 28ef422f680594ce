"""Command-line interface.

    svfkit COMMAND INPUT [options]

Input files are JSON objects

    {"dimension": 3, "scalars": "rational" | "float",
     "matrices": [[["1/2", "0", ...], ...], ...], "labels": ["a", ...]}

with every entry written as a string. Reports go to stdout or ``--output``
as JSON; floats are written as 17-digit strings and rationals as "p/q".
Exit codes: 0 success, 2 bad input, 3 numeric failure, 4 inconclusive
result under ``--strict``.
"""
import argparse
import dataclasses
import json
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, linalg
from .dimension import dimension_drop, lyapunov_dimension, lyapunov_exponents
from .equilibrium import EquilibriumReport, _find_form, classify3d, equilibria, permutation_lift
from .errors import BudgetError, DomainError, InputError, NumericError
from .multilinear import exterior_power, singular_values
from .pressure import SVF, affinity_dimension, curve_csv, pressure_curve
from .structure import block_triangularize, detect_generalized_permutation, irreducibility_test
from .symbolic import BernoulliSpec, LinearMeasure, MarkovSpec, PerronGibbsSpec
from .tuples import MatrixTuple

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_INCONCLUSIVE = 0, 2, 3, 4
COMMANDS = ("classify", "pressure", "affdim", "equilibria", "lyapunov", "drop", "lift", "wedge")


class ParseError(InputError):
    pass


# ------------------------------------------------------------ input

def _parse_entry(x, rational: bool, where: str):
    if not isinstance(x, str):
        if isinstance(x, (int, float)) and not isinstance(x, bool) and not rational:
            return float(x)
        raise ParseError(f"{where}: entries must be strings, got {type(x).__name__}")
    try:
        if rational:
            return Fraction(x.strip())
        v = float(x)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"{where}: cannot parse {x!r}") from None
    if not np.isfinite(v):
        raise ParseError(f"{where}: non-finite entry {x!r}")
    return v


def parse_data(data, force_exact: bool = False) -> MatrixTuple:
    if not isinstance(data, dict):
        raise ParseError("top level must be a JSON object")
    for key in ("dimension", "scalars", "matrices"):
        if key not in data:
            raise ParseError(f"missing field {key!r}")
    d = data["dimension"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ParseError("dimension: must be a positive integer")
    kind = data["scalars"]
    if kind not in ("rational", "float"):
        raise ParseError(f"scalars: expected 'rational' or 'float', got {kind!r}")
    rational = kind == "rational" or force_exact
    mats = data["matrices"]
    if not isinstance(mats, list) or len(mats) < 2:
        raise ParseError("matrices: need a list of at least two matrices")
    out = []
    for i, M in enumerate(mats):
        if not isinstance(M, list) or len(M) != d:
            raise ParseError(f"matrices[{i}]: expected {d} rows")
        rows = []
        for r, row in enumerate(M):
            if not isinstance(row, list) or len(row) != d:
                raise ParseError(f"matrices[{i}][{r}]: expected {d} entries")
            rows.append([_parse_entry(x, rational, f"matrices[{i}][{r}][{c}]") for c, x in enumerate(row)])
        out.append(rows)
    labels = data.get("labels")
    if labels is not None:
        if not isinstance(labels, list) or len(labels) != len(out) or not all(isinstance(x, str) for x in labels):
            raise ParseError("labels: need one string per matrix")
        labels = tuple(labels)
    try:
        if rational:
            return MatrixTuple.from_rationals([np.array(m, dtype=object) for m in out], labels)
        return MatrixTuple.from_floats(out, labels)
    except (InputError, DomainError) as exc:
        raise ParseError(str(exc)) from None


def parse_input(path, force_exact: bool = False) -> MatrixTuple:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_data(data, force_exact)


def parse_grid(text: str) -> list:
    try:
        a, b, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise ParseError(f"--grid: expected a:b:step, got {text!r}") from None
    if step <= 0 or b < a:
        raise ParseError("--grid: need step > 0 and a <= b")
    count = int(np.floor((b - a) / step + 1e-9)) + 1
    return [a + i * step for i in range(count)]


# ------------------------------------------------------------ output

def _num(x: float) -> str:
    return "%.17g" % x


def measure_json(spec: LinearMeasure) -> dict:
    if isinstance(spec, BernoulliSpec):
        return {"type": "bernoulli", "probs": jsonable(spec.probs)}
    if isinstance(spec, MarkovSpec):
        return {"type": "markov", "transition": jsonable(spec.transition), "stationary": jsonable(spec.stationary),
                "symbol_map": list(spec.symbol_map)}
    if isinstance(spec, PerronGibbsSpec):
        return {"type": "perron_gibbs", "matrices": jsonable(spec.matrices), "perron_value": _num(spec.perron_value),
                "u": jsonable(spec.u), "v": jsonable(spec.v)}
    raise TypeError(f"cannot serialise {type(spec).__name__}")


def jsonable(obj):
    """Recursively convert results to JSON values with exact-looking numbers."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, np.ndarray):
        return [jsonable(x) for x in obj.tolist()] if obj.dtype != object else [jsonable(x) for x in obj]
    if isinstance(obj, LinearMeasure):
        return measure_json(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj) if not f.name.startswith("_")}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(x) for x in obj]
    raise TypeError(f"cannot serialise {type(obj).__name__}")


# ------------------------------------------------------------ commands

def _need_s(args):
    if args.s is None:
        raise ParseError(f"{args.command}: --s is required")
    return args.s


def _structure(tup):
    tri = block_triangularize(tup)
    form = detect_generalized_permutation(tup)
    return {
        "irreducibility": irreducibility_test(tup),
        "block_triangularization": tri,
        "permutation_form": form,
    }


def _equilibrium_summary(rep: EquilibriumReport) -> dict:
    out = jsonable(rep)
    out["state_count"] = len(rep.states)
    return out


def cmd_classify(tup, args):
    result = {"structure": _structure(tup)}
    inconclusive = False
    if args.s is not None:
        rep = classify3d(tup, args.s, args.nmax, threads=args.threads) if tup.dim == 3 else \
            equilibria(tup, args.s, args.nmax, args.threads)
        result["equilibria"] = _equilibrium_summary(rep)
        inconclusive = not rep.exact
    return result, inconclusive, None


def cmd_equilibria(tup, args):
    rep = equilibria(tup, _need_s(args), args.nmax, args.threads)
    return {"equilibria": _equilibrium_summary(rep)}, not rep.exact, None


def cmd_pressure(tup, args):
    if args.grid is not None:
        grid = parse_grid(args.grid)
    else:
        grid = [_need_s(args)]
    est = pressure_curve(tup, grid, args.nmax, args.threads, exact=not args.bounds_only)
    csv = curve_csv(est) if args.grid is not None else None
    return {"pressure": est}, False, csv


def cmd_affdim(tup, args):
    ad = affinity_dimension(tup, args.nmax, args.tol, exact=not args.bounds_only,
                            allow_noncontractive=args.allow_noncontractive, threads=args.threads)
    return {"affinity_dimension": ad, "width": ad.width}, not ad.exact and ad.width > args.tol, None


def cmd_lyapunov(tup, args):
    if args.weights is not None:
        try:
            probs = tuple(Fraction(x) if tup.exact else float(x) for x in args.weights.split(","))
        except ValueError:
            raise ParseError("--weights: expected comma-separated numbers") from None
        measure = BernoulliSpec(probs)
    else:
        measure = BernoulliSpec(tuple(Fraction(1, tup.count) for _ in range(tup.count)))
    if args.method == "monte-carlo" and args.seed is None:
        raise ParseError("lyapunov: --seed is required for the monte-carlo method")
    spec = lyapunov_exponents(tup, measure, args.method, n=args.nmax, samples=args.samples,
                              length=args.length, seed=args.seed, threads=args.threads)
    ld = lyapunov_dimension(tup, measure, spec, n=args.nmax)
    return {"measure": measure, "spectrum": spec, "lyapunov_dimension": ld}, False, None


def cmd_drop(tup, args):
    if args.remove is None:
        raise ParseError("drop: --remove is required")
    if not 1 <= args.remove <= tup.count:
        raise ParseError(f"--remove: expected 1..{tup.count}")
    grid = parse_grid(args.grid) if args.grid is not None else None
    rep = dimension_drop(tup, args.remove - 1, args.nmax, args.tol, exact=not args.bounds_only, grid=grid,
                         threads=args.threads, allow_noncontractive=args.allow_noncontractive)
    payload = jsonable(rep)
    payload["removed"] = args.remove
    return {"drop": payload}, rep.verdict != "StrictDrop", rep.grid_csv()


def cmd_lift(tup, args):
    s = _need_s(args)
    form, reduced, _ = _find_form(tup)
    if form is None:
        raise DomainError("no generalised permutation basis found; the lift is undefined")
    lift = permutation_lift(form, s, args.k)
    return {"lift": lift, "basis": form.basis, "block_reduced": reduced is not None}, False, None


def cmd_wedge(tup, args):
    if args.k is None:
        raise ParseError("wedge: --k is required")
    if not 0 <= args.k <= tup.dim:
        raise ParseError(f"--k: expected 0..{tup.dim}")
    powers = [exterior_power(A, args.k) for A in tup.matrices]
    norms = [float(singular_values(linalg.as_float(P))[0]) for P in powers]
    return {"k": args.k, "exterior_powers": powers, "norms": norms}, False, None


HANDLERS = {
    "classify": cmd_classify, "pressure": cmd_pressure, "affdim": cmd_affdim, "equilibria": cmd_equilibria,
    "lyapunov": cmd_lyapunov, "drop": cmd_drop, "lift": cmd_lift, "wedge": cmd_wedge,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="svfkit", description="Singular value pressure and equilibrium states.")
    p.add_argument("--version", action="version", version=f"svfkit {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("input", help="JSON file with the matrix tuple")
    p.add_argument("--s", type=float)
    p.add_argument("--grid", help="a:b:step, inclusive")
    p.add_argument("--nmax", type=int, default=8)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--remove", type=int, help="1-based index of the matrix to drop")
    p.add_argument("--k", type=int)
    p.add_argument("--exact", action="store_true", help="read decimal entries as exact rationals")
    p.add_argument("--bounds-only", action="store_true", help="skip closed-form pressure routes")
    p.add_argument("--allow-noncontractive", action="store_true")
    p.add_argument("--strict", action="store_true", help="exit 4 when the result is inconclusive")
    p.add_argument("--output", help="write the JSON report here; CSV sidecars go next to it")
    p.add_argument("--method", default="auto", choices=("auto", "closed-form", "deterministic", "monte-carlo"))
    p.add_argument("--weights", help="Bernoulli weights for lyapunov, comma separated")
    p.add_argument("--samples", type=int, default=10 ** 4)
    p.add_argument("--length", type=int, default=200)
    return p


def _threads(args) -> int:
    if args.threads is not None:
        t = args.threads
    else:
        env = os.environ.get("SVFKIT_THREADS", "1")
        try:
            t = int(env)
        except ValueError:
            raise ParseError(f"SVFKIT_THREADS: expected an integer, got {env!r}") from None
    if t < 1:
        raise ParseError("thread count must be >= 1")
    return t


def run(args) -> tuple[dict | None, int, str | None]:
    """Execute a parsed command; returns (report, exit code, csv or None)."""
    try:
        args.threads = _threads(args)
        tup = parse_input(args.input, args.exact)
        if args.s is not None and not 0 <= args.s <= tup.dim:
            raise ParseError(f"--s must lie in [0, {tup.dim}]")
        result, inconclusive, csv = HANDLERS[args.command](tup, args)
    except InputError as exc:
        return {"error": str(exc), "kind": "input"}, EXIT_INPUT, None
    except (DomainError, NumericError, BudgetError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return {"error": str(exc), "kind": "numeric"}, EXIT_NUMERIC, None
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "input")}
    report = {
        "command": args.command,
        "input": str(args.input),
        "config": config,
        "backend": tup.backend,
        "result": result,
        "inconclusive": inconclusive,
    }
    code = EXIT_INCONCLUSIVE if (inconclusive and args.strict) else EXIT_OK
    return jsonable(report), code, csv


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    t0 = time.perf_counter()
    report, code, csv = run(args)
    if csv is not None:
        if args.output:
            Path(args.output).with_suffix(".csv").write_text(csv)
        else:
            report["csv"] = csv
    text = json.dumps(report, indent=2) + "\n"
    if args.output and code != EXIT_INPUT:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    print(f"svfkit {args.command}: exit {code} in {time.perf_counter() - t0:.3f} s", file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
