"""Command-line driver.

Exit codes: 0 success, 2 bad input, 3 configuration error (such as an
exceeded exhaustion cap), 4 solver failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

from . import oracle
from .csp import CnfFormula, arithmetize, count_satisfied, parse_csp, parse_dimacs_cnf, format_dimacs_cnf
from .errors import ConfigurationError, InputError, SolverError
from .generate import FAMILIES, GenSpec, format_answer, generate, parse_answer
from .graph import format_graph, parse_graph
from .poly import from_graph_maxcut, parse_polynomial
from .scheme import (
    MODES,
    SchemeConfig,
    approximate_kcsp,
    approximate_kdense,
    approximate_maxcut,
    maximize_smooth,
)

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_CONFIG, EXIT_SOLVER, EXIT_USAGE = 0, 2, 3, 4, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser, scheme: bool = True) -> None:
    p.add_argument("--in", dest="input", required=True, help="instance file")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--seed", type=int, default=0)
    if not scheme:
        return
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--gamma-scale", type=float, default=1.0)
    p.add_argument("--sample-size", type=int, default=None, help="override the sample size formula")
    p.add_argument("--mode", choices=MODES, default=None)
    p.add_argument("--random-k", type=int, default=64, help="assignments drawn in random mode")
    p.add_argument("--trials", type=int, default=32, help="randomized roundings per assignment")
    p.add_argument("--lp-tol", type=float, default=1e-7)
    p.add_argument("--cap", type=int, default=22, help="max distinct sampled indices in exhaustive mode")
    p.add_argument("--oracle", action="store_true", help="compare against brute force (also supplies the planted optimum)")
    p.add_argument("--answer", help="reference assignment file for planted mode")
    p.add_argument("--threads", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="almostsparse", description="Sampling + LP rounding solvers for dense instances")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_ in (("maxcut", "approximate Max-Cut of a graph"),
                        ("smooth", "maximize a polynomial dump"),
                        ("csp", "maximize satisfied constraints of a CNF or CSP file"),
                        ("kdense", "densest k-subgraph")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        if name == "kdense":
            p.add_argument("--k", type=int, required=True)
            p.add_argument("--budget", type=int, default=oracle.KDENSE_BUDGET,
                           help="enumerate exactly when C(n,k) is at most this")

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="instance path (stdout if omitted); planted answers go to <out>.answer")

    p = sub.add_parser("oracle", help="brute-force optimum")
    _common(p, scheme=False)
    p.add_argument("--problem", choices=("maxcut", "smooth", "csp", "kdense"), required=True)
    p.add_argument("--k", type=int, default=None)

    p = sub.add_parser("lemmas", help="Monte-Carlo check of a concentration bound")
    p.add_argument("--which", choices=("sampling", "rounding"), required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--q", type=int, default=0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--alpha1", type=float, default=0.5)
    p.add_argument("--alpha2", type=float, default=0.5)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma-scale", type=float, default=1.0)
    p.add_argument("--sample-size", type=int, default=None)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def _read(path: str) -> tuple[str, str]:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    return data.decode("utf-8", errors="strict"), hashlib.sha256(data).hexdigest()


def _load_csp(text: str):
    for line in text.splitlines():
        s = line.strip()
        if not s or s.startswith("c"):
            continue
        return parse_dimacs_cnf(text) if s.startswith("p") else parse_csp(text)
    raise InputError("empty instance file")


def _config(args) -> SchemeConfig:
    return SchemeConfig(eps=args.eps, delta=args.delta, gamma_scale=args.gamma_scale,
                        sample_size=args.sample_size, mode=args.mode, random_k=args.random_k,
                        trials=args.trials, seed=args.seed, lp_tol=args.lp_tol, cap=args.cap,
                        oracle_compare=args.oracle, workers=args.threads,
                        kdense_budget=getattr(args, "budget", oracle.KDENSE_BUDGET))


def _scheme_command(args) -> dict:
    text, digest = _read(args.input)
    cfg = _config(args)
    if args.command in ("maxcut", "kdense"):
        inst = parse_graph(text)
    elif args.command == "smooth":
        inst = parse_polynomial(text)
    else:
        inst = _load_csp(text)
    x_star = parse_answer(_read(args.answer)[0], inst.n) if args.answer else None
    if args.command == "maxcut":
        report = approximate_maxcut(inst, cfg, x_star)
    elif args.command == "kdense":
        report = approximate_kdense(inst, args.k, cfg, x_star)
    elif args.command == "smooth":
        report = maximize_smooth(inst, cfg, x_star)
    else:
        report = approximate_kcsp(inst, cfg, x_star)
    body = report.to_dict(timings=False)
    config = body.pop("config")
    return {"instance": {"path": args.input, "sha256": digest}, "config": config,
            "report": body, "timings": report.timings}


def _oracle_command(args) -> dict:
    text, digest = _read(args.input)
    if args.problem in ("maxcut", "kdense"):
        g = parse_graph(text)
        if args.problem == "kdense":
            if args.k is None:
                raise InputError("--k is required for the kdense oracle")
            x, value = oracle.kdense_argmax(g, args.k)
        else:
            x, value = oracle.brute_force_max(from_graph_maxcut(g))
    elif args.problem == "smooth":
        x, value = oracle.brute_force_max(parse_polynomial(text))
    else:
        inst = _load_csp(text)
        x, value = oracle.brute_force_max(arithmetize(inst))
        value = count_satisfied(inst, x)
    return {"instance": {"path": args.input, "sha256": digest},
            "config": {"problem": args.problem, "k": args.k},
            "report": {"assignment": list(x), "value": value if isinstance(value, int) else float(value),
                       "value_exact": str(value)}}


def _lemmas_command(args) -> dict:
    params = oracle.LemmaCheckParams(n=args.n, q=args.q, beta=args.beta, delta=args.delta,
                                     alpha1=args.alpha1, alpha2=args.alpha2, trials=args.trials,
                                     seed=args.seed, gamma_scale=args.gamma_scale, r=args.sample_size)
    check = oracle.check_sampling_lemma if args.which == "sampling" else oracle.check_rounding_lemma
    result = check(params)
    config = {k: getattr(params, k) for k in ("n", "q", "beta", "delta", "alpha1", "alpha2",
                                              "trials", "seed", "gamma_scale", "r")}
    config["which"] = args.which
    return {"config": config, "report": result.to_dict()}


def _gen_command(args, stdout) -> dict:
    spec = GenSpec(args.family, args.n, args.delta, args.k, args.seed)
    out = generate(spec)
    inst = out.instance
    text = format_dimacs_cnf(inst) if isinstance(inst, CnfFormula) else format_graph(inst)
    if args.out:
        Path(args.out).write_text(text)
        if out.answer is not None:
            Path(args.out + ".answer").write_text(format_answer(out.answer))
    else:
        stdout.write(text)
    count = inst.m
    return {"config": {"family": spec.family, "n": spec.n, "delta": spec.delta, "k": spec.k,
                       "seed": spec.seed},
            "report": {"count": count, "path": args.out,
                       "sha256": hashlib.sha256(text.encode()).hexdigest(),
                       "answer": list(out.answer) if out.answer is not None else None}}


def _flatten(d: dict, prefix: str = "") -> dict:
    flat = {}
    for key, v in d.items():
        name = f"{prefix}{key}"
        if isinstance(v, dict):
            flat.update(_flatten(v, name + "."))
        elif isinstance(v, list):
            flat[name] = " ".join(map(str, v))
        else:
            flat[name] = v
    return flat


def render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    flat = _flatten(doc)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=sorted(flat), lineterminator="\n")
    writer.writeheader()
    writer.writerow(flat)
    return buf.getvalue()


def run(argv=None, stdout=None, stderr=None) -> tuple[int, dict | None]:
    """Execute one command; returns the exit code and the report document."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        stderr.write(f"{e}\n")
        return EXIT_USAGE, None
    except SystemExit as e:  # --help
        return (EXIT_OK if not e.code else EXIT_USAGE), None
    try:
        if args.command == "gen":
            doc = _gen_command(args, stdout)
        elif args.command == "oracle":
            doc = _oracle_command(args)
        elif args.command == "lemmas":
            doc = _lemmas_command(args)
        else:
            doc = _scheme_command(args)
    except ConfigurationError as e:
        stderr.write(f"configuration error: {e}\n")
        return EXIT_CONFIG, None
    except InputError as e:
        stderr.write(f"input error: {e}\n")
        return EXIT_INPUT, None
    except SolverError as e:
        stderr.write(f"solver error: {e}\n")
        return EXIT_SOLVER, None
    doc = {"schema_version": SCHEMA_VERSION, "command": args.command, **doc}
    text = render(doc, args.format if hasattr(args, "format") else "json")
    if args.command == "gen":
        if args.out:
            stdout.write(text)
    elif getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        stdout.write(text)
    return EXIT_OK, doc


def main(argv=None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
