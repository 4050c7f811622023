"""``qmw`` command line: analyze | integrate | renormalize | dump-net."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .errors import QMWError
from .graph import parse_graph
from .report import analyze, canonical_json, integrate, net_dump, render_human, renormalize
from .transversality import EpsilonSearch

EXIT_OK, EXIT_ERROR, EXIT_INDETERMINATE = 0, 1, 2


def rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a rational p/q, got {text!r}") from None


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("graph", type=Path, help="graph JSON file")
    p.add_argument("--dimension", type=positive_int, help="override the spacetime dimension D")
    p.add_argument("--tree", help="comma-separated tree edge ids (default: first tree in enumeration order)")
    p.add_argument("--schedule", choices=("paper", "uniform"), default="paper")


def _eps_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--epsilon", type=rational, help="deformation parameter p/q")
    g.add_argument("--epsilon-search", type=positive_int, metavar="MAX_K",
                   help="try epsilon = 1/2, 1/3, ..., 1/MAX_K (default 64)")


def _format_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "human"), default="json")
    p.add_argument("--human", action="store_const", const="human", dest="format", help="same as --format human")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qmw", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="deform, certify, decompose and give a verdict")
    _graph_args(a)
    _eps_args(a)
    a.add_argument("--twist-exponent", type=int, help="Tate twist of the exotic summand (default D-2)")
    a.add_argument("--prym-dim", type=int, help="dimension of the Prym variety (default 5 when D=2)")
    _format_args(a)

    i = sub.add_parser("integrate", help="Monte Carlo or grid value of the deformed integral")
    _graph_args(i)
    _eps_args(i)
    i.add_argument("--alpha", type=rational, required=True, help="propagator exponent p/q")
    i.add_argument("--samples", type=positive_int, default=100_000)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--scheme", choices=("mc-cauchy", "grid"), default="mc-cauchy")
    i.add_argument("--chunks", type=positive_int, help="work chunks (the result does not depend on it)")
    _format_args(i)

    r = sub.add_parser("renormalize", help="Birkhoff factorization of a character")
    r.add_argument("characters", type=Path, help="character JSON file")
    r.add_argument("--fixtures", type=Path, help="coproduct table JSON (default: built-in fixtures)")
    _format_args(r)

    d = sub.add_parser("dump-net", help="print the (deformed) quadric net")
    _graph_args(d)
    d.add_argument("--epsilon", type=rational)
    return parser


def _load_graph(args):
    g = parse_graph(args.graph.read_text())
    if args.dimension:
        g = g.with_dimension(args.dimension)
    return g


def _tree(args):
    return [t.strip() for t in args.tree.split(",") if t.strip()] if args.tree else None


def _search(args):
    return EpsilonSearch(cutoff=args.epsilon_search) if args.epsilon_search else None


def _flags(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("graph", "characters", "fixtures", "format", "command"):
            continue
        if isinstance(v, Fraction):
            v = str(v)
        out[k] = v
    return out


def _emit(report: dict, fmt: str) -> None:
    sys.stdout.write(render_human(report) if fmt == "human" else canonical_json(report))


def _error(exc: Exception) -> int:
    if isinstance(exc, QMWError):
        doc = exc.to_dict()
        trace = getattr(exc, "trace", None)
        if trace:
            doc["trace"] = trace
    else:
        doc = {"error": type(exc).__name__, "module": "cli-report", "message": str(exc)}
    sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")
    return EXIT_ERROR


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "analyze":
            report = analyze(
                _load_graph(args), args.epsilon, _search(args), _tree(args), args.schedule,
                args.twist_exponent, args.prym_dim, _flags(args),
            )
            _emit(report, args.format)
            return EXIT_INDETERMINATE if report["verdict"]["kind"] == "Indeterminate" else EXIT_OK
        if args.command == "integrate":
            report = integrate(
                _load_graph(args), args.alpha, args.epsilon, args.samples, args.seed, args.scheme,
                _tree(args), args.schedule, args.chunks, _search(args), _flags(args),
            )
            _emit(report, args.format)
            return EXIT_OK
        if args.command == "renormalize":
            chars = json.loads(args.characters.read_text())
            if args.fixtures:
                fixtures = json.loads(args.fixtures.read_text())
            else:
                from importlib import resources

                fixtures = json.loads(resources.files("qmw").joinpath("data/fixtures.json").read_text())
            _emit(renormalize(chars, fixtures, _flags(args)), args.format)
            return EXIT_OK
        if args.command == "dump-net":
            sys.stdout.write(canonical_json(net_dump(_load_graph(args), args.epsilon, _tree(args), args.schedule)))
            return EXIT_OK
    except (QMWError, OSError, json.JSONDecodeError) as exc:
        return _error(exc)
    return EXIT_ERROR  # pragma: no cover


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
