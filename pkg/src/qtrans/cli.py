"""Command-line front end.  Every command reads JSON and writes canonical JSON.

Inputs may be file paths, "-" for stdin, or "catalog:NAME" for one of the
bundled example files (see ``qtrans.catalog``).
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from importlib import resources
from typing import List, Optional, Sequence

from . import __version__
from .arith import format_rational, parse_rational
from .errors import InputError, QTransError, ResourceLimit
from .fq_oracle import DEFAULT_BUDGET, DEFAULT_PRIMES, estimate_dimension
from .groebner import Ideal, groebner_basis, krull_dimension
from .morphism import (
    PolynomialMorphism,
    b_phi_ideal,
    conormal_ideal,
    generic_fiber_dimension,
    ideal_from_json,
    ideal_to_json,
    kernel_vector_fields,
    qt_check_at,
)
from .padic import (
    IntegerPolyMap,
    LevelMeasure,
    convolve,
    direction_ball_pushforwards,
    fourier,
    germ_rank,
    haar_ball,
    haar_mass,
    mu_n,
    psi_measure,
    pushforward,
    restrict,
    support_germs,
)
from .poly import order_from_name
from .stratify import coarse_and_vertical_audit, functorial_stratify, validate_morphism

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RESOURCE = 3
EXIT_INTERNAL = 4


# ---------------------------------------------------------------------------
# Input helpers


def load_json(source: str):
    """Parse JSON from a path, stdin ("-") or a bundled catalog entry."""
    try:
        if source == "-":
            return json.load(sys.stdin)
        if source.startswith("catalog:"):
            name = source.split(":", 1)[1]
            if not name.endswith(".json"):
                name += ".json"
            ref = resources.files("qtrans.catalog").joinpath(name)
            if not ref.is_file():
                raise InputError(f"no catalog entry {name!r}")
            return json.loads(ref.read_text())
        with open(source) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {source}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{source} is not valid JSON: {exc}") from None


def parse_point(text: str) -> List[Fraction]:
    try:
        return [parse_rational(t.strip()) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(f"bad fiber point {text!r}: {exc}") from None


def parse_primes(text: str) -> List[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"bad prime list {text!r}") from None


def _morphism(data) -> PolynomialMorphism:
    if "polynomial" in data and "components" not in data:
        data = {"source_vars": data.get("vars", data.get("source_vars")), "components": [data["polynomial"]]}
    return PolynomialMorphism.from_json(data)


def _int_field(data, key, override=None):
    if override is not None:
        return override
    if key not in data:
        raise InputError(f"measure config needs {key!r} (or pass --prime/--level)")
    return int(data[key])


def build_measures(data, p: Optional[int] = None, k: Optional[int] = None) -> List[LevelMeasure]:
    """Measures from a measure JSON or a construction config; p and k flags override the file."""
    try:
        return _build(data, p, k)
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed measure config: missing or bad field {exc}") from None


def _build(data, p: Optional[int], k: Optional[int]) -> List[LevelMeasure]:
    if isinstance(data, list):
        out = []
        for item in data:
            out.extend(_build(item, p, k))
        return out
    if not isinstance(data, dict):
        raise InputError("measure input must be a JSON object or list")
    if "measures" in data:
        p = _int_field(data, "p", p) if ("p" in data or p is not None) else None
        k = _int_field(data, "k", k) if ("k" in data or k is not None) else None
        return _build(data["measures"], p, k)
    if "values" in data:
        mu = LevelMeasure.from_json(data)
        if (p is not None and p != mu.p) or (k is not None and k != mu.k):
            raise InputError("explicit measure does not match --prime/--level")
        return [mu]
    kind = data.get("construct")
    p = _int_field(data, "p", p)
    k = _int_field(data, "k", k)
    if kind == "haar_ball":
        d = int(data["d"])
        m = int(data.get("scale", 0))
        mass = parse_rational(str(data["mass"])) if "mass" in data else haar_mass(p, d, m)
        return [haar_ball(p, k, d, data.get("center", [0] * d), m, mass)]
    if kind == "mu_n":
        return [mu_n(p, int(data["n"]), k)]
    if kind == "mu_n_squared":
        mu = mu_n(p, int(data["n"]), k)
        return [convolve(mu, mu)]
    if kind == "psi_measure":
        return [psi_measure(p, int(data["n"]), k)]
    if kind == "direction_balls":
        m = data.get("scale")
        return direction_ball_pushforwards(p, k, None if m is None else int(m), data.get("centers"))
    if kind == "pushforward":
        src = _build(data["measure"], p, k)
        phi = IntegerPolyMap(_morphism(data["map"]))
        return [pushforward(mu, phi) for mu in src]
    raise InputError(f"unknown measure construct {kind!r}")


def _single(measures: Sequence[LevelMeasure]) -> LevelMeasure:
    if len(measures) != 1:
        raise InputError(f"expected one measure, got {len(measures)}")
    return measures[0]


# ---------------------------------------------------------------------------
# Commands


def cmd_qtcheck(args) -> dict:
    phi = _morphism(load_json(args.input))
    if args.generic:
        d = generic_fiber_dimension(phi)
        return {
            "generic_fiber_dimension": d,
            "source_dimension": phi.n,
            "verdict": "quasi_transitive_at_fiber" if d <= phi.n else "not_quasi_transitive_at_fiber",
        }
    if args.fiber is None:
        raise InputError("qtcheck needs --fiber or --generic")
    y = parse_point(args.fiber)
    if len(y) == 1 and phi.m > 1 and y[0] == 0:
        y = y * phi.m
    return qt_check_at(phi, y).to_json()


def cmd_kernel(args) -> dict:
    phi = _morphism(load_json(args.input))
    fields = kernel_vector_fields(phi)
    return {"rank": phi.n, "source_vars": list(phi.ring.names),
            "vector_fields": [[str(f) for f in v] for v in fields]}


def cmd_bphi(args) -> dict:
    phi = _morphism(load_json(args.input))
    return ideal_to_json(b_phi_ideal(phi))


def cmd_conormal(args) -> dict:
    data = load_json(args.input)
    I = ideal_from_json(data)
    codim = args.codim if args.codim is not None else data.get("codim")
    if codim is None:
        raise InputError("conormal needs a codimension (--codim or \"codim\" in the file)")
    return ideal_to_json(conormal_ideal(I, int(codim)))


def cmd_dim(args) -> dict:
    I = ideal_from_json(load_json(args.input))
    return {"dimension": krull_dimension(I), "vars": list(I.ring.names)}


def cmd_gb(args) -> dict:
    I = ideal_from_json(load_json(args.input))
    G = groebner_basis(I, order_from_name(args.order))
    return {"basis": G.to_json(), "order": args.order, "vars": list(I.ring.names)}


def cmd_stratify(args) -> dict:
    phi = _morphism(load_json(args.input))
    trace: List[str] = []
    sm = functorial_stratify(phi, trace)
    out = {"stratification": sm.to_json(), "trace": trace, "validation": validate_morphism(sm)}
    if args.audit_fiber is not None:
        out["audit"] = coarse_and_vertical_audit(sm, parse_point(args.audit_fiber))
    return out


def _measures_from(args) -> List[LevelMeasure]:
    out = []
    for src in args.input:
        out.extend(build_measures(load_json(src), args.prime, args.level))
    if args.map is not None:
        phi = IntegerPolyMap(_morphism(load_json(args.map)))
        out = [pushforward(mu, phi) for mu in out]
    if args.restrict is not None and args.command in ("push", "fourier"):
        out = [restrict(mu, args.restrict) for mu in out]
    return out


def cmd_push(args) -> dict:
    return _single(_measures_from(args)).to_json()


def cmd_fourier(args) -> dict:
    mu = _single(_measures_from(args))
    points = []
    for B, val in sorted(fourier(mu).items()):
        entry = {
            "B": list(B),
            "coefficients": [format_rational(c) for c in val.coeffs],
            "point": [format_rational(Fraction(b, mu.window.modulus)) for b in B],
        }
        if not any(val.coeffs[1:]):
            entry["rational"] = format_rational(val.coeffs[0])
        points.append(entry)
    return {"d": mu.d, "k": mu.k, "p": mu.p, "values": points}


def _restrict_scale(args) -> int:
    return 0 if args.restrict is None else args.restrict


def cmd_germrank(args) -> dict:
    ms = _measures_from(args)
    N = _restrict_scale(args)
    return {"N": N, "count": len(ms), "germ_rank": germ_rank(ms, N)}


def cmd_supportgerms(args) -> dict:
    ms = _measures_from(args)
    N = _restrict_scale(args)
    return {"N": N, "count": len(ms), "support_germs": support_germs(ms, N)}


def cmd_oracle_dim(args) -> dict:
    I = ideal_from_json(load_json(args.input))
    primes = parse_primes(args.primes) if args.primes else list(DEFAULT_PRIMES)
    est = estimate_dimension(I, primes, args.oracle_budget)
    return est.to_json()


COMMANDS = {
    "qtcheck": (cmd_qtcheck, "fiber dimension of phi o Pi and the quasi-transitivity verdict"),
    "kernel": (cmd_kernel, "generators of the kernel vector fields of D phi"),
    "bphi": (cmd_bphi, "ideal of B_phi in the cotangent ring"),
    "conormal": (cmd_conormal, "conormal ideal of a complete-intersection style presentation"),
    "stratify": (cmd_stratify, "stratified morphism for f: A^n -> A^1, optionally audited at a fiber"),
    "dim": (cmd_dim, "Krull dimension of an ideal"),
    "gb": (cmd_gb, "reduced Groebner basis"),
    "push": (cmd_push, "pushforward of a level-k measure"),
    "fourier": (cmd_fourier, "exact Fourier transform on the dual grid"),
    "germrank": (cmd_germrank, "rank of restricted measures"),
    "supportgerms": (cmd_supportgerms, "number of distinct restricted supports"),
    "oracle-dim": (cmd_oracle_dim, "dimension estimate from point counts over F_q"),
}

_MEASURE_COMMANDS = ("push", "fourier", "germrank", "supportgerms")


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _nonnegative(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qtrans", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", "-o", help="write JSON here instead of stdout")
    common.add_argument("--threads", type=_positive, default=1,
                        help="worker cap; results never depend on it")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, parents=[common])
        if name in _MEASURE_COMMANDS:
            p.add_argument("input", nargs="+", help="measure JSON or construction config")
            p.add_argument("--map", help="morphism JSON to push the measures along first")
            p.add_argument("--prime", type=int, help="override the prime of the configs")
            p.add_argument("--level", type=_positive, help="override the level of the configs")
            p.add_argument("--restrict", type=_nonnegative, help="restrict to p^N Z_p^d")
        else:
            p.add_argument("input", help="JSON input file, '-' or catalog:NAME")
        if name == "qtcheck":
            g = p.add_mutually_exclusive_group()
            g.add_argument("--fiber", help="comma separated rationals, e.g. 0,1/2")
            g.add_argument("--generic", action="store_true", help="generic fiber dimension instead")
        if name == "conormal":
            p.add_argument("--codim", type=_nonnegative)
        if name == "gb":
            p.add_argument("--order", choices=("lex", "grevlex"), default="grevlex")
        if name == "stratify":
            p.add_argument("--audit-fiber", help="run the conormal audit over this target value")
        if name == "oracle-dim":
            p.add_argument("--primes", help=f"comma separated, default {','.join(map(str, DEFAULT_PRIMES))}")
            p.add_argument("--oracle-budget", type=_positive, default=DEFAULT_BUDGET)
    return parser


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        result = func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceLimit as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (QTransError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    text = dumps(result)
    if args.out:
        try:
            with open(args.out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
            return EXIT_INPUT
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
