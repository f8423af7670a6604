"""Command-line front end.

Every command reads a JSON form document, runs one computation and writes a
JSON report to stdout.  Numbers are emitted as strings (``"p/q"`` on exact
backends, ``repr`` of a float on the float backend) next to a ``backend``
field.  Failures print a JSON error object on stderr and exit with:

    2  malformed document, DSL parse error, invalid model spec
    3  degenerate input (rank < 4) or type too low for the command
    4  jet order budget exhausted
    5  frame degenerate (J = 0 or dependent frame) or Indeterminate verdict
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from importlib import resources
from itertools import product

import jsonschema

from .analysis import DEFAULT_PROBE_COUNT, DEFAULT_PROBE_RADIUS, DEFAULT_PROBE_SEED, INDETERMINATE, Germ, ProbeSettings, determine_type
from .errors import (
    DegenerateFormError,
    FormGermError,
    FrameDegenerateError,
    OrderBudgetError,
    ParseError,
    TranscendenceError,
    UnboundParameterError,
)
from .expr import parse_expression, to_text
from .frame import build_frame, check_identities, decide_equivalence
from .jets import BACKENDS, EXACT, FLOAT, format_scalar
from .models import (
    ModelSpec,
    check_system,
    coefficients,
    example18_generic,
    form_from_coefficients,
    random_prop51_spec,
)

DEFAULT_ORDER = 7
COEFF_NAMES = ("F12", "F13", "F14", "F23", "F24", "F34")

EXIT_PARSE = 2
EXIT_DEGENERATE = 3
EXIT_BUDGET = 4
EXIT_FRAME = 5


class CliError(Exception):
    def __init__(self, code: int, payload: dict):
        self.code = code
        self.payload = payload
        super().__init__(payload.get("message", payload.get("error")))


def load_schema(name: str) -> dict:
    text = resources.files("formgerms").joinpath("schemas", f"{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate(doc, name: str) -> None:
    jsonschema.validate(doc, load_schema(name))


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# documents


class FormDocument:
    """A parsed form document with command-line overrides applied."""

    def __init__(self, raw: dict, args: argparse.Namespace, point_override=None):
        try:
            validate(raw, "document")
        except jsonschema.ValidationError as exc:
            raise CliError(EXIT_PARSE, {"error": "invalid-document", "message": exc.message})
        self.raw = raw
        self.bindings = {k: Fraction(v) for k, v in raw.get("parameters", {}).items()}
        if "coefficients" in raw:
            names = set(self.bindings)
            self.coefficients = {}
            for key in COEFF_NAMES:
                text = raw["coefficients"].get(key, "0")
                self.coefficients[key] = parse_expression(text, names)
        else:
            try:
                self.coefficients = coefficients(ModelSpec.from_json(raw["model"]))
            except ValueError as exc:
                raise CliError(EXIT_PARSE, {"error": "invalid-document", "message": str(exc)})
        self.form = form_from_coefficients(self.coefficients)
        point = point_override or args.point or raw.get("point") or ["0", "0", "0", "0"]
        self.point = tuple(Fraction(p) for p in point)
        self.order = args.order if args.order is not None else raw.get("order", DEFAULT_ORDER)
        self.backend = args.backend or raw.get("backend", EXACT)
        probe = raw.get("probe", {})
        self.probe = ProbeSettings(
            radius=Fraction(args.probe_radius or probe.get("radius", DEFAULT_PROBE_RADIUS)),
            count=args.probe_count if args.probe_count is not None else probe.get("count", DEFAULT_PROBE_COUNT),
            seed=args.seed if args.seed is not None else probe.get("seed", DEFAULT_PROBE_SEED),
        )

    def germ(self, order=None) -> Germ:
        return Germ(self.form, self.point, self.order if order is None else order, self.backend, self.bindings)

    def header(self) -> dict:
        return {"point": [str(p) for p in self.point], "order": self.order}


def read_json(path: str):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(EXIT_PARSE, {"error": "io", "message": str(exc)})
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_PARSE, {"error": "json", "message": str(exc), "line": exc.lineno, "column": exc.colno})


def _s(value) -> str:
    return format_scalar(value)


def _point_text(p) -> list[str]:
    return [str(Fraction(c)) for c in p]


def _require_rank4(g: Germ):
    if g.rank < 4:
        raise CliError(EXIT_DEGENERATE, {"error": "degenerate", "rank": g.rank})


# ---------------------------------------------------------------------------
# commands


def cmd_classify(args) -> dict:
    doc = FormDocument(read_json(args.input[0]), args)
    v = determine_type(doc.form, doc.point, doc.order, doc.probe, doc.backend, doc.bindings,
                       random.Random(doc.probe.seed))
    if v.rank < 4:
        raise CliError(EXIT_DEGENERATE, {"error": "degenerate", "rank": v.rank})
    g = doc.germ(max(doc.order, 2))
    samples = []
    for entry in v.sample_report:
        e = dict(entry)
        e["point"] = _point_text(e["point"])
        samples.append(e)
    return {
        **doc.header(),
        "rank": v.rank,
        "type": v.type,
        "subtype": v.subtype,
        "I": _s(g.I),
        "omega_class": g.omega_class(),
        "constancy_certified": v.constancy_certified,
        "sample_report": samples,
        "backend": v.backend,
        "order": v.order,
        "reason": v.reason,
    }


def cmd_frame(args) -> dict:
    doc = FormDocument(read_json(args.input[0]), args)
    g = doc.germ()
    _require_rank4(g)
    t = g.omega_class()
    if t < 3 or g.omega_vanishes():
        raise CliError(EXIT_DEGENERATE, {"error": "type", "message": "the frame needs a type-4 germ", "type": t})
    try:
        fd = build_frame(g)
    except FrameDegenerateError as exc:
        raise CliError(EXIT_FRAME, {"error": "frame-degenerate", "message": str(exc)})
    ids = {}
    for name, res in check_identities(g).items():
        ids[name] = {
            "applicable": res.applicable,
            "residual": None if res.residual is None else _s(res.residual),
            "order": res.order,
            "note": res.note,
        }
    return {
        **doc.header(),
        "backend": g.backend,
        "J": _s(fd.J),
        "ZJ": _s(fd.ZJ),
        "OmegaUV": _s(fd.OmegaUV),
        "Lambda": [[_s(x) for x in row] for row in fd.Lambda],
        "frame_volume": _s(fd.frame_volume),
        "fields": {n: [_s(x) for x in getattr(fd, n).value_at()] for n in ("Z", "T", "U", "V", "Tp", "Up", "Vp")},
        "primed_table": {k: _s(v) for k, v in fd.primed_table(g.Omega).items()},
        "identities": ids,
    }


def cmd_equiv(args) -> dict:
    if len(args.input) != 2:
        raise CliError(EXIT_PARSE, {"error": "usage", "message": "equiv needs two --input documents"})
    d1 = FormDocument(read_json(args.input[0]), args)
    d2 = FormDocument(read_json(args.input[1]), args, point_override=args.point2)
    r = args.r
    verdict = decide_equivalence(d1.form, d1.point, d2.form, d2.point, r=r, backend=d1.backend,
                                 bindings1=d1.bindings, bindings2=d2.bindings)
    out = {
        "verdict": verdict.status,
        "r": r,
        "witness": verdict.witness,
        "signature_sizes": list(verdict.sizes),
        "reason": verdict.reason,
        "points": [_point_text(d1.point), _point_text(d2.point)],
        "backend": d1.backend,
    }
    if verdict.status == INDETERMINATE:
        raise CliError(EXIT_FRAME, {"error": "indeterminate", "message": verdict.reason or "", "report": out})
    return out


def _document_for(spec: ModelSpec, args, extra: dict | None = None) -> dict:
    coeffs = coefficients(spec)
    doc = {
        "model": spec.to_json(),
        "coefficients": {k: to_text(coeffs[k]) for k in COEFF_NAMES},
        "point": list(args.point or ["0", "0", "0", "0"]),
        "order": args.order if args.order is not None else DEFAULT_ORDER,
        "backend": args.backend or EXACT,
    }
    if extra:
        doc.update(extra)
    return doc


def _system_report(coeff_texts: dict) -> dict:
    return check_system({k: parse_expression(v) for k, v in coeff_texts.items()})


def _generation_specs(gen: dict, seed: int) -> list[tuple[str, ModelSpec]]:
    family = gen["family"]
    if family == "Prop51" and not gen.get("params"):
        rng = random.Random(seed)
        count, degree = gen.get("count", 1), gen.get("degree", 2)
        return [(f"prop51_s{seed}_{i:03d}", random_prop51_spec(rng, degree)) for i in range(count)]
    base = dict(gen.get("params", {}))
    grid = gen.get("grid", {})
    keys = list(grid)
    out = []
    for values in product(*(grid[k] for k in keys)) if keys else [()]:
        params = {**base, **dict(zip(keys, values))}
        tag = "_".join(f"{k}{v}".replace("/", "over").replace("-", "m") for k, v in zip(keys, values))
        name = family.lower() + (f"_{tag}" if tag else "")
        out.append((name, ModelSpec(family, params)))
    return out


def cmd_generate(args) -> dict:
    gen = read_json(args.input[0])
    try:
        validate(gen, "generate_spec")
        seed = args.seed if args.seed is not None else gen.get("seed", 0)
        specs = _generation_specs(gen, seed)
        docs = []
        for name, spec in specs:
            extra = {"generic": example18_generic(spec.params["c"], spec.params["lambda"])} if spec.family == "Example18" else None
            docs.append((name, _document_for(spec, args, extra)))
    except jsonschema.ValidationError as exc:
        raise CliError(EXIT_PARSE, {"error": "invalid-spec", "message": exc.message})
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(EXIT_PARSE, {"error": "invalid-spec", "message": str(exc)})
    if gen["family"] == "Prop51":
        texts = [d["coefficients"] for _, d in docs]
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                reports = list(pool.map(_system_report, texts))
        else:
            reports = [_system_report(t) for t in texts]
        for (_, d), rep in zip(docs, reports):
            d["check_system"] = rep
    written = []
    if args.output_dir:
        os.makedirs(args.output_dir, exist_ok=True)
        for name, d in docs:
            path = os.path.join(args.output_dir, f"{name}.json")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(dumps(d))
            written.append(path)
    return {"family": gen["family"], "seed": seed, "documents": [{"name": n, "document": d} for n, d in docs],
            "written": written}


def cmd_check_system(args) -> dict:
    doc = FormDocument(read_json(args.input[0]), args)
    return {"residuals": check_system(doc.coefficients, doc.bindings)}


COMMANDS = {
    "classify": (cmd_classify, "classify"),
    "frame": (cmd_frame, "frame"),
    "equiv": (cmd_equiv, "equiv"),
    "generate": (cmd_generate, "generate"),
    "check-system": (cmd_check_system, "check_system"),
}


# ---------------------------------------------------------------------------
# argument parsing


def _point(text: str) -> list[str]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("a point needs four comma-separated rationals")
    try:
        return [str(Fraction(p)) for p in parts]
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _rational(text: str) -> str:
    try:
        return str(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", action="append", required=True, help="JSON document (repeat for equiv; '-' is stdin)")
    common.add_argument("--point", type=_point, help="evaluation point a,b,c,d")
    common.add_argument("--order", type=int, help=f"jet order D (default {DEFAULT_ORDER})")
    common.add_argument("--backend", choices=[EXACT, FLOAT], help="scalar backend (default exact)")
    common.add_argument("--seed", type=int, help="seed for probes and random generation")
    common.add_argument("--probe-count", type=int, help="number of probe points")
    common.add_argument("--probe-radius", type=_rational, help="probe cube half-side p/q")

    parser = argparse.ArgumentParser(prog="formgerms", description="Local invariants of 2-form germs in four variables.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("classify", parents=[common], help="rank, type, subtype and I")
    sub.add_parser("frame", parents=[common], help="frame data and identity residuals for a type-4 germ")
    p = sub.add_parser("equiv", parents=[common], help="compare invariant signatures of two germs")
    p.add_argument("--point2", type=_point, help="evaluation point of the second document")
    p.add_argument("-r", "--r", type=int, default=2, help="signature level (default 2)")
    p = sub.add_parser("generate", parents=[common], help="write form documents for a model family")
    p.add_argument("--output-dir", help="directory for the generated documents")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for residual checks")
    sub.add_parser("check-system", parents=[common], help="zero-test the type-4 normal-form system")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.backend is not None and args.backend not in BACKENDS:  # pragma: no cover - argparse guards it
        parser.error(f"unknown backend {args.backend}")
    fn, schema = COMMANDS[args.command]
    try:
        report = fn(args)
    except CliError as exc:
        return _fail(exc.code, exc.payload)
    except ParseError as exc:
        return _fail(EXIT_PARSE, {"error": "parse", "message": str(exc), "line": exc.line, "column": exc.column})
    except UnboundParameterError as exc:
        return _fail(EXIT_PARSE, {"error": "unbound-parameter", "message": str(exc), "name": exc.name})
    except DegenerateFormError as exc:
        return _fail(EXIT_DEGENERATE, {"error": "degenerate", "rank": exc.rank})
    except OrderBudgetError as exc:
        return _fail(EXIT_BUDGET, {"error": "order-budget", "message": str(exc), "order": exc.order})
    except FrameDegenerateError as exc:
        return _fail(EXIT_FRAME, {"error": "frame-degenerate", "message": str(exc)})
    except TranscendenceError as exc:
        return _fail(EXIT_PARSE, {"error": "transcendental", "message": str(exc)})
    except FormGermError as exc:
        return _fail(EXIT_DEGENERATE, {"error": type(exc).__name__, "message": str(exc)})
    validate(report, schema)
    sys.stdout.write(dumps(report))
    return 0


def _fail(code: int, payload: dict) -> int:
    payload = {**payload, "exit_code": code}
    validate(payload, "error")
    sys.stderr.write(dumps(payload))
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
