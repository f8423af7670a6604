"""Acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (printed at session end by conftest, and
inline with ``-s``).  Tolerances: every comparison here is exact.
Run directly with ``python tests/test_acceptance.py`` for just the summary.
"""

from __future__ import annotations

import json
import random
import subprocess
import sys
import time
from collections import Counter
from fractions import Fraction
from pathlib import Path

import pytest

from acceptance_log import record
from support import ORIGIN, random_diffeomorphism, random_rank4_form, rational_point, type4_instance

from formgerms.analysis import Germ, ProbeSettings, compute_A, compute_omega, determine_type
from formgerms.errors import FrameDegenerateError
from formgerms.exterior import evaluate, pullback, wedge
from formgerms.expr import Exp, Var, as_expression, eval_jet, parse_expression
from formgerms.expr.calculus import derive_multi
from formgerms.frame import (
    EQUIVALENT,
    build_frame,
    check_identities,
    decide_equivalence,
    example18_log,
    invariant_signature,
)
from formgerms.jets import EXACT, EXACT_EXP
from formgerms.linalg import pfaffian4
from formgerms.models import (
    ModelSpec,
    builtin_models,
    check_system,
    coefficients,
    example18_generic,
    example36_rho,
    instantiate,
    random_polynomial,
    random_prop51_spec,
)

PKG_ROOT = Path(__file__).resolve().parents[1]
ARTIFACTS = PKG_ROOT / "artifacts"
PROBES = ProbeSettings(count=16)
TIME_LIMIT_TYPE = 1.0
TIME_LIMIT_IDENTITIES = 60.0


def jet_equal(a, b) -> bool:
    return a.order == b.order and list(a.coeffs) == list(b.coeffs)


def form_matches(form, expected: dict, point, backend=EXACT_EXP) -> bool:
    """Compare a 1-form jet with expression coefficients ``{index: expr}``."""
    for i in range(1, 5):
        mine = form.coeffs[(i,)]
        want = eval_jet(as_expression(expected.get(i, 0)), point, mine.order, None, backend)
        if list(mine.to_backend(backend).coeffs) != list(want.coeffs):
            return False
    return True


# ---------------------------------------------------------------------------


def test_criterion_01_model_classification():
    cases = [
        ("Type1", ModelSpec("Type1"), 1, None),
        ("Type2", ModelSpec("Type2"), 2, None),
        ("Type3 f=ln(1/(1+x4))", ModelSpec("Type3", {"f": "ln(1/(1+x4))"}), 3, "3.1"),
        ("FinerType3 F=1+x4", ModelSpec("FinerType3", {"F": "1+x4"}), 3, "3.1"),
    ]
    details, ok = [], True
    for name, spec, t, sub in cases:
        start = time.perf_counter()
        v = determine_type(instantiate(spec), ORIGIN, probe=PROBES, backend=EXACT)
        elapsed = time.perf_counter() - start
        good = (
            v.type == t and v.subtype == sub and v.constancy_certified
            and len(v.sample_report) == 16 and v.backend in (EXACT, EXACT_EXP) and elapsed < TIME_LIMIT_TYPE
        )
        ok &= good
        details.append(f"{name}: type {v.type} {v.subtype or ''} certified={v.constancy_certified} {elapsed:.2f}s")
    record(1, ok, "; ".join(details))
    assert ok


def test_criterion_02_omega():
    ok1 = form_matches(compute_omega(instantiate(ModelSpec("Type1")), ORIGIN, 4), {3: 1}, ORIGIN)
    ok2 = form_matches(compute_omega(instantiate(ModelSpec("Type2")), ORIGIN, 4), {3: parse_expression("1+x1")}, ORIGIN)
    rng = random.Random(2)
    agree = 0
    for _ in range(200):
        point = rational_point(rng)
        g = Germ(random_rank4_form(rng, 2, point), point, 3)
        if all(jet_equal(g.omega.coeffs[k], g.omega_via_field.coeffs[k]) for k in g.omega.coeffs):
            agree += 1
    ok = ok1 and ok2 and agree == 200
    record(2, ok, f"type-1 omega=dx3: {ok1}; type-2 omega=(1+x1)dx3: {ok2}; routes agree on {agree}/200")
    assert ok


def _phi_expected_finer(F):
    F = as_expression(F)
    x1, x3 = Var(1), Var(3)
    from formgerms.expr.calculus import add, mul, neg

    return {
        1: neg(derive_multi(F, (4,))),
        3: mul(Exp(neg(mul(add(as_expression(1), x1), x3))), derive_multi(F, (2,))),
    }


def test_criterion_03_phi():
    ok, details = True, []
    rng = random.Random(3)
    for F in ("1+x4", "1+x2", "1+x2^2+x4^2"):
        form = instantiate(ModelSpec("FinerType3", {"F": F}))
        good = True
        for point in (ORIGIN, rational_point(rng, Fraction(1, 4))):
            g = Germ(form, point, 4)
            good &= form_matches(g.phi, _phi_expected_finer(parse_expression(F)), point)
        ok &= good
        details.append(f"F={F}: {good}")
    from formgerms.expr.calculus import mul, neg

    for lam, cls in (("x1*x3*x4", 2), ("1/2", 1)):
        g = Germ(instantiate(ModelSpec("Example36", {"lambda": lam})), ORIGIN, 4)
        lam_e = parse_expression(lam)
        good = form_matches(g.phi, {1: mul(Exp(neg(lam_e)), example36_rho(lam_e))}, ORIGIN) and g.phi_class() == cls
        ok &= good
        details.append(f"Ex3.6 lambda={lam}: class {g.phi_class()} {good}")
    record(3, ok, "; ".join(details))
    assert ok


def _closed_I(a, b):
    from formgerms.expr.calculus import add, mul, neg, sub

    c = sub(a, b)
    d = lambda i, j: derive_multi(c, (i, j))  # noqa: E731
    return mul(Exp(neg(add(a, b))), sub(mul(d(1, 4), d(2, 3)), mul(d(1, 3), d(2, 4))))


def test_criterion_04_invariant_I():
    rng = random.Random(4)
    matched = residual_zero = 0
    for _ in range(100):
        a, b = random_polynomial(rng, 3), random_polynomial(rng, 3)
        point = rational_point(rng, Fraction(1, 4))
        form = instantiate(ModelSpec("Example51", {"a": a, "b": b}))
        rec = compute_A(form, point, 2)
        want = eval_jet(_closed_I(a, b), point, 0, None, EXACT_EXP).value
        matched += rec.I == want
        residual_zero += rec.char_poly_residual == 0
    zero_cases = []
    for a in ("x3", "(1+x1)*x3"):
        form = instantiate(ModelSpec("Example51", {"a": a, "b": "0"}))
        zero_cases.append(all(Germ(form, p, 2).I == 0 for p in (ORIGIN, rational_point(rng))))
    low_type = []
    for name, spec, expected in builtin_models():
        if expected["type"] == 0:
            continue
        form = instantiate(spec)
        pts = [ORIGIN] + [rational_point(rng, Fraction(1, 32)) for _ in range(3)]
        low_type.append(all(Germ(form, p, 2).I == 0 for p in pts))
    ok = matched == 100 and residual_zero == 100 and all(zero_cases) and all(low_type)
    record(4, ok, f"closed formula {matched}/100; char-poly residual 0 on {residual_zero}/100; "
                  f"I=0 for a=x3,(1+x1)x3: {zero_cases}; I=0 on {sum(low_type)}/{len(low_type)} type<=3 fixtures")
    assert ok


BASIC = ("Z_solves", "T_solves", "i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix")
EXTENDED = ("formula1", "Omega_Z_T", "x", "xi", "xii", "xiii", "xiv")


def test_criterion_05_identity_suite():
    rng = random.Random(5)
    start = time.perf_counter()
    n = full = 0
    failures = Counter()
    while n < 100:
        spec = random_prop51_spec(rng, 2)
        g = Germ(instantiate(spec), ORIGIN, 4)
        if g.rank < 4:
            continue
        n += 1
        res = check_identities(g)
        for name in BASIC:
            if not (res[name].applicable and res[name].holds):
                failures[name] += 1
        if all(res[name].applicable for name in EXTENDED):
            full += 1
            for name in EXTENDED:
                if not res[name].holds:
                    failures[name] += 1
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < TIME_LIMIT_IDENTITIES and full > 0
    record(5, ok, f"{n} instances, (x)-(xiv)+(formula1) applicable on {full}; failures {dict(failures)}; {elapsed:.1f}s")
    assert ok


def _frame_instances():
    rng = random.Random(6)
    out = [type4_instance(rng)[2] for _ in range(20)]
    for c in (1, 2, 3):
        for lam in (1, 2, 3):
            if example18_generic(c, lam):
                out.append(Germ(instantiate(ModelSpec("Example18", {"c": c, "lambda": lam})), ORIGIN, 5))
    return out


def test_criterion_06_frame_structure():
    checked, bad = 0, []
    for g in _frame_instances():
        try:
            fd = build_frame(g)
        except FrameDegenerateError:
            continue
        checked += 1
        L, J, ZJ = fd.Lambda, fd.J, fd.ZJ
        skew = all(L[i][j] == -L[j][i] for i in range(4) for j in range(4))
        display = (L[0][1], L[0][2], L[0][3], L[1][2], L[1][3]) == (0, 0, J, J, ZJ)
        vol4 = evaluate(wedge(g.Omega, g.Omega), fd.Z, fd.T, fd.U, fd.V).value == 2 * J * J
        pf = pfaffian4(L) ** 2 == J**4
        table = tuple(fd.primed_table(g.Omega).values()) == (0, 0, 1, 1, 0, 0)
        if not (skew and display and vol4 and pf and table):
            bad.append((skew, display, vol4, pf, table))
    ok = checked > 0 and not bad
    record(6, ok, f"{checked} frames checked; Lambda display, 2J^2, Pf(Lambda)^2=J^4, primed table; failures {len(bad)}")
    assert ok


def test_criterion_07_functoriality():
    rng = random.Random(7)
    order = 7
    pairs = agree = 0
    problems = Counter()
    while pairs < 50:
        _, form, _ = type4_instance(rng, order=5)
        # a matched point q near the origin where the original germ still has a frame
        for _ in range(10):
            q = rational_point(rng, Fraction(1, 16))
            gq = Germ(form, q, order)
            try:
                if gq.omega_class() == 4:
                    fq = build_frame(gq)
                    break
            except FrameDegenerateError:
                pass
        else:
            continue
        sig_q = invariant_signature(gq, r=2)
        for _ in range(5):
            phi = random_diffeomorphism(rng, q)
            P = pullback(phi, form, ORIGIN, order)
            gp = Germ(P, ORIGIN, order)
            pairs += 1
            checks = {
                "omega": all(jet_equal(a, b) for a, b in zip(
                    gp.omega.components(), pullback(phi, gq.omega, ORIGIN, order).components())),
                "phi": all(jet_equal(a, b) for a, b in zip(
                    gp.phi.components(), pullback(phi, gq.phi, ORIGIN, order).components())),
                "I": gp.I == gq.I,
                "J": build_frame(gp).J == fq.J,
                "signature": invariant_signature(gp, r=2).levels == sig_q.levels,
                "decide": decide_equivalence(gp, ORIGIN, gq, q, r=2).status == EQUIVALENT,
            }
            for k, v in checks.items():
                if not v:
                    problems[k] += 1
            agree += all(checks.values())
            if pairs >= 50:
                break
    ok = agree == 50
    record(7, ok, f"{agree}/50 pullback pairs agree on omega, phi, I, J, order-2 signature, verdict; mismatches {dict(problems)}")
    assert ok


def test_criterion_08_prop51_generator():
    rng = random.Random(8)
    clean = 0
    for _ in range(200):
        spec = random_prop51_spec(rng, 2)
        rep = check_system(coefficients(spec))
        clean += all(rep[k]["verdict"] == "Zero" for k in ("e1", "e2", "e3", "e4", "prolongation", "F34_plus_F12"))
    ok = clean == 200
    record(8, ok, f"{clean}/200 generated tuples with e1..e4 and the prolongation constraint identically zero")
    assert ok


def test_criterion_09_example18_log():
    log = example18_log((1, 2, 3), (1, 2, 3), order=5)
    ARTIFACTS.mkdir(exist_ok=True)
    path = ARTIFACTS / "example18_crosscheck.json"
    path.write_text(json.dumps(log, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    tally = Counter((r["quantity"], r["pass"]) for r in log)
    identity_failures = 0
    for c in (1, 2, 3):
        for lam in (1, 2, 3):
            g = Germ(instantiate(ModelSpec("Example18", {"c": c, "lambda": lam})), ORIGIN, 5)
            for res in check_identities(g).values():
                if res.applicable and not res.holds:
                    identity_failures += 1
    grid = {(r["c"], r["lambda"]) for r in log}
    ok = len(grid) == 9 and identity_failures == 0
    summary = ", ".join(f"{q}: {tally[(q, True)]} pass/{tally[(q, False)]} fail"
                        for q in ("omega", "phi", "Z", "T", "U", "V", "frame_volume"))
    record(9, ok, f"log written to {path.relative_to(PKG_ROOT)} ({len(log)} records; {summary}); "
                  f"identity failures {identity_failures}")
    assert ok


def _cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "formgerms", *args], cwd=cwd, capture_output=True)


def test_criterion_10_cli_determinism(tmp_path):
    (tmp_path / "t2.json").write_text(json.dumps({"model": {"family": "Type2"}}))
    (tmp_path / "e18.json").write_text(json.dumps({"model": {"family": "Example18", "params": {"c": "1", "lambda": "1"}}}))
    (tmp_path / "e18b.json").write_text(json.dumps({"model": {"family": "Example18", "params": {"c": "1", "lambda": "2"}}}))
    (tmp_path / "gen.json").write_text(json.dumps({"family": "Prop51", "count": 3, "degree": 2}))
    commands = [
        ["classify", "--input", "t2.json", "--seed", "11", "--probe-count", "8"],
        ["frame", "--input", "e18.json"],
        ["equiv", "--input", "e18.json", "--input", "e18b.json"],
        ["generate", "--input", "gen.json", "--seed", "13"],
        ["check-system", "--input", "e18.json"],
    ]
    same = 0
    for cmd in commands:
        a, b = _cli(cmd, tmp_path), _cli(cmd, tmp_path)
        same += a.returncode == b.returncode == 0 and a.stdout == b.stdout and len(a.stdout) > 0
    ok = same == len(commands)
    record(10, ok, f"{same}/{len(commands)} commands byte-identical across two runs")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
