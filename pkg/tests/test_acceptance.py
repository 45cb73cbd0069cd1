"""Acceptance suite: one printed PASS/FAIL line per criterion, exact arithmetic throughout.

Run under pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

import functools
import io
import json
import random
import tempfile
import time
from math import gcd
from pathlib import Path

import pytest

from wildstab.cli import load_document, run_command
from wildstab.covers import (ArtinSchreier, CoverSpec, DirectExpansion, Insep, Tame,
                             boundary_pullback, disk_ring, normal_form, verify_artin_schreier)
from wildstab.divisors import bundled_divisor, bundled_families, bundled_ledgers
from wildstab.errors import MultiSlope, StepLimit
from wildstab.oracle import chart_recompute, newton_polygon_valuation, verify_outcome
from wildstab.resolve import run, tower_run
from wildstab.suites import fuzz_documents, newton_model, random_divisor, random_wild_cover

PRIMES = (2, 3, 5)
PROBLEMS = Path(__file__).resolve().parents[1] / "problems"
RESULTS = {}


def direct(p, text, prec=40):
    return CoverSpec(DirectExpansion(disk_ring(p, "u", prec).parse(text)), p)


def conductors(p):
    return [s for s in range(1, 8) if gcd(s, p) == 1]


# --- shared randomized suites -----------------------------------------------------

def attempt(d, c):
    """Engine outcome, or the StepLimit it raised (counted by the termination criterion)."""
    try:
        return run(d, c)
    except StepLimit as exc:
        return exc


@functools.cache
def coprime_suite(per_cell=50):
    rng = random.Random(1)
    rows = []
    t0 = time.perf_counter()
    for p in PRIMES:
        for s in conductors(p):
            for t in range(1, 13):
                if gcd(t, p) != 1:
                    continue
                for _ in range(per_cell):
                    d = random_divisor(rng, p, t)
                    c = random_wild_cover(rng, p, s)
                    rows.append((d, c, attempt(d, c)))
    return rows, time.perf_counter() - t0


@functools.cache
def dpositive_suite(per_cell=50):
    rng = random.Random(2)
    rows = []
    for p in PRIMES:
        for s in conductors(p):
            for t in range(p, 13, p):
                for _ in range(per_cell):
                    d = random_divisor(rng, p, t, shape="dpositive")
                    c = random_wild_cover(rng, p, s)
                    rows.append((d, c, attempt(d, c)))
    return rows


@functools.cache
def general_suite(per_cell=4):
    """p | t with unrestricted F: exercises every terminal and the obligation paths."""
    rng = random.Random(3)
    rows = []
    for p in PRIMES:
        for s in conductors(p):
            for t in range(p, 13, p):
                for _ in range(per_cell):
                    d = random_divisor(rng, p, t, shape="general")
                    c = random_wild_cover(rng, p, s)
                    rows.append((d, c, attempt(d, c)))
    return rows


def wild_covers(p):
    out = [direct(p, f"u^{p} + u^{p + s}") for s in conductors(p)[:3]]
    if p == 2:
        R = disk_ring(2, "r", 40)
        out.append(CoverSpec(ArtinSchreier(R.parse("r"), R.parse("r")), 2))
    return out


@functools.cache
def bundled_suite():
    rows = []
    for p in PRIMES:
        for name in bundled_ledgers():
            d = bundled_divisor(name, p)
            for c in wild_covers(p):
                rows.append((name, d, c, attempt(d, c)))
    return rows


def all_pairs(include_failures=False):
    pairs = [(d, o) for d, _, o in coprime_suite()[0]]
    pairs += [(d, o) for d, _, o in dpositive_suite()]
    pairs += [(d, o) for d, _, o in general_suite()]
    pairs += [(d, o) for _, d, _, o in bundled_suite()]
    if include_failures:
        return pairs
    return [(d, o) for d, o in pairs if not isinstance(o, StepLimit)]


def numeric(pairs):
    return [(d, o) for d, o in pairs if o.numeric]


# --- criteria -----------------------------------------------------------------------

def criterion_1():
    rows, elapsed = coprime_suite()
    bad = [(d, o) for d, c, o in rows
           if isinstance(o, StepLimit) or not o.numeric
           or o.a_prime + 1 != o.p * (d.a + 1) or o.ram_index != o.s * d.t + o.p - 1]
    ok = not bad and elapsed < 60
    return ok, f"{len(rows)} runs, {len(bad)} mismatches, {elapsed:.1f}s (budget 60s)"


def criterion_2():
    rows = dpositive_suite()
    bad = [(d, o) for d, c, o in rows
           if isinstance(o, StepLimit) or not o.numeric
           or o.a_prime != d.a or o.ram_index != (d.t // o.p) * o.s]
    return not bad, f"{len(rows)} runs, {len(bad)} mismatches"


def criterion_3():
    rows = numeric(all_pairs())
    bad = [o for _, o in rows if o.p * o.vu != o.t * o.vx]
    return not bad, f"{len(rows)} numeric outcomes, {len(bad)} violations"


@functools.cache
def oracle_sample():
    coprime = [(d, c, o) for d, c, o in coprime_suite()[0] if o.numeric][::31]
    rest = [(d, c, o) for d, c, o in dpositive_suite() + general_suite()
            if not isinstance(o, StepLimit) and o.numeric]
    return coprime + rest


def criterion_4():
    from wildstab.resolve import certify

    newton_ok = newton_bad = skipped = cert_ok = cert_bad = 0
    for d, c, o in oracle_sample() + [(d, c, o) for _, d, c, o in bundled_suite()
                                      if not isinstance(o, StepLimit) and o.numeric]:
        P, u = newton_model(d, normal_form(c, 48).phi)
        try:
            vv = newton_polygon_valuation(P, u, d.x)
        except MultiSlope:
            skipped += 1
        else:
            if vv == (o.vx, o.vu):
                newton_ok += 1
            else:
                newton_bad += 1
        try:
            out, report = certify(d, c)
            good = report is not None and (report["vu"], report["ram_index"]) == (o.vu, o.ram_index)
        except Exception:
            good = False
        cert_ok += good
        cert_bad += not good
    chart_ok = chart_bad = 0
    fams = bundled_families()
    for name, d, c, o in bundled_suite():
        if isinstance(o, StepLimit) or not o.numeric:
            continue
        fam, led = bundled_ledgers()[name]
        try:
            rec = chart_recompute(fams[fam](d.p), led, c)
            same = (rec["vx"], rec["vu"], rec["ram_index"], rec["a_prime"]) == \
                (o.vx, o.vu, o.ram_index, o.a_prime)
        except Exception:
            same = False
        chart_ok += same
        chart_bad += not same
    ok = newton_ok >= 100 and not newton_bad and not cert_bad and not chart_bad
    return ok, (f"newton {newton_ok} ok / {newton_bad} bad / {skipped} multislope; "
                f"certificates {cert_ok} ok / {cert_bad} bad; "
                f"chart_recompute {chart_ok} ok / {chart_bad} bad")


def criterion_5():
    pairs = all_pairs()
    lc_bad = [o for d, o in numeric(pairs) if d.a >= -1 and o.a_prime < -1]
    silent = [o for _, o in pairs if o.obligations and (o.numeric or o.vx is not None)]
    rng = random.Random(5)
    insep_bad = insep_runs = 0
    for p in PRIMES:
        divs = [bundled_divisor(n, p) for n in bundled_ledgers()]
        divs += [random_divisor(rng, p, rng.randint(1, 12), "general") for _ in range(10)]
        for deg in (p, p * p):
            for d in divs:
                o = run(d, CoverSpec(Insep(deg), p))
                insep_runs += 1
                insep_bad += not o.obligations or o.numeric
    obligations = sum(bool(o.obligations) for _, o in pairs)
    ok = not lc_bad and not silent and not insep_bad
    return ok, (f"{len(lc_bad)} lc violations; {obligations} obligation outcomes, "
                f"{len(silent)} with numbers; insep {insep_runs} runs, {insep_bad} numeric")


def criterion_6():
    pairs = all_pairs(include_failures=True)
    limits = [o for _, o in pairs if isinstance(o, StepLimit)]
    steps = flat = 0
    for _, o in pairs:
        if isinstance(o, StepLimit):
            continue
        measures = [tuple(st.measure) for st in o.trace if st.measure is not None]
        steps += len(measures)
        flat += sum(not b < a for a, b in zip(measures, measures[1:]))
    return not limits and not flat, (f"{len(pairs)} runs, {steps} measured steps, "
                                     f"{flat} non-decreasing, {len(limits)} StepLimit")


def random_artin_schreier(rng, p, prec=40):
    """``(cover, s)`` with ``-c/a^p = g + h^p - h``, ``g`` of pole order ``m`` prime to ``p``.

    The break of ``T^p - T = g`` is ``m``; the different exponent ``p + s - 1`` equals
    ``(p - 1)(m + 1)``, so the normal-form conductor is ``s = (p - 1) m``.
    """
    m = s = rng.choice(conductors(p))
    w = {-s: rng.randint(1, p - 1)}
    for k in range(-s + 1, 6):
        if rng.random() < 0.4:
            w[k] = (w.get(k, 0) + rng.randint(1, p - 1)) % p
    for k in range(0, 3):
        dk = rng.randint(0, p - 1)
        w[-k * p] = (w.get(-k * p, 0) + dk) % p
        w[-k] = (w.get(-k, 0) - dk) % p
    K = -(-max(s, 2 * p) // p)
    R = disk_ring(p, "r", prec)
    c = R.series({(k + K * p,): (-v) % p for k, v in w.items() if v % p})
    return CoverSpec(ArtinSchreier(R.var("r") ** K, c), p), (p - 1) * m


WORKED = [
    (direct(2, "u^2 + u^3"), 1),
    (CoverSpec(ArtinSchreier(disk_ring(2, "r", 40).parse("r"), disk_ring(2, "r", 40).parse("r")), 2), 1),
    (direct(2, "u^2 + u^4 + u^5"), 3),
    (direct(3, "u^3 + 2*u^5"), 2),
]


def criterion_7():
    rng = random.Random(7)
    cases = list(WORKED)
    for p in PRIMES:
        cases += [random_artin_schreier(rng, p) for _ in range(50)]
    bad = 0
    for cover, s in cases:
        try:
            nf = normal_form(cover, 40)
            good = nf.s == s and nf.reconstructed() == nf.phi
            if isinstance(cover.kind, ArtinSchreier):
                good = good and verify_artin_schreier(cover, nf)
            good = good and boundary_pullback(nf)["logform_order"] == s - 1
        except Exception:
            good = False
        bad += not good
    return not bad, f"{len(cases)} covers ({len(WORKED)} worked examples), {bad} failures"


def criterion_8():
    fams = bundled_families()
    runs = bad = 0
    for p in PRIMES:
        for m in (2, 3, 4, 5):
            if gcd(m, p) != 1:
                continue
            for name, (fam, led) in bundled_ledgers().items():
                d = bundled_divisor(name, p)
                rec = chart_recompute(fams[fam](p), led, CoverSpec(Tame(m), p))
                runs += 1
                bad += (rec["a_prime"] >= -1) != (d.a >= -1)
    return not bad, f"{runs} tame chart recomputations, {bad} verdict changes"


def tower_report(p, fam):
    ds = [bundled_divisor(n, p) for n, (f, _) in bundled_ledgers().items() if f == fam]
    return tower_run(ds, p, 3)


def criterion_9():
    notes, ok = [], True
    for p in PRIMES:
        for fam in ("smooth", "nodal"):
            first = tower_report(p, fam)
            again = tower_report(p, fam)
            same = json.dumps(first, sort_keys=True) == json.dumps(again, sort_keys=True)
            listed = all(lv["verdict"] != "obligations" or
                         any(o["n"] == lv["n"] for o in first["open_obligations"])
                         for lv in first["levels"])
            good = same and len(first["levels"]) == 3 and first["stabilized"] and listed
            ok &= good
            opened = len(first["open_obligations"])
            notes.append(f"p={p} {fam}: {'/'.join(first['verdicts'])}"
                         + (f" ({opened} open)" if opened else ""))
    return ok, "; ".join(notes)


FUZZ_COMMANDS = ("resolve", "conductor", "ledger-build", "verify")


def criterion_10():
    seeds = [(f.suffix, f.read_bytes(), load_document(f)) for f in sorted(PROBLEMS.iterdir())]
    docs = fuzz_documents(random.Random(10), seeds, 1000)
    codes = {}
    with tempfile.TemporaryDirectory() as tmp:
        for k, (suffix, blob) in enumerate(docs):
            path = Path(tmp) / f"fuzz{k}{suffix}"
            path.write_bytes(blob)
            try:
                code = run_command([FUZZ_COMMANDS[k % 4], "--input", str(path), "--json"],
                                   io.StringIO(), io.StringIO())
            except Exception as exc:
                code = type(exc).__name__
            codes[code] = codes.get(code, 0) + 1
    undocumented = {c: n for c, n in codes.items() if c not in (0, 2, 3, 4, 5)}
    unstable = []
    for f in sorted(PROBLEMS.iterdir()):
        for cmd in FUZZ_COMMANDS + ("tower",):
            outs = set()
            for _ in range(3):
                buf = io.StringIO()
                run_command([cmd, "--input", str(f), "--json"], buf, io.StringIO())
                outs.add(buf.getvalue())
            if len(outs) != 1:
                unstable.append(f"{f.name}:{cmd}")
    tally = ", ".join(f"{c}:{n}" for c, n in sorted(codes.items(), key=str))
    return not undocumented and not unstable, (f"fuzz exit codes {{{tally}}}; "
                                               f"{len(unstable)} byte-unstable outputs")


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 11)}


def evaluate(n):
    t0 = time.perf_counter()
    try:
        ok, detail = CRITERIA[n]()
    except Exception as exc:
        ok, detail = False, f"crashed: {type(exc).__name__}: {exc}"
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}  [{time.perf_counter() - t0:.1f}s]"
    RESULTS[n] = line
    print(line)
    return ok, line


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n):
    ok, line = evaluate(n)
    assert ok, line


if __name__ == "__main__":
    results = [evaluate(n)[0] for n in sorted(CRITERIA)]
    raise SystemExit(0 if all(results) else 1)
