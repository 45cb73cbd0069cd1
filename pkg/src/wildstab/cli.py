"""Batch front end: problem files in, traces or JSON out.

A problem file (TOML or JSON, chosen by extension) carries a prime ``p``,
an optional family, a list of divisors and a list of covers::

    p = 2

    [family]
    vars = ["x", "y"]
    r = "x*y"

    [[divisors]]
    ledger = { steps = [{ kind = "point", center = ["x", "y"], chart = "x" }] }

    [[divisors]]
    t = 1
    F = "1 + y"
    a = 0

    [[covers]]
    kind = "direct"
    data = { phi = "u^2 + u^3" }

Exit codes: 0 success, 2 unstable witness or failed verification,
3 open obligations only, 4 bad input, 5 precision or step limit.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .covers import (ArtinSchreier, CoverSpec, Insep, Tame, boundary_pullback, cover_from_dict,
                     normal_form, tame_pullback, verify_artin_schreier)
from .divisors import (DivisorDatum, FamilyModel, divisor_ring,
                       from_blowup_ledger, ledger_from_dict, make_divisor,
                       validate_divisor, validate_family)
from .errors import (DepthExceeded, InputError, IoError, MultiSlope, NoGeneralPoint,
                     NotTransportable, PrecisionUnderflow, SchemaError, StepLimit,
                     ValidationError, VerificationFailed, VerificationInconclusive,
                     WildstabError)
from .oracle import chart_recompute
from .resolve import MAX_PRECISION, certify, run, tower_run

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_UNSTABLE, EXIT_OBLIGATIONS, EXIT_INPUT, EXIT_LIMIT = 0, 2, 3, 4, 5

TOP_KEYS = {"p", "family", "divisors", "covers", "options"}
FAMILY_KEYS = {"vars", "r", "declared_reduced", "name"}
DIVISOR_KEYS = {"name", "ledger", "t", "F", "a", "x", "params"}
LEDGER_KEYS = {"steps", "divisor"}
STEP_KEYS = {"point": {"kind", "center", "chart"}, "weil": {"kind", "b", "a", "k"}}
COVER_KEYS = {"kind", "data", "name"}
COVER_DATA = {"direct": {"phi"}, "artin_schreier": {"a", "c"}, "tame": {"m"},
              "insep": {"degree"}}
OPTION_KEYS = {"precision", "step_limit", "trace", "n_max"}


@dataclass
class ProblemFile:
    p: int
    family: FamilyModel | None
    divisors: list
    covers: list
    options: dict = field(default_factory=dict)
    divisor_names: list = field(default_factory=list)
    cover_names: list = field(default_factory=list)


def _is_prime(n: int) -> bool:
    return n >= 2 and all(n % k for k in range(2, int(n ** 0.5) + 1))


class _Checker:
    def __init__(self, path: str):
        self.path = path

    def fail(self, where: str, msg: str):
        raise SchemaError(msg, self.path, where)

    def table(self, obj, where: str, allowed: set, required=()) -> dict:
        if not isinstance(obj, dict):
            self.fail(where, "expected a table")
        extra = sorted(set(obj) - allowed)
        if extra:
            self.fail(where, f"unknown key {extra[0]!r}")
        for k in required:
            if k not in obj:
                self.fail(where, f"missing key {k!r}")
        return obj

    def int_(self, obj, where: str, lo: int | None = None, hi: int | None = None) -> int:
        if isinstance(obj, bool) or not isinstance(obj, int):
            self.fail(where, "expected an integer")
        if lo is not None and obj < lo:
            self.fail(where, f"must be at least {lo}")
        if hi is not None and obj > hi:
            self.fail(where, f"must be at most {hi}")
        return obj

    def str_(self, obj, where: str) -> str:
        if not isinstance(obj, str) or not obj.strip():
            self.fail(where, "expected a nonempty string")
        return obj

    def names(self, obj, where: str) -> list:
        if not isinstance(obj, list) or not obj:
            self.fail(where, "expected a nonempty list of names")
        for i, n in enumerate(obj):
            if not isinstance(n, str) or not n.isidentifier():
                self.fail(f"{where}[{i}]", "expected a variable name")
        if len(set(obj)) != len(obj):
            self.fail(where, "repeated name")
        return obj


def load_document(path) -> dict:
    """Read a TOML or JSON problem file into plain data."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoError(f"{path}: {exc.strerror or exc}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise SchemaError("file is not UTF-8", str(path), f"byte {exc.start}") from exc
    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(exc.msg, str(path), f"{exc.lineno}:{exc.colno}") from exc
        except RecursionError as exc:
            raise SchemaError("nesting too deep", str(path)) from exc
    elif path.suffix.lower() == ".toml":
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise SchemaError(str(exc), str(path)) from exc
        except RecursionError as exc:
            raise SchemaError("nesting too deep", str(path)) from exc
    else:
        raise SchemaError("expected a .toml or .json file", str(path))
    if not isinstance(doc, dict):
        raise SchemaError("top level must be a table", str(path))
    return doc


_WRAPPED = (WildstabError, ValueError, KeyError, TypeError, ZeroDivisionError, RecursionError,
            IndexError, OverflowError)


def _validated(where: str, fn, *args):
    try:
        return fn(*args)
    except InputError:
        raise
    except _WRAPPED as exc:
        raise ValidationError(f"{where}: {type(exc).__name__}: {exc}", exc, where) from exc


def _check_ledger(ck: _Checker, led, where: str) -> dict:
    ck.table(led, where, LEDGER_KEYS)
    steps = led.get("steps", [])
    if not isinstance(steps, list):
        ck.fail(f"{where}.steps", "expected a list")
    for i, st in enumerate(steps):
        w = f"{where}.steps[{i}]"
        if not isinstance(st, dict) or not isinstance(st.get("kind"), str) \
                or st["kind"] not in STEP_KEYS:
            ck.fail(w, "step kind must be 'point' or 'weil'")
        ck.table(st, w, STEP_KEYS[st["kind"]], sorted(STEP_KEYS[st["kind"]]))
        if st["kind"] == "point":
            ck.names(st["center"], f"{w}.center")
            ck.str_(st["chart"], f"{w}.chart")
        else:
            ck.str_(st["b"], f"{w}.b")
            ck.str_(st["a"], f"{w}.a")
            ck.int_(st["k"], f"{w}.k", 1, 64)
    if "divisor" in led:
        ck.str_(led["divisor"], f"{where}.divisor")
    return led


def parse_input(path) -> ProblemFile:
    """Load, schema-check and validate a problem file."""
    doc = load_document(path)
    ck = _Checker(str(path))
    ck.table(doc, "", TOP_KEYS, ("p", "divisors", "covers"))
    p = ck.int_(doc["p"], "p", 2)
    if p > 97 or not _is_prime(p):
        ck.fail("p", f"{p} is not a prime below 100")

    opts = ck.table(doc.get("options", {}), "options", OPTION_KEYS)
    options = {}
    if "precision" in opts:
        options["precision"] = ck.int_(opts["precision"], "options.precision", 4, MAX_PRECISION)
    if "step_limit" in opts:
        options["step_limit"] = ck.int_(opts["step_limit"], "options.step_limit", 0, 10 ** 6)
    if "n_max" in opts:
        options["n_max"] = ck.int_(opts["n_max"], "options.n_max", 1, 6)
    if "trace" in opts:
        if not isinstance(opts["trace"], bool):
            ck.fail("options.trace", "expected true or false")
        options["trace"] = opts["trace"]

    family = None
    if "family" in doc:
        fam = ck.table(doc["family"], "family", FAMILY_KEYS, ("vars", "r"))
        names = ck.names(fam["vars"], "family.vars")
        r = ck.str_(fam["r"], "family.r")
        reduced = fam.get("declared_reduced", False)
        if not isinstance(reduced, bool):
            ck.fail("family.declared_reduced", "expected true or false")
        label = fam.get("name", "")
        if not isinstance(label, str):
            ck.fail("family.name", "expected a string")
        family = _validated("family", FamilyModel.from_text, p, names, r, reduced, label)
        if not reduced:
            _validated("family", validate_family, family)

    raw_divs = doc["divisors"]
    if not isinstance(raw_divs, list):
        ck.fail("divisors", "expected a list of tables")
    divisors, dnames = [], []
    for i, dd in enumerate(raw_divs):
        w = f"divisors[{i}]"
        ck.table(dd, w, DIVISOR_KEYS)
        name = dd.get("name", f"divisor{i}")
        if not isinstance(name, str):
            ck.fail(f"{w}.name", "expected a string")
        if "ledger" in dd:
            extra = sorted(set(dd) - {"ledger", "name"})
            if extra:
                ck.fail(w, f"key {extra[0]!r} cannot be combined with a ledger")
            if family is None:
                ck.fail(w, "a ledger divisor needs a [family] table")
            led = _check_ledger(ck, dd["ledger"], f"{w}.ledger")
            ledger = _validated(w, ledger_from_dict, led)
            d = _validated(w, from_blowup_ledger, family, ledger)
        else:
            ck.table(dd, w, DIVISOR_KEYS - {"ledger"}, ("t", "F", "a"))
            t = ck.int_(dd["t"], f"{w}.t", 1, 10 ** 4)
            a = ck.int_(dd["a"], f"{w}.a", -10 ** 6, 10 ** 6)
            F = ck.str_(dd["F"], f"{w}.F")
            x = dd.get("x", "x")
            params = ck.names(dd.get("params", ["y"]), f"{w}.params")
            if not isinstance(x, str) or not x.isidentifier() or x in params:
                ck.fail(f"{w}.x", "expected a variable name distinct from the parameters")
            ring = _validated(w, divisor_ring, p, x, tuple(params))
            d = _validated(w, lambda: make_divisor(t, ring.parse(F), a))
        _validated(w, validate_divisor, d, p)
        divisors.append(d)
        dnames.append(name)

    raw_covers = doc["covers"]
    if not isinstance(raw_covers, list):
        ck.fail("covers", "expected a list of tables")
    covers, cnames = [], []
    for i, cc in enumerate(raw_covers):
        w = f"covers[{i}]"
        ck.table(cc, w, COVER_KEYS, ("kind",))
        kind = cc["kind"]
        if not isinstance(kind, str) or kind not in COVER_DATA:
            ck.fail(f"{w}.kind", f"unknown cover kind {kind!r}")
        data = ck.table(cc.get("data", {}), f"{w}.data", COVER_DATA[kind],
                        sorted(COVER_DATA[kind]))
        for k, v in data.items():
            if k in ("m", "degree"):
                ck.int_(v, f"{w}.data.{k}", 2, 10 ** 4)
            else:
                ck.str_(v, f"{w}.data.{k}")
        name = cc.get("name", f"cover{i}")
        if not isinstance(name, str):
            ck.fail(f"{w}.name", "expected a string")
        cover = _validated(w, cover_from_dict, {"kind": kind, "data": data}, p)
        if kind in ("direct", "artin_schreier"):
            _validated(w, normal_form, cover)
        covers.append(cover)
        cnames.append(name)
    return ProblemFile(p, family, divisors, covers, options, dnames, cnames)


# --- commands -----------------------------------------------------------------

@dataclass
class Settings:
    precision: int | None = None
    step_limit: int | None = None
    trace: bool = False
    n_max: int = 3


def _env_int(name: str, lo: int, hi: int) -> int | None:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return None
    try:
        val = int(raw)
    except ValueError:
        raise ValidationError(f"{name}={raw!r} is not an integer") from None
    if not lo <= val <= hi:
        raise ValidationError(f"{name}={val} is outside [{lo}, {hi}]")
    return val


def resolve_settings(args, prob: ProblemFile) -> Settings:
    """Flags win over environment variables, which win over the file's [options]."""
    opts = prob.options
    prec = args.trunc
    if prec is None:
        prec = _env_int("WILDSTAB_PRECISION", 4, MAX_PRECISION)
    if prec is None:
        prec = opts.get("precision")
    steps = args.step_limit
    if steps is None:
        steps = _env_int("WILDSTAB_STEP_LIMIT", 0, 10 ** 6)
    if steps is None:
        steps = opts.get("step_limit")
    return Settings(prec, steps, bool(args.trace or opts.get("trace", False)), opts.get("n_max", 3))


def _pair_row(prob, i, j) -> dict:
    return {"divisor": i, "divisor_name": prob.divisor_names[i],
            "cover": j, "cover_name": prob.cover_names[j]}


def _error_row(row: dict, exc: Exception) -> dict:
    row["error"] = type(exc).__name__
    row["message"] = str(exc)
    return row


def _exit_code(flags: set) -> int:
    for code in (EXIT_UNSTABLE, EXIT_LIMIT, EXIT_INPUT, EXIT_OBLIGATIONS):
        if code in flags:
            return code
    return EXIT_OK


def cmd_resolve(prob: ProblemFile, st: Settings) -> tuple:
    rows, flags, witness = [], set(), None
    for i, d in enumerate(prob.divisors):
        for j, c in enumerate(prob.covers):
            row = _pair_row(prob, i, j)
            try:
                o = run(d, c, st.precision, st.step_limit)
            except (StepLimit, PrecisionUnderflow) as exc:
                rows.append(_error_row(row, exc))
                flags.add(EXIT_LIMIT)
                continue
            except WildstabError as exc:
                rows.append(_error_row(row, exc))
                flags.add(EXIT_INPUT)
                continue
            row["outcome"] = o.to_dict()
            row["_outcome"] = o
            if o.obligations:
                flags.add(EXIT_OBLIGATIONS)
            if o.numeric and o.a_prime < -1:
                flags.add(EXIT_UNSTABLE)
                witness = witness or [i, j]
            rows.append(row)
    status = "Unstable" if witness else "StableOnTestedSet"
    return {"status": status, "witness": witness, "results": rows}, _exit_code(flags)


def cmd_conductor(prob: ProblemFile, st: Settings) -> tuple:
    rows, flags = [], set()
    for j, c in enumerate(prob.covers):
        row = {"cover": j, "cover_name": prob.cover_names[j], "label": c.label}
        k = c.kind
        try:
            if isinstance(k, Tame):
                row.update(kind="tame", pullback=tame_pullback(k.m, c.p))
            elif isinstance(k, Insep):
                row.update(kind="insep", degree=k.degree)
            else:
                nf = normal_form(c, st.precision or 32)
                row.update(kind="wild", s=nf.s, v=nf.v, different_exponent=nf.different_exponent,
                           normal_form=nf.reconstructed().to_text(),
                           pullback=boundary_pullback(nf))
                if isinstance(k, ArtinSchreier):
                    row["reconstructed"] = verify_artin_schreier(c, nf)
                    if not row["reconstructed"]:
                        flags.add(EXIT_UNSTABLE)
        except (StepLimit, PrecisionUnderflow) as exc:
            _error_row(row, exc)
            flags.add(EXIT_LIMIT)
        except VerificationFailed as exc:
            _error_row(row, exc)
            flags.add(EXIT_UNSTABLE)
        except WildstabError as exc:
            _error_row(row, exc)
            flags.add(EXIT_INPUT)
        rows.append(row)
    return {"results": rows}, _exit_code(flags)


def cmd_tower(prob: ProblemFile, st: Settings) -> tuple:
    res = tower_run(prob.divisors, prob.p, st.n_max)
    flags = set()
    if "not_lc" in res["verdicts"]:
        flags.add(EXIT_UNSTABLE)
    if res["open_obligations"]:
        flags.add(EXIT_OBLIGATIONS)
    return res, _exit_code(flags)


def _chart_row(d: DivisorDatum, c: CoverSpec) -> dict | None:
    prov = d.provenance
    if not (isinstance(prov, tuple) and prov and prov[0] == "ledger"):
        return None
    rec = chart_recompute(prov[1], prov[2], c)
    return {k: rec[k] for k in ("vx", "vu", "ram_index", "a_prime")}


def cmd_verify(prob: ProblemFile, st: Settings) -> tuple:
    """Engine outcomes checked by certificate substitution and by direct chart recomputation."""
    rows, flags = [], set()
    for i, d in enumerate(prob.divisors):
        for j, c in enumerate(prob.covers):
            row = _pair_row(prob, i, j)
            try:
                out, report = certify(d, c, st.precision)
            except VerificationInconclusive as exc:
                rows.append(_error_row(row, exc))
                flags.add(EXIT_LIMIT)
                continue
            except VerificationFailed as exc:
                rows.append(_error_row(row, exc))
                flags.add(EXIT_UNSTABLE)
                continue
            except (StepLimit, PrecisionUnderflow) as exc:
                rows.append(_error_row(row, exc))
                flags.add(EXIT_LIMIT)
                continue
            except WildstabError as exc:
                rows.append(_error_row(row, exc))
                flags.add(EXIT_INPUT)
                continue
            engine = {"vx": out.vx, "vu": out.vu, "ram_index": out.ram_index,
                      "a_prime": out.a_prime}
            row.update(engine=engine, certificate=report, obligations=list(out.obligations))
            if out.obligations:
                flags.add(EXIT_OBLIGATIONS)
            try:
                chart = _chart_row(d, c)
            except (NotTransportable, NoGeneralPoint, MultiSlope, DepthExceeded,
                    VerificationFailed) as exc:
                chart = None
                row["chart_obligation"] = f"{type(exc).__name__}: {exc}"
                flags.add(EXIT_OBLIGATIONS)
            row["chart"] = chart
            if chart is not None and out.numeric:
                keys = ("vx", "vu", "a_prime") if chart["ram_index"] is None else tuple(engine)
                row["agree"] = all(chart[k] == engine[k] for k in keys)
                if not row["agree"]:
                    flags.add(EXIT_UNSTABLE)
            rows.append(row)
    return {"results": rows}, _exit_code(flags)


def cmd_ledger_build(prob: ProblemFile, st: Settings) -> tuple:
    rows = []
    for i, d in enumerate(prob.divisors):
        ledger = isinstance(d.provenance, tuple) and d.provenance[0] == "ledger"
        rows.append({"divisor": i, "divisor_name": prob.divisor_names[i],
                     "source": "ledger" if ledger else "direct",
                     "t": d.t, "F": d.F.to_text(), "a": d.a, "x": d.x, "params": list(d.params),
                     "chart_map": d.chart_map})
    return {"results": rows}, EXIT_OK


COMMANDS = {"conductor": cmd_conductor, "resolve": cmd_resolve, "tower": cmd_tower,
            "verify": cmd_verify, "ledger-build": cmd_ledger_build}


# --- rendering ----------------------------------------------------------------

STEP_LABELS = {
    "EuclidBlowup": "coprime blow-up",
    "WeilBlowup": "weighted blow-up",
    "Reparam": "p-th power shift",
    "Standardize": "standardization",
    "TameBaseChange": "tame base change",
    "InsepBaseChange": "inseparable base change",
}


def _public(obj):
    if isinstance(obj, dict):
        return {k: _public(v) for k, v in obj.items() if not k.startswith("_")}
    if isinstance(obj, (list, tuple)):
        return [_public(v) for v in obj]
    return obj


def to_json(payload: dict) -> str:
    return json.dumps(_public(payload), sort_keys=True, indent=2, ensure_ascii=True)


def _headline(text: str, width: int = 72) -> str:
    return text if len(text) <= width else text[:width - 3] + "..."


def _render_outcome(o, trace: bool) -> list:
    lines = []
    if o.numeric:
        lines.append(f"  {o.terminal_kind} {o.label}: vx={o.vx} vu={o.vu} "
                     f"ram={o.ram_index}  a={o.a} -> a'={o.a_prime}")
    else:
        lines.append(f"  {o.terminal_kind} {o.label}: no number (obligation)")
    if trace:
        for k, step in enumerate(o.trace):
            detail = " ".join(f"{key}={val}" for key, val in sorted(step.detail.items()))
            meas = f"  measure={tuple(step.measure)}" if step.measure is not None else ""
            lines.append(f"    {k:>3} {STEP_LABELS.get(step.kind, step.kind)}: {detail}{meas}")
        if o.equation is not None:
            lines.append(f"    final equation: {_headline(o.equation.to_text())}")
    for ob in o.obligations:
        lines.append(f"    obligation: {ob}")
    return lines


def render_text(command: str, payload: dict, trace: bool) -> str:
    lines = []
    if "status" in payload:
        lines.append(f"status: {payload['status']}")
    if command == "tower":
        for lv in payload["levels"]:
            vals = ", ".join(str(r["a_prime"]) for r in lv["rows"])
            lines.append(f"n={lv['n']} degree={lv['degree']}: {lv['verdict']} (a' = {vals})")
            if trace:
                for k, r in enumerate(lv["rows"]):
                    if r["discharged_by"]:
                        lines.append(f"    row {k}: computed by {r['discharged_by']}")
                        continue
                    for ob in r["obligations"]:
                        lines.append(f"    row {k} obligation: {ob}")
        lines.append(f"stabilized: {payload['stabilized']}")
        return "\n".join(lines)
    for row in payload["results"]:
        if "cover" in row and "divisor" in row:
            head = f"[{row['divisor']},{row['cover']}] {row['divisor_name']} x {row['cover_name']}"
        elif "cover" in row:
            head = f"[{row['cover']}] {row['cover_name']} {row['label']}"
        else:
            head = f"[{row['divisor']}] {row['divisor_name']} ({row['source']})"
        if "error" in row:
            lines.append(f"{head}: {row['error']}: {row['message']}")
            continue
        lines.append(head)
        if "_outcome" in row:
            lines.extend(_render_outcome(row["_outcome"], trace))
        elif command == "conductor":
            body = {k: v for k, v in row.items() if k not in ("cover", "cover_name", "label")}
            lines.extend(f"  {k}: {v}" for k, v in sorted(body.items()))
        elif command == "verify":
            lines.append(f"  engine: {row['engine']}")
            lines.append(f"  certificate: {row['certificate']}")
            if row.get("chart") is not None:
                lines.append(f"  chart: {row['chart']}  agree={row.get('agree')}")
            if "chart_obligation" in row:
                lines.append(f"  chart obligation: {row['chart_obligation']}")
        else:
            lines.append(f"  t={row['t']} a={row['a']} F={row['F']}")
            if trace and row["chart_map"]:
                lines.extend(f"    {v} = {img}" for v, img in sorted(row["chart_map"].items()))
    return "\n".join(lines)


# --- entry point --------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise SchemaError(message, "argv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wildstab", description="Discrepancies under wild base change.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--input", required=True, help="problem file (.toml or .json)")
        sp.add_argument("--json", action="store_true", help="emit JSON instead of text")
        sp.add_argument("--trace", action="store_true", help="list every step")
        sp.add_argument("--trunc", type=int, default=None, metavar="N",
                        help="working truncation order")
        sp.add_argument("--step-limit", type=int, default=None, metavar="N",
                        help="bound on engine steps")
    return parser


def run_command(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.trunc is not None and not 4 <= args.trunc <= MAX_PRECISION:
            raise SchemaError(f"--trunc must lie in [4, {MAX_PRECISION}]", "argv")
        if args.step_limit is not None and not 0 <= args.step_limit <= 10 ** 6:
            raise SchemaError("--step-limit must lie in [0, 1000000]", "argv")
        prob = parse_input(args.input)
        st = resolve_settings(args, prob)
    except InputError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INPUT
    try:
        payload, code = COMMANDS[args.command](prob, st)
    except (StepLimit, PrecisionUnderflow) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_LIMIT
    payload = {"command": args.command, "p": prob.p, "exit_code": code, **payload}
    if args.json:
        print(to_json(payload), file=stdout)
    else:
        print(render_text(args.command, payload, st.trace), file=stdout)
    return code


def main() -> None:
    sys.exit(run_command())
