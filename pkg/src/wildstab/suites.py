"""Random admissible inputs for property suites and demos.

A divisor datum ``(t, F, a)`` is admissible when it passes ``validate_divisor``
and ``a`` is at least ``max(-1, discrepancy_floor)``: below the floor no
divisor on a smooth model carries that datum.
"""

from __future__ import annotations

import random
from math import gcd

from .covers import CoverSpec, DirectExpansion, disk_ring
from .divisors import DivisorDatum, discrepancy_floor, divisor_ring, make_divisor, validate_divisor
from .errors import DivisorError


def random_wild_cover(rng: random.Random, p: int, s: int, precision: int = 40) -> CoverSpec:
    """``r = u^p + c u^(p+s) + (sparse tail)`` with conductor ``s``."""
    if gcd(s, p) != 1:
        raise ValueError("conductor must be prime to p")
    R = disk_ring(p, "u", precision)
    terms = {(p,): 1, (p + s,): rng.randint(1, p - 1)}
    for k in range(p + s + 1, min(precision, p + s + 8) + 1):
        if rng.random() < 0.3:
            terms[(k,)] = rng.randint(1, p - 1)
    return CoverSpec(DirectExpansion(R.series(terms)), p)


def _random_poly(rng, R, x, params, max_deg, density):
    names = (x,) + tuple(params)
    terms = {}
    for _ in range(rng.randint(1, 4)):
        e = [0] * len(R.names)
        for n in names:
            if rng.random() < density:
                e[R.index(n)] = rng.randint(0, max_deg)
        terms[tuple(e)] = rng.randint(1, R.p - 1)
    return R.series(terms)


def random_divisor(rng: random.Random, p: int, t: int, shape: str = "coprime",
                   params=("y",), max_deg: int = 3, a: int | None = None) -> DivisorDatum:
    """Random admissible datum of the requested shape.

    ``coprime``: ``x`` does not divide ``F`` (``t`` should be prime to ``p``).
    ``dpositive``: ``f0 = F(0, y)`` has a nonzero ``y``-derivative.
    ``general``: anything that validates.
    """
    R = divisor_ring(p, "x", tuple(params))
    y = params[0]
    for _ in range(1000):
        F = _random_poly(rng, R, "x", params, max_deg, 0.6)
        if shape == "coprime":
            F = F + R.const(rng.randint(1, p - 1))
        elif shape == "dpositive":
            F = F + R.var(y) * R.const(rng.randint(1, p - 1))
            if F.at_zero("x").partial(y).is_zero():
                continue
        if F.is_zero() or F.at_zero("x").is_zero():
            continue
        d = make_divisor(t, F, 0)
        if d.t != t:
            continue
        try:
            validate_divisor(d, p)
        except DivisorError:
            continue
        lo = max(-1, discrepancy_floor(d))
        aa = lo + rng.randint(0, 3) if a is None else max(a, lo)
        return make_divisor(t, F, aa)
    raise RuntimeError("could not draw an admissible divisor")


# --- problem-file fuzzing ---------------------------------------------------

_JUNK = [None, True, -1, 0, 1, 2, 3, 4, 7, 10 ** 9, -10 ** 9, 1.5, "", "x", "1 + y", "u^2",
         "((", "x^^2", "y/0", "1e99", [], [1], {}, {"k": "v"}, "é", "u^2 + u^3"]


def _mutate_value(rng: random.Random, obj, depth=0):
    if isinstance(obj, dict) and obj and depth < 6:
        out = dict(obj)
        key = rng.choice(sorted(out))
        roll = rng.random()
        if roll < 0.15:
            del out[key]
        elif roll < 0.3:
            out[rng.choice(["extra", "T", "kind", "data", "steps"])] = rng.choice(_JUNK)
        else:
            out[key] = _mutate_value(rng, out[key], depth + 1)
        return out
    if isinstance(obj, list) and obj and depth < 6 and rng.random() < 0.8:
        out = list(obj)
        i = rng.randrange(len(out))
        out[i] = _mutate_value(rng, out[i], depth + 1)
        return out
    return rng.choice(_JUNK)


def _mutate_bytes(rng: random.Random, data: bytes) -> bytes:
    buf = bytearray(data)
    for _ in range(rng.randint(1, 8)):
        op = rng.random()
        i = rng.randrange(len(buf) + 1)
        if op < 0.4 and buf:
            buf[min(i, len(buf) - 1)] = rng.randrange(256)
        elif op < 0.7:
            buf.insert(i, rng.choice(b"[]{}=\",.#\n 0123456789xyu^+*-"))
        elif buf:
            del buf[min(i, len(buf) - 1)]
    return bytes(buf)


def fuzz_documents(rng: random.Random, seeds: list, n: int) -> list:
    """``n`` problem-file candidates ``(suffix, bytes)`` derived from valid ``seeds``.

    ``seeds`` holds ``(suffix, bytes, data)`` triples.  A third of the outputs
    are raw random bytes, a third byte-level mutations of a seed, and a third
    structural mutations of a seed's parsed data written back as JSON.
    """
    import json

    out = []
    for k in range(n):
        kind = k % 3
        suffix, raw, data = rng.choice(seeds)
        if kind == 0:
            blob = bytes(rng.randrange(256) for _ in range(rng.randint(0, 200)))
            out.append((rng.choice([".toml", ".json"]), blob))
        elif kind == 1:
            out.append((suffix, _mutate_bytes(rng, raw)))
        else:
            doc = data
            for _ in range(rng.randint(1, 3)):
                doc = _mutate_value(rng, doc)
            out.append((".json", json.dumps(doc).encode()))
    return out


def newton_model(d: DivisorDatum, phi) -> tuple:
    """``phi(u) - x^t F`` as a series in ``u``, ``x`` and the parameters of ``d``.

    Returns ``(P, u_name)`` ready for ``newton_polygon_valuation(P, u_name, d.x)``.
    """
    from .series import Ring

    u = "u" if "u" not in (d.x,) + tuple(d.params) else "~u"
    names = (u, d.x) + tuple(d.params)
    prec = phi.effective_prec() if phi.prec is not None else phi.ring.precision
    R = Ring(d.p, names, frozenset({u, d.x}), prec + d.t + 8, None)
    rest = (0,) * (len(names) - 1)
    P = R.series({(e[0],) + rest: c for e, c in phi.terms.items()})
    F = R.series({(0,) + e: c for e, c in d.F.terms.items()})
    return P - F.mul_monomial({d.x: d.t}), u
