"""Divisors over a toy family, built from explicit blow-up ledgers.

A family is a smooth formal chart with coordinates ``X_1..X_n`` and a map
``r = r(X)`` to the disk.  A ledger is a list of monomial blow-ups; composing
its chart maps gives ``r = x_E^t * F`` along the last exceptional divisor and
the Jacobian order ``k``, so that ``a(E) = k - t``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import sympy

from .errors import (CenterNotOnDivisor, NotBirational, NotReduced, PthPowerExpansion,
                     ZeroLeadingBlock)
from .series import NotAPthPower, Ring, Series

PARAM_PRECISION = 16


@dataclass(frozen=True)
class FamilyModel:
    p: int
    ambient_vars: tuple
    r_expr: Series
    declared_reduced: bool = False
    name: str = ""

    @classmethod
    def from_text(cls, p: int, variables, r_text: str, declared_reduced=False, name=""):
        names = tuple(variables)
        R = Ring(p, names, frozenset(names), 64, None)
        return cls(p, names, R.parse(r_text), declared_reduced, name)


@dataclass(frozen=True)
class PointBlowup:
    """Blow up the ideal generated by ``center``; keep the chart where ``chart`` generates."""

    center: tuple
    chart: str


@dataclass(frozen=True)
class WeilBlowup:
    """Blow up ``(b, a^k)`` in the chart ``b = a^k * b'``."""

    b: str
    a: str
    k: int


@dataclass
class BlowupLedger:
    steps: list = field(default_factory=list)
    divisor: str | None = None     # coordinate of E when the ledger is empty


@dataclass
class DivisorDatum:
    """``r = x^t * F`` along ``E = {x = 0}`` with discrepancy ``a``."""

    t: int
    F: Series
    a: int
    x: str
    params: tuple
    provenance: object = "user"
    chart_map: dict | None = None

    @property
    def p(self) -> int:
        return self.F.ring.p


@dataclass(frozen=True)
class BlockData:
    t: int
    N: int | None
    M: int | None
    s_prime: int | None
    blocks: tuple            # f_0, f_1, ..., f_M as series in the parameters
    f_next: Series | None    # f_{M+1}


def divisor_ring(p: int, x: str, params, precision: int = 64) -> Ring:
    return Ring(p, (x,) + tuple(params), frozenset({x}), precision, PARAM_PRECISION)


def make_divisor(t: int, F: Series, a: int, provenance="user", chart_map=None) -> DivisorDatum:
    """Package ``(t, F, a)``; if ``F`` vanishes along E, ``t`` is raised until it does not."""
    R = F.ring
    x = R.names[0]
    if not F.terms:
        raise ZeroLeadingBlock("F vanishes to precision")
    k = F.order_along(x)
    if k:
        F = F.div_monomial({x: k})
        t += k
    return DivisorDatum(t, F, a, x, R.names[1:], provenance, chart_map)


def _x_blocks(F: Series, x: str):
    out: dict[int, Series] = {}
    for k, part in F.split_by(x).items():
        out[k] = part
    return out


def validate_divisor(d: DivisorDatum, p: int | None = None) -> BlockData:
    p = p or d.p
    F = d.F
    x = d.x
    if d.t < 1:
        raise ValueError("t must be positive")
    if not F.terms or F.at_zero(x).is_zero():
        raise ZeroLeadingBlock("the leading block f_0 vanishes")
    R = F.ring
    full = F.mul_monomial({x: d.t})
    if isinstance(full.pth_root(), Series):
        raise PthPowerExpansion("x^t * F is a p-th power")
    parts = _x_blocks(F, x)
    coprime = sorted(k for k in parts if k % p)
    if coprime:
        k = coprime[0]
        M, s_prime = divmod(k, p)
        f_next = parts[k]
    else:
        M, s_prime, f_next = None, None, None
    top = M if M is not None else max(parts) // p
    blocks = tuple(parts.get(p * i, R.zero()) for i in range(top + 1))
    N = d.t // p if d.t % p == 0 else None
    return BlockData(d.t, N, M, s_prime, blocks, f_next)


def _squarefree(f: Series) -> bool | None:
    """True/False for polynomials; None when ``f`` is truncated."""
    if f.prec is not None:
        return None
    names = f.ring.names
    syms = sympy.symbols(names)
    expr = sum(int(c) * sympy.Mul(*(s ** k for s, k in zip(syms, e))) for e, c in f.terms.items())
    P = sympy.Poly(expr, *syms, modulus=f.ring.p)
    g = P
    for s in syms:
        g = sympy.gcd(g, P.diff(s))
    return g.total_degree() == 0


def validate_family(fam: FamilyModel) -> bool:
    r = fam.r_expr
    if r.constant_term():
        raise ValueError("r must vanish at the origin")
    if isinstance(r.pth_root(), Series):
        raise NotReduced("r is a p-th power: the special fiber is not reduced")
    verdict = _squarefree(r)
    if verdict is False:
        raise NotReduced("r has a repeated factor: the special fiber is not reduced")
    if verdict is None and not fam.declared_reduced:
        raise NotReduced("reducedness is undecided for a truncated r; set declared_reduced")
    return True


# --- ledgers ----------------------------------------------------------------

def _fresh(base: str, used: set) -> str:
    stem = re.sub(r"\d+$", "", base) or base
    i = 1
    while f"{stem}{i}" in used:
        i += 1
    name = f"{stem}{i}"
    used.add(name)
    return name


def _plan(fam: FamilyModel, ledger: BlowupLedger):
    """Walk the ledger symbolically: the chart coordinates after each step."""
    used = set(fam.ambient_vars)
    coords = list(fam.ambient_vars)
    plan = []
    for step in ledger.steps:
        if isinstance(step, PointBlowup):
            center = tuple(step.center)
            if len(center) < 2 or len(set(center)) != len(center):
                raise NotBirational(f"center {center} is not a point blow-up center")
            if any(c not in coords for c in center) or step.chart not in center:
                raise CenterNotOnDivisor(f"center {center} is not in the chart {coords}")
            renames = {c: _fresh(c, used) for c in center if c != step.chart}
            plan.append((step, renames))
        elif isinstance(step, WeilBlowup):
            if step.k < 1 or step.a == step.b:
                raise NotBirational(f"Weil blow-up ({step.b}, {step.a}^{step.k}) is degenerate")
            if step.a not in coords or step.b not in coords:
                raise CenterNotOnDivisor(f"({step.b}, {step.a}^{step.k}) is not in the chart {coords}")
            renames = {step.b: _fresh(step.b, used)}
            plan.append((step, renames))
        else:
            raise TypeError(f"unknown ledger step {step!r}")
        coords = [renames.get(c, c) for c in coords]
    return plan, coords, used


def compose_ledger(fam: FamilyModel, ledger: BlowupLedger):
    """Chart map, Jacobian exponents and final coordinates of a ledger.

    Returns ``(ring, images, jac, coords, E)`` where ``images[X_i]`` is the pulled
    back ambient coordinate, ``jac`` maps coordinates to Jacobian exponents and
    ``E`` is the exceptional coordinate.
    """
    plan, coords, used = _plan(fam, ledger)
    names = tuple(fam.ambient_vars) + tuple(sorted(used - set(fam.ambient_vars)))
    R = Ring(fam.p, names, frozenset(names), 64, None)
    images = {v: R.var(v) for v in fam.ambient_vars}
    jac: dict[str, int] = {}
    E = ledger.divisor
    for step, renames in plan:
        if isinstance(step, PointBlowup):
            e = step.chart
            sub = {c: R.var(e) * R.var(n) for c, n in renames.items()}
            # dX_c = e dn + n de: the Jacobian picks up e^(#center - 1)
            jac = _pull_jac(jac, sub, R)
            jac[e] = jac.get(e, 0) + len(step.center) - 1
        else:
            e = step.a
            n = renames[step.b]
            sub = {step.b: R.var(e) ** step.k * R.var(n)}
            jac = _pull_jac(jac, sub, R)
            jac[e] = jac.get(e, 0) + step.k
        images = {v: img.substitute_many(sub) for v, img in images.items()}
        E = e
    if E is None:
        raise CenterNotOnDivisor("empty ledger needs an explicit divisor coordinate")
    if E not in coords:
        raise CenterNotOnDivisor(f"divisor coordinate {E} is not in the final chart")
    return R, images, jac, coords, E


def _pull_jac(jac, sub, R):
    """Jacobian exponents are monomial; renamed coordinates keep their exponents."""
    out = dict(jac)
    for old, img in sub.items():
        if old in out:
            k = out.pop(old)
            for name, power in zip(R.names, next(iter(img.terms))):
                if power:
                    out[name] = out.get(name, 0) + k * power
    return out


def from_blowup_ledger(fam: FamilyModel, ledger: BlowupLedger) -> DivisorDatum:
    R, images, jac, coords, E = compose_ledger(fam, ledger)
    r_pull = _pull(fam, R, images)
    t = r_pull.order_along(E)
    if t == 0:
        raise CenterNotOnDivisor(f"E = {{{E} = 0}} does not lie over the closed point")
    F_big = r_pull.div_monomial({E: t})
    k = jac.get(E, 0)
    params = tuple(c for c in coords if c != E)
    D = divisor_ring(fam.p, E, params)
    idx = [R.index(n) for n in (E,) + params]
    F = D.series({tuple(e[i] for i in idx): c for e, c in F_big.terms.items()})
    chart_map = {v: images[v].to_text() for v in fam.ambient_vars}
    d = DivisorDatum(t, F, k - t, E, params, provenance=("ledger", fam, ledger),
                     chart_map=chart_map)
    return d


def _pull(fam: FamilyModel, R: Ring, images) -> Series:
    src = fam.r_expr
    out = R.zero()
    for e, c in src.terms.items():
        term = R.const(c)
        for v, k in zip(src.ring.names, e):
            if k:
                term = term * images[v] ** k
        out = out + term
    return out


def discrepancy_floor(d: DivisorDatum) -> int:
    """Least discrepancy compatible with ``r`` being a chart coordinate at the center.

    If ``r = X_1`` then ``J dx^dy' = d(x^t F) ^ d(X_2)``, so the Jacobian order is
    at least the least order along E of a partial derivative of ``x^t F``.
    """
    full = d.F.mul_monomial({d.x: d.t})
    orders = []
    for v in d.F.ring.names:
        dv = full.partial(v)
        if dv.terms:
            orders.append(dv.order_along(d.x))
    return min(orders) - d.t


# --- bundled examples -------------------------------------------------------

def bundled_families() -> dict:
    return {
        "smooth": lambda p: FamilyModel.from_text(p, ("r", "y"), "r", name="smooth"),
        "nodal": lambda p: FamilyModel.from_text(p, ("x", "y"), "x*y", name="nodal"),
    }


def bundled_ledgers() -> dict:
    """Named (family, ledger) pairs used by the demos and the acceptance suite."""
    return {
        "smooth/fiber": ("smooth", BlowupLedger([], divisor="r")),
        "smooth/point": ("smooth", BlowupLedger([PointBlowup(("r", "y"), "y")])),
        "smooth/point2": ("smooth", BlowupLedger([PointBlowup(("r", "y"), "y"),
                                                   PointBlowup(("y", "r1"), "y")])),
        "smooth/weil": ("smooth", BlowupLedger([WeilBlowup("y", "r", 2)])),
        "nodal/point": ("nodal", BlowupLedger([PointBlowup(("x", "y"), "x")])),
        "nodal/point2": ("nodal", BlowupLedger([PointBlowup(("x", "y"), "x"),
                                                 PointBlowup(("x", "y1"), "x")])),
    }


def bundled_divisor(name: str, p: int) -> DivisorDatum:
    fam_name, ledger = bundled_ledgers()[name]
    return from_blowup_ledger(bundled_families()[fam_name](p), ledger)


# --- problem-file schema ----------------------------------------------------

def ledger_from_dict(data: dict) -> BlowupLedger:
    steps = []
    for st in data.get("steps", []):
        kind = st.get("kind")
        if kind == "point":
            steps.append(PointBlowup(tuple(st["center"]), st["chart"]))
        elif kind == "weil":
            steps.append(WeilBlowup(st["b"], st["a"], int(st["k"])))
        else:
            raise ValueError(f"unknown ledger step kind {kind!r}")
    return BlowupLedger(steps, data.get("divisor"))


def family_from_dict(data: dict, p: int) -> FamilyModel:
    return FamilyModel.from_text(p, tuple(data["vars"]), str(data["r"]),
                                 bool(data.get("declared_reduced", False)),
                                 str(data.get("name", "")))


def divisor_from_dict(data: dict, p: int) -> DivisorDatum:
    x = data.get("x", "x")
    params = tuple(data.get("params", ["y"]))
    D = divisor_ring(p, x, params)
    return make_divisor(int(data["t"]), D.parse(str(data["F"])), int(data["a"]))
