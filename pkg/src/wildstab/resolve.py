"""Discrepancy of ``E'`` over ``E`` after a base change of the disk.

Starting from ``u^p + v u^(p+s) + ... = x^t F`` the engine alternates Newton
polygon blow-ups ``(U, x^k)`` and p-th root reparametrizations ``U -> U + c``
until the branch over ``E`` is either

* a monomial branch: an edge of lattice length one, ``U^vx ~ x^vU``; or
* a residue branch: ``U^p = g(y)`` with ``g`` not a p-th power, ``vx = 1``.

Valuations on the branch are read off directly from the transformed equation,
the ramification index from the implicit differential ``G_U dU + G_x dx = 0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import gcd

from .covers import CoverSpec, Insep, NormalForm, Tame, normal_form
from .divisors import BlockData, DivisorDatum, validate_divisor
from .errors import (DepthExceeded, EmptyTestSet, MalformedState, MultiSlope, NoGeneralPoint,
                     NotCoprime, NotTransportable, PrecisionUnderflow,
                     StepLimit, UnsupportedState, VerificationFailed, VerificationInconclusive,
                     ZeroToPrecision)
from .series import NotAPthPower, Ring, Series

DEFAULT_PRECISION = 24
MAX_PRECISION = 160


# --- small arithmetic -------------------------------------------------------

def bezout_pair(vx: int, vU: int):
    """``(a, b)`` with ``a*vx + b*vU = 1`` and ``0 < b < vx`` (``b = 1`` when ``vx = 1``)."""
    if gcd(vx, vU) != 1:
        raise NotCoprime(f"gcd({vx}, {vU}) != 1")
    if vx == 1:
        return 1 - vU, 1
    b = pow(vU, -1, vx)
    a = (1 - b * vU) // vx
    return a, b


def euclid_normalize(t: int, p: int) -> dict:
    """Euclid chain ``t = l0 p + r1, p = l1 r1 + r2, ...`` down to remainder 1."""
    if t < 1 or gcd(t, p) != 1:
        raise NotCoprime(f"t={t} is not prime to p={p}")
    steps = []
    a, b = t, p
    side = "x"
    while True:
        l, r = divmod(a, b)
        steps.append({"l": l, "r": r, "side": side})
        if r == 1 or (b == 1 and r == 0):
            break
        a, b = b, r
        side = "u" if side == "x" else "x"
    N, M = bezout_pair(p, t)
    return {"steps": steps, "N": N, "M": M, "chart_kind": steps[-1]["side"],
            "certificate": {"x": N, "u": M}}


def invariant_I(blocks: BlockData) -> int:
    """``p * min{i >= 1 : f_i != 0}`` when such a block exists, else ``p*M + s'``."""
    if blocks.M is None:
        raise MalformedState("no block with exponent prime to p")
    p = _block_prime(blocks)
    for i in range(1, blocks.M + 1):
        if i < len(blocks.blocks) and not blocks.blocks[i].is_zero():
            return p * i
    return p * blocks.M + blocks.s_prime


def _block_prime(blocks: BlockData) -> int:
    return blocks.blocks[0].ring.p


def discrepancy_unified(a: int, vx: int, vu: int, ram_index: int, s: int) -> int:
    return vx * a + ram_index - s * vu


# --- records ----------------------------------------------------------------

@dataclass
class Step:
    kind: str
    detail: dict = field(default_factory=dict)
    measure: tuple | None = None

    def to_dict(self):
        out = {"kind": self.kind, **self.detail}
        if self.measure is not None:
            out["measure"] = list(self.measure)
        return out


@dataclass
class Outcome:
    terminal_kind: str
    p: int
    s: int
    t: int
    a: int
    label: str = ""
    vx: int | None = None
    vu: int | None = None
    ram_index: int | None = None
    a_prime: int | None = None
    certificate: dict | None = None
    obligations: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    branches: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    equation: Series | None = None
    u_expr: Series | None = None

    @property
    def numeric(self) -> bool:
        return self.a_prime is not None

    def to_dict(self) -> dict:
        return {
            "terminal_kind": self.terminal_kind,
            "label": self.label,
            "p": self.p, "s": self.s, "t": self.t, "a": self.a,
            "vx": self.vx, "vu": self.vu,
            "ram_index": self.ram_index, "a_prime": self.a_prime,
            "certificate": self.certificate,
            "obligations": list(self.obligations),
            "trace": [st.to_dict() for st in self.trace],
            "branches": list(self.branches),
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# --- standardization ----------------------------------------------------------

def _param_partials_vanish(f: Series, params) -> bool:
    return all(f.partial(y).is_zero() for y in params)


def standardize(d: DivisorDatum, p: int) -> dict:
    """Classify a ``p | t`` datum.

    Returns ``{"kind": "smooth_direction" | "standard" | "case1" | "case2",
    "obligations": [...], "blocks": BlockData}``.  The two violation cases are
    handled by a purely inseparable base change, recorded as an obligation.
    """
    blocks = validate_divisor(d, p)
    if d.t % p:
        return {"kind": "coprime", "obligations": [], "blocks": blocks}
    f0 = blocks.blocks[0]
    if not _param_partials_vanish(f0, d.params):
        return {"kind": "smooth_direction", "obligations": [], "blocks": blocks}
    N = d.t // p
    if blocks.M is None:
        return {"kind": "case1", "blocks": blocks, "obligations": [
            f"purely inseparable base change r = u^{p * N}, then blow up (u, {d.x}): "
            f"log canonicity of the base-changed pair is assumed"]}
    if _param_partials_vanish(d.F, d.params):
        if all(not any(e) for e in f0.terms):
            # a unit f0 is a p-th power of every order; the datum has no parameter direction
            return {"kind": "case2", "blocks": blocks, "obligations": [
                f"purely inseparable base change r = u^{p} over a parameter-free datum: "
                f"log canonicity of the base-changed pair is assumed"]}
        j, root = 0, f0
        while True:
            nxt = root.pth_root()
            if isinstance(nxt, NotAPthPower):
                break
            root, j = nxt, j + 1
        return {"kind": "case2", "blocks": blocks, "obligations": [
            f"purely inseparable base change r = u^{p ** max(j, 1)}, then blow up "
            f"(u, {root.to_text()}): log canonicity of the base-changed pair is assumed"]}
    return {"kind": "standard", "obligations": [], "blocks": blocks}


# --- the engine -----------------------------------------------------------------

def engine_ring(p: int, n_params: int, precision: int) -> Ring:
    names = ("x", "U") + tuple(f"y{i + 1}" for i in range(n_params))
    return Ring(p, names, frozenset({"x"}), precision, None)


def _bigraded(h: Series) -> dict:
    """``(i, j) -> {param exponents: coefficient}`` for ``h`` in the engine ring."""
    out: dict = {}
    for e, c in h.terms.items():
        out.setdefault((e[0], e[1]), {})[(0, 0) + e[2:]] = c
    return out


def _coef(R: Ring, block: dict | None) -> Series:
    return R.series(block or {})


class _Branch:
    """Weights ``w(x) = vx``, ``w(U) = vU`` and the ratio ``x^vU U^-vx = -c0/c1``."""

    def __init__(self, vx, vU, c0: Series, c1: Series, bound):
        self.vx, self.vU, self.c0, self.c1, self.bound = vx, vU, c0, c1, bound

    def valuation(self, h: Series, what: str) -> int:
        groups = _bigraded(h)
        if not groups:
            raise PrecisionUnderflow(f"{what} vanishes to precision")
        bound = self.bound(h)
        w = min(self.vx * i + self.vU * j for i, j in groups)
        if w >= bound:
            raise PrecisionUnderflow(f"{what}: least weight {w} is not below the truncation bound {bound}")
        tie = sorted((i, j) for i, j in groups if self.vx * i + self.vU * j == w)
        if len(tie) == 1:
            return w
        R = h.ring
        # tie monomials differ by multiples of (vU, -vx); index them by k
        base_i = tie[0][0]
        ks = {(i - base_i) // self.vU: _coef(R, groups[(i, j)]) for i, j in tie}
        kmax = max(ks)
        total = R.zero()
        for k, d in ks.items():
            total = total + d * (-self.c0) ** k * self.c1 ** (kmax - k)
        if total.is_zero():
            raise UnsupportedState(f"{what}: leading terms cancel on the branch")
        return w


class _Residue:
    """Valuation along ``x = 0`` on ``U^p = g(y)`` (``g`` not a p-th power)."""

    def __init__(self, p: int, g: Series):
        self.p, self.g = p, g
        self.vx, self.vU = 1, 0

    def valuation(self, h: Series, what: str) -> int:
        groups = _bigraded(h)
        R = h.ring
        for i in sorted({i for i, _ in groups}):
            if h.prec is not None and i > h.prec:
                break
            red: dict[int, Series] = {}
            for (ii, j), block in groups.items():
                if ii != i:
                    continue
                q, rem = divmod(j, self.p)
                red[rem] = red.get(rem, R.zero()) + _coef(R, block) * self.g ** q
            if any(not v.is_zero() for v in red.values()):
                return i
        raise PrecisionUnderflow(f"{what} vanishes to precision on the residue branch")


@dataclass
class _State:
    G: Series
    u_expr: Series
    K: int                 # total x-exponent pulled out of u
    ubound: int | None     # U-degree known at x^0 before the first blow-up
    phase: str             # "eq2": x^0 part is U^p + gamma; "eq3": gamma = 0
    reparams: int = 0


class Engine:
    def __init__(self, d: DivisorDatum, nf: NormalForm, precision: int, step_bound: int | None):
        self.d, self.nf, self.P = d, nf, precision
        self.p, self.s = nf.p, nf.s
        self.R = engine_ring(self.p, len(d.params), precision)
        self.trace: list[Step] = []
        self.step_bound = step_bound
        self.label = ""

    # building blocks
    def _F(self) -> Series:
        idx = self.R
        terms = {(e[0], 0) + tuple(e[1:]): c for e, c in self.d.F.terms.items()}
        return idx.series(terms, self.d.F.prec)

    def _phi_terms(self):
        return {e[0]: c for e, c in self.nf.phi.terms.items()}

    def initial(self) -> _State:
        R, p, t = self.R, self.p, self.d.t
        phi = self._phi_terms()
        Pphi = self.nf.phi.effective_prec()
        xt = R.monomial({"x": t})
        if t % p:
            lhs = R.series({(0, k) + (0,) * (len(R.names) - 2): c for k, c in phi.items()})
            G = (lhs - xt * self._F()).with_prec(self.P)
            return _State(G, R.var("U"), 0, Pphi, "eq3")
        N = t // p
        lhs = R.series({(N * (k - p), k) + (0,) * (len(R.names) - 2): c
                        for k, c in phi.items() if N * (k - p) <= self.P})
        prec = min(self.P, N * (Pphi + 1 - p) - 1) if Pphi is not None else self.P
        G = (lhs - self._F()).with_prec(prec)
        u_expr = R.monomial({"x": N, "U": 1})
        self.trace.append(Step("WeilBlowup", {"ideal": f"(u, x^{N})", "k": N},
                               self._measure(N, 0)))
        return _State(G, u_expr, N, None, "eq2")

    def _measure(self, K: int, m: int) -> tuple:
        # remaining x-order budget before the next blow-up, then before the next reparam
        return (self.P - self.p * K, self.P - self.p * K - m)

    # polygon data
    def _lower_points(self, G: Series) -> dict:
        pts: dict[int, int] = {}
        for e in G.terms:
            i, j = e[0], e[1]
            if j <= self.p and (j not in pts or i < pts[j]):
                pts[j] = i
        return pts

    @staticmethod
    def _hull(pts: dict, top: int) -> list:
        """Lower convex hull from ``(pts[top], top)`` down to the U-free point."""
        cur = top
        edges = []
        while cur > 0:
            ci = pts[cur]
            best = None
            for j, i in pts.items():
                if j >= cur:
                    continue
                slope = (i - ci) / (cur - j)
                if best is None or slope < best[0] - 1e-12 or (abs(slope - best[0]) < 1e-12 and j < best[1]):
                    best = (slope, j)
            nxt = best[1]
            edges.append(((ci, cur), (pts[nxt], nxt)))
            cur = nxt
        return edges

    def _check_measure(self, measure):
        if measure[1] < 0:
            raise PrecisionUnderflow("the reduction ran past the working precision")
        prev = [st.measure for st in self.trace if st.measure is not None]
        if prev and not measure < prev[-1]:
            raise StepLimit(f"measure {measure} did not decrease from {prev[-1]}",
                            [st.to_dict() for st in self.trace])

    def _count(self):
        if self.step_bound is not None and len(self.trace) > self.step_bound:
            raise StepLimit(f"more than {self.step_bound} steps",
                            [st.to_dict() for st in self.trace])

    def run(self):
        st = self.initial()
        R, p = self.R, self.p
        U = R.var("U")
        params = R.names[2:]
        while True:
            self._count()
            R0 = st.G.at_zero("x")
            gamma = R0.at_zero("U")
            if st.phase == "eq2":
                if not (R0 - U ** p - gamma).is_zero():
                    raise UnsupportedState("residual polynomial is not U^p + gamma")
                if gamma.is_zero():
                    st.phase = "eq3"
                    continue
                g = -gamma
                moving = [y for y in params if not g.partial(y).is_zero()]
                if moving:
                    return self._terminal_residue(st, g, moving[0])
                c = g.pth_root()
                c = R.series(c.terms)
                shift = U + c
                st.G = st.G.substitute("U", shift)
                st.u_expr = st.u_expr.substitute("U", shift)
                st.reparams += 1
                st.phase = "eq3"
                m = st.G.at_zero("U").order_along("x") if not st.G.at_zero("U").is_zero() else 0
                measure = self._measure(st.K, m)
                self._check_measure(measure)
                self.trace.append(Step("Reparam", {"shift": c.to_text()}, measure))
                continue
            # eq3: no pure U-free term at x^0
            pure = st.G.at_zero("U")
            if pure.is_zero():
                raise PrecisionUnderflow("U-free part vanishes to precision")
            pts = self._lower_points(st.G)
            if pts.get(p) != 0 or any(j < p and i == 0 for j, i in pts.items()):
                raise UnsupportedState("the x^0 part is not a unit times U^p")
            edges = self._hull(pts, p)
            if len(edges) == 1:
                (i0, j0), (i1, j1) = edges[0]
                m = i1
                if gcd(m, p) == 1:
                    return self._terminal_monomial(st, edges, 0)
                interior = [j for j, i in pts.items() if 0 < j < p and i * p == m * (p - j)]
                if interior:
                    raise UnsupportedState("edge with interior lattice points")
                k = m // p
                st.G = st.G.substitute("U", R.monomial({"x": k, "U": 1})).div_monomial({"x": m})
                st.u_expr = st.u_expr.substitute("U", R.monomial({"x": k, "U": 1}))
                st.K += k
                st.phase = "eq2"
                st.ubound = None
                measure = self._measure(st.K, 0)
                self._check_measure(measure)
                self.trace.append(Step("WeilBlowup", {"ideal": f"(U, x^{k})", "k": k}, measure))
                continue
            for (i0, j0), (i1, j1) in edges:
                if gcd(i1 - i0, j0 - j1) != 1:
                    raise UnsupportedState("several edges, one of lattice length > 1")
            return self._terminal_monomial(st, edges, None)

    # terminals
    def _bound_fn(self, st: _State, vx: int, vU: int):
        def bound(h: Series):
            b = float("inf") if h.prec is None else vx * (h.prec + 1)
            if st.ubound is not None:
                b = min(b, vU * (st.ubound + 1))
            return b
        return bound

    def _edge_branch(self, st: _State, edge) -> _Branch:
        (i0, j0), (i1, j1) = edge
        groups = _bigraded(st.G)
        vx, vU = j0 - j1, i1 - i0
        return _Branch(vx, vU, _coef(self.R, groups[(i0, j0)]), _coef(self.R, groups[(i1, j1)]),
                       self._bound_fn(st, vx, vU))

    def _numbers(self, st: _State, br) -> dict:
        G = st.G
        vx, vU = br.vx, br.vU
        vu = br.valuation(st.u_expr, "u")
        if vx % self.p:
            ram = vx - 1
        else:
            ram = br.valuation(G.partial("U"), "G_U") + vU - 1 - br.valuation(G.partial("x"), "G_x")
        return {"vx": vx, "vu": vu, "ram_index": ram}

    def _terminal_monomial(self, st: _State, edges, only) -> dict:
        results = []
        for idx, edge in enumerate(edges):
            if only is not None and idx != only:
                continue
            br = self._edge_branch(st, edge)
            nums = self._numbers(st, br)
            a_, b_ = bezout_pair(br.vx, br.vU)
            nums["certificate"] = {"x": a_, "U": b_}
            nums["weights"] = {"x": br.vx, "U": br.vU}
            nums["edge"] = [list(edge[0]), list(edge[1])]
            results.append(nums)
        return {"shape": "monomial", "state": st, "branches": results}

    def _terminal_residue(self, st: _State, g: Series, y: str) -> dict:
        res = _Residue(self.p, g)
        vu = res.valuation(st.u_expr, "u")
        ram = res.valuation(st.G.partial("U"), "G_U") - res.valuation(st.G.partial(y), f"G_{y}")
        return {"shape": "residue", "state": st, "branches": [{
            "vx": 1, "vu": vu, "ram_index": ram, "certificate": {"x": 1, "U": 0},
            "residue": {"U^p": g.to_text(), "solved_for": y}}]}


# --- driver -------------------------------------------------------------------------

def _case_label(blocks: BlockData, N: int, s: int, p: int) -> str:
    try:
        I = invariant_I(blocks)
    except MalformedState:
        return "Case?"
    rel = "<" if N * s < I else ("=" if N * s == I else ">")
    if N % p == 0:
        return f"Case4(Ns{rel}I)"
    return {"<": "Case1", "=": "Case2", ">": "Case3"}[rel]


def _initial_I(blocks: BlockData, t: int) -> int:
    try:
        return invariant_I(blocks)
    except MalformedState:
        return t


def _as_normal_form(cover, precision: int):
    if isinstance(cover, NormalForm):
        return cover
    return normal_form(cover, precision)


def _obligation(d: DivisorDatum, p: int, s: int, kind: str, text: list, trace=()) -> Outcome:
    return Outcome(terminal_kind="Obligation", p=p, s=s, t=d.t, a=d.a, label=kind,
                   obligations=list(text), trace=list(trace))


def run(d: DivisorDatum, cover, precision: int | None = None, step_bound: int | None = None) -> Outcome:
    """Discrepancy of the divisor over ``E`` after the base change ``cover``."""
    if isinstance(cover, CoverSpec) and isinstance(cover.kind, Tame):
        return run_tame(d, cover.p, cover.kind.m)
    if isinstance(cover, CoverSpec) and isinstance(cover.kind, Insep):
        validate_divisor(d, cover.p)
        return _obligation(d, cover.p, 0, "Insep", [
            f"purely inseparable base change r = u^{cover.kind.degree}: log canonicity of "
            f"the base-changed pair is assumed, not computed"],
            [Step("InsepBaseChange", {"degree": cover.kind.degree})])
    p = cover.p
    info = standardize(d, p)
    blocks = info["blocks"]
    if info["obligations"]:
        nf = _as_normal_form(cover, DEFAULT_PRECISION)
        return _obligation(d, p, nf.s, f"Standardize({info['kind']})", info["obligations"],
                           [Step("Standardize", {"case": info["kind"]})])
    P = precision or max(DEFAULT_PRECISION, 2 * (d.t + p) + 8)
    last = None
    while P <= MAX_PRECISION:
        nf = _as_normal_form(cover, P + p + 2) if not isinstance(cover, NormalForm) else cover
        s = nf.s
        if step_bound is None:
            bound = 10 * (d.t + _initial_I(blocks, d.t) + p)
        else:
            bound = step_bound
        eng = Engine(d, nf, P, bound)
        try:
            term = eng.run()
        except (PrecisionUnderflow, ZeroToPrecision) as exc:
            last = exc
            P *= 2
            continue
        except UnsupportedState as exc:
            return _obligation(d, p, s, "Unsupported", [
                f"state outside the supported moves: {exc}"], eng.trace)
        return _assemble(d, nf, info, blocks, eng, term)
    raise PrecisionUnderflow(f"no verdict up to precision {MAX_PRECISION}: {last}")


def _assemble(d, nf, info, blocks, eng: Engine, term: dict) -> Outcome:
    p, s, t, a = nf.p, nf.s, d.t, d.a
    st: _State = term["state"]
    scored = []
    for br in term["branches"]:
        ap = discrepancy_unified(a, br["vx"], br["vu"], br["ram_index"], s)
        if p * br["vu"] != t * br["vx"]:
            raise VerificationFailed(f"valuation law fails: p*vu={p * br['vu']}, t*vx={t * br['vx']}")
        # canonical-form bookkeeping: order of the pulled-back top form on Y' minus
        # the boundary and conductor contributions of the cover
        ledger = br["vx"] * (a + t) + br["ram_index"] - (p + s) * br["vu"]
        if ledger != ap:
            raise VerificationFailed(f"ledger a'={ledger} disagrees with the unified formula {ap}")
        scored.append((ap, br))
    scored.sort(key=lambda item: (item[0], item[1]["vx"]))
    ap, main = scored[0]
    if t % p:
        kind, label = "CoprimeEuclid", "coprime"
        eu = euclid_normalize(t, p)
        eng.trace[:0] = [Step("EuclidBlowup", {"l": e["l"], "r": e["r"], "side": e["side"]})
                         for e in eu["steps"]]
    elif term["shape"] == "residue" and st.reparams == 0:
        kind, label = "SmoothFiberDirection", "smooth_direction"
    else:
        label = _case_label(blocks, t // p, s, p)
        kind = label
    cert = main["certificate"]
    certificate = {"monomial": {"x": cert["x"], "U": cert["U"]},
                   "U_definition": _u_definition(st),
                   "shape": term["shape"]}
    if "weights" in main:
        certificate["weights"] = main["weights"]
    if "residue" in main:
        certificate["residue"] = main["residue"]
    out = Outcome(terminal_kind=kind, p=p, s=s, t=t, a=a, label=label,
                  vx=main["vx"], vu=main["vu"], ram_index=main["ram_index"], a_prime=ap,
                  certificate=certificate, trace=list(eng.trace),
                  branches=[{"vx": b["vx"], "vu": b["vu"], "ram_index": b["ram_index"],
                             "a_prime": x} for x, b in scored[1:]],
                  equation=st.G, u_expr=st.u_expr)
    return out


def _u_definition(st: _State) -> str:
    return f"u = {st.u_expr.to_text()}"


def run_tame(d: DivisorDatum, p: int, m: int) -> Outcome:
    """``u^m = x^t F``: log forms pull back to log forms, so ``a'+1 = vx(a+1)``."""
    validate_divisor(d, p)
    g = gcd(m, d.t)
    vx, vu = m // g, d.t // g
    ram = vx - 1
    a_, b_ = bezout_pair(vx, vu)
    out = Outcome(terminal_kind="Tame", p=p, s=0, t=d.t, a=d.a, label=f"tame(m={m})",
                  vx=vx, vu=vu, ram_index=ram, a_prime=discrepancy_unified(d.a, vx, vu, ram, 0),
                  certificate={"monomial": {"x": a_, "u": b_}, "shape": "monomial"},
                  trace=[Step("TameBaseChange", {"m": m, "branches": g})])
    return out


# --- reports ------------------------------------------------------------------------

@dataclass
class Verdict:
    status: str                      # StableOnTestedSet | Unstable
    outcomes: list
    obligations: list
    witness: tuple | None = None

    def to_dict(self):
        return {"status": self.status,
                "obligations": list(self.obligations),
                "witness": None if self.witness is None else list(self.witness),
                "outcomes": [o.to_dict() for o in self.outcomes]}


def certify(d: DivisorDatum, cover, precision: int | None = None) -> tuple:
    """Run the engine and check its certificate, raising precision while the check is undecided."""
    from .oracle import verify_outcome

    P = precision or max(DEFAULT_PRECISION, 2 * (d.t + cover.p) + 8)
    while True:
        out = run(d, cover, P)
        if not out.numeric or out.equation is None:
            return out, None
        try:
            return out, verify_outcome(out)
        except VerificationInconclusive:
            need = max(out.vu, out.ram_index) + 12
            if P >= MAX_PRECISION:
                raise
            P = min(MAX_PRECISION, max(2 * P, need))


def check_local_stability(divisors: list, covers: list, precision: int | None = None,
                          step_bound: int | None = None) -> Verdict:
    if not divisors or not covers:
        raise EmptyTestSet("need at least one divisor and one cover")
    outcomes, obligations = [], []
    witness = None
    for i, d in enumerate(divisors):
        for j, c in enumerate(covers):
            o = run(d, c, precision, step_bound)
            outcomes.append(o)
            obligations.extend(o.obligations)
            if o.numeric and o.a_prime < -1 and witness is None:
                witness = (i, j)
    status = "Unstable" if witness is not None else "StableOnTestedSet"
    return Verdict(status, outcomes, obligations, witness)


def tower_run(divisors: list, p: int, n_max: int) -> dict:
    """Per-level values of the insep tower ``r = u^(p^n)``, ``n = 1..n_max``."""
    from .covers import tower_levels
    from .oracle import chart_recompute

    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    levels = []
    for cover in tower_levels(p, n_max):
        rows = []
        for d in divisors:
            o = run(d, cover)
            row = {"degree": cover.kind.degree, "t": d.t, "a": d.a,
                   "obligations": list(o.obligations), "a_prime": None, "discharged_by": None}
            prov = d.provenance
            if isinstance(prov, tuple) and prov and prov[0] == "ledger":
                try:
                    rec = chart_recompute(prov[1], prov[2], cover)
                except (NotTransportable, NoGeneralPoint, MultiSlope, DepthExceeded,
                        VerificationFailed) as exc:
                    row["obligations"].append(f"chart_recompute: {exc}")
                else:
                    row["a_prime"] = rec["a_prime"]
                    row["discharged_by"] = "chart_recompute"
            rows.append(row)
        if any(r["a_prime"] is None for r in rows):
            verdict = "obligations"
        elif all(r["a_prime"] >= -1 for r in rows):
            verdict = "lc"
        else:
            verdict = "not_lc"
        levels.append({"n": len(levels) + 1, "degree": cover.kind.degree,
                       "verdict": verdict, "rows": rows})
    verdicts = [lv["verdict"] for lv in levels]
    decided = {v for v in verdicts if v != "obligations"}
    open_rows = [{"n": lv["n"], "row": i, "obligations": row["obligations"]}
                 for lv in levels for i, row in enumerate(lv["rows"]) if row["a_prime"] is None]
    return {"p": p, "n_max": n_max, "levels": levels, "verdicts": verdicts,
            "stabilized": len(decided) <= 1, "open_obligations": open_rows}
