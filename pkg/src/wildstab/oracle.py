"""Independent checks of the engine.

Nothing here imports the engine.  Three tools:

* ``newton_polygon_valuation``: MacLane-style iteration on ``P(u) = 0`` over
  ``k[[x]][y]`` that returns the valuations of ``x`` and ``u`` along the branch.
* ``verify_certificate``: substitute an explicit parametrization of ``E'``
  (built by Hensel lifting at a general point) into a claimed equation and
  compare orders.
* ``chart_recompute``: compose a blow-up ledger, build the base-changed
  hypersurface ``phi(u) = r(X)`` and compute the discrepancy of ``E'`` from
  a Jacobian determinant.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import gcd

import sympy

from .covers import CoverSpec, Insep, Tame, normal_form
from .divisors import BlowupLedger, FamilyModel, compose_ledger
from .errors import (DepthExceeded, MultiSlope, NoGeneralPoint, NotTransportable,
                     NotUniformizable, VerificationFailed, VerificationInconclusive)
from .series import NotAPthPower, Ring, Series


def _pth_power_depth(f: Series, limit: int) -> tuple:
    """Largest ``j <= limit`` with ``f`` a ``p^j``-th power, and the root."""
    j, root = 0, f
    while j < limit:
        nxt = root.pth_root()
        if isinstance(nxt, NotAPthPower):
            break
        root, j = nxt, j + 1
    return j, root


def _lower_hull(points: dict) -> list:
    """Lower convex hull of ``{j: i}`` from the largest ``j`` down to ``j = 0``."""
    js = sorted(points, reverse=True)
    cur = js[0]
    edges = []
    while cur > 0:
        best = None
        for j in js:
            if j >= cur:
                continue
            slope = Fraction(points[j] - points[cur], cur - j)
            if best is None or slope < best[0] or (slope == best[0] and j < best[1]):
                best = (slope, j)
        edges.append((cur, best[1], best[0]))
        cur = best[1]
    return edges


def _weierstrass_points(P: Series, u: str, x: str):
    parts = P.split_by(u)
    pts = {j: c.order_along(x) for j, c in parts.items() if c.terms}
    units = [j for j, i in pts.items() if i == 0]
    if not units:
        raise NotUniformizable("no coefficient of the equation is a unit")
    D = min(units)
    return {j: i for j, i in pts.items() if j <= D}, parts, D


def newton_polygon_valuation(P: Series, u: str = "u", x: str = "x", depth: int = 64) -> tuple:
    """``(v(x), v(u))`` on the unique branch of ``P(u) = 0`` over ``x = 0``.

    ``P`` is a series in ``u``, ``x`` and parameters whose lowest unit coefficient
    in ``u`` sits at degree ``D`` (Weierstrass degree).  Raises ``MultiSlope``
    when the polygon or a residual polynomial splits.
    """
    R = P.ring
    Q = P
    first_k = None
    for _ in range(depth):
        pts, parts, D = _weierstrass_points(Q, u, x)
        if 0 not in pts:
            raise NotUniformizable("u divides the equation")
        edges = _lower_hull(pts)
        if len(edges) > 1:
            raise MultiSlope(f"{len(edges)} slopes in the Newton polygon")
        _, _, slope = edges[0]
        a, b = slope.numerator, slope.denominator
        if b == D:
            # totally ramified: v(x) = D, v(u_current) = a
            return (b, a) if first_k is None else (b, first_k * b)
        if b != 1:
            raise MultiSlope(f"slope {slope} with a residual polynomial of degree {D // b}")
        k = a
        i0 = pts[0]
        on_edge = [j for j, i in pts.items() if i == i0 - k * j]
        if sorted(on_edge) != [0, D]:
            raise MultiSlope("residual polynomial has middle terms")
        alpha = parts[D].coefficient({x: 0})
        gamma = parts[0].coefficient({x: i0})
        if alpha.constant_term() == 0 or len(alpha.terms) != 1:
            raise NotUniformizable("leading coefficient is not a constant unit")
        target = -(gamma.scale(pow(alpha.constant_term(), -1, R.p)))
        jmax = 0
        n = D
        while n % R.p == 0:
            n //= R.p
            jmax += 1
        if n != 1:
            raise MultiSlope("residual degree is not a power of p")
        j, root = _pth_power_depth(target, jmax)
        if first_k is None:
            first_k = k
        if j == 0:
            # residue extension of degree D: x stays a uniformizer
            return (1, first_k)
        if j < jmax:
            raise MultiSlope("residual polynomial is a partial p-power")
        root = R.series(root.terms)
        # u = x^k (root + u'), divide out x^(k D)
        Q = Q.substitute(u, R.monomial({x: k}) * (root + R.var(u))).div_monomial({x: k * D})
    raise DepthExceeded(f"no verdict after {depth} reparametrizations")


# --- local parametrizations -------------------------------------------------------------

def _local_ring(p: int, names, prec: int) -> Ring:
    return Ring(p, tuple(names), frozenset(names), prec, None)


def _upow(f: Series, e: int, prec: int) -> Series:
    if e >= 0:
        return (f ** e).truncate(prec)
    return (f.invert_unit(prec) ** (-e)).truncate(prec)


class _Evaluator:
    """Substitute every variable of a series by a series of a local ring, term by term."""

    def __init__(self, R: Ring, images: dict, prec: int):
        self.R, self.images, self.prec = R, images, prec
        self.orders = {}
        for name, img in images.items():
            self.orders[name] = img.dist_order() if img.terms else prec + 1
        self.cache = {}

    def power(self, name: str, k: int) -> Series:
        key = (name, k)
        if key not in self.cache:
            base = self.images[name]
            self.cache[key] = base if k == 1 else (self.power(name, k - 1) * base).truncate(self.prec)
        return self.cache[key]

    def __call__(self, f: Series) -> Series:
        names = f.ring.names
        total = {}
        for e, c in f.terms.items():
            if sum(k * self.orders[n] for n, k in zip(names, e) if k) > self.prec:
                continue
            term = self.R.const(c)
            for n, k in zip(names, e):
                if k:
                    term = (term * self.power(n, k)).truncate(self.prec)
            for ee, cc in term.terms.items():
                v = (total.get(ee, 0) + cc) % self.R.p
                if v:
                    total[ee] = v
                else:
                    total.pop(ee, None)
        return self.R.series(total).truncate(self.prec)


def _hensel(phi, d0: int, R: Ring, prec: int) -> Series:
    """Solve ``phi(h) = 0`` with ``h(0) = 0`` when ``phi'(0) = d0`` is a unit (simplified Newton)."""
    inv = pow(d0 % R.p, -1, R.p)
    h = R.zero()
    for _ in range(prec + 2):
        r = phi(h).truncate(prec)
        if r.is_zero():
            return h.truncate(prec)
        h = (h - r.scale(inv)).truncate(prec)
    raise VerificationFailed("Hensel iteration did not converge")


def _order_in(f: Series, var: str) -> int | None:
    """Least exponent of ``var`` among the known terms, ``None`` if nothing is known."""
    if not f.terms:
        return None
    i = f.ring.index(var)
    return min(e[i] for e in f.terms)


def _tie_points(terms: list, p: int, nparams: int):
    """F_p points ``(W, y)`` where ``sum c y^b W^e`` has a simple nonzero root in ``W``."""
    for y0 in itertools.product(range(p), repeat=nparams):
        for w in range(1, p):
            val = der = 0
            for c, e, beta in terms:
                mono = c
                for yy, b in zip(y0, beta):
                    mono = mono * pow(yy, b, p) % p
                val += mono * pow(w, e, p)
                der += mono * e * pow(w, e - 1, p)
            if val % p == 0 and der % p:
                yield y0, w, der % p


def _claim(report: dict, key: str, found, claimed):
    report[key] = found
    if found is None:
        raise VerificationInconclusive(f"{key}: inconclusive at this precision")
    if found != claimed:
        raise VerificationFailed(f"{key}: found {found}, claimed {claimed}")


def _verify_monomial(G: Series, u_expr: Series, cert: dict, claims: dict, margin: int) -> dict:
    p = G.ring.p
    params = [n for n in G.ring.names if n not in ("x", "U")]
    vx, vU = cert["weights"]["x"], cert["weights"]["U"]
    ea, eb = cert["monomial"]["x"], cert["monomial"]["U"]
    if ea * vx + eb * vU != 1:
        raise NotUniformizable("certificate monomial is not a uniformizer for these weights")
    if vx != claims["vx"]:
        raise VerificationFailed(f"vx: certificate weight {vx}, claimed {claims['vx']}")
    # x = z^vx W^-eb, U = z^vU W^ea, hence x^ea U^eb = z
    ix, iU = G.ring.index("x"), G.ring.index("U")
    pidx = [G.ring.index(n) for n in params]
    weight = {e: vx * e[ix] + vU * e[iU] for e in G.terms}
    wmin = min(weight.values())
    ties = [(c, ea * e[iU] - eb * e[ix], tuple(e[i] for i in pidx))
            for e, c in G.terms.items() if weight[e] == wmin]
    need = max(claims["vu"], claims["ram_index"]) + margin
    if G.prec is not None and vx * (G.prec + 1) <= need + wmin:
        raise VerificationInconclusive("inconclusive: equation truncated too low")
    for y0, w0, _ in _tie_points(ties, p, len(params)):
        R = _local_ring(p, ("z", "w", *params), need + wmin)
        z, w = R.var("z"), R.var("w")
        W = R.const(w0) + w
        images = {"x": z ** vx * _upow(W, -eb, R.precision), "U": z ** vU * _upow(W, ea, R.precision)}
        for n, c in zip(params, y0):
            images[n] = R.const(c) + R.var(n)
        H = _Evaluator(R, images, need + wmin)(G).div_monomial({"z": wmin}).truncate(need)
        d0 = H.partial("w").constant_term()
        h = _hensel(lambda g: H.substitute("w", g), d0, R, need)
        Wl = R.const(w0) + h
        X = (z ** vx * _upow(Wl, -eb, need + wmin)).truncate(need + wmin)
        images = {"x": X, "U": (z ** vU * _upow(Wl, ea, need + wmin)).truncate(need + wmin)}
        for n, c in zip(params, y0):
            images[n] = R.const(c) + R.var(n)
        ev = _Evaluator(R, images, need + wmin)
        report = {"shape": "monomial", "point": {"y": list(y0), "W": w0}}
        if not ev(G).div_monomial({"z": wmin}).truncate(need).is_zero():
            raise NotUniformizable("parametrization does not satisfy the equation")
        report["residual_zero_to"] = need
        report["vx"] = vx
        _claim(report, "vu", _order_in(ev(u_expr).truncate(need), "z"), claims["vu"])
        _claim(report, "ram_index", _order_in(X.partial("z").truncate(need), "z"), claims["ram_index"])
        return report
    return _verify_monomial_generic(G, u_expr, cert, claims)


def _initial_form(f: Series, vx: int, vU: int, ea: int, eb: int):
    """Weighted order of ``f`` and its initial form as a polynomial in ``W`` and parameters."""
    names = f.ring.names
    ix, iU = names.index("x"), names.index("U")
    params = [n for n in names if n not in ("x", "U")]
    if not f.terms:
        return None, None
    weight = {e: vx * e[ix] + vU * e[iU] for e in f.terms}
    w0 = min(weight.values())
    if f.prec is not None and w0 > vx * f.prec:
        return None, None
    syms = sympy.symbols(["W", *params])
    tie = [(c, ea * e[iU] - eb * e[ix], e) for e, c in f.terms.items() if weight[e] == w0]
    shift = min(k for _, k, _ in tie)
    expr = 0
    for c, k, e in tie:
        mono = c * syms[0] ** (k - shift)
        for s_, n in zip(syms[1:], params):
            mono *= s_ ** e[names.index(n)]
        expr += mono
    return w0, sympy.Poly(expr, *syms, modulus=f.ring.p)


def _nonvanishing_order(f: Series, H0, wts) -> int:
    w0, form = _initial_form(f, *wts)
    if w0 is None:
        raise VerificationInconclusive("function vanishes to the working precision")
    common = sympy.gcd(form, H0)
    if common.degree(0) > 0:
        raise NoGeneralPoint("initial form shares a factor with the branch; no F_p point to localize")
    return w0


def _verify_monomial_generic(G: Series, u_expr: Series, cert: dict, claims: dict) -> dict:
    """Generic-point check: parameters stay transcendental, orders come from initial forms.

    A function whose weighted initial form is prime to the initial form of the
    equation does not vanish on the branch, so its order is its weight.  The
    order of ``dx/dz`` follows from ``G_x dx + G_U dU = 0`` along the branch.
    """
    p = G.ring.p
    vx, vU = cert["weights"]["x"], cert["weights"]["U"]
    ea, eb = cert["monomial"]["x"], cert["monomial"]["U"]
    wts = (vx, vU, ea, eb)
    _, H0 = _initial_form(G, *wts)
    if H0 is None or H0.degree(0) == 0:
        raise NotUniformizable("initial form is a monomial: the weights define no branch")
    dW = H0.diff(H0.gens[0])
    if dW.is_zero:
        raise NotUniformizable("initial form is inseparable: no smooth branch for these weights")
    if sympy.gcd(H0, dW).degree(0) > 0:
        raise NoGeneralPoint("initial form has a repeated factor over the generic point")
    report = {"shape": "monomial", "point": "generic", "vx": vx}
    _claim(report, "vu", _nonvanishing_order(u_expr, H0, wts), claims["vu"])
    if vx % p:
        ram = vx - 1
    else:
        ram = (_nonvanishing_order(G.partial("U"), H0, wts) + vU - 1
               - _nonvanishing_order(G.partial("x"), H0, wts))
    _claim(report, "ram_index", ram, claims["ram_index"])
    return report


def _verify_residue(G: Series, u_expr: Series, cert: dict, claims: dict, margin: int) -> dict:
    p = G.ring.p
    y = cert["residue"]["solved_for"]
    others = [n for n in G.ring.names if n not in ("x", "U", y)]
    if claims["vx"] != 1:
        raise NotUniformizable("residue branches have vx = 1")
    need = max(claims["vu"], claims["ram_index"]) + margin
    if G.prec is not None and G.prec < need:
        raise VerificationInconclusive("inconclusive: equation truncated too low")
    G0 = G.at_zero("x")
    names = G.ring.names
    iy = names.index(y)
    for pt in itertools.product(range(p), repeat=len(names)):
        if pt[names.index("x")]:
            continue
        val = sum(c * _mono_at(e, pt, p) for e, c in G0.terms.items()) % p
        der = sum(c * e[iy] * _mono_at(e, pt, p, iy) for e, c in G0.terms.items()) % p
        if val or not der:
            continue
        R = _local_ring(p, ("x", "W", "v", *others), need)
        x, W, v = R.var("x"), R.var("W"), R.var("v")
        base = {"x": x, "U": R.const(pt[names.index("U")]) + W}
        for n in others:
            base[n] = R.const(pt[names.index(n)]) + R.var(n)
        images = dict(base, **{y: R.const(pt[iy]) + v})
        Gl = _Evaluator(R, images, need)(G)
        h = _hensel(lambda g: Gl.substitute("v", g), Gl.partial("v").constant_term(), R, need)
        images = dict(base, **{y: R.const(pt[iy]) + h})
        ev = _Evaluator(R, images, need)
        if not ev(G).is_zero():
            raise NotUniformizable("parametrization does not satisfy the equation")
        report = {"shape": "residue", "point": {n: pt[i] for i, n in enumerate(names) if n != "x"},
                  "residual_zero_to": need, "vx": 1}
        _claim(report, "vu", _order_in(ev(u_expr), "x"), claims["vu"])
        _claim(report, "ram_index", _order_in(h.partial("W"), "x"), claims["ram_index"])
        return report
    raise NoGeneralPoint("no smooth F_p point on the residue curve")


def _mono_at(e, pt, p, skip=None) -> int:
    val = 1
    for i, (k, c) in enumerate(zip(e, pt)):
        if i == skip:
            k -= 1
            if k < 0:
                return 0
        val = val * pow(c, k, p) % p
    return val


def verify_certificate(equation: Series, u_expr: Series, certificate: dict, claims: dict,
                       margin: int = 4) -> dict:
    """Check claimed ``vx, vu, ram_index`` against an explicit parametrization of ``E'``.

    ``equation`` lives in a ring with variables ``x``, ``U`` and parameters;
    ``u_expr`` expresses the cover coordinate in the same ring.  Returns a
    report of what was checked; raises ``VerificationFailed`` on a mismatch.
    """
    check = _verify_residue if certificate.get("shape") == "residue" else _verify_monomial
    for extra in (0, 4, 8, 16):
        try:
            return check(equation, u_expr, certificate, claims, margin + extra)
        except VerificationInconclusive as exc:
            last = exc
    raise last


def verify_outcome(outcome, margin: int = 4) -> dict:
    """``verify_certificate`` for an engine outcome that carries its final equation."""
    if outcome.equation is None:
        raise VerificationFailed("outcome carries no equation")
    claims = {"vx": outcome.vx, "vu": outcome.vu, "ram_index": outcome.ram_index}
    return verify_certificate(outcome.equation, outcome.u_expr, outcome.certificate, claims, margin)


# --- discrepancy from a chart ----------------------------------------------------------

_T, _Z, _W = "~T", "~z", "~w"


def _cover_phi(cover: CoverSpec, prec: int) -> tuple:
    """``phi(u)`` with ``phi(u) = r`` the equation of the base change, as ``{k: c}``."""
    kind = cover.kind
    if isinstance(kind, Tame):
        return {kind.m: 1}, "tame"
    if isinstance(kind, Insep):
        return {kind.degree: 1}, "insep"
    nf = normal_form(cover, precision=prec)
    return {e[0]: c for e, c in nf.phi.terms.items()}, "wild"


def _bezout(vx: int, vT: int) -> tuple:
    for ea in range(-vT - 1, vT + 2):
        if (1 - ea * vx) % vT == 0:
            return ea, (1 - ea * vx) // vT
    raise ValueError("weights are not coprime")


def _shift_search(Psi: Series, u_of: Series, E: str, depth: int = 32):
    """Peel off integer-slope p-power residuals; return the final polygon."""
    R = Psi.ring
    p = R.p
    for _ in range(depth):
        pts, parts, D = _weierstrass_points(Psi, _T, E)
        if 0 not in pts:
            raise NotTransportable("the cover coordinate divides the equation")
        edges = _lower_hull(pts)
        if len(edges) > 1 or edges[0][2].denominator != 1:
            return Psi, u_of, pts, edges
        k = edges[0][2].numerator
        on = sorted(j for j in pts if pts[j] == pts[0] - k * j)
        e, n = 0, D
        while n % p == 0:
            n, e = n // p, e + 1
        if on != [0, D] or n != 1:
            return Psi, u_of, pts, edges
        alpha = parts[D].coefficient({E: 0})
        if len(alpha.terms) != 1 or not alpha.constant_term():
            return Psi, u_of, pts, edges
        target = -(parts[0].coefficient({E: pts[0]}).scale(pow(alpha.constant_term(), -1, p)))
        j, root = _pth_power_depth(target, e)
        if j == 0:
            return Psi, u_of, pts, edges
        if j < e:
            raise NotTransportable("residual polynomial is a partial p-power")
        g = R.monomial({E: k}) * (R.series(root.terms) + R.var(_T))
        Psi = Psi.substitute(_T, g).div_monomial({E: k * D})
        u_of = u_of.substitute(_T, g)
    raise DepthExceeded(f"no terminal polygon after {depth} reparametrizations")


def _terminal(Psi: Series, edge, pts: dict, E: str, ys: list, prec: int):
    """Local parametrization of one branch: ``(images, coords, ring)`` or ``None``."""
    p = Psi.ring.p
    cur, nxt, _ = edge
    di, dj = pts[nxt] - pts[cur], cur - nxt
    g = gcd(di, dj)
    vx, vT = dj // g, di // g
    ea, eb = _bezout(vx, vT)
    wmin = vx * pts[cur] + vT * cur
    qh = prec - wmin
    if qh < 4:
        raise VerificationInconclusive("chart precision too low for this edge")
    iT, iE = Psi.ring.index(_T), Psi.ring.index(E)
    iy = [Psi.ring.index(y) for y in ys]
    tie = [(c, ea * e[iT] - eb * e[iE]) for e, c in Psi.terms.items()
           if vx * e[iE] + vT * e[iT] == wmin and not any(e[i] for i in iy)]
    RZ = _local_ring(p, (_Z, _W, *ys), prec)
    z, w = RZ.var(_Z), RZ.var(_W)
    for w0 in range(1, p):
        if sum(c * pow(w0, k, p) for c, k in tie) % p:
            continue
        Wv = RZ.const(w0) + w
        base = {_T: (z ** vT * _upow(Wv, ea, prec)).truncate(prec),
                E: (z ** vx * _upow(Wv, -eb, prec)).truncate(prec)}
        for y in ys:
            base[y] = RZ.var(y)
        H = _Evaluator(RZ, base, prec)(Psi).div_monomial({_Z: wmin}).truncate(qh)
        if H.partial(_W).constant_term():
            h = _hensel(lambda s: H.substitute(_W, s), H.partial(_W).constant_term(), RZ, qh)
            Wl = RZ.const(w0) + h
            images = {_T: (z ** vT * _upow(Wl, ea, qh)).truncate(qh),
                      E: (z ** vx * _upow(Wl, -eb, qh)).truncate(qh)}
            images.update({y: RZ.var(y) for y in ys})
            return images, [_Z, *ys], RZ, qh
        for y in ys:
            d0 = H.partial(y).constant_term()
            if d0:
                h = _hensel(lambda s: H.substitute(y, s), d0, RZ, qh)
                images = {k: v.truncate(qh) for k, v in base.items()}
                images[y] = h
                return images, [_Z, _W, *[o for o in ys if o != y]], RZ, qh
    return None


def _det(rows: list) -> Series:
    n = len(rows)
    total = None
    for perm in itertools.permutations(range(n)):
        sign = 1
        for i in range(n):
            for j in range(i + 1, n):
                if perm[i] > perm[j]:
                    sign = -sign
        term = rows[0][perm[0]]
        for i in range(1, n):
            term = term * rows[i][perm[i]]
        term = term if sign > 0 else -term
        total = term if total is None else total + term
    return total


def _ord_z(f: Series, what: str) -> int:
    k = _order_in(f, _Z)
    if k is None:
        raise VerificationInconclusive(f"{what} vanishes to the working precision")
    return k


def _branch_numbers(family: FamilyModel, chart_images: dict, psi: dict, coords: list,
                    RZ: Ring, qh: int, u_of: Series, E: str, ys: list, y0: tuple,
                    separable: bool) -> dict:
    chart = {E: psi[E]}
    for y, c in zip(ys, y0):
        chart[y] = RZ.const(c) + psi[y]
    ev_chart = _Evaluator(RZ, chart, qh)
    X = {v: ev_chart(img) for v, img in chart_images.items()}
    ev_amb = _Evaluator(RZ, X, qh)
    u = _Evaluator(RZ, {_T: psi[_T], E: psi[E], **{y: psi[y] for y in ys}}, qh)(u_of)
    vu = _ord_z(u, "u")
    best = None
    for j in family.ambient_vars:
        dr = ev_amb(family.r_expr.partial(j))
        if not dr.terms:
            continue
        k = _order_in(dr, _Z)
        if best is None or k < best[1]:
            best = (j, k, dr)
    if best is None:
        raise VerificationInconclusive("every partial of r vanishes on the branch")
    j, ord_dr, _ = best
    funcs = [X[v] for v in family.ambient_vars if v != j] + [u]
    det = _det([[f.partial(c) for c in coords] for f in funcs])
    ram = None
    if separable:
        # an inseparable base change has identically vanishing Jacobian over Y
        ram_rows = [[psi[c0].partial(c) for c in coords] for c0 in [E, *ys]]
        ram = _ord_z(_det(ram_rows), "ramification jacobian")
    return {"vx": _ord_z(psi[E], "x"), "vu": vu, "ram_index": ram,
            "a_prime": _ord_z(det, "jacobian") - ord_dr - vu,
            "solved_with": j}


def _chart_at(family, ledger, cover, prec: int) -> dict:
    R, chart_images, _, coords, E = compose_ledger(family, ledger)
    ys = [c for c in coords if c != E]
    p = family.p
    phi, kind = _cover_phi(cover, prec + 4)
    prec += min(phi)
    if kind == "wild":
        phi, kind = _cover_phi(cover, prec + 4)
    for y0 in itertools.product(range(p), repeat=len(ys)):
        Rl = _local_ring(p, (_T, E, *ys), prec)
        loc = {E: Rl.var(E)}
        for y, c in zip(ys, y0):
            loc[y] = Rl.const(c) + Rl.var(y)
        ev = _Evaluator(Rl, loc, prec)
        Xloc = {v: ev(img) for v, img in chart_images.items()}
        r_loc = _Evaluator(Rl, Xloc, prec)(family.r_expr)
        Psi = Rl.series({(k,) + (0,) * (len(ys) + 1): c for k, c in phi.items() if k <= prec})
        Psi = (Psi - r_loc).truncate(prec)
        Psi, u_of, pts, edges = _shift_search(Psi, Rl.var(_T), E)
        prec_now = Psi.effective_prec()
        found = []
        for edge in edges:
            term = _terminal(Psi, edge, pts, E, ys, prec_now)
            if term is None:
                break
            psi, cs, RZ, qh = term
            found.append(_branch_numbers(family, chart_images, psi, cs, RZ, qh, u_of, E, ys, y0,
                                         kind != "insep"))
        else:
            found.sort(key=lambda b: (b["a_prime"], b["vx"]))
            out = dict(found[0])
            out.update({"cover": kind, "divisor": E, "t": r_loc.order_along(E),
                        "point": list(y0), "branches": found[1:]})
            return out
    raise NoGeneralPoint("no F_p point of the divisor carries a smooth branch")


def chart_recompute(family: FamilyModel, ledger: BlowupLedger, cover: CoverSpec,
                    precision: int = 24, max_precision: int | None = None) -> dict:
    """Discrepancy of ``E'`` over the ledger divisor after the base change ``cover``.

    Works directly on ``phi(u) = r(X)`` in the final chart: a branch of the
    normalization is parametrized near a general point, and
    ``a' = ord det d(X_{!=j}, u)/d(coords) - ord (dr/dX_j) - ord u``.
    """
    if max_precision is None:
        max_precision = 96 + 2 * cover.degree
    prec = precision
    while True:
        try:
            return _chart_at(family, ledger, cover, prec)
        except VerificationInconclusive:
            if prec >= max_precision:
                raise
            prec = min(max_precision, prec * 3 // 2)
