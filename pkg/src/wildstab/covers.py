"""Base changes of the formal disk and the conductor normal form.

A wild degree-p cover of ``Spec k[[r]]`` is brought to the shape

    r = u^p + v*u^(p+s) + (higher order terms in u),    gcd(s, p) = 1,

where ``s`` is the conductor.  Covers are given either directly as
``r = phi(u)`` or by Artin-Schreier data ``T^p - a^(p-1) T + c = 0`` with
``a, c`` power series in ``r``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd

from .errors import Inseparable, NotTame, NotWild, PrecisionUnderflow, VerificationFailed
from .series import NotAPthPower, Ring, Series, is_prime

DEFAULT_STEP_CAP = 200


def disk_ring(p: int, name: str = "u", precision: int = 64) -> Ring:
    return Ring(p, (name,), frozenset({name}), precision, None)


@dataclass(frozen=True)
class ArtinSchreier:
    a: Series
    c: Series


@dataclass(frozen=True)
class DirectExpansion:
    phi: Series


@dataclass(frozen=True)
class Tame:
    m: int


@dataclass(frozen=True)
class Insep:
    degree: int


@dataclass(frozen=True)
class CoverSpec:
    """A base change ``b' -> b`` of the formal disk."""

    kind: ArtinSchreier | DirectExpansion | Tame | Insep
    p: int

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        k = self.kind
        if isinstance(k, Tame):
            if k.m < 1 or gcd(k.m, self.p) != 1:
                raise NotTame(f"m={k.m} is not prime to p={self.p}")
        elif isinstance(k, Insep):
            d, j = k.degree, 0
            while d % self.p == 0 and d > 1:
                d //= self.p
                j += 1
            if d != 1 or j < 1:
                raise ValueError(f"inseparable degree {k.degree} is not a positive power of {self.p}")
        elif isinstance(k, DirectExpansion):
            if k.phi.ring.p != self.p:
                raise ValueError("series modulus differs from cover prime")
            if k.phi.constant_term():
                raise ValueError("phi must have zero constant term")
        elif isinstance(k, ArtinSchreier):
            if k.a.ring.p != self.p or k.c.ring.p != self.p:
                raise ValueError("series modulus differs from cover prime")

    @property
    def degree(self) -> int:
        k = self.kind
        if isinstance(k, Tame):
            return k.m
        if isinstance(k, Insep):
            return k.degree
        return self.p

    @property
    def label(self) -> str:
        k = self.kind
        if isinstance(k, Tame):
            return f"tame(m={k.m})"
        if isinstance(k, Insep):
            return f"insep(degree={k.degree})"
        if isinstance(k, DirectExpansion):
            return f"direct(r={k.phi.to_text()})"
        return f"artin_schreier(a={k.a.to_text()}, c={k.c.to_text()})"


@dataclass
class NormalForm:
    """``r = u^p + v u^(p+s) + tail`` together with how ``u`` was obtained."""

    p: int
    s: int
    v: int
    tail: Series
    uniformizer_change: Series
    phi: Series
    T_of_u: Series | None = None
    steps: list = field(default_factory=list)

    @property
    def different_exponent(self) -> int:
        return self.s - 1

    @property
    def precision(self) -> int:
        return self.phi.effective_prec()

    def reconstructed(self) -> Series:
        R = self.phi.ring
        u = R.var(R.names[0])
        return (u ** self.p + (u ** (self.p + self.s)).scale(self.v) + self.tail).with_prec(
            self.phi.prec)


# --- normal form ----------------------------------------------------------

def _first_coprime_exponent(phi: Series, p: int):
    for e, c, _, _ in phi.items():
        if e[0] % p:
            return e[0], c
    return None, None


def _normalize_expansion(phi: Series, p: int, step_cap: int, steps: list):
    """Bring ``r = phi(u)`` to normal form; returns (phi_new, change)."""
    R = phi.ring
    uname = R.names[0]
    u = R.var(uname)
    if not phi.terms:
        raise PrecisionUnderflow("cover series vanishes to precision")
    order = phi.order_along(uname)
    if order != p:
        raise NotWild(f"r has u-order {order}, expected {p}")
    if isinstance(phi.pth_root(), Series):
        raise Inseparable("r is a p-th power in u: the cover is not separable")
    change = u
    lead = phi.coefficient({uname: p}).constant_term()
    if lead != 1:
        scale = pow(lead, -1, p)
        sub = u.scale(scale)
        phi = phi.substitute(uname, sub)
        change = change.substitute(uname, sub)
        steps.append({"step": "rescale", "factor": scale})
    e0, _ = _first_coprime_exponent(phi, p)
    if e0 is None:
        raise PrecisionUnderflow("no exponent prime to p within precision")
    for _ in range(step_cap):
        offending = None
        for e, c, _, _ in phi.items():
            k = e[0]
            if p < k < e0:
                offending = (k, c)
                break
        if offending is None:
            break
        k, c = offending
        j = k // p
        # (w - c w^j)^p = w^p - c w^(pj) absorbs the term c u^(pj)
        sub = (u - u ** j * c).with_prec(phi.prec)
        phi = phi.substitute(uname, sub)
        change = change.substitute(uname, sub)
        steps.append({"step": "absorb", "exponent": k, "coefficient": c})
    else:
        raise PrecisionUnderflow(f"normal form loop exceeded {step_cap} steps")
    return phi, change


def _assemble(phi: Series, change: Series, p: int, steps, T_of_u=None) -> NormalForm:
    uname = phi.ring.names[0]
    e0, v = _first_coprime_exponent(phi, p)
    s = e0 - p
    u = phi.ring.var(uname)
    tail = (phi - u ** p - (u ** e0).scale(v)).with_prec(phi.prec)
    return NormalForm(p=p, s=s, v=v % p, tail=tail, uniformizer_change=change,
                      phi=phi, T_of_u=T_of_u, steps=steps)


def _reduce_artin_schreier(a: Series, c: Series, p: int, step_cap: int, steps: list):
    """Laurent data ``(N, K)`` with ``-c/a^p = N(r)/r^K`` after removing p-divisible poles.

    Also returns the accumulated shift ``g`` (a Laurent series ``G/r^K``) with
    ``T = a*(y + g)`` where ``y^p - y = N/r^K``.
    """
    R = a.ring
    rname = R.names[0]
    if not a.terms:
        raise NotWild("a vanishes")
    i = a.order_along(rname)
    if i == 0:
        raise NotWild("a is a unit: the cover is unramified at b")
    a_unit = a.div_monomial({rname: i})
    K = p * i
    num = -(c * a_unit.invert_unit() ** p)
    shift = R.zero(num.prec)
    for _ in range(step_cap):
        if not num.terms:
            raise NotWild("no pole after reduction: unramified cover")
        e = num.order_along(rname)
        k = K - e
        if k <= 0:
            raise NotWild("no pole after reduction: unramified cover")
        if k % p:
            return num, K, shift, k
        coef = num.coefficient({rname: e}).constant_term()
        # y -> y + coef r^(-k/p): subtract (g^p - g)
        g_exp = K - k // p
        num = num - R.monomial({rname: e}, coef) + R.monomial({rname: g_exp}, coef)
        shift = shift + R.monomial({rname: g_exp}, coef)
        steps.append({"step": "artin_schreier_shift", "pole": k, "coefficient": coef})
    raise PrecisionUnderflow(f"Artin-Schreier reduction exceeded {step_cap} steps")


def _bezout(a: int, b: int):
    """(x, y) with a*x + b*y = gcd(a, b)."""
    if b == 0:
        return 1, 0
    x, y = _bezout(b, a % b)
    return y, x - (a // b) * y


def _solve_artin_schreier(a: Series, c: Series, p: int, precision: int,
                          step_cap: int) -> NormalForm:
    steps: list = []
    R = a.ring
    rname = R.names[0]
    num, K, shift, m = _reduce_artin_schreier(a, c, p, step_cap, steps)
    # the conductor is m(p-1); keep enough terms to see it
    precision = max(precision, p + m * (p - 1) + p + 2)
    # y^p - y = r^(-m) * Fu(r) with Fu a unit; put Y = 1/y so that
    # r^m = Y^p * Phi(r, Y), Phi = Fu(r) / (1 - Y^(p-1)).
    e = num.order_along(rname)
    Fu = num.div_monomial({rname: e})
    A, B = _bezout(p, m)          # p*A + m*B = 1
    B = -B                        # p*A - m*B = 1, uniformizer u = r^A * Y^(-B)
    steps.append({"step": "uniformizer", "pole": m, "r_exponent": A, "y_exponent": B})
    U = disk_ring(p, "u", precision)
    u = U.var("u")
    Fu_u = U.series({(k[0],): v for k, v in Fu.terms.items()}, precision)
    rho = U.one().with_prec(precision)
    eta = U.one().with_prec(precision)
    for _ in range(precision + 2):
        r_u = (u ** p) * rho
        Y_u = (u ** m) * eta
        Phi = Fu_u.substitute("u", r_u) * (U.one() - Y_u ** (p - 1)).invert_unit(precision)
        Phi = Phi.with_prec(precision)
        rho_new = Phi ** (-B) if B else U.one().with_prec(precision)
        eta_new = Phi ** (-A) if A else U.one().with_prec(precision)
        if rho_new == rho and eta_new == eta:
            break
        rho, eta = rho_new, eta_new
    phi = ((u ** p) * rho).with_prec(precision)
    Y_u = ((u ** m) * eta).with_prec(precision)
    # T = a * (1/Y + shift / r^K); a = r^i * a_unit and K = p*i >= m
    i = a.order_along(rname)
    a_unit = a.div_monomial({rname: i})
    to_u = lambda f: U.series({(k[0],): v for k, v in f.terms.items()}, f.prec)
    a_unit_u = to_u(a_unit).substitute("u", phi)
    T_of_u = ((u ** (p * i - m)) * rho ** i * a_unit_u * eta.invert_unit(precision))
    if shift.terms:
        sg = shift.div_monomial({rname: K - i}) * a_unit
        T_of_u = T_of_u + to_u(sg).substitute("u", phi)
    T_of_u = T_of_u.with_prec(precision - m)
    phi_n, change = _normalize_expansion(phi, p, step_cap, steps)
    return _assemble(phi_n, change, p, steps, T_of_u=T_of_u.substitute("u", change))


def normal_form(cover: CoverSpec, precision: int = 32, step_cap: int = DEFAULT_STEP_CAP) -> NormalForm:
    """Conductor normal form of a wild degree-p cover."""
    k = cover.kind
    p = cover.p
    if isinstance(k, DirectExpansion):
        phi = k.phi
        R = phi.ring
        if len(R.names) != 1:
            raise ValueError("phi must be a series in a single variable")
        if R.names[0] != "u" or R.precision != precision:
            R2 = disk_ring(p, "u", precision)
            phi = R2.series({e: c for e, c in phi.terms.items()}, phi.prec)
        phi = phi.truncate(precision) if phi.prec is None or phi.prec > precision else phi
        steps: list = []
        phi_n, change = _normalize_expansion(phi, p, step_cap, steps)
        return _assemble(phi_n, change, p, steps)
    if isinstance(k, ArtinSchreier):
        return _solve_artin_schreier(k.a, k.c, p, precision, step_cap)
    raise NotWild(f"{cover.label} is not a wild degree-p cover")


def verify_artin_schreier(cover: CoverSpec, nf: NormalForm) -> bool:
    """Check ``T^p - a^(p-1) T + c == 0`` after ``r = phi(u)``, ``T = T(u)``."""
    k = cover.kind
    if not isinstance(k, ArtinSchreier) or nf.T_of_u is None:
        raise ValueError("needs Artin-Schreier data with a recorded T(u)")
    U = nf.phi.ring
    lift = lambda f: U.series({(e[0],): c for e, c in f.terms.items()}, f.prec)
    a_u = lift(k.a).substitute("u", nf.phi)
    c_u = lift(k.c).substitute("u", nf.phi)
    T = nf.T_of_u
    eq = T ** cover.p - a_u ** (cover.p - 1) * T + c_u
    return eq.is_zero()


def boundary_pullback(nf: NormalForm) -> dict:
    """Coefficient of the pulled-back boundary and the order of ``dr/r`` in ``u``.

    Checks by formal differentiation that ``dr/r = u^(s-1) * unit * du``.
    """
    phi = nf.phi
    uname = phi.ring.names[0]
    dphi = phi.partial(uname)
    if not dphi.terms:
        raise VerificationFailed("dr vanishes to precision")
    unit = phi.div_monomial({uname: nf.p})
    ratio = dphi.div_monomial({uname: nf.p}) * unit.invert_unit()
    if not ratio.terms:
        raise VerificationFailed("dr/r vanishes to precision")
    order = ratio.order_along(uname)
    if order != nf.s - 1:
        raise VerificationFailed(f"dr/r has u-order {order}, expected s-1={nf.s - 1}")
    return {"delta_coefficient": nf.s, "logform_order": order}


def tame_pullback(m: int, p: int) -> dict:
    if m < 2 or gcd(m, p) != 1:
        raise NotTame(f"m={m} is not a tame ramification index for p={p}")
    return {"delta_coefficient": 0, "m": m}


def tower_levels(p: int, n_max: int) -> list[CoverSpec]:
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    return [CoverSpec(Insep(p ** n), p) for n in range(1, n_max + 1)]


def cover_from_dict(spec: dict, p: int | None = None, precision: int = 32) -> CoverSpec:
    """Build a cover from ``{kind, p, data}`` (the problem-file schema)."""
    kind = spec.get("kind")
    p = spec.get("p", p)
    data = spec.get("data", {})
    if p is None:
        raise ValueError("cover needs a prime p")
    if kind == "tame":
        return CoverSpec(Tame(int(data["m"])), p)
    if kind == "insep":
        return CoverSpec(Insep(int(data["degree"])), p)
    if kind == "direct":
        R = disk_ring(p, "u", precision)
        return CoverSpec(DirectExpansion(R.parse(str(data["phi"]))), p)
    if kind == "artin_schreier":
        R = disk_ring(p, "r", precision)
        return CoverSpec(ArtinSchreier(R.parse(str(data["a"])), R.parse(str(data["c"]))), p)
    raise ValueError(f"unknown cover kind {kind!r}")
