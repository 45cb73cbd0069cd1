"""Truncated multivariate power series over a prime field F_p.

A :class:`Ring` fixes the prime, the ordered variable names and which of
them are *distinguished* (the variables the precision is measured in, such
as ``u``, ``x`` or ``z``).  The remaining variables are *parameters*; their
total degree is capped separately.

Every :class:`Series` carries two precision bounds:

``prec``
    all terms of distinguished total degree ``<= prec`` are exact.
    ``None`` means the series is an exact polynomial in those variables.
``pprec``
    the same for the parameter total degree.

Operations never report more precision than their inputs justify.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

from .errors import (
    ModulusMismatch,
    NotAUnit,
    PrecisionUnderflow,
    SeriesSyntaxError,
    UnknownVariable,
    VariableMismatch,
    ZeroToPrecision,
)

MAX_PRIME = 17


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


def _pmin(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


@dataclass(frozen=True)
class Scalar:
    """An element of F_p."""

    value: int
    p: int

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"modulus {self.p} is not prime")
        object.__setattr__(self, "value", self.value % self.p)

    def _other(self, other):
        if isinstance(other, Scalar):
            if other.p != self.p:
                raise ModulusMismatch(f"F_{self.p} vs F_{other.p}")
            return other.value
        return other

    def __add__(self, other):
        return Scalar(self.value + self._other(other), self.p)

    __radd__ = __add__

    def __sub__(self, other):
        return Scalar(self.value - self._other(other), self.p)

    def __neg__(self):
        return Scalar(-self.value, self.p)

    def __mul__(self, other):
        return Scalar(self.value * self._other(other), self.p)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        return Scalar(pow(self.value, k, self.p), self.p)

    def inverse(self) -> "Scalar":
        if self.value == 0:
            raise NotAUnit("0 has no inverse")
        return Scalar(pow(self.value, -1, self.p), self.p)

    def __bool__(self):
        return self.value != 0

    def __int__(self):
        return self.value


@dataclass(frozen=True)
class NotAPthPower:
    """Returned by :meth:`Series.pth_root` when no root exists."""

    witness: tuple[int, ...]

    def __bool__(self):
        return False


@dataclass(frozen=True)
class Ring:
    """Coefficient prime, variable names and the distinguished subset."""

    p: int
    names: tuple[str, ...]
    distinguished: frozenset = frozenset()
    precision: int = 64
    param_precision: int | None = 16

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"modulus {self.p} is not prime")
        if self.p > MAX_PRIME:
            raise ValueError(f"p={self.p} exceeds supported bound {MAX_PRIME}")
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "distinguished", frozenset(self.distinguished))
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate variable names")
        unknown = self.distinguished - set(self.names)
        if unknown:
            raise UnknownVariable(sorted(unknown)[0])

    @cached_property
    def dist_idx(self) -> tuple[int, ...]:
        return tuple(i for i, n in enumerate(self.names) if n in self.distinguished)

    @cached_property
    def param_idx(self) -> tuple[int, ...]:
        return tuple(i for i, n in enumerate(self.names) if n not in self.distinguished)

    @cached_property
    def _zero_exp(self):
        return (0,) * len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownVariable(name) from None

    def exp(self, powers: Mapping[str, int]) -> tuple[int, ...]:
        e = [0] * len(self.names)
        for name, k in powers.items():
            e[self.index(name)] += k
        return tuple(e)

    # constructors -----------------------------------------------------

    def series(self, terms, prec=None, pprec=None) -> "Series":
        return Series(self, terms, prec, pprec)

    def zero(self, prec=None) -> "Series":
        return Series(self, {}, prec, None)

    def const(self, c: int) -> "Series":
        return Series(self, {self._zero_exp: c})

    def one(self) -> "Series":
        return self.const(1)

    def var(self, name: str) -> "Series":
        return Series(self, {self.exp({name: 1}): 1})

    def monomial(self, powers: Mapping[str, int], coeff: int = 1) -> "Series":
        if any(k < 0 for k in powers.values()):
            raise ValueError("negative exponent in a series monomial")
        return Series(self, {self.exp(powers): coeff})

    def parse(self, text: str) -> "Series":
        return parse_series(text, self)

    def extend(self, names: Iterable[str] = (), distinguished: Iterable[str] = ()) -> "Ring":
        """A ring with extra variables appended (existing order kept)."""
        new = list(self.names) + [n for n in names if n not in self.names]
        return Ring(self.p, tuple(new), self.distinguished | frozenset(distinguished),
                    self.precision, self.param_precision)

    def embed(self, f: "Series") -> "Series":
        """Move ``f`` into this ring; every variable of ``f`` must exist here."""
        if f.ring == self:
            return f
        if f.ring.p != self.p:
            raise ModulusMismatch(f"F_{f.ring.p} vs F_{self.p}")
        pos = [self.index(n) for n in f.ring.names]
        n = len(self.names)
        terms = {}
        for e, c in f.terms.items():
            ne = [0] * n
            for i, k in zip(pos, e):
                ne[i] += k
            terms[tuple(ne)] = c
        if set(f.ring.distinguished) != {m for m in f.ring.names if m in self.distinguished}:
            # distinguished status changed: precision no longer comparable
            return Series(self, terms, None if f.prec is None and f.pprec is None else
                          _pmin(f.prec, f.pprec), _pmin(f.prec, f.pprec))
        return Series(self, terms, f.prec, f.pprec)


class Series:
    """Element of ``ring`` truncated at ``prec`` (distinguished degree)."""

    __slots__ = ("ring", "terms", "prec", "pprec", "_items")

    def __init__(self, ring: Ring, terms: Mapping, prec=None, pprec=None):
        p = ring.p
        if pprec is None and ring.param_precision is not None:
            pdeg_cap = ring.param_precision
        else:
            pdeg_cap = pprec
        di, pi = ring.dist_idx, ring.param_idx
        clean = {}
        truncated_params = False
        for e, c in terms.items():
            c %= p
            if not c:
                continue
            if prec is not None and sum(e[i] for i in di) > prec:
                continue
            if pdeg_cap is not None and sum(e[i] for i in pi) > pdeg_cap:
                truncated_params = True
                continue
            clean[e] = c
        if truncated_params and pprec is None:
            pprec = pdeg_cap
        self.ring = ring
        self.terms = clean
        self.prec = prec
        self.pprec = pprec
        self._items = None

    # --- internals -----------------------------------------------------

    def items(self):
        """Terms as ``(exp, coeff, dist_degree, param_degree)`` sorted by dist degree."""
        if self._items is None:
            di, pi = self.ring.dist_idx, self.ring.param_idx
            its = [(e, c, sum(e[i] for i in di), sum(e[i] for i in pi))
                   for e, c in self.terms.items()]
            its.sort(key=lambda t: (t[2], t[0]))
            self._items = its
        return self._items

    def _coerce(self, other) -> "Series":
        if isinstance(other, Series):
            if other.ring.p != self.ring.p:
                raise ModulusMismatch(f"F_{self.ring.p} vs F_{other.ring.p}")
            if other.ring.names != self.ring.names or \
                    other.ring.distinguished != self.ring.distinguished:
                raise VariableMismatch(f"{self.ring.names} vs {other.ring.names}")
            return other
        if isinstance(other, Scalar):
            if other.p != self.ring.p:
                raise ModulusMismatch(f"F_{self.ring.p} vs F_{other.p}")
            return self.ring.const(other.value)
        if isinstance(other, int):
            return self.ring.const(other)
        return NotImplemented

    def _new(self, terms, prec, pprec) -> "Series":
        return Series(self.ring, terms, prec, pprec)

    # --- ring operations ----------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return self._new(out, _pmin(self.prec, other.prec), _pmin(self.pprec, other.pprec))

    __radd__ = __add__

    def __neg__(self):
        return self._new({e: -c for e, c in self.terms.items()}, self.prec, self.pprec)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        P = _pmin(self.prec, other.prec)
        Q = _pmin(self.pprec, other.pprec)
        if Q is None:
            Q = self.ring.param_precision
        p = self.ring.p
        out: dict = {}
        cut = False
        b_items = other.items()
        for e1, c1, d1, q1 in self.items():
            if P is not None and d1 > P:
                break
            for e2, c2, d2, q2 in b_items:
                if P is not None and d1 + d2 > P:
                    break
                if Q is not None and q1 + q2 > Q:
                    cut = True
                    continue
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = (out.get(e, 0) + c1 * c2) % p
        pprec = _pmin(self.pprec, other.pprec)
        if cut:
            pprec = _pmin(pprec, Q)
        return self._new(out, P, pprec)

    __rmul__ = __mul__

    def scale(self, c: int) -> "Series":
        return self._new({e: v * c for e, v in self.terms.items()}, self.prec, self.pprec)

    def __pow__(self, k: int) -> "Series":
        if k < 0:
            return self.invert_unit() ** (-k)
        result = self.ring.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        if result.prec is None and self.prec is not None:
            result = result.with_prec(self.prec)
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Scalar, Series)):
            other = self._coerce(other)
            return (self - other).is_zero()
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    # --- precision ----------------------------------------------------

    def with_prec(self, prec) -> "Series":
        return self._new(self.terms, _pmin(self.prec, prec), self.pprec)

    def truncate(self, d: int) -> "Series":
        if d < 0:
            raise ValueError("truncation degree must be nonnegative")
        return self._new(self.terms, _pmin(self.prec, d), self.pprec)

    def effective_prec(self) -> int:
        return self.ring.precision if self.prec is None else self.prec

    # --- inspection ---------------------------------------------------

    def constant_term(self) -> int:
        return self.terms.get(self.ring._zero_exp, 0)

    def dist_order(self) -> int:
        """Minimal distinguished total degree; raises if zero to precision."""
        if not self.terms:
            raise ZeroToPrecision("series vanishes to its precision")
        return self.items()[0][2]

    def order_along(self, var: str) -> int:
        j = self.ring.index(var)
        if not self.terms:
            raise ZeroToPrecision(f"series vanishes to precision; cannot read order in {var}")
        return min(e[j] for e in self.terms)

    def degree_in(self, var: str) -> int:
        j = self.ring.index(var)
        return max((e[j] for e in self.terms), default=-1)

    def variables(self) -> set[str]:
        return {self.ring.names[i] for e in self.terms for i, k in enumerate(e) if k}

    def coefficient(self, powers: Mapping[str, int]) -> "Series":
        """Coefficient of the given monomial in the named variables only.

        The result is a series in the remaining variables.
        """
        idx = {self.ring.index(n): k for n, k in powers.items()}
        out = {}
        for e, c in self.terms.items():
            if all(e[i] == k for i, k in idx.items()):
                ne = tuple(0 if i in idx else v for i, v in enumerate(e))
                out[ne] = c
        return self._new(out, None if self.prec is None else self.prec, self.pprec)

    def split_by(self, var: str) -> dict[int, "Series"]:
        """``{k: f_k}`` with ``self == sum f_k * var**k`` and ``f_k`` free of ``var``."""
        j = self.ring.index(var)
        parts: dict[int, dict] = {}
        for e, c in self.terms.items():
            k = e[j]
            ne = e[:j] + (0,) + e[j + 1:]
            parts.setdefault(k, {})[ne] = c
        return {k: self._new(t, self.prec, self.pprec) for k, t in sorted(parts.items())}

    def at_zero(self, var: str) -> "Series":
        j = self.ring.index(var)
        return self._new({e: c for e, c in self.terms.items() if e[j] == 0},
                         self.prec, self.pprec)

    def mul_monomial(self, powers: Mapping[str, int]) -> "Series":
        shift = self.ring.exp(powers)
        dshift = sum(shift[i] for i in self.ring.dist_idx)
        terms = {tuple(a + b for a, b in zip(e, shift)): c for e, c in self.terms.items()}
        prec = None if self.prec is None else self.prec + dshift
        return self._new(terms, prec, self.pprec)

    def div_monomial(self, powers: Mapping[str, int]) -> "Series":
        """Exact division by a monomial; raises if some term is not divisible."""
        shift = self.ring.exp(powers)
        dshift = sum(shift[i] for i in self.ring.dist_idx)
        terms = {}
        for e, c in self.terms.items():
            ne = tuple(a - b for a, b in zip(e, shift))
            if min(ne) < 0:
                raise ValueError(f"term {self.ring.names}^{e} not divisible by {powers}")
            terms[ne] = c
        prec = None if self.prec is None else self.prec - dshift
        if prec is not None and prec < 0:
            raise PrecisionUnderflow("monomial division exhausted the precision")
        return self._new(terms, prec, self.pprec)

    # --- analysis -----------------------------------------------------

    def partial(self, var: str) -> "Series":
        j = self.ring.index(var)
        out = {}
        for e, c in self.terms.items():
            k = e[j]
            if k:
                out[e[:j] + (k - 1,) + e[j + 1:]] = c * k
        prec = self.prec
        if prec is not None and var in self.ring.distinguished:
            prec = prec - 1
        return self._new(out, prec, self.pprec)

    def invert_unit(self, prec: int | None = None) -> "Series":
        c0 = self.constant_term()
        if not c0:
            raise NotAUnit("constant term vanishes")
        P = _pmin(self.prec, prec)
        if P is None:
            P = self.ring.precision
        inv0 = pow(c0, -1, self.ring.p)
        # f = c0 (1 - h), 1/f = inv0 * sum h^k
        h = (self.scale(-inv0) + 1).with_prec(P)
        h = self._new({e: c for e, c in h.terms.items() if e != self.ring._zero_exp},
                      P, h.pprec)
        total = self.ring.one().with_prec(P)
        power = self.ring.one().with_prec(P)
        Q = self.ring.param_precision if self.pprec is None else self.pprec
        bound = P + (Q if Q is not None else 0) + 2
        for _ in range(bound):
            power = power * h
            if power.is_zero():
                break
            total = total + power
        else:
            if Q is None:
                raise PrecisionUnderflow("parameter-exact inversion needs a parameter cap")
        return total.scale(inv0)

    def substitute(self, var: str, g: "Series") -> "Series":
        """Replace ``var`` by ``g`` (both in the same ring)."""
        g = self._coerce(g)
        j = self.ring.index(var)
        if not any(e[j] for e in self.terms):
            return self
        is_dist = var in self.ring.distinguished
        g_dorder = min((t[2] for t in g.items()), default=None)
        if is_dist:
            if g_dorder is None or g_dorder >= 1:
                prec = _pmin(self.prec, g.prec)
            else:
                if self.prec is not None:
                    raise PrecisionUnderflow(
                        f"substituting a non-vanishing series for {var} needs an exact input")
                prec = g.prec
            pprec = _pmin(self.pprec, g.pprec)
        else:
            g_porder = min((t[3] for t in g.items()), default=None)
            if self.pprec is not None and not (g_porder is not None and g_porder >= 1
                                               and (g_dorder or 0) == 0
                                               and all(t[2] == 0 for t in g.items())):
                raise PrecisionUnderflow(
                    f"substituting into parameter {var} needs a parameter-exact input")
            prec = _pmin(self.prec, g.prec) if g_dorder is not None and g_dorder == 0 \
                else self.prec
            if g.prec is not None and (g_dorder is None or g_dorder == 0):
                prec = _pmin(prec, g.prec)
            pprec = _pmin(self.pprec, g.pprec)
        if prec is not None and prec < 1 and self.prec is not None and self.prec >= 1:
            raise PrecisionUnderflow("substitution leaves no guaranteed terms")
        parts = self.split_by(var)
        result = self._new({}, prec, pprec)
        gk = self.ring.one()
        last = 0
        for k, fk in parts.items():
            for _ in range(k - last):
                gk = (gk * g).with_prec(prec) if prec is not None else gk * g
            last = k
            result = result + (fk * gk)
        return self._new(result.terms, prec, _pmin(pprec, result.pprec))

    def substitute_many(self, mapping: Mapping[str, "Series"]) -> "Series":
        """Simultaneous substitution via fresh intermediate names is not needed:
        the substituted series must not contain the substituted variables."""
        out = self
        for var, g in mapping.items():
            out = out.substitute(var, g)
        return out

    def pth_root(self) -> "Series | NotAPthPower":
        p = self.ring.p
        for e in sorted(self.terms):
            if any(k % p for k in e):
                return NotAPthPower(e)
        terms = {tuple(k // p for k in e): c for e, c in self.terms.items()}
        prec = None if self.prec is None else self.prec // p
        pprec = None if self.pprec is None else self.pprec // p
        return self._new(terms, prec, pprec)

    def frobenius_scaled(self) -> "Series":
        """Series with every exponent multiplied by p (equal to ``self ** p``)."""
        p = self.ring.p
        terms = {tuple(k * p for k in e): c for e, c in self.terms.items()}
        prec = None if self.prec is None else self.prec * p + p - 1
        return self._new(terms, prec, None if self.pprec is None else self.pprec * p)

    # --- display ------------------------------------------------------

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        names = self.ring.names
        out = []
        for e in sorted(self.terms, key=lambda e: (sum(e), e)):
            c = self.terms[e]
            mono = "*".join(n if k == 1 else f"{n}^{k}" for n, k in zip(names, e) if k)
            if not mono:
                out.append(str(c))
            elif c == 1:
                out.append(mono)
            else:
                out.append(f"{c}*{mono}")
        return " + ".join(out)

    def __repr__(self):
        tail = "" if self.prec is None else f" + O(deg {self.prec + 1})"
        return f"Series[F_{self.ring.p}]({self.to_text()}{tail})"


# --- parser --------------------------------------------------------------

_TOKEN_CHARS = set("+-*^()")


def _tokenize(text: str):
    toks = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            toks.append(("INT", text[i:j], i))
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] in "_'"):
                j += 1
            toks.append(("NAME", text[i:j], i))
            i = j
        elif ch in _TOKEN_CHARS:
            toks.append((ch, ch, i))
            i += 1
        else:
            raise SeriesSyntaxError(f"unexpected character {ch!r}", i)
    toks.append(("END", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, ring: Ring):
        self.toks = _tokenize(text)
        self.pos = 0
        self.ring = ring

    def peek(self):
        return self.toks[self.pos]

    def take(self, kind=None):
        tok = self.toks[self.pos]
        if kind is not None and tok[0] != kind:
            want = "end of input" if kind == "END" else repr(kind)
            raise SeriesSyntaxError(f"expected {want}, found {tok[1]!r}", tok[2])
        self.pos += 1
        return tok

    def expr(self) -> Series:
        acc = self.term()
        while self.peek()[0] in "+-" and self.peek()[0] != "END":
            op = self.take()[0]
            rhs = self.term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def term(self) -> Series:
        acc = self.factor()
        while self.peek()[0] == "*":
            self.take()
            acc = acc * self.factor()
        nxt = self.peek()
        if nxt[0] in ("INT", "NAME", "("):
            raise SeriesSyntaxError("implicit multiplication is not allowed", nxt[2])
        return acc

    def factor(self) -> Series:
        kind = self.peek()[0]
        if kind == "-":
            self.take()
            return -self.factor()
        if kind == "+":
            self.take()
            return self.factor()
        return self.power()

    def power(self) -> Series:
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            tok = self.peek()
            if tok[0] != "INT":
                raise SeriesSyntaxError("exponent must be a nonnegative integer", tok[2])
            self.take()
            base = base ** int(tok[1])
        return base

    def atom(self) -> Series:
        tok = self.take()
        if tok[0] == "INT":
            return self.ring.const(int(tok[1]))
        if tok[0] == "NAME":
            if tok[1] not in self.ring.names:
                raise UnknownVariable(tok[1], tok[2])
            return self.ring.var(tok[1])
        if tok[0] == "(":
            inner = self.expr()
            self.take(")")
            return inner
        raise SeriesSyntaxError(f"unexpected {tok[1] or 'end of input'!r}", tok[2])


def parse_series(text: str, ring: Ring) -> Series:
    """Parse ``text`` (see ``docs/series_grammar.ebnf``) into an exact series."""
    parser = _Parser(text, ring)
    result = parser.expr()
    parser.take("END")
    return result
