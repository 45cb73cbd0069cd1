import pytest
from hypothesis import given, settings, strategies as st

from wildstab import Ring, Scalar, NotAPthPower, parse_series
from wildstab.errors import (ModulusMismatch, NotAUnit, PrecisionUnderflow,
                             SeriesSyntaxError, UnknownVariable, VariableMismatch,
                             ZeroToPrecision)


def ring(p, names="x y", dist=None, prec=64):
    names = tuple(names.split())
    return Ring(p, names, frozenset(dist or names), prec, 16)


def test_scalar_basics():
    a = Scalar(2, 3)
    assert (a * a).value == 1
    assert a.inverse().value == 2
    with pytest.raises(ValueError):
        Scalar(1, 4)


def test_char2_cancellation():
    R = ring(2)
    f = R.parse("1 + x")
    assert (f + f).is_zero()


def test_freshman_dream():
    R = ring(2)
    f = R.parse("x + y")
    assert f * f == R.parse("x^2 + y^2")


def test_truncated_product():
    R = ring(3, "u")
    f = (R.parse("1 + u") * R.parse("1 + u + u^2")).truncate(2)
    assert f.terms == R.parse("1 + 2*u + 2*u^2").terms
    assert f.prec == 2


def test_mismatches():
    with pytest.raises(ModulusMismatch):
        ring(2).parse("x") + ring(3).parse("x")
    with pytest.raises(VariableMismatch):
        ring(2).parse("x") + ring(2, "x z").parse("x")


def test_invert_unit():
    R = ring(2, "x", prec=4)
    inv = R.parse("1 + x").invert_unit()
    assert inv.terms == R.parse("1 + x + x^2 + x^3 + x^4").terms
    assert ring(3, "x").parse("2").invert_unit() == ring(3, "x").parse("2")
    with pytest.raises(NotAUnit):
        R.parse("x").invert_unit()


def test_order_along():
    R = ring(5)
    assert R.parse("x^2*y + x^3").order_along("x") == 2
    assert ring(5, "u").parse("1 + u").order_along("u") == 0
    with pytest.raises(ZeroToPrecision):
        R.zero().order_along("x")


def test_substitute():
    R = ring(2, "u x")
    f = R.parse("u^2").substitute("u", R.parse("x + x^2"))
    assert f == R.parse("x^2 + x^4")
    assert R.parse("x").substitute("u", R.parse("x")) == R.parse("x")


def test_substitute_absorbs_square():
    R = ring(2, "u", prec=20)
    u = R.var("u")
    w = u + u ** 2
    assert w ** 2 == R.parse("u^2 + u^4")
    rest = R.parse("u^2 + u^4 + u^5") - w ** 2
    assert rest.order_along("u") == 5


def test_substitute_precision_underflow():
    R = ring(2, "u x", prec=3)
    f = R.parse("1 + u + u^3").truncate(2)
    with pytest.raises(PrecisionUnderflow):
        f.substitute("u", R.parse("1 + x"))


def test_partial():
    assert ring(2).parse("x^2*y + y^2").partial("y") == ring(2).parse("x^2")
    assert ring(3, "x").parse("x^3").partial("x").is_zero()
    R = ring(2, "u")
    assert R.parse("u^2 + u^3").partial("u").terms == R.parse("u^2").terms


def test_pth_root():
    R = ring(2)
    assert R.parse("x^2 + x^2*y^4").pth_root() == R.parse("x + x*y^2")
    R3 = ring(3)
    assert R3.parse("x^3*y^6 + 2*x^6").pth_root() == R3.parse("x*y^2 + 2*x^2")
    res = R.parse("x^3").pth_root()
    assert isinstance(res, NotAPthPower) and not res
    assert res.witness == (3, 0)


def test_parse():
    R = ring(2, "u")
    assert parse_series("u^2 + u^3", R) == R.parse("u^2") + R.parse("u^3")
    R3 = ring(3)
    assert R3.parse("x^2*y + 3*x") == R3.parse("x^2*y")
    with pytest.raises(SeriesSyntaxError) as e:
        R.parse("u^-1")
    assert e.value.position == 2
    with pytest.raises(SeriesSyntaxError):
        R.parse("2u")
    with pytest.raises(UnknownVariable) as e:
        R.parse("u + z")
    assert e.value.name == "z"


@pytest.mark.parametrize("text", ["", "+", "u^", "(u", "u)", "u**2", "u ^ 2 ^ 3", "1.5", "u$"])
def test_parse_rejects(text):
    with pytest.raises(SeriesSyntaxError):
        ring(2, "u").parse(text)


def test_truncate():
    R = ring(2, "x")
    f = R.parse("1 + x + x^2").truncate(1)
    assert f.terms == R.parse("1 + x").terms and f.prec == 1
    assert f.truncate(1) == f
    assert R.zero().truncate(5).is_zero()


def test_parameters_do_not_count_toward_precision():
    R = Ring(2, ("x", "y"), frozenset({"x"}), 3, 16)
    f = R.parse("x^3*y^5 + x^4").truncate(3)
    assert f.terms == R.parse("x^3*y^5").terms


# --- properties -----------------------------------------------------------

PRIMES = [2, 3, 5]


@st.composite
def sparse_series(draw, R, max_terms=5, max_deg=6):
    n = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(n):
        e = tuple(draw(st.integers(0, max_deg)) for _ in R.names)
        terms[e] = draw(st.integers(0, R.p - 1))
    return R.series(terms)


@settings(max_examples=60, deadline=None)
@given(st.data(), st.sampled_from(PRIMES))
def test_ring_axioms(data, p):
    R = ring(p, prec=12)
    a, b, c = (data.draw(sparse_series(R)) for _ in range(3))
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + b == b + a


@settings(max_examples=60, deadline=None)
@given(st.data(), st.sampled_from(PRIMES))
def test_frobenius_identity(data, p):
    R = ring(p, prec=40)
    f = data.draw(sparse_series(R, max_deg=4))
    scaled = R.series({tuple(p * k for k in e): c for e, c in f.terms.items()})
    assert f ** p == scaled


@settings(max_examples=60, deadline=None)
@given(st.data(), st.sampled_from(PRIMES))
def test_pth_root_round_trip(data, p):
    R = ring(p, prec=40)
    f = data.draw(sparse_series(R, max_deg=8))
    g = f.pth_root()
    if isinstance(g, NotAPthPower):
        assert any(k % p for k in g.witness)
        assert f.terms.get(g.witness)
    else:
        assert (g ** p).terms == f.terms


@settings(max_examples=60, deadline=None)
@given(st.data(), st.sampled_from(PRIMES))
def test_invert_round_trip(data, p):
    R = ring(p, prec=10)
    f = data.draw(sparse_series(R)) + R.const(data.draw(st.integers(1, p - 1)))
    if f.constant_term() == 0:
        return
    assert (f * f.invert_unit()) == R.one().with_prec(10)


@settings(max_examples=40, deadline=None)
@given(st.data(), st.sampled_from(PRIMES))
def test_substitute_precision_contract(data, p):
    lo = ring(p, "u x", prec=8)
    hi = ring(p, "u x", prec=24)
    terms = data.draw(sparse_series(hi, max_deg=5)).terms
    gterms = data.draw(sparse_series(hi, max_deg=3)).terms
    gterms = {e: c for e, c in gterms.items() if any(e)}
    f_lo = lo.series(terms).with_prec(6)
    g_lo = lo.series(gterms).with_prec(6)
    r_lo = f_lo.substitute("u", g_lo)
    r_hi = hi.series(terms).substitute("u", hi.series(gterms))
    bound = r_lo.effective_prec()
    for e, c in r_hi.terms.items():
        if sum(e) <= bound:
            assert r_lo.terms.get(e) == c
    for e, c in r_lo.terms.items():
        assert r_hi.terms.get(e) == c
