import random
from math import gcd

import pytest

from wildstab.covers import (ArtinSchreier, CoverSpec, DirectExpansion, Insep, Tame,
                             boundary_pullback, cover_from_dict, disk_ring, normal_form,
                             tame_pullback, tower_levels, verify_artin_schreier)
from wildstab.errors import Inseparable, NotTame, NotWild


def direct(p, text, prec=24):
    return CoverSpec(DirectExpansion(disk_ring(p, "u", prec).parse(text)), p)


def artin_schreier(p, a, c, prec=24):
    R = disk_ring(p, "r", prec)
    return CoverSpec(ArtinSchreier(R.parse(a), R.parse(c)), p)


@pytest.mark.parametrize("p, text, s, v", [
    (2, "u^2 + u^3", 1, 1),
    (2, "u^2 + u^4 + u^5", 3, 1),
    (3, "u^3 + 2*u^5", 2, 2),
    (5, "3*u^5 + u^7", 2, None),
])
def test_direct_normal_form(p, text, s, v):
    nf = normal_form(direct(p, text))
    assert nf.s == s
    if v is not None:
        assert nf.v == v
    assert nf.different_exponent == s - 1
    u = nf.phi.ring.var("u")
    assert nf.phi == direct(p, text).kind.phi.substitute("u", nf.uniformizer_change).with_prec(nf.phi.prec)
    assert nf.reconstructed() == nf.phi
    assert nf.tail.terms == {} or nf.tail.order_along("u") > p + s
    assert nf.phi.coefficient({"u": p}) == u.ring.one()


def test_absorption_recorded():
    nf = normal_form(direct(2, "u^2 + u^4 + u^5"))
    assert [st["step"] for st in nf.steps] == ["absorb"]


def test_artin_schreier_example():
    cover = artin_schreier(2, "r", "r")
    nf = normal_form(cover)
    assert nf.s == 1
    R = nf.phi.ring
    u = R.var("u")
    expected = (u ** 2 * (R.one() + u).invert_unit(nf.phi.prec)).with_prec(nf.phi.prec)
    assert nf.phi == expected
    assert verify_artin_schreier(cover, nf)


@pytest.mark.parametrize("p, a, c, s", [
    (3, "r", "r^2 + r^4", 2),
    (3, "r^2", "r + r^3", 10),
    (2, "r^2", "r^2 + r^5", 1),
    (5, "r", "r^3", 8),
])
def test_artin_schreier_conductor(p, a, c, s):
    cover = artin_schreier(p, a, c)
    nf = normal_form(cover)
    assert nf.s == s
    assert verify_artin_schreier(cover, nf)


def test_artin_schreier_p_divisible_pole_is_reduced():
    # -c/a^2 = 1/r^4 + 1/r^3: the pole of order 4 is removed first
    cover = artin_schreier(2, "r^3", "r^2 + r^3")
    nf = normal_form(cover)
    assert nf.s == 3
    assert [st["pole"] for st in nf.steps if st["step"] == "artin_schreier_shift"] == [4]
    assert verify_artin_schreier(cover, nf)


def test_errors():
    with pytest.raises(NotWild):
        normal_form(artin_schreier(2, "1 + r", "r"))
    with pytest.raises(NotWild):
        normal_form(artin_schreier(3, "r", "r^3"))
    with pytest.raises(Inseparable):
        normal_form(direct(2, "u^2 + u^4"))
    with pytest.raises(NotWild):
        normal_form(direct(2, "u^3"))
    with pytest.raises(NotWild):
        normal_form(CoverSpec(Tame(3), 2))


@pytest.mark.parametrize("p, text, order", [
    (2, "u^2 + u^3", 0), (2, "u^2 + u^5", 2), (3, "u^3 + 2*u^5", 1)])
def test_boundary_pullback(p, text, order):
    out = boundary_pullback(normal_form(direct(p, text)))
    assert out["logform_order"] == order
    assert out["delta_coefficient"] == order + 1


def test_tame():
    assert tame_pullback(3, 2)["delta_coefficient"] == 0
    assert tame_pullback(2, 3)["delta_coefficient"] == 0
    with pytest.raises(NotTame):
        tame_pullback(2, 2)
    with pytest.raises(NotTame):
        CoverSpec(Tame(4), 2)


def test_tower_levels():
    assert [c.kind.degree for c in tower_levels(2, 2)] == [2, 4]
    assert [c.kind.degree for c in tower_levels(3, 1)] == [3]
    assert tower_levels(2, 0) == []
    with pytest.raises(ValueError):
        CoverSpec(Insep(6), 2)


def test_cover_from_dict():
    c = cover_from_dict({"kind": "direct", "p": 3, "data": {"phi": "u^3 + 2*u^5"}})
    assert normal_form(c).s == 2
    assert cover_from_dict({"kind": "tame", "p": 2, "data": {"m": 3}}).kind.m == 3
    with pytest.raises(ValueError):
        cover_from_dict({"kind": "bogus", "p": 2})


# --- properties -----------------------------------------------------------

def random_normal_form(rng, p, prec=24):
    while True:
        s = rng.randint(1, 9)
        if gcd(s, p) == 1:
            break
    R = disk_ring(p, "u", prec)
    terms = {(p,): 1, (p + s,): rng.randint(1, p - 1)}
    for k in range(p + s + 1, prec + 1):
        if rng.random() < 0.3:
            terms[(k,)] = rng.randint(1, p - 1)
    return CoverSpec(DirectExpansion(R.series(terms)), p), s


@pytest.mark.parametrize("p", [2, 3, 5])
def test_boundary_pullback_random(p):
    rng = random.Random(7 + p)
    for _ in range(100):
        cover, s = random_normal_form(rng, p)
        nf = normal_form(cover)
        assert nf.s == s and gcd(nf.s, p) == 1
        assert boundary_pullback(nf)["logform_order"] == s - 1


@pytest.mark.parametrize("p", [2, 3, 5])
def test_idempotence(p):
    rng = random.Random(100 + p)
    for _ in range(30):
        cover, _ = random_normal_form(rng, p)
        # hide the normal form behind a random p-divisible disturbance
        R = cover.kind.phi.ring
        u = R.var("u")
        j = rng.randint(2, 4)
        phi = cover.kind.phi.substitute("u", u + u ** j * rng.randint(1, p - 1))
        nf = normal_form(CoverSpec(DirectExpansion(phi), p))
        again = normal_form(CoverSpec(DirectExpansion(nf.reconstructed()), p))
        assert again.s == nf.s == normal_form(cover).s


def random_series(rng, R, lo, hi, density=0.5):
    return R.series({(k,): rng.randint(1, R.p - 1) for k in range(lo, hi) if rng.random() < density})


@pytest.mark.parametrize("p", [2, 3, 5])
def test_translation_invariance(p):
    rng = random.Random(300 + p)
    R = disk_ring(p, "r", 40)
    done = 0
    while done < 10:
        a = random_series(rng, R, 1, 4) + R.var("r")
        c = random_series(rng, R, 1, 8)
        cover = CoverSpec(ArtinSchreier(a, c), p)
        try:
            s = normal_form(cover, 40).s
        except NotWild:
            continue
        h = random_series(rng, R, 0, 5)
        c2 = c + h ** p - a ** (p - 1) * h
        cover2 = CoverSpec(ArtinSchreier(a, c2), p)
        assert normal_form(cover2, 40).s == s
        done += 1
