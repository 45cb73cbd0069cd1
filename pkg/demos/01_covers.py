"""
Wild covers of the disk and their conductor
===========================================

A degree-p cover of the formal disk is written r = phi(u).  After a change
of uniformizer it takes the form r = u^p + v*u^(p+s) + ..., and s is the
conductor.
"""

from wildstab.covers import (ArtinSchreier, CoverSpec, DirectExpansion, boundary_pullback,
                             disk_ring, normal_form, verify_artin_schreier)

# r = u^2 + u^3 over F_2 is already normal: s = 1
R = disk_ring(2, "u", 24)
nf = normal_form(CoverSpec(DirectExpansion(R.parse("u^2 + u^3")), 2))
print("s =", nf.s, " v =", nf.v)

# u^4 is a square, so w = u + u^2 absorbs it and the conductor jumps to 3
nf = normal_form(CoverSpec(DirectExpansion(R.parse("u^2 + u^4 + u^5")), 2))
print("s =", nf.s, " steps:", [st["step"] for st in nf.steps])

# the same cover given by an equation T^2 - r T + r = 0
Rr = disk_ring(2, "r", 24)
cover = CoverSpec(ArtinSchreier(Rr.parse("r"), Rr.parse("r")), 2)
nf = normal_form(cover)
print("r =", nf.phi.truncate(8).to_text(), "+ ...")
print("T(u) solves the equation:", verify_artin_schreier(cover, nf))

# dr/r picks up u^(s-1): the boundary gets coefficient s after pull-back
for text in ("u^2 + u^3", "u^2 + u^5"):
    nf = normal_form(CoverSpec(DirectExpansion(R.parse(text)), 2))
    print(text, "->", boundary_pullback(nf))
