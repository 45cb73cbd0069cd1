"""
One blow-up sequence, start to finish
=====================================

A divisor E with r = x^t F and t prime to p.  The engine runs the Euclidean
algorithm on (t, p) with blow-ups.  It lands on a divisor E' whose
discrepancy satisfies a' + 1 = p (a + 1).
"""

from wildstab.covers import CoverSpec, DirectExpansion, disk_ring
from wildstab.divisors import divisor_ring, make_divisor
from wildstab.oracle import verify_outcome
from wildstab.resolve import run

p = 3
D = divisor_ring(p, "x", ("y",))
cover = CoverSpec(DirectExpansion(disk_ring(p, "u", 40).parse("u^3 + 2*u^5")), p)

d = make_divisor(4, D.parse("1 + x*y^2"), 1)
out = run(d, cover)
for step in out.trace:
    print(step.kind, step.detail)
print("vx, vu, ram =", out.vx, out.vu, out.ram_index)
print("a' =", out.a_prime, " p(a+1) - 1 =", p * (d.a + 1) - 1)

# the certificate names a uniformizer of E'; the oracle substitutes it back
print(out.certificate)
print(verify_outcome(out))

# a grid of t: the ramification index is s t + p - 1 every time (s = 2 here)
for t in (1, 2, 4, 5, 7):
    o = run(make_divisor(t, D.parse("1 + y"), 0), cover)
    print(t, o.ram_index, 2 * t + p - 1)
