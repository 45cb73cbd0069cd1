"""
Divisors from blow-up ledgers, checked on the base-changed family
=================================================================

A ledger is a list of chart blow-ups.  Composing it gives (t, F, a) for the
last exceptional divisor.  chart_recompute skips the engine entirely and
redoes the ledger over the base-changed family.
"""

from wildstab.covers import CoverSpec, DirectExpansion, Tame, disk_ring
from wildstab.divisors import bundled_divisor, bundled_families, bundled_ledgers
from wildstab.oracle import chart_recompute
from wildstab.resolve import run

p = 2
wild = CoverSpec(DirectExpansion(disk_ring(p, "u", 40).parse("u^2 + u^3")), p)
families = bundled_families()

for name, (fam, ledger) in bundled_ledgers().items():
    d = bundled_divisor(name, p)
    engine = run(d, wild)
    chart = chart_recompute(families[fam](p), ledger, wild)
    print(f"{name:14} t={d.t} a={d.a:>2}  engine a'={engine.a_prime:>2}  chart a'={chart['a_prime']:>2}")

# the node xy = 0 stays log canonical: every divisor keeps a' >= -1
# a tame cover r = u^3 just rescales: a' + 1 = 3 (a + 1) on every ledger
for name, (fam, ledger) in bundled_ledgers().items():
    rec = chart_recompute(families[fam](p), ledger, CoverSpec(Tame(3), p))
    print(name, bundled_divisor(name, p).a, "->", rec["a_prime"])
