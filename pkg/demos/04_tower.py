"""
The inseparable tower
=====================

Adjoin p^n-th roots of r, n = 1, 2, 3.  The engine does not compute across a
purely inseparable base change, it records an obligation.  On ledger divisors
the chart method can still give a number, and the verdict stays put level by
level.
"""

from wildstab.divisors import bundled_divisor, bundled_ledgers
from wildstab.resolve import tower_run

for p in (2, 3):
    for family in ("smooth", "nodal"):
        divisors = [bundled_divisor(n, p) for n, (f, _) in bundled_ledgers().items() if f == family]
        res = tower_run(divisors, p, 3)
        print(p, family, res["verdicts"], "stabilized" if res["stabilized"] else "moved")
        for level in res["levels"]:
            print("   n =", level["n"], [row["a_prime"] for row in level["rows"]])
