"""Independent reference formulas used by the tests.

None of these share code with the package: they are written from the
closed forms directly, with plain integer factorials where possible.
"""

import cmath
import math
from fractions import Fraction


def u1_f(k, a, b, c):
    """Raw-lift U(1)_k F: (-1)^{a * [b + c >= k]}."""
    return -1.0 if (a % 2 and b + c >= k) else 1.0


def u1_r(k, a, b):
    return cmath.exp(1j * math.pi * a * b / k)


def qint(n, k):
    """[n]_q for q = exp(2 pi i/(k+2)), via the sine ratio."""
    t = math.pi / (k + 2)
    return math.sin(n * t) / math.sin(t)


def classical_6j(j1, j2, j3, j4, j5, j6):
    """Wigner 6j {j1 j2 j3; j4 j5 j6} from the Racah formula with exact rationals."""
    def tri(a, b, c):
        return (math.factorial(int(a + b - c)) * math.factorial(int(a - b + c))
                * math.factorial(int(-a + b + c))) / Fraction(math.factorial(int(a + b + c + 1)))

    def ok(a, b, c):
        return abs(a - b) <= c <= a + b and (a + b + c) == int(a + b + c)

    for t in ((j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)):
        if not ok(*t):
            return 0.0
    d = tri(j1, j2, j3) * tri(j1, j5, j6) * tri(j4, j2, j6) * tri(j4, j5, j3)
    a = [j1 + j2 + j3, j1 + j5 + j6, j4 + j2 + j6, j4 + j5 + j3]
    b = [j1 + j2 + j4 + j5, j2 + j3 + j5 + j6, j3 + j1 + j6 + j4]
    s = Fraction(0)
    for t in range(int(max(a)), int(min(b)) + 1):
        den = 1
        for x in a:
            den *= math.factorial(int(t - x))
        for y in b:
            den *= math.factorial(int(y - t))
        s += Fraction((-1) ** t * math.factorial(t + 1), den)
    return float(s) * math.sqrt(float(d))
