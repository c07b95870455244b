"""Exact rational-arithmetic oracle for the center-center preset.

The unperturbed orbits of the center-center normal form are the parabolas
y = r^2 - x^2 (upper, traced right to left) and y = x^2 - r^2 (lower,
traced left to right).  Every integral the first- and second-order
Melnikov assemblies need is then a line integral of monomials x^i y^j
along those parabolas, which integrates in closed form to a polynomial in
r with rational coefficients.  This module does that integration exactly
with Fractions, independent of the quadrature path, so the two routes can
be cross-checked.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb


class RPoly:
    """Polynomial in one variable with Fraction coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=None):
        self.coeffs = {}
        if coeffs:
            for k, v in coeffs.items():
                v = Fraction(v)
                if v != 0:
                    self.coeffs[int(k)] = v

    @classmethod
    def monomial(cls, coef, power):
        return cls({power: coef})

    def __add__(self, other):
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, Fraction(0)) + v
        return RPoly(out)

    def __sub__(self, other):
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, Fraction(0)) - v
        return RPoly(out)

    def __mul__(self, other):
        if isinstance(other, RPoly):
            out = {}
            for k1, v1 in self.coeffs.items():
                for k2, v2 in other.coeffs.items():
                    k = k1 + k2
                    out[k] = out.get(k, Fraction(0)) + v1 * v2
            return RPoly(out)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, c):
        c = Fraction(c)
        return RPoly({k: v * c for k, v in self.coeffs.items()})

    def shift_down(self, n):
        """Divide by r^n; requires all powers >= n."""
        if any(k < n for k in self.coeffs):
            raise ValueError(f"not divisible by r^{n}")
        return RPoly({k - n: v for k, v in self.coeffs.items()})

    def __call__(self, r):
        return sum(float(v) * r ** k for k, v in self.coeffs.items())

    def __eq__(self, other):
        return isinstance(other, RPoly) and self.coeffs == other.coeffs

    @property
    def is_zero(self):
        return not self.coeffs

    def even_part_in_square(self):
        """Rewrite as a polynomial in h = r^2; requires only even powers."""
        if any(k % 2 for k in self.coeffs):
            raise ValueError("odd powers present")
        return RPoly({k // 2: v for k, v in self.coeffs.items()})

    def __repr__(self):
        if not self.coeffs:
            return "0"
        terms = [f"({v})*r^{k}" for k, v in sorted(self.coeffs.items())]
        return " + ".join(terms)


def _int_x_power(m):
    """int_r^{-r} x^m dx as an RPoly in r."""
    if m % 2 == 1:
        return RPoly()
    return RPoly.monomial(Fraction(-2, m + 1), m + 1)


def _upper_dx(i, j):
    """int x^i y^j dx along y = r^2 - x^2, x from r to -r."""
    out = RPoly()
    for k in range(j + 1):
        c = Fraction(comb(j, k) * (-1) ** k)
        out = out + RPoly.monomial(c, 2 * (j - k)) * _int_x_power(i + 2 * k)
    return out


def _upper_dy(i, j):
    # dy = -2x dx on the upper parabola
    return _upper_dx(i + 1, j).scale(-2)


def _lower_dx(i, j):
    """int x^i y^j dx along y = x^2 - r^2, x from -r to r."""
    # (x^2 - r^2)^j = (-1)^j (r^2 - x^2)^j and the direction is reversed
    return _upper_dx(i, j).scale(Fraction((-1) ** (j + 1)))


def _lower_dy(i, j):
    # dy = 2x dx on the lower parabola
    return _lower_dx(i + 1, j).scale(2)


# monomial lists: [(Fraction coef, i, j), ...]

def _quadratic(c2, c11, c02):
    return [(Fraction(c2), 2, 0), (Fraction(c11), 1, 1), (Fraction(c02), 0, 2)]


def _mono_mul(ma, mb):
    return [(ca * cb, ia + ib, ja + jb) for ca, ia, ja in ma for cb, ib, jb in mb]


def _one_form_integral(g_monos, f_monos, dx_fn, dy_fn):
    """int (g dx - f dy) along the chosen parabola."""
    out = RPoly()
    for c, i, j in g_monos:
        out = out + dx_fn(i, j).scale(c)
    for c, i, j in f_monos:
        out = out - dy_fn(i, j).scale(c)
    return out


@dataclass(frozen=True)
class QuadraticCoefficients:
    """The 24 real constants of the quadratic perturbation family:
    f1+ = a x^2 + b xy + c y^2,   g1+ = d x^2 + e xy + f y^2,
    f1- = p x^2 + q xy + s y^2,   g1- = l x^2 + m xy + n y^2,
    f2+ = A x^2 + B xy + C y^2,   g2+ = D x^2 + E xy + F y^2,
    f2- = P x^2 + Q xy + S y^2,   g2- = L x^2 + M xy + N y^2.
    """
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0
    e: float = 0.0
    f: float = 0.0
    p: float = 0.0
    q: float = 0.0
    s: float = 0.0
    l: float = 0.0
    m: float = 0.0
    n: float = 0.0
    A: float = 0.0
    B: float = 0.0
    C: float = 0.0
    D: float = 0.0
    E: float = 0.0
    F: float = 0.0
    P: float = 0.0
    Q: float = 0.0
    S: float = 0.0
    L: float = 0.0
    M: float = 0.0
    N: float = 0.0


def center_center_m1(co: QuadraticCoefficients):
    """Exact first-order Melnikov polynomial in r for the quadratic family.

    For the center-center normal form every ratio H_x-(P)/H_x+(P) etc.
    equals 1, so M1 is the plain sum of the two half-orbit integrals of
    the first-order one-forms.
    """
    f1p = _quadratic(co.a, co.b, co.c)
    g1p = _quadratic(co.d, co.e, co.f)
    f1m = _quadratic(co.p, co.q, co.s)
    g1m = _quadratic(co.l, co.m, co.n)
    up = _one_form_integral(g1p, f1p, _upper_dx, _upper_dy)
    lo = _one_form_integral(g1m, f1m, _lower_dx, _lower_dy)
    return up + lo


def center_center_m2(co: QuadraticCoefficients):
    """Exact second-order Melnikov polynomial in r for the quadratic family.

    Assembles the same terms as the quadrature path: second-order one-form
    integrals, the K-factor boundary terms, the f1*omega1/H_y corrections
    and the sigma^2 curvature term.  H_y is the constant -1 (upper) / +1
    (lower), so the divided forms reduce to scalings, and H_xx = -2 in both
    zones makes the sigma^2 term vanish identically.
    """
    f1p = _quadratic(co.a, co.b, co.c)
    g1p = _quadratic(co.d, co.e, co.f)
    f1m = _quadratic(co.p, co.q, co.s)
    g1m = _quadratic(co.l, co.m, co.n)
    f2p = _quadratic(co.A, co.B, co.C)
    g2p = _quadratic(co.D, co.E, co.F)
    f2m = _quadratic(co.P, co.Q, co.S)
    g2m = _quadratic(co.L, co.M, co.N)

    i2 = (_one_form_integral(g2p, f2p, _upper_dx, _upper_dy)
          + _one_form_integral(g2m, f2m, _lower_dx, _lower_dy))

    # omega1/H_y with H_y+ = -1, H_y- = +1
    j_up = _one_form_integral(g1p, f1p, _upper_dx, _upper_dy).scale(-1)
    j_lo = _one_form_integral(g1m, f1m, _lower_dx, _lower_dy)

    # K(P) = f1(P) + H_y g1(P) / H_x(P) with H_x(P) = -2r at P = (r, 0)
    a, d = Fraction(co.a), Fraction(co.d)
    p_, l_ = Fraction(co.p), Fraction(co.l)
    k_up = RPoly({2: a, 1: d / 2})
    k_lo = RPoly({2: p_, 1: -l_ / 2})

    # f1 * omega1 / H_y
    f_up = _one_form_integral(_mono_mul(f1p, g1p), _mono_mul(f1p, f1p),
                              _upper_dx, _upper_dy).scale(-1)
    f_lo = _one_form_integral(_mono_mul(f1m, g1m), _mono_mul(f1m, f1m),
                              _lower_dx, _lower_dy)

    # sigma = (1/H_x+(P1)) int omega1+ with H_x+(P1) = 2r
    i1_up = _one_form_integral(g1p, f1p, _upper_dx, _upper_dy)
    sigma = i1_up.shift_down(1).scale(Fraction(1, 2))
    # (1/2)(H_xx-(P1) - H_xx+(P1)) = 0 for this preset; kept for clarity
    sigma_term = (sigma * sigma).scale(Fraction(0))

    return i2 + (k_lo * j_lo) + (k_up * j_up) - (f_lo + f_up) + sigma_term


def paper_m1(co: QuadraticCoefficients):
    """The printed first-order polynomial, emitted for comparison only."""
    c5 = Fraction(8, 15) * (4 * Fraction(co.b) - 7 * Fraction(co.f)
                            + 7 * Fraction(co.n) - 4 * Fraction(co.q))
    c3 = Fraction(2, 3) * (Fraction(co.l) - Fraction(co.d))
    return RPoly({5: c5, 3: c3})


def paper_m2_prime(co: QuadraticCoefficients):
    """The printed reduced second-order polynomial in h = r^2, for comparison."""
    a, b, c, d, e, f = (Fraction(v) for v in (co.a, co.b, co.c, co.d, co.e, co.f))
    p, q, s, l, m, n = (Fraction(v) for v in (co.p, co.q, co.s, co.l, co.m, co.n))
    B, F, N, Q = (Fraction(v) for v in (co.B, co.F, co.N, co.Q))
    D, L = Fraction(co.D), Fraction(co.L)
    h3 = Fraction(32, 315) * (-29 * (7 * f - 4 * b) * (s + c) + 120 * (s * n + c * f))
    h2 = (Fraction(8, 15) * (7 * f - 4 * b) * (p + a)
          - Fraction(184, 105) * (d * (s + c) + q * m + n * p + a * f + b * e)
          + Fraction(96, 35) * (p * q + a * b))
    h1 = Fraction(4, 15) * (14 * (N - F) + 8 * (B - Q) + d * (p + a))
    h0 = Fraction(2, 3) * (L - D)
    return RPoly({3: h3, 2: h2, 1: h1, 0: h0})


def _poly_divmod(num, den):
    num = dict(num.coeffs)
    dd = den.coeffs
    dmax = max(dd)
    lead = dd[dmax]
    quo = {}
    while num and max(num) >= dmax:
        k = max(num)
        c = num[k] / lead
        quo[k - dmax] = c
        for j, v in dd.items():
            t = k - dmax + j
            num[t] = num.get(t, Fraction(0)) - c * v
            if num[t] == 0:
                del num[t]
    return RPoly(quo), RPoly(num)


def _derivative(p):
    return RPoly({k - 1: v * k for k, v in p.coeffs.items() if k >= 1})


def _sign_changes(values):
    signs = [1 if v > 0 else -1 for v in values if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def sturm_root_count(p: RPoly, a, b):
    """Number of distinct real roots of p in (a, b], by exact Sturm chains.

    a and b must not be roots of p (guaranteed here by the callers, who
    use open windows with non-root endpoints).
    """
    a, b = Fraction(a), Fraction(b)
    chain = [p, _derivative(p)]
    while not chain[-1].is_zero and max(chain[-1].coeffs) > 0:
        _, rem = _poly_divmod(chain[-2], chain[-1])
        chain.append(rem.scale(-1))
        if chain[-1].is_zero:
            chain.pop()
            break
    if chain[-1].is_zero:
        chain.pop()

    def exact_eval(q, x):
        return sum(v * x ** k for k, v in q.coeffs.items())

    va = [exact_eval(q, a) for q in chain]
    vb = [exact_eval(q, b) for q in chain]
    return _sign_changes(va) - _sign_changes(vb)


def condition_residuals(co: QuadraticCoefficients):
    """Residuals of the printed M1-vanishing conditions (Eq-style combos)."""
    r1 = 4 * co.b - 7 * co.f + 7 * co.n - 4 * co.q
    r2 = co.d - co.l
    return (float(r1), float(r2))
