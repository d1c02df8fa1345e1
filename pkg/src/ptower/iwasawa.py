"""Polynomial arithmetic in the Iwasawa algebra at finite precision.

The cyclic pro-p group generator h is identified with 1 + T, embedding
the completed group ring into Z_p[[T]]. Every element this library
manipulates -- the omega elements, distinguished polynomials, their
products and quotients -- is an honest polynomial, so elements are
stored as exact coefficient vectors mod p^N with no T-truncation.
Only Weierstrass units are T-truncated, at a caller-chosen degree.

Convention note: ``omega(params, n)`` is the quotient
(h^(p^n) - 1)/(h - 1), a distinguished polynomial of degree p^n - 1
with constant term p^n. Many references instead call
(1 + T)^(p^n) - 1 = T * omega_n the n-th omega element; this library
does not offer that convention.
"""

import math
import os
from dataclasses import dataclass

from .errors import (
    InfiniteQuotientError,
    ParameterMismatch,
    PrecisionExhausted,
)
from .padic import ModMatrix, ModularInt, RingParams, smith_form

_DEGREE_CAP = 1_000_000
_DEFAULT_MAX_PRECISION = 128
_GCD_PRIMES = (2305843009213693951, 1000000000000000009)


class LambdaElement:
    """A polynomial in T with coefficients in Z/p^N, low degree first.

    Trailing zero coefficients are trimmed, so the stored leading
    coefficient of a nonzero element is nonzero mod p^N.
    """

    __slots__ = ("params", "coeffs")

    def __init__(self, params: RingParams, coeffs):
        mod = params.modulus
        c = [x % mod for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "coeffs", tuple(c))

    def __setattr__(self, name, val):
        raise AttributeError("LambdaElement is immutable")

    @classmethod
    def zero(cls, params: RingParams) -> "LambdaElement":
        return cls(params, ())

    @classmethod
    def constant(cls, params: RingParams, c: int) -> "LambdaElement":
        return cls(params, (c,))

    @property
    def degree(self) -> int:
        """Degree of the stored polynomial; -1 for the zero element."""
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, i: int) -> ModularInt:
        c = self.coeffs[i] if 0 <= i < len(self.coeffs) else 0
        return ModularInt(c, self.params)

    def lifted_coeffs(self) -> tuple:
        """Canonical integer lifts in [0, p^N), low degree first."""
        return self.coeffs

    def _check(self, other) -> "LambdaElement":
        if isinstance(other, DistinguishedPoly):
            other = other.poly
        if not isinstance(other, LambdaElement):
            raise TypeError(f"expected LambdaElement, got {type(other)}")
        if other.params != self.params:
            raise ParameterMismatch(
                f"mixed rings: {self.params} vs {other.params}")
        return other

    def __add__(self, other):
        other = self._check(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a, b = self.coeffs, other.coeffs
        return LambdaElement(self.params, [
            (a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0)
            for i in range(n)
        ])

    def __neg__(self):
        return LambdaElement(self.params, [-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-self._check(other))

    def __mul__(self, other):
        other = self._check(other)
        if self.is_zero or other.is_zero:
            return LambdaElement.zero(self.params)
        mod = self.params.modulus
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return LambdaElement(self.params, [c % mod for c in out])

    def __eq__(self, other):
        if isinstance(other, DistinguishedPoly):
            other = other.poly
        return (isinstance(other, LambdaElement)
                and self.params == other.params
                and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((self.params, self.coeffs))

    def __repr__(self):
        return f"LambdaElement({_format_poly(self.coeffs)})"


class DistinguishedPoly:
    """A monic polynomial whose lower coefficients are all divisible by p."""

    __slots__ = ("poly",)

    def __init__(self, poly: LambdaElement):
        if poly.is_zero or poly.coeffs[-1] != 1:
            raise ValueError("distinguished polynomial must be monic")
        params = poly.params
        for c in poly.coeffs[:-1]:
            if params.valuation_of(c) < 1:
                raise ValueError(
                    "lower coefficient of a distinguished polynomial "
                    f"must be divisible by {params.p}: {_format_poly(poly.coeffs)}")
        object.__setattr__(self, "poly", poly)

    def __setattr__(self, name, val):
        raise AttributeError("DistinguishedPoly is immutable")

    @property
    def params(self) -> RingParams:
        return self.poly.params

    @property
    def degree(self) -> int:
        return self.poly.degree

    @property
    def coeffs(self) -> tuple:
        return self.poly.coeffs

    def __mul__(self, other):
        if isinstance(other, DistinguishedPoly):
            other = other.poly
        return self.poly * other

    def __eq__(self, other):
        if isinstance(other, DistinguishedPoly):
            other = other.poly
        return self.poly == other

    def __hash__(self):
        return hash(self.poly)

    def __repr__(self):
        return f"DistinguishedPoly({_format_poly(self.poly.coeffs)})"


@dataclass(frozen=True)
class WeierstrassData:
    """Factorization f = p^mu * unit * distinguished mod (p^N, T^(trunc+1)).

    The unit is truncated at T-degree `truncation`; the distinguished
    part is an exact polynomial. mu and lam agree with `mu_lambda` on
    the input.
    """

    mu: int
    lam: int
    distinguished: DistinguishedPoly
    unit: LambdaElement
    truncation: int

    def recombined(self) -> LambdaElement:
        """p^mu * unit * distinguished, truncated at the unit's degree."""
        params = self.unit.params
        prod = self.unit * self.distinguished.poly
        pmu = params.p ** self.mu
        coeffs = [pmu * c for c in prod.coeffs[: self.truncation + 1]]
        return LambdaElement(params, coeffs)


def _format_poly(coeffs) -> str:
    if not coeffs:
        return "0"
    terms = []
    for i in range(len(coeffs) - 1, -1, -1):
        c = coeffs[i]
        if not c:
            continue
        if i == 0:
            terms.append(str(c))
        elif i == 1:
            terms.append("T" if c == 1 else f"{c}*T")
        else:
            terms.append(f"T^{i}" if c == 1 else f"{c}*T^{i}")
    return " + ".join(terms)


def omega(params: RingParams, n: int) -> DistinguishedPoly:
    """The degree p^n - 1 element sum_{k=1}^{p^n} C(p^n, k) T^(k-1).

    Equivalently ((1+T)^(p^n) - 1)/T: distinguished, with constant term
    congruent to p^n.
    """
    if n < 0:
        raise ValueError("level n must be >= 0")
    q = params.p ** n
    if q > _DEGREE_CAP:
        raise ValueError(f"omega({n}) would have degree {q - 1}; refusing")
    mod = params.modulus
    coeffs = [math.comb(q, k) % mod for k in range(1, q + 1)]
    return DistinguishedPoly(LambdaElement(params, coeffs))


def divmod_distinguished(f, P) -> tuple:
    """Division with remainder by a monic polynomial, exact mod p^N."""
    if isinstance(f, DistinguishedPoly):
        f = f.poly
    if isinstance(P, DistinguishedPoly):
        P = P.poly
    if P.is_zero or P.coeffs[-1] != 1:
        raise ValueError("divisor must be monic")
    if P.params != f.params:
        raise ParameterMismatch("divmod over mixed rings")
    params = f.params
    mod = params.modulus
    dp = P.degree
    r = list(f.coeffs)
    if len(r) <= dp:
        return LambdaElement.zero(params), f
    q = [0] * (len(r) - dp)
    pc = P.coeffs
    for k in range(len(r) - 1, dp - 1, -1):
        c = r[k]
        if c:
            q[k - dp] = c
            for i in range(dp + 1):
                r[k - dp + i] = (r[k - dp + i] - c * pc[i]) % mod
    return LambdaElement(params, q), LambdaElement(params, r[:dp])


def mu_lambda(f) -> tuple:
    """(min coefficient valuation, first index achieving it).

    These are the mu and lambda invariants of the cyclic quotient by f.
    Raises PrecisionExhausted on the zero polynomial: its invariants are
    not visible at this precision.
    """
    if isinstance(f, DistinguishedPoly):
        f = f.poly
    if f.is_zero:
        raise PrecisionExhausted(
            "polynomial is 0 mod p^N; invariants need higher precision")
    val = f.params.valuation_of
    vals = [val(c) for c in f.coeffs]
    mu = min(vals)
    return mu, vals.index(mu)


def _poly_mul_trunc(a, b, length, mod):
    out = [0] * min(length, max(len(a) + len(b) - 1, 0))
    for i, x in enumerate(a):
        if x and i < length:
            top = min(len(b), length - i)
            for j in range(top):
                out[i + j] += x * b[j]
    return [c % mod for c in out]


def _series_inverse(c, mod, trunc):
    """Inverse of a unit power series mod (p^N, T^(trunc+1))."""
    inv0 = pow(c[0], -1, mod)
    out = [inv0] + [0] * trunc
    for k in range(1, trunc + 1):
        s = 0
        for i in range(1, min(k, len(c) - 1) + 1):
            s += c[i] * out[k - i]
        out[k] = (-inv0 * s) % mod
    return out


def _hensel_factor(g, lam, p, n_red):
    """Split the polynomial g as P * U mod p^n_red with P monic of
    degree lam and P = T^lam mod p.

    Linear Hensel lifting of the coprime factorization
    g = T^lam * B0 mod p: at each step the correction splits uniquely
    into (delta P) * B0 + (delta U) * T^lam because B0(0) is a unit.
    Both factors stay polynomials of bounded degree, so there is no
    truncation feedback anywhere.
    """
    mod = p ** n_red
    u0 = [c % p for c in g[lam:]]
    u0inv = _series_inverse(u0, p, lam - 1) if lam else []
    big_p = [0] * lam + [1]
    big_u = list(u0)
    pk = p
    for _ in range(n_red - 1):
        prod = _poly_mul_trunc(big_p, big_u, len(g), mod)
        prod += [0] * (len(g) - len(prod))
        err = [((gc - pc) % mod) // pk for gc, pc in zip(g, prod)]
        dp = _poly_mul_trunc(err, u0inv, lam, p) if lam else []
        rest = [c % p for c in err]
        rest += [0] * (lam + len(u0) - len(rest))
        for i, c in enumerate(dp):
            if c:
                for j, u in enumerate(u0):
                    rest[i + j] = (rest[i + j] - c * u) % p
        du = rest[lam:]
        for i, c in enumerate(dp):
            if c:
                big_p[i] = (big_p[i] + pk * c) % mod
        for i, c in enumerate(du):
            if c:
                if i >= len(big_u):
                    big_u += [0] * (i - len(big_u) + 1)
                big_u[i] = (big_u[i] + pk * c) % mod
        pk *= p
    return big_p, big_u


def weierstrass_prepare(f: LambdaElement, trunc: int) -> WeierstrassData:
    """Factor f as p^mu * unit * distinguished mod (p^N, T^(trunc+1)).

    After p^mu is divided out, the factorization is Hensel-lifted from
    its mod-p seed T^lam * B0 at precision N - mu; since f is a
    polynomial the unit comes out as an exact polynomial too, stored
    truncated at the requested degree. Recombining the three factors
    reproduces f mod (p^N, T^(trunc+1)).
    """
    if trunc < 0:
        raise ValueError("truncation degree must be >= 0")
    params = f.params
    mu, lam = mu_lambda(f)
    n_red = params.N - mu
    mod_red = params.p ** n_red
    pmu = params.p ** mu
    g = [(c // pmu) % mod_red for c in f.coeffs]
    dist, unit = _hensel_factor(g, lam, params.p, n_red)
    return WeierstrassData(
        mu=mu,
        lam=lam,
        distinguished=DistinguishedPoly(LambdaElement(params, dist)),
        unit=LambdaElement(params, unit[: trunc + 1]),
        truncation=trunc,
    )


def _max_precision_ceiling(requested, base_n):
    if requested is not None:
        return max(requested, base_n)
    env = os.environ.get("TOWER_MAX_PRECISION")
    if env:
        return max(int(env), base_n)
    return max(_DEFAULT_MAX_PRECISION, base_n)


def _int_poly_pow(coeffs, k):
    out = [1]
    base = list(coeffs)
    while k:
        if k & 1:
            out = _int_poly_mul(out, base)
        k >>= 1
        if k:
            base = _int_poly_mul(base, base)
    return out


def _int_poly_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _poly_gcd_degree_mod(a, b, ell):
    """Degree of gcd(a, b) over F_ell; both inputs monic over Z."""

    def trim(x):
        while x and x[-1] == 0:
            x.pop()

    a = [c % ell for c in a]
    b = [c % ell for c in b]
    trim(a)
    trim(b)
    while b:
        inv = pow(b[-1], -1, ell)
        db = len(b) - 1
        while a and len(a) - 1 >= db:
            c = a[-1] * inv % ell
            shift = len(a) - 1 - db
            for i in range(db + 1):
                a[shift + i] = (a[shift + i] - c * b[i]) % ell
            trim(a)
        a, b = b, a
    return len(a) - 1


def _shares_omega_factor(int_coeffs, p, n):
    """Modular-gcd heuristic: do the integer lifts share a factor with omega_n?

    Sound in the negative direction (gcd constant mod ell bounds the
    rational gcd for monic inputs); a shared factor is reported only
    when two independent large primes agree.
    """
    q = p ** n
    if q > 4096:
        return False
    om = [math.comb(q, k) for k in range(1, q + 1)]
    lifted = list(int_coeffs)
    for ell in _GCD_PRIMES:
        if _poly_gcd_degree_mod(lifted, om, ell) < 1:
            return False
    return True


def _companion_rows(int_coeffs, mod):
    lam = len(int_coeffs) - 1
    rows = [[0] * lam for _ in range(lam)]
    for j in range(lam - 1):
        rows[j + 1][j] = 1
    for i in range(lam):
        rows[i][lam - 1] = (-int_coeffs[i]) % mod
    return rows


def _mat_mul_mod(a, b, mod):
    bt = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col)) % mod for col in bt]
            for row in a]


def _mat_add_mod(a, b, mod):
    return [[(x + y) % mod for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def _mat_pow_mod(a, k, mod):
    n = len(a)
    out = [[int(i == j) for j in range(n)] for i in range(n)]
    while k:
        if k & 1:
            out = _mat_mul_mod(out, a, mod)
        k >>= 1
        if k:
            a = _mat_mul_mod(a, a, mod)
    return out


def _omega_of_companion(m_rows, p, n, mod):
    """omega_n evaluated at T = M: the product over levels of the p-term
    power sums of sigma = 1 + M."""
    lam = len(m_rows)
    ident = [[int(i == j) for j in range(lam)] for i in range(lam)]
    sigma = _mat_add_mod(ident, m_rows, mod)
    result = ident
    s = sigma
    for _ in range(n):
        factor = ident
        power = ident
        for _ in range(p - 1):
            power = _mat_mul_mod(power, s, mod)
            factor = _mat_add_mod(factor, power, mod)
        result = _mat_mul_mod(factor, result, mod)
        s = _mat_pow_mod(s, p, mod)
    return result


def companion_invariants(P: DistinguishedPoly, n: int, *, power: int = 1,
                         max_precision: int | None = None) -> tuple:
    """Invariant-factor valuations of omega_n acting on the cyclic
    quotient by P^power.

    Works on the lam x lam companion matrix of the integer lift of
    P^power, escalating the working precision (doubling, capped by
    `max_precision` or TOWER_MAX_PRECISION) until no invariant factor
    is precision-capped. If the matrix is still identically zero at the
    ceiling the quotient is reported infinite; if it is only partially
    capped the caller must raise the ceiling.
    """
    if P.degree < 1:
        raise ValueError("companion matrix needs degree >= 1")
    if power < 1:
        raise ValueError("power must be >= 1")
    p = P.params.p
    base_n = P.params.N
    int_coeffs = _int_poly_pow(P.poly.coeffs, power)
    ceiling = _max_precision_ceiling(max_precision, base_n)
    prec = base_n
    while True:
        params = RingParams(p, prec)
        mod = params.modulus
        rows = _companion_rows([c % mod for c in int_coeffs], mod)
        w = _omega_of_companion(rows, p, n, mod)
        exps = smith_form(ModMatrix(params, w)).exponents
        if all(e < prec for e in exps):
            return exps
        fully_capped = all(e == prec for e in exps)
        if fully_capped and _shares_omega_factor(int_coeffs, p, n):
            raise InfiniteQuotientError(
                f"omega_{n} vanishes on the quotient by {P!r}^{power}")
        if prec >= ceiling:
            if fully_capped:
                raise InfiniteQuotientError(
                    f"omega_{n} is zero on the quotient by {P!r}^{power} "
                    f"to precision {prec}")
            raise PrecisionExhausted(
                f"quotient order at level {n} needs precision above {prec}; "
                "raise TOWER_MAX_PRECISION")
        prec = min(2 * prec, ceiling)


def companion_order(P: DistinguishedPoly, n: int, *,
                    max_precision: int | None = None) -> int:
    """log_p of the order of the quotient by (P, omega_n).

    This is the valuation of det(omega_n(M_P)) for the companion matrix
    M_P, i.e. the sum of the Smith invariant-factor valuations.
    """
    return sum(companion_invariants(P, n, max_precision=max_precision))
