"""Exact arithmetic and linear algebra over the ring Z/p^N.

Z/p^N is a chain ring: every element factors as unit * p^k with
k in [0, N], and the ideals form the single chain (1) > (p) > ... > (0).
Pivoting on an entry of minimal valuation therefore makes every
elimination quotient exact, which is what lets `smith_form` diagonalize
any matrix over this ring without ever leaving it.

Valuations are capped at N: a reported valuation of N means
"indistinguishable from zero at this precision", never "equal to zero
p-adically".
"""

from dataclasses import dataclass

from .errors import NonUnitError, ParameterMismatch

_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin primality test (exact below 3.3e24)."""
    if n < 2:
        return False
    for q in _MR_WITNESSES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class RingParams:
    """The coefficient ring Z/p^N: a prime p and a precision exponent N."""

    p: int
    N: int

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p = {self.p} is not prime")
        if self.N < 1:
            raise ValueError(f"precision exponent must be >= 1, got {self.N}")

    @property
    def modulus(self) -> int:
        return self.p ** self.N

    def valuation_of(self, value: int) -> int:
        """p-adic valuation of a residue, capped at N; v(0) = N."""
        v = value % self.modulus
        if v == 0:
            return self.N
        p, k = self.p, 0
        while v % p == 0:
            v //= p
            k += 1
        return k


class ModularInt:
    """A canonical residue in [0, p^N) with its ring parameters attached.

    Values are immutable; arithmetic between mixed-precision operands is
    rejected rather than coerced, since silent precision loss is the
    dominant bug class in p-adic code.
    """

    __slots__ = ("value", "params")

    def __init__(self, value: int, params: RingParams):
        object.__setattr__(self, "value", value % params.modulus)
        object.__setattr__(self, "params", params)

    def __setattr__(self, name, val):
        raise AttributeError("ModularInt is immutable")

    def _check(self, other) -> "ModularInt":
        if not isinstance(other, ModularInt):
            other = ModularInt(other, self.params)
        elif other.params != self.params:
            raise ParameterMismatch(
                f"mixed rings: {self.params} vs {other.params}")
        return other

    def __add__(self, other):
        other = self._check(other)
        return ModularInt(self.value + other.value, self.params)

    def __sub__(self, other):
        other = self._check(other)
        return ModularInt(self.value - other.value, self.params)

    def __mul__(self, other):
        other = self._check(other)
        return ModularInt(self.value * other.value, self.params)

    def __neg__(self):
        return ModularInt(-self.value, self.params)

    def __pow__(self, k: int):
        return ModularInt(pow(self.value, k, self.params.modulus), self.params)

    def __eq__(self, other):
        if isinstance(other, int):
            return self.value == other % self.params.modulus
        return (isinstance(other, ModularInt)
                and self.params == other.params
                and self.value == other.value)

    def __hash__(self):
        return hash((self.value, self.params))

    def __repr__(self):
        return f"ModularInt({self.value} mod {self.params.p}^{self.params.N})"

    @property
    def valuation(self) -> int:
        return self.params.valuation_of(self.value)

    def is_unit(self) -> bool:
        return self.value % self.params.p != 0

    def inverse(self) -> "ModularInt":
        """Multiplicative inverse; only units (valuation 0) have one."""
        if not self.is_unit():
            raise NonUnitError(f"{self!r} is divisible by {self.params.p}")
        return ModularInt(pow(self.value, -1, self.params.modulus), self.params)


class ModMatrix:
    """A matrix over Z/p^N, stored row-major as canonical int residues."""

    __slots__ = ("params", "rows", "cols", "_data")

    def __init__(self, params: RingParams, data):
        mod = params.modulus
        rows = [[x % mod for x in row] for row in data]
        ncols = len(rows[0]) if rows else 0
        if any(len(r) != ncols for r in rows):
            raise ValueError("ragged matrix data")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "rows", len(rows))
        object.__setattr__(self, "cols", ncols)
        object.__setattr__(self, "_data", rows)

    def __setattr__(self, name, val):
        raise AttributeError("ModMatrix is immutable")

    @classmethod
    def identity(cls, params: RingParams, n: int) -> "ModMatrix":
        return cls(params, [[int(i == j) for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, params: RingParams, rows: int, cols: int) -> "ModMatrix":
        return cls(params, [[0] * cols for _ in range(rows)])

    def entry(self, i: int, j: int) -> int:
        return self._data[i][j]

    def row(self, i: int) -> tuple:
        return tuple(self._data[i])

    def __getitem__(self, key) -> ModularInt:
        i, j = key
        return ModularInt(self._data[i][j], self.params)

    def __eq__(self, other):
        return (isinstance(other, ModMatrix)
                and self.params == other.params
                and self._data == other._data)

    def __hash__(self):
        return hash((self.params, tuple(tuple(r) for r in self._data)))

    def __repr__(self):
        return f"ModMatrix({self._data} over {self.params.p}^{self.params.N})"

    def __matmul__(self, other: "ModMatrix") -> "ModMatrix":
        if self.params != other.params:
            raise ParameterMismatch("matrix product over mixed rings")
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        mod = self.params.modulus
        bt = list(zip(*other._data)) if other._data else []
        out = [[sum(x * y for x, y in zip(row, col)) % mod for col in bt]
               for row in self._data]
        if not out:
            return ModMatrix.zeros(self.params, self.rows, other.cols)
        return ModMatrix(self.params, out)

    def apply(self, vec) -> tuple:
        """Matrix times column vector, reduced mod p^N."""
        mod = self.params.modulus
        return tuple(sum(x * y for x, y in zip(row, vec)) % mod
                     for row in self._data)


@dataclass(frozen=True)
class SmithDecomposition:
    """u @ m @ v == diagonal, with p-power diagonal in divisibility order.

    `exponents[k]` is the valuation of the k-th diagonal entry; an entry
    equal to N means the invariant factor is zero at this precision.
    `v_inv` is maintained alongside `v` because quotient constructions
    need both change-of-basis directions.
    """

    exponents: tuple
    u: ModMatrix
    v: ModMatrix
    v_inv: ModMatrix
    diagonal: ModMatrix


def smith_form(matrix: ModMatrix) -> SmithDecomposition:
    """Diagonalize over Z/p^N by invertible row and column operations.

    Pivoting picks the entry of minimal valuation in the trailing block,
    ties broken by lowest (row, col); this is deterministic and forces
    the diagonal exponents to come out non-decreasing.
    """
    params = matrix.params
    p, N, mod = params.p, params.N, params.modulus
    nr, nc = matrix.rows, matrix.cols
    a = [row[:] for row in matrix._data]
    u = [[int(i == j) for j in range(nr)] for i in range(nr)]
    v = [[int(i == j) for j in range(nc)] for i in range(nc)]
    vinv = [[int(i == j) for j in range(nc)] for i in range(nc)]
    val = params.valuation_of

    for s in range(min(nr, nc)):
        best, bestv = None, N
        for i in range(s, nr):
            row = a[i]
            for j in range(s, nc):
                x = row[j]
                if x:
                    w = val(x)
                    if w < bestv:
                        best, bestv = (i, j), w
                        if w == 0:
                            break
            if bestv == 0:
                break
        if best is None:
            break
        bi, bj = best
        if bi != s:
            a[s], a[bi] = a[bi], a[s]
            u[s], u[bi] = u[bi], u[s]
        if bj != s:
            for row in a:
                row[s], row[bj] = row[bj], row[s]
            for row in v:
                row[s], row[bj] = row[bj], row[s]
            vinv[s], vinv[bj] = vinv[bj], vinv[s]
        pv = p ** bestv
        unit = a[s][s] // pv
        if unit != 1:
            inv = pow(unit, -1, mod)
            a[s] = [x * inv % mod for x in a[s]]
            u[s] = [x * inv % mod for x in u[s]]
        arow = a[s]
        for i in range(nr):
            if i == s:
                continue
            x = a[i][s]
            if x:
                q = x // pv
                a[i] = [(y - q * z) % mod for y, z in zip(a[i], arow)]
                u[i] = [(y - q * z) % mod for y, z in zip(u[i], u[s])]
        for j in range(nc):
            if j == s:
                continue
            x = a[s][j]
            if x:
                q = x // pv
                for i in range(nr):
                    a[i][j] = (a[i][j] - q * a[i][s]) % mod
                for i in range(nc):
                    v[i][j] = (v[i][j] - q * v[i][s]) % mod
                vinv[s] = [(y + q * z) % mod for y, z in zip(vinv[s], vinv[j])]

    exponents = tuple(val(a[k][k]) for k in range(min(nr, nc)))
    return SmithDecomposition(
        exponents,
        ModMatrix(params, u),
        ModMatrix(params, v),
        ModMatrix(params, vinv),
        ModMatrix(params, a),
    )


def random_invertible(params: RingParams, n: int, rng) -> ModMatrix:
    """A random invertible matrix: unit diagonal times two unipotents."""
    mod = params.modulus
    lower = [[int(i == j) for j in range(n)] for i in range(n)]
    upper = [[int(i == j) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i):
            lower[i][j] = rng.randrange(mod)
            upper[j][i] = rng.randrange(mod)
    units = [x for x in range(1, min(mod, 64)) if x % params.p != 0]
    diag = [[rng.choice(units) if i == j else 0 for j in range(n)]
            for i in range(n)]
    perm = list(range(n))
    rng.shuffle(perm)
    pmat = [[int(perm[i] == j) for j in range(n)] for i in range(n)]
    m = ModMatrix(params, lower) @ ModMatrix(params, diag)
    return m @ ModMatrix(params, upper) @ ModMatrix(params, pmat)
