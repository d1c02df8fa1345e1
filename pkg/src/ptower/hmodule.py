"""Finite abelian p-groups carrying an automorphism of p-power order.

A module is presented as a direct sum of cyclic factors Z/p^(e_i) with
exponents sorted descending, plus the matrix of the generator action
(columns are images of basis generators). Elements are integer tuples,
component i reduced mod p^(e_i).

Every structural question -- membership, quotient invariants, induced
presentations -- reduces to one Smith form over Z/p^(e_1), because any
relation lattice here contains p^(e_1) Z^r.
"""

from collections import deque
from dataclasses import dataclass

from .errors import (
    NotAutomorphism,
    OrderNotPPower,
    ParameterMismatch,
    WellDefinednessViolation,
)
from .iwasawa import DistinguishedPoly, LambdaElement
from .padic import ModMatrix, RingParams, smith_form


@dataclass(frozen=True)
class AbelianType:
    """Isomorphism type of a finite abelian p-group: descending exponents.

    The trivial group is the empty tuple; the order is p to the sum.
    """

    exponents: tuple

    def __post_init__(self):
        exps = tuple(self.exponents)
        if any(e < 1 for e in exps) or list(exps) != sorted(exps, reverse=True):
            raise ValueError(f"exponents must be descending and >= 1: {exps}")
        object.__setattr__(self, "exponents", exps)

    @classmethod
    def from_invariants(cls, exps) -> "AbelianType":
        return cls(tuple(sorted((e for e in exps if e >= 1), reverse=True)))

    @property
    def order_exponent(self) -> int:
        return sum(self.exponents)

    @property
    def is_trivial(self) -> bool:
        return not self.exponents

    def rank_pi(self, i: int) -> int:
        """Number of cyclic factors of order at least p^i (the p^i-rank)."""
        if i < 1:
            raise ValueError("rank index must be >= 1")
        return sum(1 for e in self.exponents if e >= i)

    def mod_pk(self, k: int) -> "AbelianType":
        """Type of A / p^k A."""
        return AbelianType.from_invariants(min(e, k) for e in self.exponents)


def rank_pi(t: AbelianType, i: int) -> int:
    return t.rank_pi(i)


def _int_mat_mul(a, b, mod):
    bt = list(zip(*b))
    return tuple(
        tuple(sum(x * y for x, y in zip(row, col)) % mod for col in bt)
        for row in a)


def _int_mat_pow(a, k, mod):
    n = len(a)
    out = tuple(tuple(int(i == j) for j in range(n)) for i in range(n))
    while k:
        if k & 1:
            out = _int_mat_mul(out, a, mod)
        k >>= 1
        if k:
            a = _int_mat_mul(a, a, mod)
    return out


class FiniteHModule:
    """X = (+) Z/p^(e_i) together with the action sigma of the generator h."""

    def __init__(self, p: int, exponents, sigma, k_max: int | None = None):
        exponents = tuple(exponents)
        if any(e < 1 for e in exponents):
            raise ValueError("cyclic exponents must be >= 1")
        if list(exponents) != sorted(exponents, reverse=True):
            raise ValueError("exponents must be sorted descending")
        r = len(exponents)
        self.p = p
        self.exponents = exponents
        self.rank = r
        self.level_params = RingParams(p, exponents[0] if r else 1)
        self.modulus = self.level_params.modulus
        self.emods = tuple(p ** e for e in exponents)
        self.total_exponent = sum(exponents)

        self._relation_rows = tuple(
            tuple(self.emods[i] if i == j else 0 for j in range(r))
            for i in range(r))

        rows = [tuple(x % self.modulus for x in row) for row in sigma]
        if len(rows) != r or any(len(row) != r for row in rows):
            raise ValueError(f"sigma must be {r}x{r}")
        self.sigma = tuple(rows)

        self._check_well_defined(self.sigma)
        if not self._is_surjective(self.sigma):
            raise NotAutomorphism("sigma does not generate the module")
        self.order_exponent = self._p_power_order(k_max)
        self._omega_cache = {0: self._identity_matrix()}

    # -- presentation helpers -------------------------------------------

    def _identity_matrix(self):
        r = self.rank
        return tuple(tuple(int(i == j) for j in range(r)) for i in range(r))

    def _check_well_defined(self, rows):
        p = self.p
        for i in range(self.rank):
            for j in range(self.rank):
                need = max(0, self.exponents[i] - self.exponents[j])
                if rows[i][j] % (p ** need):
                    raise WellDefinednessViolation(
                        f"entry ({i},{j}) = {rows[i][j]} must be divisible "
                        f"by {p}^{need}")

    def _is_surjective(self, rows) -> bool:
        images = [tuple(rows[i][j] for i in range(self.rank))
                  for j in range(self.rank)]
        exps = stacked_invariants(self, images)
        return all(e == 0 for e in exps)

    def _p_power_order(self, k_max) -> int:
        if k_max is None:
            t = 0
            while self.p ** t < max(self.rank, 1):
                t += 1
            k_max = (self.exponents[0] if self.rank else 0) + t + 2
        s = self.sigma
        for k in range(k_max + 1):
            if self.endo_is_identity(s):
                return k
            s = _int_mat_pow(s, self.p, self.modulus)
        raise OrderNotPPower(
            f"sigma^(p^{k_max}) is not the identity; not a p-power order")

    def check_action_matrix(self, rows) -> tuple:
        """Validate an auxiliary automorphism of the underlying group."""
        rows = tuple(tuple(x % self.modulus for x in row) for row in rows)
        if len(rows) != self.rank or any(len(r) != self.rank for r in rows):
            raise ValueError(f"action matrix must be {self.rank}x{self.rank}")
        self._check_well_defined(rows)
        if not self._is_surjective(rows):
            raise NotAutomorphism("action matrix is not an automorphism")
        return rows

    def __eq__(self, other):
        return (isinstance(other, FiniteHModule)
                and self.p == other.p
                and self.exponents == other.exponents
                and self.sigma == other.sigma)

    def __hash__(self):
        return hash((self.p, self.exponents, self.sigma))

    def __repr__(self):
        return (f"FiniteHModule(p={self.p}, exponents={list(self.exponents)}, "
                f"order_exponent={self.order_exponent})")

    # -- elements --------------------------------------------------------

    def normalize(self, vec) -> tuple:
        if len(vec) != self.rank:
            raise ValueError(f"element needs {self.rank} coordinates")
        return tuple(x % m for x, m in zip(vec, self.emods))

    def zero(self) -> tuple:
        return (0,) * self.rank

    def basis(self) -> list:
        return [tuple(int(i == j) for j in range(self.rank))
                for i in range(self.rank)]

    def add(self, x, y) -> tuple:
        return tuple((a + b) % m for a, b, m in zip(x, y, self.emods))

    def sub(self, x, y) -> tuple:
        return tuple((a - b) % m for a, b, m in zip(x, y, self.emods))

    def scale(self, c, x) -> tuple:
        return tuple(c * a % m for a, m in zip(x, self.emods))

    def apply_matrix(self, rows, x) -> tuple:
        return tuple(
            sum(row[j] * x[j] for j in range(self.rank)) % self.emods[i]
            for i, row in enumerate(rows))

    def apply_sigma(self, x) -> tuple:
        return self.apply_matrix(self.sigma, x)

    def endo_equal(self, a, b) -> bool:
        """Matrices induce the same endomorphism: rows agree mod p^(e_i)."""
        return all(
            (a[i][j] - b[i][j]) % self.emods[i] == 0
            for i in range(self.rank) for j in range(self.rank))

    def endo_is_identity(self, rows) -> bool:
        return all(
            (rows[i][j] - int(i == j)) % self.emods[i] == 0
            for i in range(self.rank) for j in range(self.rank))

    def enumerate_elements(self):
        """All |X| elements; callers must keep the module small."""
        def rec(i):
            if i == self.rank:
                yield ()
                return
            for rest in rec(i + 1):
                for a in range(self.emods[i]):
                    yield (a,) + rest
        return rec(0)

    # -- the h-action as Lambda-module structure -------------------------

    def omega_matrix(self, n: int) -> tuple:
        """The endomorphism by which omega_n acts: sum of sigma^j, j < p^n.

        Computed as the product over levels m < n of the p-term power
        sums of sigma^(p^m). Once p^m reaches the order of sigma each
        remaining factor is multiplication by p, so high levels collapse
        to a scalar and never require expanding huge sums.
        """
        if n < 0:
            raise ValueError("level must be >= 0")
        cached = self._omega_cache.get(n)
        if cached is not None:
            return cached
        k = self.order_exponent
        if n > k:
            scalar = pow(self.p, n - k, self.modulus)
            base = self.omega_matrix(k)
            result = tuple(tuple(scalar * x % self.modulus for x in row)
                           for row in base)
        else:
            prev = self.omega_matrix(n - 1)
            s = _int_mat_pow(self.sigma, self.p ** (n - 1), self.modulus)
            factor = self._identity_matrix()
            power = self._identity_matrix()
            for _ in range(self.p - 1):
                power = _int_mat_mul(power, s, self.modulus)
                factor = tuple(
                    tuple((a + b) % self.modulus for a, b in zip(ra, rb))
                    for ra, rb in zip(factor, power))
            result = _int_mat_mul(factor, prev, self.modulus)
        self._omega_cache[n] = result
        return result

    def lambda_act(self, f, x) -> tuple:
        """Evaluate f at the endomorphism sigma - 1 and apply to x.

        Coefficients act through their canonical integer lifts; T acts
        as sigma - 1 (Horner evaluation, one sigma application per
        coefficient).
        """
        if isinstance(f, DistinguishedPoly):
            f = f.poly
        if not isinstance(f, LambdaElement):
            raise TypeError(f"expected LambdaElement, got {type(f)}")
        if f.params.p != self.p:
            raise ParameterMismatch(
                f"polynomial over p={f.params.p}, module over p={self.p}")
        x = self.normalize(x)
        y = self.zero()
        for c in reversed(f.coeffs):
            sy = self.apply_sigma(y)
            y = tuple((s - a + c * b) % m
                      for s, a, b, m in zip(sy, y, x, self.emods))
        return y


def make_module(p: int, exponents, sigma, k_max: int | None = None) -> FiniteHModule:
    """Validated constructor; see FiniteHModule."""
    return FiniteHModule(p, exponents, sigma, k_max=k_max)


def _stacked_smith(module: FiniteHModule, gen_rows):
    rows = [list(g) for g in gen_rows]
    rows.extend(list(r) for r in module._relation_rows)
    return smith_form(ModMatrix(module.level_params, rows))


def stacked_invariants(module: FiniteHModule, gen_rows) -> tuple:
    """Invariant-factor valuations of X / <gen_rows> (relations included)."""
    return _stacked_smith(module, gen_rows).exponents


def _smith_member(module, sm, x) -> bool:
    if module.rank == 0:
        return True
    v = sm.v._data
    mod = module.modulus
    val = module.level_params.valuation_of
    exps = sm.exponents
    r = module.rank
    for j in range(r):
        w = sum(x[i] * v[i][j] for i in range(r)) % mod
        if val(w) < exps[j]:
            return False
    return True


class Submodule:
    """An h-stable subgroup, stored as a saturated generating set plus the
    Smith data of its stacked relation matrix (used for membership)."""

    __slots__ = ("parent", "gens", "_sm", "_quotient")

    def __init__(self, parent: FiniteHModule, gens: tuple, sm):
        self.parent = parent
        self.gens = gens
        self._sm = sm
        self._quotient = AbelianType.from_invariants(sm.exponents)

    def contains(self, x) -> bool:
        return _smith_member(self.parent, self._sm, self.parent.normalize(x))

    @property
    def quotient(self) -> AbelianType:
        """Type of parent / self."""
        return self._quotient

    @property
    def order_exponent(self) -> int:
        return self.parent.total_exponent - self._quotient.order_exponent

    @property
    def is_zero(self) -> bool:
        return not self.gens

    def __eq__(self, other):
        if not isinstance(other, Submodule) or self.parent != other.parent:
            return False
        return (all(other.contains(g) for g in self.gens)
                and all(self.contains(g) for g in other.gens))

    def __hash__(self):
        raise TypeError("Submodule is unhashable; compare by inclusion")

    def __add__(self, other):
        return sum_submodules(self, other)

    def __repr__(self):
        return (f"Submodule(order=p^{self.order_exponent}, "
                f"gens={len(self.gens)})")


def span(module: FiniteHModule, gens) -> Submodule:
    """Smallest sigma-stable subgroup containing the given elements.

    Saturates by queueing the sigma-image of every accepted generator;
    each acceptance strictly grows the subgroup, so the loop adds at
    most log_p |X| rows.
    """
    rows = []
    sm = _stacked_smith(module, rows)
    pending = deque(module.normalize(g) for g in gens)
    while pending:
        g = pending.popleft()
        if _smith_member(module, sm, g):
            continue
        rows.append(g)
        sm = _stacked_smith(module, rows)
        pending.append(module.apply_sigma(g))
    return Submodule(module, tuple(rows), sm)


def quotient_type(module: FiniteHModule, sub: Submodule) -> AbelianType:
    """Canonical abelian invariants of X / S."""
    if sub.parent != module:
        raise ParameterMismatch("submodule of a different module")
    return sub.quotient


def sum_submodules(a: Submodule, b: Submodule) -> Submodule:
    if a.parent != b.parent:
        raise ParameterMismatch("sum of submodules of different modules")
    return span(a.parent, a.gens + b.gens)


def scale_submodule(f, s: Submodule) -> Submodule:
    """The image f(sigma - 1) S, again an h-stable subgroup."""
    m = s.parent
    return span(m, [m.lambda_act(f, g) for g in s.gens])


def quotient_module(module: FiniteHModule, sub: Submodule):
    """Present X / S as a new module with the induced sigma.

    Returns (quotient, projection). The change of basis comes from the
    column transform of the stacked Smith form: x maps to the
    coordinates of x * V in the new cyclic factors.
    """
    sm = sub._sm
    exps = sm.exponents
    keep = sorted(((d, j) for j, d in enumerate(exps) if d >= 1),
                  key=lambda t: (-t[0], t[1]))
    new_exps = [d for d, _ in keep]
    v = sm.v._data
    vinv = sm.v_inv._data
    r = module.rank
    mod = module.modulus

    def proj(x):
        x = module.normalize(x)
        w = [sum(x[i] * v[i][j] for i in range(r)) % mod for j in range(r)]
        return tuple(w[j] % (module.p ** d) for d, j in keep)

    new_sigma_cols = []
    for _, j in keep:
        rep = module.normalize(vinv[j])
        new_sigma_cols.append(proj(module.apply_sigma(rep)))
    new_sigma = [[col[i] for col in new_sigma_cols]
                 for i in range(len(keep))]
    quotient = FiniteHModule(module.p, new_exps, new_sigma)
    return quotient, proj
