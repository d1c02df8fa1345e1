"""Layer computation, stabilization checks, and growth fitting for towers.

A TowerInstance is a pair (X-bar, C-bar): a finite module with its
h-action and an h-stable subgroup containing (sigma - 1) X-bar. The
n-th layer of the tower is X-bar / omega_n C-bar. Two facts drive
everything here and are verified, not assumed, on every run:

* omega_(n-1) divides omega_n, so the layers surject onto each other
  and their orders grow monotonically;
* if layers 0 and 1 agree mod p^k, all layers agree mod p^k, with the
  witness C-bar contained in p^k X-bar.
"""

import hashlib
import random
from dataclasses import dataclass

from .errors import (
    LevelOutOfRange,
    NoStableFit,
    TheoremViolation,
    ValidationError,
)
from .hmodule import (
    AbelianType,
    FiniteHModule,
    Submodule,
    span,
)
from .iwasawa import DistinguishedPoly, companion_invariants
from .padic import RingParams


def derived_seed(*parts) -> int:
    """Stable sub-seed derivation: never feed strings to random.Random
    directly, their hash is randomized per process."""
    text = ":".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


class TowerInstance:
    """The data (X-bar, C-bar, tower length d); d None means unbounded."""

    def __init__(self, module: FiniteHModule, c_bar: Submodule,
                 d: int | None = None):
        if c_bar.parent != module:
            raise ValidationError("C-bar must live inside the given module")
        if d is not None and d < 1:
            raise ValidationError("finite tower length must be >= 1")
        for e in module.basis():
            moved = module.sub(module.apply_sigma(e), e)
            if not c_bar.contains(moved):
                raise ValidationError(
                    "(sigma - 1) X-bar must be contained in C-bar")
        for g in c_bar.gens:
            if not c_bar.contains(module.apply_sigma(g)):
                raise ValidationError("C-bar is not h-stable")
        self.module = module
        self.c_bar = c_bar
        self.d = d
        self._scaled = {}

    def __repr__(self):
        return (f"TowerInstance(module={self.module!r}, "
                f"|C|=p^{self.c_bar.order_exponent}, d={self.d})")

    def describe(self) -> dict:
        """Plain-data form, reused by the instance-file serializer."""
        return {
            "kind": "tower",
            "p": self.module.p,
            "exponents": list(self.module.exponents),
            "sigma": [list(row) for row in self.module.sigma],
            "c_bar_generators": [list(g) for g in self.c_bar.gens],
            "d": self.d,
        }

    def scaled_c_bar(self, n: int) -> Submodule:
        """omega_n C-bar."""
        sub = self._scaled.get(n)
        if sub is None:
            m = self.module
            w = m.omega_matrix(n)
            sub = span(m, [m.apply_matrix(w, g) for g in self.c_bar.gens])
            self._scaled[n] = sub
        return sub

    def _check_level(self, n: int):
        if n < 0:
            raise LevelOutOfRange("level must be >= 0")
        if self.d is not None and n > self.d:
            raise LevelOutOfRange(f"level {n} exceeds tower length {self.d}")


def layer(inst: TowerInstance, n: int) -> AbelianType:
    """Isomorphism type of the n-th layer X-bar / omega_n C-bar."""
    inst._check_level(n)
    return inst.scaled_c_bar(n).quotient


@dataclass(frozen=True)
class LayerRecord:
    n: int
    abelian_type: AbelianType
    e: int


@dataclass(frozen=True)
class LayerReport:
    """Layers 0..n_max with the first index from which the type repeats
    to the end of the computed range (None if the tail never settles)."""

    records: tuple
    stabilization_index: int | None

    @property
    def exponent_sequence(self) -> list:
        return [rec.e for rec in self.records]

    @property
    def types(self) -> list:
        return [rec.abelian_type for rec in self.records]


def layer_sequence(inst: TowerInstance, n_max: int) -> LayerReport:
    """All layers up to n_max, with the surjection chain verified.

    For each n the containment omega_n C-bar <= omega_(n-1) C-bar is
    checked generator by generator; it induces the surjection
    A_n -> A_(n-1), so the order exponents must be non-decreasing.
    """
    inst._check_level(n_max)
    records = []
    prev_sub = None
    prev_e = 0
    for n in range(n_max + 1):
        sub = inst.scaled_c_bar(n)
        t = sub.quotient
        if prev_sub is not None:
            if not all(prev_sub.contains(g) for g in sub.gens):
                raise TheoremViolation(
                    f"omega_{n} C-bar is not inside omega_{n - 1} C-bar")
            if t.order_exponent < prev_e:
                raise TheoremViolation(
                    f"layer orders decreased at level {n}")
        records.append(LayerRecord(n, t, t.order_exponent))
        prev_sub, prev_e = sub, t.order_exponent
    types = [rec.abelian_type for rec in records]
    idx = len(types) - 1
    while idx > 0 and types[idx - 1] == types[-1]:
        idx -= 1
    stab = idx if (idx < len(types) - 1 or len(types) == 1) else None
    return LayerReport(tuple(records), stab)


@dataclass(frozen=True)
class StabilizationVerdict:
    """Outcome of one stabilization check.

    conclusion_verified and c_in_pk_x stay None when the hypothesis
    fails (the implication makes no claim there).
    """

    hypothesis_holds: bool
    conclusion_verified: bool | None
    c_in_pk_x: bool | None
    k: object
    n_max: int


def _validate_k(k):
    if k == "full":
        return k
    if isinstance(k, int) and k >= 1:
        return k
    raise ValueError(f'k must be an integer >= 1 or "full", got {k!r}')


def _reduced(t: AbelianType, k) -> AbelianType:
    return t if k == "full" else t.mod_pk(k)


def _c_bar_in_pk(inst: TowerInstance, k) -> bool:
    if k == "full":
        return inst.c_bar.is_zero
    m = inst.module
    return all(
        g[i] % (m.p ** min(k, m.exponents[i])) == 0
        for g in inst.c_bar.gens for i in range(m.rank))


def check_stabilization(inst: TowerInstance, k, n_max: int) -> StabilizationVerdict:
    """Evaluate the stabilization implication at (0, 1) and, when the
    hypothesis holds, verify the conclusion at every level up to n_max
    together with the proof witness C-bar <= p^k X-bar.

    A hypothesis that holds with a failing conclusion is an
    implementation bug, never valid data, and raises TheoremViolation.
    """
    k = _validate_k(k)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    report = layer_sequence(inst, n_max)
    types = report.types
    base = _reduced(types[0], k)
    if _reduced(types[1], k) != base:
        return StabilizationVerdict(False, None, None, k, n_max)
    for n in range(2, n_max + 1):
        if _reduced(types[n], k) != base:
            raise TheoremViolation(
                f"layers 0 and 1 agree mod p^{k} but layer {n} differs: "
                f"{types[n].exponents} vs {types[0].exponents}")
    return StabilizationVerdict(True, True, _c_bar_in_pk(inst, k), k, n_max)


def rank_stabilization(inst: TowerInstance, k, n_max: int) -> StabilizationVerdict:
    """The same implication phrased through p^i-ranks for i <= k.

    Equivalent to check_stabilization because the ranks up to k
    determine the type mod p^k; the two verdicts must always agree.
    """
    k = _validate_k(k)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    report = layer_sequence(inst, n_max)
    types = report.types

    def ranks(t: AbelianType):
        if k == "full":
            top = max(t.exponents, default=0)
            return tuple(t.rank_pi(i) for i in range(1, top + 1))
        return tuple(t.rank_pi(i) for i in range(1, k + 1))

    base = ranks(types[0])
    if ranks(types[1]) != base:
        return StabilizationVerdict(False, None, None, k, n_max)
    for n in range(2, n_max + 1):
        if ranks(types[n]) != base:
            raise TheoremViolation(
                f"rank profile changed at level {n}: "
                f"{ranks(types[n])} vs {base}")
    return StabilizationVerdict(True, True, _c_bar_in_pk(inst, k), k, n_max)


@dataclass(frozen=True)
class GrowthFit:
    """e_n = mu p^n + lam n + nu exactly for every computed n >= n0."""

    mu: int
    lam: int
    nu: int
    n0: int


def fit_growth(e, p: int) -> GrowthFit:
    """Find the earliest exact fit e_n = mu p^n + lam n + nu.

    mu and lam must be non-negative integers; nu may be any integer
    (abstract module quotients genuinely produce nu < 0). The fit must
    hold on at least 3 trailing points and is exact, never least
    squares.
    """
    e = list(e)
    if len(e) < 4:
        raise ValueError("need at least 4 exponents to fit growth")
    for n0 in range(len(e) - 2):
        d1 = e[n0 + 1] - e[n0]
        d2 = e[n0 + 2] - e[n0 + 1]
        den = (p - 1) ** 2 * p ** n0
        if (d2 - d1) % den:
            continue
        mu = (d2 - d1) // den
        if mu < 0:
            continue
        lam = d1 - mu * (p - 1) * p ** n0
        if lam < 0:
            continue
        nu = e[n0] - mu * p ** n0 - lam * n0
        if all(e[n] == mu * p ** n + lam * n + nu for n in range(n0, len(e))):
            return GrowthFit(mu, lam, nu, n0)
    raise NoStableFit(
        f"no suffix of length >= 3 fits mu p^n + lam n + nu exactly: {e}")


@dataclass(frozen=True)
class PPowerSummand:
    """The cyclic quotient by p^mu: contributes mu*(p^n - 1) at level n."""

    mu: int

    def __post_init__(self):
        if self.mu < 1:
            raise ValueError("p-power summand needs mu >= 1")


@dataclass(frozen=True)
class DistinguishedSummand:
    """The cyclic quotient by P^power for a distinguished polynomial P."""

    poly: DistinguishedPoly
    power: int = 1

    def __post_init__(self):
        if self.power < 1:
            raise ValueError("power must be >= 1")
        if self.poly.degree < 1:
            raise ValueError("distinguished summand needs degree >= 1")


@dataclass(frozen=True)
class ElementaryModule:
    """A direct sum of cyclic quotients by p-powers and distinguished
    polynomial powers; the elementary shape every finitely generated
    torsion module reduces to."""

    params: RingParams
    summands: tuple

    def __post_init__(self):
        if not self.summands:
            raise ValueError("elementary module description must be nonempty")
        for s in self.summands:
            if isinstance(s, DistinguishedSummand):
                if s.poly.params.p != self.params.p:
                    raise ValueError("summand prime differs from module prime")
            elif not isinstance(s, PPowerSummand):
                raise TypeError(f"unknown summand {s!r}")


def elementary_growth(em: ElementaryModule, n_max: int, *,
                      max_precision: int | None = None):
    """Layer types and exponents of an elementary module, plus the fit.

    Level n of the quotient by p^mu is (Z/p^mu)^(p^n - 1) since omega_n
    is monic of degree p^n - 1; distinguished summands are resolved
    through their companion matrices. The exponent sequence is additive
    over summands. Returns (LayerReport, GrowthFit or None when no fit
    is visible yet).
    """
    p = em.params.p
    if p ** n_max > 100_000:
        raise ValueError(f"p^{n_max} layer data is too large to tabulate")
    records = []
    for n in range(n_max + 1):
        invs = []
        for s in em.summands:
            if isinstance(s, PPowerSummand):
                invs.extend([min(s.mu, em.params.N)] * (p ** n - 1))
            else:
                invs.extend(
                    e for e in companion_invariants(
                        s.poly, n, power=s.power, max_precision=max_precision)
                    if e >= 1)
        t = AbelianType.from_invariants(invs)
        records.append(LayerRecord(n, t, t.order_exponent))
    exps = [rec.e for rec in records]
    if any(b < a for a, b in zip(exps, exps[1:])):
        raise TheoremViolation(f"elementary layer orders decreased: {exps}")
    types = [rec.abelian_type for rec in records]
    idx = len(types) - 1
    while idx > 0 and types[idx - 1] == types[-1]:
        idx -= 1
    stab = idx if (idx < len(types) - 1 or len(types) == 1) else None
    report = LayerReport(tuple(records), stab)
    fit = None
    if len(exps) >= 4:
        try:
            fit = fit_growth(exps, p)
        except NoStableFit:
            fit = None
    return report, fit


def random_instance(p: int, seed: int, *,
                    max_total_exponent: int = 8,
                    max_extra_generators: int = 2,
                    allow_unbounded: bool = True,
                    max_finite_length: int = 8) -> TowerInstance:
    """Deterministic random tower instance for a given seed.

    sigma is sampled as identity + p * R with R respecting the
    divisibility constraints, which guarantees well-definedness, a unit
    determinant, and p-power order by construction. C-bar always
    receives the generators (sigma - 1) e_i plus a few random elements.
    """
    rng = random.Random(derived_seed("tower", p, seed, max_total_exponent))
    total = rng.randint(0, max_total_exponent)
    if total == 0:
        module = FiniteHModule(p, (), ())
    else:
        r = rng.randint(1, total)
        cuts = sorted(rng.sample(range(1, total), r - 1)) if r > 1 else []
        parts = [b - a for a, b in zip([0] + cuts, cuts + [total])]
        exponents = sorted(parts, reverse=True)
        e1 = exponents[0]
        mod = p ** e1
        sigma = []
        for i in range(r):
            row = []
            for j in range(r):
                step = p ** (1 + max(0, exponents[i] - exponents[j] - 1))
                entry = step * rng.randrange(mod // step) if step < mod else 0
                if i == j:
                    entry = (entry + 1) % mod
                row.append(entry)
            sigma.append(row)
        module = FiniteHModule(p, exponents, sigma)
    gens = [module.sub(module.apply_sigma(e), e) for e in module.basis()]
    for _ in range(rng.randint(0, max_extra_generators)):
        gens.append(tuple(rng.randrange(m) for m in module.emods))
    c_bar = span(module, gens)
    if allow_unbounded and rng.random() < 0.5:
        d = None
    else:
        d = rng.randint(1, max_finite_length)
    return TowerInstance(module, c_bar, d)
