"""Synthetic finite Galois-descent models with twisted inertia sections.

The ambient group is GG = X |x G for G = H |x Delta: H cyclic of order
p^d acting on the module X through sigma, Delta a small table group
acting on H by unit exponents and on X by automorphisms. An inertia
section is a twisted lift of H |x Delta_i into GG, pinned down by an
element a_i (the twist of the h-lift) and elements b_{delta,i} (the
twists of the Delta_i-lifts); section 1 is always the untwisted,
totally ramified one.

Class-group quotients are computed two independent ways: raw subgroup
closure inside GG (`bruteforce_class_quotient`) and the closed form
X/(omega_n C + D) (`closed_form_quotient`). Their agreement across
randomized instances is the strongest correctness property in the
repository, exercised by `compare_oracle`.
"""

import itertools
import random
from collections import deque
from dataclasses import dataclass

from .errors import (
    ActionNotHomomorphism,
    BudgetExceeded,
    GenerationFailed,
    InvalidGroupTable,
    LevelOutOfRange,
    ValidationError,
)
from .hmodule import (
    AbelianType,
    FiniteHModule,
    quotient_module,
    span,
    stacked_invariants,
    _stacked_smith,
    _smith_member,
)
from .padic import ModMatrix, RingParams, smith_form
from .tower import TowerInstance, derived_seed

DEFAULT_BUDGET = 1 << 20
_COMMUTATOR_CHECK_LIMIT = 2048


class DeltaGroup:
    """A small finite group presented by its multiplication table."""

    def __init__(self, table, name: str | None = None):
        table = tuple(tuple(row) for row in table)
        m = len(table)
        if m == 0 or any(len(row) != m for row in table):
            raise InvalidGroupTable("table must be square and nonempty")
        if m > 12:
            raise InvalidGroupTable(
                "Delta tables are capped at order 12; closures enumerate "
                "the ambient group and Delta multiplies everything")
        if any(x < 0 or x >= m for row in table for x in row):
            raise InvalidGroupTable("table entries must index elements")
        for i in range(m):
            if sorted(table[i]) != list(range(m)):
                raise InvalidGroupTable(f"row {i} is not a permutation")
            if sorted(table[j][i] for j in range(m)) != list(range(m)):
                raise InvalidGroupTable(f"column {i} is not a permutation")
        identity = None
        for e in range(m):
            if all(table[e][x] == x and table[x][e] == x for x in range(m)):
                identity = e
                break
        if identity is None:
            raise InvalidGroupTable("no identity element")
        for a in range(m):
            for b in range(m):
                for c in range(m):
                    if table[table[a][b]][c] != table[a][table[b][c]]:
                        raise InvalidGroupTable(
                            f"associativity fails at ({a},{b},{c})")
        inverse = [None] * m
        for a in range(m):
            for b in range(m):
                if table[a][b] == identity and table[b][a] == identity:
                    inverse[a] = b
                    break
            if inverse[a] is None:
                raise InvalidGroupTable(f"element {a} has no inverse")
        self.table = table
        self.order = m
        self.identity = identity
        self.inverse = tuple(inverse)
        self.name = name
        self._subgroups = None

    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    def inv(self, a: int) -> int:
        return self.inverse[a]

    def elements(self) -> range:
        return range(self.order)

    def subgroup_closure(self, indices) -> tuple:
        seen = {self.identity}
        seen.update(indices)
        frontier = list(seen)
        while frontier:
            new = []
            for a in frontier:
                for b in list(seen):
                    for c in (self.table[a][b], self.table[b][a]):
                        if c not in seen:
                            seen.add(c)
                            new.append(c)
            frontier = new
        return tuple(sorted(seen))

    def subgroups(self) -> list:
        """All subgroups, as sorted index tuples (cached).

        Closures of generating sets of size <= 3 cover every subgroup
        of a group of order <= 12, which is all this type allows.
        """
        if self._subgroups is None:
            found = set()
            elems = list(range(self.order))
            for size in range(4):
                for subset in itertools.combinations(elems, size):
                    found.add(self.subgroup_closure(subset))
            self._subgroups = sorted(found, key=lambda s: (len(s), s))
        return self._subgroups

    def __eq__(self, other):
        return isinstance(other, DeltaGroup) and self.table == other.table

    def __hash__(self):
        return hash(self.table)

    def __repr__(self):
        return f"DeltaGroup(order={self.order}, name={self.name!r})"


def _cyclic_table(k):
    return [[(i + j) % k for j in range(k)] for i in range(k)]


def _s3_table():
    perms = [(0, 1, 2), (1, 2, 0), (2, 0, 1), (0, 2, 1), (2, 1, 0), (1, 0, 2)]
    index = {s: i for i, s in enumerate(perms)}
    table = []
    for a in perms:
        row = []
        for b in perms:
            row.append(index[tuple(a[b[x]] for x in range(3))])
        table.append(row)
    return table


def delta_preset(name: str) -> DeltaGroup:
    """The built-in Delta choices: trivial, z2, z3, s3."""
    tables = {
        "trivial": [[0]],
        "z2": _cyclic_table(2),
        "z3": _cyclic_table(3),
        "s3": _s3_table(),
    }
    if name not in tables:
        raise ValueError(f"unknown delta preset {name!r}")
    return DeltaGroup(tables[name], name=name)


def canonical_h_exponents(delta: DeltaGroup, p: int, d: int) -> list:
    """A canonical nontrivial Delta-action on H for the presets.

    Order-2 elements invert h whenever -1 differs from 1 mod p^d; the
    z3 generator acts by a unit of order 3 when one exists (p = 3,
    d >= 2); anything else acts trivially.
    """
    q = p ** d
    if delta.name == "z2" and q > 2:
        return [1, q - 1]
    if delta.name == "z3":
        for u in range(2, q):
            if u % p and pow(u, 3, q) == 1:
                return [1, u, pow(u, 2, q)]
        return [1, 1, 1]
    if delta.name == "s3" and q > 2:
        s = q - 1
        return [1, 1, 1, s, s, s]
    return [1] * delta.order


class FiniteGroupG:
    """G = H |x Delta acting on X, and the ambient group GG = X |x G.

    Elements of G are pairs (a, delta): a the exponent of h mod p^d,
    delta an index into the Delta table. Elements of GG are triples
    (x, a, delta) with x an element tuple of the module.
    """

    def __init__(self, p: int, d: int, delta: DeltaGroup,
                 module: FiniteHModule, h_exponents, x_actions,
                 budget: int = DEFAULT_BUDGET):
        if d < 1:
            raise ValueError("tower exponent d must be >= 1")
        if module.p != p:
            raise ValueError(f"module prime {module.p} differs from p={p}")
        self.p = p
        self.d = d
        self.q = p ** d
        self.delta = delta
        self.module = module
        self.budget = budget

        if module.order_exponent > d:
            raise ActionNotHomomorphism(
                f"sigma has order p^{module.order_exponent} but h has "
                f"order p^{d}; the H-action is ill-defined")

        m = delta.order
        t = tuple(x % self.q for x in h_exponents)
        if len(t) != m:
            raise ValueError("need one h-exponent per Delta element")
        if t[delta.identity] != 1 % self.q:
            raise ActionNotHomomorphism("identity must fix h")
        if any(x % p == 0 for x in t):
            raise ActionNotHomomorphism("h-exponents must be units")
        for a in range(m):
            for b in range(m):
                if (t[a] * t[b] - t[delta.mul(a, b)]) % self.q:
                    raise ActionNotHomomorphism(
                        f"h-exponent map is not a homomorphism at ({a},{b})")
        self.h_exponents = t

        taus = [module.check_action_matrix(rows) for rows in x_actions]
        if len(taus) != m:
            raise ValueError("need one X-action matrix per Delta element")
        if not module.endo_is_identity(taus[delta.identity]):
            raise ActionNotHomomorphism("identity must act trivially on X")
        mod = module.modulus
        for a in range(m):
            for b in range(m):
                composed = _mat_mul(taus[a], taus[b], mod)
                if not module.endo_equal(composed, taus[delta.mul(a, b)]):
                    raise ActionNotHomomorphism(
                        f"X-action is not a homomorphism at ({a},{b})")
        sig_pow = [module._identity_matrix()]
        for _ in range(self.q - 1):
            sig_pow.append(_mat_mul(sig_pow[-1], module.sigma, mod))
        self._sigma_powers = sig_pow
        for dd in range(m):
            left = _mat_mul(taus[dd], module.sigma, mod)
            right = _mat_mul(sig_pow[t[dd]], taus[dd], mod)
            if not module.endo_equal(left, right):
                raise ActionNotHomomorphism(
                    f"tau_{dd} sigma tau_{dd}^-1 != sigma^{t[dd]}; the "
                    "G-action does not extend sigma")
        self.x_actions = tuple(taus)

        self.gg_order = (p ** module.total_exponent) * self.q * m
        if self.gg_order > budget:
            raise BudgetExceeded(
                f"|GG| = {self.gg_order} exceeds budget {budget}")
        self._action_cache = {}

    # -- G = H |x Delta ---------------------------------------------------

    def g_identity(self) -> tuple:
        return (0, self.delta.identity)

    def g_mul(self, g1, g2) -> tuple:
        a1, d1 = g1
        a2, d2 = g2
        return ((a1 + self.h_exponents[d1] * a2) % self.q,
                self.delta.mul(d1, d2))

    def g_inv(self, g) -> tuple:
        a, dd = g
        di = self.delta.inv(dd)
        return ((-self.h_exponents[di] * a) % self.q, di)

    def g_elements(self, n: int = 0):
        """Elements of G_n = H^(p^n) |x Delta."""
        step = self.p ** n
        for a in range(0, self.q, step):
            for dd in range(self.delta.order):
                yield (a, dd)

    def action_matrix(self, g) -> tuple:
        """The automorphism of X by which (a, delta) acts: sigma^a tau."""
        cached = self._action_cache.get(g)
        if cached is None:
            a, dd = g
            cached = _mat_mul(self._sigma_powers[a % self.q],
                              self.x_actions[dd], self.module.modulus)
            self._action_cache[g] = cached
        return cached

    # -- GG = X |x G -------------------------------------------------------

    def gg_identity(self) -> tuple:
        return (self.module.zero(), 0, self.delta.identity)

    def gg_mul(self, u, v) -> tuple:
        act = self.action_matrix((u[1], u[2]))
        x = self.module.add(u[0], self.module.apply_matrix(act, v[0]))
        a, dd = self.g_mul((u[1], u[2]), (v[1], v[2]))
        return (x, a, dd)

    def gg_inv(self, u) -> tuple:
        gi = self.g_inv((u[1], u[2]))
        act = self.action_matrix(gi)
        x = self.module.scale(-1, self.module.apply_matrix(act, u[0]))
        return (x, gi[0], gi[1])

    def gg_pow(self, u, k: int) -> tuple:
        out = self.gg_identity()
        while k:
            if k & 1:
                out = self.gg_mul(out, u)
            k >>= 1
            if k:
                u = self.gg_mul(u, u)
        return out

    def describe(self) -> dict:
        delta_spec = (self.delta.name if self.delta.name
                      else {"table": [list(r) for r in self.delta.table]})
        return {
            "p": self.p,
            "d": self.d,
            "delta": delta_spec,
            "exponents": list(self.module.exponents),
            "sigma": [list(row) for row in self.module.sigma],
            "h_exponents": list(self.h_exponents),
            "x_actions": [[list(row) for row in tau]
                          for tau in self.x_actions],
        }


def _mat_mul(a, b, mod):
    bt = list(zip(*b))
    return tuple(
        tuple(sum(x * y for x, y in zip(row, col)) % mod for col in bt)
        for row in a)


def build_group(p: int, d: int, delta, module: FiniteHModule,
                h_exponents, x_actions,
                budget: int = DEFAULT_BUDGET) -> FiniteGroupG:
    """Validated constructor for the ambient group data.

    `delta` may be a DeltaGroup, a preset name, or a raw table.
    """
    if isinstance(delta, str):
        delta = delta_preset(delta)
    elif not isinstance(delta, DeltaGroup):
        delta = DeltaGroup(delta)
    return FiniteGroupG(p, d, delta, module, h_exponents, x_actions,
                        budget=budget)


def _closure(group: FiniteGroupG, gens, budget: int):
    """Subgroup of GG generated by `gens` (breadth-first saturation)."""
    ident = group.gg_identity()
    seen = {ident}
    gens = [g for g in dict.fromkeys(gens) if g != ident]
    frontier = [ident]
    while frontier:
        new = []
        for u in frontier:
            for g in gens:
                w = group.gg_mul(u, g)
                if w not in seen:
                    if len(seen) >= budget:
                        raise BudgetExceeded(
                            f"subgroup closure passed {budget} elements")
                    seen.add(w)
                    new.append(w)
        frontier = new
    return seen


@dataclass(frozen=True)
class Section:
    """One twisted inertia section: Delta_i, the h-twist a, and the
    delta-twists b (as (delta index, element) pairs covering Delta_i)."""

    delta_indices: tuple
    a: tuple
    b_pairs: tuple


class DescentInstance:
    """GG together with r validated inertia sections (section 1 untwisted)."""

    def __init__(self, group: FiniteGroupG, sections,
                 budget: int | None = None):
        self.group = group
        self.budget = budget if budget is not None else group.budget
        self.sections = tuple(sections)
        if not self.sections:
            raise ValidationError("need at least the totally ramified section")
        module = group.module
        first = self.sections[0]
        full = tuple(range(group.delta.order))
        if tuple(sorted(first.delta_indices)) != full:
            raise ValidationError(
                "section 1 must be totally ramified: Delta_1 = Delta")
        if module.normalize(first.a) != module.zero():
            raise ValidationError("section 1 must have a_1 = 0")
        if any(module.normalize(x) != module.zero()
               for _, x in first.b_pairs):
            raise ValidationError("section 1 must have b_{delta,1} = 0")
        for i, sec in enumerate(self.sections):
            _validate_section(group, sec, self.budget, i)
        self._c_sub = None
        self._d_sub = None

    def c_submodule(self):
        """C = the h-module span of (sigma - 1) X and the a_i twists."""
        if self._c_sub is None:
            m = self.group.module
            gens = [m.sub(m.apply_sigma(e), e) for e in m.basis()]
            gens += [sec.a for sec in self.sections[1:]]
            self._c_sub = span(m, gens)
        return self._c_sub

    def d_submodule(self):
        """D = the h-module span of (delta - 1) X and the b twists."""
        if self._d_sub is None:
            m = self.group.module
            gens = []
            for dd in self.group.delta.elements():
                tau = self.group.x_actions[dd]
                for e in m.basis():
                    gens.append(m.sub(m.apply_matrix(tau, e), e))
            for sec in self.sections:
                gens.extend(x for _, x in sec.b_pairs)
            self._d_sub = span(m, gens)
        return self._d_sub

    def describe(self) -> dict:
        data = self.group.describe()
        data["kind"] = "descent"
        data["sections"] = [
            {
                "delta_indices": list(sec.delta_indices),
                "a": list(sec.a),
                "b": [[dd, list(x)] for dd, x in sec.b_pairs],
            }
            for sec in self.sections
        ]
        return data


def _validate_section(group: FiniteGroupG, sec: Section, budget: int, i: int):
    """Full structural check of one inertia section.

    The subgroup generated by the twisted lifts must have order
    |H| * |Delta_i| and meet X trivially, i.e. project isomorphically
    onto H |x Delta_i.
    """
    module = group.module
    delta = group.delta
    sub = tuple(sorted(set(sec.delta_indices)))
    if delta.subgroup_closure(sub) != sub:
        raise ValidationError(
            f"section {i + 1}: Delta_i = {sub} is not a subgroup")
    a = module.normalize(sec.a)
    bmap = {dd: module.normalize(x) for dd, x in sec.b_pairs}
    if sorted(bmap) != list(sub):
        raise ValidationError(
            f"section {i + 1}: b must be given exactly on Delta_i")
    if bmap[delta.identity] != module.zero():
        raise ValidationError(f"section {i + 1}: b at identity must be 0")
    wd = module.omega_matrix(group.d)
    if module.apply_matrix(wd, a) != module.zero():
        raise ValidationError(
            f"section {i + 1}: omega_d a != 0, the h-lift does not "
            f"have order p^{group.d}")
    gens = [(a, 1 % group.q, delta.identity)]
    gens += [(bmap[dd], 0, dd) for dd in sub if dd != delta.identity]
    closure = _closure(group, gens, budget)
    expected = group.q * len(sub)
    if len(closure) != expected:
        raise ValidationError(
            f"section {i + 1}: generated subgroup has order "
            f"{len(closure)}, expected {expected}")
    zero = module.zero()
    for x, aa, dd in closure:
        if aa == 0 and dd == delta.identity and x != zero:
            raise ValidationError(
                f"section {i + 1}: subgroup meets X nontrivially")


def _check_level(inst: DescentInstance, n: int):
    if n < 0 or n > inst.group.d:
        raise LevelOutOfRange(
            f"level {n} outside 0..{inst.group.d}")


def bruteforce_class_quotient(inst: DescentInstance, n: int, *,
                              budget: int | None = None,
                              commutator_check: bool | None = None) -> AbelianType:
    """X modulo its intersection with <I_{G_n} X, inertia sections at
    level n>, computed by raw subgroup closure inside GG_n.

    Generators: the commutators (g - 1) e_k for g running over the
    generators of G_n (h^(p^n) and all of Delta), the p^n-th powers of
    the section h-lifts, and the section delta-lifts. The closure is
    conjugation-stable because section 1 contains an untwisted copy of
    every G_n element.
    """
    _check_level(inst, n)
    group = inst.group
    module = group.module
    delta = group.delta
    budget = budget if budget is not None else inst.budget
    pn = (group.p ** n) % group.q
    ident = delta.identity

    g_gens = [(pn, ident)] + [(0, dd) for dd in delta.elements() if dd != ident]
    zero = module.zero()
    gens = []
    for g in g_gens:
        act = group.action_matrix(g)
        for e in module.basis():
            moved = module.sub(module.apply_matrix(act, e), e)
            if moved != zero:
                gens.append((moved, 0, ident))
    wn = module.omega_matrix(n)
    for sec in inst.sections:
        gens.append((module.apply_matrix(wn, module.normalize(sec.a)),
                     pn, ident))
        for dd, b in sec.b_pairs:
            if dd != ident:
                gens.append((module.normalize(b), 0, dd))

    closure = _closure(group, gens, budget)
    y_rows = sorted({x for x, aa, dd in closure
                     if aa == 0 and dd == ident})
    result = AbelianType.from_invariants(stacked_invariants(module, y_rows))

    if commutator_check is None:
        gg_n_order = ((group.p ** module.total_exponent)
                      * (group.q // group.p ** n) * delta.order)
        commutator_check = gg_n_order <= _COMMUTATOR_CHECK_LIMIT
    if commutator_check:
        _assert_commutator_decomposition(inst, n, budget)
    return result


def closed_form_quotient(inst: DescentInstance, n: int) -> AbelianType:
    """X / (omega_n C + D) via the Smith form of the relation stack."""
    group = inst.group
    module = group.module
    c_sub = inst.c_submodule()
    d_sub = inst.d_submodule()
    wn = module.omega_matrix(n)
    rows = [module.apply_matrix(wn, g) for g in c_sub.gens]
    rows += list(d_sub.gens)
    return AbelianType.from_invariants(stacked_invariants(module, rows))


def _assert_commutator_decomposition(inst: DescentInstance, n: int,
                                     budget: int):
    """Internal cross-check on small instances: the commutator subgroup
    of GG_n splits as (I_{G_n} X) |x [G_n, G_n]."""
    group = inst.group
    module = group.module
    delta = group.delta
    ident = delta.identity
    pn = (group.p ** n) % group.q

    g_gens = [(pn, ident)] + [(0, dd) for dd in delta.elements() if dd != ident]
    gg_gens = [(e, 0, ident) for e in module.basis()]
    gg_gens += [(module.zero(), a, dd) for a, dd in g_gens]

    comms = []
    for u in gg_gens:
        for v in gg_gens:
            w = group.gg_mul(group.gg_mul(u, v),
                             group.gg_inv(group.gg_mul(v, u)))
            comms.append(w)
    subgroup = _closure(group, comms, budget)
    while True:
        extra = []
        for g in gg_gens:
            gi = group.gg_inv(g)
            for s in subgroup:
                c = group.gg_mul(group.gg_mul(g, s), gi)
                if c not in subgroup:
                    extra.append(c)
        if not extra:
            break
        subgroup = _closure(group, list(subgroup) + extra, budget)

    # [G_n, G_n] inside the small group G_n.
    g_elems = list(group.g_elements(n))
    g_comms = set()
    for u in g_elems:
        for v in g_elems:
            w = group.g_mul(group.g_mul(u, v),
                            group.g_inv(group.g_mul(v, u)))
            g_comms.add(w)
    g_sub = {group.g_identity()}
    frontier = list(g_comms)
    while frontier:
        new = []
        for a in frontier:
            for b in list(g_sub) + list(g_comms):
                for c in (group.g_mul(a, b), group.g_mul(b, a)):
                    if c not in g_sub:
                        g_sub.add(c)
                        new.append(c)
        frontier = new

    # I_{G_n} X: the module span of (g - 1) X under the G_n-action.
    rows = []
    sm = _stacked_smith(module, rows)
    action_mats = [group.action_matrix(g) for g in g_gens]
    pending = deque()
    for mat in action_mats:
        for e in module.basis():
            pending.append(module.sub(module.apply_matrix(mat, e), e))
    while pending:
        x = pending.popleft()
        if _smith_member(module, sm, x):
            continue
        rows.append(x)
        sm = _stacked_smith(module, rows)
        for mat in action_mats:
            pending.append(module.apply_matrix(mat, x))

    quot_exp = AbelianType.from_invariants(sm.exponents).order_exponent
    igx_order = group.p ** (module.total_exponent - quot_exp)
    if len(subgroup) != igx_order * len(g_sub):
        raise AssertionError(
            f"commutator subgroup order {len(subgroup)} != "
            f"|I_G X| * |[G,G]| = {igx_order} * {len(g_sub)} at level {n}")
    for x, aa, dd in subgroup:
        if (aa, dd) not in g_sub or not _smith_member(module, sm, x):
            raise AssertionError(
                "commutator subgroup does not split as I_G X |x [G, G]")


@dataclass(frozen=True)
class OracleLevel:
    n: int
    bruteforce: AbelianType
    closed_form: AbelianType

    @property
    def equal(self) -> bool:
        return self.bruteforce == self.closed_form


@dataclass(frozen=True)
class OracleReport:
    """Per-level comparison of the two quotient computations."""

    records: tuple

    @property
    def all_equal(self) -> bool:
        return all(rec.equal for rec in self.records)

    @property
    def witness(self):
        """The smallest mismatching level, or None."""
        for rec in self.records:
            if not rec.equal:
                return rec
        return None


def compare_oracle(inst: DescentInstance, n_range=None, *,
                   budget: int | None = None) -> OracleReport:
    """Run both quotient computations across levels and compare."""
    if n_range is None:
        n_range = range(inst.group.d + 1)
    records = []
    for n in n_range:
        bf = bruteforce_class_quotient(inst, n, budget=budget)
        cf = closed_form_quotient(inst, n)
        records.append(OracleLevel(n, bf, cf))
    return OracleReport(tuple(records))


def compile_to_tower(inst: DescentInstance) -> TowerInstance:
    """Quotient out D and hand the pair (X/D, (C+D)/D) to the tower layer.

    The layers of the result agree with closed_form_quotient at every
    level of the descent instance.
    """
    module = inst.group.module
    d_sub = inst.d_submodule()
    quotient, proj = quotient_module(module, d_sub)
    c_gens = [proj(g) for g in inst.c_submodule().gens]
    return TowerInstance(quotient, span(quotient, c_gens), d=inst.group.d)


def augmentation_check(group: FiniteGroupG, n: int, precision: int) -> bool:
    """Verify inside (Z/p^precision)[G_n] that every g - 1 lies in the
    left Z[H^(p^n)]-span of h^(p^n) - 1 and the delta - 1.

    This is the augmentation-ideal generation statement that collapses
    I_{G_n} X to omega_n (h-1) X + I_Delta X in the closed form.
    """
    if n < 0 or n > group.d:
        raise LevelOutOfRange(f"level {n} outside 0..{group.d}")
    delta = group.delta
    ident = delta.identity
    elements = list(group.g_elements(n))
    if len(elements) > group.budget:
        raise BudgetExceeded(
            f"group ring dimension {len(elements)} exceeds budget")
    index = {g: i for i, g in enumerate(elements)}
    params = RingParams(group.p, precision)
    dim = len(elements)

    pn = (group.p ** n) % group.q
    targets = [(pn, ident)]
    targets += [(0, dd) for dd in delta.elements() if dd != ident]
    rows = []
    for a in range(0, group.q, group.p ** n):
        eta = (a, ident)
        for tg in targets:
            vec = [0] * dim
            vec[index[group.g_mul(eta, tg)]] += 1
            vec[index[eta]] -= 1
            rows.append(vec)
    sm = smith_form(ModMatrix(params, rows))

    val = params.valuation_of
    v = sm.v._data
    mod = params.modulus
    exps = sm.exponents
    id_row = v[index[group.g_identity()]]
    for g in elements:
        g_row = v[index[g]]
        # membership of (g - 1) in the row span: transform and compare
        # valuations against the diagonal exponents
        for j in range(dim):
            w = (g_row[j] - id_row[j]) % mod
            if val(w) < exps[j]:
                return False
    return True


def _sample_sigma(rng, p, exponents, d, max_order_exponent, tries=60):
    """identity + p * R with R respecting divisibility; resample until
    the order exponent fits under min(d, max_order_exponent)."""
    r = len(exponents)
    if r == 0:
        return FiniteHModule(p, (), ())
    e1 = exponents[0]
    mod = p ** e1
    cap = min(d, max_order_exponent)
    for _ in range(tries):
        rows = []
        for i in range(r):
            row = []
            for j in range(r):
                step = p ** (1 + max(0, exponents[i] - exponents[j] - 1))
                entry = step * rng.randrange(mod // step) if step < mod else 0
                if i == j:
                    entry = (entry + 1) % mod
                row.append(entry)
            rows.append(row)
        module = FiniteHModule(p, exponents, rows)
        if module.order_exponent <= cap:
            return module
    raise GenerationFailed(
        f"could not sample sigma of order <= p^{cap} on {exponents}")


def random_descent_instance(p: int, d: int, delta_choice: str, seed: int, *,
                            max_total_exponent: int = 4,
                            max_sections: int = 3,
                            budget: int = DEFAULT_BUDGET,
                            max_attempts: int = 64) -> DescentInstance:
    """Deterministic random descent instance.

    The h-twists a_i are sampled from the annihilator of omega_d, so
    the section order constraint holds by construction; the b-twists
    are sampled from the order condition of their delta and the full
    subgroup property is verified post hoc, resampling on failure.
    Supported delta choices: trivial, z2.
    """
    if delta_choice not in ("trivial", "z2"):
        raise ValueError(
            f"random sampler supports trivial and z2, got {delta_choice!r}")
    rng = random.Random(derived_seed("descent", p, d, delta_choice, seed,
                                      max_total_exponent))
    delta = delta_preset(delta_choice)
    m = delta.order

    for _ in range(max_attempts):
        try:
            total = rng.randint(0, max_total_exponent)
            if total == 0:
                exponents = ()
            else:
                r = rng.randint(1, total)
                cuts = (sorted(rng.sample(range(1, total), r - 1))
                        if r > 1 else [])
                parts = [b - a for a, b in zip([0] + cuts, cuts + [total])]
                exponents = tuple(sorted(parts, reverse=True))

            # weight the twisted Delta-actions up: negation of X admits
            # every b as a section twist, which is where the oracle works
            patterns = ["plain"]
            if m == 2 and exponents:
                patterns += ["negate_x", "negate_x"]
                if p == 2 and d >= 2:
                    patterns.append("invert_h")
                if p != 2:
                    patterns.append("invert_h_fixed_x")
            pattern = rng.choice(patterns)

            if pattern == "invert_h":
                module = _sample_sigma(rng, p, exponents, d, 1)
            elif pattern == "invert_h_fixed_x":
                module = FiniteHModule(
                    p, exponents,
                    [[int(i == j) for j in range(len(exponents))]
                     for i in range(len(exponents))])
            else:
                module = _sample_sigma(rng, p, exponents, d, d)

            r = module.rank
            identity_mat = [[int(i == j) for j in range(r)] for i in range(r)]
            if pattern == "plain" or m == 1:
                h_exps = [1] * m
                taus = [identity_mat] * m
            elif pattern == "negate_x":
                h_exps = [1, 1]
                taus = [identity_mat,
                        [[(-1 if i == j else 0) % module.modulus
                          for j in range(r)] for i in range(r)]]
            else:
                h_exps = [1, (-1) % (p ** d)]
                taus = [identity_mat, identity_mat]

            group = build_group(p, d, delta, module, h_exps, taus,
                                budget=budget)

            wd = module.omega_matrix(d)
            kernel = [x for x in module.enumerate_elements()
                      if module.apply_matrix(wd, x) == module.zero()]
            full = tuple(range(m))
            zero_b = tuple((dd, module.zero()) for dd in full)
            sections = [Section(full, module.zero(), zero_b)]
            for _ in range(rng.randint(0, max_sections - 1)):
                sections.append(
                    _sample_section(rng, group, kernel, budget))
            return DescentInstance(group, sections, budget=budget)
        except (ValidationError, GenerationFailed, BudgetExceeded):
            continue
    raise GenerationFailed(
        f"no valid descent instance after {max_attempts} attempts")


def _sample_section(rng, group: FiniteGroupG, kernel, budget,
                    tries: int = 30) -> Section:
    module = group.module
    delta = group.delta
    subgroup_choices = delta.subgroups()
    full = subgroup_choices[-1]
    for _ in range(tries):
        sub = tuple(full if rng.random() < 0.6
                    else rng.choice(subgroup_choices))
        a = rng.choice(kernel)
        b_pairs = [(delta.identity, module.zero())]
        ok = True
        for dd in sub:
            if dd == delta.identity:
                continue
            # order-2 lift condition (the sampler only sees z2):
            # (b, delta)^2 = (b + tau b, 1)
            tau = group.action_matrix((0, dd))
            solutions = [x for x in module.enumerate_elements()
                         if module.add(x, module.apply_matrix(tau, x))
                         == module.zero()]
            if not solutions:
                ok = False
                break
            b_pairs.append((dd, rng.choice(solutions)))
        if not ok:
            continue
        sec = Section(sub, a, tuple(sorted(b_pairs)))
        try:
            _validate_section(group, sec, budget, 1)
            return sec
        except ValidationError:
            continue
    raise GenerationFailed("could not sample a valid twisted section")
