import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from ptower.errors import (
    NotAutomorphism,
    OrderNotPPower,
    WellDefinednessViolation,
)
from ptower.hmodule import (
    AbelianType,
    make_module,
    quotient_module,
    quotient_type,
    rank_pi,
    scale_submodule,
    span,
    sum_submodules,
)
from ptower.iwasawa import LambdaElement, omega
from ptower.padic import RingParams


def brute_subgroup(module, sub):
    """Enumerate the submodule elementwise (small modules only)."""
    return [x for x in module.enumerate_elements() if sub.contains(x)]


class TestMakeModule:
    def test_multiplication_action(self):
        m = make_module(3, [2], [[4]])
        assert m.order_exponent == 1  # (1+3)^3 = 1 mod 9

    def test_identity_action(self):
        m = make_module(3, [2, 1], [[1, 0], [0, 1]])
        assert m.order_exponent == 0

    def test_well_definedness(self):
        with pytest.raises(WellDefinednessViolation):
            make_module(3, [2, 1], [[1, 1], [0, 1]])
        # same matrix is fine once the entry is divisible by 3
        m = make_module(3, [2, 1], [[1, 3], [0, 1]])
        assert m.rank == 2

    def test_not_automorphism(self):
        with pytest.raises(NotAutomorphism):
            make_module(3, [2], [[3]])

    def test_order_not_p_power(self):
        # 2 has multiplicative order 6 mod 9
        with pytest.raises(OrderNotPPower):
            make_module(3, [2], [[2]])

    def test_exponent_ordering_enforced(self):
        with pytest.raises(ValueError):
            make_module(3, [1, 2], [[1, 0], [0, 1]])


class TestLambdaAct:
    def test_constant_one(self):
        m = make_module(3, [2], [[4]])
        f = LambdaElement(RingParams(3, 4), [1])
        assert m.lambda_act(f, (5,)) == (5,)

    def test_omega_on_identity_action(self):
        m = make_module(3, [2], [[1]])
        assert m.lambda_act(omega(RingParams(3, 4), 1), (1,)) == (3,)

    def test_t_acts_as_sigma_minus_one(self):
        m = make_module(3, [2], [[4]])
        f = LambdaElement(RingParams(3, 4), [0, 1])
        assert m.lambda_act(f, (1,)) == (3,)

    def test_ring_action_laws(self):
        rng = random.Random(3)
        m = make_module(3, [2, 1], [[4, 3], [3, 4]])
        params = RingParams(3, 2)
        for _ in range(40):
            f = LambdaElement(params, [rng.randrange(9) for _ in range(3)])
            g = LambdaElement(params, [rng.randrange(9) for _ in range(3)])
            x = (rng.randrange(9), rng.randrange(3))
            lhs = m.lambda_act(f * g, x)
            rhs = m.lambda_act(f, m.lambda_act(g, x))
            assert lhs == rhs
            both = m.lambda_act(f + g, x)
            assert both == m.add(m.lambda_act(f, x), m.lambda_act(g, x))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 8), min_size=4, max_size=4),
       st.lists(st.integers(0, 8), min_size=4, max_size=4),
       st.integers(0, 8), st.integers(0, 2))
def test_lambda_act_is_a_ring_action(fc, gc, x0, x1):
    m = make_module(3, [2, 1], [[4, 3], [3, 4]])
    params = RingParams(3, 2)
    f, g = LambdaElement(params, fc), LambdaElement(params, gc)
    x = (x0, x1)
    assert m.lambda_act(f * g, x) == m.lambda_act(f, m.lambda_act(g, x))
    assert m.lambda_act(f + g, x) == m.add(m.lambda_act(f, x),
                                           m.lambda_act(g, x))


class TestSpanQuotient:
    def test_empty_and_full(self):
        m = make_module(3, [2, 1], [[1, 0], [0, 1]])
        assert span(m, []).is_zero
        assert quotient_type(m, span(m, [])).exponents == (2, 1)
        assert quotient_type(m, span(m, m.basis())).is_trivial

    def test_index_three_example(self):
        m = make_module(3, [2, 1], [[1, 0], [0, 1]])
        s = span(m, [(3, 0), (0, 1)])
        assert quotient_type(m, s).exponents == (1,)
        assert s.order_exponent == 2

    def test_sigma_stability(self):
        rng = random.Random(9)
        m = make_module(3, [2, 2, 1], [[4, 3, 3], [9, 4, 3], [0, 3, 1]])
        for _ in range(20):
            gens = [tuple(rng.randrange(e) for e in m.emods)
                    for _ in range(rng.randint(0, 3))]
            s = span(m, gens)
            for g in s.gens:
                assert s.contains(m.apply_sigma(g))

    def test_order_bookkeeping(self):
        rng = random.Random(10)
        m = make_module(2, [2, 1], [[1, 0], [2, 1]])
        for _ in range(12):
            gens = [tuple(rng.randrange(e) for e in m.emods)
                    for _ in range(rng.randint(0, 2))]
            s = span(m, gens)
            count = len(brute_subgroup(m, s))
            assert count == 2 ** s.order_exponent
            assert count * 2 ** quotient_type(m, s).order_exponent == \
                2 ** m.total_exponent

    def test_membership_matches_enumeration(self):
        m = make_module(2, [3, 1], [[3, 0], [4, 1]])
        s = span(m, [(2, 1)])
        members = set(brute_subgroup(m, s))
        closure = {m.zero()}
        frontier = [m.zero()]
        gens = list(s.gens)
        while frontier:
            new = []
            for x in frontier:
                for g in gens:
                    y = m.add(x, g)
                    if y not in closure:
                        closure.add(y)
                        new.append(y)
            frontier = new
        assert members == closure


class TestAbelianType:
    def test_rank_pi(self):
        t = AbelianType((2, 1))
        assert t.rank_pi(1) == 2
        assert t.rank_pi(2) == 1
        assert AbelianType(()).rank_pi(1) == 0
        assert rank_pi(t, 3) == 0

    def test_rank_pi_brute_force(self):
        # dim_{F_p} (p^(i-1) A) / (p^i A) by raw enumeration, |A| <= p^6
        for p, exps in [(2, (3, 2, 1)), (3, (2, 2, 1)), (5, (2, 1))]:
            t = AbelianType(exps)
            mods = [p ** e for e in exps]
            elements = list(itertools.product(*[range(m) for m in mods]))
            for i in range(1, 4):
                upper = {tuple(p ** (i - 1) * x % m for x, m in zip(v, mods))
                         for v in elements}
                lower = {tuple(p ** i * x % m for x, m in zip(v, mods))
                         for v in elements}
                dim = 0
                while p ** dim < len(upper) // len(lower):
                    dim += 1
                assert t.rank_pi(i) == dim

    def test_mod_pk(self):
        t = AbelianType((3, 2, 1))
        assert t.mod_pk(2).exponents == (2, 2, 1)
        assert t.mod_pk(1).exponents == (1, 1, 1)


class TestSubmoduleAlgebra:
    def test_sum_with_zero(self):
        m = make_module(3, [2], [[4]])
        a = span(m, [(3,)])
        assert sum_submodules(a, span(m, [])) == a

    def test_scale_by_one(self):
        m = make_module(3, [2], [[4]])
        a = span(m, [(1,)])
        assert scale_submodule(LambdaElement(RingParams(3, 2), [1]), a) == a

    def test_scale_by_omega(self):
        # omega_1(sigma - 1) applied to 1 is 1 + 4 + 16 = 21 = 3 mod 9
        m = make_module(3, [2], [[4]])
        full = span(m, [(1,)])
        scaled = scale_submodule(omega(RingParams(3, 2), 1), full)
        assert scaled == span(m, [(3,)])


class TestQuotientModule:
    def test_projection_kernel(self):
        m = make_module(3, [2, 1], [[4, 0], [0, 1]])
        s = span(m, [(0, 1)])
        q, proj = quotient_module(m, s)
        assert q.exponents == (2,)
        for x in m.enumerate_elements():
            killed = proj(x) == q.zero()
            assert killed == s.contains(x)

    def test_induced_action_commutes(self):
        rng = random.Random(4)
        m = make_module(3, [2, 2], [[4, 3], [3, 4]])
        for _ in range(10):
            gens = [tuple(rng.randrange(e) for e in m.emods)
                    for _ in range(rng.randint(0, 2))]
            s = span(m, gens)
            q, proj = quotient_module(m, s)
            for x in [tuple(rng.randrange(e) for e in m.emods)
                      for _ in range(8)]:
                assert proj(m.apply_sigma(x)) == q.apply_sigma(proj(x))

    def test_trivial_module(self):
        m = make_module(5, (), ())
        s = span(m, [])
        q, proj = quotient_module(m, s)
        assert q.rank == 0
        assert proj(()) == ()
