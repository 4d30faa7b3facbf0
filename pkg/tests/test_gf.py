from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ame_lab import gf
from ame_lab.gf import FiniteField, field_new, poly_eval, prime_power

FIELD_ORDERS = [q for q in range(2, 17) if prime_power(q)]


@pytest.fixture(scope="module", params=FIELD_ORDERS, ids=lambda q: f"GF{q}")
def field(request):
    return FiniteField(*prime_power(request.param))


def test_field_axioms_exhaustive(field):
    q = field.q
    add, mul = field.add_table, field.mul_table
    idx = np.arange(q)
    assert np.array_equal(add, add.T)
    assert np.array_equal(mul, mul.T)
    assert np.array_equal(add[0], idx)
    assert np.array_equal(mul[1], idx)
    assert np.all(mul[0] == 0)
    for a, b, c in itertools.product(range(q), repeat=3):
        assert add[add[a, b], c] == add[a, add[b, c]]
        assert mul[mul[a, b], c] == mul[a, mul[b, c]]
        assert mul[a, add[b, c]] == add[mul[a, b], mul[a, c]]
    for a in range(q):
        assert add[a, field.neg_table[a]] == 0
        if a:
            assert mul[a, field.inv_table[a]] == 1


def test_frobenius_is_additive(field):
    p = field.p
    for a, b in itertools.product(field.elements(), repeat=2):
        assert (a + b) ** p == a**p + b**p


def test_multiplicative_group_is_cyclic(field):
    orders = []
    for a in field.elements()[1:]:
        k, x = 1, a
        while x != field.one:
            x, k = x * a, k + 1
        orders.append(k)
    assert max(orders) == field.q - 1


def test_prime_field_examples():
    f3 = field_new(3)
    assert (f3(2) + f3(2)).value == 1
    assert (f3(2) * f3(2)).value == 1
    assert gf.pow(f3(2), 2).value == 1
    assert gf.inv(field_new(5)(2)).value == 3


def test_gf4_generator_relation():
    f4 = field_new(2, 2)
    x = f4(2)
    assert x * x == x + f4.one
    assert gf.inv(x) == x + f4.one


def test_gf4_inverse_matches_search():
    f4 = field_new(2, 2)
    for a in f4.elements()[1:]:
        found = [b for b in f4.elements() if a * b == f4.one]
        assert found == [gf.inv(a)]


@pytest.mark.parametrize("p,k", [(4, 1), (1, 1), (2, 7), (6, 1)])
def test_invalid_fields_rejected(p, k):
    with pytest.raises(ValueError):
        FiniteField(p, k)


def test_zero_has_no_inverse():
    with pytest.raises(ZeroDivisionError):
        gf.inv(field_new(7).zero)


def test_mixed_fields_rejected():
    with pytest.raises(ValueError):
        field_new(3)(1) + field_new(5)(1)


def test_tables_are_read_only():
    f = field_new(5)
    with pytest.raises(ValueError):
        f.add_table[0, 0] = 3


def test_poly_eval_examples():
    f5, f3 = field_new(5), field_new(3)
    assert poly_eval([f5(1), f5(2)], f5(3)).value == 2
    assert poly_eval([f3(1), f3(1), f3(1)], f3(2)).value == 1
    for x in f5.elements():
        assert poly_eval([f5(4)], x).value == 4
    with pytest.raises(ValueError):
        poly_eval([], f5(1))


def test_negative_powers_use_inverse():
    f = field_new(7)
    assert f(3) ** -1 == gf.inv(f(3))
    assert f(3) ** -2 == gf.inv(f(3)) * gf.inv(f(3))


@settings(max_examples=60, deadline=None)
@given(
    q=st.sampled_from(FIELD_ORDERS),
    coeffs=st.lists(st.integers(0, 10**6), min_size=1, max_size=6),
    x=st.integers(0, 10**6),
)
def test_poly_eval_matches_power_sum(q, coeffs, x):
    f = FiniteField(*prime_power(q))
    cs = [f(c % q) for c in coeffs]
    xe = f(x % q)
    naive = f.zero
    for i, c in enumerate(cs):
        term = f.one
        for _ in range(i):
            term = term * xe
        naive = naive + c * term
    assert poly_eval(cs, xe) == naive


def test_supported_orders_up_to_64():
    for q in range(2, 65):
        if prime_power(q):
            assert FiniteField(*prime_power(q)).q == q
