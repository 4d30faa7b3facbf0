"""Finite-field arithmetic over GF(p^k) for small orders (q <= 64).

Elements are integer indices in [0, q). For k > 1 the index encodes the
polynomial-basis coefficients in base p, least significant coefficient first:
index = c_0 + c_1 p + ... + c_{k-1} p^{k-1} represents c_0 + c_1 x + ... .
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

MAX_ORDER = 64

# Conway polynomials, coefficients low -> high degree (monic leading term included).
CONWAY_POLYNOMIALS: dict[tuple[int, int], tuple[int, ...]] = {
    (2, 2): (1, 1, 1),  # x^2 + x + 1
    (2, 3): (1, 1, 0, 1),  # x^3 + x + 1
    (2, 4): (1, 1, 0, 0, 1),  # x^4 + x + 1
    (2, 5): (1, 0, 1, 0, 0, 1),  # x^5 + x^2 + 1
    (2, 6): (1, 1, 0, 1, 1, 0, 1),  # x^6 + x^4 + x^3 + x + 1
    (3, 2): (2, 2, 1),  # x^2 + 2x + 2
    (3, 3): (1, 2, 0, 1),  # x^3 + 2x + 1
    (5, 2): (2, 4, 1),  # x^2 + 4x + 2
    (7, 2): (3, 6, 1),  # x^2 + 6x + 3
}


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % f for f in range(2, int(p**0.5) + 1))


def prime_power(q: int) -> tuple[int, int] | None:
    """Return (p, k) with q = p^k, or None if q is not a prime power."""
    if q < 2:
        return None
    for p in range(2, q + 1):
        if q % p == 0:
            k = 0
            while q % p == 0:
                q //= p
                k += 1
            return (p, k) if q == 1 else None
    return None


class FiniteField:
    """The field GF(p^k) with precomputed q x q addition and multiplication tables."""

    def __init__(self, p: int, k: int = 1):
        if not isinstance(p, (int, np.integer)) or not is_prime(int(p)):
            raise ValueError(f"characteristic must be prime, got {p}")
        if k < 1:
            raise ValueError(f"extension degree must be positive, got {k}")
        if p**k > MAX_ORDER:
            raise ValueError(f"field order {p}^{k} exceeds the supported maximum {MAX_ORDER}")
        self.p = int(p)
        self.k = int(k)
        self.q = self.p**self.k
        if k == 1:
            self.irreducible_poly: tuple[int, ...] | None = None
        else:
            self.irreducible_poly = CONWAY_POLYNOMIALS[(self.p, self.k)]
        self._build_tables()

    def _digits(self, a: int) -> list[int]:
        return [(a // self.p**i) % self.p for i in range(self.k)]

    def _index(self, digits: Sequence[int]) -> int:
        return sum(int(c) * self.p**i for i, c in enumerate(digits))

    def _poly_mul(self, a: int, b: int) -> int:
        p, k = self.p, self.k
        da, db = self._digits(a), self._digits(b)
        prod = [0] * (2 * k - 1)
        for i, x in enumerate(da):
            for j, y in enumerate(db):
                prod[i + j] = (prod[i + j] + x * y) % p
        if k > 1:
            mod = self.irreducible_poly
            # reduce by the monic modulus from the top degree down
            for deg in range(2 * k - 2, k - 1, -1):
                c = prod[deg]
                if c:
                    for i in range(k + 1):
                        prod[deg - k + i] = (prod[deg - k + i] - c * mod[i]) % p
        return self._index(prod[:k])

    def _build_tables(self) -> None:
        q = self.q
        add = np.zeros((q, q), dtype=np.int64)
        mul = np.zeros((q, q), dtype=np.int64)
        for a in range(q):
            da = self._digits(a)
            for b in range(q):
                db = self._digits(b)
                add[a, b] = self._index([(x + y) % self.p for x, y in zip(da, db)])
                mul[a, b] = self._poly_mul(a, b)
        neg = np.array([int(np.flatnonzero(add[a] == 0)[0]) for a in range(q)], dtype=np.int64)
        inv = np.zeros(q, dtype=np.int64)
        for a in range(1, q):
            hits = np.flatnonzero(mul[a] == 1)
            if len(hits) != 1:
                raise ArithmeticError(f"GF({self.p}^{self.k}): element {a} has no inverse; modulus not irreducible")
            inv[a] = hits[0]
        for t in (add, mul, neg, inv):
            t.setflags(write=False)
        self.add_table, self.mul_table, self.neg_table, self.inv_table = add, mul, neg, inv

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteField):
            return NotImplemented
        return (self.p, self.k, self.irreducible_poly) == (other.p, other.k, other.irreducible_poly)

    def __hash__(self) -> int:
        return hash((self.p, self.k, self.irreducible_poly))

    def __repr__(self) -> str:
        return f"GF({self.q})" if self.k == 1 else f"GF({self.p}^{self.k})"

    def __len__(self) -> int:
        return self.q

    def __call__(self, value: int) -> FieldElement:
        return FieldElement(value, self)

    def elements(self) -> list[FieldElement]:
        """All elements in canonical index order 0, 1, ..., q-1."""
        return [FieldElement(v, self) for v in range(self.q)]

    @property
    def zero(self) -> FieldElement:
        return FieldElement(0, self)

    @property
    def one(self) -> FieldElement:
        return FieldElement(1, self)


def field_new(p: int, k: int = 1) -> FiniteField:
    return FiniteField(p, k)


class FieldElement:
    __slots__ = ("value", "field")

    def __init__(self, value: int, field: FiniteField):
        value = int(value)
        if not 0 <= value < field.q:
            raise ValueError(f"{value} is not an element index of {field!r}")
        self.value = value
        self.field = field

    def _coerce(self, other: FieldElement | int) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise ValueError(f"mixed-field operands: {self.field!r} and {other.field!r}")
            return other.value
        if isinstance(other, (int, np.integer)):
            return FieldElement(int(other), self.field).value
        return NotImplemented

    def _wrap(self, v: int) -> FieldElement:
        return FieldElement(int(v), self.field)

    def __add__(self, other):
        b = self._coerce(other)
        return self._wrap(self.field.add_table[self.value, b])

    __radd__ = __add__

    def __mul__(self, other):
        b = self._coerce(other)
        return self._wrap(self.field.mul_table[self.value, b])

    __rmul__ = __mul__

    def __neg__(self):
        return self._wrap(self.field.neg_table[self.value])

    def __sub__(self, other):
        b = self._coerce(other)
        return self + self._wrap(self.field.neg_table[b])

    def __rsub__(self, other):
        return -self + other

    def inverse(self) -> FieldElement:
        if self.value == 0:
            raise ZeroDivisionError("inverse of zero")
        return self._wrap(self.field.inv_table[self.value])

    def __truediv__(self, other):
        b = self._coerce(other)
        return self * self._wrap(b).inverse()

    def __pow__(self, e: int) -> FieldElement:
        e = int(e)
        if e < 0:
            return self.inverse() ** (-e)
        result, base = self.field.one, self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other: object) -> bool:
        if isinstance(other, FieldElement):
            return self.field == other.field and self.value == other.value
        if isinstance(other, (int, np.integer)):
            return self.value == int(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.value, self.field))

    def __int__(self) -> int:
        return self.value

    def __index__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"{self.field!r}({self.value})"


def add(a: FieldElement, b: FieldElement | int) -> FieldElement:
    return a + b


def mul(a: FieldElement, b: FieldElement | int) -> FieldElement:
    return a * b


def neg(a: FieldElement) -> FieldElement:
    return -a


def inv(a: FieldElement) -> FieldElement:
    return a.inverse()


def pow(a: FieldElement, e: int) -> FieldElement:  # noqa: A001 - mirrors the field operation name
    return a**e


def poly_eval(coeffs: Sequence[FieldElement], x: FieldElement) -> FieldElement:
    """Horner evaluation of sum_i coeffs[i] * x**i."""
    if len(coeffs) == 0:
        raise ValueError("empty coefficient list")
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        if c.field != x.field or acc.field != x.field:
            raise ValueError("coefficients and point must share a field")
        acc = acc * x + c
    if acc.field != x.field:
        raise ValueError("coefficients and point must share a field")
    return acc
