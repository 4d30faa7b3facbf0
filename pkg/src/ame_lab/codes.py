"""Classical block codes stored as explicit codeword lists.

Covers Reed-Solomon (plain and doubly extended), shortening, repetition
codes, the ternary Hamming code, exhaustive minimum distance and the
Singleton-bound MDS test.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .gf import FiniteField, poly_eval

# Pairwise-distance verification budget for reed_solomon (number of codeword pairs).
EXHAUSTIVE_PAIR_BUDGET = 10**6


@dataclass(frozen=True)
class ClassicalCode:
    q: int
    n: int
    codewords: tuple[tuple[int, ...], ...]
    claimed_min_distance: int | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        words = tuple(tuple(int(s) for s in w) for w in self.codewords)
        object.__setattr__(self, "codewords", words)
        if self.q < 2 or self.n < 1:
            raise ValueError(f"invalid code parameters q={self.q}, n={self.n}")
        for w in words:
            if len(w) != self.n:
                raise ValueError(f"codeword {w} has length {len(w)}, expected {self.n}")
            if any(not 0 <= s < self.q for s in w):
                raise ValueError(f"codeword {w} has a symbol outside [0, {self.q})")
        if len(set(words)) != len(words):
            raise ValueError("codewords are not distinct")
        if self.claimed_min_distance is not None:
            actual = min_distance(self)
            if actual != self.claimed_min_distance:
                raise ValueError(f"claimed minimum distance {self.claimed_min_distance} but found {actual}")

    @property
    def size(self) -> int:
        return len(self.codewords)

    def as_array(self) -> np.ndarray:
        return np.array(self.codewords, dtype=np.int64).reshape(self.size, self.n)

    def to_json(self) -> dict:
        return {"q": self.q, "n": self.n, "codewords": [list(w) for w in self.codewords]}

    @classmethod
    def from_json(cls, data: dict) -> ClassicalCode:
        try:
            return cls(int(data["q"]), int(data["n"]), tuple(tuple(w) for w in data["codewords"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed code description: {exc}") from exc


def save_code(code: ClassicalCode, path: str | Path) -> None:
    Path(path).write_text(json.dumps(code.to_json()) + "\n", encoding="utf-8")


def load_code(path: str | Path) -> ClassicalCode:
    return ClassicalCode.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def hamming_distance(a: Sequence[int], b: Sequence[int]) -> int:
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    return sum(x != y for x, y in zip(a, b))


def min_distance(code: ClassicalCode) -> int:
    """Exhaustive minimum pairwise Hamming distance."""
    if code.size < 2:
        raise ValueError("minimum distance needs at least two codewords")
    words = code.as_array()
    best = code.n
    for i in range(code.size - 1):
        dist = np.count_nonzero(words[i + 1 :] != words[i], axis=1).min()
        best = min(best, int(dist))
        if best == 1:
            break
    return best


@dataclass(frozen=True)
class MdsCertificate:
    is_mds: bool
    size: int
    min_distance: int
    singleton_bound: int

    def __bool__(self) -> bool:
        return self.is_mds


def is_mds(code: ClassicalCode) -> MdsCertificate:
    """Singleton-bound equality test: M == q^(n - delta + 1)."""
    delta = min_distance(code)
    bound = code.q ** (code.n - delta + 1)
    return MdsCertificate(code.size == bound, code.size, delta, bound)


def reed_solomon(field: FiniteField, n: int, k: int) -> ClassicalCode:
    """Evaluation code of all polynomials of degree < k.

    Evaluation points are the field elements in index order. n = q + 1 gives
    the doubly extended code whose last coordinate is the x^(k-1) coefficient.
    """
    q = field.q
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if n > q + 1:
        raise ValueError(f"length {n} exceeds q+1={q + 1} for {field!r}")
    extended = n == q + 1
    points = field.elements()[: q if extended else n]
    words = []
    for coeffs in itertools.product(range(q), repeat=k):
        # coeffs[0] is the constant term
        poly = [field(c) for c in coeffs]
        word = [poly_eval(poly, x).value for x in points]
        if extended:
            word.append(coeffs[-1])
        words.append(tuple(word))
    code = ClassicalCode(q, n, tuple(words), name=f"RS[{n},{k}]_{q}")
    if code.size**2 <= EXHAUSTIVE_PAIR_BUDGET:
        delta = min_distance(code)
        if delta != n - k + 1:
            raise ArithmeticError(f"RS construction produced distance {delta}, expected {n - k + 1}")
    return code


def shorten(code: ClassicalCode, position: int, symbol: int) -> ClassicalCode:
    """Keep codewords with `symbol` at 0-based `position` and drop that coordinate."""
    if not 0 <= position < code.n:
        raise ValueError(f"position {position} out of range for length {code.n}")
    if code.n < 2:
        raise ValueError("cannot shorten a length-1 code")
    if not is_mds(code):
        raise ValueError("shortening is only defined here for MDS codes")
    kept = [w[:position] + w[position + 1 :] for w in code.codewords if w[position] == symbol]
    if len(kept) < 2:
        raise ValueError(f"shortening leaves {len(kept)} codeword(s)")
    short = ClassicalCode(code.q, code.n - 1, tuple(kept), name=f"{code.name}|short({position}={symbol})")
    if not is_mds(short):
        raise ArithmeticError("shortening an MDS code produced a non-MDS code")
    return short


def repetition(q: int, n: int) -> ClassicalCode:
    """{00..0, 11..1, ...}: MDS with distance n over any alphabet size."""
    return ClassicalCode(q, n, tuple((s,) * n for s in range(q)), name=f"rep[{n}]_{q}")


def linear_code(q: int, generator: Iterable[Sequence[int]]) -> ClassicalCode:
    """All Z_q-linear combinations of the generator rows (q prime)."""
    gen = np.array(list(generator), dtype=np.int64)
    k, n = gen.shape
    words = sorted({tuple(int(s) for s in (np.array(m) @ gen) % q) for m in itertools.product(range(q), repeat=k)})
    return ClassicalCode(q, n, tuple(words))


def ternary_hamming() -> ClassicalCode:
    """The [4,2,3]_3 code {(i, j, i+j, i+2j)}."""
    words = tuple((i, j, (i + j) % 3, (i + 2 * j) % 3) for i in range(3) for j in range(3))
    return ClassicalCode(3, 4, words, name="hamming[4,2,3]_3")
