"""AME state construction, generalized Bell/Pauli operators and the AME verifier."""

from __future__ import annotations

import itertools
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import codes
from .codes import ClassicalCode
from .gf import prime_power, FiniteField
from .qstate import (
    QuditState,
    digits_to_index,
    partial_trace,
    subset_entropy,
    von_neumann_entropy,
)

AME_TOL = 1e-8


def root_of_unity(d: int, exponent: int) -> complex:
    """exp(2 pi i exponent / d) with the exponent reduced mod d first."""
    return complex(np.exp(2j * np.pi * (exponent % d) / d))


# ---------------------------------------------------------------- Pauli / Bell


@dataclass(frozen=True, eq=False)
class GeneralizedPauli:
    d: int
    q_index: int
    p_index: int
    matrix: np.ndarray = field(repr=False)


def pauli(d: int, q: int, p: int) -> GeneralizedPauli:
    """U_qp = sum_j w^(jq) |j><j+p|, w = exp(2 pi i / d)."""
    if not (0 <= q < d and 0 <= p < d):
        raise ValueError(f"Pauli indices ({q}, {p}) out of range for d={d}")
    m = np.zeros((d, d), dtype=np.complex128)
    for j in range(d):
        m[j, (j + p) % d] = root_of_unity(d, j * q)
    m.setflags(write=False)
    return GeneralizedPauli(d, q, p, m)


def pauli_string(d: int, labels: Iterable[tuple[int, int]]) -> np.ndarray:
    """Kronecker product of U_qp over the given (q, p) labels."""
    out = np.ones((1, 1), dtype=np.complex128)
    for q, p in labels:
        out = np.kron(out, pauli(d, q, p).matrix)
    return out


def pauli_decompose(matrix: np.ndarray, d: int, n: int, tol: float = 1e-9):
    """Write `matrix` as phase * (U_{q1p1} x ... x U_{qnpn}) if possible.

    Returns (phase, labels) or None when the matrix is not a scaled Pauli string.
    """
    m = np.asarray(matrix)
    if m.shape != (d**n, d**n):
        raise ValueError("matrix shape does not match n qudits of dimension d")
    # row 0 of a Pauli string has its single entry at column (p_1 .. p_n)
    col = int(np.argmax(np.abs(m[0])))
    ps = [col // d ** (n - 1 - i) % d for i in range(n)]
    qs = []
    for i in range(n):
        row = d ** (n - 1 - i)  # basis digit 1 at position i
        target = digits_to_index([(ps[t] + (1 if t == i else 0)) % d for t in range(n)], d)
        ratio = m[row, target] / m[0, col] if abs(m[0, col]) > tol else 0
        qs.append(int(np.rint(np.angle(ratio) / (2 * np.pi) * d)) % d)
    labels = list(zip(qs, ps))
    candidate = pauli_string(d, labels)
    phase = m[0, col] / candidate[0, col]
    if abs(abs(phase) - 1) > tol or np.abs(m - phase * candidate).max() > tol:
        return None
    return complex(phase), labels


@dataclass(frozen=True, eq=False)
class BellBasis:
    """Rows of `vectors` are |Psi_qp> = d^(-1/2) sum_j w^(jq) |j>|j+p>, row index q*d + p."""

    d: int
    vectors: np.ndarray = field(repr=False)

    @property
    def labels(self) -> list[tuple[int, int]]:
        return [(q, p) for q in range(self.d) for p in range(self.d)]

    def state(self, q: int, p: int) -> QuditState:
        return QuditState(2, self.d, self.vectors[q * self.d + p])


def bell_basis(d: int) -> BellBasis:
    vecs = np.zeros((d * d, d * d), dtype=np.complex128)
    for q in range(d):
        for p in range(d):
            for j in range(d):
                vecs[q * d + p, j * d + (j + p) % d] = root_of_unity(d, j * q) / np.sqrt(d)
    vecs.setflags(write=False)
    return BellBasis(d, vecs)


# ---------------------------------------------------------------- candidates


@dataclass(frozen=True)
class Provenance:
    kind: str  # "from_code" | "catalog" | "user_supplied"
    ref: str = ""


@dataclass(frozen=True, eq=False)
class AmeCandidate:
    state: QuditState
    provenance: Provenance = Provenance("user_supplied")

    @property
    def n(self) -> int:
        return self.state.n

    @property
    def d(self) -> int:
        return self.state.d


def state_from_code(code: ClassicalCode, ref: str | None = None) -> AmeCandidate:
    """Equal superposition M^(-1/2) sum_c |c> over the codewords."""
    if code.size == 0:
        raise ValueError("empty code")
    amps = np.zeros(code.q**code.n, dtype=np.complex128)
    weights = code.q ** np.arange(code.n - 1, -1, -1)
    amps[code.as_array() @ weights] = 1 / np.sqrt(code.size)
    return AmeCandidate(QuditState(code.n, code.q, amps), Provenance("from_code", ref or code.name))


def rs_code_for_ame(n: int, d: int) -> ClassicalCode:
    """The Reed-Solomon MDS code of length n and dimension floor(n/2) over GF(d)."""
    pk = prime_power(d)
    if pk is None:
        raise ValueError(f"d={d} is not a prime power; no Reed-Solomon code")
    if n > d + 1:
        raise ValueError(f"n={n} exceeds d+1={d + 1}")
    return codes.reed_solomon(FiniteField(*pk), n, n // 2)


def ame_from_rs(n: int, d: int) -> AmeCandidate:
    return state_from_code(rs_code_for_ame(n, d))


def ame_from_mds(n: int, d: int) -> AmeCandidate:
    """Repetition code for n <= 3 (any d, so d = 6 works), Reed-Solomon otherwise."""
    if n < 2:
        raise ValueError("need at least two parties")
    if n <= 3:
        return state_from_code(codes.repetition(d, n))
    return ame_from_rs(n, d)


_AME43_SWAP_TERMS = ("0000", "0111", "0222", "1012", "1120", "1201", "2021", "2102", "2210")


def _superposition(n: int, d: int, words: Iterable[Iterable[int]]) -> QuditState:
    amps = np.zeros(d**n, dtype=np.complex128)
    for w in words:
        amps[digits_to_index(list(w), d)] = 1.0
    return QuditState(n, d, amps, normalize=True)


def catalog(name: str) -> AmeCandidate:
    """Named states: 'EPR(d)', 'GHZ(n,d)', 'AME43' and 'AME43_swap_form'."""
    key = name.replace(" ", "")
    if key == "AME43":
        words = [(i, j, (i + j) % 3, (i + 2 * j) % 3) for i in range(3) for j in range(3)]
        state = _superposition(4, 3, words)
    elif key == "AME43_swap_form":
        state = _superposition(4, 3, [[int(c) for c in t] for t in _AME43_SWAP_TERMS])
    elif m := re.fullmatch(r"EPR\((\d+)\)", key):
        d = int(m.group(1))
        state = _superposition(2, d, [(i, i) for i in range(d)])
    elif m := re.fullmatch(r"GHZ\((\d+),(\d+)\)", key):
        n, d = int(m.group(1)), int(m.group(2))
        state = _superposition(n, d, [(i,) * n for i in range(d)])
    else:
        raise KeyError(f"unknown catalog state {name!r}")
    return AmeCandidate(state, Provenance("catalog", key))


CATALOG_NAMES = ("EPR(d)", "GHZ(n,d)", "AME43", "AME43_swap_form")


# ---------------------------------------------------------------- verifier


@dataclass(frozen=True)
class SubsetCheck:
    parties: tuple[int, ...]
    entropy: float
    max_entropy: int
    deviation: float  # max |rho_A - d^-|A| I| element
    passed: bool


@dataclass
class AmeReport:
    n: int
    d: int
    checked_subsets: list[SubsetCheck]
    is_ame: bool
    worst_deviation: float
    routes_agree: bool
    extended_subsets: list[SubsetCheck] = field(default_factory=list)

    def failing(self) -> list[SubsetCheck]:
        return [c for c in self.checked_subsets if not c.passed]

    def to_json(self) -> dict:
        def row(c: SubsetCheck) -> dict:
            return {
                "parties": list(c.parties),
                "entropy": c.entropy,
                "max_entropy": c.max_entropy,
                "deviation": c.deviation,
                "pass": c.passed,
            }

        data = {
            "n": self.n,
            "d": self.d,
            "is_ame": self.is_ame,
            "subsets": [row(c) for c in self.checked_subsets],
            "worst_deviation": self.worst_deviation,
            "routes_agree": self.routes_agree,
        }
        if self.extended_subsets:
            data["extended_subsets"] = [row(c) for c in self.extended_subsets]
        return data


def _check_subset(state: QuditState, subset: tuple[int, ...], tol: float) -> SubsetCheck:
    k = len(subset)
    rho = partial_trace(state, subset)
    entropy = von_neumann_entropy(rho, state.d)
    deviation = float(np.abs(rho.matrix - np.eye(state.d**k) / state.d**k).max())
    return SubsetCheck(subset, entropy, k, deviation, abs(entropy - k) <= tol)


def verify_ame(
    candidate: AmeCandidate | QuditState,
    *,
    tol: float = AME_TOL,
    extended: bool = False,
    threads: int = 1,
) -> AmeReport:
    """Check that every floor(n/2)-party reduction has entropy floor(n/2) dits.

    Each subset also records the largest element deviation of rho_A from the
    scaled identity; `routes_agree` reports whether that independent route
    reaches the same verdict. `extended` additionally checks all smaller subsets.
    """
    state = candidate.state if isinstance(candidate, AmeCandidate) else candidate
    n, d = state.n, state.d
    if n < 2:
        raise ValueError("AME verification needs at least two parties")
    half = n // 2
    subsets = list(itertools.combinations(range(1, n + 1), half))
    if extended:
        smaller = [s for k in range(1, half) for s in itertools.combinations(range(1, n + 1), k)]
    else:
        smaller = []

    def run(s):
        return _check_subset(state, s, tol)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            checks = list(pool.map(run, subsets))
            extra = list(pool.map(run, smaller))
    else:
        checks = [run(s) for s in subsets]
        extra = [run(s) for s in smaller]
    is_ame = all(c.passed for c in checks)
    worst = max(c.deviation for c in checks)
    agree = is_ame == (worst <= tol)
    return AmeReport(n, d, checks, is_ame, worst, agree, extra)


def entropy_spectrum(state: QuditState) -> np.ndarray:
    """Sorted entropies of every nonempty proper subset (a party-permutation invariant)."""
    vals = [
        subset_entropy(state, s)
        for k in range(1, state.n)
        for s in itertools.combinations(range(1, state.n + 1), k)
    ]
    return np.sort(np.array(vals))
