"""Threshold and ramp quantum secret sharing on AME(2m, d) resources.

L dealers each Bell-measure their resource qudit together with one qudit of
the secret; the remaining 2m - L players hold the encoded secret. Any m
players recover it with the sorting unitary V followed by Pauli corrections.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .ame import AmeCandidate, bell_basis, pauli, verify_ame
from .qstate import (
    QuditState,
    apply_global_unitary,
    measure_product,
    mutual_information,
    partial_trace,
    subset_entropy,
    tensor,
)

MI_TOL = 1e-8
GRAM_TOL = 1e-9

AUTHORIZED, FORBIDDEN, INTERMEDIATE = "authorized", "forbidden", "intermediate"


@dataclass(frozen=True, eq=False)
class QssScheme:
    m: int
    L: int
    d: int
    resource: AmeCandidate
    dealer_indices: tuple[int, ...] = ()

    def __post_init__(self):
        dealers = tuple(int(i) for i in self.dealer_indices) or tuple(range(1, self.L + 1))
        object.__setattr__(self, "dealer_indices", dealers)
        if not 1 <= self.L <= self.m:
            raise ValueError(f"need 1 <= L <= m, got L={self.L}, m={self.m}")
        if self.resource.n != 2 * self.m or self.resource.d != self.d:
            raise ValueError(
                f"resource has n={self.resource.n}, d={self.resource.d}; scheme needs n={2 * self.m}, d={self.d}"
            )
        if len(dealers) != self.L or len(set(dealers)) != self.L:
            raise ValueError(f"need {self.L} distinct dealers, got {dealers}")
        if any(not 1 <= i <= 2 * self.m for i in dealers):
            raise ValueError(f"dealer indices {dealers} outside 1..{2 * self.m}")

    @classmethod
    def from_resource(cls, resource: AmeCandidate, L: int = 1, dealers: Sequence[int] = ()) -> QssScheme:
        if resource.n % 2:
            raise ValueError("secret sharing needs an even number of resource parties")
        return cls(resource.n // 2, L, resource.d, resource, tuple(dealers))

    @property
    def players(self) -> tuple[int, ...]:
        return tuple(i for i in range(1, 2 * self.m + 1) if i not in self.dealer_indices)

    def to_json(self, resource_ref: str = "") -> dict:
        return {"m": self.m, "L": self.L, "d": self.d, "resource": resource_ref, "dealers": list(self.dealer_indices)}


@dataclass(frozen=True, eq=False)
class EncodedSecret:
    scheme: QssScheme
    outcomes: tuple[tuple[int, int], ...]
    probability: float
    post_state: QuditState  # parties ordered as scheme.players

    @property
    def secret_dim(self) -> int:
        return self.scheme.d**self.scheme.L

    @property
    def players(self) -> tuple[int, ...]:
        return self.scheme.players


@dataclass
class Recovery:
    state: QuditState
    purity: float
    transcript: list[dict] = field(default_factory=list)


@dataclass(frozen=True)
class SetClassification:
    subset: tuple[int, ...]
    category: str
    mutual_info_dits: float

    def to_json(self) -> dict:
        return {"subset": list(self.subset), "category": self.category, "mutual_info": self.mutual_info_dits}


def purify_secret(L: int, d: int) -> QuditState:
    """d^(-L/2) sum_k |k>_R |k>_S over L reference and L secret qudits (R first)."""
    if L < 1:
        raise ValueError("L must be positive")
    amps = np.zeros(d ** (2 * L), dtype=np.complex128)
    dim = d**L
    amps[np.arange(dim) * dim + np.arange(dim)] = 1.0
    return QuditState(2 * L, d, amps, normalize=True)


def _dealer_measurement(scheme: QssScheme, register: QuditState, secret_offset: int) -> list:
    """Bell-measure (secret qudit i, dealer i) pairs on resource (x) register.

    Secret qudit i of the register is register party secret_offset + i.
    """
    n = 2 * scheme.m
    joint = tensor(scheme.resource.state, register)
    groups = [(n + secret_offset + i + 1, dealer) for i, dealer in enumerate(scheme.dealer_indices)]
    basis = bell_basis(scheme.d)
    return measure_product(joint, groups, [basis] * scheme.L, discard=True)


def _outcome_tuple(outcome, L: int) -> tuple[tuple[int, int], ...]:
    return (tuple(outcome),) if L == 1 else tuple(tuple(o) for o in outcome)


def encode(scheme: QssScheme, secret: QuditState) -> list[EncodedSecret]:
    """Every dealer Bell-measurement branch of encoding `secret` (L qudits)."""
    if secret.n != scheme.L or secret.d != scheme.d:
        raise ValueError(f"secret must be {scheme.L} qudit(s) of dimension {scheme.d}")
    branches = _dealer_measurement(scheme, secret, 0)
    return [
        EncodedSecret(scheme, _outcome_tuple(b.outcome, scheme.L), b.probability, b.state) for b in branches
    ]


def encoded_purification(scheme: QssScheme) -> list[tuple[tuple[tuple[int, int], ...], QuditState]]:
    """Encode the S half of the reference/secret purification.

    Each branch state lives on (players..., R_1..R_L).
    """
    rs = purify_secret(scheme.L, scheme.d)
    branches = _dealer_measurement(scheme, rs, scheme.L)
    return [(_outcome_tuple(b.outcome, scheme.L), b.state) for b in branches]


def sorting_rows(resource: QuditState, row_parties: Sequence[int], col_parties: Sequence[int]) -> np.ndarray:
    """Rows phi(k) of the resource written as d^(-r/2) sum_k |k>_rows |phi(k)>_cols.

    Asserts the rows are orthonormal, i.e. the split is maximally entangled
    from the row side.
    """
    parties = list(row_parties) + list(col_parties)
    if sorted(parties) != list(range(1, resource.n + 1)):
        raise ValueError("row and column parties must partition the resource")
    t = resource.tensor_view().transpose([p - 1 for p in parties])
    rows = t.reshape(resource.d ** len(row_parties), -1) * np.sqrt(resource.d ** len(row_parties))
    gram_dev = np.abs(rows @ rows.conj().T - np.eye(rows.shape[0])).max()
    if gram_dev > GRAM_TOL:
        raise ValueError(f"split is not maximally entangled (Gram deviation {gram_dev:.2e})")
    return rows


def direct_encoding(
    scheme: QssScheme,
    secret: QuditState,
    outcomes: Sequence[tuple[int, int]],
    recovering_set: Sequence[int],
) -> QuditState:
    """Closed-form post-measurement state built from the phi(k) rows and s_k = <k| U^dag |s>."""
    players = scheme.players
    a_set = list(recovering_set)
    b_set = [p for p in players if p not in a_set]
    d, L, m = scheme.d, scheme.L, scheme.m
    rows = sorting_rows(scheme.resource.state, list(scheme.dealer_indices) + b_set, a_set)
    udag = np.ones((1, 1), dtype=np.complex128)
    for q, p in outcomes:
        udag = np.kron(udag, pauli(d, q, p).matrix.conj().T)
    s = udag @ secret.amplitudes
    # amplitude over (B..., A...) = d^-(m-L)/2 sum_{k_D} s[k_D] phi(k_D, k_B)[a]
    coeff = rows.reshape(d**L, d ** (m - L), -1)
    amps = np.einsum("i,ijk->jk", s, coeff) / np.sqrt(d ** (m - L))
    order = b_set + a_set
    t = amps.reshape((d,) * len(order)).transpose(np.argsort([players.index(p) for p in order]))
    return QuditState(len(players), d, t.reshape(-1), normalize=True)


def recover(encoded: EncodedSecret, recovering_set: Sequence[int]) -> Recovery:
    """Apply (U_q1p1 x ... x U_qLpL x 1) V on the m recovering players.

    The recovered secret is read off the first L parties of the recovering set.
    """
    scheme = encoded.scheme
    players = encoded.players
    a_set = [int(p) for p in recovering_set]
    if len(a_set) != scheme.m or len(set(a_set)) != scheme.m:
        raise ValueError(f"recovery needs exactly {scheme.m} distinct players, got {a_set}")
    if any(p not in players for p in a_set):
        raise ValueError(f"recovering set {a_set} is not a subset of players {players}")
    if len(encoded.outcomes) != scheme.L:
        raise ValueError("dealer outcomes are missing")
    d = scheme.d
    b_set = [p for p in players if p not in a_set]
    rows = sorting_rows(scheme.resource.state, list(scheme.dealer_indices) + b_set, a_set)
    positions = [players.index(p) + 1 for p in a_set]
    transcript = [
        {"actor": f"dealer {dl}", "action": "bell_measure", "outcome": list(o)}
        for dl, o in zip(scheme.dealer_indices, encoded.outcomes)
    ]
    state = apply_global_unitary(encoded.post_state, positions, rows.conj())
    transcript.append({"actor": "A", "parties": a_set, "action": "sorting_unitary"})
    for pos, party, (q, p) in zip(positions, a_set, encoded.outcomes):
        state = apply_global_unitary(state, [pos], pauli(d, q, p).matrix)
        transcript.append({"actor": f"player {party}", "action": "pauli_correction", "uses": [q, p]})
    rho = partial_trace(state, positions[: scheme.L])
    eigvals, eigvecs = np.linalg.eigh(rho.matrix)
    vec = eigvecs[:, -1]
    vec = vec * np.exp(-1j * np.angle(vec[np.argmax(np.abs(vec))]))
    return Recovery(QuditState(scheme.L, d, vec, normalize=True), float(eigvals[-1]), transcript)


def _validate_subset(scheme: QssScheme, subset: Iterable[int]) -> tuple[int, ...]:
    sub = tuple(sorted(int(i) for i in subset))
    if not sub or len(set(sub)) != len(sub) or any(i not in scheme.players for i in sub):
        raise ValueError(f"{sub} is not a nonempty set of players {scheme.players}")
    return sub


def categorize(mutual_info: float, L: int, tol: float = MI_TOL) -> str:
    if abs(mutual_info - 2 * L) <= tol:
        return AUTHORIZED
    if abs(mutual_info) <= tol:
        return FORBIDDEN
    return INTERMEDIATE


def classify_set(scheme: QssScheme, subset: Iterable[int], tol: float = MI_TOL) -> SetClassification:
    """I(R:subset) on the resource with the dealer qudits playing the reference R."""
    sub = _validate_subset(scheme, subset)
    info = mutual_information(scheme.resource.state, scheme.dealer_indices, sub)
    return SetClassification(sub, categorize(info, scheme.L, tol), info)


def classify_all(scheme: QssScheme, tol: float = MI_TOL) -> list[SetClassification]:
    players = scheme.players
    return [
        classify_set(scheme, s, tol)
        for k in range(1, len(players) + 1)
        for s in itertools.combinations(players, k)
    ]


def classify_set_encoded(scheme: QssScheme, subset: Iterable[int], tol: float = MI_TOL) -> list[SetClassification]:
    """I(R:subset) on explicitly encoded purifications, one entry per dealer branch."""
    sub = _validate_subset(scheme, subset)
    players = scheme.players
    n_players = len(players)
    ref = range(n_players + 1, n_players + scheme.L + 1)
    local = [players.index(p) + 1 for p in sub]
    out = []
    for _, state in encoded_purification(scheme):
        info = mutual_information(state, ref, local)
        out.append(SetClassification(sub, categorize(info, scheme.L, tol), info))
    return out


# ---------------------------------------------------------------- equivalence checks


@dataclass
class ThresholdReport:
    holds: bool
    ame_verdict: bool
    violations: list[dict]

    @property
    def consistent(self) -> bool:
        return self.holds == self.ame_verdict


def verify_threshold_equivalence(state: QuditState, tol: float = MI_TOL) -> ThresholdReport:
    """Every party as reference: m-sets of the rest carry I = 2 dits, (m-1)-sets carry 0."""
    if state.n % 2:
        raise ValueError("threshold equivalence needs an even number of parties")
    m = state.n // 2
    violations = []
    for r in range(1, state.n + 1):
        rest = [i for i in range(1, state.n + 1) if i != r]
        for size, target in ((m, 2.0), (m - 1, 0.0)):
            for s in itertools.combinations(rest, size):
                info = mutual_information(state, [r], s)
                if abs(info - target) > tol:
                    violations.append({"reference": r, "subset": list(s), "mutual_info": info, "expected": target})
    return ThresholdReport(not violations, verify_ame(state).is_ame, violations)


@dataclass
class RampReport:
    holds: bool
    cuts_ok: bool
    l_sets_ok: bool
    mutual_info_ok: bool
    violations: list[dict]


def verify_ramp_equivalence(state: QuditState, reference_set: Sequence[int], tol: float = MI_TOL) -> RampReport:
    """Maximal entanglement across every cut keeping the reference qudits together.

    Also checks the entropy consequences for the induced (m, L, 2m - L) ramp
    scheme: S(C) = L for L-player sets, I(R:A) = 2L for |A| >= m and
    I(R:B) = 0 for |B| <= m - L.
    """
    if state.n % 2:
        raise ValueError("ramp equivalence needs an even number of parties")
    m = state.n // 2
    ref = sorted(int(i) for i in reference_set)
    L = len(ref)
    if not 1 <= L <= m or len(set(ref)) != L or any(not 1 <= i <= state.n for i in ref):
        raise ValueError(f"reference set {ref} must hold 1..{m} distinct parties")
    players = [i for i in range(1, state.n + 1) if i not in ref]
    violations = []
    cuts_ok = l_ok = mi_ok = True
    for size in range(1, len(players) + 1):
        for x in itertools.combinations(players, size):
            s = subset_entropy(state, x)
            want = min(size, state.n - size)
            if abs(s - want) > tol:
                cuts_ok = False
                violations.append({"check": "cut", "side": list(x), "entropy": s, "expected": want})
            if size == L and abs(s - L) > tol:
                l_ok = False
                violations.append({"check": "l_set", "side": list(x), "entropy": s, "expected": L})
            if size >= m or size <= m - L:
                info = mutual_information(state, ref, x)
                target = 2.0 * L if size >= m else 0.0
                if abs(info - target) > tol:
                    mi_ok = False
                    violations.append({"check": "mutual_info", "side": list(x), "mutual_info": info, "expected": target})
    return RampReport(cuts_ok and l_ok and mi_ok, cuts_ok, l_ok, mi_ok, violations)


def check_probabilities(branches: Sequence, tol: float = 1e-9) -> float:
    total = float(sum(b.probability for b in branches))
    if abs(total - 1) > tol:
        raise ArithmeticError(f"branch probabilities sum to {total}")
    return total

