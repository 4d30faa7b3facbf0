"""Open-destination teleportation on an AME(n, d) resource.

The dealer Bell-measures its resource qudit together with the input qudit. Afterwards
a set A of ceil(n/2) parties picks the destination: they apply a sorting
unitary V that moves the teleported qudit onto their last qudit and leaves
each remaining party B_j maximally correlated with A's j-th qudit. For a
destination B_j, A then Bell-measures (last qudit, A_j), and B_j holds
U_rs^dag U_pq^dag |S>, fixed by applying U_pq U_rs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ame import AmeCandidate, bell_basis, pauli, verify_ame
from .qss import sorting_rows
from .qstate import (
    Branch,
    QuditState,
    apply_global_unitary,
    digits_to_index,
    fidelity_with_mixed,
    index_to_digits,
    measure_product,
    partial_trace,
    tensor,
)

FIDELITY_TOL = 1e-9


@dataclass
class ProtocolTranscript:
    steps: list[dict] = field(default_factory=list)
    final_fidelity: float = float("nan")

    def record(self, actor: str, action: str, **info) -> None:
        self.steps.append({"actor": actor, "action": action, **info})

    def to_json(self) -> dict:
        return {"steps": self.steps, "final_fidelity": self.final_fidelity}


@dataclass
class TeleportBranch:
    dealer_outcome: tuple[int, int]
    relay_outcome: tuple[int, int] | None
    probability: float
    precorrection_fidelity: float
    fidelity: float
    transcript: ProtocolTranscript


@dataclass
class TeleportRun:
    resource: AmeCandidate
    dealer: int
    set_a: tuple[int, ...]
    destination: int
    branches: list[TeleportBranch]
    dealer_states: dict[tuple[int, int], QuditState] = field(repr=False, default_factory=dict)

    @property
    def min_fidelity(self) -> float:
        return min(b.fidelity for b in self.branches)

    @property
    def total_probability(self) -> float:
        return float(sum(b.probability for b in self.branches))

    def to_json(self) -> dict:
        return {
            "n": self.resource.n,
            "d": self.resource.d,
            "dealer": self.dealer,
            "set_a": list(self.set_a),
            "destination": self.destination,
            "min_fidelity": self.min_fidelity,
            "branches": [
                {
                    "dealer_outcome": list(b.dealer_outcome),
                    "relay_outcome": None if b.relay_outcome is None else list(b.relay_outcome),
                    "probability": b.probability,
                    "fidelity": b.fidelity,
                    "transcript": b.transcript.to_json(),
                }
                for b in self.branches
            ],
        }


def dealer_step(resource: AmeCandidate, dealer: int, secret: QuditState) -> list[Branch]:
    """Bell measurement of (input qudit, dealer qudit); post-states on the other parties."""
    n, d = resource.n, resource.d
    if secret.n != 1 or secret.d != d:
        raise ValueError(f"input must be a single qudit of dimension {d}")
    if not 1 <= dealer <= n:
        raise ValueError(f"dealer {dealer} outside 1..{n}")
    joint = tensor(resource.state, secret)
    return measure_product(joint, [(n + 1, dealer)], [bell_basis(d)], discard=True)


def _sorting_unitary(rows: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Unitary sending row vector rows[r] to basis state targets[r].

    When rows span a proper subspace the remaining outputs receive an
    orthonormal basis of its complement.
    """
    dim = rows.shape[1]
    v = np.zeros((dim, dim), dtype=np.complex128)
    v[list(targets)] = rows.conj()
    free = [i for i in range(dim) if i not in set(targets)]
    if free:
        _, s, vh = np.linalg.svd(rows)
        null = vh[len(s) :].conj()  # orthonormal rows w with rows @ w = 0
        v[free] = null
    return v


def _layout(n_rows: int, d: int, m: int, a_size: int, secret_slot: int, partner_slots: Sequence[int]) -> list[int]:
    """Output basis index on A for each sorting row (dealer digit, B digits...)."""
    targets = []
    for r in range(n_rows):
        digits = index_to_digits(r, m, d)
        out = [0] * a_size
        out[secret_slot] = digits[0]
        for slot, k in zip(partner_slots, digits[1:]):
            out[slot] = k
        targets.append(digits_to_index(out, d))
    return targets


def _validate(resource: AmeCandidate, dealer: int, set_a: Sequence[int], destination: int) -> None:
    n = resource.n
    a_size = -(-n // 2)
    if len(set_a) != a_size or len(set(set_a)) != a_size:
        raise ValueError(f"set A must hold {a_size} distinct parties, got {list(set_a)}")
    parties = set(range(1, n + 1))
    if dealer not in parties or destination not in parties or not set(set_a) <= parties:
        raise ValueError("party index out of range")
    if dealer in set_a:
        raise ValueError("the dealer cannot belong to set A")
    if destination == dealer:
        raise ValueError("destination must differ from the dealer")
    if not verify_ame(resource).is_ame:
        raise ValueError("resource state is not AME")


def _run(
    resource: AmeCandidate,
    dealer: int,
    secret: QuditState,
    set_a: Sequence[int],
    destination: int,
) -> TeleportRun:
    n, d = resource.n, resource.d
    m, a_size = n // 2, -(-n // 2)
    set_a = tuple(int(p) for p in set_a)
    b_set = [p for p in range(1, n + 1) if p != dealer and p not in set_a]
    in_a = destination in set_a
    rows = sorting_rows(resource.state, [dealer] + b_set, set_a)
    if in_a:
        secret_slot = set_a.index(destination)
        partner_slots = [i for i in range(a_size) if i != secret_slot][: m - 1]
    else:
        secret_slot = a_size - 1
        partner_slots = list(range(m - 1))
    v = _sorting_unitary(rows, _layout(rows.shape[0], d, m, a_size, secret_slot, partner_slots))

    others = [p for p in range(1, n + 1) if p != dealer]
    pos = {p: others.index(p) + 1 for p in others}
    bell = bell_basis(d)
    branches, dealer_states = [], {}
    for db in dealer_step(resource, dealer, secret):
        pq = tuple(db.outcome)
        dealer_states[pq] = db.state
        state = apply_global_unitary(db.state, [pos[a] for a in set_a], v)
        if in_a:
            relay_branches = [(None, 1.0, state, [pos[destination]])]
        else:
            holder = set_a[secret_slot]
            relay = set_a[partner_slots[b_set.index(destination)]]
            remaining = [p for p in others if p not in (holder, relay)]
            relay_branches = [
                (tuple(rb.outcome), rb.probability, rb.state, [remaining.index(destination) + 1])
                for rb in measure_product(state, [(pos[holder], pos[relay])], [bell], discard=True)
            ]
        for rs, prob, post, dest_pos in relay_branches:
            tr = ProtocolTranscript()
            tr.record(f"dealer {dealer}", "bell_measure", parties=[dealer], outcome=list(pq))
            tr.record("A", "sorting_unitary", parties=list(set_a))
            expected = pauli(d, *pq).matrix.conj().T @ secret.amplitudes
            correction = pauli(d, *pq).matrix
            if rs is not None:
                tr.record("A", "bell_measure", parties=[holder, relay], outcome=list(rs))
                expected = pauli(d, *rs).matrix.conj().T @ expected
                correction = correction @ pauli(d, *rs).matrix
            pre = fidelity_with_mixed(partial_trace(post, dest_pos), QuditState(1, d, expected))
            fixed = apply_global_unitary(post, dest_pos, correction)
            fid = fidelity_with_mixed(partial_trace(fixed, dest_pos), secret)
            uses = [list(pq)] + ([] if rs is None else [list(rs)])
            tr.record(f"party {destination}", "pauli_correction", uses=uses)
            tr.final_fidelity = fid
            branches.append(TeleportBranch(pq, rs, db.probability * prob, pre, fid, tr))
    return TeleportRun(resource, dealer, set_a, destination, branches, dealer_states)


def open_destination_teleport(
    resource: AmeCandidate,
    dealer: int,
    secret: QuditState,
    set_a: Sequence[int],
    destination: int,
) -> TeleportRun:
    """Teleport to a destination outside A, enumerating every outcome pair."""
    _validate(resource, dealer, set_a, destination)
    if destination in set_a:
        raise ValueError("destination lies in A; use choose_destination_in_a")
    return _run(resource, dealer, secret, set_a, destination)


def default_set_a(n: int, dealer: int, destination: int, include_destination: bool) -> tuple[int, ...]:
    a_size = -(-n // 2)
    pool = [p for p in range(1, n + 1) if p not in (dealer, destination)]
    if include_destination:
        return tuple(sorted([destination] + pool[: a_size - 1]))
    return tuple(pool[:a_size])


def choose_destination_in_a(
    resource: AmeCandidate,
    dealer: int,
    secret: QuditState,
    destination_in_a: int,
    set_a: Sequence[int] | None = None,
) -> TeleportRun:
    """Deliver the input to a member of A: V places it on that party directly."""
    if set_a is None:
        if destination_in_a == dealer:
            raise ValueError("destination must differ from the dealer")
        set_a = default_set_a(resource.n, dealer, destination_in_a, include_destination=True)
    _validate(resource, dealer, set_a, destination_in_a)
    if destination_in_a not in set_a:
        raise ValueError("destination is not in A")
    return _run(resource, dealer, secret, set_a, destination_in_a)
