from __future__ import annotations

import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import naive_partial_trace

from ame_lab.ame import bell_basis, catalog, pauli
from ame_lab.qstate import (
    Bipartition,
    DensityMatrix,
    LocalUnitary,
    QuditState,
    apply_global_unitary,
    apply_local_unitary,
    basis_state,
    fidelity,
    load_state,
    measure_product,
    mutual_information,
    partial_trace,
    permute_parties,
    projective_measure,
    random_state,
    sample_branch,
    save_state,
    state_from_json,
    state_to_json,
    subset_entropy,
    tensor,
    trace_distance,
    von_neumann_entropy,
)


def random_instances(count: int, seed: int):
    rng = np.random.default_rng(seed)
    shapes = [(n, d) for d in (2, 3, 4, 5) for n in range(2, 9) if d**n <= 256]
    for i in range(count):
        n, d = shapes[i % len(shapes)]
        state = random_state(n, d, rng)
        size = int(rng.integers(1, n))
        keep = [int(p) for p in rng.permutation(np.arange(1, n + 1))[:size]]
        yield state, keep


def test_partial_trace_matches_element_loop():
    worst = 0.0
    for state, keep in random_instances(50, seed=11):
        worst = max(worst, np.abs(partial_trace(state, keep).matrix - naive_partial_trace(state, keep)).max())
    assert worst < 1e-12


def test_basis_state_indexing():
    assert basis_state(2, 2, [0, 0]).amplitudes[0] == 1
    assert basis_state(4, 3, [1, 2, 0, 1]).amplitudes[46] == 1
    with pytest.raises(ValueError):
        basis_state(1, 5, [5])


def test_tensor_products():
    assert fidelity(tensor(basis_state(1, 2, [0]), basis_state(1, 2, [1])), basis_state(2, 2, [0, 1])) == pytest.approx(1)
    epr = catalog("EPR(3)").state
    t = tensor(epr, basis_state(1, 3, [2]))
    assert t.n == 3 and np.linalg.norm(t.amplitudes) == pytest.approx(1, abs=1e-12)
    with pytest.raises(ValueError):
        tensor(epr, basis_state(1, 2, [0]))


def test_partial_trace_examples():
    ghz = catalog("GHZ(3,2)").state
    assert np.allclose(partial_trace(ghz, [1]).matrix, np.eye(2) / 2)
    ame = catalog("AME43").state
    for pair in itertools.combinations(range(1, 5), 2):
        assert np.allclose(partial_trace(ame, pair).matrix, np.eye(9) / 9, atol=1e-12)
    assert np.allclose(partial_trace(basis_state(2, 2, [0, 1]), [2]).matrix, np.diag([0, 1]))
    with pytest.raises(ValueError):
        partial_trace(ghz, [])


def test_entropy_examples():
    rho = DensityMatrix((3, 3), np.eye(9) / 9)
    assert von_neumann_entropy(rho, 3) == pytest.approx(2.0, abs=1e-12)
    pure = DensityMatrix.from_state(random_state(2, 3, np.random.default_rng(0)))
    assert von_neumann_entropy(pure, 3) == pytest.approx(0.0, abs=1e-9)
    ghz4 = catalog("GHZ(4,2)").state
    assert subset_entropy(ghz4, [1, 2]) == pytest.approx(1.0, abs=1e-9)


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix((2,), np.array([[1, 1], [0, 0]], dtype=complex))
    with pytest.raises(ValueError):
        DensityMatrix((2,), np.diag([1.5, -0.5]).astype(complex))


def test_mutual_information_examples():
    assert mutual_information(basis_state(2, 2, [0, 0]), [1], [2]) == pytest.approx(0, abs=1e-9)
    assert mutual_information(catalog("EPR(4)").state, [1], [2]) == pytest.approx(2.0, abs=1e-9)
    assert mutual_information(catalog("AME43").state, [1], [2]) == pytest.approx(0, abs=1e-9)
    with pytest.raises(ValueError):
        mutual_information(catalog("AME43").state, [1, 2], [2])


def test_unitary_examples():
    s = random_state(3, 3, np.random.default_rng(1))
    assert fidelity(apply_global_unitary(s, [2], np.eye(3)), s) == pytest.approx(1)
    flipped = apply_global_unitary(basis_state(1, 2, [0]), [1], pauli(2, 0, 1).matrix)
    assert abs(flipped.amplitudes[1]) == pytest.approx(1)
    shift = np.roll(np.eye(3), 1, axis=0)  # |j> -> |j+1>
    moved = apply_local_unitary(basis_state(2, 3, [0, 0]), LocalUnitary(2, shift))
    assert fidelity(moved, basis_state(2, 3, [0, 1])) == pytest.approx(1)
    with pytest.raises(ValueError):
        apply_global_unitary(s, [1], np.ones((3, 3)))


def test_bipartition_validation():
    assert Bipartition(4, (1, 3)).subset_b == (2, 4)
    for bad in [(), (1, 2, 3, 4), (1, 1), (5,)]:
        with pytest.raises(ValueError):
            Bipartition(4, bad)


def test_measure_plus_state():
    plus = QuditState(1, 2, np.array([1, 1]) / np.sqrt(2))
    branches = projective_measure(plus, [1], np.eye(2))
    assert [b.outcome for b in branches] == [0, 1]
    assert [b.probability for b in branches] == pytest.approx([0.5, 0.5])
    assert fidelity(branches[1].state, basis_state(1, 2, [1])) == pytest.approx(1)


def test_bell_measure_epr_is_deterministic():
    for d in (2, 3, 5):
        branches = measure_product(catalog(f"EPR({d})").state, [(1, 2)], [bell_basis(d)])
        assert len(branches) == 1
        assert branches[0].outcome == (0, 0) and branches[0].probability == pytest.approx(1)


def test_swap_instance_bell_outcomes_equiprobable():
    s = catalog("AME43_swap_form").state
    joint = tensor(s, s)
    branches = measure_product(joint, [(3, 5)], [bell_basis(3)])
    assert len(branches) == 9
    assert all(b.probability == pytest.approx(1 / 9, abs=1e-12) for b in branches)


def test_measurement_rejects_incomplete_basis():
    with pytest.raises(ValueError):
        projective_measure(basis_state(1, 3, [0]), [1], np.eye(3)[:2])


def test_sampling_is_seeded():
    s = random_state(3, 2, np.random.default_rng(3))
    branches = projective_measure(s, [1, 2], np.eye(4))
    a = sample_branch(branches, np.random.default_rng(9)).outcome
    b = sample_branch(branches, np.random.default_rng(9)).outcome
    assert a == b


def test_fidelity_and_trace_distance_examples():
    s = random_state(2, 3, np.random.default_rng(4))
    assert fidelity(s, s) == pytest.approx(1)
    assert fidelity(basis_state(1, 2, [0]), basis_state(1, 2, [1])) == 0
    mixed = DensityMatrix((2,), np.eye(2) / 2)
    zero = DensityMatrix.from_state(basis_state(1, 2, [0]))
    assert trace_distance(mixed, zero) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        fidelity(s, basis_state(1, 3, [0]))


def test_state_norm_enforced():
    with pytest.raises(ValueError):
        QuditState(1, 2, np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        QuditState(2, 2, np.array([1.0, 0, 0]))


def test_json_round_trip(tmp_path):
    s = random_state(3, 3, np.random.default_rng(5))
    path = tmp_path / "s.json"
    save_state(s, path)
    assert np.allclose(load_state(path).amplitudes, s.amplitudes, atol=1e-15)
    data = state_to_json(s)
    data["amplitudes"] = [[re * (1 + 1e-8), im * (1 + 1e-8)] for re, im in data["amplitudes"]]
    assert np.linalg.norm(state_from_json(data).amplitudes) == pytest.approx(1, abs=1e-14)
    data["amplitudes"] = [[2 * re, 2 * im] for re, im in data["amplitudes"]]
    with pytest.raises(ValueError):
        state_from_json(data)
    with pytest.raises(ValueError):
        state_from_json(json.loads('{"n": 1, "d": 2}'))


def test_permute_parties_moves_digits():
    s = basis_state(3, 3, [0, 1, 2])
    assert fidelity(permute_parties(s, [3, 1, 2]), basis_state(3, 3, [2, 0, 1])) == pytest.approx(1)


shapes = st.sampled_from([(2, 2), (3, 2), (4, 2), (5, 2), (2, 3), (3, 3), (4, 3), (2, 5), (3, 4)])


@settings(max_examples=40, deadline=None)
@given(shape=shapes, seed=st.integers(0, 2**32 - 1), data=st.data())
def test_schmidt_symmetry(shape, seed, data):
    n, d = shape
    s = random_state(n, d, np.random.default_rng(seed))
    subset = data.draw(st.lists(st.integers(1, n), min_size=1, max_size=n - 1, unique=True))
    rest = [p for p in range(1, n + 1) if p not in subset]
    assert subset_entropy(s, subset) == pytest.approx(subset_entropy(s, rest), abs=1e-9)
    assert np.trace(partial_trace(s, subset).matrix).real == pytest.approx(1, abs=1e-10)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@settings(max_examples=25, deadline=None)
@given(shape=shapes, seed=st.integers(0, 2**32 - 1))
def test_local_unitaries_preserve_entropies(shape, seed):
    n, d = shape
    rng = np.random.default_rng(seed)
    s = random_state(n, d, rng)
    t = s
    for party in range(1, n + 1):
        t = apply_global_unitary(t, [party], haar_unitary(d, rng))
    assert np.linalg.norm(t.amplitudes) == pytest.approx(1, abs=1e-10)
    for k in range(1, n):
        for sub in itertools.combinations(range(1, n + 1), k):
            assert subset_entropy(t, sub) == pytest.approx(subset_entropy(s, sub), abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(shape=shapes, seed=st.integers(0, 2**32 - 1))
def test_measurement_probabilities_sum_to_one(shape, seed):
    n, d = shape
    rng = np.random.default_rng(seed)
    s = random_state(n, d, rng)
    branches = projective_measure(s, [1], haar_unitary(d, rng))
    assert sum(b.probability for b in branches) == pytest.approx(1, abs=1e-9)
    for b in branches:
        assert np.linalg.norm(b.state.amplitudes) == pytest.approx(1, abs=1e-10)
