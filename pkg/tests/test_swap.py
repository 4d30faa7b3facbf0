from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ame_lab.ame import bell_basis, catalog, entropy_spectrum, verify_ame
from ame_lab.qstate import apply_global_unitary, fidelity, measure_product, permute_parties, tensor
from ame_lab.swap import (
    check_local_equiv_restricted,
    extract_unitary,
    is_injective,
    permutation_invariance,
    permutation_table,
    reconstruct,
    swap_chain,
    swap_once,
    table_matrix,
)

TOL = 1e-9

# the swap-form AME(4,3) unitary: (a, b) -> (a + b, 2a + b) mod 3
U_TABLE = {
    (0, 0): (0, 0), (0, 1): (1, 1), (0, 2): (2, 2),
    (1, 0): (1, 2), (1, 1): (2, 0), (1, 2): (0, 1),
    (2, 0): (2, 1), (2, 1): (0, 2), (2, 2): (1, 0),
}
# a hand-written U^2 table with repeated images, kept as a negative example
TRANSCRIBED_U2 = {
    (0, 0): (0, 0), (0, 1): (2, 0), (0, 2): (1, 0),
    (1, 0): (0, 1), (1, 1): (2, 1), (1, 2): (0, 1),
    (2, 0): (2, 1), (2, 1): (0, 2), (2, 2): (1, 0),
}


@pytest.fixture(scope="module")
def swap_form():
    return catalog("AME43_swap_form").state


def test_extract_identity_from_epr():
    for d in (2, 3, 5):
        u = extract_unitary(catalog(f"EPR({d})").state).matrix
        assert np.allclose(u, np.eye(d))


def test_extract_swap_form_table(swap_form):
    assert extract_unitary(swap_form).table() == U_TABLE


def test_extract_rejects_non_maximal_split():
    with pytest.raises(ValueError):
        extract_unitary(catalog("GHZ(4,2)").state)
    with pytest.raises(ValueError):
        extract_unitary(catalog("GHZ(3,2)").state)


def test_extract_with_custom_split(swap_form):
    u = extract_unitary(swap_form, split=[3, 4])
    assert fidelity(u.state(), permute_parties(swap_form, [3, 4, 1, 2])) == pytest.approx(1)


def test_reconstruct_round_trip(swap_form):
    for s in [swap_form, catalog("AME43").state, catalog("EPR(4)").state]:
        assert fidelity(reconstruct(extract_unitary(s).matrix, s.d), s) >= 1 - TOL


def test_swap_epr_pairs():
    for d in (2, 3):
        epr = catalog(f"EPR({d})").state
        branches = swap_once(epr, epr)
        assert len(branches) == d * d
        assert fidelity(branches[0].state, epr) >= 1 - TOL
        assert all(b.fidelity >= 1 - TOL for b in branches)


def test_swap_once_matches_generic_simulation(swap_form):
    branches = swap_once(swap_form, swap_form)
    generic = {
        b.outcome: b
        for b in measure_product(tensor(swap_form, swap_form), [(3, 5), (4, 6)], [bell_basis(3)] * 2)
    }
    assert len(branches) == len(generic) == 81
    for b in branches:
        g = generic[b.outcomes]
        assert b.probability == pytest.approx(g.probability, abs=1e-12)
        assert fidelity(b.state, g.state) >= 1 - 1e-12


def test_swap_once_uniform_and_corrected(swap_form):
    branches = swap_once(swap_form, swap_form)
    assert sum(b.probability for b in branches) == pytest.approx(1, abs=1e-9)
    assert all(b.probability == pytest.approx(1 / 81, abs=1e-12) for b in branches)
    assert all(b.correction is not None for b in branches)
    assert all(b.fidelity >= 1 - TOL for b in branches)


def test_zero_branch_is_u_squared(swap_form):
    u = extract_unitary(swap_form).matrix
    zero = swap_once(swap_form, swap_form)[0]
    assert zero.outcomes == ((0, 0), (0, 0))
    assert fidelity(zero.state, reconstruct(u @ u, 3)) >= 1 - TOL


def test_swap_dimension_mismatch(swap_form):
    with pytest.raises(ValueError):
        swap_once(swap_form, catalog("EPR(3)").state)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_chain_follows_power_law(swap_form, m):
    u = extract_unitary(swap_form).matrix
    for rng in (None, np.random.default_rng(m)):
        result = swap_chain([swap_form] * m, rng=rng)
        assert result.u_power_check and result.min_branch_fidelity >= 1 - TOL
        assert fidelity(result.final_state, reconstruct(np.linalg.matrix_power(u, m), 3)) >= 1 - TOL


def test_chain_ame_verdicts(swap_form):
    assert not swap_chain([swap_form] * 2).final_is_ame
    assert swap_chain([swap_form] * 3).final_is_ame


def test_chain_of_epr():
    epr = catalog("EPR(3)").state
    result = swap_chain([epr, epr])
    assert result.u_power_check and fidelity(result.final_state, epr) >= 1 - TOL


def test_chain_json(swap_form):
    data = swap_chain([swap_form] * 2).to_json()
    assert len(data["branches"]) == 1 and len(data["branches"][0]) == 81
    assert {"outcomes", "fidelity", "correction"} <= set(data["branches"][0][0])


def test_u_squared_table(swap_form):
    u = extract_unitary(swap_form).matrix
    u2 = permutation_table(u @ u, 2, 3)
    assert u2 == {(a, b): ((2 * b) % 3, a) for a, b in itertools.product(range(3), repeat=2)}
    assert is_injective(u2)
    assert not is_injective(TRANSCRIBED_U2)
    differing = {k for k in u2 if u2[k] != TRANSCRIBED_U2[k]}
    assert differing == {(1, 2), (2, 0), (2, 1), (2, 2)}
    m = table_matrix(TRANSCRIBED_U2, 3)
    assert not np.allclose(m @ m.T, np.eye(9))


def test_self_equivalence_identity_witness(swap_form):
    res = check_local_equiv_restricted(swap_form, swap_form)
    assert res.verdict == "equivalent"
    assert res.witness.permutation == (1, 2, 3, 4)
    assert res.witness.nontrivial_parties() == []


def test_u_cubed_witness(swap_form):
    u = extract_unitary(swap_form).matrix
    cubed = reconstruct(np.linalg.matrix_power(u, 3), 3)
    res = check_local_equiv_restricted(cubed, swap_form)
    assert res.verdict == "equivalent"
    assert fidelity(res.witness.apply(cubed), swap_form) >= 1 - TOL
    swapped = res.find((1, 2, 4, 3))[0]
    assert swapped.nontrivial_parties() == [4]
    assert swapped.relabelings[3] == (0, 2, 1) and not any(map(any, swapped.phases))
    assert fidelity(swapped.apply(cubed), swap_form) >= 1 - TOL


def test_restricting_permutations(swap_form):
    u = extract_unitary(swap_form).matrix
    cubed = reconstruct(np.linalg.matrix_power(u, 3), 3)
    res = check_local_equiv_restricted(cubed, swap_form, permutations=[(1, 2, 4, 3)])
    assert res.witness.permutation == (1, 2, 4, 3) and res.witness.nontrivial_parties() == [4]


def test_spectra_fast_path():
    res = check_local_equiv_restricted(catalog("AME43").state, catalog("GHZ(4,3)").state)
    assert res.verdict == "unknown" and not res.spectra_match and res.candidates_checked == 0


def test_budget_truncates(swap_form):
    res = check_local_equiv_restricted(swap_form, catalog("AME43").state, max_candidates=10)
    assert res.truncated and res.candidates_checked == 10


def test_shape_mismatch(swap_form):
    with pytest.raises(ValueError):
        check_local_equiv_restricted(swap_form, catalog("EPR(3)").state)


def monomial(d: int, sigma, phases) -> np.ndarray:
    m = np.zeros((d, d), dtype=np.complex128)
    for j in range(d):
        m[sigma[j], j] = np.exp(2j * np.pi * phases[sigma[j]] / d)
    return m


@settings(max_examples=15, deadline=None)
@given(
    order=st.permutations([1, 2, 3, 4]),
    sigmas=st.lists(st.permutations([0, 1, 2]), min_size=4, max_size=4),
    phases=st.lists(st.lists(st.integers(0, 2), min_size=3, max_size=3), min_size=4, max_size=4),
    name=st.sampled_from(["AME43", "AME43_swap_form"]),
)
def test_random_monomial_transform_is_found(order, sigmas, phases, name):
    a = catalog(name).state
    b = permute_parties(a, order)
    for k in range(4):
        b = apply_global_unitary(b, [k + 1], monomial(3, sigmas[k], phases[k]))
    res = check_local_equiv_restricted(a, b)
    assert res.verdict == "equivalent"
    assert fidelity(res.witness.apply(a), b) >= 1 - TOL
    assert np.allclose(entropy_spectrum(a), entropy_spectrum(b), atol=1e-9)


def test_phase_witness_for_qubits():
    a = catalog("GHZ(3,2)").state
    b = apply_global_unitary(a, [2], np.diag([1, -1]))
    res = check_local_equiv_restricted(a, b)
    assert res.verdict == "equivalent" and fidelity(res.witness.apply(a), b) >= 1 - TOL


def test_permutation_invariance_report(swap_form):
    report = permutation_invariance(swap_form)
    assert len(report) == 24
    assert all(r.is_ame for r in report)
    assert any(r.fidelity_with_original < 1 - 1e-6 for r in report)
    assert verify_ame(swap_form).is_ame
