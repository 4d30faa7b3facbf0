"""Dense qudit state vectors and reduced density matrices.

Parties are numbered 1..n and party 1 is the most significant digit of the
base-d amplitude index. Entropies are in dits (logarithm base d), so k
maximally mixed qudits carry entropy exactly k.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable, Sequence

import numpy as np

ALGEBRA_TOL = 1e-10
ENTROPY_TOL = 1e-9
EIG_CUTOFF = 1e-12
PROB_CUTOFF = 1e-12
LOAD_NORM_TOL = 1e-6


class QuditState:
    """Normalized pure state of n parties with local dimension d."""

    __slots__ = ("n", "d", "amplitudes")

    def __init__(self, n: int, d: int, amplitudes, *, normalize: bool = False):
        if d < 2 or n < 0:
            raise ValueError(f"invalid register shape n={n}, d={d}")
        amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != d**n:
            raise ValueError(f"expected {d**n} amplitudes for n={n}, d={d}, got {amps.size}")
        norm = np.linalg.norm(amps)
        if normalize:
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            amps = amps / norm
        elif abs(norm - 1) > ALGEBRA_TOL:
            raise ValueError(f"state norm {norm:.3e} differs from 1")
        amps.setflags(write=False)
        self.n, self.d, self.amplitudes = int(n), int(d), amps

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape((self.d,) * self.n)

    def amplitude(self, digits: Sequence[int]) -> complex:
        return complex(self.amplitudes[digits_to_index(digits, self.d)])

    def __repr__(self) -> str:
        return f"QuditState(n={self.n}, d={self.d})"


def digits_to_index(digits: Sequence[int], d: int) -> int:
    idx = 0
    for x in digits:
        if not 0 <= x < d:
            raise ValueError(f"digit {x} out of range for d={d}")
        idx = idx * d + int(x)
    return idx


def index_to_digits(index: int, n: int, d: int) -> tuple[int, ...]:
    out = []
    for _ in range(n):
        index, r = divmod(index, d)
        out.append(r)
    return tuple(reversed(out))


@dataclass(frozen=True)
class Bipartition:
    n: int
    subset_a: tuple[int, ...]

    def __post_init__(self):
        a = tuple(sorted(int(i) for i in self.subset_a))
        object.__setattr__(self, "subset_a", a)
        if not a:
            raise ValueError("bipartition side A is empty")
        if len(set(a)) != len(a):
            raise ValueError(f"repeated party indices in {a}")
        if a[0] < 1 or a[-1] > self.n:
            raise ValueError(f"party indices {a} outside 1..{self.n}")
        if len(a) == self.n:
            raise ValueError("bipartition side A must be a proper subset")

    @property
    def subset_b(self) -> tuple[int, ...]:
        return tuple(i for i in range(1, self.n + 1) if i not in self.subset_a)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    dims: tuple[int, ...]
    matrix: np.ndarray
    _eigs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        side = int(np.prod(self.dims)) if self.dims else 1
        if m.shape != (side, side):
            raise ValueError(f"matrix shape {m.shape} does not match dims {self.dims}")
        if np.abs(m - m.conj().T).max() > ALGEBRA_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1) > ALGEBRA_TOL:
            raise ValueError(f"density matrix trace {np.trace(m).real:.12f} != 1")
        eigs = np.linalg.eigvalsh(m)
        if eigs[0] < -ALGEBRA_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {eigs[0]:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", tuple(int(x) for x in self.dims))
        object.__setattr__(self, "_eigs", eigs)

    def eigenvalues(self) -> np.ndarray:
        return self._eigs

    @classmethod
    def from_state(cls, state: QuditState) -> DensityMatrix:
        psi = state.amplitudes
        return cls((state.d,) * state.n, np.outer(psi, psi.conj()))


@dataclass(frozen=True, eq=False)
class LocalUnitary:
    target_party: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        check_unitary(m)
        object.__setattr__(self, "matrix", m)


def check_unitary(m: np.ndarray, tol: float = ALGEBRA_TOL) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"unitary must be square, got shape {m.shape}")
    dev = np.abs(m @ m.conj().T - np.eye(m.shape[0])).max()
    if dev > tol:
        raise ValueError(f"matrix is not unitary (deviation {dev:.2e})")


def _axes(parties: Iterable[int], n: int) -> list[int]:
    axes = [int(p) - 1 for p in parties]
    if len(set(axes)) != len(axes):
        raise ValueError(f"repeated party indices in {list(parties)}")
    for a in axes:
        if not 0 <= a < n:
            raise ValueError(f"party index {a + 1} outside 1..{n}")
    return axes


def _keep_parties(keep, n: int) -> list[int]:
    if isinstance(keep, Bipartition):
        if keep.n != n:
            raise ValueError(f"bipartition over {keep.n} parties applied to {n}-party state")
        keep = keep.subset_a
    keep = [int(i) for i in keep]
    if not keep:
        raise ValueError("keep set is empty")
    return _axes(keep, n)


# ---------------------------------------------------------------- construction


def basis_state(n: int, d: int, digits: Sequence[int]) -> QuditState:
    if len(digits) != n:
        raise ValueError(f"expected {n} digits, got {len(digits)}")
    amps = np.zeros(d**n, dtype=np.complex128)
    amps[digits_to_index(digits, d)] = 1.0
    return QuditState(n, d, amps)


def random_state(n: int, d: int, rng: np.random.Generator) -> QuditState:
    """Haar-random pure state."""
    v = rng.normal(size=d**n) + 1j * rng.normal(size=d**n)
    return QuditState(n, d, v, normalize=True)


def tensor(a: QuditState, b: QuditState) -> QuditState:
    if a.d != b.d:
        raise ValueError(f"local dimension mismatch: {a.d} vs {b.d}")
    return QuditState(a.n + b.n, a.d, np.kron(a.amplitudes, b.amplitudes), normalize=True)


def permute_parties(state: QuditState, order: Sequence[int]) -> QuditState:
    """New state whose party i is party order[i-1] of the input."""
    axes = _axes(order, state.n)
    if len(axes) != state.n:
        raise ValueError("order must list every party exactly once")
    return QuditState(state.n, state.d, state.tensor_view().transpose(axes).reshape(-1))


# ---------------------------------------------------------------- reductions


def _split_matrix(state: QuditState, axes: Sequence[int]) -> np.ndarray:
    """Amplitudes reshaped with the given parties as rows and the rest as columns."""
    rest = [i for i in range(state.n) if i not in axes]
    t = state.tensor_view().transpose(list(axes) + rest)
    return t.reshape(state.d ** len(axes), -1)


def partial_trace(state: QuditState, keep) -> DensityMatrix:
    """rho_keep = Tr_complement |psi><psi|, with kept parties in the order given."""
    axes = _keep_parties(keep, state.n)
    m = _split_matrix(state, axes)
    return DensityMatrix((state.d,) * len(axes), m @ m.conj().T)


def _entropy_from_eigs(eigs: np.ndarray, d: int) -> float:
    if eigs.min(initial=0.0) < -ALGEBRA_TOL:
        raise ValueError(f"negative eigenvalue {eigs.min():.3e}: not positive semidefinite")
    p = eigs[eigs > EIG_CUTOFF]
    return max(0.0, float(-(p * np.log(p)).sum() / np.log(d)))


def von_neumann_entropy(rho: DensityMatrix, base_dim: int | None = None) -> float:
    d = base_dim if base_dim is not None else rho.dims[0]
    return _entropy_from_eigs(rho.eigenvalues(), d)


def subset_entropy(state: QuditState, subset: Iterable[int]) -> float:
    """Entropy of a subset of a pure state, via the smaller Gram matrix of the split."""
    subset = sorted(int(i) for i in subset)
    if not subset or len(subset) == state.n:
        _axes(subset, state.n)
        return 0.0
    m = _split_matrix(state, _axes(subset, state.n))
    gram = m @ m.conj().T if m.shape[0] <= m.shape[1] else m.conj().T @ m
    return _entropy_from_eigs(np.linalg.eigvalsh(gram), state.d)


def mutual_information(state: QuditState, set_x: Iterable[int], set_y: Iterable[int]) -> float:
    """I(X:Y) = S(X) + S(Y) - S(XY) in dits, clamped at zero."""
    x, y = set(int(i) for i in set_x), set(int(i) for i in set_y)
    if x & y:
        raise ValueError(f"sets overlap on parties {sorted(x & y)}")
    value = subset_entropy(state, x) + subset_entropy(state, y) - subset_entropy(state, x | y)
    if value < -ENTROPY_TOL:
        raise ArithmeticError(f"negative mutual information {value:.3e}")
    return max(value, 0.0)


# ---------------------------------------------------------------- unitaries


def apply_global_unitary(state: QuditState, parties: Sequence[int], matrix, *, check: bool = True) -> QuditState:
    """Apply a d^k x d^k unitary to the listed parties (in the listed order)."""
    axes = _axes(parties, state.n)
    m = np.asarray(matrix, dtype=np.complex128)
    if m.shape != (state.d ** len(axes),) * 2:
        raise ValueError(f"matrix shape {m.shape} does not act on {len(axes)} qudits of dimension {state.d}")
    if check:
        check_unitary(m)
    rest = [i for i in range(state.n) if i not in axes]
    perm = axes + rest
    t = state.tensor_view().transpose(perm).reshape(m.shape[0], -1)
    t = (m @ t).reshape((state.d,) * state.n).transpose(np.argsort(perm))
    return QuditState(state.n, state.d, t.reshape(-1))


def apply_local_unitary(state: QuditState, u: LocalUnitary) -> QuditState:
    return apply_global_unitary(state, [u.target_party], u.matrix)


# ---------------------------------------------------------------- measurement


@dataclass(frozen=True, eq=False)
class Branch:
    outcome: Hashable
    probability: float
    state: QuditState


def _as_basis(basis, dim: int) -> tuple[np.ndarray, list]:
    labels = getattr(basis, "labels", None)
    vecs = np.asarray(getattr(basis, "vectors", basis), dtype=np.complex128)
    if vecs.shape != (dim, dim):
        raise ValueError(f"basis of shape {vecs.shape} is not a complete basis of C^{dim}")
    if np.abs(vecs.conj() @ vecs.T - np.eye(dim)).max() > ALGEBRA_TOL:
        raise ValueError("measurement basis is not orthonormal")
    return vecs, list(labels) if labels is not None else list(range(dim))


def measure_product(
    state: QuditState,
    groups: Sequence[Sequence[int]],
    bases: Sequence,
    *,
    discard: bool = True,
) -> list[Branch]:
    """Enumerate every outcome of independent complete projective measurements.

    Group g (a list of parties) is measured in bases[g]; a basis is a square
    array whose rows are the basis vectors, or an object with `vectors` and
    `labels`. The outcome of a branch is the tuple of per-group labels.
    With discard=True the post-measurement state lives on the unmeasured
    parties (in increasing order); otherwise the measured parties are kept,
    collapsed onto the observed basis vectors.
    """
    if len(groups) != len(bases):
        raise ValueError("one basis per measured group is required")
    group_axes = [_axes(g, state.n) for g in groups]
    flat = [a for g in group_axes for a in g]
    if len(set(flat)) != len(flat):
        raise ValueError("measured groups overlap")
    rest = [i for i in range(state.n) if i not in flat]
    d = state.d
    t = state.tensor_view().transpose(flat + rest)
    vec_list, label_list, sizes = [], [], []
    for axes, basis in zip(group_axes, bases):
        vecs, labels = _as_basis(basis, d ** len(axes))
        vec_list.append(vecs)
        label_list.append(labels)
        sizes.append(vecs.shape[0])
    # contract one group at a time; the contracted group index is rolled to the back
    t = t.reshape(sizes + [d ** len(rest)])
    for vecs in vec_list:
        t = np.tensordot(vecs.conj(), t, axes=([1], [0]))
        t = np.moveaxis(t, 0, len(vec_list) - 1)
    rows = t.reshape(-1, d ** len(rest))
    probs = np.einsum("ij,ij->i", rows, rows.conj()).real
    total = probs.sum()
    if abs(total - 1) > ENTROPY_TOL:
        raise ArithmeticError(f"branch probabilities sum to {total}")
    branches = []
    for flat_idx in np.flatnonzero(probs > PROB_CUTOFF):
        multi = np.unravel_index(flat_idx, sizes)
        outcome = tuple(label_list[g][i] for g, i in enumerate(multi))
        residual = rows[flat_idx] / np.sqrt(probs[flat_idx])
        if discard:
            post = QuditState(len(rest), d, residual, normalize=True)
        else:
            full = residual
            for g in reversed(range(len(groups))):
                full = np.kron(vec_list[g][multi[g]], full)
            full = full.reshape((d,) * state.n).transpose(np.argsort(flat + rest))
            post = QuditState(state.n, d, full.reshape(-1), normalize=True)
        branches.append(Branch(outcome[0] if len(groups) == 1 else outcome, float(probs[flat_idx]), post))
    return branches


def projective_measure(state: QuditState, parties: Sequence[int], basis, *, discard: bool = False) -> list[Branch]:
    """All outcomes of measuring `parties` (jointly, in listed order) in a complete orthonormal basis."""
    return measure_product(state, [parties], [basis], discard=discard)


def sample_branch(branches: Sequence[Branch], rng: np.random.Generator) -> Branch:
    """Seeded choice of one measurement branch according to its probability."""
    p = np.array([b.probability for b in branches])
    return branches[int(rng.choice(len(branches), p=p / p.sum()))]


# ---------------------------------------------------------------- distances


def fidelity(a: QuditState, b: QuditState) -> float:
    if (a.n, a.d) != (b.n, b.d):
        raise ValueError("state dimensions differ")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


def fidelity_with_mixed(rho: DensityMatrix, psi: QuditState) -> float:
    """<psi| rho |psi>."""
    v = psi.amplitudes
    if rho.matrix.shape[0] != v.size:
        raise ValueError("state dimensions differ")
    return float(min(1.0, np.vdot(v, rho.matrix @ v).real))


def trace_distance(r1: DensityMatrix, r2: DensityMatrix) -> float:
    if r1.matrix.shape != r2.matrix.shape:
        raise ValueError("density matrix dimensions differ")
    return float(min(1.0, 0.5 * np.abs(np.linalg.eigvalsh(r1.matrix - r2.matrix)).sum()))


# ---------------------------------------------------------------- files


def state_to_json(state: QuditState, **extra) -> dict:
    data = {
        "n": state.n,
        "d": state.d,
        "amplitudes": [[float(z.real), float(z.imag)] for z in state.amplitudes],
    }
    data.update(extra)
    return data


def state_from_json(data: dict) -> QuditState:
    try:
        n, d = int(data["n"]), int(data["d"])
        amps = np.array([complex(float(re), float(im)) for re, im in data["amplitudes"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed state description: {exc}") from exc
    if amps.size != d**n:
        raise ValueError(f"expected {d**n} amplitudes, got {amps.size}")
    norm = np.linalg.norm(amps)
    if abs(norm - 1) > LOAD_NORM_TOL:
        raise ValueError(f"state norm {norm} is not within {LOAD_NORM_TOL} of 1")
    return QuditState(n, d, amps, normalize=True)


def save_state(state: QuditState, path: str | Path, **extra) -> None:
    Path(path).write_text(json.dumps(state_to_json(state, **extra)) + "\n", encoding="utf-8")


def load_state(path: str | Path) -> QuditState:
    return state_from_json(json.loads(Path(path).read_text(encoding="utf-8")))
