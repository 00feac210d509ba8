"""Noise and adversary models.

Depolarizing channels on individual qubits of a shared pair, the
Bell-diagonal parameterization of a twirled collective attack, the
double-CNOT attack, intercept-resend eavesdropping, and samplers for
checking-round outcomes.

All samplers take an explicit ``numpy.random.Generator`` so that a run is
bit-reproducible from its seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import ID2, SIGMA_X, SIGMA_Y, SIGMA_Z, embed, partial_trace, projector, tensor
from .states import BellState, assert_lambda_vec, bell

_PAULIS = (ID2, SIGMA_X, SIGMA_Y, SIGMA_Z)

# Eigenbases of the three check observables; index 0 carries outcome +1.
_SQ2 = 1.0 / np.sqrt(2.0)
BASIS_VECTORS = {
    "x": (np.array([_SQ2, _SQ2], dtype=complex), np.array([_SQ2, -_SQ2], dtype=complex)),
    "y": (np.array([_SQ2, 1j * _SQ2], dtype=complex), np.array([_SQ2, -1j * _SQ2], dtype=complex)),
    "z": (np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)),
}
CHECK_BASES = ("x", "y", "z")


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing channel acting once per physical traversal.

    ``p`` is the depolarizing probability per traversal; the induced
    single-pass check QBER is exactly ``p / 2``.
    """

    p: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"depolarizing probability must be in [0, 1], got {self.p!r}")

    @property
    def qber(self) -> float:
        return self.p / 2.0

    @classmethod
    def from_qber(cls, e: float) -> "NoiseModel":
        if not 0.0 <= e <= 0.5:
            raise ValueError(f"single-pass QBER must be in [0, 1/2], got {e!r}")
        return cls(p=2.0 * e)


@dataclass(frozen=True)
class Adversary:
    """Eavesdropping model applied in-channel during qubit transmissions.

    ``kind`` is one of "none", "collective", "double_cnot",
    "intercept_resend".  A collective attack carries the Bell-component
    weights it imprints; intercept-resend carries the number of attacked
    qubit transmissions.
    """

    kind: str = "none"
    lambdas: tuple[float, float, float, float] | None = None
    intercept_count: int = 0

    def __post_init__(self):
        if self.kind not in ("none", "collective", "double_cnot", "intercept_resend"):
            raise ValueError(f"unknown adversary kind {self.kind!r}")
        if self.kind == "collective":
            if self.lambdas is None:
                raise ValueError("collective adversary needs a lambda vector")
            assert_lambda_vec(np.asarray(self.lambdas))
        if self.kind == "intercept_resend" and self.intercept_count < 0:
            raise ValueError(f"intercept_count must be >= 0, got {self.intercept_count!r}")

    @classmethod
    def none(cls) -> "Adversary":
        return cls(kind="none")

    @classmethod
    def collective(cls, lambdas) -> "Adversary":
        return cls(kind="collective", lambdas=tuple(float(x) for x in lambdas))

    @classmethod
    def double_cnot(cls) -> "Adversary":
        return cls(kind="double_cnot")

    @classmethod
    def intercept_resend(cls, k: int) -> "Adversary":
        return cls(kind="intercept_resend", intercept_count=int(k))


def pauli_channel(rho: np.ndarray, weights, qubit: int, dims=None) -> np.ndarray:
    """Apply a single-qubit Pauli channel with weights (w_I, w_X, w_Y, w_Z)."""
    rho = np.asarray(rho, dtype=complex)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (4,) or weights.min() < -1e-12 or abs(weights.sum() - 1) > 1e-9:
        raise ValueError(f"invalid Pauli weights {weights!r}")
    if dims is None:
        n = int(round(np.log2(rho.shape[0])))
        dims = [2] * n
    out = np.zeros_like(rho)
    for w, pauli in zip(weights, _PAULIS):
        if w == 0.0:
            continue
        op = embed(pauli, dims, qubit)
        out += w * (op @ rho @ op.conj().T)
    return out


def depolarize(rho: np.ndarray, p: float, qubit: int, dims=None) -> np.ndarray:
    """Depolarize one qubit of a density matrix: rho -> (1-p) rho + p I/2 on that factor."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing probability must be in [0, 1], got {p!r}")
    b = p / 4.0
    return pauli_channel(rho, (1.0 - 3.0 * b, b, b, b), qubit, dims=dims)


def single_pass_pauli_weights(e: float) -> np.ndarray:
    """Pauli-twirl weights (w_I, w_X, w_Y, w_Z) of one depolarizing traversal with QBER e."""
    p = 2.0 * e
    b = p / 4.0
    return np.array([1.0 - 3.0 * b, b, b, b])


def bell_diagonal_after_one_pass(e: float) -> np.ndarray:
    """Bell-component weights (psi-, psi+, phi-, phi+) after one noisy traversal.

    Solves the three linear relations between the per-basis check QBERs and
    the Bell weights for the symmetric case eps_x = eps_y = eps_z = e.
    """
    if not 0.0 <= e <= 1.0 / 3.0:
        raise ValueError(f"QBER must be in [0, 1/3], got {e!r}")
    return np.array([1.0 - 1.5 * e, e / 2.0, e / 2.0, e / 2.0])


def bell_error_after_two_passes(e: float) -> np.ndarray:
    """Bell-error distribution (q_I, q_X, q_Y, q_Z) after both qubits traverse the channel.

    Composes two independent single-qubit Pauli twirls with weights
    (a, b, b, b), a = 1 - 3p/4, b = p/4, p = 2e; the net error class acting
    on the pair is the Pauli-group product of the two individual errors.
    """
    if not 0.0 <= e <= 1.0 / 3.0:
        raise ValueError(f"QBER must be in [0, 1/3], got {e!r}")
    p = 2.0 * e
    a = 1.0 - 0.75 * p
    b = 0.25 * p
    q_i = a * a + 3.0 * b * b
    q_err = 2.0 * a * b + 2.0 * b * b
    return np.array([q_i, q_err, q_err, q_err])


# Pauli errors on Bob's qubit map |psi-> to the Bell states
#   I -> psi-, X -> phi-, Y -> phi+, Z -> psi+ ,
# so a target Bell-diagonal (l1, l2, l3, l4) needs weights (l1, l3, l4, l2).
def collective_pauli_weights(lambdas) -> np.ndarray:
    lambdas = np.asarray(lambdas, dtype=float)
    assert_lambda_vec(lambdas)
    return lambdas[[0, 2, 3, 1]]


def double_cnot_joint_state() -> np.ndarray:
    """Pure joint state over A, B, Eve after the first CNOT (B controls Eve's |0>).

    Returns (|01>|1> - |10>|0>) / sqrt(2) as an 8-vector over dims (2, 2, 2).
    """
    v = np.zeros(8, dtype=complex)
    v[0b011] = _SQ2
    v[0b100] = -_SQ2
    return v


def _cnot(dims, control: int, target: int) -> np.ndarray:
    """CNOT between two qubit factors of a multi-factor register."""
    total = int(np.prod(dims))
    op = np.zeros((total, total), dtype=complex)
    for idx in range(total):
        digits = []
        rem = idx
        for d in reversed(dims):
            digits.append(rem % d)
            rem //= d
        digits.reverse()
        if digits[control] == 1:
            digits[target] ^= 1
        out = 0
        for d, dim in zip(digits, dims):
            out = out * dim + d
        op[out, idx] = 1.0
    return op


DOUBLE_CNOT_FIRST = _cnot([2, 2, 2], control=1, target=2)   # B controls E
DOUBLE_CNOT_SECOND = _cnot([2, 2, 2], control=0, target=2)  # A controls E


def joint_outcome_probs(rho_ab: np.ndarray, basis: str) -> np.ndarray:
    """2x2 table of joint Born probabilities; index 0 means outcome +1."""
    if basis not in BASIS_VECTORS:
        raise ValueError(f"unknown basis {basis!r}, expected one of {CHECK_BASES}")
    plus, minus = BASIS_VECTORS[basis]
    probs = np.empty((2, 2))
    for i, va in enumerate((plus, minus)):
        for j, vb in enumerate((plus, minus)):
            v = tensor(va, vb)
            probs[i, j] = max(np.vdot(v, rho_ab @ v).real, 0.0)
    probs /= probs.sum()
    return probs


def _post_attack_pair(adversary: Adversary, rng: np.random.Generator) -> np.ndarray:
    """AB density matrix of one freshly shared pair after the first transit attack."""
    rho = projector(bell(BellState.PSI_MINUS))
    if adversary.kind == "none":
        return rho
    if adversary.kind == "collective":
        return pauli_channel(rho, collective_pauli_weights(adversary.lambdas), qubit=1)
    if adversary.kind == "double_cnot":
        joint = projector(double_cnot_joint_state())
        return partial_trace(joint, [2, 2, 2], keep=[0, 1])
    # intercept-resend: Eve measures B in a random check basis and resends
    basis = CHECK_BASES[rng.integers(3)]
    vecs = BASIS_VECTORS[basis]
    p_plus = float(np.trace(embed(projector(vecs[0]), [2, 2], 1) @ rho).real)
    pick = 0 if rng.random() < p_plus else 1
    proj_b = embed(projector(vecs[pick]), [2, 2], 1)
    collapsed = proj_b @ rho @ proj_b
    return collapsed / np.trace(collapsed).real


_OUTCOME_CACHE: dict[tuple[Adversary, str], np.ndarray] = {}


def sample_check_pair(adversary: Adversary, basis: str,
                      rng: np.random.Generator) -> tuple[int, int]:
    """Sample (alice, bob) outcomes (+1/-1) of one checking pair in a product basis.

    The pair is attacked by ``adversary`` on its first transit over an
    otherwise noiseless channel; with no attack the outcomes are always
    opposite.  An intercept-resend adversary always intercepts the pair
    here (its ``intercept_count`` budget applies at the protocol level).
    """
    if adversary.kind != "intercept_resend":
        key = (adversary, basis)
        flat = _OUTCOME_CACHE.get(key)
        if flat is None:
            probs = joint_outcome_probs(_post_attack_pair(adversary, rng), basis)
            flat = probs.reshape(-1)
            _OUTCOME_CACHE[key] = flat
    else:
        flat = joint_outcome_probs(_post_attack_pair(adversary, rng), basis).reshape(-1)
    pick = int(rng.choice(4, p=flat / flat.sum()))
    alice = +1 if pick // 2 == 0 else -1
    bob = +1 if pick % 2 == 0 else -1
    return alice, bob
