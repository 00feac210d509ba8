"""Named states and operators of the entanglement-based sensing/communication scheme.

Builds the four Bell states, the bit-encoding and Pauli-frame unitaries,
the accumulated-phase unitary, the two detection observables with their
eigensystems, the parameterized probe states, and the joint Alice-Eve
states used in the security analysis.

State equality throughout the package is "up to global phase"; tests
compare via |<a|b>| = 1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .linalg import (
    ID2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    VALIDATION_ATOL,
    embed,
    partial_trace,
    projector,
    tensor,
)

_SQ2 = 1.0 / np.sqrt(2.0)


class BellState(enum.IntEnum):
    """The four Bell states, ordered as their two-bit dense-coding symbols 00..11."""

    PSI_MINUS = 0
    PSI_PLUS = 1
    PHI_MINUS = 2
    PHI_PLUS = 3


def bell(label: BellState | int) -> np.ndarray:
    """Ket of the requested Bell state as a 4-vector."""
    label = BellState(label)
    if label == BellState.PSI_MINUS:
        return np.array([0, _SQ2, -_SQ2, 0], dtype=complex)
    if label == BellState.PSI_PLUS:
        return np.array([0, _SQ2, _SQ2, 0], dtype=complex)
    if label == BellState.PHI_MINUS:
        return np.array([_SQ2, 0, 0, -_SQ2], dtype=complex)
    return np.array([_SQ2, 0, 0, _SQ2], dtype=complex)


def bell_basis() -> list[np.ndarray]:
    return [bell(lbl) for lbl in BellState]


def encoding_unitary(bit: int) -> np.ndarray:
    """Single-qubit message encoder: identity for bit 0, sigma_x for bit 1."""
    if bit == 0:
        return ID2.copy()
    if bit == 1:
        return SIGMA_X.copy()
    raise ValueError(f"bit must be 0 or 1, got {bit!r}")


# Frame tags in two-bit symbol order 00, 01, 10, 11.  Applying the tag's
# unitary to the first qubit of |psi-> yields, up to global phase, the Bell
# state with the same symbol index (FRAME_TO_BELL).
FRAME_TAGS = ("I", "Z", "X", "Y")
FRAME_TO_BELL = {
    "I": BellState.PSI_MINUS,
    "Z": BellState.PSI_PLUS,
    "X": BellState.PHI_MINUS,
    "Y": BellState.PHI_PLUS,
}


def pauli_frame_unitary(tag: str) -> np.ndarray:
    """One of the four dense-coding frame operators I, sigma_z, sigma_x, i*sigma_y."""
    if tag == "I":
        return ID2.copy()
    if tag == "Z":
        return SIGMA_Z.copy()
    if tag == "X":
        return SIGMA_X.copy()
    if tag == "Y":
        return 1j * SIGMA_Y
    raise ValueError(f"unknown frame tag {tag!r}, expected one of {FRAME_TAGS}")


def phase_unitary(theta: float) -> np.ndarray:
    """diag(1, e^{i theta}) -- the single-pass phase imprint on one qubit."""
    if not np.isfinite(theta):
        raise ValueError(f"theta must be finite, got {theta!r}")
    return np.diag([1.0, np.exp(1j * theta)]).astype(complex)


def probe_state(bit: int, n_passes: int, theta: float) -> np.ndarray:
    """Encoded probe after N sensing passes.

    bit 0:  (|01> - e^{iN theta}|10>) / sqrt(2)
    bit 1:  (|00> - e^{iN theta}|11>) / sqrt(2)
    """
    if n_passes < 1:
        raise ValueError(f"n_passes must be >= 1, got {n_passes!r}")
    ph = np.exp(1j * n_passes * theta)
    v = np.zeros(4, dtype=complex)
    if bit == 0:
        v[1] = _SQ2
        v[2] = -_SQ2 * ph
    elif bit == 1:
        v[0] = _SQ2
        v[3] = -_SQ2 * ph
    else:
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    return v


@dataclass(frozen=True)
class Observable:
    """A two-qubit detection observable with its eigensystem.

    ``eigenvectors[i]`` is the normalized state routed to detector ``i+1``
    and ``eigenvalues[i]`` its eigenvalue.  The matrix equals
    ``sum_i eigenvalues[i] |v_i><v_i|``.
    """

    name: str
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: tuple[np.ndarray, ...]


def _make_observable(name: str) -> Observable:
    if name == "O1":
        matrix = tensor(SIGMA_X, SIGMA_X)
        vecs = (
            _SQ2 * np.array([-1, 0, 0, 1], dtype=complex),
            _SQ2 * np.array([1, 0, 0, 1], dtype=complex),
            _SQ2 * np.array([0, 1, 1, 0], dtype=complex),
            _SQ2 * np.array([0, -1, 1, 0], dtype=complex),
        )
    elif name == "O2":
        matrix = tensor(SIGMA_Y, SIGMA_X)
        vecs = (
            _SQ2 * np.array([1j, 0, 0, 1], dtype=complex),
            _SQ2 * np.array([-1j, 0, 0, 1], dtype=complex),
            _SQ2 * np.array([0, 1j, 1, 0], dtype=complex),
            _SQ2 * np.array([0, -1j, 1, 0], dtype=complex),
        )
    else:
        raise ValueError(f"unknown observable {name!r}, expected 'O1' or 'O2'")
    # Eigenvalues read off the operator itself: O|v> = lambda |v>.
    eigs = np.array([np.vdot(v, matrix @ v).real for v in vecs])
    return Observable(name=name, matrix=matrix, eigenvalues=eigs, eigenvectors=vecs)


_OBSERVABLES = {name: _make_observable(name) for name in ("O1", "O2")}


def observable(which: str) -> Observable:
    """Detection observable 'O1' (sigma_x x sigma_x) or 'O2' (sigma_y x sigma_x)."""
    try:
        return _OBSERVABLES[which]
    except KeyError:
        raise ValueError(f"unknown observable {which!r}, expected 'O1' or 'O2'") from None


def detector_distribution(state: np.ndarray, which: str) -> np.ndarray:
    """Born-rule detector probabilities (detector 1..4) for a ket or density matrix."""
    obs = observable(which)
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        probs = np.array([abs(np.vdot(v, state)) ** 2 for v in obs.eigenvectors])
    elif state.ndim == 2:
        probs = np.array([np.vdot(v, state @ v).real for v in obs.eigenvectors])
    else:
        raise ValueError(f"state must be a ket or a density matrix, got ndim {state.ndim}")
    total = probs.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"detector probabilities sum to {total!r}, state not normalized")
    return np.clip(probs, 0.0, 1.0)


def mixed_probe(n_passes: int, theta: float) -> np.ndarray:
    """Equal mixture of the two encoded probe branches (random message bit)."""
    return 0.5 * projector(probe_state(0, n_passes, theta)) + \
        0.5 * projector(probe_state(1, n_passes, theta))


def assert_lambda_vec(lambdas: np.ndarray, atol: float = VALIDATION_ATOL) -> None:
    """Validate a Bell-component probability vector."""
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.shape != (4,):
        raise ValueError(f"lambda vector must have 4 entries, got shape {lambdas.shape}")
    if lambdas.min() < -atol or lambdas.max() > 1 + atol:
        raise ValueError(f"lambda entries out of [0, 1]: {lambdas!r}")
    if abs(lambdas.sum() - 1.0) > atol:
        raise ValueError(f"lambda entries sum to {lambdas.sum()!r}, expected 1")


def lambdas_from_qbers(eps_x: float, eps_y: float, eps_z: float) -> np.ndarray:
    """Bell-component weights from the three check-basis error rates.

    Inverts eps_x = l2 + l4, eps_y = l2 + l3, eps_z = l3 + l4.
    """
    l2 = (eps_x + eps_y - eps_z) / 2.0
    l3 = (eps_y + eps_z - eps_x) / 2.0
    l4 = (eps_x + eps_z - eps_y) / 2.0
    lambdas = np.array([1.0 - l2 - l3 - l4, l2, l3, l4])
    assert_lambda_vec(lambdas)
    return lambdas


def eavesdropper_purification(lambdas: np.ndarray) -> np.ndarray:
    """Joint pure state over A (2), B (2) and Eve's register E (4).

    The Bell-diagonal pair state with weights ``lambdas`` is purified by
    tagging each Bell component with one element of the standard basis of
    Eve's 4-dimensional register.
    """
    assert_lambda_vec(lambdas)
    basis_e = np.eye(4, dtype=complex)
    psi = np.zeros(16, dtype=complex)
    for i, lbl in enumerate(BellState):
        psi += np.sqrt(lambdas[i]) * tensor(bell(lbl), basis_e[i])
    return psi


def rho_ae(lambdas: np.ndarray, bit: int, n_passes: int, theta: float) -> np.ndarray:
    """Alice-Eve joint state (8-dim, A x E) after encoding and N sensing passes.

    Purify the twirled pair state with Eve's register, trace out Bob's
    qubit, then act on the A factor with the encoder followed by the
    accumulated phase U^{N theta} (the composition that matches the probe
    states the legitimate parties actually use).
    """
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    if n_passes < 1:
        raise ValueError(f"n_passes must be >= 1, got {n_passes!r}")
    psi = eavesdropper_purification(lambdas)
    reduced = partial_trace(projector(psi), [2, 2, 4], keep=[0, 2])
    op = phase_unitary(n_passes * theta) @ encoding_unitary(bit)
    full = embed(op, [2, 4], target=0)
    return full @ reduced @ full.conj().T
