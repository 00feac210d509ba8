"""Dense complex linear algebra for small Hilbert spaces (dimension 2 to 8).

Everything here works on plain numpy arrays of dtype complex128: kets are
1-d vectors, operators are square matrices.  The validation helpers raise
``ValueError`` when an array does not satisfy the structure a caller claims
for it.  All tolerances used by the library *and* its test suite live in
this module so the two cannot drift apart.

Basis convention: the computational basis of a multi-qubit register is
ordered |00>, |01>, |10>, |11>, ... with the first tensor factor most
significant.
"""

from __future__ import annotations

import numpy as np

# Central numeric tolerances.  VALIDATION_ATOL guards structural checks
# (normalisation, hermiticity, trace), RECONSTRUCTION_ATOL guards results
# that are assembled from spectral data, EIGENVALUE_FLOOR is how negative
# a density-matrix eigenvalue may be before we call it unphysical.
VALIDATION_ATOL = 1e-12
RECONSTRUCTION_ATOL = 1e-10
EIGENVALUE_FLOOR = -1e-10
ENTROPY_CUTOFF = 1e-12

ID2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(m).conj().T


def projector(v: np.ndarray) -> np.ndarray:
    """Rank-one projector |v><v| of a ket."""
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more vectors or matrices."""
    if not ops:
        raise ValueError("tensor() needs at least one operand")
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def assert_normalized(v: np.ndarray, atol: float = VALIDATION_ATOL) -> None:
    v = np.asarray(v)
    nrm = float(np.vdot(v, v).real)
    if abs(nrm - 1.0) > atol:
        raise ValueError(f"vector is not normalized: |v|^2 = {nrm!r}")


def assert_hermitian(m: np.ndarray, atol: float = VALIDATION_ATOL) -> None:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.allclose(m, m.conj().T, rtol=0.0, atol=atol):
        raise ValueError("matrix is not Hermitian within tolerance")


def assert_unitary(m: np.ndarray, atol: float = VALIDATION_ATOL) -> None:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.allclose(m @ m.conj().T, np.eye(m.shape[0]), rtol=0.0, atol=atol):
        raise ValueError("matrix is not unitary within tolerance")


def assert_density(rho: np.ndarray, atol: float = VALIDATION_ATOL) -> None:
    """Check Hermiticity, unit trace and positivity of a density matrix."""
    rho = np.asarray(rho)
    assert_hermitian(rho, atol=atol)
    tr = float(np.trace(rho).real)
    if abs(tr - 1.0) > atol:
        raise ValueError(f"density matrix trace is {tr!r}, expected 1")
    w = np.linalg.eigvalsh(rho)
    if w.min() < EIGENVALUE_FLOOR:
        raise ValueError(f"density matrix has negative eigenvalue {w.min()!r}")


def partial_trace(rho: np.ndarray, dims: list[int] | tuple[int, ...],
                  keep: set[int] | list[int] | tuple[int, ...]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    ``dims`` gives the dimension of each tensor factor in order; their
    product must equal the dimension of ``rho``.  The result is the reduced
    density matrix over the kept factors, in their original order.
    """
    rho = np.asarray(rho, dtype=complex)
    dims = list(dims)
    keep = sorted(set(keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    total = int(np.prod(dims))
    if rho.shape != (total, total):
        raise ValueError(
            f"dims {dims} imply dimension {total}, but rho has shape {rho.shape}")
    assert_density(rho)
    work = rho.reshape(dims + dims)
    cur = list(dims)
    for q in sorted((i for i in range(len(dims)) if i not in keep), reverse=True):
        work = np.trace(work, axis1=q, axis2=q + len(cur))
        cur.pop(q)
    d = int(np.prod(cur)) if cur else 1
    return work.reshape(d, d)


def eig_hermitian(m: np.ndarray):
    """Eigenvalues (descending) and orthonormal eigenvectors of a Hermitian matrix.

    Returns ``(w, vecs)`` where ``w`` is a real 1-d array sorted in
    descending order and ``vecs[i]`` is the eigenvector belonging to
    ``w[i]``.  The reconstruction ``sum_i w[i] |v_i><v_i|`` matches the
    input within RECONSTRUCTION_ATOL.
    """
    m = np.asarray(m, dtype=complex)
    assert_hermitian(m)
    w, v = np.linalg.eigh(m)
    order = np.argsort(w)[::-1]
    w = w[order].real
    vecs = [v[:, i].copy() for i in order]
    return w, vecs


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Von Neumann entropy in bits, with the 0*log(0) = 0 convention."""
    rho = np.asarray(rho, dtype=complex)
    assert_density(rho)
    w = np.linalg.eigvalsh(rho)
    w = w[w > ENTROPY_CUTOFF]
    return float(-(w * np.log2(w)).sum())


def expectation(rho: np.ndarray, obs: np.ndarray) -> float:
    """Tr(rho O) for a density matrix and a Hermitian observable.

    A residual imaginary part above RECONSTRUCTION_ATOL signals numerical
    corruption of the inputs and raises instead of being discarded.
    """
    rho = np.asarray(rho, dtype=complex)
    obs = np.asarray(obs, dtype=complex)
    assert_density(rho)
    assert_hermitian(obs)
    if rho.shape != obs.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {obs.shape}")
    val = complex(np.trace(rho @ obs))
    if abs(val.imag) > RECONSTRUCTION_ATOL:
        raise ValueError(f"expectation has imaginary residue {val.imag!r}")
    return float(val.real)


def embed(op: np.ndarray, dims: list[int] | tuple[int, ...], target: int) -> np.ndarray:
    """Lift an operator acting on one tensor factor to the full space."""
    dims = list(dims)
    op = np.asarray(op, dtype=complex)
    if op.shape != (dims[target], dims[target]):
        raise ValueError(
            f"operator shape {op.shape} does not match subsystem dim {dims[target]}")
    factors = [np.eye(d, dtype=complex) for d in dims]
    factors[target] = op
    return tensor(*factors)
