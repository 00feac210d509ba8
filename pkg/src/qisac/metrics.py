"""Information-theoretic quantities of the protocol.

Shannon entropies, classical and quantum Fisher information (closed forms
and numeric evaluations), the eavesdropper's Holevo bound, mutual
informations, secrecy capacities of both protocol variants, the
Fisher-gain comparison between the receiver and the eavesdropper,
detection probabilities against the two explicit attacks, and a bisection
root finder used to locate the security thresholds.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .channel import bell_diagonal_after_one_pass, bell_error_after_two_passes
from .linalg import von_neumann_entropy
from .states import rho_ae

# Numeric-differentiation step and spectral cutoffs, fixed so results are
# reproducible across call sites.
DIFF_STEP = 1e-6
SUPPORT_CUTOFF = 1e-10
PROB_CUTOFF = 1e-12
DEGENERACY_TOL = 1e-7
ROOT_TOL = 1e-8


class IllConditionedError(ArithmeticError):
    """Raised when eigenvalues cross inside a finite-difference stencil."""


def h(x: float) -> float:
    """Binary Shannon entropy in bits."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"probability must be in [0, 1], got {x!r}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return float(-x * np.log2(x) - (1.0 - x) * np.log2(1.0 - x))


def h4(dist) -> float:
    """Shannon entropy in bits of a four-outcome distribution."""
    p = np.asarray(dist, dtype=float)
    if p.shape != (4,):
        raise ValueError(f"expected 4 probabilities, got shape {p.shape}")
    if p.min() < -1e-12 or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"invalid distribution {p!r}")
    nz = p[p > 0.0]
    return float(-(nz * np.log2(nz)).sum())


def cfi_from_probs(prob_fn, theta: float, step: float = DIFF_STEP,
                   cutoff: float = PROB_CUTOFF) -> float:
    """Classical Fisher information of an outcome distribution theta -> p[k].

    Derivatives are central finite differences; outcomes with probability
    below ``cutoff`` are excluded from the sum.
    """
    p0 = np.asarray(prob_fn(theta), dtype=float)
    dp = (np.asarray(prob_fn(theta + step), dtype=float)
          - np.asarray(prob_fn(theta - step), dtype=float)) / (2.0 * step)
    mask = p0 > cutoff
    return float(((dp[mask] ** 2) / p0[mask]).sum())


def cfi_noisy(which: str, e: float, theta: float, n_passes: int,
              denominator: str = "ntheta") -> float:
    """Closed-form per-observable CFI in a depolarizing channel with QBER e.

    The detector contrast is attenuated to (1-2e)^2 and each observable is
    measured on half of the pairs.  The published denominators carry a bare
    theta where dimensional consistency (and the e -> 0 limit N^2/2)
    requires N*theta; the corrected form is the default and the printed
    variant stays available as ``denominator="theta"``.
    """
    if not 0.0 <= e < 0.5:
        raise ValueError(f"QBER must be in [0, 1/2), got {e!r}")
    if denominator not in ("ntheta", "theta"):
        raise ValueError(f"denominator must be 'ntheta' or 'theta', got {denominator!r}")
    kappa2 = (1.0 - 2.0 * e) ** 4
    num_angle = n_passes * theta
    den_angle = num_angle if denominator == "ntheta" else theta
    if which == "O1":
        num = n_passes ** 2 * kappa2 * np.sin(num_angle) ** 2
        den = 2.0 * (1.0 - kappa2 * np.cos(den_angle) ** 2)
    elif which == "O2":
        num = n_passes ** 2 * kappa2 * np.cos(num_angle) ** 2
        den = 2.0 * (1.0 - kappa2 * np.sin(den_angle) ** 2)
    else:
        raise ValueError(f"unknown observable {which!r}, expected 'O1' or 'O2'")
    # Zero numerator or denominator only happens on the degenerate phase set
    # (sin or cos of N*theta vanishing at e = 0), where this observable
    # carries no information.
    if num == 0.0 or den == 0.0:
        return 0.0
    return float(num / den)


def _aligned_stencil(v_center: np.ndarray, w_center: np.ndarray,
                     v_side: np.ndarray, w_side: np.ndarray) -> np.ndarray:
    """Rotate a stencil eigenbasis onto the center one, group by group.

    Degenerate eigenspaces leave the eigenvector basis free up to a unitary
    rotation; the returned basis is the stencil one multiplied by the
    unitary closest to the overlap with the center basis, which makes
    finite differences of eigenvectors well defined.
    """
    n = len(w_center)
    aligned = v_side.copy()
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and abs(w_center[stop] - w_center[stop - 1]) < DEGENERACY_TOL:
            stop += 1
        if np.abs(w_side[start:stop] - w_center[start:stop]).max() > DEGENERACY_TOL * 10 + 1e-4:
            raise IllConditionedError(
                "eigenvalue mismatch across the difference stencil")
        overlap = v_center[:, start:stop].conj().T @ v_side[:, start:stop]
        u, s, vh = np.linalg.svd(overlap)
        if s.min() < 0.5:
            raise IllConditionedError(
                "eigenvalue crossing inside the difference stencil")
        rot = u @ vh
        aligned[:, start:stop] = v_side[:, start:stop] @ rot.conj().T
        start = stop
    return aligned


def qfi(rho_fn, theta: float, step: float = DIFF_STEP,
        support_cutoff: float = SUPPORT_CUTOFF) -> float:
    """Quantum Fisher information of a density-matrix family theta -> rho.

    Evaluates the spectral-decomposition formula

        F = sum_i (d p_i)^2 / p_i + 4 sum_i p_i <d v_i|d v_i>
            - 8 sum_ij p_i p_j / (p_i + p_j) |<v_i|d v_j>|^2

    on the support p_i > ``support_cutoff``, with eigen-derivatives from
    central differences of phase/subspace-aligned eigenbases.
    """
    rho_m = np.asarray(rho_fn(theta - step), dtype=complex)
    rho_0 = np.asarray(rho_fn(theta), dtype=complex)
    rho_p = np.asarray(rho_fn(theta + step), dtype=complex)
    w0, v0 = np.linalg.eigh(rho_0)
    wm, vm = np.linalg.eigh(rho_m)
    wp, vp = np.linalg.eigh(rho_p)
    vm = _aligned_stencil(v0, w0, vm, wm)
    vp = _aligned_stencil(v0, w0, vp, wp)
    dw = (wp - wm) / (2.0 * step)
    dv = (vp - vm) / (2.0 * step)

    support = np.flatnonzero(w0 > support_cutoff)
    term_pop = float((dw[support] ** 2 / w0[support]).sum())
    term_vec = 4.0 * float(sum(w0[i] * np.vdot(dv[:, i], dv[:, i]).real for i in support))
    term_mix = 0.0
    for i in support:
        for j in support:
            ov = np.vdot(v0[:, i], dv[:, j])
            term_mix += 8.0 * w0[i] * w0[j] / (w0[i] + w0[j]) * abs(ov) ** 2
    return term_pop + term_vec - term_mix


def holevo_eve(e: float, n_passes: int, theta: float) -> float:
    """Holevo quantity of Eve's ensemble {1/2, rho_AE per message bit} in bits."""
    if not 0.0 <= e <= 1.0 / 3.0:
        raise ValueError(f"QBER must be in [0, 1/3], got {e!r}")
    lambdas = bell_diagonal_after_one_pass(e)
    rho0 = rho_ae(lambdas, 0, n_passes, theta)
    rho1 = rho_ae(lambdas, 1, n_passes, theta)
    avg = 0.5 * rho0 + 0.5 * rho1
    return von_neumann_entropy(avg) - 0.5 * von_neumann_entropy(rho0) \
        - 0.5 * von_neumann_entropy(rho1)


def mutual_info_ab(e: float) -> float:
    """Mutual information per pair between the legitimate parties: 1 - h(2e(1-e))."""
    if not 0.0 <= e <= 0.5:
        raise ValueError(f"QBER must be in [0, 1/2], got {e!r}")
    return 1.0 - h(2.0 * e * (1.0 - e))


def secrecy_capacity_qisac(e: float) -> float:
    """Lower bound on the integrated protocol's secrecy capacity, bits per pair."""
    if not 0.0 <= e < 0.5:
        raise ValueError(f"QBER must be in [0, 1/2), got {e!r}")
    return 1.0 - h(2.0 * e * (1.0 - e)) - h(e)


def secrecy_capacity_twostep(e: float) -> float:
    """Lower bound on the dense-coding two-step baseline capacity, bits per pair."""
    if not 0.0 <= e <= 1.0 / 3.0:
        raise ValueError(f"QBER must be in [0, 1/3], got {e!r}")
    return 2.0 - h4(bell_error_after_two_passes(e)) - 2.0 * h(e)


def fisher_bob(e: float, theta: float, n_passes: int) -> float:
    """Total Fisher information the receiver gains per pair at phase theta."""
    return cfi_noisy("O1", e, theta, n_passes) + cfi_noisy("O2", e, theta, n_passes)


def fisher_bob_bound(e: float, n_passes: int) -> float:
    """Phase-independent lower bound N^2 (1-2e)^4 / 2 on the receiver's gain."""
    if not 0.0 <= e < 0.5:
        raise ValueError(f"QBER must be in [0, 1/2), got {e!r}")
    return n_passes ** 2 * (1.0 - 2.0 * e) ** 4 / 2.0


def fisher_eve(e: float, n_passes: int) -> float:
    """Eavesdropper's quantum Fisher information N^2 (3e - 4e^2) / (1 - e)."""
    if not 0.0 <= e < 0.5:
        raise ValueError(f"QBER must be in [0, 1/2), got {e!r}")
    return n_passes ** 2 * (3.0 * e - 4.0 * e ** 2) / (1.0 - e)


def detection_probability(kind: str, p_e: float, m: int | None = None,
                          k: int | None = None) -> float:
    """Closed-form probability of catching the eavesdropper during the checks.

    kind "double_cnot" uses the pair budget ``m`` (exponent (1-p_e) m / 2,
    the number of first-round checking pairs); kind "intercept_resend"
    uses the number of intercepted qubits ``k``.
    """
    if not 0.0 < p_e <= 1.0:
        raise ValueError(f"encoded fraction must be in (0, 1], got {p_e!r}")
    base = (5.0 + p_e) / 6.0
    if kind == "double_cnot":
        if m is None or m < 0:
            raise ValueError("double_cnot detection needs the total pair count m >= 0")
        exponent = (1.0 - p_e) * m / 2.0
    elif kind == "intercept_resend":
        if k is None or k < 0:
            raise ValueError("intercept_resend detection needs the intercept count k >= 0")
        exponent = float(k)
    else:
        raise ValueError(f"unknown attack kind {kind!r}")
    return 1.0 - base ** exponent


def threshold_root(f, lo: float, hi: float, tol: float = ROOT_TOL) -> float:
    """Bisection root of a continuous sign-changing function on [lo, hi]."""
    f_lo = f(lo)
    f_hi = f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0.0:
        raise ValueError(f"no sign change on [{lo!r}, {hi!r}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0.0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class CapacityPoint:
    e: float
    cs_qisac: float
    cs_twostep: float


@dataclass(frozen=True)
class FisherReport:
    e: float
    theta: float
    n_passes: int
    f_o1: float
    f_o2: float
    f_bob: float
    f_bob_bound: float
    f_eve: float
    secure: bool


def fisher_report(e: float, theta: float, n_passes: int) -> FisherReport:
    f1 = cfi_noisy("O1", e, theta, n_passes)
    f2 = cfi_noisy("O2", e, theta, n_passes)
    bound = fisher_bob_bound(e, n_passes)
    eve = fisher_eve(e, n_passes)
    return FisherReport(e=e, theta=theta, n_passes=n_passes, f_o1=f1, f_o2=f2,
                        f_bob=f1 + f2, f_bob_bound=bound, f_eve=eve,
                        secure=bound > eve)


def security_report(e: float, n_passes: int = 1, theta: float = 0.8 * np.pi,
                    p_e: float = 0.8, m: int = 320, k: int = 32) -> dict:
    """All security figures of merit for one noise level, as a JSON-ready dict."""
    rep = fisher_report(e, theta, n_passes)
    out = {
        "e": e,
        "n_passes": n_passes,
        "theta": theta,
        "cs_qisac": secrecy_capacity_qisac(e),
        "cs_twostep": secrecy_capacity_twostep(e),
        "mutual_info_ab": mutual_info_ab(e),
        "holevo_eve": holevo_eve(e, n_passes, theta),
        "threshold_qisac": threshold_root(secrecy_capacity_qisac, 0.01, 0.25),
        "threshold_twostep": threshold_root(secrecy_capacity_twostep, 0.01, 0.25),
        "threshold_fisher": threshold_root(
            lambda x: fisher_bob_bound(x, n_passes) - fisher_eve(x, n_passes), 0.01, 0.25),
        "p_det_double_cnot": detection_probability("double_cnot", p_e, m=m),
        "p_det_intercept": detection_probability("intercept_resend", p_e, k=k),
    }
    out.update({k2: v for k2, v in asdict(rep).items() if k2 not in out})
    return out


def security_report_json(e: float, **kwargs) -> str:
    return json.dumps(security_report(e, **kwargs), indent=2, sort_keys=True)
