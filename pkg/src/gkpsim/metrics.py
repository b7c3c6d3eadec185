"""Codeword orthonormalization, channel fidelity metrics, CPTP diagnostics,
Bloch-sphere analysis, and the trivial Fock-encoding baselines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import sqrtm

from .logical import LogicalSuperop, pauli_matrix


@dataclass
class OrthoMatrix:
    """Symmetric orthonormalization data for a pair of approximate codewords.

    c_matrix rows express the orthonormalized codewords in terms of the
    normalized non-orthogonal ones; the remaining fields are the scalars the
    construction is built from.
    """

    c_matrix: np.ndarray
    n0: float
    n1: float
    overlap_r: float
    phi: float
    r_plus: float
    r_minus: float

    def as_operator(self) -> np.ndarray:
        """The logical-space operator C_hat with |mu_ortho> = envelope * C_hat |mu_ideal>."""
        return self.c_matrix.T


def gram_from_channel(channel: LogicalSuperop) -> np.ndarray:
    """Codeword Gram matrix G[mu, nu] = tr(E(|nu><mu|)) extracted from a raw
    (non-trace-preserving) logical envelope channel."""
    d = channel.d_total
    mat = channel.matrix()
    g = np.zeros((d, d), dtype=complex)
    for mu in range(d):
        for nu in range(d):
            rho = np.zeros((d, d), dtype=complex)
            rho[nu, mu] = 1.0
            out = (mat @ rho.reshape(-1, order="F")).reshape(d, d, order="F")
            g[mu, nu] = np.trace(out)
    return g


def ortho_matrix_from_gram(g: np.ndarray, phase_floor: float = 1e-14) -> OrthoMatrix:
    """Symmetric (Loewdin) orthonormalization matrix of two nearly orthogonal codewords.

    Normalizes each codeword, then applies the inverse square root of the
    normalized Gram.  phi defaults to 0 when the cross overlap magnitude is
    below phase_floor.
    """
    if g.shape != (2, 2):
        raise ValueError("orthonormalization is defined for qubit codes")
    n0 = np.sqrt(np.real(g[0, 0]))
    n1 = np.sqrt(np.real(g[1, 1]))
    if not (np.isfinite(n0) and np.isfinite(n1)) or min(n0, n1) <= 0:
        raise ValueError("degenerate codewords: Gram matrix is not positive definite")
    overlap = g[0, 1]
    r = abs(overlap) / (n0 * n1)
    if r >= 1:
        raise ValueError("degenerate codewords: normalized overlap >= 1")
    phi = float(np.angle(overlap)) if abs(overlap) > phase_floor else 0.0
    r_plus = 1 / np.sqrt(1 + r) + 1 / np.sqrt(1 - r)
    r_minus = 1 / np.sqrt(1 + r) - 1 / np.sqrt(1 - r)
    c = np.array([
        [r_plus / (2 * n0), np.exp(-1j * phi) * r_minus / (2 * n1)],
        [np.exp(1j * phi) * r_minus / (2 * n0), r_plus / (2 * n1)],
    ])
    return OrthoMatrix(c, n0, n1, r, phi, r_plus, r_minus)


def lowdin_orthonormalize(channel: LogicalSuperop, ortho: OrthoMatrix = None):
    """Orthonormalize the codewords of a raw logical channel.

    When `ortho` is omitted the Gram data is extracted from the channel
    itself, which is exact for the envelope channel; channels of the form
    noise o envelope should pass the OrthoMatrix of the same-Delta envelope
    channel.  Returns (OrthoMatrix, composed trace-preserving channel).
    """
    if ortho is None:
        ortho = ortho_matrix_from_gram(gram_from_channel(channel))
    composed = channel.conjugate_input(ortho.as_operator())
    return ortho, composed


def average_gate_fidelity(channel: LogicalSuperop, tp_tol: float = 1e-6,
                          warn: bool = True) -> float:
    """Average gate fidelity F = (d F_e + 1)/(d + 1) via the entanglement fidelity.

    Warns (and still reports the raw value) if the channel is not trace
    preserving to tp_tol.
    """
    d = channel.d_total
    mat = channel.matrix()
    fe = 0.0 + 0j
    for i in range(d):
        for j in range(d):
            rho = np.zeros((d, d), dtype=complex)
            rho[i, j] = 1.0
            out = (mat @ rho.reshape(-1, order="F")).reshape(d, d, order="F")
            fe += out[i, j]
    fe /= d * d
    if warn:
        defect, _ = cptp_diagnostics(channel)
        if defect > tp_tol:
            import warnings

            warnings.warn(f"channel is not TP (defect {defect:.2e}); fidelity is raw")
    return float(np.real((d * fe + 1) / (d + 1)))


def choi_matrix(channel: LogicalSuperop) -> np.ndarray:
    """J = sum_ij |i><j| (x) E(|i><j|)."""
    d = channel.d_total
    mat = channel.matrix()
    j_out = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            rho = np.zeros((d, d), dtype=complex)
            rho[i, j] = 1.0
            out = (mat @ rho.reshape(-1, order="F")).reshape(d, d, order="F")
            j_out += np.kron(np.outer(np.eye(d)[i], np.eye(d)[j]), out)
    return j_out


def cptp_diagnostics(channel: LogicalSuperop):
    """(tp_defect, min_choi_eigenvalue)."""
    d = channel.d_total
    mat = channel.matrix()
    tp = np.zeros((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            rho = np.zeros((d, d), dtype=complex)
            rho[i, j] = 1.0
            out = (mat @ rho.reshape(-1, order="F")).reshape(d, d, order="F")
            tp[i, j] = np.trace(out)
    tp_defect = float(np.max(np.abs(tp - np.eye(d))))
    j_mat = choi_matrix(channel)
    eig = np.linalg.eigvalsh((j_mat + j_mat.conj().T) / 2)
    return tp_defect, float(eig.min())


# ---------------------------------------------------------------------------
# trivial Fock-encoding baselines (closed form)


def _kraus_to_superop(kraus) -> LogicalSuperop:
    dims = (2,)
    paulis = {u: pauli_matrix(dims, u) for u in [(0, 0), (1, 0), (0, 1), (1, 1)]}
    coeffs = {}
    for k in kraus:
        gam = {u: np.trace(p.conj().T @ k) / 2 for u, p in paulis.items()}
        for u, gu in gam.items():
            for w, gw in gam.items():
                if abs(gu) < 1e-16 or abs(gw) < 1e-16:
                    continue
                key = (u, w)
                coeffs[key] = coeffs.get(key, 0.0) + gu * np.conj(gw)
    return LogicalSuperop(dims, coeffs)


def fock_qubit_baseline(noise: str, param: float) -> LogicalSuperop:
    """Logical channel of the trivial {|0>, |1>} Fock encoding under loss or dephasing.

    noise='loss': amplitude damping with rate gamma = param.
    noise='dephasing': phase damping with coherence factor e^{-sigma^2/2},
    sigma^2 = param (the Gaussian average of e^{i phi}).
    """
    if noise == "loss":
        gamma = param
        if not 0 <= gamma <= 1:
            raise ValueError("loss rate must lie in [0, 1]")
        k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
        k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
        return _kraus_to_superop([k0, k1])
    if noise == "dephasing":
        sigma_sq = param
        if sigma_sq < 0:
            raise ValueError("dephasing variance must be nonnegative")
        lam = np.exp(-sigma_sq / 2)
        k0 = np.sqrt((1 + lam) / 2) * np.eye(2, dtype=complex)
        k1 = np.sqrt((1 - lam) / 2) * np.diag([1.0, -1.0]).astype(complex)
        return _kraus_to_superop([k0, k1])
    raise ValueError(f"unknown baseline noise {noise!r}")


# ---------------------------------------------------------------------------
# Bloch sphere


def bloch_and_octahedron(rho: np.ndarray, trace_tol: float = 1e-9):
    """Bloch vector (r_x, r_y, r_z) of a qubit state and stabilizer-octahedron
    membership |r_x| + |r_y| + |r_z| <= 1."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError("expected a 2x2 density matrix")
    if abs(np.trace(rho) - 1) > trace_tol:
        raise ValueError(f"density matrix must have unit trace, got {np.trace(rho)}")
    sx = np.array([[0, 1], [1, 0]])
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.array([[1, 0], [0, -1]])
    r = np.array([np.real(np.trace(rho @ sx)), np.real(np.trace(rho @ sy)),
                  np.real(np.trace(rho @ sz))])
    inside = bool(np.sum(np.abs(r)) <= 1 + 1e-12)
    return r, inside
