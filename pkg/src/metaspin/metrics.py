"""Entanglement and correlation measures for two photon spins.

Entropies are in bits.  Density matrices are 4x4 complex arrays in the
``|++>, |+->, |-+>, |-->`` basis, photon 1 (subsystem A) first.  Discord is
computed for projective measurements on photon 2 (subsystem B).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .qcore import as_state

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
# outcomes rarer than this carry no conditional entropy
MIN_OUTCOME_PROB = 1e-14

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_YY = np.kron(SIGMA_Y, SIGMA_Y)


def as_density(rho, dim: int | None = 4, name: str = "rho") -> np.ndarray:
    """Validate a density matrix: square, Hermitian, unit trace, PSD up to ``PSD_TOL``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {rho.shape}")
    if dim is not None and rho.shape[0] != dim:
        raise ValueError(f"{name} must be {dim}x{dim}, got {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise ValueError(f"{name} has non-finite entries")
    if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
        raise ValueError(f"{name} is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"{name} does not have unit trace (trace = {tr:.12g})")
    if np.linalg.eigvalsh(rho)[0] < -PSD_TOL:
        raise ValueError(f"{name} is not positive semidefinite")
    return rho


def pure_density(state) -> np.ndarray:
    psi = as_state(state)
    return np.outer(psi, psi.conj())


def partial_trace(rho, keep: int) -> np.ndarray:
    """Reduced 2x2 state of photon ``keep`` (0 for photon 1, 1 for photon 2)."""
    r = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    if keep == 0:
        return np.einsum("ijkj->ik", r)
    if keep == 1:
        return np.einsum("ijil->jl", r)
    raise ValueError("keep must be 0 or 1")


def partial_transpose(rho) -> np.ndarray:
    """Transpose photon 2's indices."""
    r = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    return r.transpose(0, 3, 2, 1).reshape(4, 4)


def concurrence_pure(state) -> float:
    """``2|ad - bc|`` for amplitudes ``(a, b, c, d)``."""
    a, b, c, d = as_state(state)
    return float(min(1.0, 2.0 * abs(a * d - b * c)))


def concurrence_mixed(rho) -> float:
    """Wootters concurrence ``max(0, l1 - l2 - l3 - l4)``.

    The ``l_i`` are the square roots of the eigenvalues of
    ``rho (sy x sy) rho* (sy x sy)``.  They are obtained here as singular
    values of ``F^T (sy x sy) F`` with ``rho = F F^dagger``, which avoids
    taking square roots of eigenvalues that are zero up to rounding.
    """
    rho = as_density(rho)
    w, V = np.linalg.eigh(rho)
    F = V * np.sqrt(np.clip(w, 0.0, None))
    lam = np.linalg.svd(F.T @ _YY @ F, compute_uv=False)
    lam = np.sort(lam)[::-1]
    return float(min(1.0, max(0.0, lam[0] - lam[1] - lam[2] - lam[3])))


def _entropy_of_spectrum(p) -> float:
    p = np.asarray(p, dtype=float)
    p = np.where((p < 0) & (p >= -PSD_TOL), 0.0, p)
    p = p[p > 0]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def von_neumann_entropy(rho) -> float:
    """``-sum(l log2 l)`` over the spectrum, for 4x4 or reduced 2x2 states."""
    rho = np.asarray(rho, dtype=complex)
    rho = as_density(rho, dim=None)
    return _entropy_of_spectrum(np.linalg.eigvalsh(rho))


def mutual_information(rho) -> float:
    """``S(rho_A) + S(rho_B) - S(rho)``."""
    rho = as_density(rho)
    value = (von_neumann_entropy(partial_trace(rho, 0))
             + von_neumann_entropy(partial_trace(rho, 1))
             - von_neumann_entropy(rho))
    return max(0.0, value)


@dataclass(frozen=True)
class MeasurementBasis:
    """Projective qubit measurement along the Bloch direction (theta, phi)."""

    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi):
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        if not (0.0 <= self.phi < 2 * math.pi):
            raise ValueError(f"phi must lie in [0, 2pi), got {self.phi}")

    @property
    def direction(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])

    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        """``(I + n.sigma)/2`` and ``(I - n.sigma)/2``."""
        nx, ny, nz = self.direction
        n_sigma = nx * SIGMA_X + ny * SIGMA_Y + nz * SIGMA_Z
        eye = np.eye(2, dtype=complex)
        return 0.5 * (eye + n_sigma), 0.5 * (eye - n_sigma)


def _basis_kets(theta, phi):
    """Eigenvectors of n.sigma for arrays of angles, shape (..., 2, 2): [outcome, component]."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    e = np.exp(1j * phi)
    plus = np.stack([c + 0j, e * s], axis=-1)
    minus = np.stack([-s + 0j, e * c], axis=-1)
    return np.stack([plus, minus], axis=-2)


def _conditional_entropies(rho, theta, phi) -> np.ndarray:
    """Vectorised ``sum_k p_k S(rho_A|k)`` over arrays of measurement angles on photon 2."""
    r = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    kets = _basis_kets(theta, phi)
    # unnormalised post-measurement state of photon 1: <n|_B rho |n>_B
    blocks = np.einsum("...kb,abcd,...kd->...kac", kets.conj(), r, kets)
    p = np.real(blocks[..., 0, 0] + blocks[..., 1, 1])
    a = np.real(blocks[..., 0, 0])
    d = np.real(blocks[..., 1, 1])
    off = np.abs(blocks[..., 0, 1])
    disc = np.sqrt((a - d) ** 2 + 4 * off ** 2)
    lam = np.stack([(p + disc) / 2, (p - disc) / 2], axis=-1)
    safe_p = np.where(p > MIN_OUTCOME_PROB, p, 1.0)
    q = np.clip(lam / safe_p[..., None], 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.sum(np.where(q > 0, q * np.log2(q), 0.0), axis=-1)
    h = np.where(p > MIN_OUTCOME_PROB, h, 0.0)
    return np.sum(p * h, axis=-1)


def conditional_entropy_after_measurement(rho, basis: MeasurementBasis) -> float:
    """Average entropy of photon 1 after measuring photon 2 in ``basis``."""
    rho = as_density(rho)
    return float(_conditional_entropies(rho, basis.theta, basis.phi))


def _optimal_conditional_entropy(rho, grid: int, xatol: float = 1e-10):
    thetas = np.linspace(0.0, math.pi, grid)
    phis = np.linspace(0.0, 2 * math.pi, grid, endpoint=False)
    T, P = np.meshgrid(thetas, phis, indexing="ij")
    values = _conditional_entropies(rho, T, P)
    k = int(np.argmin(values))
    best = float(values.flat[k])
    start = np.array([T.flat[k], P.flat[k]])

    # periodic in both angles, so the refinement may leave the canonical ranges
    def objective(x):
        return float(_conditional_entropies(rho, x[0], x[1]))

    res = minimize(objective, start, method="Nelder-Mead",
                   options={"xatol": xatol, "fatol": 1e-15, "maxiter": 2000,
                            "initial_simplex": start + np.array([[0, 0], [0.5, 0], [0, 0.5]]) * (2 * math.pi / grid)})
    return min(best, float(res.fun))


def classical_correlation(rho, grid: int = 64) -> float:
    """``S(rho_A) - min_basis S(A | measured B)``."""
    rho = as_density(rho)
    return von_neumann_entropy(partial_trace(rho, 0)) - _optimal_conditional_entropy(rho, grid)


def quantum_discord(rho, grid: int = 64) -> float:
    """Mutual information minus the best classical correlation from measuring photon 2.

    The measurement direction is searched on a ``grid x grid`` mesh in
    (theta, phi) and then polished with Nelder-Mead.
    """
    if grid < 32:
        raise ValueError(f"grid must be >= 32, got {grid}")
    rho = as_density(rho)
    d = mutual_information(rho) - classical_correlation(rho, grid)
    if d < 0:
        if d < -1e-8:
            raise ArithmeticError(f"negative discord {d:.3e}")
        d = 0.0
    return float(d)


def ppt_min_eigenvalue(rho) -> float:
    """Smallest eigenvalue of the partial transpose; negative iff entangled."""
    rho = as_density(rho)
    return float(np.linalg.eigvalsh(partial_transpose(rho))[0])
