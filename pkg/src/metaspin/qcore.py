"""Two-photon spin states, the metasurface Hamiltonian and its time evolution.

States are length-4 complex numpy arrays over the ordered basis
``|++>, |+->, |-+>, |-->`` (photon 1 first).  Natural units are used
internally (hbar = 1): frequencies and couplings in rad/s, times in s.
``SystemParams.hbar_scale`` only rescales the reported energies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

NORM_TOL = 1e-9

BASIS_LABELS = ("++", "+-", "-+", "--")

PP = np.array([1, 0, 0, 0], dtype=complex)
PM = np.array([0, 1, 0, 0], dtype=complex)
MP = np.array([0, 0, 1, 0], dtype=complex)
MM = np.array([0, 0, 0, 1], dtype=complex)

#: (|+-> - i|-+>)/sqrt(2), reached from |+-> at g*t = pi/4.
BELL_STATE = np.array([0, 1, -1j, 0], dtype=complex) / math.sqrt(2)

# entries of H that must vanish: everything except the diagonal and (1,2)/(2,1)
_OFF_PATTERN = np.ones((4, 4), dtype=bool)
_OFF_PATTERN[np.diag_indices(4)] = False
_OFF_PATTERN[1, 2] = _OFF_PATTERN[2, 1] = False


@dataclass(frozen=True)
class SystemParams:
    """Photon frequencies, metasurface coupling and the energy display scale."""

    omega0: float
    omega1: float
    g: float
    hbar_scale: float = 1.0

    def __post_init__(self):
        for name in ("omega0", "omega1", "g", "hbar_scale"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.g < 0:
            raise ValueError(f"coupling g must be >= 0, got {self.g}")
        if self.omega0 < 0 or self.omega1 < 0:
            raise ValueError("photon frequencies must be >= 0")
        if self.hbar_scale <= 0:
            raise ValueError("hbar_scale must be positive")

    @classmethod
    def resonant(cls, g: float, omega: float = 0.0, hbar_scale: float = 1.0) -> SystemParams:
        """Degenerate photons (omega0 == omega1), the regime of the closed-form Bell result."""
        return cls(omega, omega, g, hbar_scale)

    @property
    def is_resonant(self) -> bool:
        return self.omega0 == self.omega1

    @property
    def detuning(self) -> float:
        """Half the frequency difference, (omega0 - omega1)/2."""
        return 0.5 * (self.omega0 - self.omega1)


class EigenSystem(NamedTuple):
    """Eigenvalues (energy units) and eigenvectors stored as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_state(state, name: str = "state") -> np.ndarray:
    """Return ``state`` as a complex 4-vector, checking shape, finiteness and norm."""
    psi = np.asarray(state, dtype=complex)
    if psi.shape != (4,):
        raise ValueError(f"{name} must have 4 amplitudes, got shape {psi.shape}")
    if not np.all(np.isfinite(psi)):
        raise ValueError(f"{name} has non-finite amplitudes")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"{name} is not normalized (norm = {norm:.12g})")
    return psi


def build_hamiltonian(params: SystemParams) -> np.ndarray:
    """Assemble the 4x4 Hamiltonian: free photon energies plus spin exchange.

    The diagonal is ``hbar*(omega0+omega1, omega0, omega1, omega0+omega1)`` and
    the coupling ``hbar*g`` connects ``|+->`` and ``|-+>`` only.
    """
    hb = params.hbar_scale
    w0, w1 = params.omega0, params.omega1
    H = np.zeros((4, 4), dtype=complex)
    H[0, 0] = H[3, 3] = hb * (w0 + w1)
    H[1, 1] = hb * w0
    H[2, 2] = hb * w1
    H[1, 2] = H[2, 1] = hb * params.g
    return H


def _check_structure(H) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    if H.shape != (4, 4):
        raise ValueError(f"Hamiltonian must be 4x4, got {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ValueError("Hamiltonian has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(H))))
    if np.max(np.abs(H - H.conj().T)) > 1e-14 * scale:
        raise ValueError("Hamiltonian is not Hermitian")
    if np.any(np.abs(H[_OFF_PATTERN]) > 0):
        raise ValueError("Hamiltonian couples states other than |+-> and |-+>")
    return H


def eigensystem(H) -> EigenSystem:
    """Closed-form eigen-decomposition exploiting the block structure of ``H``.

    ``|++>`` and ``|-->`` are eigenvectors of their own diagonal entries.  The
    central block ``[[a, b], [b*, d]]`` gives ``mean +/- sqrt(delta**2 + |b|**2)``
    with ``mean = (a+d)/2`` and ``delta = (a-d)/2``; on resonance these are
    ``mean +/- |b|`` with eigenvectors ``(|+-> +/- |-+>)/sqrt(2)``.

    Eigenvalues are ordered as ``[E(|++>), E+, E-, E(|-->)]``.  With no coupling
    the standard basis vectors are returned.
    """
    H = _check_structure(H)
    a, d = H[1, 1].real, H[2, 2].real
    b = H[1, 2]
    mean = 0.5 * (a + d)
    delta = 0.5 * (a - d)
    root = math.hypot(delta, abs(b))

    vecs = np.zeros((4, 4), dtype=complex)
    vecs[0, 0] = 1.0
    vecs[3, 3] = 1.0
    if b == 0:
        # ordered so column 1 carries the upper eigenvalue
        hi, lo = (1, 2) if delta >= 0 else (2, 1)
        vecs[hi, 1] = 1.0
        vecs[lo, 2] = 1.0
    elif delta >= 0:
        # (root + delta) is never small on this branch
        up = np.array([root + delta, np.conj(b)])
        down = np.array([b, -(root + delta)])
        vecs[1:3, 1] = up / np.linalg.norm(up)
        vecs[1:3, 2] = down / np.linalg.norm(down)
    else:
        up = np.array([b, root - delta])
        down = np.array([root - delta, -np.conj(b)])
        vecs[1:3, 1] = up / np.linalg.norm(up)
        vecs[1:3, 2] = down / np.linalg.norm(down)

    vals = np.array([H[0, 0].real, mean + root, mean - root, H[3, 3].real])
    return EigenSystem(vals, vecs)


def _propagate(psi0: np.ndarray, es: EigenSystem, t: float, hbar: float) -> np.ndarray:
    coeffs = es.eigenvectors.conj().T @ psi0
    phases = np.exp(-1j * es.eigenvalues * (t / hbar))
    return es.eigenvectors @ (phases * coeffs)


def evolve_analytic(state0, params: SystemParams, t: float) -> np.ndarray:
    """Evolve ``state0`` for time ``t`` using the closed-form eigensystem.

    The common phase ``exp(-i*(omega0+omega1)*t/2)`` is kept.  For ``|+->`` on
    resonance the result is ``exp(-i*omega*t) (cos(gt)|+-> - i sin(gt)|-+>)``.
    """
    psi0 = as_state(state0, "state0")
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    es = eigensystem(build_hamiltonian(params))
    return _propagate(psi0, es, t, params.hbar_scale)


def resonant_state(g: float, t: float) -> np.ndarray:
    """``cos(gt)|+-> - i sin(gt)|-+>``: the evolved ``|+->`` with the free phase removed."""
    gt = g * t
    return np.array([0.0, math.cos(gt), -1j * math.sin(gt), 0.0], dtype=complex)


def expm_series(A, tol: float = 1e-16, max_terms: int = 60) -> np.ndarray:
    """Matrix exponential by Taylor series with scaling and squaring.

    Kept independent of any eigensolver so it can serve as a cross-check.
    """
    A = np.asarray(A, dtype=complex)
    norm = np.linalg.norm(A, 1)
    squarings = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    X = A / (2.0 ** squarings)
    result = np.eye(A.shape[0], dtype=complex)
    term = np.eye(A.shape[0], dtype=complex)
    for k in range(1, max_terms + 1):
        term = term @ X / k
        result = result + term
        if np.max(np.abs(term)) < tol:
            break
    for _ in range(squarings):
        result = result @ result
    return result


def evolution_operator(H, t: float, hbar: float = 1.0, method: str = "eigh") -> np.ndarray:
    """``U(t) = exp(-i H t / hbar)`` for a generic Hermitian ``H``.

    ``method="eigh"`` uses a dense Hermitian eigensolver, ``"series"`` the
    scaled Taylor series of :func:`expm_series`.
    """
    H = np.asarray(H, dtype=complex)
    if method == "eigh":
        w, V = np.linalg.eigh(H)
        return (V * np.exp(-1j * w * (t / hbar))) @ V.conj().T
    if method == "series":
        return expm_series(-1j * H * (t / hbar))
    raise ValueError(f"unknown method {method!r}")


def evolve_numeric(state0, H, t: float, hbar: float = 1.0, method: str = "eigh") -> np.ndarray:
    """Evolve ``state0`` under an arbitrary Hermitian ``H`` without using its structure."""
    psi0 = as_state(state0, "state0")
    return evolution_operator(H, t, hbar, method) @ psi0


def measurement_probabilities(state) -> np.ndarray:
    """Populations ``|a_i|**2`` in the order ``++, +-, -+, --``."""
    psi = as_state(state)
    return np.abs(psi) ** 2


def bell_time(g: float) -> float:
    """Time at which ``g*t = pi/4``, where ``|+->`` has become maximally entangled."""
    if not (g > 0 and math.isfinite(g)):
        raise ValueError(f"coupling must be positive and finite, got {g!r}")
    return math.pi / (4.0 * g)


def bell_fidelity(state, target=BELL_STATE) -> float:
    """Overlap ``|<target|state>|**2``; insensitive to global phases."""
    psi = as_state(state)
    phi = as_state(target, "target")
    return float(min(1.0, abs(np.vdot(phi, psi)) ** 2))
