"""Qubit-level linear algebra: 2x2 complex matrices, density matrices and Bloch vectors.

A ``C2x2`` is just a ``(2, 2)`` complex numpy array. Nothing here handles
more than one qubit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

C2x2 = np.ndarray

ALGEBRA_TOL = 1e-12
PHASE_TOL = 1e-10

IDENTITY = np.eye(2, dtype=complex)
_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class StateError(ValueError):
    """Raised when a matrix is not a valid qubit state."""


def pauli(axis: str) -> C2x2:
    """Return the Pauli matrix for ``axis`` in {"X", "Y", "Z"}."""
    try:
        return _PAULI[axis.upper()].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


def as_c2x2(a) -> C2x2:
    m = np.asarray(a, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
    return m


def dagger(a: C2x2) -> C2x2:
    return np.conj(a).T


def trace(a: C2x2) -> complex:
    return complex(a[0, 0] + a[1, 1])


def det(a: C2x2) -> complex:
    return complex(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])


def eigvals_hermitian(a: C2x2) -> tuple[float, float]:
    """Eigenvalues of a Hermitian 2x2 matrix from its trace and determinant, ascending."""
    t = trace(a).real
    d = det(a).real
    disc = max(t * t / 4.0 - d, 0.0)
    r = np.sqrt(disc)
    return t / 2.0 - r, t / 2.0 + r


def operator_norm(a: C2x2) -> float:
    """Largest singular value, via the eigenvalues of a^dagger a."""
    return float(np.sqrt(max(eigvals_hermitian(dagger(a) @ a)[1], 0.0)))


def equal_up_to_global_phase(a: C2x2, b: C2x2, tol: float = PHASE_TOL) -> bool:
    """True if ``a == phi * b`` entrywise within ``tol`` for some unit-modulus ``phi``.

    The candidate phase is taken from the ratio of the entries at the position
    where ``b`` has its largest magnitude.
    """
    a = as_c2x2(a)
    b = as_c2x2(b)
    if np.array_equal(a, b):
        return True
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[idx]) == 0.0:
        return bool(np.max(np.abs(a)) <= tol)
    if abs(a[idx]) == 0.0:
        return False
    ratio = a[idx] / b[idx]
    phi = ratio / abs(ratio)
    return bool(np.max(np.abs(a - phi * b)) <= tol)


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if self.norm() > 1.0 + ALGEBRA_TOL:
            raise StateError(f"Bloch vector norm {self.norm():.15g} exceeds 1")

    def norm(self) -> float:
        return float(np.sqrt(self.x**2 + self.y**2 + self.z**2))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def to_density_matrix(self) -> DensityMatrix:
        m = 0.5 * (IDENTITY + self.x * _PAULI["X"] + self.y * _PAULI["Y"] + self.z * _PAULI["Z"])
        return DensityMatrix(m)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated qubit density matrix.

    Construction checks Hermiticity, unit trace and positivity, each to
    ``tol``. The wrapped array is copied and made read-only.
    """

    matrix: C2x2
    tol: float = ALGEBRA_TOL

    def __post_init__(self):
        m = as_c2x2(self.matrix).copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if np.max(np.abs(m - dagger(m))) > self.tol:
            raise StateError("density matrix is not Hermitian")
        if abs(trace(m) - 1.0) > self.tol:
            raise StateError(f"density matrix trace {trace(m):.15g} != 1")
        if eigvals_hermitian(m)[0] < -self.tol:
            raise StateError("density matrix has a negative eigenvalue")

    @classmethod
    def maximally_mixed(cls) -> DensityMatrix:
        return cls(IDENTITY / 2)

    @classmethod
    def from_ket(cls, ket) -> DensityMatrix:
        v = np.asarray(ket, dtype=complex).reshape(2)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, np.conj(v)))

    def expect(self, op: C2x2) -> complex:
        return trace(self.matrix @ op)

    def purity(self) -> float:
        return trace(self.matrix @ self.matrix).real

    def to_bloch(self) -> BlochVector:
        return to_bloch(self)

    def __eq__(self, other):
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return bool(np.allclose(self.matrix, other.matrix, rtol=0, atol=ALGEBRA_TOL))

    def __hash__(self):
        return hash(tuple(np.round(self.matrix.ravel(), 12)))


def to_bloch(rho: DensityMatrix) -> BlochVector:
    """Bloch components ``r_k = tr(rho sigma_k)``.

    Raises StateError if any component carries an imaginary part above 1e-9.
    """
    comps = [rho.expect(_PAULI[k]) for k in "XYZ"]
    if max(abs(c.imag) for c in comps) > 1e-9:
        raise StateError("Bloch components are not real; state is corrupted")
    return BlochVector(*(c.real for c in comps))
