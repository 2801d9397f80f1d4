"""
Qubit states and Bures geometry
===============================

Density matrices of a spin-1/2 system, their Bloch-ball coordinates

    rho = (1 + x sigma_x + y sigma_y + z sigma_z) / 2,

and the Bures distance used to phrase every stability statement in the
package.  The two eigenstates of ``sigma_z`` are exposed as
:class:`TargetState` members with neutral labels ``E1 = diag(1, 0)``
(Bloch ``z = +1``) and ``E2 = diag(0, 1)`` (Bloch ``z = -1``).

Distances to pure targets are evaluated through the complementary
projector, ``1 - Tr(rho P) = Tr(rho (1 - P))``, so that states within
``1e-30`` of a target still have a resolvable, strictly positive distance.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .exceptions import DomainError, IntegratorDivergence, NumericError

ALGEBRAIC_TOL = 1e-12
GEOMETRIC_TOL = 1e-10
HERMITIAN_DRIFT_TOL = 1e-8

IDENTITY = np.eye(2, dtype=np.complex128)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
for _m in (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z):
    _m.setflags(write=False)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def _readonly(a):
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated 2x2 density matrix.

    Parameters
    ----------
    entries : array_like, shape (2, 2)
        Complex matrix.  It must be Hermitian, have unit trace and
        non-negative eigenvalues, each within ``1e-12``.

    Raises
    ------
    DomainError
        If any of the three conditions fails.
    """

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.complex128)
        if m.shape != (2, 2):
            raise DomainError(f"density matrix must be 2x2, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DomainError("density matrix has non-finite entries")
        if np.max(np.abs(m - m.conj().T)) > ALGEBRAIC_TOL:
            raise DomainError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > ALGEBRAIC_TOL:
            raise DomainError(f"density matrix trace {np.trace(m).real!r} != 1")
        if np.linalg.eigvalsh(m).min() < -ALGEBRAIC_TOL:
            raise DomainError("density matrix is not positive semidefinite")
        object.__setattr__(self, "entries", _readonly(m))

    @property
    def bloch(self) -> "BlochVector":
        return density_to_bloch(self)

    @property
    def determinant(self) -> float:
        m = self.entries
        return float((m[0, 0] * m[1, 1]).real - abs(m[1, 0]) ** 2)

    def as_array(self) -> np.ndarray:
        return np.array(self.entries)

    def __repr__(self):
        x, y, z = self.bloch
        return f"DensityMatrix(bloch=({x:.6g}, {y:.6g}, {z:.6g}))"


@dataclass(frozen=True)
class BlochVector:
    """Real coordinates ``(x, y, z)`` of a point in the closed unit ball."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name in ("x", "y", "z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"Bloch component {name} is not finite")
            object.__setattr__(self, name, value)
        r2 = self.x * self.x + self.y * self.y + self.z * self.z
        if r2 > 1.0 + GEOMETRIC_TOL:
            raise DomainError(f"Bloch vector outside the unit ball (|v|^2 = {r2!r})")

    def __iter__(self):
        return iter((self.x, self.y, self.z))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


class TargetState(enum.Enum):
    """The two eigenstates of ``sigma_z``; the value is the Bloch ``z``."""

    E1 = 1
    E2 = -1

    @property
    def z_bar(self) -> int:
        return self.value

    @property
    def projector(self) -> np.ndarray:
        """The eigenstate as a read-only matrix."""
        return _PROJECTORS[self]

    @property
    def complement(self) -> np.ndarray:
        """``1 - projector``, i.e. the antipodal eigenstate."""
        return _PROJECTORS[self.antipodal]

    @property
    def antipodal(self) -> "TargetState":
        return TargetState.E2 if self is TargetState.E1 else TargetState.E1

    @property
    def density(self) -> DensityMatrix:
        return DensityMatrix(self.projector)

    @classmethod
    def parse(cls, label) -> "TargetState":
        if isinstance(label, cls):
            return label
        try:
            return cls[str(label).strip().upper()]
        except KeyError:
            raise DomainError(f"unknown target state {label!r}; expected E1 or E2") from None


_PROJECTORS = {
    TargetState.E1: _readonly([[1, 0], [0, 0]]),
    TargetState.E2: _readonly([[0, 0], [0, 1]]),
}

StateLike = Union[DensityMatrix, np.ndarray]


def as_matrix(rho: StateLike) -> np.ndarray:
    """Return the underlying complex array of a state without validation."""
    if isinstance(rho, DensityMatrix):
        return rho.entries
    return np.asarray(rho, dtype=np.complex128)


def bloch_to_density(v) -> DensityMatrix:
    """Map a Bloch vector to its density matrix.

    Parameters
    ----------
    v : BlochVector or sequence of three floats

    Returns
    -------
    DensityMatrix
        ``(1 + x sigma_x + y sigma_y + z sigma_z) / 2``.
    """
    if not isinstance(v, BlochVector):
        v = BlochVector(*v)
    x, y, z = v
    m = 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]], dtype=np.complex128)
    return DensityMatrix(m)


def density_to_bloch(rho: StateLike) -> BlochVector:
    """Bloch coordinates ``(Tr(sigma_x rho), Tr(sigma_y rho), Tr(sigma_z rho))``."""
    m = as_matrix(rho)
    if np.max(np.abs(m - m.conj().T)) > ALGEBRAIC_TOL:
        raise DomainError("matrix is not Hermitian")
    x = 2.0 * m[1, 0].real
    y = 2.0 * m[1, 0].imag
    z = (m[0, 0] - m[1, 1]).real
    return BlochVector(x, y, z)


def _det2(m) -> float:
    return float((m[0, 0] * m[1, 1]).real - abs(m[1, 0]) ** 2)


def _distance_from_gap(gap, fidelity):
    # 2 - 2 sqrt(F) rewritten as 2 (1 - F) / (1 + sqrt(F)) to keep tiny gaps
    radicand = 2.0 * gap / (1.0 + math.sqrt(max(fidelity, 0.0)))
    if radicand < -ALGEBRAIC_TOL:
        raise NumericError(f"Bures radicand {radicand!r} is negative")
    return math.sqrt(max(radicand, 0.0))


def bures_distance(rho_a: StateLike, rho_b: StateLike) -> float:
    """Bures distance between two qubit states.

    Uses the closed form valid for 2x2 matrices,
    ``sqrt(2 - 2 sqrt(Tr(a b) + 2 sqrt(det a det b)))``.  The result is
    symmetric, vanishes only for equal states and never exceeds ``sqrt(2)``.
    """
    a, b = as_matrix(rho_a), as_matrix(rho_b)
    a00, a11, b00, b11 = a[0, 0].real, a[1, 1].real, b[0, 0].real, b[1, 1].real
    ac, bc = a[1, 0], b[1, 0]
    # every term below is invariant under a <-> b in floating point, so the
    # distance is exactly symmetric
    cross = 2.0 * (ac.real * bc.real + ac.imag * bc.imag)
    root_det = 2.0 * math.sqrt(max(_det2(a) * _det2(b), 0.0))
    fidelity = float(a00 * b00 + a11 * b11 + cross) + root_det
    # 1 - Tr(ab) written without cancellation for diagonal projectors
    gap = float(a00 * b11 + a11 * b00 - cross) - root_det
    return _distance_from_gap(gap, fidelity)


def bures_distance_to_set(rho: StateLike, targets: Iterable[StateLike] | None = None) -> float:
    """Minimum Bures distance from ``rho`` to a non-empty set of states.

    ``targets`` defaults to the two ``sigma_z`` eigenstates.
    """
    if targets is None:
        targets = [t.projector for t in TargetState]
    targets = list(targets)
    if not targets:
        raise DomainError("target set is empty")
    return min(bures_distance(rho, t) for t in targets)


def distance_to_target_from_gap(gap):
    """Bures distance to a pure state given ``gap = 1 - Tr(rho P)``.

    Vectorised over numpy arrays.
    """
    gap = np.maximum(np.asarray(gap, dtype=float), 0.0)
    return np.sqrt(2.0 * gap / (1.0 + np.sqrt(1.0 - np.minimum(gap, 1.0))))


def clamp_to_physical(m) -> DensityMatrix:
    """Project an almost-valid matrix back onto the state space.

    The matrix is Hermitised, a negative eigenvalue is clipped to zero with
    its eigenvectors kept, and the trace is renormalised to one.  Valid
    states are returned unchanged.

    Raises
    ------
    IntegratorDivergence
        If the anti-Hermitian part exceeds ``1e-8`` in max-norm, the input is
        not finite, or the trace is not positive.
    """
    m = np.asarray(as_matrix(m), dtype=np.complex128)
    if not np.all(np.isfinite(m)):
        raise IntegratorDivergence("non-finite matrix")
    if np.max(np.abs(m - m.conj().T)) > 2 * HERMITIAN_DRIFT_TOL:
        raise IntegratorDivergence("matrix drifted away from Hermitian")
    h = 0.5 * (m + m.conj().T)
    w, vecs = np.linalg.eigh(h)
    if w[0] < 0.0:
        w = np.clip(w, 0.0, None)
        h = (vecs * w) @ vecs.conj().T
    trace = float(np.trace(h).real)
    if trace <= 0.0:
        raise IntegratorDivergence(f"non-positive trace {trace!r}")
    h = h / trace
    h[0, 0] = h[0, 0].real
    h[1, 1] = h[1, 1].real
    h[0, 1] = np.conj(h[1, 0])
    return DensityMatrix(h)


def random_states(n, rng, pure_fraction=0.0):
    """Draw ``n`` Bloch vectors uniformly from the ball as an ``(n, 3)`` array.

    A fraction ``pure_fraction`` of them is pushed onto the sphere.
    """
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    r = rng.random(n) ** (1.0 / 3.0)
    r[rng.random(n) < pure_fraction] = 1.0
    return v * r[:, None]
