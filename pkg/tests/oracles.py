"""Independent reference computations used by the tests.

Nothing here imports the closed forms under test: Bures distances come from
matrix square roots, generators from Ito's formula with finite-difference
derivatives of the Lyapunov functions along the drift and diffusion fields.
"""
import numpy as np
from scipy.linalg import sqrtm

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
E1 = np.diag([1.0, 0.0]).astype(complex)
E2 = np.diag([0.0, 1.0]).astype(complex)


def rho_of(x, y, z):
    """Pauli expansion (1 + x sx + y sy + z sz) / 2."""
    return 0.5 * (I2 + x * SX + y * SY + z * SZ)


def bloch_of(rho):
    return np.array([np.trace(s @ rho).real for s in (SX, SY, SZ)])


def bures(a, b):
    """sqrt(2 - 2 Tr sqrt(sqrt(a) b sqrt(a))) via principal matrix roots."""
    ra = sqrtm(a)
    fid = np.trace(sqrtm(ra @ b @ ra)).real
    return float(np.sqrt(max(2.0 - 2.0 * fid, 0.0)))


def drift(rho, u, omega, eta, m):
    comm = lambda a, b: a @ b - b @ a
    return (-0.5j * omega * comm(SZ, rho) + 0.25 * m * (SZ @ rho @ SZ - rho)
            - 0.5j * u * comm(SY, rho))


def diffusion(rho, eta, m):
    z = np.trace(SZ @ rho).real
    return 0.5 * np.sqrt(eta * m) * (SZ @ rho + rho @ SZ - 2.0 * z * rho)


def v_qsr(rho):
    z = np.trace(SZ @ rho).real
    return np.sqrt(max(1.0 - z * z, 0.0))


def v_target(rho, target):
    return np.sqrt(max(1.0 - np.trace(rho @ target).real, 0.0))


def ito_generator(f, rho, u, omega, eta, m, h=1e-5):
    """L f = Df[F] + 1/2 D^2 f[G, G] by central differences (f smooth near rho)."""
    F = drift(rho, u, omega, eta, m)
    G = diffusion(rho, eta, m)
    first = (f(rho + h * F) - f(rho - h * F)) / (2 * h)
    second = (f(rho + h * G) - 2 * f(rho) + f(rho - h * G)) / h ** 2
    return first + 0.5 * second


def feedback_law(rho, alpha, beta, gamma, target):
    """alpha (1 - Tr(rho target))^(beta/2) - gamma Tr(i [sy, rho] target)."""
    v2 = 1.0 - np.trace(rho @ target).real
    coupling = np.trace(1j * (SY @ rho - rho @ SY) @ target).real
    return alpha * v2 ** (beta / 2) - gamma * coupling
