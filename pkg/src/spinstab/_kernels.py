"""Compiled inner loops.

States are carried as ``(p00, p11, c)`` with ``rho = [[p00, conj(c)], [c, p11]]``
so that a population of ``1e-40`` next to a target is stored exactly instead
of being lost in ``z = p00 - p11``.
"""
import math

import numba
import numpy as np

OK = 0
BAD_TRACE = 1
NON_FINITE = 2

CTRL_ZERO = 0
CTRL_FEEDBACK = 1

_jit = numba.njit(cache=True, nogil=True)


@_jit
def gap_to_distance(gap):
    if gap <= 0.0:
        return 0.0
    if gap > 1.0:
        gap = 1.0
    return math.sqrt(2.0 * gap / (1.0 + math.sqrt(1.0 - gap)))


@_jit
def control_value(p00, p11, c, kind, alpha, beta, gamma, zbar):
    if kind == CTRL_ZERO:
        return 0.0
    gap = p11 if zbar > 0 else p00
    if gap < 0.0:
        gap = 0.0
    return alpha * gap ** (0.5 * beta) - gamma * zbar * 2.0 * c.real


@_jit
def observables(p00, p11, kind, zbar):
    """Return ``(V, d_B)`` for the recorded Lyapunov function."""
    if kind == CTRL_FEEDBACK:
        gap = p11 if zbar > 0 else p00
        if gap < 0.0:
            gap = 0.0
        return math.sqrt(gap), gap_to_distance(gap)
    prod = p00 * p11
    if prod < 0.0:
        prod = 0.0
    return 2.0 * math.sqrt(prod), gap_to_distance(min(p00, p11))


@_jit
def kraus_update(p00, p11, c, u, dw, omega, s, big_m, corr, dt):
    """One normalised Kraus step.

    Returns ``(p00, p11, c, dy, clip, status)``; ``clip`` is the magnitude of
    the negative eigenvalue removed, if any.
    """
    z = p00 - p11
    dy = dw + s * z * dt
    damp = 1.0 - 0.125 * big_m * dt
    m00 = complex(damp + 0.5 * s * dy, -0.5 * omega * dt)
    m11 = complex(damp - 0.5 * s * dy, 0.5 * omega * dt)
    m01 = -0.5 * u * dt
    m10 = 0.5 * u * dt
    cc = c.conjugate()
    # N = M rho M^dagger with real off-diagonal Kraus entries
    n00 = (abs(m00) ** 2) * p00 + 2.0 * m01 * (m00 * cc).real + m01 * m01 * p11
    n11 = m10 * m10 * p00 + 2.0 * m10 * (m11 * c).real + (abs(m11) ** 2) * p11
    n10 = m10 * p00 * m00.conjugate() + m10 * cc * m01 + m11 * c * m00.conjugate() + m11 * p11 * m01
    # dephasing correction sz rho sz keeps populations and flips coherences
    n00 += corr * dt * p00
    n11 += corr * dt * p11
    n10 -= corr * dt * c
    tr = n00 + n11
    if not (math.isfinite(tr) and math.isfinite(n10.real) and math.isfinite(n10.imag)):
        return p00, p11, c, dy, 0.0, NON_FINITE
    if tr <= 0.0:
        return p00, p11, c, dy, 0.0, BAD_TRACE
    n00 /= tr
    n11 /= tr
    n10 /= tr
    clip = 0.0
    if n00 < 0.0 or n11 < 0.0 or n00 * n11 - (n10.real ** 2 + n10.imag ** 2) < 0.0:
        disc = math.sqrt((n00 - n11) ** 2 + 4.0 * (n10.real ** 2 + n10.imag ** 2))
        lm = 0.5 * (n00 + n11 - disc)
        if lm < 0.0 and disc > 0.0:
            clip = -lm
            n00 = (n00 - lm) / disc
            n11 = (n11 - lm) / disc
            n10 = n10 / disc
    return n00, n11, n10, dy, clip, OK


@_jit
def em_update(x, y, z, u, dw, omega, s, big_m, dt):
    """One Euler-Maruyama step in Bloch coordinates, radially projected."""
    nx = x + (-omega * y - 0.5 * big_m * x + u * z) * dt - s * x * z * dw
    ny = y + (omega * x - 0.5 * big_m * y) * dt - s * y * z * dw
    nz = z - u * x * dt + s * (1.0 - z * z) * dw
    if not (math.isfinite(nx) and math.isfinite(ny) and math.isfinite(nz)):
        return x, y, z, 0.0, NON_FINITE
    r = math.sqrt(nx * nx + ny * ny + nz * nz)
    clip = 0.0
    if r > 1.0:
        clip = r - 1.0
        nx /= r
        ny /= r
        nz /= r
    return nx, ny, nz, clip, OK


@_jit
def _record(k, i, p00, p11, c, u, kind, zbar, dt, t, rho, uu, vv, db):
    t[k] = i * dt
    rho[k, 0, 0] = p00
    rho[k, 1, 1] = p11
    rho[k, 1, 0] = c
    rho[k, 0, 1] = c.conjugate()
    uu[k] = u
    v, d = observables(p00, p11, kind, zbar)
    vv[k] = v
    db[k] = d


@_jit
def run_trajectory(scheme, p00, p11, c, dws, stride, omega, s, big_m, corr, dt,
                   kind, alpha, beta, gamma, zbar, t, rho, uu, vv, db):
    """Advance one path over ``len(dws)`` steps, recording every ``stride`` steps.

    ``scheme`` is 0 for Kraus and 1 for Euler-Maruyama.  Returns
    ``(status, failing_step, max_clip)``.
    """
    n = dws.shape[0]
    x = 2.0 * c.real
    y = 2.0 * c.imag
    z = p00 - p11
    max_clip = 0.0
    k = 0
    for i in range(n):
        u = control_value(p00, p11, c, kind, alpha, beta, gamma, zbar)
        if i % stride == 0:
            _record(k, i, p00, p11, c, u, kind, zbar, dt, t, rho, uu, vv, db)
            k += 1
        if scheme == 0:
            p00, p11, c, dy, clip, status = kraus_update(
                p00, p11, c, u, dws[i], omega, s, big_m, corr, dt)
        else:
            x, y, z, clip, status = em_update(x, y, z, u, dws[i], omega, s, big_m, dt)
            p00 = 0.5 * (1.0 + z)
            p11 = 0.5 * (1.0 - z)
            c = complex(0.5 * x, 0.5 * y)
        if status != OK:
            return status, i, max_clip
        if clip > max_clip:
            max_clip = clip
    u = control_value(p00, p11, c, kind, alpha, beta, gamma, zbar)
    _record(k, n, p00, p11, c, u, kind, zbar, dt, t, rho, uu, vv, db)
    return OK, -1, max_clip


@_jit
def kraus_batch(p00, p11, c, u, dws, omega, s, big_m, corr, dt, out):
    """Apply one Kraus step from a common state with many noise draws.

    ``out`` has shape ``(len(dws), 3)`` and receives ``(p00, p11, 2 Re c)``.
    """
    for j in range(dws.shape[0]):
        a, b, cc, dy, clip, status = kraus_update(p00, p11, c, u, dws[j], omega, s, big_m, corr, dt)
        out[j, 0] = a
        out[j, 1] = b
        out[j, 2] = 2.0 * cc.real


def n_records(n_steps, stride):
    """Number of recorded samples for ``n_steps`` steps at ``stride``."""
    return (n_steps - 1) // stride + 2 if n_steps > 0 else 1


def allocate(n_rec):
    return (np.empty(n_rec), np.empty((n_rec, 2, 2), dtype=np.complex128),
            np.empty(n_rec), np.empty(n_rec), np.empty(n_rec))
