"""Elliptic integrals and the Jacobi amplitude, plus closed-form pendulum charts.

Everything here is dependency-free numerics: the complete integral K(m) comes
from the arithmetic-geometric mean, the incomplete integral F(phi|m) from the
AGM amplitude-doubling (Landen) recursion, and the amplitude am(u|m) from the
AGM backward recursion polished by Newton on F.  The parameter convention is
m (not the modulus k), with 0 <= m < 1.

These serve as an independent oracle for the quadrature-based action-angle
chart of the pendulum:

    theta(x) = 1/2 - F(pi (1/2 - x) | m_mu) / (2 K(m_mu)),   m_mu = 2 mu / (E + 2 mu)
    x(theta) = 1/2 - am(K(m_mu) (1 - 2 theta) | m_mu) / pi
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_AGM_TOL = 1e-15
_MAX_ITER = 60


def _check_m(m: float) -> float:
    m = float(m)
    if not 0.0 <= m < 1.0:
        raise DomainError(f"elliptic parameter m={m} outside [0, 1)")
    return m


def complete_K(m: float) -> float:
    """Complete elliptic integral of the first kind, via the AGM."""
    m = _check_m(m)
    a, b = 1.0, np.sqrt(1.0 - m)
    for _ in range(_MAX_ITER):
        if abs(a - b) < _AGM_TOL * a:
            break
        a, b = 0.5 * (a + b), np.sqrt(a * b)
    return float(np.pi / (a + b))


def incomplete_F(phi, m: float):
    """Incomplete elliptic integral F(phi|m) for any real phi (array-aware).

    AGM descent: the amplitude is doubled each step,
    phi_{n+1} = 2 phi_n - atan2((a_n - b_n) sin cos, a cos^2 + b sin^2),
    and F = lim phi_n / (2^n a_n).  The correction is pi-periodic in phi, so
    the quasi-period F(phi + pi) = F(phi) + 2K comes out automatically.
    """
    m = _check_m(m)
    phi_arr = np.asarray(phi, dtype=float)
    if m == 0.0:
        return float(phi_arr) if phi_arr.ndim == 0 else phi_arr.copy()
    a, b = 1.0, np.sqrt(1.0 - m)
    ph = phi_arr.copy()
    scale = 1.0
    for _ in range(_MAX_ITER):
        s, c = np.sin(ph), np.cos(ph)
        delta = np.arctan2((a - b) * s * c, a * c * c + b * s * s)
        ph = 2.0 * ph - delta
        a, b = 0.5 * (a + b), np.sqrt(a * b)
        scale *= 2.0
        if abs(a - b) < _AGM_TOL * a:
            break
    out = ph / (scale * a)
    return float(out) if out.ndim == 0 else out


def jacobi_am(u, m: float):
    """Jacobi amplitude am(u|m): functional inverse of F(.|m), array-aware."""
    m = _check_m(m)
    u_arr = np.asarray(u, dtype=float)
    if m == 0.0:
        return float(u_arr) if u_arr.ndim == 0 else u_arr.copy()
    # forward AGM arrays
    a, b, c = [1.0], [np.sqrt(1.0 - m)], [np.sqrt(m)]
    while abs(c[-1]) > _AGM_TOL * a[-1] and len(a) < _MAX_ITER:
        an, bn = a[-1], b[-1]
        a.append(0.5 * (an + bn))
        b.append(np.sqrt(an * bn))
        c.append(0.5 * (an - bn))
    n = len(a) - 1
    # quasi-period reduction: am(u + 2K) = am(u) + pi
    K = np.pi / (2.0 * a[-1])
    shift = np.round(u_arr / (2.0 * K))
    ur = u_arr - shift * 2.0 * K
    # backward recursion for the amplitude
    ph = (2.0 ** n) * a[-1] * ur
    for i in range(n, 0, -1):
        ph = 0.5 * (ph + np.arcsin(np.clip(c[i] / a[i] * np.sin(ph), -1.0, 1.0)))
    # Newton polish on F(ph) = ur
    for _ in range(3):
        r = incomplete_F(ph, m) - ur
        ph = ph - r * np.sqrt(1.0 - m * np.sin(ph) ** 2)
    out = ph + shift * np.pi
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class EllipticParams:
    """Parameter m in [0,1) with its complete integral K(m) >= pi/2."""

    m: float
    K: float

    def __post_init__(self):
        _check_m(self.m)
        if self.K < np.pi / 2 - 1e-12:
            raise DomainError("K(m) must be >= pi/2")

    @classmethod
    def of(cls, m: float) -> "EllipticParams":
        return cls(_check_m(m), complete_K(m))

    @classmethod
    def for_pendulum(cls, mu: float, E: float) -> "EllipticParams":
        """m_mu = 2 mu / (E + 2 mu) of the rotating pendulum at energy E."""
        return cls.of(_m_parameter(mu, E))


def _m_parameter(mu: float, E: float) -> float:
    if mu <= 0:
        raise DomainError("pendulum charts need mu > 0")
    if E <= 0:
        raise DomainError("pendulum charts need E > 0 (rotating regime)")
    return 2.0 * mu / (E + 2.0 * mu)


def pendulum_angle(x, mu: float, E: float):
    """Closed-form angle map of the rotating pendulum at energy E."""
    m = _m_parameter(mu, E)
    x_arr = np.asarray(x, dtype=float)
    out = 0.5 - incomplete_F(np.pi * (0.5 - x_arr), m) / (2.0 * complete_K(m))
    return float(out) if np.ndim(x) == 0 else out


def pendulum_position(theta, mu: float, E: float):
    """Closed-form inverse angle map of the rotating pendulum."""
    m = _m_parameter(mu, E)
    th = np.asarray(theta, dtype=float)
    K = complete_K(m)
    out = 0.5 - jacobi_am(K * (1.0 - 2.0 * th), m) / np.pi
    return float(out) if np.ndim(theta) == 0 else out
