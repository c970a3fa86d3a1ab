"""Mather's alpha-function for 1-D mechanical systems, and the torus-graph gradient.

For H(p,x) = p^2/2 - mu V(x) the alpha-function is flat on the interval
|c| <= sqrt(mu) c(V) (the separatrix constant c(V) = int sqrt(2V)) and equals
the energy E(|c|) obtained by inverting c+(E) = int sqrt(2(E + mu V)) outside
of it.  The inversion runs on the cancellation-free excess integral
c+(E) - c+(0), so values within 1e-12 of the flat edge are still resolved.
"""

from __future__ import annotations

import numpy as np

from . import action_angle as aa
from .errors import DomainError
from .potentials import PeriodicPotential1D

_EDGE = 1e-14


def separatrix_constant(V: PeriodicPotential1D) -> float:
    """c(V) = integral_0^1 sqrt(2 V(x)) dx, with quadrature split at the zeros of V."""
    sys = aa.MechanicalSystem1D(1.0, V) if _is_nonzero(V) else None
    if sys is None:
        return 0.0
    return aa.separatrix_action(sys)


def _is_nonzero(V: PeriodicPotential1D) -> bool:
    return bool(V.coefficients)


def c_plus(sys: aa.MechanicalSystem1D, E: float) -> float:
    """Cohomology class of the +E rotating orbit; same integral as the action."""
    return aa.action(sys, E)


class AlphaFunction1D:
    """Flat-then-convex alpha-function of one mechanical degree of freedom."""

    def __init__(self, system: aa.MechanicalSystem1D):
        self.system = system
        self.c_flat = aa.separatrix_action(system)

    def value(self, c: float) -> float:
        a = abs(float(c))
        if a <= self.c_flat + _EDGE:
            return 0.0
        return self.energy_of_c(a)

    __call__ = value

    def energy_of_c(self, c: float) -> float:
        """E(|c|) for |c| above the flat edge (monotone inversion of c+)."""
        a = abs(float(c))
        if a <= self.c_flat:
            raise DomainError(f"|c|={a} inside the flat region (edge {self.c_flat:.12g})")
        return aa.energy_of_action(self.system, a)

    def derivative(self, c: float) -> float:
        """One-sided exact derivative d alpha / d c.

        Inside the flat region this is 0; outside it equals the rotation
        number sign(c) * omega(E(|c|)) by convex duality.  At the edge the
        rotating-side limit is 0 as well, because the period integral
        diverges as E -> 0 (the approach is logarithmic in E, so finite
        differences converge only like 1/log; the closed form is exact).
        """
        a = abs(float(c))
        if a <= self.c_flat + _EDGE:
            return 0.0
        E = self.energy_of_c(a)
        return float(np.sign(c)) * aa.frequency(self.system, E)

    def profile(self, c_values) -> np.ndarray:
        return np.array([self.value(c) for c in np.asarray(c_values, dtype=float)])


def alpha_1d(sys: aa.MechanicalSystem1D, c: float) -> float:
    """alpha(c): 0 on the flat interval, E(|c|) on the rotating branch."""
    return AlphaFunction1D(sys).value(c)


def alpha_sum(systems, c) -> float:
    """Sum of per-axis alpha-functions (the separable d-dimensional alpha)."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if len(systems) != c.size:
        raise DomainError("length mismatch between systems and cohomology vector")
    return float(sum(alpha_1d(s, ci) for s, ci in zip(systems, c)))


def grad_u_c(systems, c, x) -> np.ndarray:
    """Gradient of the generating function of the invariant graph T_c.

    Component i is -c_i + sign(c_i) sqrt(2(alpha_i(c_i) + mu_i V_i(x^i))), so
    that H_0(x, c + grad u) = alpha(c) pointwise.  Every component of c must
    lie strictly outside its flat region (rotating tori only).

    x has shape (..., d); the result has the same shape.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != c.size or len(systems) != c.size:
        raise DomainError("dimension mismatch")
    out = np.empty_like(x)
    for i, (sys, ci) in enumerate(zip(systems, c)):
        alpha = AlphaFunction1D(sys)
        if abs(ci) <= alpha.c_flat:
            raise DomainError(
                f"component {i}: |c|={abs(ci)} is inside the flat region "
                f"(edge {alpha.c_flat:.12g}); no rotating torus there")
        Ei = alpha.value(ci)
        out[..., i] = -ci + np.sign(ci) * np.sqrt(2.0 * (Ei + sys.mu * sys.V(x[..., i])))
    return out
