"""First-order Hamilton-Jacobi machinery: transport equation and Lindstedt truncation.

Expanding the Hamilton-Jacobi equation of the perturbed system to first order
in the coupling gives the transport equation

    <omega, grad u1>(theta) + W(theta) = [W]_0,

whose Fourier solution is u1_k = -W_k / (2 pi i k.omega) on non-resonant
modes; modes with k.omega = 0 (within tolerance) and nonzero amplitude are
recorded as resonant obstructions, not errors.  The first-order Lindstedt
approximation pulls the perturbation back through the action-angle charts,
solves the transport equation there, and predicts alpha to first order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import action_angle as aa
from .errors import DomainError
from .mather import AlphaFunction1D
from .potentials import TorusPotential

_AXIS_FFT = 512
_COEF_TOL = 1e-15


@dataclass
class FirstOrderSolution:
    """Zero-mean Fourier solution of the transport equation at rotation vector omega."""

    omega: tuple
    alpha1: float
    u1: dict
    obstructions: frozenset
    resonance_tol: float
    max_u1: float = 0.0
    small_divisor: float = np.inf

    def u1_eval(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape[:-1], dtype=complex)
        for k, c in self.u1.items():
            out += c * np.exp(2j * np.pi * (theta @ np.asarray(k, dtype=float)))
        imag = np.max(np.abs(np.atleast_1d(out).imag)) if self.u1 else 0.0
        if imag > 1e-10 * max(1.0, self.max_u1 * len(self.u1)):
            raise DomainError("u1 lost Hermitian symmetry")
        return out.real

    def grad_u1_eval(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        d = theta.shape[-1]
        out = np.zeros(theta.shape[:-1] + (d,), dtype=complex)
        for k, c in self.u1.items():
            kv = np.asarray(k, dtype=float)
            phase = np.exp(2j * np.pi * (theta @ kv))
            out += (2j * np.pi * c) * phase[..., None] * kv
        return out.real

    def to_dict(self):
        return {
            "omega": list(self.omega),
            "alpha1": self.alpha1,
            "resonance_tol": self.resonance_tol,
            "modes": [{"k": list(k), "re": c.real, "im": c.imag}
                      for k, c in sorted(self.u1.items())],
            "obstructions": [list(k) for k in sorted(self.obstructions)],
            "max_u1": self.max_u1,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def mean_value(U: TorusPotential) -> float:
    """[U]_0: the k=0 Fourier coefficient, i.e. the mean over the torus."""
    return U.mean()


def solve_first_order(U: TorusPotential, omega, resonance_tol: float | None = None
                      ) -> FirstOrderSolution:
    """Solve <omega, grad u1> + U = [U]_0 mode by mode.

    resonance_tol defaults to 1e-9 * |omega|; a mode k with |k . omega| at or
    below it and a nonzero amplitude becomes an obstruction.  The magnitude
    of the largest u1 coefficient and the smallest surviving divisor are
    reported so near-resonant divergence risk is visible to the caller.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if omega.size != U.dimension:
        raise DomainError("omega has wrong dimension")
    if not np.any(omega):
        raise DomainError("omega must be nonzero")
    tol = 1e-9 * float(np.linalg.norm(omega)) if resonance_tol is None else float(resonance_tol)
    u1: dict = {}
    obstructions = set()
    max_u1, small_div = 0.0, np.inf
    zero = (0,) * U.dimension
    for k, c in U.coefficients.items():
        if k == zero:
            continue
        div = float(np.dot(k, omega))
        if abs(div) <= tol:
            obstructions.add(k)
            continue
        small_div = min(small_div, abs(div))
        coef = -c / (2j * np.pi * div)
        u1[k] = coef
        max_u1 = max(max_u1, abs(coef))
    return FirstOrderSolution(omega=tuple(float(w) for w in omega),
                              alpha1=mean_value(U), u1=u1,
                              obstructions=frozenset(obstructions),
                              resonance_tol=tol, max_u1=max_u1,
                              small_divisor=small_div)


def transport_residual(sol: FirstOrderSolution, U: TorusPotential,
                       grid_n: int = 64) -> float:
    """Sup-norm of <omega, grad u1> + U - alpha1 on a grid, obstructed modes excluded."""
    omega = np.asarray(sol.omega)
    residual_coeffs = {}
    zero = (0,) * U.dimension
    for k, c in U.coefficients.items():
        if k == zero or k in sol.obstructions:
            continue
        r = c + 2j * np.pi * float(np.dot(k, omega)) * sol.u1.get(k, 0j)
        if abs(r) > 0:
            residual_coeffs[k] = r
    if not residual_coeffs:
        return 0.0
    axes = [np.arange(grid_n) / grid_n] * U.dimension
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    total = np.zeros(grid.shape[:-1], dtype=complex)
    for k, r in residual_coeffs.items():
        total += r * np.exp(2j * np.pi * (grid @ np.asarray(k, dtype=float)))
    return float(np.max(np.abs(total)))


def _pullback(U: TorusPotential, charts, n_fft: int = _AXIS_FFT) -> TorusPotential:
    """Fourier coefficients of U composed with the per-axis inverse angle maps."""
    d = U.dimension
    theta = np.arange(n_fft) / n_fft
    axis_coeffs = []
    needed = [sorted({k[i] for k in U.coefficients}) for i in range(d)]
    for i, chart in enumerate(charts):
        if chart is None or chart.system.mu == 0.0:
            axis_coeffs.append(None)
            continue
        x = chart.x_of_theta(theta)
        axis_coeffs.append({k: np.fft.fft(np.exp(2j * np.pi * k * x)) / n_fft
                            for k in needed[i]})
    out: dict = {}
    for k, c in U.coefficients.items():
        # tensor product of per-axis expansions, truncated at _COEF_TOL
        terms = [((), c)]
        for i in range(d):
            if axis_coeffs[i] is None or k[i] == 0:
                terms = [(j + (k[i],), w) for j, w in terms]
                continue
            arr = axis_coeffs[i][k[i]]
            half = n_fft // 2
            new_terms = []
            for j, w in terms:
                for f in range(-half + 1, half):
                    a = arr[f % n_fft]
                    if abs(a * w) > _COEF_TOL:
                        new_terms.append((j + (f,), w * a))
            terms = new_terms
        for j, w in terms:
            out[j] = out.get(j, 0j) + w
    cleaned = {j: w for j, w in out.items() if abs(w) > _COEF_TOL}
    return TorusPotential(d, cleaned)


@dataclass
class LindstedtSolution:
    """First-order approximate solution u_eps = eps * u1 in angle variables."""

    c: tuple
    epsilon: float
    omega: tuple
    alpha0: float
    alpha1: float
    pulled_back: TorusPotential
    transport: FirstOrderSolution
    charts: tuple = field(repr=False, default=())

    @property
    def alpha_eps(self) -> float:
        return self.alpha0 + self.epsilon * self.alpha1


def lindstedt_first_order(systems, U: TorusPotential, c, epsilon: float,
                          resonance_tol: float | None = None) -> LindstedtSolution:
    """First-order Lindstedt truncation around the unperturbed torus T_c.

    The zeroth-order generating function vanishes in angle variables; the
    first order solves the transport equation for the pullback of U through
    the charts, and alpha gains eps times the pullback mean (the invariant-
    measure average of U).  Every |c_i| must exceed its flat-region edge.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    systems = tuple(systems)
    if len(systems) != c.size or U.dimension != c.size:
        raise DomainError("dimension mismatch")
    charts, omega = [], []
    alpha0 = 0.0
    for i, (sys, ci) in enumerate(zip(systems, c)):
        alpha = AlphaFunction1D(sys)
        if abs(ci) <= alpha.c_flat:
            raise DomainError(f"component {i}: |c| inside the flat region")
        Ei = alpha.value(ci)
        alpha0 += Ei
        charts.append(aa.ActionAngleChart(sys, Ei, branch="+"))
        omega.append(float(np.sign(ci)) * aa.frequency(sys, Ei))
    W = _pullback(U, charts)
    sol = solve_first_order(W, omega, resonance_tol=resonance_tol)
    return LindstedtSolution(c=tuple(float(x) for x in c), epsilon=float(epsilon),
                             omega=tuple(omega), alpha0=alpha0, alpha1=sol.alpha1,
                             pulled_back=W, transport=sol, charts=tuple(charts))


def _energy_taylor(sys: aa.MechanicalSystem1D, E: float):
    """Cubic Taylor model of h(I) around I = c_plus(E), via FD of the frequency."""
    w = aa.frequency(sys, E)
    dE = 1e-4 * max(E, 1e-3)
    wp = (aa.frequency(sys, E + dE) - aa.frequency(sys, E - dE)) / (2 * dE)
    wpp = (aa.frequency(sys, E + dE) - 2 * w + aa.frequency(sys, E - dE)) / dE**2
    h2 = w * wp                    # d^2 h / dI^2 = omega * d omega / dE
    h3 = w * (wp * wp + w * wpp)   # d^3 h / dI^3
    return w, h2, h3


def lindstedt_defect(sol: LindstedtSolution, grid_n: int = 48) -> float:
    """Sup over a grid of |H_eps(theta, c + eps grad u1) - alpha_eps|.

    The per-axis energy function is replaced by its cubic Taylor model around
    c_i, exact in the flat case and with O(eps^4) model error otherwise, so
    the measured defect isolates the genuine O(eps^2) Lindstedt remainder.
    """
    d = len(sol.c)
    eps = sol.epsilon
    axes = [np.arange(grid_n) / grid_n] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    gu = sol.transport.grad_u1_eval(grid)
    H = np.zeros(grid.shape[:-1])
    for i in range(d):
        sys = sol.charts[i].system
        ci = sol.c[i]
        s = eps * gu[..., i] * np.sign(ci)   # shift of |I| along the branch
        Ei = sol.charts[i].energy
        if sys.mu == 0.0:
            H += 0.5 * (abs(ci) + s) ** 2
        else:
            w, h2, h3 = _energy_taylor(sys, Ei)
            H += Ei + w * s + 0.5 * h2 * s * s + h3 * s**3 / 6.0
    H += eps * sol.pulled_back(grid)
    return float(np.max(np.abs(H - sol.alpha_eps)))
