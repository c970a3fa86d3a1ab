"""Resonant tori, averaging of the perturbation along them, and the separability test.

A rational torus with direction b = (b_1, ..., b_d) (coprime, all components
nonzero) is located inside the isoenergy manifold {H_0 = e} by splitting the
energy so that the per-axis frequencies are proportional to b.  Averaging a
perturbing potential U over one period of such a torus annihilates, at first
order, exactly the Fourier modes orthogonal to b; collecting the flagged modes
over every available resonance yields the separability verdict.

Sign convention: every per-axis chart exposes the increasing '+' angle map
(x(theta) = theta + O(mu) on both momentum branches); the momentum sign is
carried by the signed cohomology c_i = sign(b_i) c+ and signed frequency
omega_i = sign(b_i) / T_i.  With this convention the deformed phase factors
stay O(mu)-close to the flat ones uniformly over the resonance set, and the
two members of a +-b pair average to identical integrals (substitute
t -> 1 - t), so only canonical representatives are ever integrated.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import action_angle as aa
from .errors import DomainError, InfeasibleResonanceError
from .potentials import (ResonanceVector, TorusPotential, separable_part,
                         spectrum_sets)

_T_NODES_BASE = 1024
_T_TOL = 1e-10


def default_margin(e: float) -> float:
    """Default distance gamma kept between |c_i| and the flat edge."""
    return 0.05 * np.sqrt(2.0 * e)


@dataclass(frozen=True)
class ResonantTorus:
    """Rational invariant torus of the unperturbed system at total energy e."""

    b: ResonanceVector
    energy: float
    energy_split: tuple
    c: tuple
    omega: tuple
    charts: tuple
    systems: tuple
    margin: float

    @property
    def dimension(self) -> int:
        return len(self.b)


def _frequency_inverse(sys: aa.MechanicalSystem1D, w: float) -> float:
    """Solve frequency(E) = w for E > 0 (frequency is strictly increasing)."""
    if w <= 0:
        raise DomainError("target frequency must be positive")
    if sys.mu == 0:
        return 0.5 * w * w
    E = 0.5 * w * w
    lo, hi = E, E
    while aa.frequency(sys, hi) < w:
        hi *= 4.0
    while aa.frequency(sys, lo) > w:
        lo /= 16.0
        if lo < 1e-280:
            raise DomainError("failed to bracket frequency inverse")
    return brentq(lambda x: aa.frequency(sys, x) - w, lo, hi, rtol=8.9e-16, maxiter=200)


def resonant_torus(systems, e: float, b, margin: float | None = None,
                   n_panels: int = 4096) -> ResonantTorus:
    """Locate the b-resonant torus in {H_0 = e}.

    The energy split e = sum e_i is found by a monotone root-find on the
    common frequency scale s (frequency_i(e_i) = s |b_i|).  Tori whose
    cohomology comes closer than `margin` to a flat-region edge are rejected
    as infeasible (the averaged first-order equation degenerates there).
    """
    b = ResonanceVector(b)
    systems = tuple(systems)
    if len(systems) != len(b):
        raise DomainError("resonance vector and system list have different lengths")
    if e <= 0:
        raise DomainError("energy must be positive")
    gamma = default_margin(e) if margin is None else float(margin)

    def split(s):
        return [_frequency_inverse(sys, s * abs(bi)) for sys, bi in zip(systems, b)]

    def total(s):
        return sum(split(s)) - e

    s_hi = min(aa.frequency(sys, e) / abs(bi) for sys, bi in zip(systems, b))
    if total(s_hi) < 0:
        s_lo = s_hi
        while total(s_hi) < 0:
            s_hi *= 2.0
    else:
        s_lo = s_hi
        while total(s_lo) > 0:
            s_lo /= 2.0
            if s_lo < 1e-280:
                raise InfeasibleResonanceError(f"no rotating split for b={tuple(b)} at e={e}")
    s = brentq(total, s_lo, s_hi, rtol=8.9e-16, maxiter=200)

    energies = split(s)
    charts, cs, omegas = [], [], []
    for i, (sys, bi, Ei) in enumerate(zip(systems, b, energies)):
        flat_edge = aa.separatrix_action(sys)
        ci_mag = aa.action(sys, Ei)
        if ci_mag <= flat_edge + gamma:
            raise InfeasibleResonanceError(
                f"axis {i}: |c|={ci_mag:.6g} within margin {gamma:.3g} of the "
                f"flat edge {flat_edge:.6g} for b={tuple(b)} at e={e}")
        chart = aa.ActionAngleChart(sys, Ei, branch="+", n_panels=n_panels)
        charts.append(chart)
        cs.append(float(np.sign(bi)) * ci_mag)
        omegas.append(float(np.sign(bi)) * aa.frequency(sys, Ei))
    return ResonantTorus(b=b, energy=float(e), energy_split=tuple(energies),
                         c=tuple(cs), omega=tuple(omegas), charts=tuple(charts),
                         systems=systems, margin=gamma)


def _axis_positions(torus: ResonantTorus, theta0_axis, t):
    """x^i over (theta0 grid) x (t grid) for every axis; list of 2-D arrays."""
    out = []
    for i, chart in enumerate(torus.charts):
        th = np.add.outer(np.atleast_1d(theta0_axis[i]), torus.b[i] * t)
        out.append(chart.x_of_theta(th))
    return out


def _grid_average(U: TorusPotential, torus: ResonantTorus, theta0_axes, n_t: int):
    """Tensor of torus averages over the outer product of per-axis theta0 grids."""
    t = np.arange(n_t) / n_t
    xs = _axis_positions(torus, theta0_axes, t)
    shape = tuple(len(np.atleast_1d(g)) for g in theta0_axes)
    total = np.zeros(shape, dtype=complex)
    for k, c in U.coefficients.items():
        factors = [np.exp(2j * np.pi * ki * x) if ki else None
                   for ki, x in zip(k, xs)]
        live = [f for f in factors if f is not None]
        if not live:
            total += c
            continue
        prod = live[0]
        for f in live[1:]:
            prod = np.einsum("at,bt->abt", prod, f).reshape(-1, n_t)
        mode_avg = prod.mean(axis=1)
        # rebuild the tensor shape: axes with k_i = 0 broadcast
        idx_shapes = [shape[i] if factors[i] is not None else 1 for i in range(len(k))]
        total += c * mode_avg.reshape(idx_shapes)
    return total


def average_along_torus(U: TorusPotential, torus: ResonantTorus, theta0) -> float:
    """Average of U over one period of the resonant trajectory through theta0.

    Trapezoid in rescaled time over [0, 1); the node count starts at
    1024 * max|b_i| and doubles until two successive levels agree to 1e-10.
    """
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    if theta0.size != torus.dimension:
        raise DomainError("theta0 has wrong dimension")
    axes = [np.array([v]) for v in theta0]
    n_t = _T_NODES_BASE * max(abs(bi) for bi in torus.b)
    prev = _grid_average(U, torus, axes, n_t)
    for _ in range(3):
        nxt = _grid_average(U, torus, axes, 2 * n_t)
        if np.max(np.abs(nxt - prev)) < _T_TOL:
            prev = nxt
            break
        prev, n_t = nxt, 2 * n_t
    val = complex(prev.reshape(-1)[0])
    return float(val.real)


def average_on_grid(U: TorusPotential, torus: ResonantTorus, n: int,
                    offset=None, n_t: int | None = None) -> np.ndarray:
    """Averages on a uniform n^d grid of initial phases (optionally offset)."""
    d = torus.dimension
    base = np.arange(n) / n
    if offset is None:
        offset = np.zeros(d)
    axes = [base + offset[i] for i in range(d)]
    if n_t is None:
        n_t = _T_NODES_BASE * max(abs(bi) for bi in torus.b)
    prev = _grid_average(U, torus, axes, n_t)
    nxt = _grid_average(U, torus, axes, 2 * n_t)
    if np.max(np.abs(nxt - prev)) >= _T_TOL:
        nxt = _grid_average(U, torus, axes, 4 * n_t)
    imag = np.max(np.abs(nxt.imag))
    if imag > 1e-10:
        raise DomainError(f"average has imaginary residual {imag:.2e}")
    return nxt.real


def torus_mean(U: TorusPotential, torus: ResonantTorus, n_theta: int = 512) -> float:
    """Mean of U against the invariant (uniform-in-angle) measure of the torus.

    This is the alpha^(1) constant of the first-order expansion; it reduces
    to the plain Fourier mean of U when every coupling vanishes.
    """
    theta = np.arange(n_theta) / n_theta
    xs = [chart.x_of_theta(theta) for chart in torus.charts]
    total = 0.0 + 0j
    for k, c in U.coefficients.items():
        term = c
        for ki, x in zip(k, xs):
            if ki:
                term = term * np.mean(np.exp(2j * np.pi * ki * x))
        total += term
    return float(total.real)


def annihilation_flags(U: TorusPotential, b) -> frozenset:
    """Non-singular spectrum modes annihilated by preservation of the b-torus:
    {k in S_U0 : k . b = 0}, in exact integer arithmetic."""
    b = ResonanceVector(b)
    sets = spectrum_sets(U)
    return frozenset(k for k in sets.nonsingular
                     if sum(ki * bi for ki, bi in zip(k, b)) == 0)


@dataclass
class ResonanceResult:
    """Outcome of one resonance direction inside the separability test."""

    b: tuple
    feasible: bool
    c: tuple | None = None
    omega: tuple | None = None
    max_residual: float | None = None
    flagged_modes: tuple = ()
    error: str | None = None

    def to_dict(self):
        return {
            "b": list(self.b),
            "feasible": self.feasible,
            "c": list(self.c) if self.c is not None else None,
            "omega": list(self.omega) if self.omega is not None else None,
            "max_residual": self.max_residual,
            "flagged_modes": [list(k) for k in self.flagged_modes],
            "error": self.error,
        }


@dataclass
class SeparabilityReport:
    """Per-resonance residuals and the overall separability verdict."""

    verdict: str
    energy: float
    residual_tol: float
    results: list = field(default_factory=list)
    obstruction_modes: tuple = ()
    uncovered_modes: tuple = ()

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "energy": self.energy,
            "residual_tol": self.residual_tol,
            "per_b": [r.to_dict() for r in self.results],
            "obstruction_modes": [list(k) for k in self.obstruction_modes],
            "uncovered_modes": [list(k) for k in self.uncovered_modes],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def separability_test(U: TorusPotential, systems, e: float,
                      theta_grid_n: int = 32, residual_tol: float = 1e-6,
                      margin: float | None = None, threads: int = 1,
                      amplitude_tol: float = 0.0, grid_offset=None) -> SeparabilityReport:
    """Average U - U_sep over every available resonant torus and collect verdicts.

    For each canonical resonance direction b (one per +-pair of the coprime
    orthogonal set of S_U) the test builds the torus at energy e, averages the
    non-separable part of U over a theta_grid_n^d grid of initial phases, and
    flags the annihilated coefficient set.  Modes flagged by a resonance whose
    residual exceeds residual_tol witness first-order non-preservation of that
    torus ("obstruction"); if no obstruction remains and the flagged sets
    cover the non-singular spectrum, the verdict is "separable-consistent".
    Infeasible resonances are reported, not fatal.
    """
    sets = spectrum_sets(U, amplitude_tol=amplitude_tol)
    W = U.without_modes(separable_part(U).modes())
    reps = sorted({b.canonical() for b in sets.coprime_orthogonal})

    def run(b):
        flagged = tuple(sorted(annihilation_flags(U, b)))
        try:
            torus = resonant_torus(systems, e, b, margin=margin)
        except InfeasibleResonanceError as err:
            return ResonanceResult(b=tuple(b), feasible=False, flagged_modes=flagged,
                                   error=str(err))
        res = average_on_grid(W, torus, theta_grid_n, offset=grid_offset)
        return ResonanceResult(b=tuple(b), feasible=True, c=torus.c, omega=torus.omega,
                               max_residual=float(np.max(np.abs(res))),
                               flagged_modes=flagged)

    if threads > 1 and len(reps) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, reps))
    else:
        results = [run(b) for b in reps]

    obstructions: set = set()
    covered: set = set()
    for r in results:
        if r.feasible:
            covered.update(r.flagged_modes)
            if r.max_residual is not None and r.max_residual > residual_tol:
                obstructions.update(r.flagged_modes)
    uncovered = set(sets.nonsingular) - covered
    verdict = "separable-consistent" if not obstructions and not uncovered else "obstruction"
    return SeparabilityReport(
        verdict=verdict, energy=float(e), residual_tol=float(residual_tol),
        results=results, obstruction_modes=tuple(sorted(obstructions)),
        uncovered_modes=tuple(sorted(uncovered)))
