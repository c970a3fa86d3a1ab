"""Deformed dynamical mode families, their Gram matrices, and full-rank certificates.

For a degree box the family attaches to each nonzero frequency tuple k the
function of the initial phase obtained by summing, over all resonance
directions b that annihilate some in-range mode, the average of the deformed
phase factor prod_i exp(2 pi i k_i x^i(theta0^i + b_i t)) over one period.
The two members of a +-b pair contribute identical integrals on a common
torus, so canonical representatives are enumerated with weight 2.

Entries of the Gram matrix are L^2 inner products over the initial phase.
They are assembled spectrally: every per-axis deformed factor is expanded by
FFT into Fourier modes of theta (x(theta) - theta is analytic and periodic,
so the tails decay geometrically), the period average then picks out the
lattice line j . b = 0 exactly, and the theta0 integrals reduce to a Parseval
sum -- algebraically identical to tensor-trapezoid quadrature at the FFT grid,
at a tiny fraction of the cost.  The matrix is formed as F F^H, so it is
Hermitian positive semidefinite by construction.

At zero coupling every axis factor collapses to a Kronecker delta and the
matrix is exactly 4x the identity; the deviation grows linearly in mu.  The
mu-sweep brackets candidate rank-loss points (sign changes of Re det and dips
of the smallest singular value); for analytic potentials the true zero set is
at most countable, so bracketing is all a numerical sweep can honestly claim.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import action_angle as aa
from .averaging import ResonantTorus, resonant_torus
from .errors import DomainError, InfeasibleResonanceError
from .potentials import ResonanceVector

_FFT_N = 1024
_TAIL_TOL = 1e-12


@dataclass
class GramReport:
    """Gram matrix of the deformed mode family with rank diagnostics."""

    axis_degrees: tuple
    mu: tuple
    energy: float
    fixed_k1: int | None
    mode_index: list
    matrix: np.ndarray
    det: complex
    sigma_min: float
    sigma_max: float
    full_rank: bool
    rank_tol: float
    quadrature_error_estimate: float
    resonances: list = field(default_factory=list)
    c_per_resonance: dict = field(default_factory=dict)
    infeasible: list = field(default_factory=list)

    def to_dict(self):
        return {
            "axis_degrees": list(self.axis_degrees),
            "mu": list(self.mu),
            "energy": self.energy,
            "fixed_k1": self.fixed_k1,
            "mode_index": [list(k) if isinstance(k, tuple) else k for k in self.mode_index],
            "matrix_re": self.matrix.real.tolist(),
            "matrix_im": self.matrix.imag.tolist(),
            "det_re": self.det.real,
            "det_im": self.det.imag,
            "sigma_min": self.sigma_min,
            "sigma_max": self.sigma_max,
            "full_rank": self.full_rank,
            "rank_tol": self.rank_tol,
            "quadrature_error_estimate": self.quadrature_error_estimate,
            "resonances": [list(b) for b in self.resonances],
            "c_per_resonance": {str(list(b)): list(c) for b, c in self.c_per_resonance.items()},
            "infeasible": [list(b) for b in self.infeasible],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def mode_function(torus: ResonantTorus, k, theta0, n_t: int | None = None) -> complex:
    """Average of prod_i exp(2 pi i k_i x^i(theta0^i + b_i t)) over one period.

    Direct trapezoid in t with node doubling; the independent (slow) route
    against which the spectral Gram assembly is checked.
    """
    k = tuple(int(x) for x in k)
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    if len(k) != torus.dimension or theta0.size != torus.dimension:
        raise DomainError("dimension mismatch")
    if n_t is None:
        n_t = 1024 * max(abs(b) for b in torus.b)

    def level(n):
        t = np.arange(n) / n
        total = np.ones(n, dtype=complex)
        for i, chart in enumerate(torus.charts):
            if k[i] == 0:
                continue
            x = chart.x_of_theta(theta0[i] + torus.b[i] * t)
            total = total * np.exp(2j * np.pi * k[i] * x)
        return complex(total.mean())

    prev = level(n_t)
    for _ in range(3):
        nxt = level(2 * n_t)
        if abs(nxt - prev) < 1e-11:
            return nxt
        prev, n_t = nxt, 2 * n_t
    return prev


def _phase_powers(x: np.ndarray, k_values) -> dict:
    """{k: exp(2 pi i k x)} built by power recursion (one exp, then products)."""
    out = {0: None}
    kmax = max((abs(k) for k in k_values), default=0)
    if kmax == 0:
        return out
    base = np.exp(2j * np.pi * x)
    power = base
    for k in range(1, kmax + 1):
        out[k] = power
        out[-k] = np.conj(power)
        if k < kmax:
            power = power * base
    return {k: out[k] for k in set(k_values) | {0} if k in out}


def mode_function_grid(torus: ResonantTorus, k_list, n: int,
                       n_t: int | None = None) -> dict:
    """mode_function on a uniform n^d grid of theta0, for many k at once.

    Returns {k: complex array of shape (n,)*d}.  Per-axis phase factors are
    shared across modes and the d=2 case reduces to one matrix product over
    the time nodes, so sweeping a whole degree box costs little more than a
    single mode.
    """
    d = torus.dimension
    k_list = [tuple(int(x) for x in k) for k in k_list]
    if n_t is None:
        n_t = 1024 * max(abs(b) for b in torus.b)
    t = np.arange(n_t) / n_t
    base = np.arange(n) / n
    xs = [chart.x_of_theta(np.add.outer(base, torus.b[i] * t))
          for i, chart in enumerate(torus.charts)]
    k_sets = [sorted({k[i] for k in k_list}) for i in range(d)]
    factors = [_phase_powers(xs[i], k_sets[i]) for i in range(d)]
    ones = np.ones((n, n_t), dtype=complex)
    out = {}
    if d == 2:
        ks1 = sorted({k[0] for k in k_list})
        ks2 = sorted({k[1] for k in k_list})
        F1 = np.stack([factors[0][k] if k else ones for k in ks1])
        F2 = np.stack([factors[1][k] if k else ones for k in ks2])
        # avg[i, a, j, b] = mean_t F1[i, a, t] * F2[j, b, t]
        avg = (F1.reshape(len(ks1) * n, n_t) @ F2.reshape(len(ks2) * n, n_t).T) / n_t
        avg = avg.reshape(len(ks1), n, len(ks2), n)
        i1 = {k: i for i, k in enumerate(ks1)}
        i2 = {k: i for i, k in enumerate(ks2)}
        for k in k_list:
            out[k] = avg[i1[k[0]], :, i2[k[1]], :].copy()
        return out
    for k in k_list:
        live = [factors[i][k[i]] for i in range(d) if k[i] != 0]
        if not live:
            out[k] = np.ones((n,) * d, dtype=complex)
            continue
        prod = live[0]
        for f in live[1:]:
            prod = np.einsum("at,bt->abt", prod.reshape(-1, n_t), f).reshape(-1, n_t)
        avg = prod.mean(axis=-1)
        shape = [n if k[i] != 0 else 1 for i in range(d)]
        out[k] = np.broadcast_to(avg.reshape(shape), (n,) * d).copy()
    return out


def eligible_resonances(degrees, fixed_k1: int | None = None) -> list[ResonanceVector]:
    """Canonical representatives of the resonance directions entering the family.

    With fixed_k1 = kappa these are the primitives of (k2, -kappa) over the
    nonzero in-range k2 (at most 2 deg2 of them); otherwise the primitives of
    (k2, -k1) over the full nonzero degree box.
    """
    reps = set()
    if fixed_k1 is not None:
        if fixed_k1 == 0:
            raise DomainError("fixed_k1 must be nonzero")
        d2 = degrees[-1]
        for k2 in range(-d2, d2 + 1):
            if k2 == 0:
                continue
            g = math.gcd(abs(k2), abs(fixed_k1))
            reps.add(ResonanceVector((k2 // g, -fixed_k1 // g)).canonical())
    else:
        d1, d2 = degrees
        for k1 in range(-d1, d1 + 1):
            for k2 in range(-d2, d2 + 1):
                if k1 == 0 or k2 == 0:
                    continue
                g = math.gcd(abs(k1), abs(k2))
                reps.add(ResonanceVector((k2 // g, -k1 // g)).canonical())
    return sorted(reps)


def _axis_mode_coefficients(chart, k_values, n_fft: int):
    """Fourier coefficients (FFT layout) of theta -> exp(2 pi i k x(theta)).

    Returns ({k: coefficient array}, tail) where tail is the largest
    coefficient magnitude in the upper half of the band, used as the
    truncation error estimate.  Doubles the grid until the tail is resolved.
    """
    if chart.system.mu == 0.0:
        out = {}
        for k in k_values:
            arr = np.zeros(n_fft, dtype=complex)
            arr[k % n_fft] = 1.0
            out[k] = arr
        return out, 0.0
    n = n_fft
    while True:
        theta = np.arange(n) / n
        x = chart.x_of_theta(theta)
        out = {k: np.fft.fft(np.exp(2j * np.pi * k * x)) / n for k in k_values}
        tail = 0.0
        for a in out.values():
            shifted = np.abs(np.fft.fftshift(a))
            tail = max(tail, float(np.max(shifted[: n // 8])),
                       float(np.max(shifted[-n // 8:])))
        if tail < _TAIL_TOL or n >= 8 * n_fft:
            return out, tail
        n *= 2


def _coef(arr: np.ndarray, j: int) -> complex:
    n = arr.shape[0]
    if abs(j) >= n // 2:
        return 0j
    return arr[j % n]


def gram_matrix(degrees, systems, e: float, fixed_k1: int | None = None,
                rank_tol: float = 1e-8, margin: float | None = None,
                n_fft: int = _FFT_N) -> GramReport:
    """Assemble the Gram matrix of the deformed mode family at energy e.

    degrees is the per-axis degree box (deg1, deg2); with fixed_k1 the family
    is indexed by the nonzero k2 alone (the surface-of-revolution variant,
    requiring the first axis to be uncoupled), otherwise by all nonzero
    (k1, k2).  Raises if every resonance is infeasible at this energy;
    individually infeasible directions are skipped and recorded.
    """
    systems = tuple(systems)
    if len(systems) != 2:
        raise DomainError("Gram matrices are implemented for d=2")
    degrees = tuple(int(x) for x in degrees)
    if fixed_k1 is None:
        if degrees[0] < 1 or degrees[1] < 1:
            raise DomainError("trig-polynomial axes need degree >= 1")
    elif degrees[-1] < 1:
        raise DomainError("trig-polynomial axes need degree >= 1")
    if fixed_k1 is not None and systems[0].mu != 0.0:
        raise DomainError("fixed_k1 variant requires the first axis to be flat (mu_1 = 0)")

    reps = eligible_resonances(degrees, fixed_k1)
    tori: dict[ResonanceVector, ResonantTorus] = {}
    infeasible = []
    for b in reps:
        try:
            tori[b] = resonant_torus(systems, e, b, margin=margin)
        except InfeasibleResonanceError:
            infeasible.append(b)
    if not tori:
        raise InfeasibleResonanceError(
            f"all {len(reps)} resonance directions are infeasible at e={e}")

    d2 = degrees[-1]
    k2_range = [k for k in range(-d2, d2 + 1) if k != 0]
    tail_max = 0.0

    if fixed_k1 is not None:
        modes = list(k2_range)
        vectors = []
        axis2 = {}
        for b, torus in tori.items():
            axis2[b], tail = _axis_mode_coefficients(torus.charts[1], k2_range, n_fft)
            tail_max = max(tail_max, tail)
        support: dict[int, int] = {}
        rows = []
        for k2 in modes:
            vec: dict[int, complex] = {}
            for b in tori:
                n_, m_ = b
                num = -fixed_k1 * n_
                if num % m_ != 0:
                    continue
                j = num // m_
                coef = 2.0 * _coef(axis2[b][k2], j)
                if coef != 0:
                    vec[j] = vec.get(j, 0j) + coef
            rows.append(vec)
            for j in vec:
                support.setdefault(j, len(support))
    else:
        d1 = degrees[0]
        k1_range = [k for k in range(-d1, d1 + 1) if k != 0]
        modes = [(k1, k2) for k1 in k1_range for k2 in k2_range]
        axis1, axis2 = {}, {}
        for b, torus in tori.items():
            axis1[b], t1 = _axis_mode_coefficients(torus.charts[0], k1_range, n_fft)
            axis2[b], t2 = _axis_mode_coefficients(torus.charts[1], k2_range, n_fft)
            tail_max = max(tail_max, t1, t2)
        support = {}
        rows = []
        for k1, k2 in modes:
            vec = {}
            for b in tori:
                n_, m_ = b
                a1 = axis1[b][k1]
                a2 = axis2[b][k2]
                half = a1.shape[0] // 2
                tmax = (half - 1) // max(abs(n_), abs(m_))
                for t in range(-tmax, tmax + 1):
                    coef = 2.0 * _coef(a1, t * m_) * _coef(a2, -t * n_)
                    if abs(coef) > 1e-16:
                        key = (t * m_, -t * n_)
                        vec[key] = vec.get(key, 0j) + coef
            rows.append(vec)
            for j in vec:
                support.setdefault(j, len(support))

    F = np.zeros((len(modes), max(len(support), 1)), dtype=complex)
    for i, vec in enumerate(rows):
        for j, coef in vec.items():
            F[i, support[j]] = coef
    G = F @ F.conj().T

    sv = np.linalg.svd(G, compute_uv=False)
    sigma_max, sigma_min = float(sv[0]), float(sv[-1])
    report = GramReport(
        axis_degrees=degrees, mu=tuple(s.mu for s in systems), energy=float(e),
        fixed_k1=fixed_k1, mode_index=modes, matrix=G, det=complex(np.linalg.det(G)),
        sigma_min=sigma_min, sigma_max=sigma_max,
        full_rank=bool(sigma_min > rank_tol * sigma_max), rank_tol=float(rank_tol),
        quadrature_error_estimate=float(tail_max),
        resonances=sorted(tori), c_per_resonance={b: t.c for b, t in tori.items()},
        infeasible=infeasible)
    return report


def full_rank_certificate(report: GramReport, rank_tol: float | None = None) -> bool:
    """SVD rank verdict: smallest singular value above rank_tol * largest."""
    tol = report.rank_tol if rank_tol is None else float(rank_tol)
    sv = np.linalg.svd(report.matrix, compute_uv=False)
    report.sigma_min, report.sigma_max = float(sv[-1]), float(sv[0])
    report.full_rank = bool(sv[-1] > tol * sv[0])
    report.rank_tol = tol
    return report.full_rank


@dataclass
class SweepRow:
    mu: tuple
    det: complex
    sigma_min: float
    sigma_max: float
    full_rank: bool
    sign_change: bool = False
    sigma_dip: bool = False


def mu_sweep(degrees, potentials, e: float, mu_grid, fixed_k1: int | None = None,
             rank_tol: float = 1e-8, margin: float | None = None,
             dip_tol: float = 0.1) -> list[SweepRow]:
    """Sweep the coupling(s) and record det G, sigma_min, and rank verdicts.

    mu_grid entries are either scalars (vary the last axis, first axis fixed
    at zero coupling) or length-d vectors.  Rows where Re det changes sign or
    sigma_min < dip_tol are flagged as candidate members of the exceptional
    set; the sweep brackets candidates, it does not prove membership.
    """
    rows: list[SweepRow] = []
    for entry in mu_grid:
        mus = (0.0, float(entry)) if np.isscalar(entry) else tuple(float(v) for v in entry)
        systems = [aa.MechanicalSystem1D(m, V) for m, V in zip(mus, potentials)]
        rep = gram_matrix(degrees, systems, e, fixed_k1=fixed_k1, rank_tol=rank_tol,
                          margin=margin)
        rows.append(SweepRow(mu=mus, det=rep.det, sigma_min=rep.sigma_min,
                             sigma_max=rep.sigma_max, full_rank=rep.full_rank))
    for prev, cur in zip(rows, rows[1:]):
        if prev.det.real * cur.det.real < 0:
            cur.sign_change = True
    for row in rows:
        row.sigma_dip = row.sigma_min < dip_tol
    return rows
