"""Periodic potentials on the circle and torus, stored as finite Fourier series.

A potential is a real-valued function represented by a sparse map from integer
frequencies to complex amplitudes with Hermitian symmetry (the coefficient at
-k is the conjugate of the one at k).  All lattice combinatorics (spectra,
orthogonal complements, degrees) are done in exact integer arithmetic; floating
point enters only through the amplitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConfigError, DomainError

_HERMITIAN_TOL = 1e-12
_GRID_N = 4096


def _hermitianize(coeffs: Mapping, zero_key) -> dict:
    """Complete/verify Hermitian symmetry, dropping exact zeros."""
    out: dict = {}
    for k, c in coeffs.items():
        c = complex(c)
        if c == 0:
            continue
        out[k] = c
    # verify or fill the mirror coefficients
    full: dict = {}
    for k, c in out.items():
        mk = tuple(-x for x in k) if isinstance(k, tuple) else -k
        if mk in out:
            mirror = out[mk]
            if abs(mirror - c.conjugate()) > _HERMITIAN_TOL * max(1.0, abs(c)):
                raise DomainError(f"coefficients at {k} and its negation are not conjugate")
            full[k] = c
        else:
            full[k] = c
            full[mk] = c.conjugate()
    if zero_key in full:
        c0 = full[zero_key]
        if abs(c0.imag) > _HERMITIAN_TOL * max(1.0, abs(c0)):
            raise DomainError("mean coefficient must be real")
        full[zero_key] = complex(c0.real, 0.0)
    return full


class PeriodicPotential1D:
    """Real periodic function on the circle, sampled from its Fourier series.

    Coefficients map integer frequency k to a complex amplitude; the stored
    map always contains both k and -k (Hermitian pair).  Evaluation returns
    the real part and raises if the imaginary residual betrays broken
    symmetry.
    """

    def __init__(self, coefficients: Mapping[int, complex]):
        self.coefficients = _hermitianize({int(k): v for k, v in coefficients.items()}, 0)
        self.max_frequency = max((abs(k) for k in self.coefficients), default=0)
        ks = sorted(self.coefficients)
        self._k_arr = np.array(ks, dtype=float)
        self._c_arr = np.array([self.coefficients[k] for k in ks], dtype=complex)

    @classmethod
    def pendulum(cls) -> "PeriodicPotential1D":
        """V(x) = 1 - cos(2 pi x)."""
        return cls({0: 1.0, 1: -0.5, -1: -0.5})

    @classmethod
    def constant(cls, value: float) -> "PeriodicPotential1D":
        return cls({0: value} if value else {})

    @classmethod
    def zero(cls) -> "PeriodicPotential1D":
        return cls({})

    @classmethod
    def from_document(cls, doc) -> "PeriodicPotential1D":
        """Build from a config fragment: {"builtin": "pendulum"} or {"coeffs": [...]}.

        Coefficient records are {k: int or [int], re: float, im: float}; one
        representative per +-k pair is enough, Hermitian completion is applied.
        """
        if not isinstance(doc, Mapping):
            raise ConfigError("potential: expected a table")
        if "builtin" in doc:
            name = doc["builtin"]
            if name == "pendulum":
                return cls.pendulum()
            if name == "zero":
                return cls.zero()
            raise ConfigError(f"potential.builtin: unknown name {name!r}")
        if "coeffs" not in doc:
            raise ConfigError("potential: need either 'builtin' or 'coeffs'")
        coeffs: dict[int, complex] = {}
        for rec in doc["coeffs"]:
            k = rec["k"]
            if isinstance(k, (list, tuple)):
                if len(k) != 1:
                    raise ConfigError("potential.coeffs.k: expected a single frequency")
                k = k[0]
            coeffs[int(k)] = complex(float(rec.get("re", 0.0)), float(rec.get("im", 0.0)))
        return cls(coeffs)

    def __call__(self, x):
        """Evaluate at x (scalar or array); x is taken mod 1."""
        x = np.asarray(x, dtype=float)
        phases = np.exp(2j * np.pi * np.multiply.outer(x, self._k_arr))
        total = phases @ self._c_arr if self._c_arr.size else np.zeros(x.shape, dtype=complex)
        scale = max(1.0, float(np.sum(np.abs(self._c_arr)))) if self._c_arr.size else 1.0
        if self._c_arr.size and np.max(np.abs(np.atleast_1d(total).imag)) > 1e-12 * scale:
            raise DomainError("imaginary residual exceeds 1e-12; Hermitian symmetry broken")
        real = np.real(total)
        return float(real) if real.ndim == 0 else real

    def derivative(self, x):
        """V'(x), from the term-by-term differentiated series."""
        x = np.asarray(x, dtype=float)
        if not self._c_arr.size:
            return 0.0 if x.ndim == 0 else np.zeros(x.shape)
        phases = np.exp(2j * np.pi * np.multiply.outer(x, self._k_arr))
        total = phases @ (2j * np.pi * self._k_arr * self._c_arr)
        real = np.real(total)
        return float(real) if real.ndim == 0 else real

    def c0_norm(self) -> float:
        """Sup-norm bound max |V| on a dense grid (the C_i of the coupling bound)."""
        grid = np.arange(_GRID_N) / _GRID_N
        return float(np.max(np.abs(self(grid))))

    def grid_min(self, n: int = _GRID_N) -> tuple[float, float]:
        """(location, value) of the minimum over an n-grid, refined locally."""
        grid = np.arange(n) / n
        vals = self(grid)
        i = int(np.argmin(vals))
        lo, hi = (i - 1) / n, (i + 1) / n
        res = minimize_scalar(lambda t: self(t), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-14})
        if res.fun < vals[i]:
            return float(res.x % 1.0), float(res.fun)
        return float(grid[i]), float(vals[i])

    def shifted(self, constant: float) -> "PeriodicPotential1D":
        coeffs = dict(self.coefficients)
        coeffs[0] = coeffs.get(0, 0.0) + constant
        return PeriodicPotential1D(coeffs)

    def zeros(self, tol: float = 1e-9) -> list[float]:
        """Locations where V vanishes (within tol), for quadrature splitting."""
        grid = np.arange(_GRID_N) / _GRID_N
        vals = self(grid)
        out: list[float] = []
        for i in np.flatnonzero(vals < tol):
            lo, hi = (i - 1) / _GRID_N, (i + 1) / _GRID_N
            res = minimize_scalar(lambda t: self(t), bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-14})
            if res.fun < tol:
                x0 = float(res.x % 1.0)
                if not any(abs(x0 - z) < 2.0 / _GRID_N or abs(abs(x0 - z) - 1.0) < 2.0 / _GRID_N
                           for z in out):
                    out.append(x0)
        return sorted(out)

    def __repr__(self):
        return f"PeriodicPotential1D({self.coefficients!r})"


def normalize_min_zero(V: PeriodicPotential1D) -> PeriodicPotential1D:
    """Shift by a constant so the minimum over the circle is zero."""
    _, m = V.grid_min()
    return V.shifted(-m)


class TorusPotential:
    """Real function on T^d stored as a sparse Hermitian Fourier coefficient map."""

    def __init__(self, dimension: int, coefficients: Mapping[tuple, complex]):
        if dimension < 1:
            raise DomainError("dimension must be >= 1")
        self.dimension = int(dimension)
        cleaned = {}
        for k, c in coefficients.items():
            kt = tuple(int(x) for x in k)
            if len(kt) != self.dimension:
                raise DomainError(f"mode {kt} has wrong dimension (expected {self.dimension})")
            cleaned[kt] = complex(c)
        self.coefficients = _hermitianize(cleaned, (0,) * self.dimension)
        ks = sorted(self.coefficients)
        self._k_mat = np.array(ks, dtype=float).reshape(len(ks), self.dimension)
        self._k_int = [tuple(k) for k in ks]
        self._c_arr = np.array([self.coefficients[k] for k in ks], dtype=complex)

    @classmethod
    def from_document(cls, dimension: int, doc) -> "TorusPotential":
        if not isinstance(doc, Mapping) or "coeffs" not in doc:
            raise ConfigError("perturbation: expected a table with a 'coeffs' array")
        coeffs: dict[tuple, complex] = {}
        for rec in doc["coeffs"]:
            k = tuple(int(x) for x in rec["k"])
            coeffs[k] = complex(float(rec.get("re", 0.0)), float(rec.get("im", 0.0)))
        return cls(dimension, coeffs)

    def __call__(self, x):
        """Evaluate at points of shape (..., d); returns real values."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dimension:
            raise DomainError("point dimension mismatch")
        if not self._c_arr.size:
            return np.zeros(x.shape[:-1]) if x.ndim > 1 else 0.0
        phases = np.exp(2j * np.pi * (x @ self._k_mat.T))
        total = phases @ self._c_arr
        scale = max(1.0, float(np.sum(np.abs(self._c_arr))))
        if np.max(np.abs(np.atleast_1d(total).imag)) > 1e-12 * scale:
            raise DomainError("imaginary residual exceeds 1e-12; Hermitian symmetry broken")
        real = np.real(total)
        return float(real) if real.ndim == 0 else real

    def gradient(self, x):
        """Gradient at points of shape (..., d); returns shape (..., d)."""
        x = np.asarray(x, dtype=float)
        if not self._c_arr.size:
            return np.zeros(x.shape)
        phases = np.exp(2j * np.pi * (x @ self._k_mat.T))
        grad = np.real(phases @ (2j * np.pi * self._k_mat * self._c_arr[:, None]))
        return grad

    def mean(self) -> float:
        """The k=0 coefficient (mean over the torus)."""
        return float(self.coefficients.get((0,) * self.dimension, 0.0).real)

    def modes(self) -> list[tuple]:
        return list(self._k_int)

    def coefficient(self, k) -> complex:
        return self.coefficients.get(tuple(int(x) for x in k), 0j)

    def with_coefficients(self, coeffs: Mapping[tuple, complex]) -> "TorusPotential":
        return TorusPotential(self.dimension, coeffs)

    def without_modes(self, remove: Iterable[tuple]) -> "TorusPotential":
        drop = {tuple(k) for k in remove}
        return TorusPotential(self.dimension,
                              {k: c for k, c in self.coefficients.items() if k not in drop})

    def __repr__(self):
        return f"TorusPotential(d={self.dimension}, modes={len(self.coefficients)})"


class ResonanceVector(tuple):
    """Coprime integer vector with all components nonzero."""

    def __new__(cls, components):
        t = tuple(int(c) for c in components)
        if not t:
            raise DomainError("resonance vector must be nonempty")
        if any(c == 0 for c in t):
            raise DomainError(f"resonance vector {t} has a zero component")
        if math.gcd(*(abs(c) for c in t)) != 1:
            raise DomainError(f"resonance vector {t} is not coprime")
        return super().__new__(cls, t)

    def canonical(self) -> "ResonanceVector":
        """Representative of the +-pair with positive first component."""
        return self if self[0] > 0 else ResonanceVector(tuple(-c for c in self))


@dataclass(frozen=True)
class SpectrumSets:
    """Spectrum of a torus potential and its resonance combinatorics."""

    spectrum: frozenset
    nonsingular: frozenset
    coprime_orthogonal: frozenset


def orthogonal_primitive_2d(k) -> ResonanceVector:
    """The primitive integer vector orthogonal to k=(k1,k2), up to sign."""
    k1, k2 = int(k[0]), int(k[1])
    g = math.gcd(abs(k1), abs(k2))
    return ResonanceVector((k2 // g, -k1 // g))


def _orthogonal_search(k, bound: int) -> ResonanceVector | None:
    """Smallest coprime all-nonzero b with b.k = 0, searched in a sup-norm box."""
    d = len(k)
    pivot = max(range(d), key=lambda i: abs(k[i]))
    others = [i for i in range(d) if i != pivot]
    kp = k[pivot]
    best = None
    for radius in range(1, bound + 1):
        candidates = []
        for combo in _nonzero_box(len(others), radius):
            s = sum(k[i] * c for i, c in zip(others, combo))
            if s % kp != 0:
                continue
            bp = -s // kp
            if bp == 0 or abs(bp) > bound:
                continue
            b = [0] * d
            for i, c in zip(others, combo):
                b[i] = c
            b[pivot] = bp
            if math.gcd(*(abs(x) for x in b)) != 1:
                continue
            candidates.append(tuple(b))
        if candidates:
            best = min(candidates, key=lambda b: (max(abs(x) for x in b), b))
            break
    return ResonanceVector(best) if best is not None else None


def _nonzero_box(n: int, radius: int):
    """Integer tuples of length n with nonzero entries and sup-norm exactly radius."""
    rng = [x for x in range(-radius, radius + 1) if x != 0]
    if n == 0:
        yield ()
        return

    def rec(prefix):
        if len(prefix) == n:
            if max(abs(x) for x in prefix) == radius:
                yield tuple(prefix)
            return
        for x in rng:
            yield from rec(prefix + [x])

    yield from rec([])


def spectrum_sets(U: TorusPotential, amplitude_tol: float = 0.0,
                  search_bound: int = 50) -> SpectrumSets:
    """Spectrum, non-singular spectrum, and the coprime orthogonal resonance set.

    Coefficients with |U_k| <= amplitude_tol are treated as absent.  The
    non-singular part collects modes with at least two nonzero components;
    for each of those, the returned resonance set contains a +-pair of
    coprime all-nonzero integer vectors orthogonal to it (for d=2 this is
    exactly the primitive normal, for d>=3 the smallest one found within
    the search box).
    """
    if amplitude_tol < 0:
        raise DomainError("amplitude_tol must be >= 0")
    spectrum = {k for k, c in U.coefficients.items() if abs(c) > amplitude_tol}
    nonsing = {k for k in spectrum if sum(1 for x in k if x != 0) >= 2}
    orth: set[ResonanceVector] = set()
    for k in sorted(nonsing):
        if U.dimension == 2:
            b = orthogonal_primitive_2d(k)
        else:
            b = _orthogonal_search(k, search_bound)
            if b is None:
                raise DomainError(
                    f"no coprime all-nonzero orthogonal vector for mode {k} "
                    f"within sup-norm {search_bound}")
        orth.add(b)
        orth.add(ResonanceVector(tuple(-c for c in b)))
    return SpectrumSets(frozenset(spectrum), frozenset(nonsing), frozenset(orth))


def separable_part(U: TorusPotential) -> TorusPotential:
    """Projection onto axis modes and the mean (the separable Fourier block)."""
    keep = {k: c for k, c in U.coefficients.items()
            if sum(1 for x in k if x != 0) <= 1}
    return TorusPotential(U.dimension, keep)


def degree(U: TorusPotential, axis: int) -> int:
    """Max |k_axis| over the spectrum (0-based axis); 0 for an empty spectrum."""
    if not 0 <= axis < U.dimension:
        raise DomainError(f"axis {axis} out of range for dimension {U.dimension}")
    return max((abs(k[axis]) for k in U.coefficients), default=0)
