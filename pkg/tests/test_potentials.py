import numpy as np
import pytest

from toruskit.errors import DomainError
from toruskit.potentials import (PeriodicPotential1D, ResonanceVector,
                                 TorusPotential, degree, normalize_min_zero,
                                 separable_part, spectrum_sets)

GRID = np.arange(4096) / 4096


def test_pendulum_eval():
    V = PeriodicPotential1D.pendulum()
    assert V(0.0) == pytest.approx(0.0, abs=1e-15)
    assert V(0.5) == pytest.approx(2.0, abs=1e-14)


def test_torus_eval_single_pair():
    U = TorusPotential(2, {(2, -1): 0.5, (-2, 1): 0.5})
    assert U(np.array([0.0, 0.0])) == pytest.approx(1.0, abs=1e-14)


def test_hermitian_completion_and_violation():
    V = PeriodicPotential1D({1: 0.5 - 0.25j})
    assert V.coefficients[-1] == pytest.approx(0.5 + 0.25j)
    with pytest.raises(DomainError):
        PeriodicPotential1D({1: 0.5, -1: 0.4})


def test_normalize_min_zero():
    assert not normalize_min_zero(PeriodicPotential1D.constant(5.0)).coefficients
    Vn = normalize_min_zero(PeriodicPotential1D({1: 0.5, -1: 0.5}))
    vals = Vn(GRID)
    assert vals.min() >= -1e-10
    assert abs(vals.min()) < 1e-10
    assert Vn.coefficients[0] == pytest.approx(1.0, abs=1e-12)
    # pendulum is already normalized
    Vp = normalize_min_zero(PeriodicPotential1D.pendulum())
    assert Vp.coefficients[0] == pytest.approx(1.0, abs=1e-12)


def test_derivative_matches_finite_difference():
    V = PeriodicPotential1D({0: 1.0, 1: -0.3 + 0.1j, -1: -0.3 - 0.1j, 3: 0.05, -3: 0.05})
    x = np.linspace(0, 1, 17)
    h = 1e-6
    fd = (V(x + h) - V(x - h)) / (2 * h)
    np.testing.assert_allclose(V.derivative(x), fd, atol=1e-7)


def test_spectrum_sets_examples():
    U = TorusPotential(2, {(2, -1): 0.5, (-2, 1): 0.5})
    ss = spectrum_sets(U)
    assert ss.coprime_orthogonal == frozenset({ResonanceVector((1, 2)),
                                               ResonanceVector((-1, -2))})

    U = TorusPotential(2, {(0, 3): 0.5, (0, -3): 0.5})
    ss = spectrum_sets(U)
    assert not ss.nonsingular and not ss.coprime_orthogonal

    U = TorusPotential(2, {(1, 1): .5, (-1, -1): .5, (1, -1): .5, (-1, 1): .5})
    ss = spectrum_sets(U)
    assert ss.coprime_orthogonal == frozenset(
        {ResonanceVector(v) for v in [(1, -1), (-1, 1), (1, 1), (-1, -1)]})


def test_spectrum_sets_integer_exactness():
    rng = np.random.default_rng(3)
    for _ in range(12):
        k = (int(rng.integers(-6, 7)), int(rng.integers(-6, 7)))
        if k[0] == 0 or k[1] == 0:
            continue
        U = TorusPotential(2, {k: 0.5, (-k[0], -k[1]): 0.5})
        ss = spectrum_sets(U)
        for b in ss.coprime_orthogonal:
            assert b[0] * k[0] + b[1] * k[1] == 0
            assert all(c != 0 for c in b)
            assert np.gcd(abs(b[0]), abs(b[1])) == 1


def test_spectrum_amplitude_threshold():
    U = TorusPotential(2, {(1, 1): 1e-12, (-1, -1): 1e-12, (2, 0): 0.5, (-2, 0): 0.5})
    ss = spectrum_sets(U, amplitude_tol=1e-9)
    assert (1, 1) not in ss.spectrum and (2, 0) in ss.spectrum
    assert not ss.nonsingular
    ss_exact = spectrum_sets(U)
    assert (1, 1) in ss_exact.nonsingular


def test_spectrum_sets_d3_search():
    U = TorusPotential(3, {(1, 1, 1): 0.5, (-1, -1, -1): 0.5,
                           (2, 0, 1): 0.25, (-2, 0, -1): 0.25})
    ss = spectrum_sets(U)
    for k in ss.nonsingular:
        assert any(sum(a * b for a, b in zip(k, bb)) == 0
                   for bb in ss.coprime_orthogonal)
    for b in ss.coprime_orthogonal:
        assert all(c != 0 for c in b)


def test_separable_part():
    # identity on separable input
    U = TorusPotential(2, {(1, 0): .5, (-1, 0): .5, (0, 2): .3, (0, -2): .3})
    assert separable_part(U).coefficients == U.coefficients
    # purely non-singular input projects to zero
    U = TorusPotential(2, {(1, 1): .5, (-1, -1): .5})
    assert not separable_part(U).coefficients
    # mixed input splits; remainder reconstructs exactly
    U = TorusPotential(2, {(1, 0): .5, (-1, 0): .5, (1, 1): .5, (-1, -1): .5})
    Us = separable_part(U)
    assert sorted(Us.coefficients) == [(-1, 0), (1, 0)]
    rest = U.without_modes(Us.modes())
    merged = dict(Us.coefficients)
    merged.update(rest.coefficients)
    assert merged == U.coefficients
    # projection: idempotent, complementary spectra disjoint
    assert separable_part(Us).coefficients == Us.coefficients
    assert not set(Us.coefficients) & set(rest.coefficients)


def test_degree():
    U = TorusPotential(2, {(2, -1): .5, (-2, 1): .5})
    assert degree(U, 1) == 1
    assert degree(TorusPotential(2, {}), 0) == 0
    U = TorusPotential(2, {(1, 3): .5, (-1, -3): .5, (2, 1): .25, (-2, -1): .25})
    assert degree(U, 1) == 3


def test_resonance_vector_validation():
    with pytest.raises(DomainError):
        ResonanceVector((2, 4))
    with pytest.raises(DomainError):
        ResonanceVector((1, 0))
    assert ResonanceVector((-1, 2)).canonical() == (1, -2)


def test_loader_roundtrip():
    doc = {"coeffs": [{"k": [2, -1], "re": 0.5, "im": 0.25}]}
    U = TorusPotential.from_document(2, doc)
    assert U.coefficients[(2, -1)] == pytest.approx(0.5 + 0.25j)
    assert U.coefficients[(-2, 1)] == pytest.approx(0.5 - 0.25j)
    V = PeriodicPotential1D.from_document({"builtin": "pendulum"})
    assert V(0.25) == pytest.approx(1.0, abs=1e-14)
