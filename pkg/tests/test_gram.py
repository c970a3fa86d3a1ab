import dataclasses

import numpy as np
import pytest

from toruskit import action_angle as aa
from toruskit import averaging as av
from toruskit import gram as gr
from toruskit.errors import DomainError
from toruskit.potentials import PeriodicPotential1D, TorusPotential, spectrum_sets

PEND = PeriodicPotential1D.pendulum()


def free_pair():
    return [aa.MechanicalSystem1D(0.0, PEND), aa.MechanicalSystem1D(0.0, PEND)]


def mixed_pair(mu2):
    return [aa.MechanicalSystem1D(0.0, PEND), aa.MechanicalSystem1D(mu2, PEND)]


def test_mode_function_flat():
    torus = av.resonant_torus(free_pair(), 2.5, (1, 2))
    th0 = (0.25, 0.1)
    val = gr.mode_function(torus, (2, -1), th0)  # k.b = 0
    want = np.exp(2j * np.pi * (2 * th0[0] - th0[1]))
    assert abs(val - want) < 1e-12
    assert abs(gr.mode_function(torus, (1, 1), th0)) < 1e-12  # k.b = 3


def test_mode_function_deviation_order_mu():
    # Modes with k.b != 0 vanish at mu = 0 and are switched on at O(mu) by
    # the deformed phase factor (the perturbative estimate behind the Gram
    # expansion); k = (1,-2) with b = (1,1) picks up the first Fourier side
    # lobe of the deformed factor.  Resonant modes deviate even slower (the
    # O(mu) bound is not saturated for the symmetric pendulum).
    th0 = (0.2, 0.65)
    k = (1, -2)
    devs = {}
    for mu in (0.02, 0.04):
        torus = av.resonant_torus(mixed_pair(mu), 2.0, (1, 1))
        devs[mu] = abs(gr.mode_function(torus, k, th0))
    assert 1.6 <= devs[0.04] / devs[0.02] <= 2.4
    k_res = (1, -1)
    torus = av.resonant_torus(mixed_pair(0.04), 2.0, (1, 1))
    flat = np.exp(2j * np.pi * (k_res[0] * th0[0] + k_res[1] * th0[1]))
    assert abs(gr.mode_function(torus, k_res, th0) - flat) < 10 * 0.04


def test_eligible_resonances_counts():
    reps = gr.eligible_resonances((2, 2), fixed_k1=1)
    assert len(reps) == 4  # 2 * deg2 slope lines
    assert all(b[0] > 0 and b[1] != 0 for b in reps)
    reps3 = gr.eligible_resonances((2, 3))
    for b in reps3:
        assert np.gcd(abs(b[0]), abs(b[1])) == 1


def test_gram_flat_limit_fixed_k1():
    rep = gr.gram_matrix((2, 2), free_pair(), 1.0, fixed_k1=1)
    n = len(rep.mode_index)
    assert np.max(np.abs(rep.matrix - 4 * np.eye(n))) < 1e-8
    assert rep.full_rank and rep.sigma_min == pytest.approx(4.0, abs=1e-8)


def test_gram_flat_limit_general():
    rep = gr.gram_matrix((2, 2), free_pair(), 1.0)
    n = len(rep.mode_index)
    assert np.max(np.abs(rep.matrix - 4 * np.eye(n))) < 1e-8
    assert rep.sigma_min == pytest.approx(4.0, abs=1e-8)


def test_gram_requires_flat_axis_for_fixed_k1():
    with pytest.raises(DomainError):
        gr.gram_matrix((2, 2), mixed_pair(0.1)[::-1], 1.0, fixed_k1=1)


def test_gram_psd_and_hermitian():
    rep = gr.gram_matrix((2, 2), mixed_pair(0.08), 1.0, fixed_k1=2)
    G = rep.matrix
    assert np.max(np.abs(G - G.conj().T)) < 1e-12
    assert np.min(np.linalg.eigvalsh(G)) >= -1e-8


def test_gram_full_rank_pendulum():
    rep = gr.gram_matrix((3, 3), mixed_pair(0.05), 1.0, fixed_k1=1)
    assert rep.full_rank


def test_certificate_detects_zeroed_row():
    rep = gr.gram_matrix((2, 2), free_pair(), 1.0, fixed_k1=1)
    broken = dataclasses.replace(rep, matrix=rep.matrix.copy())
    broken.matrix[0, :] = 0.0
    broken.matrix[:, 0] = 0.0
    assert gr.full_rank_certificate(broken, rep.rank_tol) is False


def test_gram_deviation_linear():
    devs = []
    for mu in (0.01, 0.02, 0.04):
        rep = gr.gram_matrix((2, 2), mixed_pair(mu), 2.0, fixed_k1=1)
        n = len(rep.mode_index)
        devs.append(np.max(np.abs(rep.matrix - 4 * np.eye(n))) / mu)
    assert max(devs) / min(devs) < 2.0


def test_gram_spectral_matches_direct_quadrature():
    # dual route: spectral (FFT/Parseval) assembly against direct trapezoid
    # quadrature of the mode functions and of the theta0 inner products
    systems = mixed_pair(0.08)
    rep = gr.gram_matrix((1, 1), systems, 1.0, fixed_k1=1)
    reps = gr.eligible_resonances((1, 1), fixed_k1=1)
    tori = {b: av.resonant_torus(systems, 1.0, b) for b in reps}
    n_th = 32
    th = np.arange(n_th) / n_th
    fvals = {k2: np.zeros(n_th, dtype=complex) for k2 in rep.mode_index}
    for b, torus in tori.items():
        for k2 in rep.mode_index:
            grids = gr.mode_function_grid(torus, [(1, k2)], n_th)
            # 1-D family: evaluate at theta0^1 = 0 row
            fvals[k2] += 2.0 * grids[(1, k2)][0, :]
    G = np.empty((2, 2), dtype=complex)
    for i, k2 in enumerate(rep.mode_index):
        for j, k2p in enumerate(rep.mode_index):
            G[i, j] = np.mean(fvals[k2] * np.conj(fvals[k2p]))
    np.testing.assert_allclose(G, rep.matrix, atol=1e-9)


def test_gram_annihilation_consistency():
    # modes flagged by annihilation_flags give the 4-delta pattern at mu=0
    rng = np.random.default_rng(5)
    for _ in range(3):
        k = (int(rng.integers(1, 3)), int(rng.integers(-2, 3)) or 1)
        U = TorusPotential(2, {k: 0.5, (-k[0], -k[1]): 0.5})
        sets_b = sorted({b.canonical() for b in spectrum_sets(U).coprime_orthogonal})
        rep = gr.gram_matrix((2, 2), free_pair(), 1.0)
        idx = rep.mode_index.index(k)
        row = rep.matrix[idx]
        want = np.zeros(len(rep.mode_index))
        want[idx] = 4.0
        np.testing.assert_allclose(row, want, atol=1e-10)
        assert av.annihilation_flags(U, sets_b[0]) >= {k}


def test_mu_sweep_table():
    rows = gr.mu_sweep((2, 2), [PEND, PEND], 1.0, [0.0, 0.02, 0.05], fixed_k1=1)
    assert rows[0].sigma_min == pytest.approx(4.0, abs=1e-8)
    assert all(r.full_rank for r in rows)
    assert not any(r.sign_change for r in rows)
    # continuity: refinement of the grid does not move det discontinuously
    rows_f = gr.mu_sweep((2, 2), [PEND, PEND], 1.0, [0.0, 0.01, 0.02], fixed_k1=1)
    assert abs(rows_f[2].det.real - rows[1].det.real) < 1e-8


def test_mu_sweep_pairs():
    rows = gr.mu_sweep((1, 1), [PEND, PEND], 1.0, [(0.0, 0.0), (0.02, 0.03)])
    assert rows[0].mu == (0.0, 0.0)
    assert rows[0].sigma_min == pytest.approx(4.0, abs=1e-8)
    assert rows[1].full_rank
