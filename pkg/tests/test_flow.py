import numpy as np
import pytest

from toruskit import action_angle as aa
from toruskit import averaging as av
from toruskit import flow as fl
from toruskit import mather as mt
from toruskit.errors import DomainError
from toruskit.potentials import PeriodicPotential1D, TorusPotential

PEND = PeriodicPotential1D.pendulum()


def pend_pair():
    return [aa.MechanicalSystem1D(0.1, PEND), aa.MechanicalSystem1D(0.2, PEND)]


def free_pair():
    return [aa.MechanicalSystem1D(0.0, PEND), aa.MechanicalSystem1D(0.0, PEND)]


def test_hamiltonian_examples():
    assert fl.hamiltonian(free_pair(), None, 0.0,
                          fl.PhaseState([0.3, 0.8], [1.0, 0.0])) == pytest.approx(0.5)
    systems = [aa.MechanicalSystem1D(0.0, PEND), aa.MechanicalSystem1D(1.0, PEND)]
    assert fl.hamiltonian(systems, None, 0.0,
                          fl.PhaseState([0.0, 0.5], [0.0, 0.0])) == pytest.approx(-2.0)
    U = TorusPotential(2, {(0, 0): 1.0})
    s = fl.PhaseState([0.1, 0.2], [1.0, 0.0])
    assert fl.hamiltonian(free_pair(), U, 0.1, s) == pytest.approx(
        fl.hamiltonian(free_pair(), None, 0.0, s) + 0.1)


def test_first_integral_examples():
    s = fl.PhaseState([0.0, 0.0], [1.0, 0.5])
    assert fl.first_integral_F1(s, aa.MechanicalSystem1D(0.0, PEND)) == pytest.approx(0.5)


def test_free_flow_exact():
    traj = fl.integrate(free_pair(), None, 0.0, fl.PhaseState([0.1, 0.2], [1.0, 2.0]),
                        1e-2, 5.0)
    np.testing.assert_allclose(fl.rotation_vector_estimate(traj), [1.0, 2.0], atol=1e-12)
    np.testing.assert_allclose(traj.x[-1], [(0.1 + 5.0) % 1.0, (0.2 + 10.0) % 1.0],
                               atol=1e-10)


def test_energy_error_second_order():
    s0 = ([0.15, 0.4], [1.1, 0.9])
    errs = {}
    for h in (2e-3, 1e-3):
        tr = fl.integrate(pend_pair(), None, 0.0, fl.PhaseState(*s0), h, 20.0,
                          record_stride=10)
        errs[h] = np.max(np.abs(tr.energies - tr.energies[0]))
    assert 3.5 <= errs[2e-3] / errs[1e-3] <= 4.5


def test_f1_conserved_at_zero_epsilon():
    tr = fl.integrate(pend_pair(), None, 0.0, fl.PhaseState([0.15, 0.4], [1.1, 0.9]),
                      1e-3, 50.0, order=4, record_stride=25)
    assert np.max(np.abs(tr.f1 - tr.f1[0])) < 1e-8


def test_separable_perturbation_conserves_corrected_integral():
    U1 = TorusPotential(2, {(1, 0): 0.3, (-1, 0): 0.3})
    eps = 1e-2
    tr = fl.integrate(pend_pair(), U1, eps, fl.PhaseState([0.15, 0.4], [1.1, 0.9]),
                      1e-3, 30.0, order=4, record_stride=20)
    corrected = tr.f1 + eps * 0.6 * np.cos(2 * np.pi * tr.x[:, 0])
    assert np.max(np.abs(corrected - corrected[0])) < 1e-8


def test_f1_drift_rate_proportional_to_eps():
    U = TorusPotential(2, {(1, 1): 0.3, (-1, -1): 0.3})
    drifts = {}
    for eps in (1e-3, 1e-2):
        tr = fl.integrate(pend_pair(), U, eps, fl.PhaseState([0.15, 0.4], [1.1, 0.9]),
                          1e-3, 20.0, order=4, record_stride=20)
        drifts[eps] = np.max(np.abs(tr.f1 - tr.f1[0]))
    assert 5.0 <= drifts[1e-2] / drifts[1e-3] <= 20.0


def test_time_reversal():
    s0 = fl.PhaseState([0.15, 0.4], [1.1, 0.9])
    fwd = fl.integrate(pend_pair(), None, 0.0, s0, 1e-3, 50.0, record_stride=1000)
    back = fl.integrate(pend_pair(), None, 0.0,
                        fl.PhaseState(fwd.x[-1], -fwd.p[-1]), 1e-3, 50.0,
                        record_stride=1000)
    dx = np.abs((back.x[-1] - s0.x + 0.5) % 1.0 - 0.5)
    assert np.max(dx) < 1e-8
    assert np.max(np.abs(back.p[-1] + s0.p)) < 1e-8


def test_rotation_vector_matches_chart():
    systems = [aa.MechanicalSystem1D(0.0, PEND), aa.MechanicalSystem1D(0.1, PEND)]
    torus = av.resonant_torus(systems, 1.0, (1, 1))
    x0 = np.array([float(torus.charts[i].x_of_theta(0.0)) for i in range(2)])
    p0 = np.array(torus.c) + mt.grad_u_c(systems, torus.c, x0[None, :])[0]
    tr = fl.integrate(systems, None, 0.0, fl.PhaseState(x0, p0), 5e-3, 500.0,
                      record_stride=100)
    est = fl.rotation_vector_estimate(tr)
    assert abs(est[0] / est[1] - 1.0) < 1e-4
    np.testing.assert_allclose(est, torus.omega, atol=1e-4)


def test_rotation_error_bound_halves_with_doubled_T():
    # the estimator error is a bounded lift oscillation divided by T, so its
    # envelope bound halves when the window doubles
    systems = pend_pair()
    c = np.array([1.3, -1.1])
    alphas = [mt.AlphaFunction1D(s) for s in systems]
    omega = np.array([np.sign(c[i]) * aa.frequency(systems[i], alphas[i].value(c[i]))
                      for i in range(2)])
    x0 = np.array([0.12, 0.57])
    p0 = c + mt.grad_u_c(systems, c, x0[None, :])[0]
    tr = fl.integrate(systems, None, 0.0, fl.PhaseState(x0, p0), 2e-3, 1000.0,
                      record_stride=50)
    dev = np.abs(tr.lift - x0[None, :] - np.outer(tr.t, omega))

    def bound(T):
        return np.max(dev[tr.t <= T + 1e-9]) / T

    assert 0.4 <= bound(500.0) / bound(250.0) <= 0.65
    assert 0.4 <= bound(1000.0) / bound(500.0) <= 0.65
    # and the actual estimate error is within the envelope bound
    est = fl.rotation_vector_estimate(tr)
    assert np.max(np.abs(est - omega)) <= bound(1000.0) + 1e-12


def test_step_size_precondition():
    with pytest.raises(DomainError):
        fl.integrate(free_pair(), None, 0.0, fl.PhaseState([0, 0], [1.0, 1.0]), 0.5, 5.0)


def test_maupertuis_factor():
    assert fl.maupertuis_factor(free_pair(), 1.0, [0.3, 0.7]) == pytest.approx(1.0)
    systems = [aa.MechanicalSystem1D(0.0, PEND), aa.MechanicalSystem1D(1.0, PEND)]
    assert fl.maupertuis_factor(systems, 1.0, [0.1, 0.5]) == pytest.approx(3.0)
    # positivity on a grid
    g = np.linspace(0, 1, 33)
    vals = [fl.maupertuis_factor(pend_pair(), 0.5, [a, b]) for a in g for b in g[::8]]
    assert min(vals) > 0


def test_classification():
    systems = [aa.MechanicalSystem1D(0.1, PEND), aa.MechanicalSystem1D(0.1, PEND)]
    assert fl.classify_level_set(1.0, 0.5, systems) == "torus"
    assert fl.classify_level_set(1.0, -0.05, systems) == "annulus-1"
    assert fl.classify_level_set(1.0, 0.0, systems) == "singular"
    assert fl.classify_level_set(1.0, 1.1, systems) == "annulus-2"
    assert fl.classify_level_set(1.0, 1.0, systems) == "singular"
    with pytest.raises(DomainError):
        fl.classify_level_set(1.0, -0.5, systems)
    with pytest.raises(DomainError):
        fl.classify_level_set(1.0, 1.5, systems)


def test_geodesic_residual():
    systems = pend_pair()
    s0 = fl.PhaseState([0.1, 0.35], [1.3, 0.8])
    e = fl.hamiltonian(systems, None, 0.0, s0)
    traj = fl.integrate(systems, None, 0.0, s0, 1e-3, 10.0, order=4)
    assert fl.geodesic_residual(traj, systems, e) < 1e-6


def test_lift_continuity():
    traj = fl.integrate(pend_pair(), None, 0.0, fl.PhaseState([0.9, 0.1], [1.5, -1.2]),
                        1e-3, 5.0)
    jumps = np.abs(np.diff(traj.lift, axis=0))
    assert np.max(jumps) < 0.5


def test_trajectory_rows_shape():
    traj = fl.integrate(pend_pair(), None, 0.0, fl.PhaseState([0.1, 0.2], [1.0, 1.0]),
                        1e-3, 1.0, record_stride=100)
    rows = fl.trajectory_rows(traj)
    assert rows.shape[1] == 1 + 2 + 2 + 2 + 2  # t, x, lift, p, H, F1
