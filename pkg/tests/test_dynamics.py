import math

import numpy as np
import pytest
import sympy as sp

from ladder_inversion.dynamics import (
    DecayChannel,
    IntegrationError,
    UnsupportedShapeError,
    default_step,
    lindblad_channels,
    liouvillian,
    master_rhs,
    propagate,
    propagate_expm,
    rwa_hamiltonian,
)
from ladder_inversion.model import (
    DomainError,
    Envelope,
    LadderSystem,
    PulseSpec,
    Schedule,
    ground_state,
    pure_state,
)
from ladder_inversion.oracle import rabi_populations
from ladder_inversion.protocol import build_inversion_schedule

TWO_LEVEL = LadderSystem((0.0, 1.0), (1.0,), (math.inf,))


def random_density(n, rng):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def test_rwa_square(rb):
    pulse = PulseSpec(1, Envelope("square", 5.0, 0.3))
    for t in (0.0, 1.7, 5.0):
        H = rwa_hamiltonian(rb, pulse, t)
        expected = np.zeros((4, 4))
        expected[0, 1] = expected[1, 0] = 0.3 * rb.osc_strengths[0]
        np.testing.assert_array_equal(H, expected)


def test_rwa_raised_cosine_edges_and_peak(rb):
    pulse = PulseSpec(2, Envelope("raised_cosine", 4.0, 0.7))
    np.testing.assert_array_equal(rwa_hamiltonian(rb, pulse, 0.0), np.zeros((4, 4)))
    H = rwa_hamiltonian(rb, pulse, 2.0)
    assert H[1, 2] == pytest.approx(0.7 * rb.osc_strengths[1], abs=1e-15)
    np.testing.assert_allclose(H, H.conj().T)


def test_rwa_uses_osc_strength():
    sys = LadderSystem((0, 1, 2.5), (1.0, 2.5), (10, 10))
    H = rwa_hamiltonian(sys, PulseSpec(2, Envelope("square", 1.0, 0.4)), 0.5)
    assert H[1, 2] == pytest.approx(1.0)


@pytest.mark.parametrize("t", [-0.1, 5.01])
def test_rwa_outside_support(rb, t):
    with pytest.raises(DomainError):
        rwa_hamiltonian(rb, PulseSpec(1, Envelope("square", 5.0, 0.3)), t)


def test_channels_rb(rb):
    chans = lindblad_channels(rb)
    assert [(c.from_level, c.to_level) for c in chans] == [(2, 1), (3, 2), (4, 3)]
    assert [c.rate for c in chans] == pytest.approx([1 / 26.2, 1 / 83.0, 1 / 112.0], rel=1e-15)


def test_channels_closed_and_two_level():
    assert lindblad_channels(LadderSystem((0, 1, 2.1), (1, 1), (math.inf, math.inf))) == []
    (ch,) = lindblad_channels(LadderSystem((0, 1), (1,), (10.0,)))
    assert ch.rate == pytest.approx(0.1)


def test_decay_channel_rejects_raising():
    with pytest.raises(DomainError):
        DecayChannel(1, 2, 0.1)
    with pytest.raises(DomainError):
        DecayChannel(2, 1, -0.1)


def test_rhs_ground_state_stationary(rb):
    out = master_rhs(ground_state(4), np.zeros((4, 4)), lindblad_channels(rb))
    np.testing.assert_array_equal(out, np.zeros((4, 4)))


def test_rhs_pure_decay():
    g = 0.37
    out = master_rhs(np.diag([0, 1]).astype(complex), np.zeros((2, 2)), [DecayChannel(2, 1, g)])
    assert out[1, 1] == pytest.approx(-g)
    assert out[0, 0] == pytest.approx(g)


def test_rhs_coherence_matches_symbolic():
    g = sp.symbols("Gamma", positive=True)
    r11, r22, r12 = sp.symbols("r11 r22 r12")
    rho = sp.Matrix([[r11, r12], [sp.conjugate(r12), r22]])
    L = sp.Matrix([[0, 1], [0, 0]])
    D = g * (L * rho * L.H - sp.Rational(1, 2) * (L.H * L * rho + rho * L.H * L))
    expected = sp.simplify(D[0, 1] / r12)  # -Gamma/2
    gamma = 0.2
    rho_num = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    out = master_rhs(rho_num, np.zeros((2, 2)), [DecayChannel(2, 1, gamma)])
    assert out[0, 1] == pytest.approx(float(expected.subs(g, gamma)) * 0.5, abs=1e-15)
    assert out[0, 1] == pytest.approx(-gamma / 2 * 0.5)


def test_rhs_dimension_mismatch():
    with pytest.raises(DomainError):
        master_rhs(ground_state(3), np.zeros((2, 2)), [])


def test_liouvillian_matches_rhs(rb):
    rng = np.random.default_rng(3)
    rho = random_density(4, rng)
    H = rwa_hamiltonian(rb, PulseSpec(2, Envelope("square", 1.0, 0.8)), 0.2)
    chans = lindblad_channels(rb) + [DecayChannel(4, 1, 0.01)]
    direct = master_rhs(rho, H, chans)
    via_super = (liouvillian(H, chans) @ rho.reshape(-1)).reshape(4, 4)
    np.testing.assert_allclose(via_super, direct, atol=1e-15)


def test_ideal_transfer(rb_ideal):
    sched = build_inversion_schedule(rb_ideal, [3.0, 7.0, 11.0])
    traj = propagate(ground_state(4), sched, rb_ideal)
    assert traj.populations[-1, 3] >= 1 - 1e-6


def test_empty_schedule_is_identity(rb_ideal):
    rng = np.random.default_rng(0)
    rho0 = random_density(4, rng)
    traj = propagate(rho0, Schedule.idle(0.0), rb_ideal)
    np.testing.assert_allclose(traj.final_state, rho0, atol=1e-12)
    traj = propagate(rho0, Schedule.idle(5.0), rb_ideal, step=0.01)
    np.testing.assert_allclose(traj.final_state, rho0, atol=1e-12)


def test_exponential_decay():
    sys = LadderSystem((0.0, 1.0), (1.0,), (10.0,))
    traj = propagate(pure_state(2, 2), Schedule.idle(10.0), sys)
    assert traj.times[-1] == 10.0
    assert traj.populations[-1, 1] == pytest.approx(math.exp(-1), abs=1e-8)


def test_trajectory_sampling(rb):
    sched = build_inversion_schedule(rb, [6.0, 6.0, 18.0])
    traj = propagate(ground_state(4), sched, rb)
    assert traj.times[0] == 0.0 and traj.times[-1] == 30.0
    assert np.all(np.diff(traj.times) > 0)
    assert 450 <= len(traj.times) <= 560
    assert traj.states.shape == (len(traj.times), 4, 4)


def test_gap_is_free_evolution(rb):
    pulses = build_inversion_schedule(rb, [2.0, 2.0, 2.0]).pulses
    sched = Schedule.sequential(pulses, gap=1.5)
    rk = propagate(ground_state(4), sched, rb)
    ex = propagate_expm(ground_state(4), sched, rb)
    assert rk.times[-1] == pytest.approx(9.0)
    assert np.linalg.norm(rk.final_state - ex.final_state) < 1e-8


def test_step_precondition(rb):
    sched = build_inversion_schedule(rb, [6.0, 6.0, 18.0])
    with pytest.raises(DomainError):
        propagate(ground_state(4), sched, rb, step=0.1)
    with pytest.raises(DomainError):
        propagate(ground_state(4), sched, rb, step=0.0)


def test_unphysical_start_raises_with_time(rb):
    sched = build_inversion_schedule(rb, [6.0, 6.0, 18.0])
    with pytest.raises(IntegrationError) as info:
        propagate(2 * ground_state(4), sched, rb)
    assert info.value.time == 0.0
    assert "t = 0" in str(info.value)


def test_expm_agrees_with_rk4(rb):
    sched = build_inversion_schedule(rb, [6.0, 6.0, 18.0])
    rk = propagate(ground_state(4), sched, rb)
    ex = propagate_expm(ground_state(4), sched, rb)
    assert np.linalg.norm(rk.final_state - ex.final_state) < 1e-6


def test_expm_identity():
    sys = LadderSystem((0.0, 1.0, 2.1), (1.0, 1.0), (math.inf, math.inf))
    rho0 = random_density(3, np.random.default_rng(1))
    traj = propagate_expm(rho0, Schedule.idle(4.0), sys)
    np.testing.assert_allclose(traj.final_state, rho0, atol=1e-14)


def test_expm_rabi():
    sched = Schedule.sequential([PulseSpec(1, Envelope("square", 3.0, math.pi / 6))])
    traj = propagate_expm(ground_state(2), sched, TWO_LEVEL)
    lo, up = rabi_populations(math.pi / 2)
    np.testing.assert_allclose(traj.populations[-1], [lo, up], atol=1e-10)


def test_expm_rejects_raised_cosine(rb):
    sched = build_inversion_schedule(rb, [1.0, 1.0, 1.0], "raised_cosine")
    with pytest.raises(UnsupportedShapeError):
        propagate_expm(ground_state(4), sched, rb)


def test_fourth_order_convergence(rb):
    sched = build_inversion_schedule(rb, [6.0, 6.0, 18.0])
    ref = propagate_expm(ground_state(4), sched, rb).final_state
    errs = [np.linalg.norm(propagate(ground_state(4), sched, rb, step=default_step(sched, k),
                                     check_resolution=False).final_state - ref)
            for k in (20, 40, 80)]
    for a, b in zip(errs, errs[1:]):
        assert 14 < a / b < 18


def test_step_halving_at_default(rb):
    sched = build_inversion_schedule(rb, [6.0, 6.0, 18.0])
    h = default_step(sched)
    a = propagate(ground_state(4), sched, rb, step=h).final_state
    b = propagate(ground_state(4), sched, rb, step=h / 2).final_state
    assert np.linalg.norm(a - b) < 1e-8


def test_channel_override_branch(rb):
    extra = lindblad_channels(rb) + [DecayChannel(4, 1, 1 / 200.0)]
    sched = build_inversion_schedule(rb, [6.0, 6.0, 18.0])
    base = propagate(ground_state(4), sched, rb).final_state
    branched = propagate(ground_state(4), sched, rb, channels=extra).final_state
    ex = propagate_expm(ground_state(4), sched, rb, channels=extra).final_state
    assert branched[0, 0].real > base[0, 0].real
    assert np.linalg.norm(branched - ex) < 1e-8
