import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wqed.analytic import bic_norm, bic_spec
from wqed.fock import FockSpace
from wqed.hamiltonian import QubitSpec, SystemParams, build_h
from wqed.krylov import PropagatorConfig, expmv
from wqed.states import (
    LayoutError,
    PacketTruncationError,
    WavepacketSpec,
    build_bic_state,
    fock_mode_amplitudes,
    gate_fidelity,
    gaussian_packet,
    interaction_picture,
    logical_superposition,
    min_edge_distance,
    packet_mode,
    photon_density,
    qubit_excitation,
    sector_weights,
    state_probability,
    total_excitation,
)


def random_unit(n, rng):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def test_single_photon_packet_centre_and_norm():
    spec = WavepacketSpec(x0=60.0, k0=0.75 * np.pi, sigma=5.0)
    space = FockSpace(0, 1, 121)
    v = gaussian_packet(spec, space)
    assert np.linalg.norm(v) == pytest.approx(1, abs=1e-14)
    dens = photon_density(v, space)
    assert np.sum(np.arange(121) * dens) == pytest.approx(60.0, abs=0.01 * 5.0)


@pytest.mark.parametrize("k0,sigma", [(0.75 * np.pi, 5.0), (0.3 * np.pi, 8.0), (0.5 * np.pi, 20.0)])
def test_packet_momentum_content(k0, sigma):
    L = 1024
    f = packet_mode(WavepacketSpec(L / 2, k0, sigma), L)
    k = 2 * np.pi * np.fft.fftfreq(L)
    pk = np.abs(np.fft.fft(f)) ** 2
    pk /= pk.sum()
    mean = np.sum(k * pk)
    assert mean == pytest.approx(k0, abs=1e-3)
    width = math.sqrt(np.sum((k - mean) ** 2 * pk))
    # |f(k)|^2 ~ exp(-sigma^2 (k-k0)^2) has standard deviation 1/(sqrt(2) sigma)
    assert width * math.sqrt(2) == pytest.approx(1 / sigma, rel=0.05)


def test_two_photon_toy_amplitudes():
    space = FockSpace(0, 2, 2)
    pos = space.positions(space.sector(0))
    amps = fock_mode_amplitudes(pos, np.array([1, 1]) / math.sqrt(2))
    states = [tuple(np.bincount(p, minlength=2)) for p in pos]
    assert states == [(2, 0), (1, 1), (0, 2)]
    assert np.allclose(amps, [0.5, 1 / math.sqrt(2), 0.5], atol=1e-15)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_multi_photon_packet_normalized(m):
    space = FockSpace(0, m, 60)
    v = gaussian_packet(WavepacketSpec(30.0, 2.0, 4.0, m), space)
    assert np.linalg.norm(v) == pytest.approx(1, abs=1e-12)
    dens = photon_density(v, space)
    single = np.abs(packet_mode(WavepacketSpec(30.0, 2.0, 4.0), 60)) ** 2
    assert np.allclose(dens, m * single, atol=1e-12)


def test_packet_in_excited_sector():
    space = FockSpace(2, 2, 40)
    v = gaussian_packet(WavepacketSpec(20.0, 1.0, 3.0, 1), space, mask=0b10)
    assert state_probability(v, "↓↑", space) == pytest.approx(1)
    with pytest.raises(ValueError):
        gaussian_packet(WavepacketSpec(20.0, 1.0, 3.0, 2), space, mask=0b10)


def test_truncation_error():
    with pytest.raises(PacketTruncationError):
        packet_mode(WavepacketSpec(10.0, 1.0, 5.0), 100)
    packet_mode(WavepacketSpec(min_edge_distance(5.0), 1.0, 5.0), 100)


def test_wavepacket_spec_validation():
    for bad in (dict(sigma=0), dict(k0=0.0), dict(k0=np.pi), dict(m=0)):
        kw = dict(x0=10.0, k0=1.0, sigma=2.0, m=1) | bad
        with pytest.raises(ValueError):
            WavepacketSpec(**kw)


def test_density_examples():
    space = FockSpace(2, 1, 8)
    v = space.basis_vector(0b01)
    assert np.array_equal(photon_density(v, space), np.zeros(8))
    v = space.basis_vector(0, tuple(int(i == 3) for i in range(8)))
    assert np.array_equal(photon_density(v, space), np.eye(8)[3])


def test_excitation_examples():
    space = FockSpace(2, 2, 5)
    ground = space.basis_vector(0, (2, 0, 0, 0, 0))
    assert qubit_excitation(ground, space, 0) == 0
    both = space.basis_vector(0b11)
    assert qubit_excitation(both, space, 0) == 1
    assert qubit_excitation(both, space, 1) == 1
    with pytest.raises(IndexError):
        qubit_excitation(both, space, 2)


@settings(max_examples=40, deadline=None)
@given(n_q=st.integers(0, 3), n_exc=st.integers(1, 3), L=st.integers(2, 9), seed=st.integers(0, 10**6))
def test_conservation_on_random_states(n_q, n_exc, L, seed):
    space = FockSpace(n_q, n_exc, L)
    v = random_unit(space.dim, np.random.default_rng(seed))
    dens = photon_density(v, space)
    pe = [qubit_excitation(v, space, s) for s in range(n_q)]
    assert np.all(dens >= 0)
    assert all(0 <= p <= 1 + 1e-15 for p in pe)
    assert dens.sum() + sum(pe) == pytest.approx(n_exc, abs=1e-10)
    assert total_excitation(v, space) == pytest.approx(n_exc, abs=1e-10)
    assert sum(sector_weights(v, space).values()) == pytest.approx(1, abs=1e-12)


def test_rabi_excitation_against_two_level_formula():
    # one qubit coupled to a two-site chain with J -> 0 reduces to a 2x2 problem
    g = 0.3
    params = SystemParams(2, 1, [QubitSpec(0.0, g, 0)], J=0.0)
    space = params.space()
    H = build_h(params, space=space)
    v0 = space.basis_vector(1)
    for t in (1.0, 3.0, 7.0):
        v = expmv(H, v0, t)
        assert qubit_excitation(v, space, 0) == pytest.approx(math.cos(g * t) ** 2, abs=1e-10)


def test_state_probability():
    space = FockSpace(2, 2, 6)
    v = random_unit(space.dim, np.random.default_rng(1))
    assert sum(state_probability(v, sec.mask, space) for sec in space.sectors) == pytest.approx(1)
    uu = space.basis_vector("↑↑")
    assert state_probability(uu, "uu", space) == 1
    assert state_probability(uu, "↓↓", space) == 0
    assert state_probability(uu, uu) == pytest.approx(1)
    with pytest.raises(ValueError):
        state_probability(uu, uu[:-1])
    with pytest.raises(ValueError):
        state_probability(uu, "uu")


def test_interaction_picture():
    params = SystemParams(10, 1, [QubitSpec(0.7, 0.2, 3), QubitSpec(-0.2, 0.4, 6)])
    space = params.space()
    H0 = build_h(params, coupling_on=False, space=space)
    v = random_unit(space.dim, np.random.default_rng(2))
    assert np.array_equal(interaction_picture(v, H0, 0.0), v)
    e = space.basis_vector(0b01)
    E = H0[space.index(1, (0,) * 10), space.index(1, (0,) * 10)]
    assert np.allclose(interaction_picture(e, H0, 2.5), np.exp(1j * E * 2.5) * e, atol=1e-12)
    cfg = PropagatorConfig(tol=1e-9)
    back = expmv(H0, interaction_picture(v, H0, 13.0, cfg), 13.0, cfg)
    assert np.linalg.norm(back - v) < 20 * 1e-9 * 13


def gate_system(R=4, n=1, gbar=0.1, gap=40, wall=30):
    spec = bic_spec(R, "odd", n)
    c_l = wall
    c_r = c_l + R + gap
    L = c_r + R + wall + 1
    qs = [QubitSpec(spec.omega, gbar, s) for s in (c_l, c_l + R, c_r, c_r + R)]
    params = SystemParams(L, 1, qs)
    return spec, params, params.space()


def test_logical_superposition_amplitudes():
    spec, params, space = gate_system()
    v = logical_superposition(params, spec, space)
    N = bic_norm(spec, 0.1)
    vac = (0,) * space.L
    amps = [v[space.index(1 << s, vac)] for s in range(4)]
    assert np.allclose(amps, N / math.sqrt(2) * np.array([1, -1, 1, -1]), atol=1e-15)
    assert np.linalg.norm(v) == pytest.approx(1, abs=1e-12)


def test_initial_logical_amplitudes_and_fidelity():
    spec, params, space = gate_system(R=7, n=3, gbar=0.5)
    v = logical_superposition(params, spec, space)
    N = bic_norm(spec, 0.5)
    F, amps = gate_fidelity(v, space)
    assert amps.a10 == pytest.approx(math.sqrt(2) * N, abs=1e-14)
    assert amps.a01 == pytest.approx(math.sqrt(2) * N, abs=1e-14)
    assert F == pytest.approx(0, abs=1e-15)
    assert abs(amps.a10) ** 2 + abs(amps.a01) ** 2 <= 2


def test_perfect_phase_flip_reaches_ceiling():
    spec, params, space = gate_system(R=4, gbar=0.5)
    flipped = (build_bic_state(params, spec, space, (0, 1)) - build_bic_state(params, spec, space, (2, 3))) / math.sqrt(2)
    F, amps = gate_fidelity(flipped, space)
    assert F == pytest.approx(math.sqrt(2) * bic_norm(spec, 0.5), abs=1e-14)
    assert amps.a01 == pytest.approx(-amps.a10)


def test_logical_superposition_is_stationary():
    spec, params, space = gate_system(R=4, gbar=0.5)
    H = build_h(params, space=space)
    v = logical_superposition(params, spec, space)
    w = expmv(H, v, 50.0, PropagatorConfig(tol=1e-10))
    assert abs(np.vdot(v, w)) >= 1 - 1e-6


def test_layout_error():
    spec, params, space = gate_system()
    with pytest.raises(LayoutError):
        logical_superposition(params, spec, space, pairs=((2, 3), (0, 1)))
