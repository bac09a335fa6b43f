"""Initial states and observables on a :class:`~wqed.fock.FockSpace`."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import bic_amplitudes
from .fock import parse_label
from .krylov import PropagatorConfig, expmv

TAIL_TOL = 1e-8


class PacketTruncationError(ValueError):
    """Wavepacket has non-negligible weight at the lattice ends."""


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class WavepacketSpec:
    x0: float
    k0: float
    sigma: float
    m: int = 1

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0 < self.k0 < np.pi:
            raise ValueError(f"k0 must lie in (0, pi), got {self.k0}")
        if self.m < 1:
            raise ValueError(f"need at least one photon, got m={self.m}")


@dataclass(frozen=True)
class LogicalAmplitudes:
    a10: complex
    a01: complex
    time: float = 0.0


def packet_mode(spec, L, tail_tol=TAIL_TOL):
    """Normalized single-photon amplitudes ``e^{ik0 x} e^{-(x-x0)^2/(2 sigma^2)}``."""
    x = np.arange(L)
    f = np.exp(1j * spec.k0 * x - (x - spec.x0) ** 2 / (2 * spec.sigma**2))
    f /= np.linalg.norm(f)
    tails = max(abs(f[0]) ** 2, abs(f[-1]) ** 2)
    if tails >= tail_tol:
        raise PacketTruncationError(
            f"packet at x0={spec.x0}, sigma={spec.sigma} leaves weight {tails:.1e} on the lattice ends"
        )
    return f


def min_edge_distance(sigma, tail_tol=TAIL_TOL):
    """Smallest centre-to-edge distance keeping the end-site weight below ``tail_tol``."""
    return sigma * math.sqrt(math.log(1 / tail_tol)) * 1.01 + 1


def fock_mode_amplitudes(pos, f):
    """Amplitudes of ``(b+)^m / sqrt(m!) |0>`` for ``b+ = sum_x f_x a+_x``.

    ``pos`` holds the sorted photon positions of each basis state; the
    coefficient of occupation ``n`` is ``sqrt(m! / prod n_x!) prod f_x^{n_x}``.
    """
    dim, m = pos.shape
    amp = np.ones(dim, dtype=complex)
    denom = np.ones(dim)
    run = np.ones(dim)
    for j in range(m):
        amp *= f[pos[:, j]]
        if j > 0:
            same = pos[:, j] == pos[:, j - 1]
            run = np.where(same, run + 1, 1.0)
            denom *= run
    return amp * np.sqrt(math.factorial(m) / denom)


def gaussian_packet(spec, space, mask=0, tail_tol=TAIL_TOL):
    """``m`` photons in one Gaussian mode with the qubits in configuration ``mask``."""
    sec = space.sector(mask)
    if sec.photons != spec.m:
        raise ValueError(f"sector {sec.label} holds {sec.photons} photons, packet has {spec.m}")
    f = packet_mode(spec, space.L, tail_tol)
    v = space.zeros()
    v[sec.slice] = fock_mode_amplitudes(space.positions(sec), f)
    return v


def _pair_checks(params, spec, pair):
    a, b = pair
    qa, qb = params.qubits[a], params.qubits[b]
    if qb.site - qa.site != spec.R:
        raise ValueError(f"qubits {a},{b} are {qb.site - qa.site} sites apart, state needs R={spec.R}")
    for q in (qa, qb):
        if abs(q.omega - spec.omega) > 1e-12 * max(1.0, abs(spec.omega)):
            raise ValueError(f"qubit frequency {q.omega} does not match the bound-state energy {spec.omega}")
    if qa.gbar != qb.gbar:
        raise ValueError("bound state needs identical couplings")
    if params.J != spec.J:
        raise ValueError("hopping of the system and of the state differ")
    return qa, qb


def build_bic_state(params, spec, space, pair=(0, 1)):
    """Bound state of the emitter ``pair``, other qubits ground, one excitation."""
    if space.n_exc != 1:
        raise ValueError("bound states live in the single-excitation space")
    qa, _ = _pair_checks(params, spec, pair)
    c1, c2, photon = bic_amplitudes(spec, qa.gbar)
    v = space.zeros()
    a, b = pair
    v[space.index(1 << a, (0,) * space.L)] = c1
    v[space.index(1 << b, (0,) * space.L)] = c2
    ground = space.sector(0)
    v[ground.offset + qa.site : ground.offset + qa.site + spec.R + 1] = photon
    return v


def logical_superposition(params, spec, space, pairs=((0, 1), (2, 3))):
    """``(|10> + |01>)/sqrt(2)`` with logical one the odd bound state of a pair."""
    (a0, a1), (b0, b1) = pairs
    left_end = params.qubits[a1].site
    right_start = params.qubits[b0].site
    if right_start <= left_end:
        raise LayoutError(f"photon clouds overlap: left pair ends at {left_end}, right starts at {right_start}")
    return (build_bic_state(params, spec, space, (a0, a1)) + build_bic_state(params, spec, space, (b0, b1))) / math.sqrt(2)


def ideal_logic_one(space, pair):
    """Photonless ``(|up,down> - |down,up>)/sqrt(2)`` on ``pair``, others ground."""
    a, b = pair
    v = space.zeros()
    v[space.index(1 << a, (0,) * space.L)] = 1 / math.sqrt(2)
    v[space.index(1 << b, (0,) * space.L)] = -1 / math.sqrt(2)
    return v


def photon_density(v, space):
    """``<a+_x a_x>`` for every site."""
    dens = np.zeros(space.L)
    w = np.abs(np.asarray(v)) ** 2
    for sec in space.sectors:
        if sec.photons == 0:
            continue
        pos = space.positions(sec)
        weights = np.repeat(w[sec.slice], sec.photons)
        dens += np.bincount(pos.ravel().astype(np.intp), weights=weights, minlength=space.L)
    return dens


def qubit_excitation(v, space, s):
    if not 0 <= s < space.n_qubits:
        raise IndexError(f"qubit index {s} out of range for {space.n_qubits} qubits")
    w = np.abs(np.asarray(v)) ** 2
    return float(sum(w[sec.slice].sum() for sec in space.sectors if sec.excited(s)))


def state_probability(v, target, space=None):
    """``|<target|v>|^2`` for a vector, or the sector weight for a label/mask."""
    v = np.asarray(v)
    if isinstance(target, (str, int, np.integer)):
        if space is None:
            raise ValueError("sector targets need the basis")
        mask = parse_label(target) if isinstance(target, str) else int(target)
        try:
            sec = space.sector(mask)
        except KeyError:
            return 0.0
        return float(np.sum(np.abs(v[sec.slice]) ** 2))
    target = np.asarray(target)
    if target.shape != v.shape:
        raise ValueError(f"target of length {target.shape} does not match state of length {v.shape}")
    return float(abs(np.vdot(target, v)) ** 2)


def sector_weights(v, space):
    w = np.abs(np.asarray(v)) ** 2
    return {sec.label: float(w[sec.slice].sum()) for sec in space.sectors}


def total_excitation(v, space):
    """``sum_x <n_x> + sum_s P_e(s)``, equal to ``n_exc * |v|^2``."""
    w = np.abs(np.asarray(v)) ** 2
    return float(sum(w[sec.slice].sum() * (sec.photons + bin(sec.mask).count("1")) for sec in space.sectors))


def interaction_picture(v, H0, t, cfg=None):
    """``exp(+i H0 t) v``."""
    cfg = cfg or PropagatorConfig()
    back = PropagatorConfig(cfg.krylov_dim, cfg.tol, cfg.max_substeps, -1, cfg.max_rejects)
    return expmv(H0, v, t, back)


def gate_fidelity(v_int, space, pairs=((0, 1), (2, 3)), time=0.0):
    """Fidelity with ``(|1_0> - |0_1>)/sqrt(2)`` and the logical amplitudes.

    ``a10 = sqrt(2) <1_0|v>``, ``a01 = sqrt(2) <0_1|v>`` with photonless
    ideal logic states, so ``F = |a10 - a01| / 2``.
    """
    one_zero = ideal_logic_one(space, pairs[0])
    zero_one = ideal_logic_one(space, pairs[1])
    a10 = math.sqrt(2) * np.vdot(one_zero, v_int)
    a01 = math.sqrt(2) * np.vdot(zero_one, v_int)
    ideal = (one_zero - zero_one) / math.sqrt(2)
    F = abs(np.vdot(ideal, v_int))
    return float(F), LogicalAmplitudes(complex(a10), complex(a01), float(time))
