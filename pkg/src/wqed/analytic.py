"""Closed-form single-excitation results for emitters on the cosine band.

All functions take energies in the same units as the lattice model
(``omega_k = -2 J cos k``).  The continuum coupling ``g`` of the k-space
model relates to the lattice coupling by ``2 pi g**2 = gbar**2``; every
function here takes ``gbar`` and converts internally.

The in-band branch ``k* = arccos(-z / 2J)`` in ``(0, pi)`` is used
throughout, which corresponds to outgoing-wave (``z + i0+``) boundary
conditions.  For complex ``z`` near the band interior the same expressions
give the analytic continuation of that branch, which is what the residue
contour in :func:`residue` needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate

POLE_TOL = 1e-12


class OutOfBandError(ValueError):
    """Energy outside the open propagating band ``(-2J, 2J)``."""


class BandEdgeError(ValueError):
    """Wave vector at 0 or pi, where the group velocity vanishes."""


class BicPoleError(ZeroDivisionError):
    """Two-qubit scattering denominator vanishes: a bound state in the continuum."""


class NoSuchBicError(ValueError):
    pass


class ScatterCoeffs(NamedTuple):
    r: complex
    t: complex


def dispersion(k, J=1.0):
    return -2.0 * J * np.cos(k)


def _kstar(z, J):
    z = complex(z)
    if abs(z.real) >= 2 * J:
        raise OutOfBandError(f"z={z} is outside the band (-{2 * J}, {2 * J})")
    return np.arccos(-z / (2 * J))


def green_I(z, x, J=1.0):
    """``int dk e^{ikx} / (z - omega_k + i0+)`` over ``(-pi, pi)``.

    Equal to ``-2 pi i e^{i k* |x|} / sqrt(4J^2 - z^2)``.
    """
    k = _kstar(z, J)
    z = complex(z)
    return -2j * np.pi * np.exp(1j * k * abs(x)) / np.sqrt(4 * J**2 - z**2)


def _check_k(k):
    if not 0 < k < np.pi:
        raise BandEdgeError(f"wave vector {k} must lie strictly inside (0, pi)")


def _r_single(k, omega, gbar, J):
    g2 = gbar * gbar
    if g2 == 0:
        return 0j
    return -g2 / (g2 + 1j * (2 * J * np.cos(k) + omega) * 2 * J * abs(np.sin(k)))


def single_qubit_rt(k, omega, gbar, J=1.0):
    """Reflection and transmission of one emitter, ``t = 1 + r``."""
    _check_k(k)
    r = _r_single(k, omega, gbar, J)
    return ScatterCoeffs(r, 1 + r)


def two_qubit_rt(k, q1, q2, R, J=1.0):
    """Fabry-Perot composition for emitters at ``-R/2`` and ``+R/2``.

    ``q1`` and ``q2`` are ``(omega, gbar)`` pairs (or objects with those
    attributes).  Phases refer to the midpoint of the pair.
    """
    _check_k(k)
    if R < 1:
        raise ValueError(f"separation must be >= 1, got {R}")
    o1, g1 = _energies(q1)
    o2, g2 = _energies(q2)
    r1 = _r_single(k, o1, g1, J)
    r2 = _r_single(k, o2, g2, J)
    t1, t2 = 1 + r1, 1 + r2
    ph = np.exp(1j * k * R)
    den = 1 - r1 * r2 * ph * ph
    if abs(den) < POLE_TOL:
        raise BicPoleError(f"bound state in the continuum at k={k} (|denominator|={abs(den):.2e})")
    t = t1 * t2 / den
    r = (2 * r1 * r2 * ph + r1 / ph + r2 * ph) / den
    return ScatterCoeffs(r, t)


def _energies(q):
    if hasattr(q, "omega"):
        return float(q.omega), float(q.gbar)
    o, g = q
    return float(o), float(g)


@dataclass(frozen=True)
class ResolventElements:
    """Single-excitation resolvent of two emitters, evaluated at ``z``.

    ``zp`` is the shifted energy ``z + (Omega_1 + Omega_2)/2`` measured
    from the all-ground state.  The photon-photon element is returned
    without its ``delta(p - k) / (zp - omega_k)`` free part.
    """

    z: complex
    zp: complex
    D: complex
    uu: complex  # <up,down|G|up,down>
    ud: complex  # <up,down|G|down,up>
    du: complex
    dd: complex  # <down,up|G|down,up>
    g1: float
    g2: float
    R: int
    J: float

    def _vk(self, k):
        # <k|V|up,down>, <k|V|down,up>
        return self.g1 * np.exp(0.5j * k * self.R), self.g2 * np.exp(-0.5j * k * self.R)

    def photon_qubit(self, k):
        """``(<k|G|up,down>, <k|G|down,up>)``."""
        a, b = self._vk(k)
        den = self.zp - dispersion(k, self.J)
        return (a * self.uu + b * self.du) / den, (a * self.ud + b * self.dd) / den

    def qubit_photon(self, k):
        """``(<up,down|G|k>, <down,up|G|k>)``."""
        a, b = np.conj(self._vk(k))
        den = self.zp - dispersion(k, self.J)
        return (self.uu * a + self.ud * b) / den, (self.du * a + self.dd * b) / den

    def photon_photon(self, p, k):
        ap, bp = self._vk(p)
        ak, bk = np.conj(self._vk(k))
        core = ap * (self.uu * ak + self.ud * bk) + bp * (self.du * ak + self.dd * bk)
        return core / ((self.zp - dispersion(p, self.J)) * (self.zp - dispersion(k, self.J)))

    @property
    def qubit_block(self):
        return np.array([[self.uu, self.ud], [self.du, self.dd]])


def resolvent_elements(z, q1, q2, R, J=1.0, shifted=False):
    """Resolvent matrix elements of the two-emitter problem.

    With ``shifted=True`` the argument is already ``z'``.
    """
    o1, gb1 = _energies(q1)
    o2, gb2 = _energies(q2)
    g1 = gb1 / math.sqrt(2 * math.pi)
    g2 = gb2 / math.sqrt(2 * math.pi)
    zp = complex(z) if shifted else complex(z) + 0.5 * (o1 + o2)
    z0 = zp - 0.5 * (o1 + o2)
    I0 = green_I(zp, 0, J)
    IR = green_I(zp, R, J)
    a = zp - o1 - g1 * g1 * I0
    b = zp - o2 - g2 * g2 * I0
    D = a * b - g1 * g1 * g2 * g2 * IR * green_I(zp, -R, J)
    off = g1 * g2 * IR / D
    return ResolventElements(z0, zp, D, b / D, off, off, a / D, g1, g2, int(R), float(J))


@dataclass(frozen=True)
class BicSpec:
    parity: str
    n: int
    R: int
    k_star: float
    omega: float
    J: float = 1.0

    @property
    def sign(self):
        return 1 if self.parity == "even" else -1


def bic_spec(R, parity, n, J=1.0):
    """Wave vector and emitter frequency of a bound state in the continuum.

    Even states need ``1 + e^{ik*R} = 0`` (``k* = (2n - 1) pi / R``), odd
    ones ``1 - e^{ik*R} = 0`` (``k* = 2 n pi / R``).
    """
    if parity not in ("even", "odd"):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    if R < 1 or n < 1:
        raise NoSuchBicError(f"need R >= 1 and n >= 1, got R={R}, n={n}")
    k = (2 * n - 1) * np.pi / R if parity == "even" else 2 * n * np.pi / R
    if not 0 < k < np.pi:
        raise NoSuchBicError(f"{parity} state n={n} at R={R} has k*={k / np.pi:.3f} pi outside (0, pi)")
    return BicSpec(parity, int(n), int(R), float(k), float(dispersion(k, J)), float(J))


def bic_norm(spec, gbar):
    """Normalization ``N`` of the state, ``N^2 = 1 / (2 (1 + gbar^2 R / (4J^2 - Omega^2)))``."""
    return 1 / math.sqrt(2) / math.sqrt(1 + gbar**2 * spec.R / (4 * spec.J**2 - spec.omega**2))


def bic_amplitudes(spec, gbar):
    """Amplitudes of the bound state for emitters at lattice offsets 0 and R.

    Returns ``(c1, c2, photon)`` where ``photon[u]`` is the amplitude of one
    photon at offset ``u = 0..R`` from the first emitter (zero elsewhere).
    """
    N = bic_norm(spec, gbar)
    k = spec.k_star
    u = np.arange(spec.R + 1)
    pref = -1j * gbar / math.sqrt(4 * spec.J**2 - spec.omega**2)
    photon = N * pref * (np.exp(1j * k * u) + spec.sign * np.exp(1j * k * (spec.R - u)))
    # both wavefronts cancel at and beyond the emitters
    photon[0] = photon[-1] = 0.0
    return N, spec.sign * N, photon


def residue(f, z0, radius=1e-3, points=64):
    """``(1/2 pi i) * contour integral of f`` on a circle around ``z0``."""
    theta = 2 * np.pi * np.arange(points) / points
    zs = z0 + radius * np.exp(1j * theta)
    vals = np.array([f(z) for z in zs])
    return complex(np.mean(vals * radius * np.exp(1j * theta)))


def gaussian_k_density(k, k0, sigma):
    """``|f(k)|^2`` of the real-space envelope ``exp(-(x - x0)^2 / (2 sigma^2))``."""
    return sigma / math.sqrt(math.pi) * np.exp(-((k - k0) * sigma) ** 2)


def pulse_reflection(k0, sigma, qubits, R=None, J=1.0, epsabs=1e-10):
    """Reflection probability ``int dk |r_k|^2 |f_{k0}(k)|^2`` of a Gaussian pulse.

    ``qubits`` holds one or two ``(omega, gbar)`` pairs; two need ``R``.
    """
    if len(qubits) == 1:
        def refl(k):
            return abs(single_qubit_rt(k, *_energies(qubits[0]), J).r) ** 2
    elif len(qubits) == 2:
        if R is None:
            raise ValueError("two emitters need a separation R")

        def refl(k):
            return abs(two_qubit_rt(k, qubits[0], qubits[1], R, J).r) ** 2
    else:
        raise ValueError("closed forms exist for one or two emitters only")
    # the Gaussian is negligible beyond 9 widths; keep clear of the band edges
    half = 9.0 / sigma
    lo, hi = max(1e-9, k0 - half), min(np.pi - 1e-9, k0 + half)
    breaks = [k for k in _resonances(qubits, J) if lo < k < hi]
    val, err = integrate.quad(
        lambda k: refl(k) * gaussian_k_density(k, k0, sigma),
        lo, hi, points=breaks or None, epsabs=epsabs, epsrel=1e-10, limit=400,
    )
    if err > 1e-6:
        raise RuntimeError(f"quadrature did not converge (error estimate {err:.2e})")
    return val


def _resonances(qubits, J):
    out = []
    for q in qubits:
        o, _ = _energies(q)
        if abs(o) < 2 * J:
            out.append(float(np.arccos(-o / (2 * J))))
    return out
