"""Lanczos approximation of ``exp(-i * sign * A * t) @ v`` for Hermitian ``A``.

The step-size control follows Sidje's Expokit ``expv``: a Krylov basis of
dimension ``m`` is built from the current vector, the projected
tridiagonal matrix is diagonalized, and the step ``tau`` is accepted when
the a-posteriori local error estimate is below ``tol * tau * |v|``.  The
estimate uses the ``(m+1, 1)`` and ``(m+2, 1)`` entries of the exponential
of Expokit's augmented projected matrix, evaluated here through the
``phi_1``/``phi_2`` functions of the Ritz values.

The accepted update is the plain Galerkin approximation
``|v| V_m exp(-i sign tau T_m) e_1``, which is exactly norm-preserving when
the Lanczos vectors are orthonormal; full reorthogonalization keeps them so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal

BREAKDOWN_TOL = 1e-14


@dataclass
class PropagatorConfig:
    krylov_dim: int = 30
    tol: float = 1e-8
    max_substeps: int = 100_000
    sign: int = 1
    max_rejects: int = 40

    def __post_init__(self):
        if self.krylov_dim < 2:
            raise ValueError(f"krylov_dim must be >= 2, got {self.krylov_dim}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")


class KrylovConvergenceError(RuntimeError):
    """Propagation gave up; carries the last good state and where it stopped."""

    def __init__(self, msg, estimate=None, time=None, achieved_tol=None):
        super().__init__(msg)
        self.estimate = estimate
        self.time = time
        self.achieved_tol = achieved_tol


def norm_estimate(A):
    """Max absolute row sum, an upper bound on the spectral norm."""
    if sp.issparse(A):
        if A.nnz == 0:
            return 0.0
        return float(abs(A).sum(axis=1).max())
    return float(np.abs(np.asarray(A)).sum(axis=1).max())


def lanczos(A, v, m, btol=BREAKDOWN_TOL):
    """Lanczos with full reorthogonalization started from unit vector ``v``.

    Returns ``(V, alpha, beta, happy)``.  ``V`` has ``k + 1`` rows where the
    last row is the next Lanczos vector (absent on breakdown), ``alpha`` the
    ``k`` diagonal and ``beta`` the ``k`` sub-diagonal entries; ``beta[k-1]``
    couples the subspace to the rest of the space.
    """
    n = v.shape[0]
    V = np.empty((m + 1, n), dtype=complex)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    V[0] = v
    for j in range(m):
        w = A @ V[j]
        basis = V[: j + 1]
        h = basis.conj() @ w
        w = w - h @ basis
        h2 = basis.conj() @ w
        w = w - h2 @ basis
        alpha[j] = (h[j] + h2[j]).real
        b = np.linalg.norm(w)
        beta[j] = b
        if b < btol:
            return V[: j + 1], alpha[: j + 1], beta[: j + 1], True
        V[j + 1] = w / b
    return V, alpha, beta, False


def _phi12(z):
    """``phi_1(z) = (e^z - 1)/z`` and ``phi_2(z) = (e^z - 1 - z)/z^2``."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    ez = np.exp(zs)
    p1 = np.where(small, 1 + z / 2 + z**2 / 6 + z**3 / 24, (ez - 1) / zs)
    p2 = np.where(small, 0.5 + z / 6 + z**2 / 24 + z**3 / 120, (ez - 1 - zs) / zs**2)
    return p1, p2


class _Projection:
    """Diagonalized tridiagonal projection of one Krylov step."""

    def __init__(self, alpha, beta, happy, sign):
        k = alpha.shape[0]
        if k == 1:
            self.lam = alpha.copy()
            self.U = np.ones((1, 1))
        else:
            self.lam, self.U = eigh_tridiagonal(alpha, beta[: k - 1])
        self.h = 0.0 if happy else float(beta[k - 1])
        self.k = k
        self.sign = sign
        self._u0 = self.U[0]
        self._ulast = self.U[k - 1] * self.U[0]

    def coeffs(self, tau):
        z = -1j * self.sign * tau * self.lam
        return self.U @ (np.exp(z) * self._u0)

    def error(self, tau, beta_v, avnorm):
        """Expokit local error estimate and step exponent for step ``tau``."""
        z = -1j * self.sign * tau * self.lam
        p1, p2 = _phi12(z)
        f1 = tau * self.h * (self._ulast @ p1)
        f2 = tau**2 * self.h * (self._ulast @ p2)
        phi1 = beta_v * abs(f1)
        phi2 = beta_v * abs(f2) * avnorm
        k = self.k
        if phi1 > 10 * phi2:
            return phi2, 1.0 / k
        if phi1 > phi2:
            return phi1 * phi2 / (phi1 - phi2), 1.0 / k
        return phi1, 1.0 / max(k - 1, 1)


def _round2(x):
    if x <= 0 or not math.isfinite(x):
        return x
    s = 10.0 ** (math.floor(math.log10(x)) - 1)
    return math.ceil(x / s) * s


def expmv_times(A, v, times, cfg=None, anorm=None):
    """States ``exp(-i sign A t) v`` at every ``t`` in the sorted list ``times``.

    Sample times falling inside an accepted step reuse that step's Krylov
    basis, so dense sampling costs little beyond the propagation itself.
    """
    cfg = cfg or PropagatorConfig()
    v = np.asarray(v, dtype=complex)
    n = v.shape[0]
    if A.shape != (n, n):
        raise ValueError(f"operator of shape {A.shape} cannot act on vector of length {n}")
    times = [float(t) for t in times]
    if any(t < 0 for t in times):
        raise ValueError("times must be non-negative")
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("times must be sorted")
    if not np.all(np.isfinite(v)):
        raise KrylovConvergenceError("non-finite entries in the start vector", time=0.0)
    beta0 = float(np.linalg.norm(v))
    if beta0 == 0:
        raise ValueError("start vector is zero")
    if not times:
        return []

    m = min(cfg.krylov_dim, n)
    tol = cfg.tol
    if anorm is None:
        anorm = norm_estimate(A)
    gamma = 0.9
    t_end = times[-1]
    if anorm > 0:
        fact = ((m + 1) / math.e) ** (m + 1) * math.sqrt(2 * math.pi * (m + 1))
        tau = _round2((fact * tol / (4 * anorm)) ** (1.0 / m) / anorm)
    else:
        tau = t_end

    out = []
    i = 0
    while i < len(times) and times[i] == 0.0:
        out.append(v.copy())
        i += 1
    w = v.copy()
    t_now = 0.0
    nsteps = 0
    while i < len(times):
        if nsteps >= cfg.max_substeps:
            raise KrylovConvergenceError(
                f"no convergence within {cfg.max_substeps} substeps (reached t={t_now})",
                estimate=w, time=t_now, achieved_tol=None,
            )
        nsteps += 1
        bw = float(np.linalg.norm(w))
        V, alpha, beta, happy = lanczos(A, w / bw, m)
        proj = _Projection(alpha, beta, happy, cfg.sign)
        remaining = t_end - t_now
        if happy:
            t_step, err, xm = remaining, 0.0, 1.0
        else:
            avnorm = float(np.linalg.norm(A @ V[m]))
            t_step = min(tau, remaining)
            rejects = 0
            while True:
                err, xm = proj.error(t_step, bw, avnorm)
                if not math.isfinite(err):
                    raise KrylovConvergenceError("non-finite error estimate", estimate=w, time=t_now)
                if err <= tol * t_step * beta0:
                    break
                rejects += 1
                if rejects > cfg.max_rejects:
                    raise KrylovConvergenceError(
                        f"step rejected {rejects} times at t={t_now}",
                        estimate=w, time=t_now, achieved_tol=err / (t_step * beta0),
                    )
                shrink = min(0.5, gamma * (t_step * tol * beta0 / err) ** xm)
                t_step = _round2(t_step * shrink)
            t_step = min(t_step, remaining)
        final = t_step >= remaining
        t_new = t_end if final else t_now + t_step
        basis = V[: proj.k]
        while i < len(times) and (final or times[i] <= t_new):
            y = proj.coeffs(times[i] - t_now)
            out.append(bw * (y @ basis))
            i += 1
        if final:
            break
        y = proj.coeffs(t_step)
        w = bw * (y @ basis)
        if not np.all(np.isfinite(w)):
            raise KrylovConvergenceError("non-finite amplitudes during propagation", time=t_now)
        t_now = t_new
        grow = 2.0 if err == 0 else min(2.0, gamma * (t_step * tol * beta0 / err) ** xm)
        tau = _round2(t_step * grow)
    for s in out:
        if not np.all(np.isfinite(s)):
            raise KrylovConvergenceError("non-finite amplitudes in output", time=t_now)
    return out


def expmv(A, v, t, cfg=None, anorm=None):
    """``exp(-i sign A t) @ v``; ``t = 0`` returns a copy of ``v``."""
    return expmv_times(A, v, [t], cfg, anorm)[0]


def evolve_schedule(segments, v0, sample_times, cfg=None, observe=None):
    """Piecewise-constant evolution through ``[(duration, operator), ...]``.

    Returns ``[(t, state_or_observable), ...]`` for each sample time.  A
    sample on a segment boundary is taken from the earlier segment.
    """
    cfg = cfg or PropagatorConfig()
    total = 0.0
    for dur, op in segments:
        if dur < 0:
            raise ValueError(f"negative segment duration {dur}")
        if op.shape != segments[0][1].shape:
            raise ValueError("segment operators have different dimensions")
        total += dur
    times = [float(t) for t in sample_times]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("sample times must be sorted")
    eps = 1e-12 * max(1.0, total)
    if times and (times[0] < 0 or times[-1] > total + eps):
        raise ValueError(f"sample times must lie within [0, {total}]")
    result = []

    def record(t, state):
        result.append((t, observe(t, state) if observe else state))

    v = np.asarray(v0, dtype=complex)
    t0 = 0.0
    i = 0
    while i < len(times) and times[i] <= eps:
        record(times[i], v.copy())
        i += 1
    for dur, op in segments:
        t1 = t0 + dur
        local = []
        while i < len(times) and times[i] <= t1 + eps:
            local.append((times[i], min(max(times[i] - t0, 0.0), dur)))
            i += 1
        if dur > 0:
            states = expmv_times(op, v, [s for _, s in local] + [dur], cfg)
            for (t, _), st in zip(local, states):
                record(t, st)
            v = states[-1]
        else:
            for t, _ in local:
                record(t, v.copy())
        t0 = t1
    return result
