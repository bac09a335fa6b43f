"""Sparse Hamiltonians over a :class:`~wqed.fock.FockSpace`.

    H = -J sum_i (a+_{i+1} a_i + h.c.) + sum_s [ (Omega_s/2) sz_s + gbar_s (s+_s a_{x_s} + h.c.) ]

Energies are measured from the bare cavity frequency and in units of ``J``
when ``J = 1``.  ``sz|up> = +|up>``, so a ground qubit contributes
``-Omega_s/2`` to the diagonal.  The chain has hard walls (no ``L-1 -> 0``
hop).  Matrices are real symmetric ``scipy.sparse.csr_matrix`` objects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fock import BasisTooLargeError, FockSpace

DEFAULT_MAX_DIM = 30_000_000


@dataclass(frozen=True)
class QubitSpec:
    omega: float
    gbar: float
    site: int

    def __post_init__(self):
        if self.gbar < 0:
            raise ValueError(f"coupling must be non-negative, got {self.gbar}")


@dataclass(frozen=True)
class SystemParams:
    L: int
    n_exc: int
    qubits: tuple = ()
    J: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if self.L < 2:
            raise ValueError(f"lattice needs at least 2 sites, got L={self.L}")
        if self.n_exc < 1:
            raise ValueError(f"need at least one excitation, got {self.n_exc}")
        sites = [q.site for q in self.qubits]
        for s in sites:
            if not 0 <= s < self.L:
                raise ValueError(f"qubit site {s} outside lattice [0, {self.L})")
        if any(b <= a for a, b in zip(sites, sites[1:])):
            raise ValueError(f"qubit sites must be strictly increasing, got {sites}")

    @property
    def n_qubits(self):
        return len(self.qubits)

    def space(self, max_dim=DEFAULT_MAX_DIM):
        space = FockSpace(self.n_qubits, self.n_exc, self.L)
        if space.dim > max_dim:
            raise BasisTooLargeError(f"basis of {space.dim} states exceeds the budget of {max_dim}")
        return space

    @property
    def ground_energy(self):
        """Qubit energy with every qubit down, ``-sum Omega_s / 2``."""
        return -0.5 * sum(q.omega for q in self.qubits)


def _count_equal(pos, col):
    return (pos == col[:, None]).sum(axis=1)


def _hops(space, J):
    rows, cols, vals = [], [], []
    L = space.L
    for sec in space.sectors:
        m = sec.photons
        if m == 0:
            continue
        pos = space.positions(sec)
        tab = sec.table
        for j in range(m):
            q = pos[:, j]
            last = q < L - 1
            if j < m - 1:
                last &= pos[:, j + 1] != q
            src = np.flatnonzero(last)
            if src.size == 0:
                continue
            p = pos[src]
            n_from = _count_equal(p, p[:, j])
            n_to = _count_equal(p, p[:, j] + 1)
            moved = p.copy()
            moved[:, j] += 1
            dst = tab.rank_positions(moved)
            rows.append(sec.offset + dst)
            cols.append(sec.offset + src)
            vals.append(-J * np.sqrt(n_from * (n_to + 1.0)))
    return rows, cols, vals


def _couplings(space, params):
    rows, cols, vals = [], [], []
    for s, qb in enumerate(params.qubits):
        if qb.gbar == 0:
            continue
        bit = 1 << s
        for sec in space.sectors:
            if sec.mask & bit or sec.photons == 0:
                continue
            target = space.sector(sec.mask | bit)
            pos = space.positions(sec)
            m = sec.photons
            for j in range(m):
                first = pos[:, j] == qb.site
                if j > 0:
                    first &= pos[:, j - 1] != qb.site
                src = np.flatnonzero(first)
                if src.size == 0:
                    continue
                p = pos[src]
                n_x = _count_equal(p, p[:, j])
                dst = target.table.rank_positions(np.delete(p, j, axis=1))
                # sigma+ a_x : photon absorbed at the qubit site
                rows.append(target.offset + dst)
                cols.append(sec.offset + src)
                vals.append(qb.gbar * np.sqrt(n_x.astype(float)))
    return rows, cols, vals


def _diagonal(space, params):
    diag = np.empty(space.dim)
    for sec in space.sectors:
        e = sum(0.5 * q.omega * (1 if sec.excited(s) else -1) for s, q in enumerate(params.qubits))
        diag[sec.slice] = e
    return diag


def build_h(params, coupling_on=True, space=None):
    """Assemble ``H`` (or ``H0`` with ``coupling_on=False``) as CSR.

    Off-diagonal entries are generated once per unordered pair and mirrored,
    so the result is exactly symmetric.
    """
    if space is None:
        space = params.space()
    _check_space(space, params)
    rows, cols, vals = _hops(space, params.J)
    if coupling_on:
        r, c, v = _couplings(space, params)
        rows += r
        cols += c
        vals += v
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        v = np.concatenate(vals)
    else:
        r = c = np.zeros(0, dtype=np.int64)
        v = np.zeros(0)
    n = space.dim
    diag = _diagonal(space, params)
    idx = np.arange(n)
    keep = diag != 0
    r_all = np.concatenate([r, c, idx[keep]])
    c_all = np.concatenate([c, r, idx[keep]])
    v_all = np.concatenate([v, v, diag[keep]])
    h = sp.csr_matrix((v_all, (r_all, c_all)), shape=(n, n))
    h.sort_indices()
    return h


def build_control(params, delta, targets, space=None):
    """Diagonal ``(delta/2) * sum_{s in targets} sz_s``."""
    if space is None:
        space = params.space()
    _check_space(space, params)
    for s in targets:
        if not 0 <= s < params.n_qubits:
            raise IndexError(f"qubit index {s} out of range for {params.n_qubits} qubits")
    diag = np.empty(space.dim)
    for sec in space.sectors:
        diag[sec.slice] = sum(0.5 * delta * (1 if sec.excited(s) else -1) for s in targets)
    return sp.diags(diag, format="csr")


def apply(op, v):
    """``op @ v`` with a dimension check.

    CSR products accumulate each row left to right over sorted column
    indices in a single thread, so results are bitwise reproducible.
    """
    v = np.asarray(v)
    if op.shape[1] != v.shape[0]:
        raise ValueError(f"operator of shape {op.shape} cannot act on vector of length {v.shape[0]}")
    return op @ v


def _check_space(space, params):
    if (space.n_qubits, space.n_exc, space.L) != (params.n_qubits, params.n_exc, params.L):
        raise ValueError("basis does not match the system parameters")


def dump_coo(op, path):
    """Write ``row col value`` lines, one non-zero per line."""
    coo = op.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        fh.write(f"# shape {op.shape[0]} {op.shape[1]} nnz {op.nnz}\n")
        for k in order:
            fh.write(f"{coo.row[k]} {coo.col[k]} {float(coo.data[k])!r}\n")
