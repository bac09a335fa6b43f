"""Fixed-excitation occupation basis for qubits plus bosons on a chain.

A basis element is a qubit configuration (a bitmask, bit ``s`` set means
qubit ``s`` is excited) together with the photon counts on the ``L`` sites.
With ``N`` total excitations the qubit configurations split the space into
sectors; a sector with ``p`` excited qubits holds ``m = N - p`` photons and
``C(L + m - 1, L - 1)`` occupation states.

Ordering
--------
Sectors are ordered by ascending bitmask (all-ground first).  Inside a
sector the occupation tuples are in *descending lexicographic* order, so
index 0 is ``(m, 0, ..., 0)`` and the last index is ``(0, ..., 0, m)``.
Ranking uses the combinatorial number system: with ``s_i`` the number of
photons strictly to the right of site ``i``,

    rank(n) = sum_i C(s_i + L - i - 2, s_i - 1)      (terms with s_i = 0 vanish)

Internally a sector stores its states as sorted photon *positions*
(shape ``(dim, m)``), which is ``L/m`` times smaller than counts and makes
the rank an ``O(m)`` table lookup.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

INDEX_LIMIT = np.iinfo(np.int64).max


class BasisTooLargeError(OverflowError):
    """Raised when a basis cannot be indexed or would not fit in memory."""


def sector_dimension(L, m, limit=INDEX_LIMIT):
    """Number of ways to put ``m`` bosons on ``L`` sites, ``C(L+m-1, L-1)``.

    Computed exactly with Python integers; raises :class:`BasisTooLargeError`
    when the count exceeds ``limit`` (default: the int64 index range).
    """
    if L < 1 or m < 0:
        raise ValueError(f"need L >= 1 and m >= 0, got L={L}, m={m}")
    d = math.comb(L + m - 1, L - 1)
    if d > limit:
        raise BasisTooLargeError(f"sector with L={L}, m={m} has {d} states (limit {limit})")
    return d


class RankTable:
    """Precomputed binomial tables for ranking ``m`` bosons on ``L`` sites.

    The tables are immutable after construction and can be shared freely.
    """

    def __init__(self, L, m):
        self.L = int(L)
        self.m = int(m)
        self.dim = sector_dimension(self.L, self.m)
        L, m = self.L, self.m
        # term[i, s]: states sharing the prefix up to i-1 with a larger count at site i
        term = np.zeros((L, m + 1), dtype=np.int64)
        for i in range(L - 1):
            for s in range(1, m + 1):
                term[i, s] = math.comb(s + L - i - 2, s - 1)
        # cum[s, i] = sum of term[:i, s]
        cum = np.zeros((m + 1, L), dtype=np.int64)
        cum[:, 1:] = np.cumsum(term[:-1, :].T, axis=1)
        self._cum = cum
        self._cum.setflags(write=False)

    def rank_positions(self, pos):
        """Vectorized rank of sorted position rows, ``pos`` of shape ``(k, m)``."""
        pos = np.asarray(pos)
        if pos.ndim == 1:
            pos = pos[None, :]
        m = self.m
        out = np.zeros(pos.shape[0], dtype=np.int64)
        prev = np.zeros(pos.shape[0], dtype=np.intp)
        for j in range(m):
            cur = pos[:, j].astype(np.intp)
            row = self._cum[m - j]
            out += row[cur] - row[prev]
            prev = cur
        return out

    def rank(self, counts):
        counts = _check_counts(counts, self.L, self.m)
        return int(self.rank_positions(counts_to_positions(counts))[0])

    def unrank(self, index):
        L, m = self.L, self.m
        if not 0 <= index < self.dim:
            raise IndexError(f"index {index} out of range for dimension {self.dim}")
        counts = [0] * L
        left = m
        idx = int(index)
        for i in range(L - 1):
            rest = L - i - 1
            for c in range(left, -1, -1):
                block = math.comb(left - c + rest - 1, rest - 1)
                if idx < block:
                    counts[i] = c
                    left -= c
                    break
                idx -= block
        counts[L - 1] = left
        return tuple(counts)


def _check_counts(counts, L=None, m=None):
    counts = tuple(int(c) for c in counts)
    if L is not None and len(counts) != L:
        raise ValueError(f"occupation has {len(counts)} sites, expected {L}")
    if any(c < 0 for c in counts):
        raise ValueError(f"negative occupation in {counts}")
    if m is not None and sum(counts) != m:
        raise ValueError(f"occupation {counts} holds {sum(counts)} photons, expected {m}")
    return counts


def counts_to_positions(counts):
    return np.repeat(np.arange(len(counts)), counts)


def positions_to_counts(pos, L):
    return tuple(np.bincount(np.asarray(pos, dtype=np.intp), minlength=L).tolist())


def rank(state):
    """Index of an occupation tuple within its ``(L, sum(state))`` block."""
    state = _check_counts(state)
    return _table(len(state), sum(state)).rank(state)


def unrank(index, L, m):
    """Occupation tuple at position ``index`` of the ``(L, m)`` block."""
    return _table(L, m).unrank(index)


_TABLES = {}


def _table(L, m):
    key = (int(L), int(m))
    tab = _TABLES.get(key)
    if tab is None:
        tab = _TABLES[key] = RankTable(*key)
    return tab


def hop_amplitude(state, src, dst):
    """Move one photon from site ``src`` to neighbouring site ``dst``.

    Returns ``(new_state, sqrt(n_src * (n_dst + 1)))``, or ``None`` when
    ``src`` is empty.  The input tuple is not modified.
    """
    state = _check_counts(state)
    L = len(state)
    if not (0 <= src < L and 0 <= dst < L):
        raise IndexError(f"sites ({src}, {dst}) outside lattice of {L}")
    if abs(src - dst) != 1:
        raise ValueError(f"hop must connect nearest neighbours, got {src} -> {dst}")
    n_src, n_dst = state[src], state[dst]
    if n_src == 0:
        return None
    new = list(state)
    new[src] -= 1
    new[dst] += 1
    return tuple(new), math.sqrt(n_src * (n_dst + 1))


def all_positions(L, m):
    """All sorted position tuples for ``m`` photons, in rank order."""
    dim = sector_dimension(L, m)
    if m == 0:
        return np.zeros((1, 0), dtype=np.int32)
    dtype = np.int16 if L < 2**15 else np.int32
    flat = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations_with_replacement(range(L), m)),
        dtype=dtype,
        count=dim * m,
    )
    return flat.reshape(dim, m)


def mask_label(mask, n_qubits):
    """Arrow label for a qubit bitmask, qubit 0 leftmost."""
    return "".join("↑" if mask >> s & 1 else "↓" for s in range(n_qubits))


def parse_label(label):
    """Inverse of :func:`mask_label`; also accepts ``u``/``d`` and ``1``/``0``."""
    mask = 0
    for s, ch in enumerate(label):
        if ch in "↑u1":
            mask |= 1 << s
        elif ch not in "↓d0":
            raise ValueError(f"bad qubit label {label!r}")
    return mask


@dataclass(frozen=True)
class SectorBasis:
    """One qubit configuration and its photon-number block."""

    mask: int
    n_qubits: int
    photons: int
    L: int
    offset: int
    dim: int

    @property
    def label(self):
        return mask_label(self.mask, self.n_qubits)

    def excited(self, s):
        return bool(self.mask >> s & 1)

    @property
    def table(self):
        return _table(self.L, self.photons)

    @property
    def slice(self):
        return slice(self.offset, self.offset + self.dim)


def enumerate_sectors(n_qubits, n_exc, L):
    """All sectors with ``n_exc`` total excitations, ascending bitmask order."""
    if n_qubits < 0 or n_exc < 0 or L < 1:
        raise ValueError(f"bad sizes n_qubits={n_qubits}, n_exc={n_exc}, L={L}")
    sectors = []
    offset = 0
    for mask in range(1 << n_qubits):
        m = n_exc - bin(mask).count("1")
        if m < 0:
            continue
        dim = sector_dimension(L, m)
        sectors.append(SectorBasis(mask, n_qubits, m, L, offset, dim))
        offset += dim
    return sectors


@dataclass
class FockSpace:
    """The full fixed-excitation space: an ordered list of sectors."""

    n_qubits: int
    n_exc: int
    L: int
    sectors: list = field(init=False)

    def __post_init__(self):
        self.sectors = enumerate_sectors(self.n_qubits, self.n_exc, self.L)
        self._by_mask = {sec.mask: sec for sec in self.sectors}

    @property
    def dim(self):
        last = self.sectors[-1]
        return last.offset + last.dim

    def sector(self, mask):
        if isinstance(mask, str):
            mask = parse_label(mask)
        try:
            return self._by_mask[mask]
        except KeyError:
            raise KeyError(f"no sector with qubit mask {mask:#b} at n_exc={self.n_exc}") from None

    def positions(self, sec):
        """Photon positions of every state in ``sec`` (cached per ``(L, m)``)."""
        return _positions(self.L, sec.photons)

    def index(self, mask, counts):
        sec = self.sector(mask)
        counts = _check_counts(counts, self.L, sec.photons)
        return sec.offset + sec.table.rank(counts)

    def element(self, index):
        """``(mask, counts)`` of the global basis index."""
        if not 0 <= index < self.dim:
            raise IndexError(f"index {index} outside [0, {self.dim})")
        for sec in self.sectors:
            if index < sec.offset + sec.dim:
                return sec.mask, sec.table.unrank(index - sec.offset)
        raise AssertionError("sector offsets do not cover the index range")

    def zeros(self):
        return np.zeros(self.dim, dtype=complex)

    def basis_vector(self, mask, counts=None):
        if counts is None:
            counts = (0,) * self.L
        v = self.zeros()
        v[self.index(mask, counts)] = 1.0
        return v


_POSITIONS = {}


def _positions(L, m):
    key = (int(L), int(m))
    pos = _POSITIONS.get(key)
    if pos is None:
        pos = all_positions(*key)
        pos.setflags(write=False)
        _POSITIONS[key] = pos
    return pos
