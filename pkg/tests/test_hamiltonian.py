import itertools
from functools import reduce

import numpy as np
import pytest

from wqed.fock import BasisTooLargeError, FockSpace
from wqed.hamiltonian import QubitSpec, SystemParams, apply, build_control, build_h, dump_coo


def dense_reference(params, n_max):
    """H from Kronecker products on a truncated Fock space (qubits first, then sites).

    Qubit basis is [down, up]; sites are truncated at ``n_max`` photons.
    """
    n_q, L, J = params.n_qubits, params.L, params.J
    d = n_max + 1
    a = np.diag(np.sqrt(np.arange(1, d)), 1)
    sp_ = np.array([[0.0, 0.0], [1.0, 0.0]])
    sz = np.diag([-1.0, 1.0])
    dims = [2] * n_q + [d] * L

    def embed(ops):
        return reduce(np.kron, [ops.get(i, np.eye(k)) for i, k in enumerate(dims)])

    H = 0
    for i in range(L - 1):
        H = H - J * (embed({n_q + i + 1: a.T, n_q + i: a}) + embed({n_q + i: a.T, n_q + i + 1: a}))
    for s, q in enumerate(params.qubits):
        H = H + 0.5 * q.omega * embed({s: sz})
        x = n_q + q.site
        H = H + q.gbar * (embed({s: sp_, x: a}) + embed({s: sp_.T, x: a.T}))
    return H, dims


def dense_index(dims, n_q, mask, counts):
    digits = [mask >> s & 1 for s in range(n_q)] + list(counts)
    idx = 0
    for dgt, k in zip(digits, dims):
        idx = idx * k + dgt
    return idx


def params_two_qubits(L=3, n_exc=2, g=(0.7, 0.3)):
    return SystemParams(L, n_exc, [QubitSpec(0.4, g[0], 0), QubitSpec(-0.9, g[1], L - 1)])


def test_two_site_chain():
    H = build_h(SystemParams(2, 1))
    assert np.array_equal(H.toarray(), [[0.0, -1.0], [-1.0, 0.0]])


def test_three_site_spectrum():
    H = build_h(SystemParams(3, 1)).toarray()
    assert np.allclose(np.linalg.eigvalsh(H), [-np.sqrt(2), 0, np.sqrt(2)], atol=1e-14)


@pytest.mark.parametrize("L", [4, 9, 16, 33, 64])
def test_chain_spectrum_hard_wall(L):
    J = 0.8
    ev = np.linalg.eigvalsh(build_h(SystemParams(L, 1, J=J)).toarray())
    q = np.arange(1, L + 1)
    assert np.allclose(ev, np.sort(-2 * J * np.cos(q * np.pi / (L + 1))), atol=1e-12)
    assert np.all(np.abs(ev) < 2 * J)


def test_single_qubit_coupling_entry():
    x = 2
    params = SystemParams(5, 1, [QubitSpec(0.3, 0.6, x)])
    space = params.space()
    H = build_h(params, space=space)
    photon = space.index(0, tuple(int(i == x) for i in range(5)))
    excited = space.index(1, (0,) * 5)
    assert H[photon, excited] == 0.6
    assert H[excited, photon] == 0.6
    block = H[space.sector(0).slice, space.sector(1).slice]
    assert block.nnz == 1
    assert H[excited, excited] == pytest.approx(0.15)
    assert H[photon, photon] == pytest.approx(-0.15)


@pytest.mark.parametrize("n_exc", [1, 2, 3])
def test_matches_dense_kronecker_reference(n_exc):
    params = params_two_qubits(L=3, n_exc=n_exc)
    space = params.space()
    H = build_h(params, space=space).toarray()
    ref, dims = dense_reference(params, n_max=n_exc)
    idx = [dense_index(dims, 2, *space.element(i)) for i in range(space.dim)]
    assert np.allclose(H, ref[np.ix_(idx, idx)], atol=1e-14)


def test_dense_reference_conserves_excitations():
    # the full truncated H never links the fixed-N block to other states
    params = params_two_qubits(L=3, n_exc=2)
    ref, dims = dense_reference(params, n_max=3)
    n_tot = np.zeros(ref.shape[0])
    for digits in itertools.product(*[range(k) for k in dims]):
        n_tot[dense_index(dims, 0, 0, digits)] = sum(digits)
    links = np.abs(ref) > 0
    rows, cols = np.nonzero(links)
    assert np.all(n_tot[rows] == n_tot[cols])


def test_exactly_symmetric():
    params = params_two_qubits(L=6, n_exc=3)
    H = build_h(params)
    assert abs(H - H.T).max() == 0
    assert H.dtype == np.float64
    assert H.has_sorted_indices


def test_block_diagonal_without_coupling():
    params = params_two_qubits(L=5, n_exc=2)
    space = params.space()
    H0 = build_h(params, coupling_on=False, space=space)
    rng = np.random.default_rng(1)
    v = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    for sec in space.sectors:
        P = np.zeros(space.dim)
        P[sec.slice] = 1
        assert np.allclose(P * (H0 @ v) - H0 @ (P * v), 0, atol=1e-13)


def test_hermitian_inner_products():
    params = params_two_qubits(L=7, n_exc=2)
    H = build_h(params)
    rng = np.random.default_rng(2)
    n = H.shape[0]
    u = rng.normal(size=n) + 1j * rng.normal(size=n)
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    assert np.vdot(u, apply(H, v)) == pytest.approx(np.conj(np.vdot(v, apply(H, u))), rel=1e-13)


def test_apply_examples():
    H = build_h(SystemParams(2, 1))
    assert np.array_equal(apply(H, np.array([1.0, 0.0])), [0.0, -1.0])
    Z = build_control(SystemParams(2, 1), 0.0, [])
    assert np.array_equal(apply(Z, np.array([0.3, 0.4])), [0.0, 0.0])
    with pytest.raises(ValueError):
        apply(H, np.ones(3))


def four_qubit_params(delta_sites=(1, 2, 3, 4), L=6):
    return SystemParams(L, 1, [QubitSpec(0.5, 0.2, s) for s in delta_sites])


def test_control_zero_delta():
    params = four_qubit_params()
    assert build_control(params, 0.0, [0, 1]).count_nonzero() == 0


def test_control_values():
    params = four_qubit_params()
    space = params.space()
    dH = build_control(params, 0.3, [0, 1], space=space)
    d = dH.diagonal()
    vac = (0,) * params.L
    assert d[space.index(0b0001, vac)] == 0.0
    assert d[space.index(0b0100, vac)] == pytest.approx(-0.3)
    assert np.all(d[space.sector(0).slice] == pytest.approx(-0.3))
    with pytest.raises(IndexError):
        build_control(params, 0.3, [4])


def test_control_shift_on_ground_left_pair():
    # (H0 + dH) acting on |down,down,up,down> of the qubit part gives -(Omega + Delta)
    omega, delta = 0.7, 0.2
    params = SystemParams(6, 1, [QubitSpec(omega, 0.0, s) for s in (1, 2, 3, 4)])
    space = params.space()
    H = build_h(params, space=space) + build_control(params, delta, [0, 1], space=space)
    vac = (0,) * params.L
    i = space.index(0b0100, vac)
    j = space.index(0b0001, vac)
    assert H[i, i] == pytest.approx(-(omega + delta))
    assert H[j, j] == pytest.approx(-omega)


def test_bad_parameters():
    with pytest.raises(ValueError):
        SystemParams(1, 1)
    with pytest.raises(ValueError):
        SystemParams(4, 0)
    with pytest.raises(ValueError):
        SystemParams(4, 1, [QubitSpec(0, 0.1, 4)])
    with pytest.raises(ValueError):
        SystemParams(6, 1, [QubitSpec(0, 0.1, 3), QubitSpec(0, 0.1, 3)])
    with pytest.raises(ValueError):
        QubitSpec(0, -0.1, 0)
    with pytest.raises(BasisTooLargeError):
        SystemParams(500, 4).space(max_dim=10**6)
    with pytest.raises(ValueError):
        build_h(SystemParams(4, 1), space=FockSpace(0, 2, 4))


def test_dump_coo(tmp_path):
    H = build_h(SystemParams(3, 1))
    path = tmp_path / "h.txt"
    dump_coo(H, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# shape 3 3 nnz 4"
    assert lines[1:] == ["0 1 -1.0", "1 0 -1.0", "1 2 -1.0", "2 1 -1.0"]
