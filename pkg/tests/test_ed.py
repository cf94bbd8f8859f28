import math

import numpy as np
import pytest

from oscdmrg import (
    ChainSpec,
    FullState,
    ResourceLimitError,
    bond_coefficient,
    build_full_hamiltonian,
    ed_lowest,
    ground_energy_closed,
    onsite_term,
)


def test_full_state_validation():
    amps = np.zeros(8)
    amps[0] = 1.0
    FullState(3, (2, 2, 2), amps)
    with pytest.raises(ValueError):
        FullState(3, (2, 2, 2), np.ones(8))  # not normalized
    with pytest.raises(ValueError):
        FullState(2, (2, 2, 2), amps)
    with pytest.raises(ValueError):
        FullState(3, (2, 2, 2), amps[:4])


def test_single_site_is_onsite_term():
    spec = ChainSpec(1, 1.3, 7)
    ham = build_full_hamiltonian(spec)
    np.testing.assert_allclose(ham.dense(), onsite_term(7, 1.3), atol=1e-14)


def test_two_site_hand_assembled():
    spec = ChainSpec(2, 1.0, 2)
    h = build_full_hamiltonian(spec).dense()
    g = bond_coefficient(1.0)
    s2 = math.sqrt(2)
    expected = np.array(
        [
            [s2, 0.0, 0.0, g],
            [0.0, 2 * s2, g, 0.0],
            [0.0, g, 2 * s2, 0.0],
            [g, 0.0, 0.0, 3 * s2],
        ]
    )
    np.testing.assert_allclose(h, expected, atol=1e-14)
    assert h[1, 2] == pytest.approx(-math.sqrt(2) / 4, abs=1e-14)


def test_hamiltonian_symmetric_and_paths_agree():
    spec = ChainSpec(3, 0.8, 5)
    dense = build_full_hamiltonian(spec)
    free = build_full_hamiltonian(spec, force_matrix_free=True)
    h = dense.dense()
    np.testing.assert_allclose(h, h.T, atol=1e-13)
    rng = np.random.default_rng(0)
    v = rng.standard_normal((125, 4))
    np.testing.assert_allclose(free.matvec_block(v), h @ v, atol=1e-11)
    np.testing.assert_allclose(free.matvec(v[:, 0]), h @ v[:, 0], atol=1e-11)


def test_resource_guards():
    with pytest.raises(ResourceLimitError):
        build_full_hamiltonian(ChainSpec(13, 1.0, 3))  # 3^13 > 2^20
    big = build_full_hamiltonian(ChainSpec(8, 1.0, 5), force_matrix_free=True)
    with pytest.raises(ResourceLimitError):
        big.dense()  # 5^8 = 390625 > dense cap


def test_ed_single_site_exact():
    for m in (2, 5, 10):
        energies, states = ed_lowest(ChainSpec(1, 1.0, m), 1)
        assert energies[0] == pytest.approx(math.sqrt(2) / 2, abs=1e-10)
        assert abs(np.linalg.norm(states[0].amplitudes) - 1.0) < 1e-10


def test_ed_m_convergence_and_variational():
    # monotone decrease toward the analytic value as the cutoff grows
    for n_sites in (2, 3):
        exact = ground_energy_closed(ChainSpec(n_sites))
        prev = None
        for m in (4, 6, 8, 10, 12, 14):
            e, _ = ed_lowest(ChainSpec(n_sites, 1.0, m), 1)
            assert e[0] >= exact - 1e-9
            if prev is not None:
                assert e[0] <= prev + 1e-12
            prev = e[0]
        assert prev - exact < 1e-6


def test_ed_two_site_gap_adjudication():
    # converged gap equals one quantum of the softest mode, 2*sin(pi/6) = 1
    energies, _ = ed_lowest(ChainSpec(2, 1.0, 14), 2)
    assert energies[1] - energies[0] == pytest.approx(1.0, abs=1e-5)


def test_ed_energies_scale_linearly_in_hbar():
    e1, _ = ed_lowest(ChainSpec(3, 1.0, 5), 2)
    e2, _ = ed_lowest(ChainSpec(3, 2.0, 5), 2)
    np.testing.assert_allclose(e2, 2.0 * e1, rtol=1e-9)


def test_ed_matrix_free_path_matches_dense_path():
    spec = ChainSpec(6, 1.0, 3)  # dim 729, below the dense cap
    e_dense, _ = ed_lowest(spec, 2)
    ham = build_full_hamiltonian(spec, force_matrix_free=True)
    from oscdmrg import lowest_k

    res = lowest_k(ham.matvec, ham.dim, 2, apply_block=ham.matvec_block)
    np.testing.assert_allclose(res.values, e_dense, atol=1e-9)
