import numpy as np
import pytest

from liectrl.closure import GeneratorSet, close
from liectrl.sectors import (
    NNN_LABELS,
    SectorBasis,
    SectorError,
    build_hubbard_chain_controls,
    build_nnn_lattice,
    build_spinful_controls,
    hopping,
    lattice_mode,
    number_op,
    spinful_mode,
    transfer,
    verify_nnn_identity,
)

from oracles import dense_closure_dimension


def jw_fock_operator(n_modes, mode):
    """Annihilation operator on the full Fock space via Jordan-Wigner.

    Independent construction used as the sign oracle: mode 0 is the
    leftmost tensor factor, parity string to the left of the mode.
    """
    lower = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|
    z = np.diag([1.0, -1.0]).astype(complex)
    eye = np.eye(2, dtype=complex)
    out = np.array([[1.0 + 0j]])
    for k in range(n_modes):
        if k < mode:
            out = np.kron(out, z)
        elif k == mode:
            out = np.kron(out, lower)
        else:
            out = np.kron(out, eye)
    return out


def project_to_sector(op, basis):
    """Restrict a Fock-space operator to the sector's occupation states."""
    n = basis.n_modes
    idx = []
    for occ in basis.states:
        k = 0
        for bit in occ:
            k = (k << 1) | bit
        idx.append(k)
    return op[np.ix_(idx, idx)]


class TestBasis:
    def test_fermion_dimensions(self):
        b = SectorBasis.build("fermion", 5, 2)
        assert b.dim == 10
        assert all(sum(s) == 2 for s in b.states)
        assert sorted(b.states) == list(b.states)

    def test_boson_dimensions(self):
        b = SectorBasis.build("boson", 3, 2)
        assert b.dim == 6
        assert all(sum(s) == 2 for s in b.states)

    def test_index_bijection(self):
        b = SectorBasis.build("boson", 4, 3)
        assert len(b.index) == b.dim
        for k, s in enumerate(b.states):
            assert b.index[s] == k

    def test_budget(self):
        with pytest.raises(SectorError):
            SectorBasis.build("boson", 12, 12, budget=512)


class TestLadderOperators:
    def test_fermion_two_mode_hopping(self):
        b = SectorBasis.build("fermion", 2, 1)
        np.testing.assert_allclose(hopping(b, 1, 2).matrix,
                                   [[0, 1], [1, 0]], atol=1e-15)

    def test_boson_two_mode_hopping(self):
        b = SectorBasis.build("boson", 2, 2)
        got = hopping(b, 1, 2).matrix
        s2 = np.sqrt(2)
        want = [[0, s2, 0], [s2, 0, s2], [0, s2, 0]]
        np.testing.assert_allclose(got, want, atol=1e-15)

    def test_fermion_long_range_sign(self):
        b = SectorBasis.build("fermion", 3, 2)
        got = hopping(b, 1, 3).matrix
        i_110 = b.index[(1, 1, 0)]
        i_011 = b.index[(0, 1, 1)]
        assert got[i_110, i_011] == pytest.approx(-1.0)

    def test_number_ops(self):
        b = SectorBasis.build("fermion", 2, 1)
        np.testing.assert_allclose(number_op(b, 1).matrix, np.diag([0, 1.0]))
        bb = SectorBasis.build("boson", 2, 2)
        diag = np.diag(number_op(bb, 1).matrix).real
        assert sorted(diag) == [0, 1, 2]

    def test_total_number_is_identity_multiple(self):
        for kind, m, n in [("fermion", 4, 2), ("boson", 3, 3)]:
            b = SectorBasis.build(kind, m, n)
            total = sum(number_op(b, i).matrix for i in range(1, m + 1))
            np.testing.assert_allclose(total, n * np.eye(b.dim), atol=1e-14)

    def test_mode_out_of_range(self):
        b = SectorBasis.build("fermion", 2, 1)
        with pytest.raises(SectorError):
            number_op(b, 3)
        with pytest.raises(SectorError):
            hopping(b, 0, 1)

    def test_fermion_matches_jordan_wigner_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(8):
            m = int(rng.integers(2, 5))
            n = int(rng.integers(1, m))
            b = SectorBasis.build("fermion", m, n)
            i, j = rng.choice(m, size=2, replace=False) + 1
            c_i = jw_fock_operator(m, i - 1)
            c_j = jw_fock_operator(m, j - 1)
            want = project_to_sector(c_i.conj().T @ c_j, b)
            np.testing.assert_allclose(transfer(b, int(i), int(j)), want, atol=1e-13)

    def test_canonical_commutation_on_sector(self):
        # [n_i, c_i^dag c_j] = c_i^dag c_j projected identity
        for kind in ("fermion", "boson"):
            b = SectorBasis.build(kind, 3, 2)
            n1 = number_op(b, 1).matrix
            t = transfer(b, 1, 2)
            np.testing.assert_allclose(n1 @ t - t @ n1, t, atol=1e-13)


class TestChainControls:
    def test_rejects_even_sites(self):
        with pytest.raises(SectorError, match="odd"):
            build_hubbard_chain_controls("fermion", 4, 2)
        with pytest.raises(SectorError, match="odd"):
            build_spinful_controls(4, 2)

    def test_generator_structure(self):
        gen = build_hubbard_chain_controls("fermion", 5, 2)
        assert gen.names == ["H_odd_hop", "H_even_hop", "H_odd_mu", "H_even_mu", "H_U"]
        for g in gen.generators:
            np.testing.assert_allclose(g, g.conj().T, atol=1e-14)
        # particle number commutes with everything built
        b = gen.basis
        total = sum(number_op(b, i).matrix for i in range(1, b.n_modes + 1))
        for g in gen.generators:
            assert np.max(np.abs(g @ total - total @ g)) < 1e-12

    # dimensions frozen from the all-pairs dense SVD oracle
    @pytest.mark.parametrize("kind,n,p,want", [
        ("fermion", 3, 1, 9),
        ("fermion", 5, 2, 100),
        ("boson", 3, 2, 36),
    ])
    def test_universality_dimensions(self, kind, n, p, want):
        gen = build_hubbard_chain_controls(kind, n, p)
        res = close(gen)
        assert res.dimension == want
        assert res.universality == "universal"
        assert res.theoretical_cap == want

    def test_oracle_agreement_small(self):
        gen = build_hubbard_chain_controls("boson", 3, 2)
        live = [g for g in gen.generators if np.linalg.norm(g) > 1e-12]
        assert dense_closure_dimension(live) == 36

    def test_interaction_ablation_shrinks(self):
        gen = build_hubbard_chain_controls("fermion", 5, 2)
        free = close(GeneratorSet("dense", gen.generators[:4]))
        assert free.dimension == 25  # u(5) in the two-particle representation
        assert free.dimension < 100
        genb = build_hubbard_chain_controls("boson", 3, 2)
        freeb = close(GeneratorSet("dense", genb.generators[:4]))
        assert freeb.dimension == 9
        assert freeb.dimension < 36


class TestSpinfulControls:
    def test_mode_layout(self):
        assert spinful_mode(1, "up") == 1
        assert spinful_mode(1, "down") == 2
        assert spinful_mode(3, "up") == 5

    def test_universality_with_both_field_profiles(self):
        tilted = build_spinful_controls(3, 1, 1.0, 0.0)
        uniform = build_spinful_controls(3, 1, 0.0, 1.0)
        gens = tilted.generators + [uniform.generators[5]]
        res = close(GeneratorSet("dense", gens))
        assert res.dimension == 36
        assert res.universality == "universal"

    def test_dropping_spin_mixing_decouples(self):
        tilted = build_spinful_controls(3, 1, 1.0, 0.0)
        uniform = build_spinful_controls(3, 1, 0.0, 1.0)
        gens = tilted.generators + [uniform.generators[5]]
        no_bx = [g for k, g in enumerate(gens) if k != 4]
        res = close(GeneratorSet("dense", no_bx))
        assert res.dimension == 18
        assert res.dimension < 36

    def test_uniform_bz_does_not_commute_with_bx(self):
        tilted = build_spinful_controls(3, 1, 1.0, 0.0)
        uniform = build_spinful_controls(3, 1, 0.0, 1.0)
        bx, bz = tilted.generators[4], uniform.generators[5]
        assert np.linalg.norm(bx @ bz - bz @ bx) > 1.0


class TestNNNLattice:
    def test_lattice_validation(self):
        with pytest.raises(SectorError):
            build_nnn_lattice(2, 3)
        with pytest.raises(SectorError):
            build_nnn_lattice(3, 4)

    def test_single_particle_dimension(self):
        gen = build_nnn_lattice(3, 3)
        assert gen.basis.dim == 9

    def test_species1_potential_sites(self):
        gen = build_nnn_lattice(3, 3)
        h1 = gen.generators[0]
        diag = np.real(np.diag(h1))
        want = np.zeros(9)
        for r, c in [(1, 1), (1, 3), (3, 1), (3, 3)]:
            want[lattice_mode(r, c, 3) - 1] = 1.0
        np.testing.assert_allclose(diag, want)

    def test_vertical_hopping_class_bonds(self):
        gen = build_nnn_lattice(3, 3)
        basis = gen.basis
        h3 = gen.generators[6]  # vertical bonds from odd rows
        nz = {(int(i), int(j)) for i, j in zip(*np.nonzero(h3)) if i < j}

        def state_index(mode_1based):
            occ = [0] * basis.n_modes
            occ[mode_1based - 1] = 1
            return basis.index[tuple(occ)]

        want = set()
        for r in (1, 3):  # odd rows; r=3 has no downward neighbor on 3x3
            if r + 1 > 3:
                continue
            for c in range(1, 4):
                a = state_index(lattice_mode(r, c, 3))
                b = state_index(lattice_mode(r + 1, c, 3))
                want.add((min(a, b), max(a, b)))
        assert nz == want

    def test_unknown_label(self):
        with pytest.raises(SectorError):
            verify_nnn_identity("99X", 3, 3)

    @pytest.mark.parametrize("label", NNN_LABELS)
    def test_identities_3x3(self, label):
        passed, scale = verify_nnn_identity(label, 3, 3)
        assert passed
        assert scale == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("label", NNN_LABELS)
    def test_identities_5x5(self, label):
        passed, scale = verify_nnn_identity(label, 5, 5)
        assert passed
        assert scale == pytest.approx(1.0, abs=1e-9)
