"""Pauli-string algebra and the named chain operators."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import mbqclab as m
from mbqclab.pauli import PauliString


def pstr(text, n):
    return m.PauliString.parse(text, n)


class TestConstructors:
    @pytest.mark.parametrize(
        "k,n,expected",
        [
            (1, 5, "+Z1 X2 X4 Z5"),
            (2, 5, "+Z2 X3 X5"),
            (4, 5, "+Z4 X5"),
            (3, 9, "+Z3 X4 X6 X8 Z9"),
            (6, 9, "+Z6 X7 X9"),
        ],
    )
    def test_string_order_geq(self, k, n, expected):
        assert str(m.string_order_geq(k, n)) == expected

    @pytest.mark.parametrize(
        "k,l,n,expected",
        [
            (1, 3, 5, "+Z1 X2 Z3"),
            (2, 4, 7, "+Z2 X3 Z4"),
            (3, 7, 9, "+Z3 X4 X6 Z7"),
        ],
    )
    def test_string_order_pair(self, k, l, n, expected):
        assert str(m.string_order_pair(k, l, n)) == expected

    def test_pair_to_chain_end_matches_full_string(self):
        assert m.string_order_pair(1, 5, 5) == m.string_order_geq(1, 5)

    def test_symmetry_generators(self):
        g0, g1 = m.symmetry_generators(5)
        assert str(g0) == "+Z1 X2 X4 Z5"
        assert str(g1) == "+X1 X3 X5"

    @pytest.mark.parametrize(
        "i,n,expected",
        [(3, 5, "+Z2 X3 Z4"), (1, 5, "+X1 Z2"), (5, 5, "+Z4 X5")],
    )
    def test_cluster_stabilizer(self, i, n, expected):
        assert str(m.cluster_stabilizer(i, n)) == expected

    def test_stabilizer_product_builds_string_order(self):
        # alternating stabilizer products telescope into the full strings
        n = 9
        for k in (1, 3, 5):
            prod = m.PauliString.identity(n)
            for i in range(k + 1, n, 2):
                prod = prod * m.cluster_stabilizer(i, n)
            assert prod == m.string_order_geq(k, n)
        for k in (2, 4):
            prod = m.PauliString.identity(n)
            for i in range(k + 1, n + 1, 2):
                prod = prod * m.cluster_stabilizer(i, n)
            assert prod == m.string_order_geq(k, n)

    def test_range_errors(self):
        with pytest.raises(IndexError):
            m.string_order_geq(0, 5)
        with pytest.raises(IndexError):
            m.string_order_geq(5, 5)
        with pytest.raises(IndexError):
            m.cluster_stabilizer(6, 5)
        with pytest.raises(ValueError):
            m.string_order_pair(1, 4, 7)  # parity mismatch
        with pytest.raises(ValueError):
            m.symmetry_generators(6)


class TestAlgebra:
    def test_involution(self):
        x = m.PauliString.from_sites(1, {1: "X"})
        assert (x * x).is_identity

    def test_xy_gives_iz(self):
        x = m.PauliString.from_sites(1, {1: "X"})
        y = m.PauliString.from_sites(1, {1: "Y"})
        assert str(x * y) == "+iZ1"
        assert str(y * x) == "-iZ1"

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            m.multiply(m.PauliString.identity(3), m.PauliString.identity(5))

    @pytest.mark.parametrize("n", [5, 7, 9, 11, 13])
    def test_triple_product_identity_exhaustive(self, n):
        for k in range(1, n - 1):
            for l in range(k + 2, n, 2):
                triple = m.multiply(
                    m.string_order_geq(k, n),
                    m.multiply(m.string_order_pair(k, l, n), m.string_order_geq(l, n)),
                )
                assert triple.is_identity, (k, l, n)

    @pytest.mark.parametrize("n", [5, 9])
    def test_strings_square_to_identity(self, n):
        ops = [m.string_order_geq(k, n) for k in range(1, n)]
        ops += [m.string_order_pair(1, 3, n), *m.symmetry_generators(n)]
        for op in ops:
            assert (op * op).is_identity

    def test_symmetries_commute_with_strings(self):
        n = 9
        g0, g1 = m.symmetry_generators(n)
        ops = [m.string_order_geq(k, n) for k in range(1, n)]
        ops += [m.string_order_pair(k, k + 2, n) for k in range(1, n - 2)]
        for g in (g0, g1):
            for op in ops:
                assert g * op == op * g

    def test_symmetry_group_involutive_and_abelian(self):
        g0, g1 = m.symmetry_generators(5)
        assert (g0 * g0).is_identity and (g1 * g1).is_identity
        prod = g0 * g1
        assert prod * g0 == g0 * prod
        assert prod * g1 == g1 * prod

    def test_hermiticity_of_named_operators(self):
        n = 7
        ops = [m.string_order_geq(k, n) for k in range(1, n)]
        ops += [m.cluster_stabilizer(i, n) for i in range(1, n + 1)]
        for op in ops:
            assert op.is_hermitian and op.phase == 1
            mat = op.to_matrix()
            assert np.allclose(mat, mat.conj().T)


letters_st = st.text(alphabet="IXYZ", min_size=1, max_size=6)
phase_st = st.sampled_from([1, 1j, -1, -1j])


class TestProperties:
    @given(letters_st, letters_st, phase_st, phase_st)
    def test_multiplication_matches_matrices(self, a_text, b_text, pa, pb):
        n = max(len(a_text), len(b_text))
        a = PauliString.from_text_letters(a_text.ljust(n, "I"), pa)
        b = PauliString.from_text_letters(b_text.ljust(n, "I"), pb)
        assert np.allclose((a * b).to_matrix(), a.to_matrix() @ b.to_matrix())

    @given(letters_st, letters_st, letters_st)
    def test_associativity(self, a_text, b_text, c_text):
        n = max(len(a_text), len(b_text), len(c_text))
        a, b, c = (
            PauliString.from_text_letters(t.ljust(n, "I")) for t in (a_text, b_text, c_text)
        )
        assert (a * b) * c == a * (b * c)

    @given(letters_st, phase_st)
    def test_square_is_phase_squared_identity(self, text, phase):
        p = PauliString.from_text_letters(text, phase)
        sq = p * p
        assert sq.letters == bytes(len(text))
        assert abs(sq.phase - phase * phase) < 1e-12

    @given(letters_st, phase_st)
    def test_text_round_trip(self, text, phase):
        p = PauliString.from_text_letters(text, phase)
        assert PauliString.parse(str(p), len(text)) == p

    @settings(max_examples=25)
    @given(st.integers(0, 3), st.data())
    def test_apply_matches_matrix(self, phase_power, data):
        n = 5
        codes = bytes(data.draw(st.lists(st.integers(0, 3), min_size=n, max_size=n)))
        p = PauliString(n, codes, phase_power)
        rng = np.random.default_rng(0)
        vec = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        assert np.allclose(p.apply(vec), p.to_matrix() @ vec)


class TestText:
    def test_identity_text(self):
        assert str(m.PauliString.identity(4)) == "+I"
        assert m.PauliString.parse("+I", 4) == m.PauliString.identity(4)

    def test_parse_errors(self):
        with pytest.raises(ValueError):
            m.PauliString.parse("Z1 X2", 5)  # no sign
        with pytest.raises(IndexError):
            m.PauliString.parse("+Z9", 5)
        with pytest.raises(ValueError):
            m.PauliString.parse("+Z1 Z1", 5)

    def test_dense_promotion_guard(self):
        big = m.PauliString.identity(15)
        with pytest.raises(ValueError):
            big.to_matrix()


class TestChainSpec:
    def test_valid(self):
        spec = m.ChainSpec(11, 0.7)  # 0.7 < pi/4, inside the phase
        assert spec.n_sites == 11

    def test_alpha_out_of_phase(self):
        with pytest.raises(ValueError):
            m.ChainSpec(11, 0.8)
        with pytest.raises(ValueError):
            m.ChainSpec(11, -np.pi / 4)

    def test_even_length_rejected(self):
        with pytest.raises(ValueError):
            m.ChainSpec(10, 0.1)
