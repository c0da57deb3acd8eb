"""Symplectic Pauli arithmetic against an independent dense-matrix oracle."""

import numpy as np
import pytest

from nsslab.config import ResourceLimitError
from nsslab.pauli import (
    PauliOp,
    apply_to_vector,
    commutes,
    format_pauli,
    identity,
    multiply,
    parse_pauli,
    single,
    to_dense,
    weight,
)

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _dense_oracle(op: PauliOp) -> np.ndarray:
    """i^phase * prod_q X^{x_q} Z^{z_q} built by an explicit kron chain.

    Qubit 0 is the least-significant index bit, so the chain runs from the
    highest qubit down.
    """
    out = np.array([[1.0 + 0j]])
    for q in range(op.n - 1, -1, -1):
        site = _I2
        if op.z_bits >> q & 1:
            site = _Z @ site
        if op.x_bits >> q & 1:
            site = _X @ site
        out = np.kron(out, site)
    return 1j**op.phase * out


def _random_op(rng, n: int) -> PauliOp:
    return PauliOp(n, int(rng.integers(0, 1 << n)), int(rng.integers(0, 1 << n)),
                   int(rng.integers(0, 4)))


def test_single_site_matrices_match_their_definitions():
    assert np.array_equal(to_dense(single(1, 0, "X")), _X)
    assert np.array_equal(to_dense(single(1, 0, "Y")), _Y)
    assert np.array_equal(to_dense(single(1, 0, "Z")), _Z)
    assert np.array_equal(to_dense(identity(2)), np.eye(4))


def test_single_rejects_bad_arguments():
    with pytest.raises(ValueError):
        single(2, 0, "W")
    with pytest.raises(ValueError):
        single(2, 5, "X")


def test_constructor_validates_fields():
    with pytest.raises(ValueError):
        PauliOp(0, 0, 0)
    with pytest.raises(ValueError):
        PauliOp(2, 1 << 2, 0)
    with pytest.raises(ValueError):
        PauliOp(2, 0, -1)
    assert PauliOp(2, 0, 0, 4).phase == 0
    assert PauliOp(2, 1, 0, -1).phase == 3


def test_multiply_matches_dense_oracle_randomized():
    rng = np.random.default_rng(20240817)
    for n in (1, 2, 3, 4):
        for _ in range(40):
            a, b = _random_op(rng, n), _random_op(rng, n)
            got = to_dense(multiply(a, b))
            want = _dense_oracle(a) @ _dense_oracle(b)
            assert np.allclose(got, want), (a, b)


def test_multiply_is_associative_and_unital():
    rng = np.random.default_rng(7)
    for _ in range(50):
        a, b, c = (_random_op(rng, 3) for _ in range(3))
        assert multiply(multiply(a, b), c) == multiply(a, multiply(b, c))
        assert multiply(a, identity(3)) == a
        assert multiply(identity(3), a) == a


def test_adjoint_matches_dense_and_squares_to_identity():
    rng = np.random.default_rng(99)
    for _ in range(50):
        a = _random_op(rng, 3)
        assert np.allclose(to_dense(a.adjoint()), _dense_oracle(a).conj().T)
        assert multiply(a.adjoint(), a) == identity(3)


def test_commutes_matches_dense_commutator():
    rng = np.random.default_rng(5)
    for _ in range(60):
        a, b = _random_op(rng, 3), _random_op(rng, 3)
        da, db = _dense_oracle(a), _dense_oracle(b)
        dense_commute = np.allclose(da @ db, db @ da)
        assert commutes(a, b) == dense_commute


def test_weight_counts_non_identity_sites():
    assert weight(identity(5)) == 0
    assert weight(single(5, 2, "Y")) == 1
    op = PauliOp(4, 0b0110, 0b0011)  # sites: 0 Z, 1 Y, 2 X
    assert weight(op) == 3


def test_to_dense_matches_oracle_and_respects_cap():
    rng = np.random.default_rng(11)
    for n in (1, 2, 3):
        for _ in range(20):
            a = _random_op(rng, n)
            assert np.allclose(to_dense(a), _dense_oracle(a))
    with pytest.raises(ResourceLimitError):
        to_dense(identity(13))


def test_format_parse_round_trip():
    rng = np.random.default_rng(3)
    for _ in range(200):
        a = _random_op(rng, 4)
        assert parse_pauli(format_pauli(a)) == a


def test_format_uses_y_for_overlapping_bits():
    op = multiply(single(2, 0, "X"), single(2, 0, "Z"))  # X Z = -i Y
    assert format_pauli(op) == "-iYI"
    assert format_pauli(single(3, 1, "Z")) == "+IZI"


def test_parse_rejects_malformed_strings():
    for bad in ("", "+", "XQ", "+iW", "*XX", "+X I"):
        with pytest.raises(ValueError):
            parse_pauli(bad)


def test_apply_to_vector_matches_dense_matmul():
    rng = np.random.default_rng(42)
    for _ in range(30):
        a = _random_op(rng, 3)
        v = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        assert np.allclose(apply_to_vector(a, v), _dense_oracle(a) @ v)
    # column stacks
    a = _random_op(rng, 3)
    V = rng.standard_normal((8, 5)) + 1j * rng.standard_normal((8, 5))
    assert np.allclose(apply_to_vector(a, V), _dense_oracle(a) @ V)


def test_apply_to_vector_rejects_wrong_length():
    with pytest.raises(ValueError):
        apply_to_vector(identity(3), np.ones(7))


def test_support_mask_covers_acted_qubits():
    op = PauliOp(5, 0b10010, 0b00110)
    assert op.support == 0b10110


def test_square_has_zero_bit_parts():
    rng = np.random.default_rng(17)
    for _ in range(50):
        a = _random_op(rng, 4)
        sq = multiply(a, a)
        assert sq.x_bits == 0 and sq.z_bits == 0


def test_crossing_parities_add_under_multiplication():
    rng = np.random.default_rng(23)
    for _ in range(60):
        a, b, c = (_random_op(rng, 4) for _ in range(3))
        lhs = commutes(multiply(a, b), c)
        rhs = not (commutes(a, c) ^ commutes(b, c))
        assert lhs == rhs
