import itertools

import pytest
from hypothesis import given, strategies as st

from relaycode.errors import ZeroInverse
from relaycode.field import DEFAULT_POLYNOMIALS, FieldSpec, get_field, gf_add, gf_inv, gf_mul, is_irreducible

GF16 = get_field(4)


def reference_mul(a, b, poly, m):
    """Shift-and-add multiply with reduction after every shift."""
    result = 0
    for _ in range(m):
        if b & 1:
            result ^= a
        b >>= 1
        a <<= 1
        if a >> m:
            a ^= poly
    return result


def test_add_examples():
    assert gf_add(0x5, 0x5) == 0x0
    assert gf_add(0xA, 0x0) == 0xA
    assert gf_add(0x3, 0x5) == 0x6


def test_mul_examples():
    # x * x^3 = x^4 = x + 1 modulo x^4 + x + 1
    assert gf_mul(0x2, 0x8) == 0x3
    for a in range(16):
        assert gf_mul(a, 0x1) == a
        assert gf_mul(a, 0x0) == 0


def test_inv_examples():
    assert gf_inv(0x1) == 0x1
    assert gf_inv(0x2) == 0x9
    with pytest.raises(ZeroInverse):
        gf_inv(0x0)


def test_inverse_of_two_by_search():
    matches = [b for b in range(1, 16) if reference_mul(0x2, b, 0x13, 4) == 1]
    assert matches == [0x9]


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5, 8, 11, 16])
def test_table_mul_matches_reference(m):
    field = get_field(m)
    import random

    rng = random.Random(m)
    pairs = [(rng.randrange(field.order), rng.randrange(field.order)) for _ in range(2000)]
    if field.order <= 16:
        pairs = list(itertools.product(range(field.order), repeat=2))
    for a, b in pairs:
        assert field.mul(a, b) == reference_mul(a, b, field.reduction_polynomial, m)


def test_field_axioms_exhaustive_gf16():
    elems = range(16)
    for a, b in itertools.product(elems, repeat=2):
        assert GF16.mul(a, b) == GF16.mul(b, a)
        assert GF16.add(a, b) == GF16.add(b, a)
    for a, b, c in itertools.product(elems, repeat=3):
        assert GF16.mul(GF16.mul(a, b), c) == GF16.mul(a, GF16.mul(b, c))
        assert GF16.add(GF16.add(a, b), c) == GF16.add(a, GF16.add(b, c))
        assert GF16.mul(a, GF16.add(b, c)) == GF16.add(GF16.mul(a, b), GF16.mul(a, c))


def test_every_nonzero_element_inverts():
    for m in (2, 4, 8, 12):
        field = get_field(m)
        for a in range(1, field.order):
            assert field.mul(a, field.inv(a)) == 1


@given(st.integers(0, 15), st.integers(0, 15))
def test_add_is_involution(x, y):
    assert gf_add(gf_add(x, y), y) == x


def test_irreducible_but_not_primitive_polynomial():
    # x^4+x^3+x^2+x+1 is irreducible but x has order 5, so a generator search is needed.
    field = FieldSpec(4, 0x1F)
    assert field.generator != 2
    for a, b in itertools.product(range(16), repeat=2):
        assert field.mul(a, b) == reference_mul(a, b, 0x1F, 4)


def test_default_polynomials_are_irreducible():
    for m, poly in DEFAULT_POLYNOMIALS.items():
        assert is_irreducible(poly), m


@pytest.mark.parametrize("m, poly", [(4, 0x15), (4, 0x11), (3, 0x13), (0, 0x1), (17, None)])
def test_rejects_bad_field_definitions(m, poly):
    with pytest.raises(ValueError):
        FieldSpec(m, poly)


def test_out_of_range_operands_rejected():
    with pytest.raises(ValueError):
        gf_mul(16, 1)
    with pytest.raises(ValueError):
        gf_add(-1, 1)
