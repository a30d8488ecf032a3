import itertools

import pytest

from taguchi.galois import GF, find_modulus, prime_power

QS = [2, 3, 4, 5, 7, 8, 9, 16, 25]


def test_prime_power():
    assert prime_power(4) == (2, 2)
    assert prime_power(9) == (3, 2)
    assert prime_power(7) == (7, 1)
    for q in (1, 6, 10, 12, 0):
        assert prime_power(q) is None


def test_gf4_uses_x2_x_1():
    assert find_modulus(2, 2) == (1, 1)
    gf = GF(4)
    # x * x = x + 1  (elements: 2 = x, 3 = x + 1)
    assert gf.mul(2, 2) == 3
    assert gf.mul(2, 3) == 1


@pytest.mark.parametrize("q", QS)
def test_field_axioms(q):
    gf = GF(q)
    els = range(q)
    for a in els:
        assert gf.add(a, 0) == a and gf.mul(a, 1) == a and gf.mul(a, 0) == 0
        if a:
            assert sum(gf.mul(a, b) == 1 for b in els) == 1
    for a, b in itertools.product(els, els):
        assert gf.add(a, b) == gf.add(b, a)
        assert gf.mul(a, b) == gf.mul(b, a)
    if q <= 9:
        for a, b, c in itertools.product(els, els, els):
            assert gf.mul(a, gf.add(b, c)) == gf.add(gf.mul(a, b), gf.mul(a, c))
            assert gf.mul(gf.mul(a, b), c) == gf.mul(a, gf.mul(b, c))


def test_not_prime_power():
    with pytest.raises(ValueError):
        GF(6)
