"""Small finite fields GF(p^n) with table arithmetic.

Elements are the integers ``0..q-1``; element ``e`` stands for the polynomial
whose base-p digits (least significant first) are its coefficients.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

# Fixed reduction polynomials, coefficients low->high, monic, leading term implicit.
# x^2+x+1 for GF(4) is mandated; the others are the lexicographically first
# irreducible polynomial, which is also what the search below finds.
_KNOWN_MODULI = {
    (2, 2): (1, 1),        # x^2 + x + 1
    (2, 3): (1, 1, 0),     # x^3 + x + 1
    (3, 2): (1, 0),        # x^2 + 1
}


def prime_power(q: int) -> tuple[int, int] | None:
    """Return ``(p, n)`` with ``q == p**n`` and p prime, else None."""
    if q < 2:
        return None
    p = next(d for d in itertools.count(2) if q % d == 0)
    n = 0
    while q % p == 0:
        q //= p
        n += 1
    return (p, n) if q == 1 else None


def _irreducible(coeffs, p, n):
    # brute-force irreducibility: no monic factor of degree 1..n//2
    def polymod(a, b):
        a = list(a)
        while len(a) >= len(b):
            if a[-1]:
                f = a[-1]
                shift = len(a) - len(b)
                for i, c in enumerate(b):
                    a[shift + i] = (a[shift + i] - f * c) % p
            a.pop()
        return a

    full = list(coeffs) + [1]
    for deg in range(1, n // 2 + 1):
        for low in itertools.product(range(p), repeat=deg):
            divisor = list(low) + [1]
            if not any(polymod(full, divisor)):
                return False
    return True


def find_modulus(p: int, n: int) -> tuple[int, ...]:
    if (p, n) in _KNOWN_MODULI:
        return _KNOWN_MODULI[(p, n)]
    for low in itertools.product(range(p), repeat=n):
        # lexicographic on the high coefficients first
        coeffs = tuple(reversed(low))
        if coeffs[0] == 0:
            continue
        if _irreducible(coeffs, p, n):
            return coeffs
    raise ValueError(f"no irreducible polynomial of degree {n} over GF({p})")  # unreachable


class GF:
    """Finite field of order ``q``; arithmetic via precomputed tables."""

    def __init__(self, q: int):
        pn = prime_power(q)
        if pn is None:
            raise ValueError(f"{q} is not a prime power")
        self.q = q
        self.p, self.n = pn
        self.modulus = find_modulus(self.p, self.n) if self.n > 1 else ()
        digits = np.array(
            [[(e // self.p**i) % self.p for i in range(self.n)] for e in range(q)], dtype=np.int64
        )
        weights = self.p ** np.arange(self.n)
        self.add_table = ((digits[:, None, :] + digits[None, :, :]) % self.p) @ weights
        self.mul_table = np.array(
            [[self._mul_poly(digits[a], digits[b]) @ weights for b in range(q)] for a in range(q)],
            dtype=np.int64,
        )

    def _mul_poly(self, a, b):
        p, n = self.p, self.n
        prod = np.zeros(2 * n - 1, dtype=np.int64)
        for i in range(n):
            prod[i : i + n] += a[i] * b
        prod %= p
        # reduce x^k for k >= n using x^n = -(modulus low terms)
        for k in range(2 * n - 2, n - 1, -1):
            f = prod[k]
            if f:
                prod[k] = 0
                for i, c in enumerate(self.modulus):
                    prod[k - n + i] = (prod[k - n + i] - f * c) % p
        return prod[:n]

    def add(self, a: int, b: int) -> int:
        return int(self.add_table[a, b])

    def mul(self, a: int, b: int) -> int:
        return int(self.mul_table[a, b])

    def __repr__(self):
        return f"GF({self.q})"


@lru_cache(maxsize=None)
def field(q: int) -> GF:
    return GF(q)
