"""Binary BCH codes with bounded-distance decoding.

Built from first principles: GF(2^m) log/antilog tables, generator
polynomial from cyclotomic cosets, systematic encoding, and syndrome
decoding via Berlekamp-Massey plus Chien search. Decoding is bounded
distance: error patterns of weight at most t are always corrected,
heavier patterns yield a decode failure or a miscorrection.
"""
from __future__ import annotations

import numpy as np

__all__ = ["GF2m", "BchCode"]

# Primitive polynomials (bit i = coefficient of x^i).
_PRIMITIVE = {
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10001001,
    8: 0b100011101,
    9: 0b1000010001,
    10: 0b10000001001,
}


class GF2m:
    """Finite field GF(2^m) with table-based arithmetic."""

    def __init__(self, degree: int, primitive_poly: int | None = None):
        if primitive_poly is None:
            try:
                primitive_poly = _PRIMITIVE[degree]
            except KeyError:
                raise ValueError(f"no built-in primitive polynomial for degree {degree}")
        self.degree = degree
        self.order = (1 << degree) - 1  # multiplicative group order
        exp = np.zeros(2 * self.order, dtype=np.int64)
        log = np.full(self.order + 1, -1, dtype=np.int64)
        x = 1
        for i in range(self.order):
            if log[x] >= 0:
                raise ValueError("polynomial is not primitive (early cycle)")
            exp[i] = x
            log[x] = i
            x <<= 1
            if x > self.order:
                x ^= primitive_poly
        if x != 1:
            raise ValueError("polynomial is not primitive (cycle does not close)")
        exp[self.order:] = exp[:self.order]
        self.exp = exp
        self.log = log

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return int(self.exp[self.log[a] + self.log[b]])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of 0 in GF(2^m)")
        return int(self.exp[self.order - self.log[a]])

    def pow_alpha(self, e: int) -> int:
        return int(self.exp[e % self.order])


def _cyclotomic_coset(s: int, n: int) -> frozenset:
    coset, c = set(), s % n
    while c not in coset:
        coset.add(c)
        c = (2 * c) % n
    return frozenset(coset)


def _poly_mul_gf2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros(len(a) + len(b) - 1, dtype=np.uint8)
    for i, coef in enumerate(a):
        if coef:
            out[i:i + len(b)] ^= b
    return out


class BchCode:
    """Systematic binary BCH code over GF(2^gf_degree) correcting t errors.

    Block bit order is most significant first: bit index 0 is the
    coefficient of x^(n-1). Codewords carry the k message bits first,
    parity last.
    """

    def __init__(self, gf_degree: int = 7, t: int = 10,
                 primitive_poly: int | None = None):
        if t < 1:
            raise ValueError("t must be >= 1")
        self.gf = GF2m(gf_degree, primitive_poly)
        self.n = self.gf.order
        self.t = t
        self.generator = self._generator_poly()
        self.k = self.n - (len(self.generator) - 1)
        if self.k < 1:
            raise ValueError(f"no message bits left for t={t} at n={self.n}")
        # MSB-first generator for synthetic division.
        self._gen_msb = self.generator[::-1].copy()

    def _generator_poly(self) -> np.ndarray:
        """LCM of the minimal polynomials of alpha^1 .. alpha^2t.

        Returned with index = degree; coefficients are 0/1.
        """
        gf = self.gf
        seen, gen = set(), np.array([1], dtype=np.uint8)
        for s in range(1, 2 * self.t + 1):
            coset = _cyclotomic_coset(s, self.n)
            if coset in seen:
                continue
            seen.add(coset)
            # Minimal polynomial: product of (x + alpha^c) over the coset,
            # computed in GF(2^m); the result has binary coefficients.
            poly = [1]
            for c in sorted(coset):
                root = gf.pow_alpha(c)
                nxt = [0] * (len(poly) + 1)
                for d, coef in enumerate(poly):
                    nxt[d + 1] ^= coef
                    nxt[d] ^= gf.mul(coef, root)
                poly = nxt
            if any(coef not in (0, 1) for coef in poly):
                raise AssertionError("minimal polynomial has non-binary coefficients")
            gen = _poly_mul_gf2(gen, np.array(poly, dtype=np.uint8))
        return gen

    @property
    def parity_bits(self) -> int:
        return self.n - self.k

    def encode(self, message: np.ndarray) -> np.ndarray:
        """Systematic codeword (n,) for a (k,) message bit vector."""
        msg = np.asarray(message, dtype=np.uint8).ravel()
        if msg.shape != (self.k,):
            raise ValueError(f"message must have length {self.k}, got {msg.shape}")
        work = np.concatenate([msg, np.zeros(self.parity_bits, dtype=np.uint8)])
        deg = self.parity_bits
        for i in range(self.k):
            if work[i]:
                work[i:i + deg + 1] ^= self._gen_msb
        codeword = np.concatenate([msg, work[self.k:]])
        return codeword

    def random_codeword(self, rng: np.random.Generator) -> np.ndarray:
        return self.encode(rng.integers(0, 2, size=self.k).astype(np.uint8))

    def message(self, codeword: np.ndarray) -> np.ndarray:
        return np.asarray(codeword, dtype=np.uint8)[:self.k].copy()

    def _syndromes(self, word: np.ndarray) -> list[int]:
        positions = np.nonzero(word)[0]
        degrees = self.n - 1 - positions
        out = []
        for i in range(1, 2 * self.t + 1):
            if degrees.size == 0:
                out.append(0)
                continue
            terms = self.gf.exp[(i * degrees) % self.gf.order]
            out.append(int(np.bitwise_xor.reduce(terms)))
        return out

    def _error_locator(self, synd: list[int]) -> tuple[list[int], int] | None:
        """Berlekamp-Massey: connection polynomial and its degree L."""
        gf = self.gf
        size = 2 * self.t + 1
        c = [0] * size
        b = [0] * size
        c[0] = b[0] = 1
        length, m, disc_b = 0, 1, 1
        for i in range(2 * self.t):
            d = synd[i]
            for j in range(1, length + 1):
                d ^= gf.mul(c[j], synd[i - j])
            if d == 0:
                m += 1
                continue
            coef = gf.mul(d, gf.inv(disc_b))
            if 2 * length <= i:
                prev = c.copy()
                for j in range(size - m):
                    c[j + m] ^= gf.mul(coef, b[j])
                length, b, disc_b, m = i + 1 - length, prev, d, 1
            else:
                for j in range(size - m):
                    c[j + m] ^= gf.mul(coef, b[j])
                m += 1
        if length > self.t or c[length] == 0:
            return None
        return c[:length + 1], length

    def _error_positions(self, locator: list[int]) -> np.ndarray | None:
        """Chien search: bit indices whose flips satisfy the locator."""
        gf = self.gf
        ell = np.arange(self.n)
        val = np.zeros(self.n, dtype=np.int64)
        for d, coef in enumerate(locator):
            if coef:
                val ^= gf.exp[(gf.log[coef] + d * ell) % gf.order]
        roots = np.nonzero(val == 0)[0]
        if roots.size != len(locator) - 1:
            return None
        error_degrees = (self.n - roots) % self.n
        return self.n - 1 - error_degrees

    def decode(self, received: np.ndarray) -> np.ndarray | None:
        """Correct up to t errors; None when no codeword lies in radius t."""
        word = np.asarray(received, dtype=np.uint8).ravel()
        if word.shape != (self.n,):
            raise ValueError(f"received word must have length {self.n}")
        synd = self._syndromes(word)
        if not any(synd):
            return word.copy()
        found = self._error_locator(synd)
        if found is None:
            return None
        locator, _ = found
        positions = self._error_positions(locator)
        if positions is None:
            return None
        corrected = word.copy()
        corrected[positions] ^= 1
        if any(self._syndromes(corrected)):
            return None
        return corrected

    def __repr__(self):
        return f"BchCode(n={self.n}, k={self.k}, t={self.t})"
