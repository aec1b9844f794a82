"""Canonical subspaces of GF(q)^v, Gaussian binomials, and enumeration.

A subspace is stored as its reduced row-echelon basis with strictly
increasing pivot columns, so equality and hashing are structural.  Rows are
packed base-q ints (coordinate 0 in the least significant digit); over GF(2)
a row is a plain bitmask and elimination is word XOR.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from .fields import field_for_order, pack_coords, unpack_coords


def gaussian_binomial(v: int, k: int, q: int) -> int:
    """Number of k-subspaces of GF(q)^v, as an exact integer."""
    if v < 0 or k < 0:
        raise ValueError("negative arguments")
    if q < 2:
        raise ValueError("q must be at least 2")
    if k > v:
        return 0
    num = 1
    den = 1
    for i in range(k):
        num *= q ** (v - i) - 1
        den *= q ** (k - i) - 1
    assert num % den == 0
    return num // den


class VectorOps:
    """Row arithmetic for length-v vectors over GF(q), packed as ints."""

    def __init__(self, q: int, v: int):
        self.q = q
        self.v = v
        self.field = field_for_order(q)
        self.qpow = [q ** j for j in range(v + 1)]
        self.char2 = self.field.p == 2

    def add(self, a: int, b: int) -> int:
        if self.char2:
            return a ^ b
        f, q = self.field, self.q
        out, mult = 0, 1
        while a or b:
            a, ca = divmod(a, q)
            b, cb = divmod(b, q)
            out += f.add(ca, cb) * mult
            mult *= q
        return out

    def smul(self, c: int, a: int) -> int:
        if c == 0:
            return 0
        if c == 1:
            return a
        f, q = self.field, self.q
        out, mult = 0, 1
        while a:
            a, ca = divmod(a, q)
            if ca:
                out += f.mul(c, ca) * mult
            mult *= q
        return out

    def sub_scaled(self, a: int, c: int, b: int) -> int:
        """a - c*b."""
        if self.char2:
            return a ^ self.smul(c, b)
        return self.add(a, self.smul(self.field.neg(c), b))

    def digit(self, a: int, j: int) -> int:
        return (a // self.qpow[j]) % self.q

    def pivot(self, a: int) -> int:
        """Lowest nonzero coordinate position of a nonzero row."""
        if self.q == 2:
            return (a & -a).bit_length() - 1
        j = 0
        while a % self.q == 0:
            a //= self.q
            j += 1
        return j

    def rref(self, rows: Iterable[int]) -> tuple[int, ...]:
        """Reduced row-echelon basis, rows sorted by increasing pivot."""
        if self.q == 2:
            return _rref2(rows)
        f = self.field
        basis: list[int] = []
        pivots: list[int] = []
        for r in rows:
            for p, b in zip(pivots, basis):
                c = self.digit(r, p)
                if c:
                    r = self.sub_scaled(r, c, b)
            if r == 0:
                continue
            p = self.pivot(r)
            c = self.digit(r, p)
            if c != 1:
                r = self.smul(f.inv(c), r)
            for i in range(len(basis)):
                c = self.digit(basis[i], p)
                if c:
                    basis[i] = self.sub_scaled(basis[i], c, r)
            at = 0
            while at < len(pivots) and pivots[at] < p:
                at += 1
            pivots.insert(at, p)
            basis.insert(at, r)
        return tuple(basis)

    def rank(self, rows: Iterable[int]) -> int:
        return len(self.rref(rows))

    def vector_from_coords(self, coords: Sequence[int]) -> int:
        return pack_coords(coords, self.q)

    def coords(self, a: int) -> tuple[int, ...]:
        return unpack_coords(a, self.q, self.v)


def _rref2(rows: Iterable[int]) -> tuple[int, ...]:
    basis: list[int] = []
    for r in rows:
        for b in basis:
            if r & (b & -b):
                r ^= b
        if not r:
            continue
        low = r & -r
        for i in range(len(basis)):
            if basis[i] & low:
                basis[i] ^= r
        at = 0
        while at < len(basis) and (basis[at] & -basis[at]) < low:
            at += 1
        basis.insert(at, r)
    return tuple(basis)


@lru_cache(maxsize=None)
def vector_ops(q: int, v: int) -> VectorOps:
    return VectorOps(q, v)


@dataclass(frozen=True)
class Subspace:
    """A subspace of GF(q)^v in canonical reduced-echelon basis form."""

    q: int
    v: int
    rows: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.rows)

    @staticmethod
    def span(q: int, v: int, rows: Iterable[int]) -> "Subspace":
        return Subspace(q, v, vector_ops(q, v).rref(rows))

    @staticmethod
    def zero(q: int, v: int) -> "Subspace":
        return Subspace(q, v, ())

    @staticmethod
    def full(q: int, v: int) -> "Subspace":
        ops = vector_ops(q, v)
        return Subspace(q, v, tuple(ops.qpow[j] for j in range(v)))

    def basis_lists(self) -> list[list[int]]:
        return [list(unpack_coords(r, self.q, self.v)) for r in self.rows]

    def contains_vector(self, x: int) -> bool:
        ops = vector_ops(self.q, self.v)
        for b in self.rows:
            c = ops.digit(x, ops.pivot(b))
            if c:
                x = ops.sub_scaled(x, c, b)
        return x == 0

    def contains(self, other: "Subspace") -> bool:
        return all(self.contains_vector(r) for r in other.rows)

    def vectors(self) -> Iterator[int]:
        """All q^dim vectors of the subspace, deterministic order."""
        ops = vector_ops(self.q, self.v)
        for coeffs in itertools.product(range(self.q), repeat=self.dim):
            x = 0
            for c, b in zip(coeffs, self.rows):
                if c:
                    x = ops.add(x, ops.smul(c, b))
            yield x

    def sort_key(self) -> tuple:
        return (self.dim, self.rows)

    def __repr__(self) -> str:
        return f"Subspace(q={self.q}, v={self.v}, rows={self.rows})"


def canonicalize(vectors: Sequence[Sequence[int]], q: int,
                 v: int | None = None) -> Subspace:
    """Canonical subspace spanned by coordinate vectors over GF(q)."""
    vectors = list(vectors)
    if not vectors:
        if v is None:
            raise ValueError("empty input needs an explicit ambient dimension")
        return Subspace.zero(q, v)
    if v is None:
        v = len(vectors[0])
    if any(len(vec) != v for vec in vectors):
        raise ValueError("vectors must share the ambient dimension")
    if any(not 0 <= c < q for vec in vectors for c in vec):
        raise ValueError("coordinates must lie in [0, q)")
    return Subspace.span(q, v, (pack_coords(vec, q) for vec in vectors))


def iter_rref_bases(v: int, d: int, q: int) -> Iterator[tuple[int, ...]]:
    """All canonical d-subspace bases of GF(q)^v, packed rows.

    Deterministic order: pivot-column sets lexicographically, then free
    entries per row in little-endian field-element order.
    """
    if not 0 <= d <= v:
        raise ValueError("need 0 <= d <= v")
    if d == 0:
        yield ()
        return
    qpow = [q ** j for j in range(v)]
    for pivots in itertools.combinations(range(v), d):
        pivot_set = set(pivots)
        per_row: list[list[int]] = []
        for i, p in enumerate(pivots):
            free = [j for j in range(p + 1, v) if j not in pivot_set]
            completions = []
            for values in itertools.product(range(q), repeat=len(free)):
                row = qpow[p]
                for j, c in zip(free, values):
                    row += c * qpow[j]
                completions.append(row)
            per_row.append(completions)
        yield from itertools.product(*per_row)


def enumerate_subspaces(v: int, d: int, q: int) -> Iterator[Subspace]:
    """Each d-subspace of GF(q)^v exactly once, deterministic order."""
    for rows in iter_rref_bases(v, d, q):
        yield Subspace(q, v, rows)


def complement_positions(U: Subspace) -> list[int]:
    ops = vector_ops(U.q, U.v)
    pivots = {ops.pivot(r) for r in U.rows}
    return [j for j in range(U.v) if j not in pivots]


def lift_row(row: int, positions: Sequence[int], q: int) -> int:
    """Spread the digits of a quotient row onto the given coordinate positions."""
    if q == 2:
        out = 0
        while row:
            low = row & -row
            out |= 1 << positions[low.bit_length() - 1]
            row ^= low
        return out
    out = 0
    t = 0
    while row:
        row, c = divmod(row, q)
        if c:
            out += c * q ** positions[t]
        t += 1
    return out


def iter_superspace_bases(U: Subspace, k: int) -> Iterator[tuple[int, ...]]:
    """Bases (not canonicalized) of the k-superspaces of U, one per superspace."""
    d = U.dim
    if not d <= k <= U.v:
        raise ValueError("need dim(U) <= k <= v")
    positions = complement_positions(U)
    for rows in iter_rref_bases(U.v - d, k - d, U.q):
        yield U.rows + tuple(lift_row(r, positions, U.q) for r in rows)


def superspaces(U: Subspace, k: int) -> Iterator[Subspace]:
    """Each k-subspace containing U exactly once, deterministic order."""
    for rows in iter_superspace_bases(U, k):
        yield Subspace.span(U.q, U.v, rows)


def intersection_dim(A: Subspace, B: Subspace) -> int:
    """dim(A meet B) via rank of the stacked bases."""
    if A.v != B.v or A.q != B.q:
        raise ValueError("subspaces live in different ambient spaces")
    ops = vector_ops(A.q, A.v)
    return A.dim + B.dim - ops.rank(A.rows + B.rows)
