import itertools
from random import Random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgdd.subspaces import (Subspace, canonicalize, enumerate_subspaces,
                            gaussian_binomial, intersection_dim,
                            iter_rref_bases, superspaces, vector_ops)


def brute_count_subspaces(v, d, q):
    """Independent oracle: count d-subspaces by collecting row spans."""
    ops = vector_ops(q, v)
    seen = set()
    vectors = range(q ** v)
    for combo in itertools.combinations(vectors, d):
        rows = ops.rref(combo)
        if len(rows) == d:
            seen.add(rows)
    return len(seen)


def test_gaussian_binomial_trivial():
    assert gaussian_binomial(5, 0, 2) == 1
    assert gaussian_binomial(3, 5, 2) == 0
    with pytest.raises(ValueError):
        gaussian_binomial(-1, 0, 2)
    with pytest.raises(ValueError):
        gaussian_binomial(3, -1, 2)


def test_gaussian_binomial_vs_brute_force():
    assert gaussian_binomial(3, 2, 2) == brute_count_subspaces(3, 2, 2) == 7
    assert gaussian_binomial(3, 2, 3) == brute_count_subspaces(3, 2, 3)
    assert gaussian_binomial(4, 2, 2) == brute_count_subspaces(4, 2, 2) == 35


def test_gaussian_binomial_large_vs_enumeration():
    assert gaussian_binomial(6, 3, 2) == 1395
    assert sum(1 for _ in iter_rref_bases(6, 3, 2)) == 1395


@pytest.mark.parametrize("q", [2, 3, 4, 5])
def test_pascal_recurrence_and_symmetry(q):
    for v in range(2, 13):
        for k in range(v + 1):
            assert gaussian_binomial(v, k, q) == gaussian_binomial(v, v - k, q)
            if 1 <= k:
                assert gaussian_binomial(v, k, q) == (
                    gaussian_binomial(v - 1, k - 1, q)
                    + q ** k * gaussian_binomial(v - 1, k, q))


def test_canonicalize_examples():
    s = canonicalize([(1, 1, 0), (0, 1, 1)], 2)
    assert s.basis_lists() == [[1, 0, 1], [0, 1, 1]]
    t = canonicalize([(1, 0, 0)], 2)
    assert t.basis_lists() == [[1, 0, 0]]
    u = canonicalize([(1, 1), (1, 1)], 2)
    assert u.dim == 1 and u.basis_lists() == [[1, 1]]


def test_canonicalize_empty_needs_ambient():
    with pytest.raises(ValueError):
        canonicalize([], 2)
    z = canonicalize([], 2, v=4)
    assert z.dim == 0


def test_canonicalize_rejects_out_of_range():
    with pytest.raises(ValueError):
        canonicalize([(2, 0)], 2)
    with pytest.raises(ValueError):
        canonicalize([(1, 0), (1,)], 2)


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_canonical_uniqueness_under_change_of_basis(data):
    q = data.draw(st.sampled_from([2, 3]))
    v = data.draw(st.integers(2, 5))
    d = data.draw(st.integers(1, v))
    rng = Random(data.draw(st.integers(0, 10 ** 6)))
    ops = vector_ops(q, v)
    rows = None
    while rows is None or len(rows) != d:
        rows = ops.rref([rng.randrange(q ** v) for _ in range(d)])
    sub = Subspace(q, v, rows)
    # random invertible recombination of the basis
    mixed = list(rows)
    for _ in range(6):
        i, j = rng.randrange(d), rng.randrange(d)
        if i != j:
            c = rng.randrange(1, q)
            mixed[i] = ops.add(mixed[i], ops.smul(c, mixed[j]))
    assert Subspace.span(q, v, mixed) == sub


def test_enumerate_counts_and_uniqueness():
    subs = list(enumerate_subspaces(4, 2, 2))
    assert len(subs) == 35
    assert len(set(subs)) == 35
    zero = list(enumerate_subspaces(4, 0, 2))
    assert zero == [Subspace(2, 4, ())]


def test_enumerate_deterministic():
    a = list(iter_rref_bases(5, 2, 2))
    b = list(iter_rref_bases(5, 2, 2))
    assert a == b


@pytest.mark.parametrize("q,v,d", [(2, 5, 2), (3, 4, 2), (2, 6, 3)])
def test_enumerate_total(q, v, d):
    assert sum(1 for _ in iter_rref_bases(v, d, q)) == gaussian_binomial(v, d, q)


def test_superspaces_count_and_filter():
    U = canonicalize([(1, 0, 0, 0, 0, 0), (0, 1, 0, 0, 0, 0)], 2)
    sup = list(superspaces(U, 3))
    assert len(sup) == gaussian_binomial(4, 1, 2) == 15
    assert len(set(sup)) == 15
    by_filter = [s for s in enumerate_subspaces(6, 3, 2) if s.contains(U)]
    assert sorted(s.rows for s in sup) == sorted(s.rows for s in by_filter)


def test_superspaces_trivial():
    U = Subspace.full(2, 4)
    assert list(superspaces(U, 4)) == [U]


def test_superspaces_large_count():
    U = canonicalize([[1] + [0] * 13, [0, 1] + [0] * 12], 2)
    assert sum(1 for _ in superspaces(U, 3)) == gaussian_binomial(12, 1, 2) == 4095


def test_intersection_dim():
    A = canonicalize([(1, 0, 0), (0, 1, 0)], 2)
    B = canonicalize([(0, 1, 0), (0, 0, 1)], 2)
    assert intersection_dim(A, A) == 2
    assert intersection_dim(A, B) == 1
    C = canonicalize([(0, 0, 1)], 2)
    D = canonicalize([(1, 0, 0)], 2)
    assert intersection_dim(C, D) == 0
    with pytest.raises(ValueError):
        intersection_dim(A, canonicalize([(1, 0)], 2))


def test_contains_vector_gf3():
    s = canonicalize([(1, 0, 2), (0, 1, 1)], 3)
    ops = vector_ops(3, 3)
    for coeffs in itertools.product(range(3), repeat=2):
        x = 0
        for c, row in zip(coeffs, s.rows):
            x = ops.add(x, ops.smul(c, row))
        assert s.contains_vector(x)
    assert s.dim == 2


def test_vectors_iteration():
    s = canonicalize([(1, 0, 0), (0, 1, 0)], 2)
    assert sorted(s.vectors()) == [0, 1, 2, 3]
