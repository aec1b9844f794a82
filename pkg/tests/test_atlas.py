from collections import Counter
from random import Random

import pytest

from qgdd.atlas import (GlAtlas, OrbitLabel, SpanClass, UnclassifiedOrbitError,
                        gl_atlas, gl_order)
from qgdd.subspaces import Subspace, gaussian_binomial, iter_rref_bases, vector_ops


@pytest.fixture(scope="module")
def at23():
    return gl_atlas(2, 3, 2)


def test_gl_order():
    assert gl_order(1, 5) == 4
    assert gl_order(2, 8) == 3528
    assert gl_order(3, 8) == 115379712


def test_classify_examples(at23):
    t = at23.tower
    w = t.ext.w
    w2 = t.mid.mul(w, w)
    line3 = Subspace.span(2, 6, [t.flatten_packed((1, 0)),
                                 t.flatten_packed((w, 0)),
                                 t.flatten_packed((w2, 0))])
    assert at23.classify(line3) == SpanClass(3, 1)
    mixed = Subspace.span(2, 6, [t.flatten_packed((1, 0)),
                                 t.flatten_packed((0, 1)),
                                 t.flatten_packed((w, 0))])
    assert at23.classify(mixed) == SpanClass(3, 2)
    at33 = gl_atlas(3, 3, 2)
    t3 = at33.tower
    full = Subspace.span(2, 9, [t3.basis_vector(j) for j in range(3)])
    assert at33.classify(full) == SpanClass(3, 3)


def test_t_representative_examples(at23):
    w = at23.tower.ext.w
    w2 = at23.tower.mid.mul(w, w)
    rep1 = at23.t_representative(3, (w,))
    assert rep1.r == 1 and at23.classify(rep1.subspace) == SpanClass(3, 2)
    rep2 = at23.t_representative(3, (w, w2))
    assert rep2.r == 2 and at23.classify(rep2.subspace) == SpanClass(3, 2)
    with pytest.raises(ValueError):
        at23.t_representative(3, (1,))  # 1, 1 dependent over GF(2)
    with pytest.raises(ValueError):
        at23.t_representative(5, (w,))  # k out of range


def test_orbit_label_full_class():
    at33 = gl_atlas(3, 3, 2)
    W = at33.full_class_rep(3)
    label = at33.orbit_label(W)
    assert label.kind == "full" and label.key() == ("full", 3)


def test_orbit_label_line_class(at23):
    # W'.Y_1 gets the Singer-orbit label of W'
    action = at23.singer
    orbit = action.orbit_representatives(2)[0]
    realized = at23.realize_line_block(orbit.rep)
    label = at23.orbit_label(realized)
    assert label.kind == "line"
    assert label.rep_rows == orbit.rep.rows


def test_orbit_label_invariance_under_group(at23):
    rng = Random(7)
    w = at23.tower.ext.w
    rep = at23.t_representative(3, (w,))
    base = at23.orbit_label(rep.subspace)
    for _ in range(100):
        g = at23.random_gl(rng)
        assert at23.orbit_label(at23.apply_matrix(g, rep.subspace)) == base


def test_orbit_label_rejects_unclassified():
    at = gl_atlas(4, 4, 2)
    t = at.tower
    w = t.ext.w
    # dim 4, span 2: spanned by two full lines
    rows = [t.flatten_packed((1, 0, 0, 0)), t.flatten_packed((w, 0, 0, 0)),
            t.flatten_packed((0, 1, 0, 0)), t.flatten_packed((0, w, 0, 0))]
    W = Subspace.span(2, 16, rows)
    assert at.classify(W) == SpanClass(4, 2)
    with pytest.raises(UnclassifiedOrbitError):
        at.orbit_label(W)


def test_stabilizer_order_formula(at23):
    assert at23.stabilizer_order(3, 2, 3) == 7
    assert at23.stabilizer_order(3, 1, 1) == 4
    at33 = gl_atlas(3, 3, 2)
    assert at33.stabilizer_order(3, 1, 1) == 4 * (2 ** 9 - 2 ** 6)
    with pytest.raises(ValueError):
        at23.stabilizer_order(3, 2, 2)  # u must divide gcd(r+1, l)


def test_stabilizer_brute_force_all_reps(at23):
    # every representative's stabilizer counted over all 3528 group elements
    for r in (1, 2):
        for rep in at23.representatives(3, r):
            brute = at23.brute_force_stabilizer_order(rep.subspace)
            assert brute == at23.stabilizer_order(3, r, rep.u)


def test_orbit_sizes(at23):
    assert at23.orbit_size(3, 2, 3) == 504
    assert at23.orbit_size(3, 1, 1) == 882
    at33 = gl_atlas(3, 3, 2)
    assert at33.full_class_size(3) == gl_order(3, 8) // 168


def test_orbit_size_by_exhaustive_generation(at23):
    # independent oracle: expand each orbit by exhaustive classification
    sizes = Counter()
    for rows in iter_rref_bases(6, 3, 2):
        sizes[at23.label_key_rows(rows)] += 1
    w = at23.tower.ext.w
    w2 = at23.tower.mid.mul(w, w)
    rep1 = at23.t_representative(3, (w,))
    rep2 = at23.t_representative(3, (w, w2))
    assert sizes[rep1.label.key()] == 882
    assert sizes[rep2.label.key()] == 504
    line_total = sum(n for key, n in sizes.items() if key[0] == "line")
    assert line_total == 9
    assert sum(sizes.values()) == 1395


def test_partition_identity(at23):
    # 9 + 882 + 504 = [6 3]_2 with the span-3 class empty for m=2
    assert 9 + 882 + 504 == gaussian_binomial(6, 3, 2)
    by_span = Counter()
    for rows in iter_rref_bases(6, 3, 2):
        by_span[at23.classify_rows(rows).span_dim] += 1
    assert by_span == Counter({1: 9, 2: 1386})


def test_representatives_counts(at23):
    from qgdd.singer import n_orbits
    assert len(at23.representatives(3, 2)) == n_orbits(3, 3, 2) == 1
    assert len(at23.representatives(3, 1)) == n_orbits(2, 3, 2) == 1
    at27 = gl_atlas(2, 7, 2)
    reps = at27.representatives(3, 2)
    assert len(reps) == n_orbits(3, 7, 2) == 93
    assert len({r.label for r in reps}) == 93


def test_representatives_contain_one(at23):
    at27 = gl_atlas(2, 7, 2)
    for rep in at27.representatives(3, 2)[:10]:
        rows_l = [1] + [at27.tower.ext.mid_to_pow[u] for u in rep.coeffs]
        assert vector_ops(2, 7).rank(rows_l) == 3


def test_line_orbit_size(at23):
    # (Q^m - 1)/(q^u - 1): 63/7 = 9 line blocks of the whole middle field
    assert at23.line_orbit_size(3) == 9
    assert at23.line_orbit_size(1) == 63


def test_column_independence_criterion(at23):
    w = at23.tower.ext.w
    w2 = at23.tower.mid.mul(w, w)
    coeffs = (w, w2)
    assert at23.column_independence_criterion(coeffs, [[1, 0], [0, 1]], [0, 0])
    assert not at23.column_independence_criterion(coeffs, [[1, 1], [0, 0]], [0, 0])


def test_column_independence_vs_rank_oracle():
    at = gl_atlas(2, 4, 2)
    tower = at.tower
    rng = Random(42)
    w = tower.ext.w
    coeffs = (w, tower.mid.mul(w, w), tower.mid.pow(w, 3))
    r = len(coeffs)
    trials = 10_000
    for _ in range(trials):
        s = rng.randrange(1, r + 1)
        a = [[rng.randrange(2) for _ in range(s)] for _ in range(r)]
        b = [rng.randrange(2) for _ in range(s)]
        predicted = at.column_independence_criterion(coeffs, a, b)
        matrix = at.mixing_matrix(coeffs, a, b)
        cols = [tuple(matrix[i][j] for i in range(r)) for j in range(s)]
        direct = tower.mid_rank(cols) == s
        assert predicted == direct


def test_label_serialization_roundtrip(at23):
    w = at23.tower.ext.w
    rep = at23.t_representative(3, (w,))
    label = rep.label
    assert OrbitLabel.from_key(label.key()) == label
    assert "mixed" in label.label_str()


def test_gl_elements_guard():
    at33 = gl_atlas(3, 3, 2)
    with pytest.raises(ValueError):
        next(at33.gl_elements())


def test_gl_elements_complete(at23):
    els = list(at23.gl_elements())
    assert len(els) == 3528
    assert len(set(els)) == 3528


def test_span_class_partition_m3():
    # [9 3]_2 splits as lines + two mixed orbits + the span-3 orbit
    at = gl_atlas(3, 3, 2)
    assert gaussian_binomial(9, 3, 2) == 788035
    lines = 73 * 1
    mixed_r1 = gl_order(3, 8) // at.stabilizer_order(3, 1, 1)
    mixed_r2 = gl_order(3, 8) // at.stabilizer_order(3, 2, 3)
    assert (lines, mixed_r1, mixed_r2) == (73, 64386, 36792)
    assert lines + mixed_r1 + mixed_r2 + at.full_class_size(3) == 788035
