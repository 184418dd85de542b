import math
from fractions import Fraction

import numpy as np
import pytest

from snharmonic.combinatorics import (
    class_global_certificate,
    class_profile,
    class_ranks,
    colex_rank,
    colex_subsets,
    delete_cycle,
    deletion_ratio,
    disjointness_level_norm,
    disjointness_operator,
    disjointness_spectrum,
    dyadic_tail_report,
    growth_exponent,
    kneser_level_eigenvalue,
    kneser_operator,
    kneser_spectrum,
    simplification_audit,
    slice_level_bases,
    tuple_level_bases,
)
from snharmonic.globalness import global_audit
from snharmonic.algebra import GroupFunction
from snharmonic.permcore import centralizer_order, partitions, sign_of_partition


def test_colex_order():
    subs = colex_subsets(4, 2)
    assert subs == [(1, 2), (1, 3), (2, 3), (1, 4), (2, 4), (3, 4)]
    assert [colex_rank(s) for s in subs] == list(range(6))


def test_level_bases_are_orthonormal_and_complete():
    for n, k in [(5, 2), (6, 3)]:
        bases = slice_level_bases(n, k)
        Q = np.hstack(bases)
        assert Q.shape == (math.comb(n, k), math.comb(n, k))
        assert np.allclose(Q.T @ Q, np.eye(Q.shape[1]), atol=1e-10)
        assert [b.shape[1] for b in bases] == [math.comb(n, t) - (math.comb(n, t - 1) if t else 0) for t in range(k + 1)]
    tb = tuple_level_bases(5, 2)
    Q = np.hstack(tb)
    assert np.allclose(Q.T @ Q, np.eye(20), atol=1e-10)


def test_petersen():
    spec = kneser_spectrum(5, 2)
    by_level = {e.level: (e.eigenvalue, e.multiplicity) for e in spec}
    assert by_level[0] == (pytest.approx(1.0), 1)
    assert by_level[1] == (pytest.approx(-2 / 3), 4)
    assert by_level[2][0] == pytest.approx(1 / 3, abs=1e-9)
    assert by_level[2][1] == 5


@pytest.mark.parametrize("n,k", [(5, 2), (6, 2), (7, 3), (8, 3), (9, 4)])
def test_kneser_closed_form_and_raw_spectrum(n, k):
    spec = kneser_spectrum(n, k)
    for e in spec:
        assert e.eigenvalue == pytest.approx(float(kneser_level_eigenvalue(n, k, e.level)), abs=1e-9)
    # independent route: raw eigenvalues of the operator with multiplicities C(n,t) - C(n,t-1)
    raw = np.sort(np.linalg.eigvalsh(kneser_operator(n, k)))
    expected = []
    for t in range(k + 1):
        mult = math.comb(n, t) - (math.comb(n, t - 1) if t else 0)
        expected += [float(kneser_level_eigenvalue(n, k, t))] * mult
    assert np.allclose(raw, np.sort(expected), atol=1e-9)


@pytest.mark.parametrize("n,k", [(6, 2), (8, 3)])
def test_disjointness_dichotomy(n, k):
    rep = disjointness_level_norm(n, k, report=True)
    assert rep.dichotomy_holds
    special = (-1) ** k / math.comb(n - k, k)
    assert any(abs(v - special) < 1e-9 for v in rep.level_eigenvalues)
    assert rep.norm == pytest.approx(abs(special), abs=1e-9)
    assert rep.norm <= rep.bound
    D = disjointness_operator(n, k)
    assert np.allclose(D.sum(axis=1), 1)
    assert np.allclose(D, D.T)


def test_disjointness_spectrum_covers_space():
    spec = disjointness_spectrum(6, 2)
    assert sum(e.multiplicity for e in spec) == 30


def test_kneser_guards():
    with pytest.raises(ValueError):
        kneser_operator(5, 3)


def test_class_profile_and_deletion():
    prof = class_profile((3, 1, 1))
    assert prof.size == 20 and prof.even
    assert prof.mu_sn == Fraction(1, 6) and prof.mu_an == Fraction(1, 3)
    with pytest.raises(ValueError):
        class_profile((2, 1, 1), "A_n")
    assert delete_cycle((3, 2, 2, 1), 2) == (3, 2, 1)
    for lam in partitions(9):
        for i in set(lam):
            assert deletion_ratio(lam, i) == i * lam.count(i)


def test_growth_exponent():
    assert growth_exponent((1,) * 8) == pytest.approx(8.0)
    assert growth_exponent((2, 2, 2, 2)) == pytest.approx(2.0)
    assert growth_exponent((5, 3)) == pytest.approx(1.0)


def test_class_certificate_is_sound_at_n8():
    # every even class with bounded growth passes the density audit promised by its certificate
    n = 8
    for lam in partitions(n):
        if sign_of_partition(lam) != 1:
            continue
        cert = class_global_certificate(lam, growth_exponent(lam))
        assert cert.certified and cert.depth == 2
        ranks = class_ranks(n, [lam])
        rep = global_audit(GroupFunction.indicator(n, ranks), cert.r, cert.depth, form="density", ambient="A_n")
        assert rep.passed, lam


def test_dyadic_buckets():
    n = 10
    buckets = dyadic_tail_report(n)
    classes = [lam for b in buckets for lam in b.classes]
    assert sorted(classes) == sorted(lam for lam in partitions(n) if sign_of_partition(lam) == 1)
    assert sum(b.mu_sn for b in buckets) == Fraction(1, 2)
    for b in buckets:
        for lam in b.classes:
            g = growth_exponent(lam)
            assert g <= b.r + 1e-12 and (b.r == 1 or g > b.r / 2)
        if b.r >= 2:
            assert b.bound == pytest.approx((8 / b.r) ** (b.r / 2))


def test_simplification_audit_on_normal_sets():
    n = 6
    for lams in [[(3, 1, 1, 1)], [(5, 1)], [(2, 2, 1, 1), (3, 3)]]:
        rep = simplification_audit(class_ranks(n, lams), n)
        assert rep.checked > 0
        assert rep.passed, (lams, rep.worst_ratio)


def test_class_ranks_count():
    ranks = class_ranks(6, [(3, 3)])
    assert ranks.size == 720 // centralizer_order((3, 3))
