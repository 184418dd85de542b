import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snharmonic.boxspace import (
    BoxFunction,
    box_global_audit,
    box_index,
    box_inner,
    box_noise,
    box_norm,
    box_point,
    box_restriction_norms,
    conditional_mean,
    es_cum,
    es_degree_part,
    es_part,
    klm_margin,
    restrict_box,
)


def all_subsets(m):
    return [S for k in range(m + 1) for S in itertools.combinations(range(1, m + 1), k)]


def junta_lstsq(F, d):
    n, m = F.n, F.m
    pts = list(itertools.product(range(n), repeat=m))
    cols = []
    for k in range(d + 1):
        for S in itertools.combinations(range(m), k):
            for vals in itertools.product(range(n), repeat=k):
                cols.append([float(all(p[s] == v for s, v in zip(S, vals))) for p in pts])
    A = np.array(cols).T
    coef, *_ = np.linalg.lstsq(A, F.flat.astype(float), rcond=None)
    return A @ coef


def test_index_roundtrip():
    n = 3
    for idx in range(27):
        assert box_index(box_point(idx, n), n) == idx
    assert box_index((1, 1, 2), 3) == 1  # last coordinate least significant
    assert box_point(9, 3) == (2, 1, 1)


def test_es_parts_sum_and_orthogonality(rng):
    F = BoxFunction.random(3, rng)
    parts = {S: es_part(F, S) for S in all_subsets(3)}
    total = sum((p.flat for p in parts.values()), np.zeros(27))
    assert np.allclose(total, F.flat)
    for S, P in parts.items():
        for T, Q in parts.items():
            if S < T:
                assert abs(box_inner(P, Q)) < 1e-12
        # F^{=S} has zero conditional mean when any coordinate of S is averaged out
        for s in S:
            assert np.allclose(conditional_mean(P, [x for x in range(1, 4) if x != s]).flat, 0)


@pytest.mark.parametrize("d", [0, 1, 2])
def test_es_cum_matches_least_squares(d, rng):
    F = BoxFunction.random(3, rng)
    assert np.allclose(es_cum(F, d).flat, junta_lstsq(F, d), atol=1e-9)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95))
def test_noise_acts_diagonally_on_es_parts(seed, rho):
    rng = np.random.default_rng(seed)
    F = BoxFunction.random(3, rng)
    expected = sum((rho ** len(S) * es_part(F, S).flat for S in all_subsets(3)), np.zeros(27))
    assert np.allclose(box_noise(F, rho).flat, expected)
    assert box_norm(box_noise(F, rho)) <= box_norm(F) + 1e-12


def test_exact_noise(rng):
    F = BoxFunction(3, np.array([Fraction(int(v)) for v in rng.integers(-3, 4, 27)], dtype=object))
    G = box_noise(F, Fraction(1, 3))
    assert G.exact
    assert sum(G.flat, Fraction(0)) == sum(F.flat, Fraction(0))
    parts = [es_degree_part(F, d) for d in range(4)]
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    assert all(a == b for a, b in zip(total.flat, F.flat))


def test_restriction():
    F = BoxFunction.coordinate_indicator(3, 2, 3)
    R = restrict_box(F, [2], [3])
    assert R.m == 2 and np.all(R.flat == 1)
    norms = box_restriction_norms(F, [2])
    assert norms.tolist() == [0.0, 0.0, 1.0]


def test_global_audit_dictator():
    n = 4
    F = BoxFunction.coordinate_indicator(n, 1, 1)
    rep = box_global_audit(F, r=1.5, depth=1)
    assert not rep.passed
    assert rep.witness[1] == ((1,), (1,))
    assert box_global_audit(F, r=2.0, depth=2).passed
    assert box_global_audit(BoxFunction.constant(n), 1.0).passed


def test_klm_margin_for_constant():
    F = BoxFunction.constant(3)
    assert klm_margin(F, 2.0, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_csv_roundtrip(tmp_path, rng):
    F = BoxFunction.random(3, rng)
    path = tmp_path / "F.csv"
    F.to_csv(str(path))
    assert BoxFunction.from_csv(str(path)).allclose(F, 0)


def test_guards():
    with pytest.raises(ValueError):
        BoxFunction(3, np.zeros(10))
    with pytest.raises(ValueError):
        box_noise(BoxFunction.constant(3), 1.5)
