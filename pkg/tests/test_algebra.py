from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import junta_gram_degree_cum
from snharmonic.algebra import (
    CoefficientMatrix,
    GroupFunction,
    act,
    character_function,
    convolve,
    degree_cum,
    degree_part,
    degree_parts,
    dictator,
    inner,
    isotypic_decomposition,
    isotypic_project,
    level_part,
    level_tail,
    linear_canonical,
    linear_convolve,
    linear_inner,
    lp_norm,
    spectral_norm,
    spectral_report,
)
from snharmonic.characters import dimension
from snharmonic.permcore import Permutation, all_permutations, partitions


def brute_convolve(f, g):
    perms = list(all_permutations(f.n))
    index = {p: i for i, p in enumerate(perms)}
    out = np.zeros(len(perms))
    for s, sp in enumerate(perms):
        out[s] = np.mean([f.values[t] * g.values[index[tp.inverse() * sp]] for t, tp in enumerate(perms)])
    return out


def test_convolution_matches_definition(rng):
    for n in (3, 4):
        f = GroupFunction.random(n, rng)
        g = GroupFunction.random(n, rng)
        assert np.allclose(convolve(f, g).values, brute_convolve(f, g))


def test_exact_and_float_convolution_agree(rng):
    n = 4
    f = GroupFunction(n, rng.integers(-3, 4, 24).astype(float))
    g = GroupFunction(n, rng.integers(-3, 4, 24).astype(float))
    ex = convolve(f.to_exact(), g.to_exact())
    assert ex.exact
    assert np.allclose(ex.to_float().values, convolve(f, g).values)


def test_convolution_is_associative_n6(rng):
    f, g, h = (GroupFunction.random(6, rng) for _ in range(3))
    assert convolve(convolve(f, g), h).allclose(convolve(f, convolve(g, h)), 1e-10)


def test_identity_density_is_unit():
    n = 4
    delta = GroupFunction.delta(n)
    f = GroupFunction.random(n, np.random.default_rng(1))
    assert convolve(delta, f).allclose(f)
    assert convolve(f, delta).allclose(f)


def test_trivial_and_sign_components():
    n = 5
    one = GroupFunction.constant(n)
    sgn = GroupFunction.sign(n)
    assert isotypic_project(one, (5,)).allclose(one)
    assert isotypic_project(one, (3, 2)).allclose(GroupFunction.zeros(n))
    assert isotypic_project(sgn, (1, 1, 1, 1, 1)).allclose(sgn)


def test_dictator_lives_in_degree_at_most_one():
    n = 5
    f = dictator(n, 1, 1)
    parts = isotypic_decomposition(f)
    nonzero = {lam for lam, p in parts.items() if lp_norm(p) > 1e-10}
    assert nonzero == {(5,), (4, 1)}
    assert degree_part(f, 1).allclose(f - 1 / n)


@pytest.mark.parametrize("n", [4, 5])
def test_degree_cum_matches_junta_gram_oracle(n, rng):
    f = GroupFunction.random(n, rng)
    for d in (1, 2):
        oracle = junta_gram_degree_cum(f.values, n, d)
        assert np.allclose(degree_cum(f, d).values, oracle, atol=1e-8)


def test_exact_decomposition_is_exact(rng):
    n = 4
    f = GroupFunction(n, [Fraction(int(v)) for v in rng.integers(-5, 6, 24)])
    parts = isotypic_decomposition(f)
    total = sum(parts.values(), GroupFunction.zeros(n, True))
    assert all(a == b for a, b in zip(total.values, f.values))
    assert sum(inner(p, p) for p in parts.values()) == inner(f, f)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_decomposition_properties(seed):
    rng = np.random.default_rng(seed)
    n = 5
    f = GroupFunction.random(n, rng)
    parts = isotypic_decomposition(f)
    assert sum(inner(p, p) for p in parts.values()) == pytest.approx(inner(f, f), abs=1e-9)
    lams = list(parts)
    for a in lams:
        assert isotypic_project(parts[a], a).allclose(parts[a], 1e-10)
        for b in lams:
            if a < b:
                assert abs(inner(parts[a], parts[b])) < 1e-10
    dp = degree_parts(f)
    assert dp[0].allclose(GroupFunction.constant(n, f.mean()), 1e-10)
    assert sum(dp[1:], dp[0]).allclose(f, 1e-10)


def test_level_zero_holds_trivial_and_sign(rng):
    n = 5
    f = GroupFunction.random(n, rng)
    sgn = GroupFunction.sign(n)
    expected = GroupFunction.constant(n, f.mean()) + sgn * inner(f, sgn)
    assert level_part(f, 0).allclose(expected, 1e-10)
    assert (level_part(f, 0) + level_part(f, 1) + level_part(f, 2) + level_tail(f, 2)).allclose(f, 1e-10)


def test_convolution_preserves_isotypic_components(rng):
    n = 5
    f = GroupFunction.random(n, rng)
    g = GroupFunction.random(n, rng)
    for lam in [(4, 1), (3, 2), (2, 2, 1)]:
        lhs = isotypic_project(convolve(f, g), lam)
        rhs = convolve(f, isotypic_project(g, lam))
        assert lhs.allclose(rhs, 1e-10)


def test_actions():
    n = 4
    rng = np.random.default_rng(3)
    f = GroupFunction.random(n, rng)
    s = Permutation([2, 3, 1, 4])
    t = Permutation([4, 1, 2, 3])
    # left action is a homomorphism
    assert act(act(f, t), s).allclose(act(f, s * t))
    perms = list(all_permutations(n))
    left = act(f, s)
    for x, p in enumerate(perms):
        assert left.values[x] == f.values[(s.inverse() * p).rank()]
    assert act(f, s, "sign_twist").allclose(f * GroupFunction.sign(n))


def test_character_projection_formula():
    lam = (2, 2)
    chi = character_function(lam)
    assert inner(chi, chi) == pytest.approx(1.0)
    assert isotypic_project(chi, lam).allclose(chi)


@pytest.mark.parametrize("method", ["power", "dense"])
def test_spectral_norm_of_identity_density(method):
    n = 4
    delta = GroupFunction.delta(n)
    assert spectral_norm(delta, partition=(3, 1), method=method) == pytest.approx(1.0, abs=1e-8)


def test_spectral_norm_methods_agree(rng):
    f = GroupFunction.random(5, rng)
    for lam in [(5,), (4, 1), (3, 1, 1)]:
        a = spectral_norm(f, partition=lam, method="power", tol=1e-13)
        b = spectral_norm(f, partition=lam, method="dense")
        assert a == pytest.approx(b, rel=1e-6)
    rep = spectral_report(f)
    assert rep.all_converged
    assert rep.by_level[0] >= 0


def test_other_klm_inequality(rng):
    n = 6
    for _ in range(5):
        f = GroupFunction.random(n, rng)
        parts = isotypic_decomposition(f)
        for lam in partitions(n):
            op = spectral_norm(f, partition=lam, method="dense")
            assert dimension(lam) * op**2 <= inner(parts[lam], parts[lam]) + 1e-8


def test_linear_canonical_form(rng):
    n = 5
    a = rng.standard_normal((n, n))
    a -= a.mean(axis=0, keepdims=True)
    a -= a.mean(axis=1, keepdims=True)
    coeffs = CoefficientMatrix(n, a)
    assert coeffs.is_canonical()
    phi = coeffs.reconstruct()
    back = linear_canonical(phi)
    assert np.allclose(back.entries, a)
    assert linear_inner(coeffs, coeffs) == pytest.approx(inner(phi, phi))
    assert degree_part(phi, 1).allclose(phi, 1e-10)


def test_linear_convolution_formula(rng):
    n = 5

    def canon():
        a = rng.standard_normal((n, n))
        a -= a.mean(axis=0, keepdims=True)
        return CoefficientMatrix(n, a - a.mean(axis=1, keepdims=True))

    a, b = canon(), canon()
    lhs = linear_canonical(convolve(a.reconstruct(), b.reconstruct()))
    assert np.allclose(lhs.entries, linear_convolve(a, b).entries)


def test_csv_roundtrip(tmp_path, rng):
    f = GroupFunction.random(4, rng)
    path = tmp_path / "f.csv"
    f.to_csv(str(path))
    assert GroupFunction.from_csv(str(path)).allclose(f, 0)
    e = f.to_exact()
    e.to_csv(str(path))
    back = GroupFunction.from_csv(str(path))
    assert back.exact and all(x == y for x, y in zip(back.values, e.values))


def test_guards():
    with pytest.raises(ValueError):
        GroupFunction(3, [1, 2])
    with pytest.raises(ValueError):
        inner(GroupFunction.constant(3), GroupFunction.constant(4))
    with pytest.raises(ValueError):
        lp_norm(GroupFunction.constant(3), 0.5)
