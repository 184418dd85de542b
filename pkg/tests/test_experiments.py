import math
from fractions import Fraction

import numpy as np
import pytest

from oracles import brute_force_3ap
from snharmonic.algebra import GroupFunction, inner
from snharmonic.experiments import (
    BandParams,
    approximate_group_witness,
    band_linear_report,
    band_measure_formula,
    bogolyubov_search,
    covering_number,
    find_3ap,
    growth_report,
    layers_consistent,
    level_zero,
    make_band,
    make_leveld_example,
    measure,
    mixing_profile,
    n_cycle_pair,
    product_free_set,
    product_mixing_defect,
    ruzsa_cover_demo,
    schreier_diameter,
    set_density,
    set_product,
    sharpness_statistic,
    slow_generating_set,
    three_cycles,
    triple_probability,
)
from snharmonic.permcore import Permutation, all_permutations, even_ranks, multiplication_table, sign_table


def test_set_product_matches_objects(rng):
    n = 4
    perms = list(all_permutations(n))
    X = rng.choice(24, 5, replace=False)
    Y = rng.choice(24, 4, replace=False)
    expected = sorted({(perms[x] * perms[y]).rank() for x in X for y in Y})
    assert set_product(X, Y, n).tolist() == expected


def covering_oracle(gens, n):
    """Least m with (gens)^m equal to A_n, using Permutation objects only."""
    gens = [Permutation.from_rank(int(g), n) for g in gens]
    layer = set(gens)
    m = 1
    while len(layer) < math.factorial(n) // 2:
        layer = {g * p for g in gens for p in layer}
        m += 1
    return m


@pytest.mark.parametrize("n", [4, 5, 6])
def test_three_cycle_covering_number(n):
    A = three_cycles(n)
    rep = covering_number(A, n)
    assert rep.ambient == "A_n"
    assert rep.covering_number == covering_oracle(A, n)
    assert rep.profile[-1] == 1
    assert layers_consistent(rep, A, n)


def test_covering_number_of_nongenerating_set():
    n = 5
    A = [Permutation([2, 1, 3, 4, 5]).rank()]
    rep = covering_number(A, n)
    assert math.isinf(rep.covering_number) and rep.generated_size == 2
    with pytest.raises(ValueError):
        covering_number(n_cycle_pair(5)[:1], 5)
    rep = covering_number(n_cycle_pair(5)[:1], 5, directed=True)
    assert rep.generated_size == 5


def test_schreier_diameters():
    for n in (4, 5, 6):
        assert schreier_diameter(three_cycles(n), n, 1)["diameter"] == 1
    res = schreier_diameter(n_cycle_pair(6), 6, 1)
    assert res["diameter"] == 3  # the cycle graph on 6 points
    slow = slow_generating_set(6, 2)
    assert schreier_diameter(slow, 6, 2)["diameter"] >= 1


def test_bogolyubov_on_alternating_group():
    n = 5
    res = bogolyubov_search(even_ranks(n), n, 1)
    assert res["found"] == [] and res["first_power"] == 1


def test_bogolyubov_on_three_cycles():
    res = bogolyubov_search(three_cycles(5), 5, 1)
    assert res["found"] is not None
    assert res["size_of_power"] == 60


def test_growth_report():
    n = 6
    A = three_cycles(n)
    rep = growth_report(A, n)
    assert Fraction(rep["mu_square"]) == measure(set_product(A, A, n), n, "A_n")
    assert rep["ambient"] == "A_n"
    assert all(0 < v <= 1 for v in rep["lemma_bounds"].values())


def mixing_fixtures(count=50):
    rng = np.random.default_rng(11)
    out = []
    for k in range(count):
        n = 4 + k % 2
        N = math.factorial(n)
        support = even_ranks(n) if k % 3 == 0 else np.arange(N)
        size = rng.integers(2, support.size)
        chosen = rng.choice(support, size, replace=False)
        weights = np.zeros(N)
        weights[chosen] = rng.random(size)
        out.append(GroupFunction(n, weights * N / weights.sum()))
    return out


def test_mixing_is_monotone_on_fixtures():
    for f in mixing_fixtures():
        rep = mixing_profile(f, 6)
        assert rep.monotone
        assert rep.convention == ("level0" if np.all(sign_table(f.n)[f.support()] == 1) else "mean")


def test_level_zero_conventions(rng):
    n = 4
    f = GroupFunction.random(n, rng)
    assert level_zero(f, "mean").allclose(GroupFunction.constant(n, f.mean()))
    sgn = GroupFunction.sign(n)
    assert level_zero(f, "level0").allclose(GroupFunction.constant(n, f.mean()) + sgn * inner(f, sgn))


def test_mixing_rejects_non_densities():
    with pytest.raises(ValueError):
        mixing_profile(GroupFunction.constant(4, 2.0), 3)


def test_product_mixing_reconstruction(rng):
    n = 6
    f, g, h = (GroupFunction(n, rng.random(720) * 2) for _ in range(3))
    rep = product_mixing_defect(f, g, h)
    assert rep["reconstruction_error"] <= 1e-9
    assert rep["level0_equals_main"] <= 1e-9


def test_triple_probability_exact_at_n6():
    rng = np.random.default_rng(4)
    ev = even_ranks(6)
    A, B, C = (ev[rng.random(ev.size) < p] for p in (0.3, 0.5, 0.7))
    res = triple_probability(A, B, C, 6)
    assert res["equal"]
    assert res["convolution"] == res["direct"]


def test_product_free_set():
    n = 6
    A = product_free_set(n, 1, (2, 3))
    prods = set_product(A, A, n)
    assert not np.isin(prods, A).any()
    assert A.size > 0


@pytest.mark.parametrize("seed", range(30))
def test_roth_finder_against_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = 4
    mult = multiplication_table(n)
    A = np.sort(rng.choice(24, rng.integers(1, 7), replace=False))
    res = find_3ap(A, n)
    brute = brute_force_3ap(A, mult)
    if res["found"]:
        x, y, z = res["triple"]
        assert mult[x, z] == mult[y, y] and not (x == y == z)
    else:
        assert brute == []
        assert res["squaring_injective"]


def test_square_collisions_always_found():
    n = 5
    mult = multiplication_table(n)
    rng = np.random.default_rng(9)
    for _ in range(20):
        x, y = rng.choice(120, 2, replace=False)
        pool = [int(z) for z in np.flatnonzero(np.diag(mult) == mult[x, x]) if z != x]
        if not pool:
            continue
        A = np.unique([x, pool[0]] + list(rng.choice(120, 3)))
        assert find_3ap(A, n)["found"]


def test_approximate_group_witness():
    n = 5
    A = np.union1d(three_cycles(n), [0])
    res = approximate_group_witness(A, n)
    covered = np.unique(np.concatenate([set_product([x], A, n) for x in res["X"]]))
    assert set(set_product(A, A, n)) <= set(covered)
    with pytest.raises(ValueError):
        approximate_group_witness(three_cycles(n), n)


def test_ruzsa_cover():
    n = 5
    A = np.union1d(three_cycles(n), [0])
    res = ruzsa_cover_demo(A, n)
    assert res["covers"]
    assert res["within_basic_bound"]


@pytest.mark.parametrize("ell,mu", [(1, Fraction(8, 35)), (2, Fraction(18, 35)), (3, Fraction(8, 35)), (4, Fraction(1, 70))])
def test_band_measure(ell, mu):
    params = BandParams(8, ell)
    band = make_band(params)
    assert band.mu == band_measure_formula(params) == mu


@pytest.mark.parametrize("ell", [1, 2, 3])
def test_band_triple_count_by_objects(ell):
    params = BandParams(8, ell)
    band = make_band(params)
    members = set(int(r) for r in band.ranks)
    rng = np.random.default_rng(ell)
    for s in rng.choice(band.ranks, 3, replace=False):
        sp = Permutation.from_rank(int(s), 8)
        count = sum((Permutation.from_rank(int(a), 8) * sp).rank() in members for a in band.ranks)
        assert count == band.triple_count == band.triple_formula


def test_band_small_linear_report():
    band = make_band(BandParams(6, 2))
    rep = band_linear_report(band)
    assert np.allclose(rep["norms"], rep["targets"], atol=1e-8)
    assert max(rep["pattern_error"]) <= 1e-9


def test_sharpness_statistic():
    out = sharpness_statistic(BandParams(6, 2))
    assert out["phi_norm_formula"] == pytest.approx(out["phi_norm_direct"])
    assert np.allclose(out["means"][1:], out["targets"][1:], atol=1e-8)


def test_band_params_guards():
    with pytest.raises(ValueError):
        BandParams(7, 1)
    with pytest.raises(ValueError):
        BandParams(8, 5)


def test_leveld_example():
    res = make_leveld_example(6, [1, 2])
    assert res["mu_matches"]
    assert Fraction(res["mu"]) == Fraction(3 * 2, 6 * 5)
    assert res["biglobal_passed"]
    with pytest.raises(ValueError):
        make_leveld_example(7, [1])


def test_set_density_normalisation():
    d = set_density(three_cycles(4), 4)
    assert d.mean() == pytest.approx(1.0)
