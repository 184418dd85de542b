import math

import numpy as np
import pytest

from oracles import hook_product_dimension, young_rule_table
from snharmonic.algebra import GroupFunction, inner
from snharmonic.characters import (
    character_table,
    character_values,
    degree_index,
    dimension,
    level,
    mn_character,
)
from snharmonic.permcore import all_permutations, partitions


def test_s3_frozen_table():
    t = character_table(3)
    assert t.irreps == [(3,), (2, 1), (1, 1, 1)]
    assert t.classes == [(1, 1, 1), (2, 1), (3,)]
    assert t.values.tolist() == [[1, 1, 1], [2, 0, -1], [1, -1, 1]]


@pytest.mark.parametrize("n", range(1, 7))
def test_matches_young_rule_oracle(n):
    assert np.array_equal(character_table(n).values, young_rule_table(n))


@pytest.mark.parametrize("n", range(1, 9))
def test_exact_relations(n):
    t = character_table(n)
    assert t.check_dimensions()
    assert t.check_orthogonality()
    assert t.check_sign_twist()
    assert sum(d * d for d in t.dimensions) == math.factorial(n)


def test_hook_dimensions_against_independent_formula():
    for n in range(1, 11):
        for lam in partitions(n):
            assert dimension(lam) == hook_product_dimension(lam)


def test_known_values():
    assert dimension((5, 3, 2)) == 450
    assert mn_character((3, 2), (2, 2, 1)) == 1
    assert mn_character((4, 4), (8,)) == 0
    assert dimension((4, 4, 4)) == 462


def test_level_and_degree_index():
    assert degree_index((5, 1)) == 1
    assert level((1, 1, 1, 1, 1, 1)) == 0
    assert level((2, 1, 1, 1, 1)) == 1
    assert level((3, 3)) == 3
    assert level((4, 1, 1)) == 2
    assert degree_index((3, 3)) == 3


def test_character_values_are_class_functions():
    n = 5
    lam = (3, 1, 1)
    vals = character_values(lam)
    perms = list(all_permutations(n))
    for p, v in zip(perms, vals):
        assert v == mn_character(lam, p.cycle_type())
    chi = GroupFunction(n, vals)
    assert inner(chi, chi) == pytest.approx(1.0)


def test_serializations():
    t = character_table(4)
    import json

    data = json.loads(t.to_json())
    assert data["n"] == 4 and len(data["irreps"]) == 5
    lines = t.to_csv().strip().splitlines()
    assert len(lines) == 6


def test_bounds():
    with pytest.raises(ValueError):
        character_table(0)
