"""Irreducible characters of S_n over the integers.

Values come from the border-strip recursion on beta-sets; dimensions are
cross-checked against the hook length formula.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .permcore import (
    MAX_TABLE_N,
    Partition,
    as_partition,
    class_size,
    conjugate,
    cycle_type_table,
    partitions,
    sign_of_partition,
)

MAX_CHAR_N = 14


def _beta_set(lam: Partition, length: int) -> tuple:
    padded = tuple(lam) + (0,) * (length - len(lam))
    return tuple(padded[i] + length - 1 - i for i in range(length))


def _from_beta(beta: Sequence[int]) -> Partition:
    length = len(beta)
    parts = sorted(beta, reverse=True)
    lam = tuple(parts[i] - (length - 1 - i) for i in range(length))
    return tuple(x for x in lam if x > 0)


@lru_cache(maxsize=None)
def _mn(lam: Partition, mu: Partition) -> int:
    if not mu:
        return 1 if not lam else 0
    k = mu[0]
    rest = mu[1:]
    length = len(lam) + k
    beta = _beta_set(lam, length)
    members = set(beta)
    total = 0
    for b in beta:
        if b - k < 0 or (b - k) in members:
            continue
        height = sum(1 for c in beta if b - k < c < b)
        new_beta = [c for c in beta if c != b] + [b - k]
        sub = _from_beta(new_beta)
        total += (-1) ** height * _mn(sub, rest)
    return total


def mn_character(lam: Sequence[int], mu: Sequence[int]) -> int:
    """Value of the irreducible character chi_lam on the class of cycle type mu."""
    lam = as_partition(lam)
    mu = as_partition(mu)
    if sum(lam) != sum(mu):
        raise ValueError(f"{lam} and {mu} partition different integers")
    if sum(lam) > MAX_CHAR_N:
        raise ValueError(f"character evaluation limited to n <= {MAX_CHAR_N}")
    # strip removal order is irrelevant; largest strips first keeps recursion shallow
    return _mn(lam, tuple(sorted(mu, reverse=True)))


def hook_dimension(lam: Sequence[int]) -> int:
    lam = as_partition(lam)
    n = sum(lam)
    conj = conjugate(lam)
    hooks = 1
    for i, row in enumerate(lam):
        for j in range(row):
            hooks *= (row - j - 1) + (conj[j] - i - 1) + 1
    return math.factorial(n) // hooks


def dimension(lam: Sequence[int]) -> int:
    lam = as_partition(lam)
    return mn_character(lam, (1,) * sum(lam))


def level(lam: Sequence[int]) -> int:
    """min(n - first row, n - first column)."""
    lam = as_partition(lam)
    n = sum(lam)
    return min(n - lam[0], n - len(lam))


def degree_index(lam: Sequence[int]) -> int:
    """n - first row: the junta degree at which V_lam first appears."""
    lam = as_partition(lam)
    return sum(lam) - lam[0]


@dataclass
class CharacterTable:
    n: int
    irreps: list  # reverse-lex order
    classes: list  # ascending lex order, identity class first
    values: np.ndarray  # int64, rows = irreps, columns = classes
    class_sizes: list = field(default_factory=list)

    @property
    def dimensions(self) -> list:
        return [int(v) for v in self.values[:, 0]]

    def row(self, lam: Sequence[int]) -> np.ndarray:
        return self.values[self.irreps.index(tuple(lam))]

    def column(self, mu: Sequence[int]) -> np.ndarray:
        return self.values[:, self.classes.index(tuple(mu))]

    def check_orthogonality(self) -> bool:
        sizes = np.array(self.class_sizes, dtype=object)
        vals = self.values.astype(object)
        order = math.factorial(self.n)
        gram = (vals * sizes) @ vals.T
        if not all(gram[i, j] == (order if i == j else 0) for i in range(len(vals)) for j in range(len(vals))):
            return False
        z = [order // s for s in self.class_sizes]
        col = vals.T @ vals
        return all(col[i, j] == (z[i] if i == j else 0) for i in range(len(z)) for j in range(len(z)))

    def check_dimensions(self) -> bool:
        dims_ok = all(d == hook_dimension(lam) for d, lam in zip(self.dimensions, self.irreps))
        return dims_ok and sum(d * d for d in self.dimensions) == math.factorial(self.n)

    def check_sign_twist(self) -> bool:
        signs = [sign_of_partition(mu) for mu in self.classes]
        for lam in self.irreps:
            twisted = self.row(conjugate(lam))
            if any(int(t) != s * int(v) for t, s, v in zip(twisted, signs, self.row(lam))):
                return False
        return True

    def to_json(self) -> str:
        payload = {
            "n": self.n,
            "classes": [list(mu) for mu in self.classes],
            "class_sizes": list(self.class_sizes),
            "irreps": [
                {"partition": list(lam), "values": [int(v) for v in self.row(lam)]} for lam in self.irreps
            ],
        }
        return json.dumps(payload, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["irrep"] + [" ".join(map(str, mu)) for mu in self.classes])
        for lam in self.irreps:
            writer.writerow([" ".join(map(str, lam))] + [int(v) for v in self.row(lam)])
        return buf.getvalue()


@lru_cache(maxsize=None)
def character_table(n: int) -> CharacterTable:
    if not 1 <= n <= MAX_CHAR_N:
        raise ValueError(f"character table limited to 1 <= n <= {MAX_CHAR_N}")
    irreps = partitions(n)
    classes = sorted(partitions(n))
    values = np.array([[mn_character(lam, mu) for mu in classes] for lam in irreps], dtype=np.int64)
    values.setflags(write=False)
    return CharacterTable(n, irreps, classes, values, [class_size(mu) for mu in classes])


def character_values(lam: Sequence[int]) -> np.ndarray:
    """chi_lam evaluated at every permutation in rank order (float64)."""
    lam = as_partition(lam)
    n = sum(lam)
    if n > MAX_TABLE_N:
        raise ValueError(f"pointwise character vectors limited to n <= {MAX_TABLE_N}")
    labels, classes = cycle_type_table(n)
    by_class = np.array([mn_character(lam, mu) for mu in classes], dtype=np.float64)
    return by_class[labels]
