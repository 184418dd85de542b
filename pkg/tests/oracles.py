"""Slow, independent reference computations used only by the tests."""

import itertools
import math
from fractions import Fraction

import numpy as np

from snharmonic.permcore import partitions


def _fixed_tabloids(cycle_lengths, shape):
    """Number of ways to place whole cycles into rows so that row sizes match shape."""
    shape = list(shape)

    def place(i, remaining):
        if i == len(cycle_lengths):
            return int(all(r == 0 for r in remaining))
        total = 0
        for j, r in enumerate(remaining):
            if r >= cycle_lengths[i]:
                remaining[j] -= cycle_lengths[i]
                total += place(i + 1, remaining)
                remaining[j] += cycle_lengths[i]
        return total

    return place(0, shape)


def _kostka(lam, mu):
    """Number of semistandard tableaux of shape lam and content mu (brute force)."""
    cells = [(r, c) for r, length in enumerate(lam) for c in range(length)]
    count = 0
    for filling in itertools.product(range(len(mu)), repeat=len(cells)):
        if any(filling.count(v) != m for v, m in enumerate(mu)):
            continue
        t = dict(zip(cells, filling))
        ok = all(t[(r, c)] <= t[(r, c + 1)] for (r, c) in cells if (r, c + 1) in t)
        ok = ok and all(t[(r, c)] < t[(r + 1, c)] for (r, c) in cells if (r + 1, c) in t)
        count += ok
    return count


def young_rule_table(n):
    """Character table (rows reverse-lex irreps, columns ascending classes) via Young's rule."""
    irreps = partitions(n)
    classes = sorted(partitions(n))
    perm_chars = np.array([[_fixed_tabloids(list(c), mu) for c in classes] for mu in irreps], dtype=object)
    K = np.array([[_kostka(lam, mu) for lam in irreps] for mu in irreps], dtype=object)  # K[mu, lam]
    # perm_chars[mu] = sum_lam K[mu, lam] chi_lam; K is unitriangular, solve by substitution
    chars = {}
    for i in range(len(irreps)):
        mu = irreps[i]
        row = perm_chars[i].copy()
        for j in range(len(irreps)):
            lam = irreps[j]
            if lam != mu and K[i, j]:
                row = row - K[i, j] * chars[lam]
        chars[mu] = row
    return np.array([[int(v) for v in chars[lam]] for lam in irreps], dtype=np.int64)


def junta_gram_degree_cum(values, n, d):
    """Least-squares projection onto the span of d-umvirate indicators (degree <= d)."""
    perms = list(itertools.permutations(range(n)))
    cols = []
    for I in itertools.permutations(range(n), d):
        for J in itertools.permutations(range(n), d):
            cols.append([float(all(p[i] == j for i, j in zip(I, J))) for p in perms])
    A = np.array(cols).T
    coef, *_ = np.linalg.lstsq(A, np.asarray(values, dtype=float), rcond=None)
    return A @ coef


def exact_rational(v):
    return Fraction(v).limit_denominator(10**9)


def brute_force_3ap(ranks, mult):
    """All (x, y, z) in A^3 with x z = y^2, not all equal."""
    A = [int(a) for a in ranks]
    sq = {y: int(mult[y, y]) for y in A}
    out = []
    for x in A:
        for z in A:
            p = int(mult[x, z])
            for y in A:
                if sq[y] == p and not (x == y == z):
                    out.append((x, y, z))
    return out


def hook_product_dimension(lam):
    n = sum(lam)
    conj = [sum(1 for part in lam if part > c) for c in range(lam[0])] if lam else []
    hooks = 1
    for r, length in enumerate(lam):
        for c in range(length):
            hooks *= (length - c - 1) + (conj[c] - r - 1) + 1
    return math.factorial(n) // hooks
