"""Compiled inner loops for convolution on S_n.

The product rho o sigma is ranked block-wise: sigma is split into a prefix of
length n - s and a suffix of length s.  For a fixed prefix and fixed rho the
suffix part of rank(rho o sigma) is a lookup in the multiplication table of
S_s, so every output block of s! entries is filled by one gather.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numba
import numpy as np

from .permcore import images_table, multiplication_table, rank_rows

SUFFIX = 6


@numba.njit(cache=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@numba.njit(cache=True)
def _block_convolve(n, prefixes, remaining, suffix_table, rho_img, weights, g, fact, out):
    n_prefix = prefixes.shape[1]
    s = remaining.shape[1]
    block = suffix_table.shape[0]
    for q in range(prefixes.shape[0]):
        base = q * block
        for k in range(rho_img.shape[0]):
            w = weights[k]
            used = 0
            top = 0
            for i in range(n_prefix):
                v = rho_img[k, prefixes[q, i]]
                c = v - _popcount(used & ((1 << v) - 1))
                top += c * fact[n - 1 - i]
                used |= 1 << v
            psi = 0
            seen = 0
            for u in range(s):
                v = rho_img[k, remaining[q, u]]
                r = v - _popcount(used & ((1 << v) - 1))
                c = r - _popcount(seen & ((1 << r) - 1))
                psi += c * fact[s - 1 - u]
                seen |= 1 << r
            row = suffix_table[psi]
            for j in range(block):
                out[base + j] += w * g[top + row[j]]


@lru_cache(maxsize=None)
def _block_layout(n: int):
    s = min(n, SUFFIX)
    p = n - s
    prefixes = np.array(list(itertools.permutations(range(n), p)), dtype=np.int64)
    prefixes = prefixes.reshape(len(prefixes), p)
    remaining = np.empty((prefixes.shape[0], s), dtype=np.int64)
    for q, pre in enumerate(prefixes):
        remaining[q] = sorted(set(range(n)) - set(pre.tolist()))
    table = np.ascontiguousarray(multiplication_table(s), dtype=np.int64)
    fact = np.array([math.factorial(i) for i in range(n + 1)], dtype=np.int64)
    return prefixes, remaining, table, fact


def left_weighted_sum(n: int, support: np.ndarray, weights: np.ndarray, g: np.ndarray) -> np.ndarray:
    """out[sigma] = sum_k weights[k] * g[rank(rho_k o sigma)] with rho_k = support[k]."""
    prefixes, remaining, table, fact = _block_layout(n)
    img = images_table(n)
    rho = np.ascontiguousarray(img[np.asarray(support, dtype=np.int64)], dtype=np.int64)
    out = np.zeros(math.factorial(n), dtype=np.float64)
    _block_convolve(
        n,
        prefixes,
        remaining,
        table,
        rho,
        np.ascontiguousarray(weights, dtype=np.float64),
        np.ascontiguousarray(g, dtype=np.float64),
        fact,
        out,
    )
    return out


def self_check(n: int) -> bool:
    """Compare the block kernel against direct ranking on a few inputs."""
    N = math.factorial(n)
    rng = np.random.default_rng(0)
    support = rng.choice(N, size=min(N, 5), replace=False)
    g = rng.standard_normal(N)
    got = left_weighted_sum(n, support, np.ones(len(support)), g)
    img = images_table(n).astype(np.int64)
    want = np.zeros(N)
    for r in support:
        want += g[rank_rows(img[r][img])]
    return bool(np.allclose(got, want))
