"""Kneser and disjointness spectra, tuple/slice level filtrations, and
conjugacy-class measure calculus."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .permcore import (
    as_partition,
    centralizer_order,
    class_size,
    cycle_type_table,
    enumerate_tuples,
    images_table,
    multiplicities,
    partitions,
    sign_of_partition,
    sign_table,
    tuple_rank_rows,
)

MAX_VERTICES = 10_000
EIG_TOL = 1e-9


# ---------------------------------------------------------------- index spaces


def colex_subsets(n: int, k: int) -> list:
    """k-subsets of {1..n} (sorted tuples) in colexicographic order."""
    subs = list(itertools.combinations(range(1, n + 1), k))
    subs.sort(key=lambda s: tuple(reversed(s)))
    return subs


def colex_rank(subset: Sequence[int]) -> int:
    return sum(math.comb(v - 1, i + 1) for i, v in enumerate(sorted(subset)))


def _orthonormal_span(mat: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    if mat.shape[1] == 0:
        return np.zeros((mat.shape[0], 0))
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    return u[:, s > tol * max(1.0, s[0])]


def _level_bases(junta_spans: list) -> list:
    """Orthonormal bases of successive differences V_{<=t} minus V_{<=t-1}."""
    bases = []
    prev = None
    for span in junta_spans:
        q = _orthonormal_span(span)
        if prev is not None and prev.shape[1]:
            resid = q - prev @ (prev.T @ q)
            diff = _orthonormal_span(resid)
        else:
            diff = q
        bases.append(diff)
        prev = q
    return bases


def slice_level_bases(n: int, k: int) -> list:
    """Level bases on k-subsets: V_{<=t} spanned by 1[T subset of A], |T| = t."""
    subs = colex_subsets(n, k)
    sets = [set(s) for s in subs]
    spans = []
    for t in range(k + 1):
        cols = [[1.0 if set(T) <= A else 0.0 for A in sets] for T in itertools.combinations(range(1, n + 1), t)]
        spans.append(np.array(cols).T)
    return _level_bases(spans)


def tuple_level_bases(n: int, k: int, top: int | None = None) -> list:
    """Level bases on [n]_k: V_{<=t} spanned by cylinder indicators on t coordinates."""
    top = k if top is None else top
    tuples = np.array(enumerate_tuples(n, k), dtype=np.int64).reshape(-1, k)
    spans = []
    for t in range(top + 1):
        cols = []
        for coords in itertools.combinations(range(k), t):
            sub = tuples[:, list(coords)]
            keys = tuple_rank_rows(sub - 1, n) if t else np.zeros(len(tuples), dtype=np.int64)
            for val in np.unique(keys):
                cols.append((keys == val).astype(np.float64))
        spans.append(np.array(cols).T)
    return _level_bases(spans)


# ---------------------------------------------------------------- operators


def kneser_operator(n: int, k: int) -> np.ndarray:
    """Normalised walk: move from A to a uniform k-set disjoint from A."""
    if 2 * k > n:
        raise ValueError("need 2k <= n")
    subs = colex_subsets(n, k)
    if len(subs) > MAX_VERTICES:
        raise ValueError("slice too large")
    masks = np.array([sum(1 << (v - 1) for v in s) for s in subs], dtype=np.int64)
    adj = ((masks[:, None] & masks[None, :]) == 0).astype(np.float64)
    return adj / math.comb(n - k, k)


def disjointness_operator(n: int, k: int) -> np.ndarray:
    """Walk on [n]_k: move from a to a uniform tuple with disjoint value set."""
    if 2 * k > n:
        raise ValueError("need 2k <= n")
    tuples = enumerate_tuples(n, k)
    if len(tuples) > MAX_VERTICES:
        raise ValueError("tuple space too large")
    masks = np.array([sum(1 << (v - 1) for v in t) for t in tuples], dtype=np.int64)
    adj = ((masks[:, None] & masks[None, :]) == 0).astype(np.float64)
    return adj / math.perm(n - k, k)


@dataclass
class SpectrumEntry:
    eigenvalue: float
    multiplicity: int
    level: int


def _cluster(values: np.ndarray, tol: float = EIG_TOL) -> list:
    out: list = []
    for v in np.sort(values)[::-1]:
        if out and abs(out[-1][0] - v) <= tol:
            out[-1][1] += 1
        else:
            out.append([float(v), 1])
    return out


def spectrum_by_level(op: np.ndarray, bases: list) -> list:
    """Eigenvalues of a symmetric operator on each level subspace."""
    entries = []
    for t, q in enumerate(bases):
        if q.shape[1] == 0:
            continue
        block = q.T @ op @ q
        vals = np.linalg.eigvalsh((block + block.T) / 2)
        for val, mult in _cluster(vals):
            entries.append(SpectrumEntry(val, mult, t))
    return entries


def kneser_spectrum(n: int, k: int) -> list:
    return spectrum_by_level(kneser_operator(n, k), slice_level_bases(n, k))


def kneser_level_eigenvalue(n: int, k: int, t: int) -> Fraction:
    """Closed form (-1)^t C(n-k-t, k-t) / C(n-k, k) for the level-t eigenvalue."""
    return Fraction((-1) ** t * math.comb(n - k - t, k - t), math.comb(n - k, k))


def disjointness_spectrum(n: int, k: int) -> list:
    return spectrum_by_level(disjointness_operator(n, k), tuple_level_bases(n, k))


@dataclass
class DisjointnessReport:
    n: int
    k: int
    level_eigenvalues: list
    allowed: tuple
    norm: float
    bound: float

    @property
    def dichotomy_holds(self) -> bool:
        return all(min(abs(v - a) for a in self.allowed) <= EIG_TOL for v in self.level_eigenvalues)


def disjointness_level_norm(n: int, k: int, report: bool = False):
    """Largest |eigenvalue| of D_{n,k} on its top level k."""
    entries = [e for e in disjointness_spectrum(n, k) if e.level == k]
    vals = [e.eigenvalue for e in entries]
    norm = max((abs(v) for v in vals), default=0.0)
    if not report:
        return norm
    special = (-1) ** k / math.comb(n - k, k)
    return DisjointnessReport(n, k, vals, (0.0, special), norm, (2 * k / n) ** k)


# ---------------------------------------------------------------- conjugacy classes


@dataclass
class ClassProfile:
    cycle_type: tuple
    size: int
    mu_sn: Fraction
    mu_an: Fraction | None
    cycle_counts: dict = field(default_factory=dict)
    ambient: str = "S_n"

    @property
    def even(self) -> bool:
        return self.mu_an is not None

    @property
    def mu(self) -> Fraction:
        return self.mu_an if self.ambient == "A_n" else self.mu_sn


def class_profile(lam: Sequence[int], ambient: str = "S_n") -> ClassProfile:
    lam = as_partition(lam)
    n = sum(lam)
    even = sign_of_partition(lam) == 1
    if ambient == "A_n" and not even:
        raise ValueError(f"class {lam} is odd, so it is not contained in A_n")
    if ambient not in ("S_n", "A_n"):
        raise ValueError(f"unknown ambient {ambient!r}")
    mu = Fraction(1, centralizer_order(lam))
    mu_an = 2 * mu if even and n >= 2 else (mu if even else None)
    return ClassProfile(lam, class_size(lam), mu, mu_an, multiplicities(lam), ambient)


def delete_cycle(lam: Sequence[int], i: int) -> tuple:
    lam = list(as_partition(lam))
    if i not in lam:
        raise ValueError(f"no {i}-cycle in {tuple(lam)}")
    lam.remove(i)
    return tuple(lam)


def deletion_ratio(lam: Sequence[int], i: int) -> Fraction:
    """mu(C') / mu(C) for C' = C with one i-cycle removed, each measured in its own S_m.

    Equals i * n_i(C) by the centraliser formula.
    """
    lam = as_partition(lam)
    rest = delete_cycle(lam, i)
    mu = Fraction(1, centralizer_order(lam))
    mu_rest = Fraction(1, centralizer_order(rest)) if rest else Fraction(1)
    return mu_rest / mu


def growth_exponent(lam: Sequence[int]) -> float:
    """Smallest f with n_i <= f^i for every i."""
    return max(m ** (1.0 / i) for i, m in multiplicities(as_partition(lam)).items())


@dataclass
class ClassCertificate:
    cycle_type: tuple
    growth: float
    certified: bool
    r: float
    depth: int
    violations: dict


def class_global_certificate(lam: Sequence[int], f: float) -> ClassCertificate:
    """If n_i(C) <= f^i for all i, C is (2f, n/4)-global in density form."""
    lam = as_partition(lam)
    n = sum(lam)
    counts = multiplicities(lam)
    bad = {i: m for i, m in counts.items() if m > f**i + 1e-12}
    return ClassCertificate(lam, growth_exponent(lam), not bad, 2 * f, n // 4, bad)


@dataclass
class DyadicBucket:
    r: int
    classes: list
    mu_an: Fraction
    mu_sn: Fraction
    bound: float | None

    @property
    def margin(self) -> float | None:
        return None if self.bound is None else self.bound - float(self.mu_an)


def dyadic_tail_report(n: int) -> list:
    """Partition the even classes by dyadic growth r/2 < f_C <= r (r = 1, 2, 4, ...).

    Classes in bucket r >= 2 are certified (2r, n/4)-global and fail the
    certificate for (r, n/4).  Bucket r = 1 holds the classes with every
    n_i <= 1.  The bound (8/r)^{r/2} is attached to every r >= 2.
    """
    if n > 12:
        raise ValueError("dyadic tails limited to n <= 12")
    buckets: dict = {}
    for lam in partitions(n):
        if sign_of_partition(lam) != 1:
            continue
        g = growth_exponent(lam)
        r = 1
        while r < g - 1e-12:
            r *= 2
        buckets.setdefault(r, []).append(lam)
    out = []
    for r in sorted(buckets):
        classes = buckets[r]
        mu_sn = sum((Fraction(1, centralizer_order(lam)) for lam in classes), Fraction(0))
        mu_an = 2 * mu_sn if n >= 2 else mu_sn
        bound = (8 / r) ** (r / 2) if r >= 2 else None
        out.append(DyadicBucket(r, classes, mu_an, mu_sn, bound))
    return out


def class_ranks(n: int, lams: Sequence[Sequence[int]]) -> np.ndarray:
    labels, classes = cycle_type_table(n)
    want = [classes.index(as_partition(lam)) for lam in lams]
    return np.flatnonzero(np.isin(labels, want))


def _restriction_counts(member_img: np.ndarray, n: int, t: int) -> np.ndarray:
    keys = enumerate_tuples(n, t)
    out = np.zeros((len(keys), len(keys)), dtype=np.int64)
    for a, key in enumerate(keys):
        cols = np.array(key, dtype=np.int64) - 1
        jdx = tuple_rank_rows(member_img[:, cols], n) if t else np.zeros(len(member_img), dtype=np.int64)
        out[a] = np.bincount(jdx, minlength=len(keys))
    return out


@dataclass
class SimplificationAudit:
    checked: int
    violations: list
    worst_ratio: Fraction

    @property
    def passed(self) -> bool:
        return not self.violations


def simplification_audit(ranks: np.ndarray, n: int, max_depth: int = 2) -> SimplificationAudit:
    """For a normal A inside A_n, check mu(A_{I->J}) <= (n-d)/(n-2d) mu(A_{I'->J'}).

    I'->J' deletes one pair x->y with x not in J or y not in I.  Densities are
    exact rationals relative to U cap A_n.
    """
    img = images_table(n)
    member_img = img[np.asarray(ranks, dtype=np.int64)]
    even_img = img[_even_mask(n)]
    counts = {t: _restriction_counts(member_img, n, t) for t in range(max_depth + 1)}
    sizes = {t: _restriction_counts(even_img, n, t) for t in range(max_depth + 1)}
    index = {t: {key: k for k, key in enumerate(enumerate_tuples(n, t))} for t in range(max_depth + 1)}

    def density(I, J):
        t = len(I)
        a, b = index[t][I], index[t][J]
        return Fraction(int(counts[t][a, b]), int(sizes[t][a, b]))

    checked = 0
    violations = []
    worst = Fraction(0)
    for d in range(1, max_depth + 1):
        if 2 * d >= n:
            break
        factor = Fraction(n - d, n - 2 * d)
        for I in enumerate_tuples(n, d):
            for J in enumerate_tuples(n, d):
                lhs = density(I, J)
                for p in range(d):
                    x, y = I[p], J[p]
                    if x in J and y in I:
                        continue
                    I2 = I[:p] + I[p + 1:]
                    J2 = J[:p] + J[p + 1:]
                    rhs = density(I2, J2)
                    checked += 1
                    if rhs > 0:
                        worst = max(worst, lhs / (factor * rhs))
                    if lhs > factor * rhs:
                        violations.append((I, J, p))
    return SimplificationAudit(checked, violations, worst)


def _even_mask(n: int) -> np.ndarray:
    return sign_table(n) == 1
