"""Applications on small symmetric groups: diameters, growth, mixing, product
mixing, 3-term progressions, covering by cosets, and the example families."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from . import _kernels
from .algebra import (
    CoefficientMatrix,
    GroupFunction,
    convolve,
    degree_part,
    inner,
    level_part,
    linear_canonical,
    linear_inner,
    lp_norm,
)
from .globalness import find_global_restriction, global_audit
from .permcore import (
    Permutation,
    compose_ranks,
    enumerate_tuples,
    even_ranks,
    images_table,
    inverse_ranks,
    sign_table,
    tuple_rank_rows,
)

MAX_EXP_N = 8
INFINITY = math.inf


# ---------------------------------------------------------------- sets as rank arrays


def as_ranks(ranks: Sequence[int]) -> np.ndarray:
    return np.unique(np.asarray(list(ranks), dtype=np.int64))


def mask_of(ranks: Sequence[int], n: int) -> np.ndarray:
    m = np.zeros(math.factorial(n), dtype=bool)
    m[np.asarray(list(ranks), dtype=np.int64)] = True
    return m


def measure(ranks: Sequence[int], n: int, ambient: str = "S_n") -> Fraction:
    N = math.factorial(n)
    size = len(as_ranks(ranks))
    return Fraction(size, N // 2 if ambient == "A_n" and n >= 2 else N)


def is_symmetric(ranks: Sequence[int], n: int) -> bool:
    r = as_ranks(ranks)
    return bool(np.array_equal(np.sort(inverse_ranks(n)[r]), r))


def in_alternating(ranks: Sequence[int], n: int) -> bool:
    return bool(np.all(sign_table(n)[as_ranks(ranks)] == 1))


def ambient_of(ranks: Sequence[int], n: int) -> str:
    return "A_n" if in_alternating(ranks, n) else "S_n"


def set_product(X: Sequence[int], Y: Sequence[int], n: int) -> np.ndarray:
    """Ranks of {x y : x in X, y in Y} (x applied after y)."""
    X = as_ranks(X)
    Y = as_ranks(Y)
    if X.size == 0 or Y.size == 0:
        return np.zeros(0, dtype=np.int64)
    g = mask_of(Y, n).astype(np.float64)
    hits = _kernels.left_weighted_sum(n, inverse_ranks(n)[X], np.ones(X.size), g)
    return np.flatnonzero(hits > 0.5)


def certificate(ranks: Sequence[int], n: int, r: float = 4.0, depth: int = 2) -> dict:
    """Density-form globalness audit of a set, embedded in experiment reports."""
    r_ = as_ranks(ranks)
    if r_.size == 0:
        return {"available": False, "reason": "empty set"}
    f = GroupFunction.indicator(n, r_)
    rep = global_audit(f, r, min(depth, n), form="density", ambient=ambient_of(r_, n))
    out = rep.summary()
    out["available"] = True
    return out


# ---------------------------------------------------------------- covering number and layers


@dataclass
class CoveringReport:
    n: int
    ambient: str
    covering_number: float
    profile: list  # mu(A^m) for m = 1, 2, ...
    generated_size: int
    symmetric: bool
    layers: list = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {
            "n": self.n,
            "ambient": self.ambient,
            "covering_number": "inf" if math.isinf(self.covering_number) else int(self.covering_number),
            "profile": [str(p) for p in self.profile],
            "generated_size": self.generated_size,
            "symmetric": self.symmetric,
        }


def power_layers(ranks: Sequence[int], n: int, max_power: int = 64, target: int | None = None) -> list:
    """[A, A^2, ...] as rank arrays, stopping at `target` size, a repeat of A^{m-2}, or max_power."""
    A = as_ranks(ranks)
    layers = [A]
    while len(layers) < max_power:
        cur = layers[-1]
        if target is not None and cur.size == target:
            break
        if len(layers) >= 3 and np.array_equal(cur, layers[-3]):
            break
        layers.append(set_product(A, cur, n))
    return layers


def covering_number(ranks: Sequence[int], n: int, directed: bool = False, max_power: int = 64) -> CoveringReport:
    """Least m with A^m equal to the ambient group (A_n if A is even, else S_n)."""
    A = as_ranks(ranks)
    if n > MAX_EXP_N:
        raise ValueError(f"covering numbers limited to n <= {MAX_EXP_N}")
    if A.size == 0:
        raise ValueError("empty set")
    sym = is_symmetric(A, n)
    if not sym and not directed:
        raise ValueError("set is not symmetric (A != A^-1); pass directed=True to proceed")
    ambient = ambient_of(A, n)
    N = math.factorial(n)
    size = N // 2 if ambient == "A_n" and n >= 2 else N
    layers = power_layers(A, n, max_power, target=size)
    profile = [Fraction(int(layer.size), size) for layer in layers]
    cn = float(len(layers)) if layers[-1].size == size else INFINITY
    generated = size
    if math.isinf(cn):
        # close under products to get the generated subgroup
        grp = np.unique(np.concatenate(layers + [np.array([0])]))
        while True:
            nxt = np.union1d(grp, set_product(grp, A, n))
            if nxt.size == grp.size:
                break
            grp = nxt
        generated = int(grp.size)
    return CoveringReport(n, ambient, cn, profile, int(generated), sym, layers)


def layers_consistent(report: CoveringReport, ranks: Sequence[int], n: int) -> bool:
    """A^m A = A^{m+1} for every stored layer, recomputed from scratch."""
    A = as_ranks(ranks)
    for prev, nxt in zip(report.layers, report.layers[1:]):
        if not np.array_equal(set_product(prev, A, n), nxt):
            return False
    return True


def slow_generating_set(n: int, fixed: int) -> np.ndarray:
    """Even permutations fixing 1..fixed pointwise, plus consecutive 3-cycles and inverses."""
    img = images_table(n)
    evens = even_ranks(n)
    stab = evens[np.all(img[evens, :fixed] == np.arange(fixed), axis=1)] if fixed else evens
    extra = []
    for i in range(1, n - 1):
        c = Permutation.from_cycles([(i, i + 1, i + 2)], n)
        extra += [c.rank(), c.inverse().rank()]
    return as_ranks(list(stab) + extra)


# ---------------------------------------------------------------- Schreier graphs


def schreier_diameter(ranks: Sequence[int], n: int, ell: int, max_vertices: int = 20_000) -> dict:
    """Diameter of the graph on [n]_ell with edges I -- sigma(I), sigma in A."""
    A = as_ranks(ranks)
    tuples = np.asarray(enumerate_tuples(n, ell), dtype=np.int64).reshape(-1, ell) - 1
    V = tuples.shape[0]
    if V > max_vertices:
        raise ValueError(f"{V} vertices exceeds the all-pairs cap {max_vertices}")
    img = images_table(n).astype(np.int64)
    rows, cols = [], []
    src = np.arange(V)
    for a in A:
        dest = tuple_rank_rows(img[a][tuples], n)
        rows.append(src)
        cols.append(dest)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    adj = csr_matrix((np.ones(rows.size), (rows, cols)), shape=(V, V))
    dist = shortest_path(adj, method="D", directed=not is_symmetric(A, n), unweighted=True)
    if np.isinf(dist).any():
        reach = int(np.isfinite(dist[0]).sum())
        return {"diameter": INFINITY, "vertices": V, "reachable_from_first": reach}
    return {"diameter": int(dist.max()), "vertices": V, "reachable_from_first": V}


# ---------------------------------------------------------------- Bogolyubov


def stabilizer_mask(n: int, I: Sequence[int], ambient: str = "A_n") -> np.ndarray:
    """Pointwise stabiliser U_I of the 1-indexed set I, intersected with the ambient."""
    img = images_table(n)
    mask = np.ones(img.shape[0], dtype=bool)
    for i in I:
        mask &= img[:, i - 1] == i - 1
    if ambient == "A_n":
        mask &= sign_table(n) == 1
    return mask


def bogolyubov_search(ranks: Sequence[int], n: int, M: int = 1) -> dict:
    """Smallest-|I| pointwise stabiliser U_I inside A^m, scanning m = 1..8M."""
    A = as_ranks(ranks)
    if n > 7:
        raise ValueError("Bogolyubov search limited to n <= 7")
    if not is_symmetric(A, n):
        raise ValueError("A must be symmetric")
    ambient = ambient_of(A, n)
    mu = float(measure(A, n, ambient))
    budget = mu ** (5 * M)
    layers = power_layers(A, n, 8 * M)
    while len(layers) < 8 * M:  # stabilised early; extend periodically
        layers.append(layers[-2])
    best = None
    first_hit = None
    for m, layer in enumerate(layers, start=1):
        lm = mask_of(layer, n)
        for t in range(n + 1):
            if math.factorial(n - t) / math.factorial(n) < budget and t > 0:
                break
            found = None
            for I in itertools.combinations(range(1, n + 1), t):
                stab = stabilizer_mask(n, I, ambient)
                if np.all(lm[stab]):
                    found = I
                    break
            if found is not None:
                if first_hit is None:
                    first_hit = (m, found)
                if m == len(layers):
                    best = found
                break
    return {
        "n": n,
        "M": M,
        "ambient": ambient,
        "mu": str(measure(A, n, ambient)),
        "budget": budget,
        "power": 8 * M,
        "found": None if best is None else list(best),
        "first_power": None if first_hit is None else first_hit[0],
        "first_I": None if first_hit is None else list(first_hit[1]),
        "size_of_power": int(layers[-1].size),
    }


# ---------------------------------------------------------------- growth


def growth_bound(alpha: float, r: float, n: int, c: float, C: float) -> float:
    M = C**2 * r**4 * math.log(1 / alpha) ** 2 / n
    return 1.0 / (1 + c + 4 * M * 2 ** (2 * M)) ** 2


def growth_report(
    ranks: Sequence[int], n: int, r: float = 4.0, grid: Sequence[tuple] = ((0.01, 0.1), (0.01, 1.0), (0.1, 1.0))
) -> dict:
    A = as_ranks(ranks)
    ambient = ambient_of(A, n)
    sq = set_product(A, A, n)
    alpha = measure(A, n, ambient)
    mu2 = measure(sq, n, ambient)
    bounds = {}
    if 0 < alpha < 1:
        for c, C in grid:
            bounds[f"c={c},C={C}"] = growth_bound(float(alpha), r, n, c, C)
    return {
        "n": n,
        "ambient": ambient,
        "mu": str(alpha),
        "mu_square": str(mu2),
        "mu_square_float": float(mu2),
        "lemma_bounds": bounds,
        "certificate": certificate(A, n, r),
    }


# ---------------------------------------------------------------- mixing


def level_zero(f: GroupFunction, convention: str = "auto") -> GroupFunction:
    """mean: E[f] 1.  level0: E[f] 1 + <f, sign> sign.  auto: level0 for even-supported f."""
    if convention == "auto":
        convention = "level0" if np.all(sign_table(f.n)[f.support()] == 1) else "mean"
    base = GroupFunction.constant(f.n, f.mean())
    if convention == "mean":
        return base
    if convention == "level0":
        sgn = GroupFunction.sign(f.n, f.exact)
        return base + sgn * inner(f, sgn)
    raise ValueError(f"unknown convention {convention!r}")


@dataclass
class WalkReport:
    convention: str
    coverage: list
    deviation: list
    linear_norm: list
    runtime: list

    @property
    def monotone(self) -> bool:
        dev = self.deviation
        return all(b <= a + 1e-9 * max(1.0, a) for a, b in zip(dev, dev[1:]))

    @property
    def coverage_monotone(self) -> bool:
        cov = self.coverage
        return all(b >= a - 1e-12 for a, b in zip(cov, cov[1:]))

    def summary(self) -> dict:
        return {
            "convention": self.convention,
            "coverage": self.coverage,
            "deviation": self.deviation,
            "linear_norm": self.linear_norm,
            "monotone": self.monotone,
        }


def mixing_profile(f: GroupFunction, steps: int, convention: str = "auto", linear: bool = False) -> WalkReport:
    """Deviation ||f^{*m} - P_0 f^{*m}||_2 for m = 1..steps (f a probability density)."""
    if f.exact:
        f = f.to_float()
    if np.any(f.values < -1e-12) or abs(f.mean() - 1) > 1e-9:
        raise ValueError("mixing profiles need f >= 0 with E f = 1")
    conv = convention
    if conv == "auto":
        conv = "level0" if np.all(sign_table(f.n)[f.support()] == 1) else "mean"
    ambient_size = math.factorial(f.n) // (2 if conv == "level0" and f.n >= 2 else 1)
    cur = f
    cov, dev, lin, rt = [], [], [], []
    for m in range(1, steps + 1):
        t0 = time.perf_counter()
        if m > 1:
            cur = convolve(f, cur)
        diff = cur - level_zero(cur, conv)
        cov.append(int(np.count_nonzero(cur.values > 1e-9)) / ambient_size)
        dev.append(lp_norm(diff, 2))
        if linear:
            lin.append(lp_norm(degree_part(cur, 1), 2))
        rt.append(time.perf_counter() - t0)
    return WalkReport(conv, cov, dev, lin, rt)


# ---------------------------------------------------------------- product mixing


def max_level(n: int) -> int:
    return n // 2


def product_mixing_defect(f: GroupFunction, g: GroupFunction, h: GroupFunction) -> dict:
    """<f*g, h>, its main term, and the per-level pieces <f * P_d g, P_d h>."""
    fg = convolve(f, g)
    total = inner(fg, h)
    sgn = GroupFunction.sign(f.n, f.exact)
    main = f.mean() * g.mean() * h.mean() + inner(f, sgn) * inner(g, sgn) * inner(h, sgn)
    levels = {}
    for d in range(max_level(f.n) + 1):
        gd = level_part(g, d)
        hd = level_part(h, d)
        levels[d] = inner(convolve(f, gd), hd)
    recon = sum(levels.values())
    scale = lp_norm(f.to_float(), 1) * lp_norm(g.to_float(), 1) * lp_norm(h.to_float(), 1)
    return {
        "total": total,
        "main": main,
        "defect": total - main,
        "levels": levels,
        "reconstruction_error": abs(float(recon) - float(total)),
        "level0_equals_main": abs(float(levels[0]) - float(main)),
        "bound": 0.01 * scale,
    }


def set_density(ranks: Sequence[int], n: int, exact: bool = False) -> GroupFunction:
    """n! 1_A / |A| (expectation one over S_n)."""
    return GroupFunction.density(n, as_ranks(ranks), exact)


def triple_probability(A: Sequence[int], B: Sequence[int], C: Sequence[int], n: int) -> dict:
    """Pr_{a, b ~ A_n}[a in A, b in B, ab in C] by convolution and by direct counting."""
    A, B, C = as_ranks(A), as_ranks(B), as_ranks(C)
    half = math.factorial(n) // 2
    f, g, h = set_density(A, n, True), set_density(B, n, True), set_density(C, n, True)
    via = inner(convolve(f, g), h) * measure(A, n, "A_n") * measure(B, n, "A_n") * measure(C, n, "A_n") / 2
    cmask = mask_of(C, n)
    count = 0
    for a in A:
        count += int(cmask[compose_ranks(int(a), B, n)].sum())
    direct = Fraction(count, half * half)
    return {"convolution": via, "direct": direct, "equal": via == direct, "count": count}


def product_free_set(n: int, x: int, I: Sequence[int], ambient: str = "A_n") -> np.ndarray:
    """{sigma : sigma(x) in I, sigma(I) disjoint from I}; product-free when x is not in I."""
    img = images_table(n)
    Iz = np.asarray(I, dtype=np.int64) - 1
    mask = np.isin(img[:, x - 1], Iz)
    mask &= ~np.isin(img[:, Iz], Iz).any(axis=1)
    if ambient == "A_n":
        mask &= sign_table(n) == 1
    return np.flatnonzero(mask)


# ---------------------------------------------------------------- 3-term progressions


def squares(ranks: Sequence[int], n: int) -> np.ndarray:
    r = as_ranks(ranks)
    return compose_ranks(r, r, n)


def find_3ap(ranks: Sequence[int], n: int) -> dict:
    """A triple (x, y, z) in A with x z = y^2, not all equal, or a certificate that none exists.

    When none exists, squaring is injective on A: a collision x^2 = y^2 with
    x != y would give the progression (x, y, x).
    """
    A = as_ranks(ranks)
    if A.size > 100_000:
        raise ValueError("set too large for the pair scan")
    sq = squares(A, n)
    fibre: dict = {}
    for y, s in zip(A, sq):
        fibre.setdefault(int(s), []).append(int(y))
    is_square = np.zeros(math.factorial(n), dtype=bool)
    is_square[sq] = True
    for x in A:
        prods = compose_ranks(int(x), A, n)
        for k in np.flatnonzero(is_square[prods]):
            z = int(A[k])
            for y in fibre[int(prods[k])]:
                if not (x == y == z):
                    return {"found": True, "triple": (int(x), y, z), "squaring_injective": None}
    injective = len(fibre) == A.size
    return {"found": False, "triple": None, "squaring_injective": injective}


# ---------------------------------------------------------------- approximate groups and covering


def approximate_group_witness(ranks: Sequence[int], n: int) -> dict:
    """Greedy X with A^2 inside X A; K = |X| (an upper bound on the least such K)."""
    A = as_ranks(ranks)
    if 0 not in set(A.tolist()):
        raise ValueError("approximate groups must contain the identity")
    if not is_symmetric(A, n):
        raise ValueError("approximate groups must be symmetric")
    A2 = set_product(A, A, n)
    uncovered = set(A2.tolist())
    X: list = []
    candidates = A2.tolist()
    while uncovered:
        best, best_cov = None, set()
        for x in candidates:
            cov = uncovered.intersection(compose_ranks(int(x), A, n).tolist())
            if len(cov) > len(best_cov):
                best, best_cov = x, cov
        X.append(int(best))
        uncovered -= best_cov
    return {"K": len(X), "X": X, "square_size": int(A2.size)}


def ruzsa_cover_demo(ranks: Sequence[int], n: int, r: float = 2.0) -> dict:
    """Cover A by cosets z U_I of a pointwise stabiliser found by densification.

    A' = {sigma in A : sigma(I) = J}; Z is a maximal family with the
    translates z A'^-1 pairwise disjoint.  Every a in A meets some z A'^-1 in
    a A'^-1, hence a lies in z A'^-1 A' which is inside z U_I.
    """
    A = as_ranks(ranks)
    if n > 7:
        raise ValueError("Ruzsa covering demo limited to n <= 7")
    K = approximate_group_witness(A, n)["K"]
    search = find_global_restriction(A, n, r, "S_n")
    I, J = search.key.I, search.key.J
    img = images_table(n)
    sel = np.ones(A.size, dtype=bool)
    for i, j in zip(I, J):
        sel &= img[A, i - 1] == j - 1
    A_prime = A[sel]
    A_prime_inv = inverse_ranks(n)[A_prime]
    taken = np.zeros(math.factorial(n), dtype=bool)
    Z: list = []
    for z in A:
        tr = compose_ranks(int(z), A_prime_inv, n)
        if not taken[tr].any():
            taken[tr] = True
            Z.append(int(z))
    H = np.flatnonzero(stabilizer_mask(n, I, "S_n"))
    covered = np.zeros(math.factorial(n), dtype=bool)
    for z in Z:
        covered[compose_ranks(z, H, n)] = True
    covers = bool(covered[A].all())
    bound_basic = Fraction(K * A.size, A_prime.size)
    bound_k6 = Fraction(K**6 * A.size, H.size)
    return {
        "K": K,
        "I": list(I),
        "J": list(J),
        "H_size": int(H.size),
        "A_prime_size": int(A_prime.size),
        "Z": Z,
        "covers": covers,
        "bound_K_over_A_prime": str(bound_basic),
        "within_basic_bound": len(Z) <= bound_basic,
        "bound_K6": str(bound_k6),
        "within_K6_bound": len(Z) <= bound_k6,
        "restriction_density": search.density,
    }


# ---------------------------------------------------------------- band example


@dataclass(frozen=True)
class BandParams:
    n: int
    ell: int

    def __post_init__(self):
        if self.n % 2 or self.n < 2 or self.n > MAX_EXP_N:
            raise ValueError("band sets need even n <= 8")
        if not 1 <= self.ell <= self.k:
            raise ValueError(f"ell must lie in 1..{self.k}")

    @property
    def k(self) -> int:
        return self.n // 2

    @property
    def rho(self) -> Fraction:
        return Fraction(4 * self.ell, self.n) - 1


def band_measure_formula(p: BandParams) -> Fraction:
    k, l = p.k, p.ell
    f = math.factorial
    return Fraction(f(k) ** 4, f(p.n) * f(l) ** 2 * f(k - l) ** 2)


def band_triple_terms(p: BandParams) -> dict:
    k, l = p.k, p.ell
    f = math.factorial
    out = {}
    for a in range(0, l + 1):
        parts = (a, l - a, k - 2 * l + a, 3 * l - k - a)
        if min(parts) < 0:
            continue
        num = f(k) ** 2 * f(l) ** 2 * f(k - l) ** 2
        den = f(a) * f(l - a) ** 3 * f(k - 2 * l + a) ** 3 * f(3 * l - k - a)
        out[a] = Fraction(num, den)
    return out


@dataclass
class BandSet:
    params: BandParams
    ranks: np.ndarray
    mu: Fraction
    mu_formula: Fraction
    triple_count: int
    triple_formula: Fraction
    triple_count_constant: bool

    @property
    def density(self) -> GroupFunction:
        return GroupFunction.density(self.params.n, self.ranks)

    def summary(self) -> dict:
        return {
            "n": self.params.n,
            "k": self.params.k,
            "ell": self.params.ell,
            "rho": str(self.params.rho),
            "mu": str(self.mu),
            "mu_formula": str(self.mu_formula),
            "mu_matches": self.mu == self.mu_formula,
            "N": self.triple_count,
            "N_formula": str(self.triple_formula),
            "N_matches": self.triple_count == self.triple_formula,
            "N_independent_of_sigma": self.triple_count_constant,
            "inner_fff": str(Fraction(self.triple_count) / (self.mu**2 * math.factorial(self.params.n))),
        }


def make_band(params: BandParams, probes: int = 3) -> BandSet:
    """A = {sigma : |sigma([k]) cap [k]| = ell}, with closed forms checked by enumeration."""
    n, k = params.n, params.k
    img = images_table(n)
    overlap = (img[:, :k] < k).sum(axis=1)
    ranks = np.flatnonzero(overlap == params.ell)
    mu = Fraction(int(ranks.size), math.factorial(n))
    members = mask_of(ranks, n)
    counts = set()
    for s in ranks[np.linspace(0, ranks.size - 1, probes).astype(int)]:
        counts.add(int(members[compose_ranks(ranks, int(s), n)].sum()))
    N = min(counts)
    return BandSet(
        params, ranks, mu, band_measure_formula(params), N, sum(band_triple_terms(params).values(), Fraction(0)),
        len(counts) == 1,
    )


def band_pattern(n: int) -> np.ndarray:
    """The +-1 block matrix [[J, -J], [-J, J]] with k x k blocks."""
    k = n // 2
    sgn = np.where(np.arange(n) < k, 1.0, -1.0)
    return np.outer(sgn, sgn)


def band_linear_report(band: BandSet, steps: int = 3) -> dict:
    """||(f^{*m})^{=1}||_2 against rho^m sqrt(n-1) and the canonical matrix pattern."""
    n = band.params.n
    rho = float(band.params.rho)
    f = band.density
    cur = f
    norms, targets, pattern_err = [], [], []
    M = band_pattern(n)
    for m in range(1, steps + 1):
        if m > 1:
            cur = convolve(f, cur)
        lin = degree_part(cur, 1)
        norms.append(lp_norm(lin, 2))
        targets.append(abs(rho) ** m * math.sqrt(n - 1))
        coeffs = linear_canonical(cur).entries
        pattern_err.append(float(np.abs(coeffs - rho**m * (n - 1) / n * M).max()))
    return {"norms": norms, "targets": targets, "pattern_error": pattern_err}


def sharpness_statistic(params: BandParams, steps: int = 3) -> dict:
    """The normalised linear statistic phi with M_phi = sqrt(n-1)/n * pattern."""
    n = params.n
    band = make_band(params)
    rho = float(params.rho)
    phi_coeffs = CoefficientMatrix(n, math.sqrt(n - 1) / n * band_pattern(n))
    phi = phi_coeffs.reconstruct()
    norm_formula = math.sqrt(linear_inner(phi_coeffs, phi_coeffs))
    norm_direct = lp_norm(phi, 2)
    f = band.density
    cur = GroupFunction.constant(n, 1.0)
    means, second, targets, level2 = [], [], [], []
    phi2 = phi * phi
    for m in range(0, steps + 1):
        if m == 1:
            cur = f
        elif m > 1:
            cur = convolve(f, cur)
        means.append(float(inner(cur, phi)))
        second.append(float(inner(cur, phi2)))
        targets.append(rho**m * math.sqrt(n - 1) if m else 0.0)
        level2.append(lp_norm(degree_part(cur, 2), 2) if m else 0.0)
    return {
        "n": n,
        "ell": params.ell,
        "rho": str(params.rho),
        "phi_norm_formula": norm_formula,
        "phi_norm_direct": norm_direct,
        "means": means,
        "targets": targets,
        "second_moments": second,
        "level2_norms": level2,
    }


# ---------------------------------------------------------------- level-d example


def make_leveld_example(n: int, S: Sequence[int], audit: bool = True) -> dict:
    """A = {sigma : sigma(S) inside [n/2]} with exact measure and a 4-biglobal audit."""
    S = sorted(set(int(s) for s in S))
    if n % 2 or n > MAX_EXP_N or len(S) > n // 2 or not all(1 <= s <= n for s in S):
        raise ValueError("need even n <= 8 and S inside [n] with |S| <= n/2")
    img = images_table(n)
    half = n // 2
    mask = np.ones(img.shape[0], dtype=bool)
    for s in S:
        mask &= img[:, s - 1] < half
    ranks = np.flatnonzero(mask)
    mu = Fraction(int(ranks.size), math.factorial(n))
    s = len(S)
    formula = Fraction(math.perm(half, s), math.perm(n, s))
    out = {
        "n": n,
        "S": S,
        "mu": str(mu),
        "mu_formula": str(formula),
        "mu_matches": mu == formula,
        "log2_ratio_to_2^-s": math.log2(float(mu)) + s,
        "ranks": ranks,
    }
    if audit:
        rep = global_audit(GroupFunction.indicator(n, ranks), 4.0, min(2, n), biglobal=True, ambient="S_n")
        out["biglobal_audit"] = rep.summary()
        out["biglobal_passed"] = rep.passed
    return out


# ---------------------------------------------------------------- fixtures


def three_cycles(n: int) -> np.ndarray:
    out = []
    for a, b, c in itertools.permutations(range(1, n + 1), 3):
        if a < b and a < c:
            out.append(Permutation.from_cycles([(a, b, c)], n).rank())
    return as_ranks(out)


def n_cycle_pair(n: int) -> np.ndarray:
    c = Permutation.from_cycles([tuple(range(1, n + 1))], n)
    return as_ranks([c.rank(), c.inverse().rank()])
