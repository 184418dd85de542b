"""The greedy/forgetful coupling between S_n and the box [n]^n.

Exact work uses one integer matrix W with W[sigma, x] = n! n^n C(sigma, x),
which equals prod_i (n-i+1 if x_i = sigma(i) else 1) on the support
{x : x_i in sigma({1..i})}.  Then T_C = W^T / n! and T_C* = W / n^n, and every
derived operator is held as an integer matrix over one common denominator.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import sparse

from .algebra import GroupFunction, degree_part, inner, isotypic_decomposition
from .boxspace import BoxFunction, box_global_audit, box_index
from .combinatorics import tuple_level_bases
from .globalness import global_audit
from .permcore import (
    Permutation,
    enumerate_tuples,
    images_table,
    multiplication_table,
    rank,
    rank_rows,
)

EXACT_COUPLING_N = 5
FLOAT_COUPLING_N = 6
INT64_SAFE = 2**62


# ---------------------------------------------------------------- samplers


def sample_greedy_batch(xs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Greedy permutations for a batch of 1-indexed box points (rows)."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.int64))
    batch, n = xs.shape
    used = np.zeros((batch, n), dtype=bool)
    out = np.zeros((batch, n), dtype=np.int64)
    rows = np.arange(batch)
    for i in range(n):
        want = xs[:, i] - 1
        free = ~used[rows, want]
        pick = want.copy()
        clash = np.flatnonzero(~free)
        if clash.size:
            k = rng.integers(0, n - i, size=clash.size)
            avail = ~used[clash]
            order = np.cumsum(avail, axis=1) - 1
            hit = avail & (order == k[:, None])
            pick[clash] = np.argmax(hit, axis=1)
        out[:, i] = pick + 1
        used[rows, pick] = True
    return out


def sample_greedy(x: Sequence[int], rng: np.random.Generator) -> Permutation:
    """sigma ~ N(x): keep x_i when it is still free, otherwise draw a free value."""
    return Permutation(sample_greedy_batch(np.asarray([x]), rng)[0])


def sample_forgetful_batch(sigmas: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Box points x ~ N(sigma) for a batch of permutation image rows (1-indexed)."""
    sigmas = np.atleast_2d(np.asarray(sigmas, dtype=np.int64))
    batch, n = sigmas.shape
    out = sigmas.copy()
    for i in range(1, n):
        remember = rng.random(batch) < (n - i) / n
        forget = np.flatnonzero(~remember)
        if forget.size:
            j = rng.integers(0, i, size=forget.size)
            out[forget, i] = sigmas[forget, j]
    return out


def sample_forgetful(sigma: Permutation, rng: np.random.Generator) -> tuple:
    """x ~ N(sigma): remember sigma(i) w.p. (n-i+1)/n, else copy an earlier value."""
    return tuple(int(v) for v in sample_forgetful_batch(np.asarray([sigma.images]), rng)[0])


def greedy_conditional(x: Sequence[int]) -> dict:
    """Exact law N(x) as {sigma images: probability} by branch enumeration."""
    n = len(x)
    out: dict = {}

    def walk(i: int, prefix: tuple, used: frozenset, prob: Fraction) -> None:
        if i == n:
            out[prefix] = out.get(prefix, Fraction(0)) + prob
            return
        if x[i] not in used:
            walk(i + 1, prefix + (x[i],), used | {x[i]}, prob)
            return
        free = [v for v in range(1, n + 1) if v not in used]
        share = prob / len(free)
        for v in free:
            walk(i + 1, prefix + (v,), used | {v}, share)

    walk(0, (), frozenset(), Fraction(1))
    return out


# ---------------------------------------------------------------- joint tables


@dataclass
class CouplingTable:
    n: int
    entries: dict  # (permutation rank, box index) -> Fraction
    source: str = ""

    def total(self) -> Fraction:
        return sum(self.entries.values(), Fraction(0))

    def left_marginal(self) -> dict:
        out: dict = {}
        for (s, _), w in self.entries.items():
            out[s] = out.get(s, Fraction(0)) + w
        return out

    def right_marginal(self) -> dict:
        out: dict = {}
        for (_, x), w in self.entries.items():
            out[x] = out.get(x, Fraction(0)) + w
        return out

    @property
    def left_uniform(self) -> bool:
        m = self.left_marginal()
        N = math.factorial(self.n)
        return len(m) == N and all(v == Fraction(1, N) for v in m.values())

    @property
    def right_uniform(self) -> bool:
        m = self.right_marginal()
        M = self.n**self.n
        return len(m) == M and all(v == Fraction(1, M) for v in m.values())

    def __eq__(self, other) -> bool:
        return isinstance(other, CouplingTable) and self.n == other.n and self.entries == other.entries

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "source": self.source,
            "entries": {f"{s},{x}": str(w) for (s, x), w in sorted(self.entries.items())},
        }


def _check_exact_n(n: int, cap: int = EXACT_COUPLING_N) -> None:
    if not 1 <= n <= cap:
        raise ValueError(f"exact coupling path supports 1 <= n <= {cap}")


def joint_greedy(n: int) -> CouplingTable:
    """C(sigma, x) = n^-n P(sigma | x), enumerating x and the greedy branch tree."""
    _check_exact_n(n)
    scale = Fraction(1, n**n)
    entries: dict = {}
    for x in itertools.product(range(1, n + 1), repeat=n):
        xi = box_index(x, n)
        for images, p in greedy_conditional(x).items():
            entries[(rank(images), xi)] = p * scale
    return CouplingTable(n, entries, "greedy")


def joint_forgetful(n: int) -> CouplingTable:
    """C(sigma, x) = (1/n!) P(x | sigma) from the remember/forget rule."""
    _check_exact_n(n)
    entries: dict = {}
    base = Fraction(1, math.factorial(n))
    for images in itertools.permutations(range(1, n + 1)):
        s = rank(images)
        choices = []
        for i in range(n):
            opts = [(images[i], Fraction(n - i, n))]
            opts += [(images[j], Fraction(1, n)) for j in range(i)]
            choices.append(opts)
        for combo in itertools.product(*choices):
            x = tuple(v for v, _ in combo)
            p = base
            for _, q in combo:
                p *= q
            key = (s, box_index(x, n))
            entries[key] = entries.get(key, Fraction(0)) + p
    return CouplingTable(n, entries, "forgetful")


@dataclass
class JointReport:
    n: int
    identical: bool
    greedy_size: int
    forgetful_size: int
    total_is_one: bool
    left_uniform: bool
    right_uniform: bool
    table: CouplingTable

    @property
    def passed(self) -> bool:
        return self.identical and self.total_is_one and self.left_uniform and self.right_uniform


def joint_exact(n: int) -> JointReport:
    """Build the joint law from both models and compare them entry by entry."""
    g = joint_greedy(n)
    f = joint_forgetful(n)
    return JointReport(
        n, g == f, len(g.entries), len(f.entries), g.total() == 1, g.left_uniform, g.right_uniform, g
    )


# ---------------------------------------------------------------- the integer matrix W


def _support_arrays(n: int):
    """(row ranks, box indices, integer weights) over the support of C."""
    img = images_table(n).astype(np.int64)
    choice = np.array(list(itertools.product(*[range(i + 1) for i in range(n)])), dtype=np.int64)
    choice = choice.reshape(-1, n)
    weights = np.prod(np.where(choice == np.arange(n), n - np.arange(n), 1), axis=1)
    powers = n ** np.arange(n - 1, -1, -1, dtype=np.int64)
    N = img.shape[0]
    xs = img[:, choice]  # (N, n!, n) zero-based values
    boxes = (xs * powers).sum(axis=2)
    rows = np.repeat(np.arange(N), choice.shape[0])
    return rows, boxes.reshape(-1), np.tile(weights, N)


@lru_cache(maxsize=None)
def coupling_matrix(n: int) -> np.ndarray:
    """Dense int64 W, shape (n!, n^n); n <= 5."""
    _check_exact_n(n)
    rows, cols, w = _support_arrays(n)
    W = np.zeros((math.factorial(n), n**n), dtype=np.int64)
    W[rows, cols] = w
    W.setflags(write=False)
    return W


@lru_cache(maxsize=None)
def coupling_matrix_sparse(n: int) -> sparse.csr_matrix:
    """Float CSR W for n <= 6."""
    _check_exact_n(n, FLOAT_COUPLING_N)
    rows, cols, w = _support_arrays(n)
    return sparse.csr_matrix(
        (w.astype(np.float64), (rows, cols)), shape=(math.factorial(n), n**n)
    )


def table_from_matrix(n: int) -> CouplingTable:
    W = coupling_matrix(n)
    den = math.factorial(n) * n**n
    r, c = np.nonzero(W)
    return CouplingTable(n, {(int(a), int(b)): Fraction(int(W[a, b]), den) for a, b in zip(r, c)}, "matrix")


# ---------------------------------------------------------------- rational vectors and matrices


def _common_denominator(vals) -> tuple:
    """Object array of Fractions -> (integer numerators as objects, denominator)."""
    fr = [Fraction(v) for v in vals]
    den = 1
    for v in fr:
        den = den * v.denominator // math.gcd(den, v.denominator)
    nums = np.array([v.numerator * (den // v.denominator) for v in fr], dtype=object)
    return nums, den


def _int_matmul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Integer product, in int64 when the worst case fits and as Python ints otherwise."""
    amax = int(np.abs(A).max()) if A.size else 0
    bmax = int(np.abs(B).max()) if B.size else 0
    inner_dim = A.shape[-1]
    if amax * bmax * max(inner_dim, 1) < INT64_SAFE and A.dtype != object and B.dtype != object:
        return A @ B
    return A.astype(object) @ B.astype(object)


@dataclass
class RationalMatrix:
    """Exact matrix num / den with integer entries."""

    num: np.ndarray
    den: int

    def to_float(self) -> np.ndarray:
        return self.num.astype(np.float64) / float(self.den)

    def entry(self, i: int, j: int) -> Fraction:
        return Fraction(int(self.num[i, j]), self.den)

    def apply(self, vec) -> np.ndarray:
        vals = np.asarray(vec)
        if vals.dtype == object:
            nums, d = _common_denominator(vals)
            out = _int_matmul(self.num, nums.reshape(-1, 1)).reshape(-1)
            return np.array([Fraction(int(v), self.den * d) for v in out], dtype=object)
        return self.to_float() @ vals.astype(np.float64)

    def quadratic_form(self, vec) -> Fraction:
        nums, d = _common_denominator(vec)
        A = self.num.astype(object)
        return Fraction(int(nums @ (A @ nums)), self.den * d * d)

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.num, self.num.T))


def apply_TC(f: GroupFunction, method: str = "exact") -> BoxFunction:
    """T_C f(x) = E_{sigma ~ N(x)} f(sigma).  method: exact (n <= 5) or float (n <= 6)."""
    n = f.n
    N = math.factorial(n)
    if method == "exact":
        W = coupling_matrix(n)
        vals = f.values if f.exact else f.to_exact().values
        nums, d = _common_denominator(vals)
        out = _int_matmul(W.T, nums.reshape(-1, 1)).reshape(-1)
        return BoxFunction(n, np.array([Fraction(int(v), N * d) for v in out], dtype=object), n)
    if method == "float":
        W = coupling_matrix_sparse(n)
        return BoxFunction(n, (W.T @ f.values.astype(np.float64)) / N, n)
    raise ValueError(f"unknown method {method!r}")


def apply_TC_star(F: BoxFunction, method: str = "exact") -> GroupFunction:
    """T_C* F(sigma) = E_{x ~ N(sigma)} F(x)."""
    n = F.n
    if F.m != n:
        raise ValueError("T_C* needs a function on [n]^n")
    M = n**n
    if method == "exact":
        W = coupling_matrix(n)
        vals = F.flat if F.exact else np.array([Fraction(v) for v in F.flat], dtype=object)
        nums, d = _common_denominator(vals)
        out = _int_matmul(W, nums.reshape(-1, 1)).reshape(-1)
        return GroupFunction(n, np.array([Fraction(int(v), M * d) for v in out], dtype=object))
    if method == "float":
        W = coupling_matrix_sparse(n)
        return GroupFunction(n, (W @ F.flat.astype(np.float64)) / M)
    raise ValueError(f"unknown method {method!r}")


def box_inner_exact(F: BoxFunction, G: BoxFunction):
    prod = F.flat * G.flat
    return prod.sum() / prod.size if prod.dtype == object else float(prod.mean())


def act_box_left(F: BoxFunction, tau: Permutation) -> BoxFunction:
    """(tau F)(x) = F(tau^-1 x), relabelling every coordinate value."""
    n = F.n
    inv = np.asarray(tau.inverse().images, dtype=np.int64) - 1
    idx = np.ix_(*([inv] * F.m))
    return BoxFunction(n, F.values[idx], F.m)


# ---------------------------------------------------------------- Monte Carlo path


@dataclass
class MCEstimate:
    value: float
    stderr: float
    samples: int


def estimate_TC(f: GroupFunction, x: Sequence[int], samples: int, rng: np.random.Generator) -> MCEstimate:
    """Monte Carlo T_C f(x) from greedy samples."""
    if samples < 2:
        raise ValueError("need at least two samples")
    xs = np.tile(np.asarray(x, dtype=np.int64), (samples, 1))
    vals = f.values.astype(np.float64)[rank_rows(sample_greedy_batch(xs, rng) - 1)]
    return MCEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples)), samples)


def estimate_TC_star(F, sigma: Permutation, samples: int, rng: np.random.Generator) -> MCEstimate:
    """Monte Carlo T_C* F(sigma); F is a BoxFunction or a callable on points."""
    if samples < 2:
        raise ValueError("need at least two samples")
    xs = sample_forgetful_batch(np.tile(np.asarray(sigma.images), (samples, 1)), rng)
    if isinstance(F, BoxFunction):
        powers = F.n ** np.arange(F.n - 1, -1, -1, dtype=np.int64)
        vals = F.flat.astype(np.float64)[((xs - 1) * powers).sum(axis=1)]
    else:
        vals = np.array([float(F(tuple(row))) for row in xs])
    return MCEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples)), samples)


# ---------------------------------------------------------------- box operators on rows of W


def _as_fraction(rho) -> Fraction | None:
    if isinstance(rho, Fraction):
        return rho
    if isinstance(rho, int):
        return Fraction(rho)
    return None


def _noise_rows(X: np.ndarray, n: int, rho) -> tuple:
    """Apply the box noise to every row; returns (result, denominator multiplier)."""
    rows = X.shape[0]
    T = X.reshape((rows,) + (n,) * n)
    frac = _as_fraction(rho)
    if frac is None:
        r = float(rho)
        T = T.astype(np.float64)
        for ax in range(1, n + 1):
            T = r * T + (1 - r) * T.mean(axis=ax, keepdims=True)
        return T.reshape(rows, -1), 1
    p, q = frac.numerator, frac.denominator
    bound = int(np.abs(X).max()) * (q * n) ** n
    if bound >= INT64_SAFE:
        T = T.astype(object)
    for ax in range(1, n + 1):
        T = p * n * T + (q - p) * T.sum(axis=ax, keepdims=True)
    return T.reshape(rows, -1), (q * n) ** n


def _es_coefficients(m: int, d: int) -> dict:
    return {t: sum((-1) ** k * math.comb(m - t, k) for k in range(d - t + 1)) for t in range(min(d, m) + 1)}


def _junta_rows(X: np.ndarray, n: int, d: int) -> tuple:
    """Apply P_{<=d} (projection onto d-juntas) to every row; returns (result, den)."""
    rows = X.shape[0]
    T = X.reshape((rows,) + (n,) * n)
    coeffs = _es_coefficients(n, d)
    exact = X.dtype != np.float64
    if exact:
        bound = int(np.abs(X).max()) * sum(abs(c) * math.comb(n, t) for t, c in coeffs.items()) * n**n
        if bound >= INT64_SAFE:
            T = T.astype(object)
    out = np.zeros_like(T)
    for t, c in coeffs.items():
        if c == 0:
            continue
        for keep in itertools.combinations(range(n), t):
            axes = tuple(a + 1 for a in range(n) if a not in keep)
            if exact:
                part = T.sum(axis=axes, keepdims=True) * (c * n**t) if axes else T * (c * n**t)
            else:
                part = (T.mean(axis=axes, keepdims=True) if axes else T) * c
            out = out + part
    return out.reshape(rows, -1), (n**n if exact else 1)


def _sandwich(n: int, rows: np.ndarray, den_extra: int) -> RationalMatrix | np.ndarray:
    W = coupling_matrix(n)
    if rows.dtype == np.float64:
        return rows @ W.T.astype(np.float64) / (n**n * math.factorial(n) * den_extra)
    num = _int_matmul(rows, W.T)
    den = n**n * math.factorial(n) * den_extra
    g = math.gcd(den, *[int(v) for v in np.unique(num)]) if num.size else den
    if num.dtype == object:
        num = num // g
    else:
        num = num // g
    return RationalMatrix(num, den // g)


@lru_cache(maxsize=None)
def tilde_noise_matrix(n: int, rho) -> RationalMatrix | np.ndarray:
    """Matrix of T_C* T_rho T_C; exact when rho is a Fraction."""
    _check_exact_n(n)
    _validate_rho(rho)
    rows, extra = _noise_rows(np.array(coupling_matrix(n)), n, rho)
    return _sandwich(n, rows, extra)


@lru_cache(maxsize=None)
def tilde_degree_matrix(n: int, d: int) -> RationalMatrix:
    """Matrix of T_C* P_{<=d} T_C (exact)."""
    _check_exact_n(n)
    rows, extra = _junta_rows(np.array(coupling_matrix(n)), n, d)
    return _sandwich(n, rows, extra)


def _validate_rho(rho) -> None:
    if not 0 < float(rho) < 1:
        raise ValueError("rho must lie in (0, 1)")


def symmetrize(K):
    """E_sigma R_sigma^* K R_sigma, i.e. K'[a, b] = E_sigma K[a sigma, b sigma]."""
    if isinstance(K, RationalMatrix):
        N = K.num.shape[0]
        n = _degree_of(N)
        mult = multiplication_table(n)
        acc = np.zeros_like(K.num)
        for s in range(N):
            idx = mult[:, s]
            acc = acc + K.num[np.ix_(idx, idx)]
        return RationalMatrix(acc, K.den * N)
    N = K.shape[0]
    mult = multiplication_table(_degree_of(N))
    acc = np.zeros_like(K)
    for s in range(N):
        idx = mult[:, s]
        acc += K[np.ix_(idx, idx)]
    return acc / N


def _degree_of(N: int) -> int:
    n = 1
    while math.factorial(n) < N:
        n += 1
    if math.factorial(n) != N:
        raise ValueError("matrix size is not a factorial")
    return n


@lru_cache(maxsize=None)
def noise_matrix(n: int, rho, mode: str = "symmetrized"):
    if mode == "tilde":
        return tilde_noise_matrix(n, rho)
    if mode == "symmetrized":
        return symmetrize(tilde_noise_matrix(n, rho))
    raise ValueError(f"unknown mode {mode!r}")


@lru_cache(maxsize=None)
def degree_operator_matrix(n: int, d: int) -> RationalMatrix:
    """T_d = E_sigma R_sigma^-1 T_C* P_{<=d} T_C R_sigma as an exact matrix."""
    return symmetrize(tilde_degree_matrix(n, d))


def _apply_matrix(K, f: GroupFunction) -> GroupFunction:
    if isinstance(K, RationalMatrix):
        if f.exact:
            return GroupFunction(f.n, K.apply(f.values))
        return GroupFunction(f.n, K.to_float() @ f.values)
    return GroupFunction(f.n, K @ f.values.astype(np.float64))


def sn_noise(f: GroupFunction, rho, mode: str = "symmetrized") -> GroupFunction:
    """The noise operator on S_n induced by the coupling.

    ``tilde`` is T_C* T_rho T_C.  ``symmetrized`` averages it over right
    translates, which makes it commute with both actions.  Exact output needs
    an exact f and a Fraction rho.
    """
    return _apply_matrix(noise_matrix(f.n, rho, mode), f)


def composed_degree_operator(f: GroupFunction, d: int) -> GroupFunction:
    return _apply_matrix(degree_operator_matrix(f.n, d), f)


# ---------------------------------------------------------------- exact matrix checks


def commutes_both_sides(K) -> bool:
    """K[tau a, tau b] = K[a, b] and K[a tau, b tau] = K[a, b] for the generators tau."""
    mat = K.num if isinstance(K, RationalMatrix) else K
    n = _degree_of(mat.shape[0])
    if n == 1:
        return True
    mult = multiplication_table(n)
    gens = [rank(Permutation.from_cycles([(1, 2)], n)), rank(Permutation.from_cycles([tuple(range(1, n + 1))], n))]
    for g in gens:
        for idx in (mult[g, :], mult[:, g]):
            moved = mat[np.ix_(idx, idx)]
            if isinstance(K, RationalMatrix):
                if not np.array_equal(moved, mat):
                    return False
            elif not np.allclose(moved, mat, rtol=0, atol=1e-10):
                return False
    return True


@dataclass
class LDLResult:
    psd: bool
    rank: int
    min_pivot: Fraction
    failure_index: int | None = None


def exact_psd(K: RationalMatrix) -> LDLResult:
    """Exact symmetric elimination; PSD iff all pivots are >= 0 and zero pivots have zero rows."""
    if not K.is_symmetric():
        return LDLResult(False, 0, Fraction(0), -1)
    A = [[Fraction(int(v)) for v in row] for row in K.num]
    size = len(A)
    rnk = 0
    min_pivot: Fraction | None = None
    for k in range(size):
        piv = A[k][k]
        if piv < 0:
            return LDLResult(False, rnk, piv, k)
        if piv == 0:
            if any(A[k][j] != 0 for j in range(k + 1, size)):
                return LDLResult(False, rnk, piv, k)
            continue
        rnk += 1
        min_pivot = piv if min_pivot is None else min(min_pivot, piv)
        row = A[k]
        for i in range(k + 1, size):
            if row[i] == 0:
                continue
            factor = row[i] / piv
            Ai = A[i]
            for j in range(i, size):
                if row[j]:
                    Ai[j] -= factor * row[j]
            for j in range(i, size):
                A[j][i] = Ai[j]
    scale = Fraction(1, K.den)
    return LDLResult(True, rnk, (min_pivot or Fraction(0)) * scale)


def random_exact_function(n: int, rng: np.random.Generator, spread: int = 5) -> GroupFunction:
    vals = rng.integers(-spread, spread + 1, size=math.factorial(n))
    return GroupFunction(n, np.array([Fraction(int(v)) for v in vals], dtype=object))


# ---------------------------------------------------------------- reports on the noise operator


def isotypic_eigenvalues(K, n: int) -> dict:
    """Scalar by which a both-sided operator acts on each isotypic component."""
    Kf = K.to_float() if isinstance(K, RationalMatrix) else K
    rng = np.random.default_rng(0)
    f = GroupFunction.random(n, rng)
    parts = isotypic_decomposition(f)
    out = {}
    for lam, part in parts.items():
        norm2 = float(inner(part, part))
        if norm2 < 1e-14:
            continue
        out[lam] = float(part.values @ (Kf @ part.values)) / math.factorial(n) / norm2
    return out


@dataclass
class EigenMarginReport:
    n: int
    rho: float
    by_irrep: dict
    by_degree: dict
    bound_by_degree: dict

    def margins(self) -> dict:
        return {d: self.by_degree[d] - self.bound_by_degree[d] for d in self.by_degree}


def noise_eigen_margins(n: int, rho: Fraction) -> EigenMarginReport:
    """Smallest eigenvalue of the symmetrized noise at each degree against (rho/72)^d."""
    eig = isotypic_eigenvalues(noise_matrix(n, rho, "symmetrized"), n)
    by_degree: dict = {}
    for lam, v in eig.items():
        d = n - lam[0]
        by_degree[d] = min(by_degree.get(d, math.inf), v)
    bounds = {d: (float(rho) / 72) ** d for d in by_degree}
    return EigenMarginReport(n, float(rho), eig, by_degree, bounds)


@dataclass
class HypercontractiveCheck:
    r: float
    gamma: float
    rho: float
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


def hypercontractive_check(f: GroupFunction, r: float, gamma: float, q: float = 4.0) -> HypercontractiveCheck:
    """||T_rho f||_q^q against gamma^(q-2) ||f||_2^2 at rho = log q / (16 r q)."""
    rho = math.log(q) / (16 * r * q)
    K = symmetrize(tilde_noise_matrix(f.n, rho))
    g = K @ f.values.astype(np.float64)
    lhs = float(np.mean(np.abs(g) ** q))
    rhs = gamma ** (q - 2) * float(np.mean(f.values.astype(np.float64) ** 2))
    return HypercontractiveCheck(r, gamma, rho, lhs, rhs)


# ---------------------------------------------------------------- globalness preservation


@dataclass
class PreservationReport:
    r: float
    gamma: float
    depth: int
    source_worst: dict
    image_worst: dict
    source_global: bool
    image_global: bool

    @property
    def passed(self) -> bool:
        return self.image_global or not self.source_global


def minimal_global_r(f: GroupFunction, depth: int, gamma: float | None = None) -> float:
    """Smallest r >= 1 for which f is (r, gamma)-global up to the given depth."""
    rep = global_audit(f, 1.0, depth, gamma)
    r = 1.0
    for t, v in rep.worst_ratio.items():
        if t == 0:
            continue
        r = max(r, v ** (1.0 / t))
    return r


def globalness_preserved(f: GroupFunction, r: float, gamma: float | None = None, depth: int = 2) -> PreservationReport:
    """Audit f on S_n and T_C f on the box with the same (r, gamma)."""
    gamma = float(np.sqrt(np.mean(f.values.astype(np.float64) ** 2))) if gamma is None else gamma
    src = global_audit(f, r, depth, gamma, ambient="S_n")
    image = apply_TC(f, "float" if f.n > EXACT_COUPLING_N or not f.exact else "exact").to_float()
    box = box_global_audit(image, r, gamma, depth)
    return PreservationReport(r, gamma, depth, src.worst_ratio, box.worst_ratio, src.passed, box.passed)


# ---------------------------------------------------------------- degree operator identity


@dataclass
class DegreeIdentityReport:
    d: int
    quadratic_form: Fraction  # <T_d f, f>
    averaged_norm: Fraction  # E_sigma ||P_d T_C R_sigma f||^2
    averaged_norm_pure: Fraction  # E_sigma ||P_d T_C R_sigma f^{=d}||^2
    pure_quadratic_form: Fraction  # <T_d f^{=d}, f^{=d}>
    pure_norm2: Fraction
    self_adjoint: bool

    @property
    def general_identity(self) -> bool:
        return self.quadratic_form == self.averaged_norm

    @property
    def pure_identity(self) -> bool:
        """<T_d f, f> equals the average taken over f^{=d}; true when f has pure degree d."""
        return self.quadratic_form == self.averaged_norm_pure

    @property
    def margin(self) -> float:
        """<T_d g, g> - 3^-d ||g||^2 for the pure degree part g."""
        return float(self.pure_quadratic_form) - 3.0 ** (-self.d) * float(self.pure_norm2)


def _averaged_junta_norm(f: GroupFunction, d: int) -> Fraction:
    """E_sigma ||P_{<=d} T_C R_sigma f||^2 computed translate by translate."""
    n = f.n
    N = math.factorial(n)
    mult = multiplication_table(n)
    nums, den = _common_denominator(f.values)
    # rows of the matrix [R_sigma f] for every sigma: (R_sigma f)(pi) = f(pi sigma)
    shifted = np.stack([nums[mult[:, s]] for s in range(N)]).astype(object)
    W = coupling_matrix(n)
    box_rows = _int_matmul(shifted, np.array(W))  # row s: n! den T_C R_s f
    proj, extra = _junta_rows(box_rows, n, d)  # n! den extra P T_C R_s f
    total = sum(int(v) * int(v) for v in proj.reshape(-1))
    scale = (N * den * extra) ** 2 * n**n * N
    return Fraction(total, scale)


def degree_identity_check(f: GroupFunction, d: int) -> DegreeIdentityReport:
    """Exact comparison of <T_d f, f> with the translate-averaged junta norms."""
    if not f.exact:
        f = f.to_exact()
    K = degree_operator_matrix(f.n, d)
    N = math.factorial(f.n)
    pure = degree_part(f, d)
    return DegreeIdentityReport(
        d,
        K.quadratic_form(f.values) / N,
        _averaged_junta_norm(f, d),
        _averaged_junta_norm(pure, d),
        K.quadratic_form(pure.values) / N,
        sum((v * v for v in pure.values), Fraction(0)) / N,
        K.is_symmetric(),
    )


# ---------------------------------------------------------------- tuple couplings


@dataclass
class TupleCoupling:
    """An S_n-invariant coupling on [n]_d, held as a dense matrix of Fractions."""

    n: int
    d: int
    tuples: list
    weights: np.ndarray  # object (K, K)
    event_probability: Fraction | None = None
    source: tuple = ()

    @property
    def size(self) -> int:
        return len(self.tuples)

    @property
    def p_lazy(self) -> Fraction:
        return sum((self.weights[i, i] for i in range(self.size)), Fraction(0))

    @property
    def entries(self) -> dict:
        out = {}
        for i, j in zip(*np.nonzero(self.weights != 0)):
            out[(self.tuples[i], self.tuples[j])] = self.weights[i, j]
        return out

    def total(self) -> Fraction:
        return sum(self.weights.reshape(-1), Fraction(0))

    def marginals_uniform(self) -> bool:
        target = Fraction(1, self.size)
        rows = [sum(r, Fraction(0)) for r in self.weights]
        cols = [sum(c, Fraction(0)) for c in self.weights.T]
        return all(v == target for v in rows) and all(v == target for v in cols)

    def is_left_invariant(self, perms: Sequence[Permutation]) -> bool:
        index = {t: k for k, t in enumerate(self.tuples)}
        for s in perms:
            moved = [index[s.apply_tuple(t)] for t in self.tuples]
            if not np.array_equal(self.weights[np.ix_(moved, moved)], self.weights):
                return False
        return True

    def operator(self) -> np.ndarray:
        """T g(a) = E_{b ~ nu(a, .)} g(b) as a float matrix."""
        return self.weights.astype(np.float64) * self.size


def induced_tuple_coupling(n: int, I: Sequence[int]) -> TupleCoupling:
    """Law of (sigma(I), x_I) under C, conditioned on x_I having distinct entries."""
    I = tuple(int(i) for i in I)
    d = len(I)
    if not (n <= 6 and 1 <= d <= 3):
        raise ValueError("exact tuple couplings need n <= 6 and 1 <= |I| <= 3")
    if len(set(I)) != d or not all(1 <= i <= n for i in I):
        raise ValueError(f"bad coordinate tuple {I}")
    tuples = enumerate_tuples(n, d)
    index = {t: k for k, t in enumerate(tuples)}
    K = len(tuples)
    acc = np.array([[Fraction(0)] * K for _ in range(K)], dtype=object)
    base = Fraction(1, math.factorial(n))
    event = Fraction(0)
    for images in itertools.permutations(range(1, n + 1)):
        a = index[tuple(images[i - 1] for i in I)]
        options = []
        for i in I:
            opts = [(images[i - 1], Fraction(n - i + 1, n))]
            opts += [(images[j], Fraction(1, n)) for j in range(i - 1)]
            options.append(opts)
        for combo in itertools.product(*options):
            b = tuple(v for v, _ in combo)
            if len(set(b)) < d:
                continue
            p = base
            for _, q in combo:
                p *= q
            acc[a, index[b]] += p
            event += p
    weights = acc / event
    return TupleCoupling(n, d, tuples, weights, event, I)


def lazy_identity(nu: TupleCoupling) -> tuple:
    """(P(E) p_lazy, prod_{i in I} (n-i+1)/n); equal for induced couplings."""
    prod = Fraction(1)
    for i in nu.source:
        prod *= Fraction(nu.n - i + 1, nu.n)
    return nu.event_probability * nu.p_lazy, prod


def uniform_disjoint_coupling(n: int, d: int) -> TupleCoupling:
    """a uniform, b uniform among tuples whose values avoid those of a."""
    tuples = enumerate_tuples(n, d)
    K = len(tuples)
    share = Fraction(1, K * math.perm(n - d, d))
    w = np.array(
        [[share if not set(a) & set(b) else Fraction(0) for b in tuples] for a in tuples], dtype=object
    )
    return TupleCoupling(n, d, tuples, w)


def disagreements(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(1 for u, v in zip(a, b) if u != v)


@dataclass
class SpreadReport:
    p: Fraction
    holds: bool  # nu(a,b) <= p_lazy p^k
    holds_normalised: bool  # nu(a,b) <= nu(a,a) p^k
    worst_ratio: Fraction
    worst_ratio_normalised: Fraction


def spread_certificate(nu: TupleCoupling, p: Fraction) -> SpreadReport:
    """Exhaustive exact scan of both spread forms (absolute and normalised)."""
    lazy = nu.p_lazy
    worst = Fraction(0)
    worst_n = Fraction(0)
    ok = ok_n = True
    for i, a in enumerate(nu.tuples):
        diag = nu.weights[i, i]
        for j, b in enumerate(nu.tuples):
            w = nu.weights[i, j]
            if w == 0:
                continue
            k = disagreements(a, b)
            cap = lazy * p**k
            cap_n = diag * p**k
            if w > cap:
                ok = False
            if w > cap_n:
                ok_n = False
            worst = max(worst, w / cap) if cap else worst
            worst_n = max(worst_n, w / cap_n) if cap_n else worst_n
    return SpreadReport(p, ok, ok_n, worst, worst_n)


def stay_set(a: Sequence[int], b: Sequence[int]) -> frozenset:
    """Coordinates i (1-indexed) with b_i among the values of a."""
    vals = set(a)
    return frozenset(i + 1 for i, v in enumerate(b) if v in vals)


@dataclass
class StayingDecomposition:
    nu: TupleCoupling
    alpha: dict  # frozenset S -> Fraction
    parts: dict  # frozenset S -> TupleCoupling (only for alpha_S > 0)
    alpha_constant_in_a: bool

    def reconstruct(self) -> np.ndarray:
        out = np.array([[Fraction(0)] * self.nu.size for _ in range(self.nu.size)], dtype=object)
        for S, part in self.parts.items():
            out = out + part.weights * self.alpha[S]
        return out

    @property
    def exact(self) -> bool:
        return bool(np.array_equal(self.reconstruct(), self.nu.weights))

    def supports_ok(self) -> bool:
        for S, part in self.parts.items():
            for i, j in zip(*np.nonzero(part.weights != 0)):
                if stay_set(self.nu.tuples[i], self.nu.tuples[j]) != S:
                    return False
        return True


def staying_decompose(nu: TupleCoupling) -> StayingDecomposition:
    d = nu.d
    labels = np.empty((nu.size, nu.size), dtype=object)
    for i, a in enumerate(nu.tuples):
        for j, b in enumerate(nu.tuples):
            labels[i, j] = stay_set(a, b)
    alpha: dict = {}
    parts: dict = {}
    constant = True
    zero = Fraction(0)
    for k in range(d + 1):
        for S in itertools.combinations(range(1, d + 1), k):
            S = frozenset(S)
            mask = labels == S
            masked = np.where(mask, nu.weights, zero)
            a_S = sum(masked.reshape(-1), Fraction(0))
            alpha[S] = a_S
            per_row = {sum(row, Fraction(0)) * nu.size for row in masked}
            constant = constant and per_row == {a_S}
            if a_S:
                parts[S] = TupleCoupling(nu.n, d, nu.tuples, masked / a_S, source=tuple(sorted(S)))
    return StayingDecomposition(nu, alpha, parts, constant)


def alpha_bound(p_lazy: Fraction, d: int, S) -> Fraction:
    return Fraction(1001, 1000) * p_lazy * 10 ** (d - len(S))


def staying_norm_bound(n: int, d: int, S) -> float:
    k = d - len(S)
    return (2 * k / (n - len(S))) ** k if k else 1.0


@dataclass
class StayingNorm:
    value: float
    power_value: float
    iterations: int
    converged: bool
    bound: float

    @property
    def within_bound(self) -> bool:
        return self.value <= self.bound + 1e-8


def staying_operator_norm(
    nu_S: TupleCoupling, S=(), tol: float = 1e-12, max_iter: int = 5000, seed: int = 0
) -> StayingNorm:
    """Norm of T(nu_S) on the pure top-level space of L^2([n]_d).

    Power iteration on B^T B with B = T Q (Q an orthonormal basis of the top
    level), cross-checked against the largest singular value of B.
    """
    Q = tuple_level_bases(nu_S.n, nu_S.d)[nu_S.d]
    B = nu_S.operator() @ Q
    dense = float(np.linalg.norm(B, 2)) if B.size else 0.0
    G = B.T @ B
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(G.shape[0])
    v /= np.linalg.norm(v) or 1.0
    lam = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        w = G @ v
        new = float(np.linalg.norm(w))
        if new == 0.0:
            lam, converged = 0.0, True
            break
        w /= new
        if abs(new - lam) <= tol * max(1.0, new):
            lam, v, converged = new, w, True
            break
        lam, v = new, w
    return StayingNorm(dense, math.sqrt(lam), it, converged, staying_norm_bound(nu_S.n, nu_S.d, S))


def staying_norms(nu: TupleCoupling) -> dict:
    dec = staying_decompose(nu)
    return {S: staying_operator_norm(part, S) for S, part in dec.parts.items()}


# ---------------------------------------------------------------- verification bundle


def verify_coupling(n: int, seed: int = 0, samples: int = 20) -> dict:
    """Exact checks of the coupling at degree n (n <= 5), JSON-friendly."""
    rng = np.random.default_rng(seed)
    joint = joint_exact(n)
    f = random_exact_function(n, rng)
    F = BoxFunction(n, np.array([Fraction(int(v)) for v in rng.integers(-5, 6, size=n**n)], dtype=object), n)
    lhs = box_inner_exact(apply_TC(f), F)
    rhs = inner(f, apply_TC_star(F))
    tau = Permutation(rng.permutation(n) + 1)
    left = apply_TC(_act_left_exact(f, tau))
    right = act_box_left(apply_TC(f), tau)
    rho = Fraction(1, 4)
    tilde = noise_matrix(n, rho, "tilde")
    sym = noise_matrix(n, rho, "symmetrized")
    psd_forms = all(tilde.quadratic_form(random_exact_function(n, rng).values) >= 0 for _ in range(samples))
    return {
        "n": n,
        "joint_identical": joint.identical,
        "joint_total_one": joint.total_is_one,
        "left_marginal_uniform": joint.left_uniform,
        "right_marginal_uniform": joint.right_uniform,
        "support_size": joint.greedy_size,
        "adjoint_lhs": str(lhs),
        "adjoint_rhs": str(rhs),
        "adjoint_equal": lhs == rhs,
        "left_equivariant": bool(np.array_equal(left.flat, right.flat)),
        "tilde_psd_forms": psd_forms,
        "symmetrized_commutes": commutes_both_sides(sym),
    }


def _act_left_exact(f: GroupFunction, tau: Permutation) -> GroupFunction:
    """(tau f)(sigma) = f(tau^-1 sigma)."""
    n = f.n
    mult = multiplication_table(n) if n <= 6 else None
    t_inv = rank(tau.inverse())
    if mult is not None:
        return GroupFunction(n, f.values[mult[t_inv, :]])
    raise ValueError("left action helper limited to n <= 6")


