"""The group algebra L^2(S_n) under the uniform measure.

Convolution is normalised as an expectation, so ``convolve(f, g)(s)`` is the
average of ``f(t) g(t^-1 s)`` over t.  Isotypic projections use
``P_lam f = d_lam * (chi_lam * f)``; every projection is assembled from the
class translates ``1_C * f``, whose total cost equals one dense convolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels
from .characters import character_table, level, degree_index
from .permcore import (
    MAX_TABLE_N,
    Permutation,
    as_partition,
    compose_ranks,
    cycle_type_table,
    images_table,
    inverse_ranks,
    multiplication_table,
    partitions,
    rank,
    sign_table,
)

EXACT_MAX_N = 6


class GroupFunction:
    """A real (float64) or exact (object array of Fractions) function on S_n."""

    __slots__ = ("n", "values")

    def __init__(self, n: int, values):
        if not 1 <= n <= MAX_TABLE_N:
            raise ValueError(f"dense group functions need 1 <= n <= {MAX_TABLE_N}")
        vals = np.asarray(values)
        if vals.dtype != object:
            vals = vals.astype(np.float64)
        if vals.shape != (math.factorial(n),):
            raise ValueError(f"expected {math.factorial(n)} values, got shape {vals.shape}")
        self.n = n
        self.values = vals

    # constructors
    @classmethod
    def zeros(cls, n: int, exact: bool = False) -> "GroupFunction":
        N = math.factorial(n)
        if exact:
            return cls(n, np.array([Fraction(0)] * N, dtype=object))
        return cls(n, np.zeros(N))

    @classmethod
    def constant(cls, n: int, c=1.0) -> "GroupFunction":
        N = math.factorial(n)
        if isinstance(c, Fraction):
            return cls(n, np.array([c] * N, dtype=object))
        return cls(n, np.full(N, float(c)))

    @classmethod
    def indicator(cls, n: int, ranks: Iterable[int], exact: bool = False) -> "GroupFunction":
        f = cls.zeros(n, exact)
        idx = np.asarray(list(ranks), dtype=np.int64)
        f.values[idx] = Fraction(1) if exact else 1.0
        return f

    @classmethod
    def density(cls, n: int, ranks: Iterable[int], exact: bool = False) -> "GroupFunction":
        """1_A / mu(A)."""
        idx = np.unique(np.asarray(list(ranks), dtype=np.int64))
        if idx.size == 0:
            raise ValueError("density of the empty set is undefined")
        N = math.factorial(n)
        f = cls.zeros(n, exact)
        f.values[idx] = Fraction(N, idx.size) if exact else N / idx.size
        return f

    @classmethod
    def sign(cls, n: int, exact: bool = False) -> "GroupFunction":
        s = sign_table(n)
        if exact:
            return cls(n, np.array([Fraction(int(v)) for v in s], dtype=object))
        return cls(n, s.astype(np.float64))

    @classmethod
    def delta(cls, n: int, sigma: Permutation | None = None) -> "GroupFunction":
        """n! times the indicator of one element: the unit of the algebra when sigma = id."""
        f = cls.zeros(n)
        f.values[0 if sigma is None else rank(sigma)] = math.factorial(n)
        return f

    @classmethod
    def from_callable(cls, n: int, fn: Callable[[Permutation], float]) -> "GroupFunction":
        img = images_table(n)
        return cls(n, [fn(Permutation(row + 1)) for row in img])

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "GroupFunction":
        return cls(n, rng.standard_normal(math.factorial(n)))

    # basic protocol
    @property
    def exact(self) -> bool:
        return self.values.dtype == object

    def to_float(self) -> "GroupFunction":
        return GroupFunction(self.n, self.values.astype(np.float64)) if self.exact else self

    def to_exact(self) -> "GroupFunction":
        if self.exact:
            return self
        return GroupFunction(self.n, np.array([Fraction(v) for v in self.values], dtype=object))

    def _coerce(self, other):
        if isinstance(other, GroupFunction):
            if other.n != self.n:
                raise ValueError("degree mismatch")
            return other.values
        return other

    def __add__(self, other):
        return GroupFunction(self.n, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GroupFunction(self.n, self.values - self._coerce(other))

    def __rsub__(self, other):
        return GroupFunction(self.n, self._coerce(other) - self.values)

    def __neg__(self):
        return GroupFunction(self.n, -self.values)

    def __mul__(self, other):
        return GroupFunction(self.n, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return GroupFunction(self.n, self.values / c)

    def __repr__(self) -> str:
        kind = "exact" if self.exact else "float"
        return f"GroupFunction(n={self.n}, {kind})"

    def mean(self):
        if self.exact:
            return sum(self.values, Fraction(0)) / len(self.values)
        return float(self.values.mean())

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.values != 0)

    def allclose(self, other: "GroupFunction", atol: float = 1e-10) -> bool:
        a = self.values.astype(np.float64)
        b = other.values.astype(np.float64)
        return bool(np.allclose(a, b, rtol=0, atol=atol))

    def adjoint(self) -> "GroupFunction":
        """f*(s) = f(s^-1): the kernel of the adjoint of g -> f * g."""
        return GroupFunction(self.n, self.values[inverse_ranks(self.n)])

    # csv
    def to_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(f"n={self.n}\n")
            for r, v in enumerate(self.values):
                fh.write(f"{r},{v}\n")

    @classmethod
    def from_csv(cls, path: str) -> "GroupFunction":
        with open(path) as fh:
            header = fh.readline().strip()
            if not header.startswith("n="):
                raise ValueError(f"{path}: first line must be n=<degree>")
            n = int(header[2:])
            vals: list = [None] * math.factorial(n)
            exact = False
            for lineno, line in enumerate(fh, start=2):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    r_txt, v_txt = line.split(",")
                    r = int(r_txt)
                    if "/" in v_txt:
                        exact = True
                        vals[r] = Fraction(v_txt.strip())
                    else:
                        vals[r] = float(v_txt)
                except (ValueError, IndexError) as exc:
                    raise ValueError(f"{path}:{lineno}: malformed row {line!r}") from exc
        if any(v is None for v in vals):
            raise ValueError(f"{path}: missing ranks")
        if exact:
            return cls(n, np.array([Fraction(v) for v in vals], dtype=object))
        return cls(n, np.array(vals, dtype=np.float64))


def _check_pair(f: GroupFunction, g: GroupFunction) -> None:
    if f.n != g.n:
        raise ValueError(f"degree mismatch: {f.n} vs {g.n}")


def inner(f: GroupFunction, g: GroupFunction):
    _check_pair(f, g)
    if f.exact or g.exact:
        return sum(f.values * g.values, Fraction(0)) / len(f.values)
    return float(np.dot(f.values, g.values) / len(f.values))


def lp_norm(f: GroupFunction, p: float = 2.0) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    vals = np.abs(f.values.astype(np.float64))
    if math.isinf(p):
        return float(vals.max())
    return float(np.mean(vals**p) ** (1.0 / p))


def convolve(f: GroupFunction, g: GroupFunction) -> GroupFunction:
    """Expectation convolution; exact when either input is exact (n <= 6)."""
    _check_pair(f, g)
    n = f.n
    N = math.factorial(n)
    inv = inverse_ranks(n)
    if f.exact or g.exact:
        if n > EXACT_MAX_N:
            raise ValueError(f"exact convolution limited to n <= {EXACT_MAX_N}")
        mult = multiplication_table(n)
        fv = f.to_exact().values
        gv = g.to_exact().values
        out = np.array([Fraction(0)] * N, dtype=object)
        for t in f.support():
            out = out + fv[t] * gv[mult[inv[t]]]
        return GroupFunction(n, out / N)
    support = f.support()
    out = _kernels.left_weighted_sum(n, inv[support], f.values[support], g.values)
    return GroupFunction(n, out / N)


def act(f: GroupFunction, sigma: Permutation, side: str = "left") -> GroupFunction:
    """left: f(s^-1 x); right: f(x s); sign_twist: sign * f."""
    n = f.n
    if sigma.n != n:
        raise ValueError("degree mismatch")
    all_ranks = np.arange(math.factorial(n))
    if side == "left":
        idx = compose_ranks(rank(sigma.inverse()), all_ranks, n)
    elif side == "right":
        idx = compose_ranks(all_ranks, rank(sigma), n)
    elif side == "sign_twist":
        return f * GroupFunction.sign(n, f.exact)
    else:
        raise ValueError(f"unknown side {side!r}")
    return GroupFunction(n, f.values[idx])


# ---------------------------------------------------------------- class functions


def class_function(n: int, values_by_class: dict) -> GroupFunction:
    labels, classes = cycle_type_table(n)
    vec = np.array([values_by_class.get(mu, 0) for mu in classes], dtype=object)
    vals = vec[labels]
    if all(isinstance(v, (int, float, np.integer, np.floating)) for v in vec):
        vals = vals.astype(np.float64)
    return GroupFunction(n, vals)


def character_function(lam: Sequence[int]) -> GroupFunction:
    lam = as_partition(lam)
    table = character_table(sum(lam))
    return class_function(sum(lam), dict(zip(table.classes, (int(v) for v in table.row(lam)))))


def _class_translates(f: GroupFunction) -> tuple:
    """Stack of 1_C * f over all classes C, and the class list."""
    n = f.n
    labels, classes = cycle_type_table(n)
    N = math.factorial(n)
    if f.exact:
        mult = multiplication_table(n)
        fv = f.values
        rows = []
        for c in range(len(classes)):
            members = np.flatnonzero(labels == c)
            acc = np.array([Fraction(0)] * N, dtype=object)
            for t in members:
                # (1_C * f)(s) = E_t 1_C(t) f(t^-1 s); C is closed under inversion
                acc = acc + fv[mult[t]]
            rows.append(acc / N)
        return np.array(rows, dtype=object), classes
    rows = np.empty((len(classes), N))
    for c in range(len(classes)):
        members = np.flatnonzero(labels == c)
        rows[c] = _kernels.left_weighted_sum(n, members, np.ones(members.size), f.values) / N
    return rows, classes


def _combine(f: GroupFunction, translates, classes, weights: dict) -> GroupFunction:
    """Sum over irreps lam of weights[lam] * d_lam * sum_C chi_lam(C) (1_C * f)."""
    table = character_table(f.n)
    coeff = [0] * len(classes)
    for lam, w in weights.items():
        if not w:
            continue
        row = table.row(lam)
        d = int(row[0])
        for c in range(len(classes)):
            coeff[c] += w * d * int(row[c])
    if f.exact:
        out = np.array([Fraction(0)] * len(f.values), dtype=object)
        for c, k in enumerate(coeff):
            if k:
                out = out + translates[c] * k
        return GroupFunction(f.n, out)
    return GroupFunction(f.n, np.asarray(coeff, dtype=np.float64) @ translates)


def isotypic_decomposition(f: GroupFunction) -> dict:
    """Map lam -> f^{=lam} for every partition of n."""
    translates, classes = _class_translates(f)
    return {lam: _combine(f, translates, classes, {lam: 1}) for lam in partitions(f.n)}


def project_onto(f: GroupFunction, irreps: Iterable[Sequence[int]]) -> GroupFunction:
    """Orthogonal projection onto the sum of the listed isotypic components."""
    translates, classes = _class_translates(f)
    return _combine(f, translates, classes, {as_partition(lam): 1 for lam in irreps})


def isotypic_project(f: GroupFunction, lam: Sequence[int]) -> GroupFunction:
    return project_onto(f, [lam])


def irreps_of_degree(n: int, d: int) -> list:
    return [lam for lam in partitions(n) if degree_index(lam) == d]


def irreps_of_level(n: int, d: int) -> list:
    return [lam for lam in partitions(n) if level(lam) == d]


def degree_part(f: GroupFunction, d: int) -> GroupFunction:
    """f^{=d}: the part lying in d-juntas orthogonal to (d-1)-juntas."""
    return project_onto(f, irreps_of_degree(f.n, d))


def degree_cum(f: GroupFunction, d: int) -> GroupFunction:
    """f^{<=d}: the projection onto the span of d-juntas."""
    return project_onto(f, [lam for lam in partitions(f.n) if degree_index(lam) <= d])


def level_part(f: GroupFunction, d: int) -> GroupFunction:
    return project_onto(f, irreps_of_level(f.n, d))


def level_tail(f: GroupFunction, d: int) -> GroupFunction:
    """Projection onto all isotypic components of level strictly above d."""
    return project_onto(f, [lam for lam in partitions(f.n) if level(lam) > d])


def degree_parts(f: GroupFunction) -> list:
    parts = isotypic_decomposition(f)
    out = []
    for d in range(f.n + 1):
        acc = GroupFunction.zeros(f.n, f.exact)
        for lam in irreps_of_degree(f.n, d):
            acc = acc + parts[lam]
        out.append(acc)
    return out


# ---------------------------------------------------------------- spectral norms


@dataclass
class NormEstimate:
    value: float
    iterations: int
    residual: float
    converged: bool
    method: str


@dataclass
class SpectralReport:
    n: int
    by_partition: dict = field(default_factory=dict)  # lam -> NormEstimate
    by_level: dict = field(default_factory=dict)  # d -> float (max over constituents)
    by_degree: dict = field(default_factory=dict)

    @property
    def all_converged(self) -> bool:
        return all(est.converged for est in self.by_partition.values())


def _scope_irreps(n: int, partition=None, level_=None, degree=None) -> list:
    chosen = [x is not None for x in (partition, level_, degree)]
    if sum(chosen) != 1:
        raise ValueError("give exactly one of partition, level, degree")
    if partition is not None:
        return [as_partition(partition)]
    if level_ is not None:
        return irreps_of_level(n, level_)
    return irreps_of_degree(n, degree)


def _dense_operator(f: GroupFunction) -> np.ndarray:
    n = f.n
    N = math.factorial(n)
    mult = multiplication_table(n)
    inv = inverse_ranks(n)
    # (f * g)(s) = E_p f(s p^-1) g(p)
    return f.values.astype(np.float64)[mult[:, inv]] / N


def _projector_matrix(n: int, irreps: list) -> np.ndarray:
    table = character_table(n)
    labels, classes = cycle_type_table(n)
    kernel = np.zeros(len(classes))
    for lam in irreps:
        row = table.row(lam).astype(np.float64)
        kernel += row[0] * row
    return _dense_operator(GroupFunction(n, kernel[labels]))


def spectral_norm(
    f: GroupFunction,
    *,
    partition=None,
    level: int | None = None,
    degree: int | None = None,
    method: str = "power",
    tol: float = 1e-10,
    max_iter: int = 10_000,
    seed: int = 0,
    report: bool = False,
):
    """Operator norm of g -> f * g restricted to a sum of isotypic components.

    ``method="power"`` runs power iteration on P T_f^* T_f P with re-projection;
    ``method="dense"`` forms the operator matrix (n <= 6) and takes an SVD.
    """
    n = f.n
    irreps = _scope_irreps(n, partition, level, degree)
    f = f.to_float()
    if method == "dense":
        if n > EXACT_MAX_N:
            raise ValueError("dense spectral norms limited to n <= 6")
        proj = _projector_matrix(n, irreps)
        w, v = np.linalg.eigh(proj)
        basis = v[:, w > 0.5]
        if basis.shape[1] == 0:
            est = NormEstimate(0.0, 0, 0.0, True, "dense")
        else:
            op = _dense_operator(f) @ basis
            est = NormEstimate(float(np.linalg.norm(op, 2)), 0, 0.0, True, "dense")
        return est if report else est.value
    if method != "power":
        raise ValueError(f"unknown method {method!r}")
    rng = np.random.default_rng(seed)
    fstar = f.adjoint()
    start = project_onto(GroupFunction(n, rng.standard_normal(math.factorial(n))), irreps)
    norm = math.sqrt(inner(start, start))
    if norm < 1e-300:
        est = NormEstimate(0.0, 0, 0.0, True, "power")
        return est if report else est.value
    vec = start / norm
    prev = -1.0
    value = 0.0
    residual = math.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        nxt = convolve(fstar, convolve(f, vec))
        if it % 20 == 0 or it == 1:
            nxt = project_onto(nxt, irreps)
        rayleigh = inner(nxt, vec)
        value = math.sqrt(max(rayleigh, 0.0))
        size = math.sqrt(inner(nxt, nxt))
        if size < 1e-300:
            value, residual, converged = 0.0, 0.0, True
            break
        residual = abs(value - prev) / max(value, 1e-300)
        if residual < tol:
            converged = True
            break
        prev = value
        vec = nxt / size
    est = NormEstimate(value, it, residual, converged, "power")
    return est if report else est.value


def spectral_report(f: GroupFunction, method: str = "power", seed: int = 0) -> SpectralReport:
    rep = SpectralReport(f.n)
    for lam in partitions(f.n):
        rep.by_partition[lam] = spectral_norm(f, partition=lam, method=method, seed=seed, report=True)
    for lam, est in rep.by_partition.items():
        lv = level(lam)
        dg = degree_index(lam)
        rep.by_level[lv] = max(rep.by_level.get(lv, 0.0), est.value)
        rep.by_degree[dg] = max(rep.by_degree.get(dg, 0.0), est.value)
    return rep


# ---------------------------------------------------------------- linear calculus


@dataclass
class CoefficientMatrix:
    n: int
    entries: np.ndarray

    def is_canonical(self, tol: float = 1e-12) -> bool:
        e = self.entries
        return bool(np.all(np.abs(e.sum(axis=0)) <= tol) and np.all(np.abs(e.sum(axis=1)) <= tol))

    def reconstruct(self) -> GroupFunction:
        """The function s -> sum_i a[i, s(i)]."""
        img = images_table(self.n).astype(np.int64)
        rows = np.arange(self.n)[None, :]
        return GroupFunction(self.n, self.entries[rows, img].sum(axis=1))


def dictator(n: int, i: int, j: int) -> GroupFunction:
    """Indicator of s(i) = j (1-indexed)."""
    img = images_table(n)
    return GroupFunction(n, (img[:, i - 1] == j - 1).astype(np.float64))


def linear_canonical(g: GroupFunction) -> CoefficientMatrix:
    n = g.n
    img = images_table(n).astype(np.int64)
    vals = g.values.astype(np.float64)
    block = math.factorial(n - 1)
    cond = np.empty((n, n))
    for i in range(n):
        cond[i] = np.bincount(img[:, i], weights=vals, minlength=n) / block
    return CoefficientMatrix(n, (n - 1) / n * (cond - vals.mean()))


def linear_inner(a: CoefficientMatrix, b: CoefficientMatrix) -> float:
    return float((a.entries * b.entries).sum() / (a.n - 1))


def linear_convolve(a: CoefficientMatrix, b: CoefficientMatrix) -> CoefficientMatrix:
    """Canonical matrix of the linear part of (phi_a * phi_b).

    With the expectation convolution f*g(s) = E f(t) g(t^-1 s) the factors
    compose as b @ a; the two orders agree whenever the matrices commute.
    """
    return CoefficientMatrix(a.n, b.entries @ a.entries / (a.n - 1))
