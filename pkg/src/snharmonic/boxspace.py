"""Functions on the product space [n]^m under the uniform measure.

Values are held as a tensor of shape (n,)*m.  Flattening is C-order, so
coordinate 1 is the most significant digit of the mixed-radix index.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

MAX_BOX_CELLS = 8**8


class BoxFunction:
    __slots__ = ("n", "values")

    def __init__(self, n: int, values, m: int | None = None):
        vals = np.asarray(values)
        if vals.dtype != object:
            vals = vals.astype(np.float64)
        if m is None:
            m = vals.ndim if vals.ndim > 1 else n
        if vals.size != n**m:
            raise ValueError(f"expected {n}^{m} values, got {vals.size}")
        if vals.size > MAX_BOX_CELLS:
            raise ValueError("box function too large")
        self.n = n
        self.values = vals.reshape((n,) * m)

    @property
    def m(self) -> int:
        return self.values.ndim

    @property
    def exact(self) -> bool:
        return self.values.dtype == object

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    @classmethod
    def constant(cls, n: int, c=1.0, m: int | None = None) -> "BoxFunction":
        m = n if m is None else m
        if isinstance(c, Fraction):
            return cls(n, np.full((n,) * m, c, dtype=object), m)
        return cls(n, np.full((n,) * m, float(c)), m)

    @classmethod
    def coordinate_indicator(cls, n: int, coord: int, value: int, m: int | None = None) -> "BoxFunction":
        """1[x_coord = value], both 1-indexed."""
        m = n if m is None else m
        shape = [1] * m
        shape[coord - 1] = n
        vec = (np.arange(n) == value - 1).astype(np.float64).reshape(shape)
        return cls(n, np.broadcast_to(vec, (n,) * m).copy(), m)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, m: int | None = None) -> "BoxFunction":
        m = n if m is None else m
        return cls(n, rng.standard_normal((n,) * m), m)

    def _coerce(self, other):
        if isinstance(other, BoxFunction):
            if other.values.shape != self.values.shape:
                raise ValueError("shape mismatch")
            return other.values
        return other

    def __add__(self, other):
        return BoxFunction(self.n, self.values + self._coerce(other), self.m)

    __radd__ = __add__

    def __sub__(self, other):
        return BoxFunction(self.n, self.values - self._coerce(other), self.m)

    def __mul__(self, other):
        return BoxFunction(self.n, self.values * self._coerce(other), self.m)

    __rmul__ = __mul__

    def __neg__(self):
        return BoxFunction(self.n, -self.values, self.m)

    def __repr__(self) -> str:
        return f"BoxFunction(n={self.n}, m={self.m})"

    def to_float(self) -> "BoxFunction":
        return BoxFunction(self.n, self.values.astype(np.float64), self.m) if self.exact else self

    def allclose(self, other: "BoxFunction", atol: float = 1e-10) -> bool:
        return bool(
            np.allclose(self.values.astype(np.float64), other.values.astype(np.float64), rtol=0, atol=atol)
        )

    def mean(self):
        if self.exact:
            return self.values.sum() / self.values.size
        return float(self.values.mean())

    def to_csv(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(f"n={self.n}\n")
            for idx, v in enumerate(self.flat):
                fh.write(f"{idx},{v}\n")

    @classmethod
    def from_csv(cls, path: str) -> "BoxFunction":
        with open(path) as fh:
            header = fh.readline().strip()
            if not header.startswith("n="):
                raise ValueError(f"{path}: first line must be n=<degree>")
            n = int(header[2:])
            vals = np.zeros(n**n)
            for lineno, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                try:
                    i, v = line.split(",")
                    vals[int(i)] = float(Fraction(v.strip()))
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: malformed row {line!r}") from exc
        return cls(n, vals, n)


def box_index(point: Sequence[int], n: int) -> int:
    """Mixed-radix index of a 1-indexed point, coordinate 1 most significant."""
    idx = 0
    for v in point:
        idx = idx * n + (v - 1)
    return idx


def box_point(index: int, n: int, m: int | None = None) -> tuple:
    m = n if m is None else m
    digits = []
    for _ in range(m):
        index, d = divmod(index, n)
        digits.append(d + 1)
    return tuple(reversed(digits))


def box_inner(F: BoxFunction, G: BoxFunction):
    prod = F.values * G.values
    return prod.sum() / prod.size if prod.dtype == object else float(prod.mean())


def box_norm(F: BoxFunction, p: float = 2.0) -> float:
    vals = np.abs(F.values.astype(np.float64))
    if math.isinf(p):
        return float(vals.max())
    return float(np.mean(vals**p) ** (1.0 / p))


def _average_out(arr: np.ndarray, axes: tuple, n: int) -> np.ndarray:
    if not axes:
        return arr
    return arr.sum(axis=axes, keepdims=True) / n ** len(axes)


def conditional_mean(F: BoxFunction, keep: Iterable[int]) -> BoxFunction:
    """E[F | x_keep], broadcast back to the full box (keep is 1-indexed)."""
    keep = {k - 1 for k in keep}
    axes = tuple(a for a in range(F.m) if a not in keep)
    out = np.broadcast_to(_average_out(F.values, axes, F.n), F.values.shape)
    return BoxFunction(F.n, out.copy(), F.m)


def es_part(F: BoxFunction, S: Iterable[int]) -> BoxFunction:
    """Efron-Stein component F^{=S} by inclusion-exclusion over T subset of S."""
    S = sorted(set(S))
    out = None
    for k in range(len(S) + 1):
        for T in itertools.combinations(S, k):
            term = conditional_mean(F, T).values
            term = term if (len(S) - k) % 2 == 0 else -term
            out = term if out is None else out + term
    return BoxFunction(F.n, out, F.m)


def es_cum(F: BoxFunction, d: int) -> BoxFunction:
    """Projection onto d-juntas: sum of F^{=S} over |S| <= d."""
    m = F.m
    d = min(d, m)
    if d < 0:
        return F * 0
    out = None
    for t in range(d + 1):
        coeff = sum((-1) ** k * math.comb(m - t, k) for k in range(d - t + 1))
        if coeff == 0:
            continue
        for T in itertools.combinations(range(1, m + 1), t):
            term = conditional_mean(F, T).values * coeff
            out = term if out is None else out + term
    if out is None:
        return F * 0
    return BoxFunction(F.n, out, m)


def es_degree_part(F: BoxFunction, d: int) -> BoxFunction:
    return es_cum(F, d) - es_cum(F, d - 1) if d > 0 else es_cum(F, 0)


def box_noise(F: BoxFunction, rho) -> BoxFunction:
    """Apply rho * Id + (1 - rho) * (average over the coordinate) on every coordinate."""
    if not 0 < float(rho) < 1:
        raise ValueError("rho must lie in (0, 1)")
    vals = F.values
    for axis in range(F.m):
        vals = rho * vals + (1 - rho) * _average_out(vals, (axis,), F.n)
    return BoxFunction(F.n, vals, F.m)


def restrict_box(F: BoxFunction, S: Sequence[int], x: Sequence[int]) -> BoxFunction:
    """Fix coordinates S (1-indexed) to the values x; a function of the rest."""
    if len(S) != len(x):
        raise ValueError("S and x must have equal length")
    index = [slice(None)] * F.m
    for s, v in zip(S, x):
        index[s - 1] = v - 1
    return BoxFunction(F.n, F.values[tuple(index)], F.m - len(S))


@dataclass
class BoxGlobalReport:
    r: float
    gamma: float
    depth: int
    worst_ratio: dict  # t -> max ||F_{S->x}||_2 / (r^t gamma)
    witness: dict  # t -> (S, x)

    @property
    def passed(self) -> bool:
        return all(v <= 1 + 1e-12 for v in self.worst_ratio.values())


def box_restriction_norms(F: BoxFunction, S: Sequence[int], p: float = 2.0) -> np.ndarray:
    """Tensor over the values on S of ||F_{S->x}||_p."""
    keep = {s - 1 for s in S}
    axes = tuple(a for a in range(F.m) if a not in keep)
    vals = np.abs(F.values.astype(np.float64)) ** p
    avg = vals.mean(axis=axes) if axes else vals
    return avg ** (1.0 / p)


def box_global_audit(F: BoxFunction, r: float, gamma: float | None = None, depth: int = 2) -> BoxGlobalReport:
    """Check ||F_{S->x}||_2 <= r^|S| gamma for every |S| <= depth."""
    gamma = box_norm(F, 2) if gamma is None else gamma
    worst: dict = {}
    witness: dict = {}
    for t in range(depth + 1):
        best = -1.0
        for S in itertools.combinations(range(1, F.m + 1), t):
            norms = box_restriction_norms(F, S)
            arg = np.unravel_index(int(np.argmax(norms)), norms.shape) if t else ()
            val = float(norms.max()) if t else float(norms)
            ratio = val / (r**t * gamma) if gamma > 0 else (0.0 if val == 0 else math.inf)
            if ratio > best:
                best = ratio
                witness[t] = (S, tuple(int(a) + 1 for a in arg))
        worst[t] = best
    return BoxGlobalReport(r, gamma, depth, worst, witness)


def klm_noise_rate(r: float, q: float = 4.0) -> float:
    return math.log(q) / (16 * r * q)


def klm_margin(F: BoxFunction, r: float, gamma: float, q: float = 4.0) -> float:
    """||F||_2^2 gamma^(q-2) - ||T_rho F||_q^q at rho = log q / (16 r q)."""
    rho = klm_noise_rate(r, q)
    lhs = box_norm(box_noise(F.to_float(), rho), q) ** q
    return box_norm(F, 2) ** 2 * gamma ** (q - 2) - lhs
