"""Permutations of {1..n}: arithmetic, lexicographic ranking, tuples, text formats.

Permutation objects are 1-indexed and immutable.  The vectorised tables used by
the numerical modules store images 0-indexed as ``int8`` rows, one row per
permutation, rows ordered by lexicographic rank.
"""

from __future__ import annotations

import itertools
import math
import re
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

MAX_ARITH_N = 12
MAX_TABLE_N = 8

Partition = tuple  # weakly decreasing tuple of positive ints
TupleKey = tuple  # tuple of distinct values in 1..n


class PermutationError(ValueError):
    pass


class Permutation:
    """A permutation of {1..n} stored by its image list."""

    __slots__ = ("_img",)

    def __init__(self, images: Sequence[int]):
        img = tuple(int(v) for v in images)
        n = len(img)
        if n < 1 or n > MAX_ARITH_N:
            raise PermutationError(f"degree {n} outside 1..{MAX_ARITH_N}")
        if sorted(img) != list(range(1, n + 1)):
            raise PermutationError(f"{img} is not a permutation of 1..{n}")
        self._img = img

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(range(1, n + 1))

    @classmethod
    def from_cycles(cls, cycles: Iterable[Sequence[int]], n: int) -> "Permutation":
        img = list(range(1, n + 1))
        seen: set[int] = set()
        for cyc in cycles:
            cyc = [int(c) for c in cyc]
            for c in cyc:
                if not 1 <= c <= n or c in seen:
                    raise PermutationError(f"bad cycle entry {c} for degree {n}")
                seen.add(c)
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                img[a - 1] = b
        return cls(img)

    @classmethod
    def from_rank(cls, rank: int, n: int) -> "Permutation":
        return unrank(rank, n)

    @property
    def n(self) -> int:
        return len(self._img)

    @property
    def images(self) -> tuple:
        return self._img

    def __call__(self, i: int) -> int:
        return self._img[i - 1]

    def __mul__(self, other: "Permutation") -> "Permutation":
        # (self * other)(i) = self(other(i))
        if other.n != self.n:
            raise PermutationError("degree mismatch")
        return Permutation(tuple(self._img[j - 1] for j in other._img))

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, v in enumerate(self._img, start=1):
            inv[v - 1] = i
        return Permutation(inv)

    def __pow__(self, k: int) -> "Permutation":
        base = self if k >= 0 else self.inverse()
        out = Permutation.identity(self.n)
        for _ in range(abs(k)):
            out = out * base
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and self._img == other._img

    def __hash__(self) -> int:
        return hash(self._img)

    def __repr__(self) -> str:
        return f"Permutation({list(self._img)})"

    def __str__(self) -> str:
        return " ".join(map(str, self._img))

    def rank(self) -> int:
        return rank(self)

    def cycles(self, include_fixed: bool = False) -> list:
        seen = [False] * self.n
        out = []
        for start in range(1, self.n + 1):
            if seen[start - 1]:
                continue
            cyc = []
            j = start
            while not seen[j - 1]:
                seen[j - 1] = True
                cyc.append(j)
                j = self._img[j - 1]
            if len(cyc) > 1 or include_fixed:
                out.append(tuple(cyc))
        return out

    def cycle_string(self) -> str:
        cyc = self.cycles()
        return "".join("(" + " ".join(map(str, c)) + ")" for c in cyc) or "()"

    def cycle_type(self) -> Partition:
        return tuple(sorted((len(c) for c in self.cycles(include_fixed=True)), reverse=True))

    def sign(self) -> int:
        return sign_of_partition(self.cycle_type())

    def apply_tuple(self, key: Sequence[int]) -> TupleKey:
        return tuple(self._img[i - 1] for i in key)


def compose(p: Permutation, q: Permutation) -> Permutation:
    return p * q


def cycle_type(p: Permutation) -> Partition:
    return p.cycle_type()


def sign(p: Permutation) -> int:
    return p.sign()


def sign_of_partition(lam: Sequence[int]) -> int:
    return -1 if sum(part - 1 for part in lam) % 2 else 1


# ---------------------------------------------------------------- ranking


def rank(p: Permutation | Sequence[int]) -> int:
    """Lexicographic rank of a permutation given by 1-indexed images."""
    img = p.images if isinstance(p, Permutation) else tuple(p)
    n = len(img)
    r = 0
    for i in range(n):
        smaller = sum(1 for k in range(i + 1, n) if img[k] < img[i])
        r += smaller * math.factorial(n - 1 - i)
    return r


def unrank(r: int, n: int) -> Permutation:
    if not 0 <= r < math.factorial(n):
        raise PermutationError(f"rank {r} out of range for degree {n}")
    pool = list(range(1, n + 1))
    img = []
    for i in range(n):
        f = math.factorial(n - 1 - i)
        c, r = divmod(r, f)
        img.append(pool.pop(c))
    return Permutation(img)


def all_permutations(n: int) -> Iterator[Permutation]:
    for img in itertools.permutations(range(1, n + 1)):
        yield Permutation(img)


def _check_table_n(n: int) -> None:
    if not 1 <= n <= MAX_TABLE_N:
        raise PermutationError(f"tabulated routines support 1 <= n <= {MAX_TABLE_N}, got {n}")


@lru_cache(maxsize=None)
def images_table(n: int) -> np.ndarray:
    """All permutations of degree n as 0-indexed image rows in rank order."""
    _check_table_n(n)
    arr = np.array(list(itertools.permutations(range(n))), dtype=np.int8).reshape(-1, n)
    arr.setflags(write=False)
    return arr


def rank_rows(rows: np.ndarray) -> np.ndarray:
    """Vectorised lexicographic rank of 0-indexed image rows."""
    rows = np.asarray(rows)
    n = rows.shape[-1]
    out = np.zeros(rows.shape[:-1], dtype=np.int64)
    for i in range(n - 1):
        smaller = (rows[..., i + 1:] < rows[..., i : i + 1]).sum(axis=-1)
        out += smaller * math.factorial(n - 1 - i)
    return out


@lru_cache(maxsize=None)
def inverse_ranks(n: int) -> np.ndarray:
    img = images_table(n)
    inv = np.empty_like(img)
    rows = np.arange(img.shape[0])[:, None]
    inv[rows, img] = np.arange(n, dtype=np.int8)[None, :]
    out = rank_rows(inv)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def sign_table(n: int) -> np.ndarray:
    img = images_table(n).astype(np.int64)
    inversions = np.zeros(img.shape[0], dtype=np.int64)
    for i in range(n):
        inversions += (img[:, i + 1:] < img[:, i : i + 1]).sum(axis=1)
    out = np.where(inversions % 2 == 0, 1, -1).astype(np.int8)
    out.setflags(write=False)
    return out


def even_ranks(n: int) -> np.ndarray:
    return np.flatnonzero(sign_table(n) == 1)


@lru_cache(maxsize=None)
def cycle_type_table(n: int) -> tuple:
    """(class index per rank, list of partitions in ascending lex order)."""
    classes = sorted(partitions(n))
    img = images_table(n).astype(np.int64)
    rows = np.arange(img.shape[0])[:, None]
    ident = np.arange(n)[None, :]
    # orbit length of every point: first k with s^k(i) = i
    length = np.zeros(img.shape, dtype=np.int64)
    cur = img.copy()
    for k in range(1, n + 1):
        hit = (cur == ident) & (length == 0)
        length[hit] = k
        cur = img[rows, cur]
    # counts[L] = number of L-cycles, encoded in base (n + 1)
    code = np.zeros(img.shape[0], dtype=np.int64)
    for L in range(1, n + 1):
        code = code * (n + 1) + (length == L).sum(axis=1) // L
    lookup = {}
    for k, lam in enumerate(classes):
        key = 0
        for L in range(1, n + 1):
            key = key * (n + 1) + lam.count(L)
        lookup[key] = k
    labels = np.array([lookup[c] for c in code.tolist()], dtype=np.int16)
    labels.setflags(write=False)
    return labels, classes


def compose_ranks(a: np.ndarray | int, b: np.ndarray | int, n: int) -> np.ndarray:
    """rank(a o b) for broadcastable arrays of ranks."""
    img = images_table(n)
    a = np.asarray(a)
    b = np.asarray(b)
    a, b = np.broadcast_arrays(a, b)
    ia = img[a.ravel()].astype(np.int64)
    ib = img[b.ravel()].astype(np.int64)
    prod = np.take_along_axis(ia, ib, axis=1)
    return rank_rows(prod).reshape(a.shape)


@lru_cache(maxsize=4)
def multiplication_table(n: int) -> np.ndarray:
    """mult[a, b] = rank(a o b); only for n <= 6."""
    if n > 6:
        raise PermutationError("full multiplication table limited to n <= 6")
    N = math.factorial(n)
    out = compose_ranks(np.arange(N)[:, None], np.arange(N)[None, :], n).astype(np.int32)
    out.setflags(write=False)
    return out


def right_multiply_ranks(sigma: Permutation, n: int) -> np.ndarray:
    """Array idx with idx[r] = rank(x_r o sigma)."""
    return compose_ranks(np.arange(math.factorial(n)), rank(sigma), n)


def left_multiply_ranks(sigma: Permutation, n: int) -> np.ndarray:
    """Array idx with idx[r] = rank(sigma o x_r)."""
    return compose_ranks(rank(sigma), np.arange(math.factorial(n)), n)


# ---------------------------------------------------------------- partitions


def partitions(n: int, max_part: int | None = None) -> list:
    """Partitions of n in reverse-lexicographic order."""
    if max_part is None:
        max_part = n
    if n == 0:
        return [()]
    out = []
    for first in range(min(n, max_part), 0, -1):
        for rest in partitions(n - first, first):
            out.append((first,) + rest)
    return out


def as_partition(lam: Sequence[int]) -> Partition:
    lam = tuple(int(x) for x in lam)
    if any(x <= 0 for x in lam) or list(lam) != sorted(lam, reverse=True):
        raise PermutationError(f"{lam} is not a partition")
    return lam


def conjugate(lam: Sequence[int]) -> Partition:
    lam = as_partition(lam)
    if not lam:
        return ()
    return tuple(sum(1 for x in lam if x > j) for j in range(lam[0]))


conjugate_partition = conjugate


def multiplicities(lam: Sequence[int]) -> dict:
    out: dict = {}
    for part in lam:
        out[part] = out.get(part, 0) + 1
    return out


def centralizer_order(lam: Sequence[int]) -> int:
    z = 1
    for part, m in multiplicities(lam).items():
        z *= part**m * math.factorial(m)
    return z


def class_size(lam: Sequence[int]) -> int:
    return math.factorial(sum(lam)) // centralizer_order(lam)


# ---------------------------------------------------------------- tuples


def enumerate_tuples(n: int, k: int) -> list:
    """Distinct k-tuples over {1..n} in lexicographic order."""
    return list(itertools.permutations(range(1, n + 1), k))


def tuple_count(n: int, k: int) -> int:
    return math.perm(n, k)


def tuple_rank(key: Sequence[int], n: int) -> int:
    """Lexicographic index of a distinct tuple (1-indexed entries) among n!/(n-k)! tuples."""
    k = len(key)
    r = 0
    for i, v in enumerate(key):
        c = v - 1 - sum(1 for u in key[:i] if u < v)
        r += c * math.perm(n - 1 - i, k - 1 - i)
    return r


def tuple_rank_rows(rows: np.ndarray, n: int) -> np.ndarray:
    """Vectorised tuple_rank for 0-indexed rows of shape (..., k)."""
    rows = np.asarray(rows, dtype=np.int64)
    k = rows.shape[-1]
    out = np.zeros(rows.shape[:-1], dtype=np.int64)
    for i in range(k):
        c = rows[..., i].copy()
        for j in range(i):
            c -= rows[..., j] < rows[..., i]
        out += c * math.perm(n - 1 - i, k - 1 - i)
    return out


def apply_tuple(p: Permutation, key: Sequence[int]) -> TupleKey:
    return p.apply_tuple(key)


# ---------------------------------------------------------------- text formats

_CYCLE_RE = re.compile(r"\(([^()]*)\)")


def parse_permutation(text: str, n: int | None = None) -> Permutation:
    """Parse ``"3 1 2"`` (images) or ``"(1 3 2)(4 5)"`` (cycles)."""
    s = text.strip()
    if not s:
        raise PermutationError("empty permutation text")
    if s.startswith("("):
        if _CYCLE_RE.sub("", s).strip():
            raise PermutationError(f"malformed cycle notation: {text!r}")
        cycles = []
        for body in _CYCLE_RE.findall(s):
            entries = body.replace(",", " ").split()
            cycles.append([int(e) for e in entries])
        top = max((max(c) for c in cycles if c), default=1)
        deg = n if n is not None else top
        if top > deg:
            raise PermutationError(f"cycle entry {top} exceeds degree {deg}")
        return Permutation.from_cycles([c for c in cycles if c], deg)
    try:
        img = [int(tok) for tok in s.replace(",", " ").split()]
    except ValueError as exc:
        raise PermutationError(f"malformed permutation: {text!r}") from exc
    if n is not None and len(img) != n:
        raise PermutationError(f"expected {n} images, got {len(img)}")
    return Permutation(img)


def format_permutation(p: Permutation, style: str = "images") -> str:
    return p.cycle_string() if style == "cycles" else str(p)


def read_permutation_set(path: str, n: int | None = None) -> list:
    """One permutation per line; ``#`` starts a comment; blank lines ignored."""
    perms = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            try:
                perms.append(parse_permutation(body, n))
            except PermutationError as exc:
                raise PermutationError(f"{path}:{lineno}: {exc}") from exc
    if perms and len({p.n for p in perms}) != 1:
        raise PermutationError(f"{path}: mixed degrees")
    return perms


def write_permutation_set(path: str, perms: Iterable[Permutation], style: str = "images") -> None:
    with open(path, "w") as fh:
        for p in perms:
            fh.write(format_permutation(p, style) + "\n")


def ranks_of(perms: Iterable[Permutation]) -> np.ndarray:
    return np.array(sorted({rank(p) for p in perms}), dtype=np.int64)
