"""Restrictions of functions on S_n to umvirates U_{I->J} and globalness audits.

An umvirate is the coset {s : s(I) = J} for distinct tuples I, J of equal
length t.  Restricted norms use the uniform measure on the umvirate intersected
with the ambient group (S_n, or A_n for functions supported on even
permutations).  Two conventions are supported and always tagged:

* ``form="l2"``: ||f_{I->J}||_2 <= r^t * gamma (gamma defaults to ||f||_2);
* ``form="density"``: E[|f| on U_{I->J}] <= r^t * E|f|, the L1 half of
  biglobalness; for indicators this reads mu(A_{I->J}) <= r^t mu(A).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import GroupFunction, degree_part, inner
from .permcore import (
    enumerate_tuples,
    images_table,
    sign_table,
    tuple_rank_rows,
)

DEFAULT_DEPTH_CAP = 4
_SLACK = 1e-12


class DepthCapError(ValueError):
    pass


class UncertifiedParameters(ValueError):
    pass


@dataclass(frozen=True)
class RestrictionKey:
    I: tuple
    J: tuple

    def __post_init__(self):
        if len(self.I) != len(self.J):
            raise ValueError("I and J must have equal length")
        if len(set(self.I)) != len(self.I) or len(set(self.J)) != len(self.J):
            raise ValueError("restriction tuples must have distinct entries")

    @property
    def depth(self) -> int:
        return len(self.I)

    def __str__(self) -> str:
        return f"{self.I}->{self.J}"


def ambient_mask(n: int, ambient: str) -> np.ndarray:
    if ambient == "S_n":
        return np.ones(math.factorial(n), dtype=bool)
    if ambient == "A_n":
        return sign_table(n) == 1
    raise ValueError(f"unknown ambient group {ambient!r}")


def detect_ambient(f: GroupFunction) -> str:
    odd = sign_table(f.n) == -1
    return "A_n" if not np.any(f.values.astype(np.float64)[odd]) else "S_n"


def restriction_table(f: GroupFunction, t: int, p: float = 2.0, ambient: str = "S_n") -> tuple:
    """Arrays (means, sizes) of shape (#I, #J) over [n]_t x [n]_t.

    means[I, J] = E_{U_{I->J} cap ambient} |f|^p (nan when the intersection is empty).
    """
    n = f.n
    img = images_table(n)
    mask = ambient_mask(n, ambient).astype(np.float64)
    weights = np.abs(f.values.astype(np.float64)) ** p * mask
    keys = enumerate_tuples(n, t)
    count = len(keys)
    sums = np.zeros((count, count))
    sizes = np.zeros((count, count))
    for a, key in enumerate(keys):
        cols = np.array(key, dtype=np.int64) - 1
        jdx = tuple_rank_rows(img[:, cols], n) if t else np.zeros(img.shape[0], dtype=np.int64)
        sums[a] = np.bincount(jdx, weights=weights, minlength=count)
        sizes[a] = np.bincount(jdx, weights=mask, minlength=count)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(sizes > 0, sums / np.maximum(sizes, 1), np.nan)
    return means, sizes


@dataclass
class Restriction:
    key: RestrictionKey
    ranks: np.ndarray
    values: np.ndarray
    l1: float
    l2: float
    density: float


def restrict(f: GroupFunction, key: RestrictionKey, ambient: str = "S_n") -> Restriction:
    """Restriction of f to U_{I->J} (intersected with the ambient group)."""
    n = f.n
    img = images_table(n)
    sel = ambient_mask(n, ambient).copy()
    for i, j in zip(key.I, key.J):
        sel &= img[:, i - 1] == j - 1
    ranks = np.flatnonzero(sel)
    vals = f.values[ranks]
    fv = vals.astype(np.float64)
    if ranks.size == 0:
        return Restriction(key, ranks, vals, 0.0, 0.0, 0.0)
    return Restriction(
        key, ranks, vals, float(np.abs(fv).mean()), float(np.sqrt((fv**2).mean())), float(fv.mean())
    )


@dataclass
class GlobalnessReport:
    r: float
    depth: int
    form: str
    ambient: str
    gamma: float
    worst_ratio: dict = field(default_factory=dict)
    witness: dict = field(default_factory=dict)
    gamma1: float | None = None
    worst_ratio_l1: dict = field(default_factory=dict)
    witness_l1: dict = field(default_factory=dict)
    gamma_convention: str = "default"

    @property
    def passed(self) -> bool:
        ok = all(v <= 1 + _SLACK for v in self.worst_ratio.values())
        return ok and all(v <= 1 + _SLACK for v in self.worst_ratio_l1.values())

    @property
    def worst_key(self) -> RestrictionKey | None:
        if not self.worst_ratio:
            return None
        t = max(self.worst_ratio, key=lambda s: (self.worst_ratio[s], -s))
        return self.witness.get(t)

    def summary(self) -> dict:
        return {
            "r": self.r,
            "depth": self.depth,
            "form": self.form,
            "ambient": self.ambient,
            "gamma": self.gamma,
            "gamma_convention": self.gamma_convention,
            "gamma1": self.gamma1,
            "passed": self.passed,
            "worst_ratio": {str(t): v for t, v in self.worst_ratio.items()},
            "witness": {str(t): str(k) for t, k in self.witness.items()},
            "worst_ratio_l1": {str(t): v for t, v in self.worst_ratio_l1.items()},
        }


def _scan(f: GroupFunction, depth: int, p: float, ambient: str, scale: float, r: float):
    worst: dict = {}
    witness: dict = {}
    for t in range(depth + 1):
        means, _ = restriction_table(f, t, p, ambient)
        norms = np.where(np.isnan(means), -1.0, np.nan_to_num(means) ** (1.0 / p))
        idx = int(np.argmax(norms))
        a, b = divmod(idx, norms.shape[1])
        keys = enumerate_tuples(f.n, t)
        bound = r**t * scale
        worst[t] = float(norms.flat[idx]) / bound if bound > 0 else (0.0 if norms.flat[idx] <= 0 else math.inf)
        witness[t] = RestrictionKey(keys[a], keys[b])
    return worst, witness


def global_audit(
    f: GroupFunction,
    r: float,
    depth: int,
    gamma: float | None = None,
    *,
    gamma1: float | None = None,
    biglobal: bool = False,
    form: str = "l2",
    ambient: str | None = None,
    force: bool = False,
) -> GlobalnessReport:
    """Exhaustive scan of every restriction with |I| <= depth.

    ``form="l2"`` compares ||f_{I->J}||_2 with r^t gamma.  ``biglobal=True``
    also compares ||f_{I->J}||_1 with r^t gamma1.  ``form="density"`` compares
    only the L1 norms (gamma1 defaults to ||f||_1).
    """
    if depth > DEFAULT_DEPTH_CAP and not force:
        raise DepthCapError(f"depth {depth} exceeds cap {DEFAULT_DEPTH_CAP}; pass force=True")
    depth = min(depth, f.n)
    ambient = ambient or detect_ambient(f)
    mask = ambient_mask(f.n, ambient)
    vals = np.abs(f.values.astype(np.float64))[mask]
    norm1 = float(vals.mean())
    norm2 = float(np.sqrt((vals**2).mean()))
    convention = "default" if gamma is None and gamma1 is None else "explicit"
    if form == "density":
        g1 = norm1 if gamma1 is None else gamma1
        worst, witness = _scan(f, depth, 1.0, ambient, g1, r)
        rep = GlobalnessReport(r, depth, form, ambient, g1, gamma1=g1, gamma_convention=convention)
        rep.worst_ratio, rep.witness = worst, witness
        return rep
    if form != "l2":
        raise ValueError(f"unknown form {form!r}")
    g2 = norm2 if gamma is None else gamma
    rep = GlobalnessReport(r, depth, form, ambient, g2, gamma_convention=convention)
    rep.worst_ratio, rep.witness = _scan(f, depth, 2.0, ambient, g2, r)
    if biglobal:
        g1 = norm1 if gamma1 is None else gamma1
        rep.gamma1 = g1
        rep.worst_ratio_l1, rep.witness_l1 = _scan(f, depth, 1.0, ambient, g1, r)
    return rep


# ---------------------------------------------------------------- densification


def _restricted_members(members_img: np.ndarray, key: RestrictionKey) -> np.ndarray:
    sel = np.ones(members_img.shape[0], dtype=bool)
    for i, j in zip(key.I, key.J):
        sel &= members_img[:, i - 1] == j - 1
    return sel


def _extension_densities(set_img, amb_img, key: RestrictionKey, t: int, n: int):
    """Densities of A inside U_{I I2 -> J J2} for all extensions of length t.

    Yields (I2, J2-tuples list, densities array over [n]_t indices).
    """
    free = [i for i in range(1, n + 1) if i not in key.I]
    a_sel = set_img[_restricted_members(set_img, key)]
    u_sel = amb_img[_restricted_members(amb_img, key)]
    count = math.perm(n, t)
    for I2 in itertools.permutations(free, t):
        cols = np.array(I2, dtype=np.int64) - 1
        ja = tuple_rank_rows(a_sel[:, cols], n) if t else np.zeros(len(a_sel), dtype=np.int64)
        ju = tuple_rank_rows(u_sel[:, cols], n) if t else np.zeros(len(u_sel), dtype=np.int64)
        hits = np.bincount(ja, minlength=count).astype(np.float64)
        size = np.bincount(ju, minlength=count).astype(np.float64)
        with np.errstate(invalid="ignore", divide="ignore"):
            dens = np.where(size > 0, hits / np.maximum(size, 1), -1.0)
        yield I2, dens


@dataclass
class RestrictionSearch:
    key: RestrictionKey
    density: float
    base_density: float
    r: float
    certified_depth: int
    complete: bool  # no violation possible beyond certified depth
    is_max_over_K: bool
    steps: list

    def lower_bound_holds(self) -> bool:
        return self.density >= self.base_density * self.r**self.key.depth * (1 - 1e-12)


def _density_in(set_img, amb_img, key: RestrictionKey) -> float:
    a = int(_restricted_members(set_img, key).sum())
    u = int(_restricted_members(amb_img, key).sum())
    return a / u if u else 0.0


def _best_target(set_img, amb_img, I: tuple, n: int) -> tuple:
    """argmax over K of the density of A in U_{I->K}."""
    best = (-1.0, None)
    for K in enumerate_tuples(n, len(I)):
        d = _density_in(set_img, amb_img, RestrictionKey(I, K))
        if d > best[0] + 1e-15:
            best = (d, K)
    return best[1], best[0]


def find_global_restriction(
    ranks: Sequence[int], n: int, r: float, ambient: str = "S_n", audit_depth: int = 2
) -> RestrictionSearch:
    """Densify A by restrictions until the current restriction is r-global (density form).

    Each step picks the shallowest violating extension, then replaces its
    target by the densest K for the extended source tuple.  The final
    restriction is audited to depth min(audit_depth, floor(log_r(1/density)));
    deeper violations are impossible because densities never exceed 1.
    """
    img = images_table(n)
    ranks = np.unique(np.asarray(ranks, dtype=np.int64))
    set_img = img[ranks]
    amb_img = img[ambient_mask(n, ambient)]
    base = len(ranks) / len(amb_img)
    key = RestrictionKey((), ())
    dens = base
    steps = [(key, dens)]
    while True:
        budget = int(math.floor(math.log(1.0 / dens, r) + 1e-12)) if dens > 0 else 0
        depth = min(audit_depth, budget, n - key.depth)
        violation = None
        for t in range(1, depth + 1):
            best = None
            for I2, dvec in _extension_densities(set_img, amb_img, key, t, n):
                k = int(np.argmax(dvec))
                if dvec[k] > r**t * dens * (1 + 1e-12) and (best is None or dvec[k] > best[1]):
                    best = (I2, dvec[k])
            if best is not None:
                violation = best
                break
        if violation is None:
            break
        I_new = key.I + tuple(violation[0])
        K, dK = _best_target(set_img, amb_img, I_new, n)
        key = RestrictionKey(I_new, K)
        dens = dK
        steps.append((key, dens))
    budget = int(math.floor(math.log(1.0 / dens, r) + 1e-12)) if dens > 0 else 0
    certified = min(audit_depth, budget, n - key.depth)
    K_best, d_best = _best_target(set_img, amb_img, key.I, n) if key.depth else ((), base)
    return RestrictionSearch(
        key=key,
        density=dens,
        base_density=base,
        r=r,
        certified_depth=certified,
        complete=budget <= audit_depth,
        is_max_over_K=abs(d_best - dens) <= 1e-12,
        steps=steps,
    )


def restricted_audit(ranks: Sequence[int], n: int, key: RestrictionKey, r: float, depth: int, ambient: str = "S_n"):
    """Density-form audit of A_{I->J} inside its umvirate; returns the worst ratio."""
    img = images_table(n)
    set_img = img[np.asarray(ranks, dtype=np.int64)]
    amb_img = img[ambient_mask(n, ambient)]
    dens = _density_in(set_img, amb_img, key)
    worst = 1.0
    for t in range(1, min(depth, n - key.depth) + 1):
        for _, dvec in _extension_densities(set_img, amb_img, key, t, n):
            worst = max(worst, float(dvec.max()) / (r**t * dens) if dens > 0 else 0.0)
    return worst


# ---------------------------------------------------------------- level-d inequality


@dataclass
class LevelDReport:
    d: int
    r: float
    gamma1: float
    gamma2: float
    level_norm_sq: float
    bound: float
    hypothesis_holds: bool
    audit: GlobalnessReport
    constant: float = 1e6

    @property
    def margin(self) -> float:
        return self.bound - self.level_norm_sq

    @property
    def passed(self) -> bool:
        # roundoff in the projection can leave ~1e-32 where the exact part vanishes
        return self.margin >= -1e-12 * max(1.0, self.gamma1**2)

    def summary(self) -> dict:
        return {
            "d": self.d,
            "r": self.r,
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "level_norm_sq": self.level_norm_sq,
            "bound": self.bound,
            "margin": self.margin,
            "hypothesis_holds": self.hypothesis_holds,
            "hypothesis_waived": not self.hypothesis_holds,
            "passed": self.passed,
            "audit_passed": self.audit.passed,
        }


def level_d_bound(r: float, gamma1: float, gamma2: float, d: int, constant: float = 1e6) -> float:
    if d == 0:
        return gamma1**2
    return gamma1**2 * (constant * r**2 / d * math.log(gamma2 / gamma1)) ** d


def level_d_check(
    f: GroupFunction,
    r: float,
    d: int,
    gamma1: float | None = None,
    gamma2: float | None = None,
    audit_depth: int = 2,
    ambient: str | None = None,
    constant: float = 1e6,
) -> LevelDReport:
    """Compare ||f^{=d}||_2^2 with gamma1^2 (C r^2 d^-1 log(gamma2/gamma1))^d.

    The biglobal parameters are certified by an exhaustive audit first.
    """
    ambient = ambient or detect_ambient(f)
    audit = global_audit(f, r, audit_depth, gamma2, gamma1=gamma1, biglobal=True, ambient=ambient)
    if not audit.passed:
        raise UncertifiedParameters(f"f is not ({r}, gamma1, gamma2, {audit_depth})-biglobal")
    g1, g2 = audit.gamma1, audit.gamma
    part = degree_part(f.to_float(), d)
    norm_sq = inner(part, part)
    hyp = d <= min(0.25 * math.log(g2 / g1), 1e-5 * f.n) if g2 > g1 else False
    return LevelDReport(d, r, g1, g2, norm_sq, level_d_bound(r, g1, g2, d, constant), hyp, audit, constant)
