"""The acceptance battery: twelve criteria, each returning a CriterionResult.

Used by ``snh verify-all --n 5`` and by the pytest acceptance suite.  Each
criterion that compares against a reference builds that reference by an
independent route (junta least squares, object-level permutation arithmetic,
brute-force scans), so agreement is evidence rather than tautology.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import characters, combinatorics, coupling, experiments
from .algebra import (
    GroupFunction,
    _dense_operator,
    _projector_matrix,
    convolve,
    degree_cum,
    inner,
    isotypic_decomposition,
    isotypic_project,
    lp_norm,
)
from .boxspace import BoxFunction
from .globalness import global_audit, level_d_check
from .permcore import Permutation, even_ranks, images_table, multiplication_table, partitions


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"CRITERION {self.number:2d} {self.name}: {'PASS' if self.passed else 'FAIL'}"


def _result(number: int, name: str, checks: dict, **details) -> CriterionResult:
    failed = [k for k, v in checks.items() if not v]
    return CriterionResult(number, name, not failed, dict(details, checks=checks, failed=failed))


# ---------------------------------------------------------------- 1. characters


def character_exactness(max_n: int = 8) -> CriterionResult:
    checks = {}
    for n in range(1, max_n + 1):
        t = characters.character_table(n)
        checks[f"n={n}"] = t.check_dimensions() and t.check_orthogonality()
    return _result(1, "character exactness", checks)


# ---------------------------------------------------------------- 2. decomposition


def _junta_projectors(n: int, max_degree: int) -> list:
    """Orthogonal projectors onto spans of d-umvirate indicators, by SVD (independent of characters)."""
    img = images_table(n)
    out = []
    for d in range(max_degree + 1):
        cols = []
        for I in itertools.permutations(range(n), d):
            block = img[:, list(I)]
            for J in itertools.permutations(range(n), d):
                cols.append(np.all(block == np.array(J, dtype=block.dtype), axis=1))
        A = np.array(cols, dtype=np.float64).T
        u, s, _ = np.linalg.svd(A, full_matrices=False)
        basis = u[:, s > 1e-9 * s[0]]
        out.append(basis)
    return out


def decomposition_soundness(n: int = 6, samples: int = 100, seed: int = 0, oracle_degree: int = 3) -> CriterionResult:
    rng = np.random.default_rng(seed)
    bases = _junta_projectors(n, oracle_degree)
    worst_parseval = worst_idem = worst_orth = worst_oracle = 0.0
    for _ in range(samples):
        f = GroupFunction.random(n, rng)
        parts = isotypic_decomposition(f)
        worst_parseval = max(worst_parseval, abs(sum(inner(p, p) for p in parts.values()) - inner(f, f)))
        lams = list(parts)
        for a in lams:
            worst_idem = max(worst_idem, float(np.abs(isotypic_project(parts[a], a).values - parts[a].values).max()))
            for b in lams:
                if a < b:
                    worst_orth = max(worst_orth, abs(inner(parts[a], parts[b])))
        for d, Q in enumerate(bases):
            oracle = Q @ (Q.T @ f.values)
            worst_oracle = max(worst_oracle, float(np.abs(degree_cum(f, d).values - oracle).max()))
    checks = {
        "parseval<=1e-9": worst_parseval <= 1e-9,
        "idempotent<=1e-10": worst_idem <= 1e-10,
        "orthogonal<=1e-10": worst_orth <= 1e-10,
        "junta_oracle<=1e-8": worst_oracle <= 1e-8,
    }
    return _result(
        2, "decomposition soundness", checks, parseval=worst_parseval, idempotence=worst_idem,
        orthogonality=worst_orth, oracle=worst_oracle, samples=samples,
    )


# ---------------------------------------------------------------- 3. coupling equivalence


def coupling_equivalence(degrees=(4, 5)) -> CriterionResult:
    checks = {}
    for n in degrees:
        rep = coupling.joint_exact(n)
        checks[f"n={n} identical"] = rep.identical
        checks[f"n={n} marginals"] = rep.left_uniform and rep.right_uniform and rep.total_is_one
    return _result(3, "coupling equivalence", checks)


# ---------------------------------------------------------------- 4. operator contracts


def operator_contracts(psd_samples: int = 200, seed: int = 0) -> CriterionResult:
    rng = np.random.default_rng(seed)
    checks = {}
    for n in range(2, coupling.EXACT_COUPLING_N + 1):
        f = coupling.random_exact_function(n, rng)
        F = BoxFunction(n, np.array([Fraction(int(v)) for v in rng.integers(-5, 6, n**n)], dtype=object))
        checks[f"adjoint n={n}"] = coupling.box_inner_exact(coupling.apply_TC(f), F) == inner(f, coupling.apply_TC_star(F))
    n = coupling.EXACT_COUPLING_N
    rho = Fraction(1, 4)
    tilde = coupling.noise_matrix(n, rho, "tilde")
    checks["tilde psd on samples"] = all(
        tilde.quadratic_form(coupling.random_exact_function(n, rng).values) >= 0 for _ in range(psd_samples)
    )
    checks["tilde psd (exact LDL)"] = coupling.exact_psd(tilde).psd
    sym = coupling.noise_matrix(n, float(rho), "symmetrized")
    checks["symmetrized commutes"] = coupling.commutes_both_sides(sym)
    worst = -math.inf
    for _ in range(50):
        g = GroupFunction.random(n, rng)
        worst = max(worst, lp_norm(coupling.sn_noise(g, float(rho))) - lp_norm(g))
    checks["contraction"] = worst <= 1e-12
    return _result(4, "operator contracts", checks, contraction_gap=worst)


# ---------------------------------------------------------------- 5. globalness preservation


def curated_global_suite(n: int = 5) -> dict:
    rng = np.random.default_rng(0)
    img = images_table(n)
    return {
        "constant": GroupFunction.constant(n),
        "sign": GroupFunction.sign(n),
        "alternating": GroupFunction.indicator(n, even_ranks(n)),
        "n_cycles": GroupFunction.indicator(n, combinatorics.class_ranks(n, [(n,)])),
        "three_cycles": GroupFunction.indicator(n, combinatorics.class_ranks(n, [(3,) + (1,) * (n - 3)])),
        "random_half": GroupFunction.indicator(n, np.flatnonzero(rng.random(math.factorial(n)) < 0.5)),
        "random_signs": GroupFunction(n, rng.choice([-1.0, 1.0], math.factorial(n))),
        "dictator": GroupFunction.indicator(n, np.flatnonzero(img[:, 0] == 0)),
        "two_point": GroupFunction.indicator(n, np.flatnonzero((img[:, 0] == 1) & (img[:, 1] == 0))),
    }


def globalness_preservation(n: int = 5) -> CriterionResult:
    checks = {}
    ratios = {}
    for name, f in curated_global_suite(n).items():
        r = coupling.minimal_global_r(f, 2)
        rep = coupling.globalness_preserved(f.to_exact(), r, depth=2)
        checks[name] = rep.source_global and rep.image_global
        ratios[name] = {"r": r, "image_worst": rep.image_worst}
    return _result(5, "globalness preservation", checks, ratios=ratios)


# ---------------------------------------------------------------- 6. spectra


def spectra() -> CriterionResult:
    petersen = [e.eigenvalue for e in combinatorics.kneser_spectrum(5, 2) if e.level == 2]
    checks = {"petersen": len(petersen) == 1 and abs(petersen[0] - 1 / 3) <= 1e-9}
    values = {}
    for n, k in [(6, 2), (8, 3)]:
        rep = combinatorics.disjointness_level_norm(n, k, report=True)
        checks[f"D_{n},{k}"] = rep.dichotomy_holds
        values[f"D_{n},{k}"] = rep.level_eigenvalues
    return _result(6, "Kneser/disjointness spectra", checks, petersen=petersen, levels=values)


# ---------------------------------------------------------------- 7. staying


def staying_machinery(n: int = 6, max_d: int = 2) -> CriterionResult:
    checks = {}
    p = Fraction(10, n)
    for d in range(1, max_d + 1):
        for I in itertools.permutations(range(1, n + 1), d):
            nu = coupling.induced_tuple_coupling(n, I)
            dec = coupling.staying_decompose(nu)
            key = ",".join(map(str, I))
            checks[f"{key} reconstruct"] = dec.exact and dec.supports_ok()
            checks[f"{key} spread"] = coupling.spread_certificate(nu, p).holds
            checks[f"{key} alpha"] = all(a <= coupling.alpha_bound(nu.p_lazy, d, S) for S, a in dec.alpha.items())
            checks[f"{key} norms"] = all(v.within_bound for v in coupling.staying_norms(nu).values())
    return _result(7, "staying machinery", checks, couplings=len(checks) // 4)


# ---------------------------------------------------------------- 8. band example


def band_closed_forms(n: int = 8, ells=(1, 2, 3)) -> CriterionResult:
    checks = {}
    details = {}
    N = math.factorial(n)
    for ell in ells:
        params = experiments.BandParams(n, ell)
        band = experiments.make_band(params)
        f = GroupFunction.indicator(n, band.ranks)
        checks[f"l={ell} mu"] = band.mu == experiments.band_measure_formula(params)
        # exhaustive count of pairs (a, s) in A^2 with a s in A, through one convolution
        total = round(float(inner(convolve(f, f), f)) * N * N)
        checks[f"l={ell} triples"] = band.triple_formula * band.ranks.size == total
        audit = global_audit(f, 4.0, 3, form="density", ambient="S_n")
        checks[f"l={ell} 4-global depth 3"] = audit.passed
        lin = experiments.band_linear_report(band)
        checks[f"l={ell} linear norms"] = all(abs(a - b) <= 1e-8 for a, b in zip(lin["norms"], lin["targets"]))
        checks[f"l={ell} pattern"] = max(lin["pattern_error"]) <= 1e-9
        details[ell] = {"mu": str(band.mu), "triples": total, "linear": lin, "audit": audit.worst_ratio}
    return _result(8, "band closed forms", checks, bands=details)


# ---------------------------------------------------------------- 9. level-d inequality


def _double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def level_d_inequality(n: int = 8, klm_samples: int = 50, seed: int = 0) -> CriterionResult:
    checks = {}
    details = {}
    sets = {f"band l={ell}": experiments.make_band(experiments.BandParams(n, ell)).ranks for ell in (1, 2, 3)}
    S = [1, 2]
    sets["level-d S=(1,2)"] = experiments.make_leveld_example(n, S, audit=False)["ranks"]
    for name, ranks in sets.items():
        f = GroupFunction.indicator(n, ranks)
        mu = ranks.size / math.factorial(n)
        for d in (1, 2):
            rep = level_d_check(f, 4.0, d)
            checks[f"{name} d={d}"] = rep.passed
            entry = rep.summary()
            if name.startswith("level-d"):
                entry["lower_bound_flavour"] = mu * len(S) ** (d / 2) / math.sqrt(_double_factorial(2 * d - 1))
                entry["norm_le_d"] = lp_norm(degree_cum(f, d), 2)
            details[f"{name} d={d}"] = entry
    rng = np.random.default_rng(seed)
    m = 6
    bases = {}
    for lam in partitions(m):
        w, v = np.linalg.eigh(_projector_matrix(m, [lam]))
        bases[lam] = v[:, w > 0.5]
    worst = -math.inf
    for _ in range(klm_samples):
        f = GroupFunction.random(m, rng)
        op = _dense_operator(f)
        parts = isotypic_decomposition(f)
        for lam, Q in bases.items():
            norm = float(np.linalg.norm(op @ Q, 2))
            worst = max(worst, characters.dimension(lam) * norm**2 - inner(parts[lam], parts[lam]))
    checks["dim * ||T_f||^2 <= ||f^lam||^2"] = worst <= 1e-8
    return _result(9, "level-d inequality", checks, reports=details, klm_worst_gap=worst)


# ---------------------------------------------------------------- 10. mixing and diameter


def mixing_fixtures(count: int = 50, seed: int = 11) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = 4 + k % 3
        N = math.factorial(n)
        support = even_ranks(n) if k % 3 == 0 else np.arange(N)
        size = int(rng.integers(2, support.size))
        chosen = rng.choice(support, size, replace=False)
        weights = np.zeros(N)
        weights[chosen] = rng.random(size)
        out.append(GroupFunction(n, weights * N / weights.sum()))
    return out


def _covering_by_objects(gens, n: int) -> int:
    gens = [Permutation.from_rank(int(g), n) for g in gens]
    layer = set(gens)
    m = 1
    while len(layer) < math.factorial(n) // 2:
        layer = {g * p for g in gens for p in layer}
        m += 1
    return m


def mixing_and_diameter(seed: int = 3) -> CriterionResult:
    checks = {"mixing monotone": all(experiments.mixing_profile(f, 6).monotone for f in mixing_fixtures())}
    A = experiments.three_cycles(5)
    cn = experiments.covering_number(A, 5).covering_number
    checks["covering number A_5"] = cn == _covering_by_objects(A, 5)
    checks["schreier l=1"] = experiments.schreier_diameter(experiments.three_cycles(6), 6, 1)["diameter"] == 1
    rng = np.random.default_rng(seed)
    f, g, h = (GroupFunction(6, rng.random(720) * 2) for _ in range(3))
    defect = experiments.product_mixing_defect(f, g, h)
    checks["product mixing reconstruction"] = defect["reconstruction_error"] <= 1e-9
    ev = even_ranks(6)
    sets = [ev[rng.random(ev.size) < q] for q in (0.3, 0.5, 0.7)]
    checks["triple probability exact"] = experiments.triple_probability(*sets, 6)["equal"]
    return _result(10, "mixing and diameter", checks, covering_number=cn, defect=defect["defect"])


# ---------------------------------------------------------------- 11. Roth plumbing


def _brute_force_has_3ap(ranks, mult) -> bool:
    A = [int(a) for a in ranks]
    sq = {int(mult[y, y]) for y in A}
    for x in A:
        for z in A:
            p = int(mult[x, z])
            if p in sq:
                for y in A:
                    if int(mult[y, y]) == p and not (x == y == z):
                        return True
    return False


def roth_plumbing(trials: int = 60, seed: int = 5) -> CriterionResult:
    rng = np.random.default_rng(seed)
    none_confirmed = True
    collisions_found = True
    nones = 0
    for t in range(trials):
        n = 4 + t % 2
        N = math.factorial(n)
        mult = multiplication_table(n)
        A = np.sort(rng.choice(N, int(rng.integers(1, 8)), replace=False))
        res = experiments.find_3ap(A, n)
        if res["found"]:
            x, y, z = res["triple"]
            none_confirmed &= mult[x, z] == mult[y, y] and not (x == y == z)
        else:
            nones += 1
            none_confirmed &= not _brute_force_has_3ap(A, mult)
        x = int(rng.integers(N))
        partners = [int(y) for y in np.flatnonzero(np.diag(mult) == mult[x, x]) if y != x]
        if partners:
            B = np.unique([x, partners[0]] + [int(v) for v in rng.choice(N, 3)])
            collisions_found &= experiments.find_3ap(B, n)["found"]
    checks = {"none confirmed": bool(none_confirmed), "collisions found": bool(collisions_found)}
    return _result(11, "Roth plumbing", checks, empty_results=nones, trials=trials)


# ---------------------------------------------------------------- 12. determinism


def determinism(n: int = 4, seed: int = 7) -> CriterionResult:
    from .cli import body_text, verify_all

    a = body_text(verify_all(n, seed, True))
    b = body_text(verify_all(n, seed, True))
    return _result(12, "determinism", {"identical bodies": a == b}, bytes=len(a))


CRITERIA = [
    character_exactness,
    decomposition_soundness,
    coupling_equivalence,
    operator_contracts,
    globalness_preservation,
    spectra,
    staying_machinery,
    band_closed_forms,
    level_d_inequality,
    mixing_and_diameter,
    roth_plumbing,
    determinism,
]


def run_all() -> list:
    return [criterion() for criterion in CRITERIA]
