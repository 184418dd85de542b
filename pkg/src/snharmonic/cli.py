"""Command-line entry point: ``snh <command> ...``.

Exit codes: 0 when every check passes, 2 when a check fails (the report
carries a ``failures`` list), 1 for malformed input.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import algebra, characters, combinatorics, coupling, experiments, globalness
from .algebra import GroupFunction
from .permcore import PermutationError, even_ranks, ranks_of, read_permutation_set

SCHEMA_VERSION = 1
OUT_ENV = "SNH_OUT"


class InputError(Exception):
    """Malformed command-line input or input file."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 instead of argparse's 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    n: int | None
    seed: int
    workers: int
    exact: bool
    tol: float
    out: Path

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        out = args.out or os.environ.get(OUT_ENV) or "reports"
        return cls(args.n, args.seed, args.workers, args.exact, args.tol, Path(out))

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "seed": self.seed,
            "workers": self.workers,
            "exact": self.exact,
            "tol": self.tol,
        }


# ---------------------------------------------------------------- JSON plumbing


def jsonable(obj):
    """Recursively convert to JSON types; exact rationals become strings."""
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    if isinstance(obj, dict):
        return {_key(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(jsonable(v) for v in obj)
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def _key(k) -> str:
    if isinstance(k, (tuple, list, frozenset, set)):
        items = sorted(k) if isinstance(k, (frozenset, set)) else k
        return "(" + ",".join(str(x) for x in items) + ")"
    return str(k)


def body_text(body: dict) -> str:
    return json.dumps(jsonable(body), indent=2, sort_keys=True)


def save_report(name: str, body: dict, cfg: RunConfig, command: list) -> Path:
    """Write {schema_version, header, body}; the timestamp lives only in the header."""
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / f"{name}.json"
    header = {
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "command": command,
        "config": cfg.as_dict(),
    }
    text = (
        "{\n"
        f'  "schema_version": {SCHEMA_VERSION},\n'
        f'  "header": {json.dumps(jsonable(header), sort_keys=True)},\n'
        f'  "body": {_indent(body_text(body))}\n'
        "}\n"
    )
    path.write_text(text)
    return path


def _indent(text: str) -> str:
    return text.replace("\n", "\n  ")


def load_report(path: str) -> dict:
    data = json.loads(Path(path).read_text())
    if data.get("schema_version") != SCHEMA_VERSION:
        raise InputError(f"{path}: unsupported schema version {data.get('schema_version')!r}")
    return data


def load_set(path: str, n: int | None = None) -> tuple:
    """(degree, sorted rank array) from a permutation-set file."""
    try:
        perms = read_permutation_set(path, n)
    except (OSError, PermutationError) as exc:
        raise InputError(str(exc)) from exc
    if not perms:
        return n, np.zeros(0, dtype=np.int64)
    deg = perms[0].n
    if n is not None and deg != n:
        raise InputError(f"{path}: permutations have degree {deg}, expected {n}")
    return deg, ranks_of(perms)


def load_function(path: str) -> GroupFunction:
    try:
        return GroupFunction.from_csv(path)
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from exc


# ---------------------------------------------------------------- command bodies


def _need_n(cfg: RunConfig, cap: int = 8) -> int:
    if cfg.n is None:
        raise InputError("--n is required")
    if not 1 <= cfg.n <= cap:
        raise InputError(f"--n must lie in 1..{cap}")
    return cfg.n


def cmd_chartable(args, cfg: RunConfig) -> tuple:
    n = _need_n(cfg, characters.MAX_CHAR_N)
    table = characters.character_table(n)
    checks = {
        "dimensions": table.check_dimensions(),
        "orthogonality": table.check_orthogonality(),
        "sign_twist": table.check_sign_twist(),
    }
    if args.csv:
        cfg.out.mkdir(parents=True, exist_ok=True)
        (cfg.out / f"chartable_n{n}.csv").write_text(table.to_csv())
    body = {"n": n, "checks": checks, "table": json.loads(table.to_json())}
    return f"chartable_n{n}", body, [k for k, v in checks.items() if not v]


def cmd_decompose(args, cfg: RunConfig) -> tuple:
    if args.input:
        f = load_function(args.input)
    else:
        n = _need_n(cfg)
        f = GroupFunction.random(n, np.random.default_rng(cfg.seed))
    if cfg.exact:
        f = f.to_exact()
    parts = algebra.isotypic_decomposition(f)
    norms = {lam: algebra.inner(p, p) for lam, p in parts.items()}
    total = algebra.inner(f, f)
    recon = sum(norms.values())
    err = abs(float(recon) - float(total))
    by_degree: dict = {}
    by_level: dict = {}
    for lam, v in norms.items():
        d = characters.degree_index(lam)
        lv = characters.level(lam)
        by_degree[d] = by_degree.get(d, 0) + v
        by_level[lv] = by_level.get(lv, 0) + v
    ok = (recon == total) if f.exact else err <= cfg.tol
    body = {
        "n": f.n,
        "norm_squared": total,
        "by_irrep": norms,
        "by_degree": by_degree,
        "by_level": by_level,
        "parseval_error": err,
        "parseval": ok,
    }
    return f"decompose_n{f.n}", body, [] if ok else ["parseval"]


def cmd_spectra(args, cfg: RunConfig) -> tuple:
    if args.kind in ("kneser", "disjointness"):
        n = _need_n(cfg, 12)
        if args.k is None or not 1 <= args.k <= n // 2:
            raise InputError("--k must satisfy 1 <= k <= n/2")
        fn = combinatorics.kneser_spectrum if args.kind == "kneser" else combinatorics.disjointness_spectrum
        entries = fn(n, args.k)
        body = {
            "kind": args.kind,
            "n": n,
            "k": args.k,
            "spectrum": [{"level": e.level, "eigenvalue": e.eigenvalue, "multiplicity": e.multiplicity} for e in entries],
        }
        failures = []
        if args.kind == "kneser":
            for e in entries:
                exact = float(combinatorics.kneser_level_eigenvalue(n, args.k, e.level))
                if abs(e.eigenvalue - exact) > max(cfg.tol, 1e-9):
                    failures.append(f"level {e.level}")
        else:
            rep = combinatorics.disjointness_level_norm(n, args.k, report=True)
            body["top_level_norm"] = rep.norm
            body["dichotomy"] = rep.dichotomy_holds
            if not rep.dichotomy_holds:
                failures.append("dichotomy")
        return f"spectra_{args.kind}_n{n}_k{args.k}", body, failures
    if not args.input:
        raise InputError("spectra function needs --in f.csv")
    f = load_function(args.input)
    rep = algebra.spectral_report(f, seed=cfg.seed)
    body = {
        "n": f.n,
        "by_partition": {lam: est.value for lam, est in rep.by_partition.items()},
        "by_level": rep.by_level,
        "by_degree": rep.by_degree,
        "all_converged": rep.all_converged,
    }
    return f"spectra_function_n{f.n}", body, [] if rep.all_converged else ["convergence"]


def cmd_global(args, cfg: RunConfig) -> tuple:
    n, ranks = load_set(args.set, cfg.n)
    if ranks.size == 0:
        raise InputError("globalness of the empty set is undefined")
    if n > experiments.MAX_EXP_N:
        raise InputError(f"audits limited to n <= {experiments.MAX_EXP_N}")
    ambient = args.ambient or experiments.ambient_of(ranks, n)
    if args.action == "audit":
        f = GroupFunction.indicator(n, ranks)
        rep = globalness.global_audit(f, args.r, args.depth, form=args.form, biglobal=args.biglobal, ambient=ambient)
        body = rep.summary()
        return f"global_audit_n{n}", body, [] if rep.passed else [f"restriction {rep.worst_key}"]
    if args.action == "find":
        res = globalness.find_global_restriction(ranks, n, args.r, ambient)
        body = {
            "key": str(res.key),
            "density": res.density,
            "base_density": res.base_density,
            "certified_depth": res.certified_depth,
            "complete": res.complete,
            "is_max_over_K": res.is_max_over_K,
            "lower_bound_holds": res.lower_bound_holds(),
            "steps": [str(s) for s in res.steps],
        }
        ok = res.lower_bound_holds() and res.is_max_over_K
        return f"global_find_n{n}", body, [] if ok else ["densification"]
    f = GroupFunction.indicator(n, ranks)
    try:
        rep = globalness.level_d_check(f, args.r, args.d, ambient=ambient)
    except globalness.UncertifiedParameters as exc:
        return f"global_level_d_n{n}", {"error": str(exc)}, ["uncertified"]
    body = rep.summary()
    return f"global_level_d_n{n}", body, [] if rep.passed else ["level-d"]


def cmd_coupling(args, cfg: RunConfig) -> tuple:
    if args.action == "verify":
        n = _need_n(cfg, coupling.EXACT_COUPLING_N)
        body = coupling.verify_coupling(n, cfg.seed)
        keys = [
            "joint_identical",
            "joint_total_one",
            "left_marginal_uniform",
            "right_marginal_uniform",
            "adjoint_equal",
            "left_equivariant",
            "tilde_psd_forms",
            "symmetrized_commutes",
        ]
        return f"coupling_verify_n{n}", body, [k for k in keys if not body[k]]
    if not args.input:
        raise InputError("coupling noise needs --in f.csv")
    f = load_function(args.input)
    if f.n > coupling.EXACT_COUPLING_N:
        raise InputError(f"noise operator limited to n <= {coupling.EXACT_COUPLING_N}")
    try:
        rho = Fraction(args.rho)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad --rho {args.rho!r}") from exc
    if not 0 < rho < 1:
        raise InputError("--rho must lie in (0, 1)")
    g = coupling.sn_noise(f.to_exact() if cfg.exact else f, rho if cfg.exact else float(rho), args.mode)
    if args.out and str(args.out).endswith(".csv"):
        g.to_csv(args.out)
        cfg.out = Path(args.out).parent
    nf = algebra.lp_norm(f.to_float(), 2)
    ng = algebra.lp_norm(g.to_float(), 2)
    body = {"n": f.n, "rho": rho, "mode": args.mode, "norm_in": nf, "norm_out": ng, "contraction": ng <= nf + 1e-12}
    return f"coupling_noise_n{f.n}", body, [] if body["contraction"] else ["contraction"]


def cmd_exp(args, cfg: RunConfig) -> tuple:
    kind = args.kind
    if kind == "band":
        n = _need_n(cfg)
        try:
            params = experiments.BandParams(n, args.ell)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        band = experiments.make_band(params)
        body = band.summary()
        failures = [k for k in ("mu_matches", "N_matches") if not body[k]]
        if args.full:
            audit = globalness.global_audit(
                GroupFunction.indicator(n, band.ranks), 4.0, min(3, n), form="density", ambient="S_n"
            )
            body["audit_density_r4"] = audit.summary()
            lin = experiments.band_linear_report(band)
            body["linear"] = lin
            if not audit.passed:
                failures.append("audit")
            if any(abs(a - b) > 1e-8 for a, b in zip(lin["norms"], lin["targets"])):
                failures.append("linear norms")
        return f"exp_band_n{n}_l{args.ell}", body, failures
    if kind == "mixing":
        if not args.f:
            raise InputError("exp mixing needs --f f.csv")
        f = load_function(args.f)
        try:
            rep = experiments.mixing_profile(f, args.steps)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        return f"exp_mixing_n{f.n}", rep.summary(), [] if rep.monotone else ["monotone"]
    if kind == "leveld":
        n = _need_n(cfg)
        S = [int(s) for s in args.S.split(",") if s.strip()] if args.S else []
        try:
            res = experiments.make_leveld_example(n, S)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        res.pop("ranks")
        return f"exp_leveld_n{n}", res, [] if res["mu_matches"] else ["mu"]
    if kind == "product":
        n = _need_n(cfg, 7)
        rng = np.random.default_rng(cfg.seed)
        ev = even_ranks(n)
        sets = [ev[rng.random(ev.size) < 0.5] for _ in range(3)]
        tri = experiments.triple_probability(*sets, n)
        dens = [experiments.set_density(s, n) for s in sets]
        dfx = experiments.product_mixing_defect(*dens)
        body = {"triple": tri, "defect": dfx}
        failures = [] if tri["equal"] and dfx["reconstruction_error"] <= 1e-9 else ["reconstruction"]
        return f"exp_product_n{n}", body, failures
    if not args.set:
        raise InputError(f"exp {kind} needs --set A.txt")
    n, ranks = load_set(args.set, cfg.n)
    if ranks.size == 0:
        raise InputError(f"{args.set}: empty set")
    if kind == "diameter":
        try:
            rep = experiments.covering_number(ranks, n, directed=args.directed)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        body = rep.summary()
        body["certificate"] = experiments.certificate(ranks, n)
        ok = experiments.layers_consistent(rep, ranks, n)
        return f"exp_diameter_n{n}", body, [] if ok else ["layers"]
    if kind == "schreier":
        return f"exp_schreier_n{n}", experiments.schreier_diameter(ranks, n, args.ell), []
    if kind == "roth":
        res = experiments.find_3ap(ranks, n)
        res["certificate"] = experiments.certificate(ranks, n) if ranks.size else {"available": False}
        return f"exp_roth_n{n}", res, []
    if kind == "bogolyubov":
        try:
            return f"exp_bogolyubov_n{n}", experiments.bogolyubov_search(ranks, n, args.M), []
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    if kind == "growth":
        return f"exp_growth_n{n}", experiments.growth_report(ranks, n), []
    if kind == "ruzsa":
        try:
            res = experiments.ruzsa_cover_demo(ranks, n)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        return f"exp_ruzsa_n{n}", res, [] if res["covers"] and res["within_basic_bound"] else ["cover"]
    raise InputError(f"unknown experiment {kind!r}")


# ---------------------------------------------------------------- verify-all


def verify_all(n: int, seed: int, exact: bool) -> dict:
    """A deterministic battery of checks scaled to degree n."""
    rng = np.random.default_rng(seed)
    checks: dict = {}

    table = characters.character_table(n)
    checks["characters"] = {
        "passed": table.check_dimensions() and table.check_orthogonality() and table.check_sign_twist(),
        "irreps": len(table.irreps),
    }

    m = min(n, 6)
    parseval, idem = [], []
    for _ in range(3):
        f = GroupFunction.random(m, rng)
        if exact and m <= 5:
            f = GroupFunction(m, np.array([Fraction(int(v)) for v in rng.integers(-4, 5, math.factorial(m))], dtype=object))
        parts = algebra.isotypic_decomposition(f)
        total = sum((algebra.inner(p, p) for p in parts.values()), 0)
        parseval.append(total == algebra.inner(f, f) if f.exact else abs(total - algebra.inner(f, f)) < 1e-9)
        p1 = algebra.degree_part(f, 1)
        again = algebra.degree_part(p1, 1)
        idem.append(bool(np.all(again.values == p1.values)) if f.exact else again.allclose(p1, 1e-10))
    checks["decomposition"] = {"passed": all(parseval) and all(idem), "degree": m, "exact": exact and m <= 5}

    c = min(n, coupling.EXACT_COUPLING_N)
    res = coupling.verify_coupling(c, seed)
    flags = [v for k, v in res.items() if isinstance(v, bool)]
    checks["coupling"] = dict(res, passed=all(flags))

    kn = combinatorics.kneser_spectrum(5, 2)
    petersen = [e.eigenvalue for e in kn if e.level == 2][0]
    k = max(1, min(2, n // 2))
    nn = max(n, 2 * k)
    dj = combinatorics.disjointness_level_norm(nn, k, report=True)
    checks["spectra"] = {
        "passed": abs(petersen - 1 / 3) < 1e-9 and dj.dichotomy_holds,
        "petersen_level2": petersen,
        "disjointness": {"n": nn, "k": k, "top_level": dj.level_eigenvalues},
    }

    if n >= 3:
        nu = coupling.induced_tuple_coupling(min(n, 6), (2, 3))
        lhs, rhs = coupling.lazy_identity(nu)
        dec = coupling.staying_decompose(nu)
        norms = coupling.staying_norms(nu)
        checks["staying"] = {
            "passed": lhs == rhs and dec.exact and dec.alpha_constant_in_a and all(v.within_bound for v in norms.values()),
            "p_lazy": nu.p_lazy,
            "alpha": dec.alpha,
            "norms": {S: v.value for S, v in norms.items()},
        }

    if n % 2 == 0 and n >= 4:
        params = experiments.BandParams(n, n // 2)
        band = experiments.make_band(params)
        s = band.summary()
        checks["band"] = dict(s, passed=s["mu_matches"] and s["N_matches"])

    if n >= 3:
        cyc = experiments.three_cycles(n)
        cov = experiments.covering_number(cyc, n)
        sch = experiments.schreier_diameter(cyc, n, 1)
        checks["diameter"] = {
            "passed": experiments.layers_consistent(cov, cyc, n) and sch["diameter"] == 1,
            "covering_number": cov.summary()["covering_number"],
            "profile": cov.summary()["profile"],
        }
        ap = experiments.find_3ap(even_ranks(n), n)
        checks["roth"] = {"passed": ap["found"] or n < 3, "triple": ap["triple"]}

    if n >= 5:
        from .acceptance import CRITERIA

        for criterion in CRITERIA:
            res = criterion()
            checks[f"criterion_{res.number:02d}"] = {"passed": res.passed, "name": res.name, "failed": res.details["failed"]}

    failures = [name for name, v in checks.items() if not v["passed"]]
    return {"n": n, "seed": seed, "exact": exact, "checks": checks, "failures": failures, "passed": not failures}


def cmd_verify_all(args, cfg: RunConfig) -> tuple:
    n = _need_n(cfg)
    body = verify_all(n, cfg.seed, cfg.exact)
    return f"verify_all_n{n}", body, body["failures"]


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=None, help="degree of the symmetric group")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1, help="accepted for compatibility; runs single-threaded")
    common.add_argument("--exact", action="store_true", help="exact rational arithmetic where available")
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--json", action="store_true", help="also print the report body to stdout")
    common.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./reports)")

    p = _Parser(prog="snh", description="Harmonic analysis toolkit for small symmetric groups.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("chartable", parents=[common], help="character table and its checks")
    q.add_argument("--csv", action="store_true")
    q.set_defaults(func=cmd_chartable)

    q = sub.add_parser("decompose", parents=[common], help="isotypic / degree / level decomposition")
    q.add_argument("--in", dest="input")
    q.set_defaults(func=cmd_decompose)

    q = sub.add_parser("spectra", parents=[common], help="Kneser, disjointness or convolution spectra")
    q.add_argument("kind", choices=["kneser", "disjointness", "function"])
    q.add_argument("--k", type=int)
    q.add_argument("--in", dest="input")
    q.set_defaults(func=cmd_spectra)

    q = sub.add_parser("global", parents=[common], help="globalness audits")
    q.add_argument("action", choices=["audit", "find", "level-d"])
    q.add_argument("--set", required=True)
    q.add_argument("--r", type=float, default=2.0)
    q.add_argument("--depth", type=int, default=2)
    q.add_argument("--d", type=int, default=1)
    q.add_argument("--form", choices=["l2", "density"], default="l2")
    q.add_argument("--biglobal", action="store_true")
    q.add_argument("--ambient", choices=["S_n", "A_n"])
    q.set_defaults(func=cmd_global)

    q = sub.add_parser("coupling", parents=[common], help="coupling verification and noise")
    q.add_argument("action", choices=["verify", "noise"])
    q.add_argument("--rho", default="1/4")
    q.add_argument("--mode", choices=["tilde", "symmetrized"], default="symmetrized")
    q.add_argument("--in", dest="input")
    q.set_defaults(func=cmd_coupling)

    q = sub.add_parser("exp", parents=[common], help="experiments")
    q.add_argument(
        "kind", choices=["diameter", "schreier", "band", "mixing", "roth", "bogolyubov", "growth", "leveld", "ruzsa", "product"]
    )
    q.add_argument("--set")
    q.add_argument("--f")
    q.add_argument("--ell", type=int, default=1)
    q.add_argument("--steps", type=int, default=5)
    q.add_argument("--M", type=int, default=1)
    q.add_argument("--S", default="")
    q.add_argument("--full", action="store_true")
    q.add_argument("--directed", action="store_true")
    q.set_defaults(func=cmd_exp)

    q = sub.add_parser("verify-all", parents=[common], help="deterministic battery of checks")
    q.set_defaults(func=cmd_verify_all)
    return p


def main(argv: list | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = RunConfig.from_args(args)
    try:
        name, body, failures = args.func(args, cfg)
    except InputError as exc:
        print(f"snh: error: {exc}", file=sys.stderr)
        return 1
    body = dict(body)
    body["failures"] = list(failures)
    path = save_report(name, body, cfg, ["snh"] + argv)
    status = "PASS" if not failures else "FAIL"
    detail = "" if not failures else f" ({'; '.join(map(str, failures))})"
    print(f"{status} {name}{detail} -> {path}")
    if args.json:
        print(body_text(body))
    return 0 if not failures else 2


if __name__ == "__main__":
    sys.exit(main())
