"""Command-line front end.

    artifact [--config FILE] [--out DIR] [--seed N] SUBCOMMAND [options]

Every subcommand writes <out>/<subcommand>.json (schema version REPORT_SCHEMA)
and exits with status 1 when any check fails.  Settings come from the [run]
section of an INI config file; command-line flags override it.  The thread
count for `all` is read from ARTIFACT_THREADS (default: all cores).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from importlib import metadata
from pathlib import Path

import numpy as np

REPORT_SCHEMA = 1
THREADS_ENV = "ARTIFACT_THREADS"
SUITES = ("verify-representation", "coefficients", "slice-bounds", "slice-testing",
          "forests", "grassmann", "resum", "bounds-report")


@dataclass
class RunConfig:
    cutoff: int = 1
    M: int = 2
    j_max: int = 8
    lambdas: list = field(default_factory=lambda: [0.1])
    rho: float = 0.5
    samples: int = 100_000
    seed: int = 0
    order: int = 3
    n_max: int = 6
    out: str = "reports"
    cache_dir: str = ""
    csv: bool = False
    plot: bool = False

    def validate(self):
        if self.cutoff < 0:
            raise ValueError("cutoff must be >= 0")
        if self.M < 2 or self.j_max < 0:
            raise ValueError("need M >= 2 and j_max >= 0")
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        if self.samples < 2:
            raise ValueError("samples must be >= 2")
        if not 1 <= self.order <= 4:
            raise ValueError("order must lie in 1..4")
        if not 1 <= self.n_max <= 6:
            raise ValueError("n_max must lie in 1..6")

    def hash(self) -> str:
        d = asdict(self)
        for k in ("out", "csv", "plot", "cache_dir"):
            d.pop(k)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


_TYPES = {"cutoff": int, "M": int, "j_max": int, "rho": float, "samples": int, "seed": int,
          "order": int, "n_max": int, "out": str, "cache_dir": str}


def _floats(text: str) -> list:
    return [float(x) for x in text.replace(",", " ").split()]


def load_config(path) -> dict:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    if not cp.read(path):
        raise FileNotFoundError(path)
    if "run" not in cp:
        raise ValueError(f"{path}: missing [run] section")
    sec = cp["run"]
    out = {}
    for k, v in sec.items():
        if k == "lambdas":
            out[k] = _floats(v)
        elif k in ("csv", "plot"):
            out[k] = sec.getboolean(k)
        elif k in _TYPES:
            out[k] = _TYPES[k](v)
        else:
            raise ValueError(f"{path}: unknown key {k!r}")
    return out


class Report:
    def __init__(self, suite: str, cfg: RunConfig):
        self.suite = suite
        self.cfg = cfg
        self.checks = []
        self.timings = {}

    def check(self, name: str, ok, **values):
        status = "skip" if ok is None else ("pass" if ok else "fail")
        self.checks.append({"name": name, "status": status, "values": _jsonable(values)})

    @property
    def status(self) -> str:
        return "fail" if any(c["status"] == "fail" for c in self.checks) else "pass"

    def to_json(self) -> dict:
        try:
            version = metadata.version("artifact")
        except metadata.PackageNotFoundError:
            version = "unknown"
        return {"schema": REPORT_SCHEMA, "suite": self.suite, "status": self.status,
                "checks": self.checks,
                "provenance": {"config_hash": self.cfg.hash(), "code_version": version,
                               "seed": self.cfg.seed},
                "timings": self.timings}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def strip_timings(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timings"}


# -- suites ------------------------------------------------------------------------

def suite_verify_representation(cfg: RunConfig) -> Report:
    from .direct_eval import (z_direct_quadrature, z_intermediate_field,
                              z_intermediate_quadrature)
    from .model_core import inverse_identity_check
    rep = Report("verify-representation", cfg)
    rep.check("inverse_identity", inverse_identity_check(min(cfg.cutoff, 6)),
              cutoff=min(cfg.cutoff, 6))
    if cfg.cutoff > 1:
        rep.check("representation", None, reason="direct quadrature covers cutoff <= 1")
        return rep
    for lam in cfg.lambdas:
        zd = z_direct_quadrature(lam, cfg.cutoff).value.real
        zq = z_intermediate_quadrature(lam, cfg.cutoff).value
        mc = z_intermediate_field(lam, cfg.cutoff, cfg.samples, cfg.seed)
        dq = abs(zd - zq)
        dm = abs(zd - mc.value)
        rep.check(f"quadrature_lambda_{lam}", dq < 1e-6, z_direct=zd, z_sigma=zq, delta=dq)
        rep.check(f"monte_carlo_lambda_{lam}", dm <= 3 * mc.std_error, z_direct=zd,
                  z_mc=mc.value, std_error=mc.std_error, delta=dm)
    return rep


def suite_coefficients(cfg: RunConfig) -> Report:
    from .perturbation import (a1_closed_form, cached_log_z_coefficients, coefficient_oracle,
                               log_z_coefficients)
    rep = Report("coefficients", cfg)
    if cfg.cache_dir:
        ps = cached_log_z_coefficients(cfg.cutoff, cfg.order, cfg.cache_dir)
        fresh = log_z_coefficients(cfg.cutoff, cfg.order)
        rep.check("cache", ps.coefficients == fresh.coefficients)
    else:
        ps = log_z_coefficients(cfg.cutoff, cfg.order)
    rep.check("series", True, **ps.to_json())
    rep.check("a1_closed_form", ps.coefficients[0] == a1_closed_form(cfg.cutoff),
              a1=ps.coefficients[0])
    if cfg.cutoff == 0:
        rep.check("moment_oracle", ps.coefficients == coefficient_oracle(0, cfg.order).coefficients)
    rep.series = ps
    return rep


def suite_slice_bounds(cfg: RunConfig) -> Report:
    from .scales import (ScalePartition, q_kernel_sweep, slice_bounds_report,
                         tadpole_slice_report)
    rep = Report("slice-bounds", cfg)
    for M in sorted({2, 3, cfg.M}):
        part = ScalePartition(M, 10)
        r = slice_bounds_report(part)
        rep.check(f"propagator_M{M}", r["ok"], rows=r["rows"])
        t = tadpole_slice_report(part)
        finite = math.isfinite(t["T_const"]) and math.isfinite(t["Pi_const"])
        rep.check(f"tadpoles_M{M}", finite, T_const=t["T_const"], Pi_const=t["Pi_const"],
                  rows=t["rows"])
    q = q_kernel_sweep(ScalePartition(cfg.M, cfg.j_max), cfg.rho)
    rep.check("q_kernel", q["ok"] and q["c_norm"] < 10 and q["c_trace"] < 10,
              c_norm=q["c_norm"], c_trace=q["c_trace"], min_eig=q["min_eig"], M=cfg.M,
              j_max=cfg.j_max, rho=cfg.rho)
    rep.rows = q["rows"]
    return rep


def suite_slice_testing(cfg: RunConfig) -> Report:
    from .slice_testing import (enumerated_term_count, expectation_report,
                                resolvent_graph_count_bound, scalar_identity_check)
    rep = Report("slice-testing", cfg)
    for order in (1, 2):
        s = scalar_identity_check(order)
        ok = s.pop("ok")
        rep.check(f"scalar_identity_order{order}", ok, **s)
        n = enumerated_term_count(order)
        rep.check(f"term_count_order{order}", n <= resolvent_graph_count_bound(order),
                  terms=n, bound=resolvent_graph_count_bound(order))
    cut = max(cfg.cutoff, 1)
    top = 2 * cut
    lam = cfg.lambdas[0]
    for order, omegas in ((1, (min(1, top),)), (2, (0, min(1, top)))):
        r = expectation_report(order, omegas, lam, cut, "mc", cfg.samples, cfg.seed)
        d = abs(r["renormalized"] - r["finite_difference"])
        rep.check(f"order{order}_vs_finite_difference", d <= 3 * r["se_ren_vs_fd"],
                  omegas=omegas, renormalized=r["renormalized"],
                  finite_difference=r["finite_difference"], delta=d, se=r["se_ren_vs_fd"])
    return rep


def suite_forests(cfg: RunConfig) -> Report:
    from .forests import (bkar_exactness_check, count_forests, count_multilevel_trees,
                          count_two_level_trees, enumerate_multilevel_trees,
                          enumerate_two_level_trees, replica_psd_check)
    rep = Report("forests", cfg)
    rep.check("forest_count_n3", count_forests(3) == 7, count=count_forests(3))
    rows = []
    ok = True
    for n in range(1, cfg.n_max + 1):
        enum = sum(1 for _ in enumerate_two_level_trees(n))
        ok &= enum == count_two_level_trees(n)
        rows.append({"n": n, "forests": count_forests(n), "two_level_trees": enum})
    rep.check("two_level_counts", ok, rows=rows)
    three = all(sum(1 for _ in enumerate_multilevel_trees(n, 3)) == count_multilevel_trees(n, 3)
                for n in range(1, 6))
    rep.check("three_level_counts", three)
    b = bkar_exactness_check(4, 6)
    rep.check("bkar_exact", b["ok"], monomials=b["checked"])
    p = replica_psd_check(4, 1000, cfg.seed)
    rep.check("replica_psd", p["ok"], min_eig=p["min_eig"])
    rep.rows = rows
    return rep


def grassmann_oracle_sweep(seed: int = 0) -> dict:
    """fermionic_forest_integral against the exterior-algebra oracle for every
    forest with k <= 3 edges on up to 4 blocks, one or two slices per edge."""
    import itertools
    from .forests import (enumerate_forests, fermionic_forest_integral, grassmann_oracle)
    rng = np.random.default_rng(seed)
    worst = 0.0
    cases = 0
    for nb in range(1, 5):
        for trial in range(3):
            if trial == 0:
                y = np.ones((nb, nb))
            else:
                v = rng.normal(size=(nb, nb + 1))
                v /= np.linalg.norm(v, axis=1, keepdims=True)
                y = np.clip(v @ v.T, -1, 1)
                np.fill_diagonal(y, 1.0)
            slices = [[{b}, {b + 10}] for b in range(nb)]
            for f in enumerate_forests(nb):
                k = len(f.edges)
                if k > 3:
                    continue
                for oms in itertools.product(range(2 if nb <= 3 else 1), repeat=k):
                    a = fermionic_forest_integral(f, y, slices, oms)
                    b = grassmann_oracle(f, y, slices, oms)
                    worst = max(worst, abs(a - b))
                    cases += 1
    return {"cases": cases, "max_error": worst, "ok": worst <= 1e-12}


def suite_grassmann(cfg: RunConfig) -> Report:
    from .forests import (Forest, fermionic_forest_integral, grassmann_oracle,
                          minor_bound_check)
    rep = Report("grassmann", cfg)
    s = grassmann_oracle_sweep(cfg.seed)
    rep.check("oracle_agreement", s["ok"], cases=s["cases"], max_error=s["max_error"])
    m = minor_bound_check(200, 4, cfg.seed)
    rep.check("minor_bound", m["ok"], minors=m["minors"], max_abs=m["max_abs"])
    f = Forest(2, frozenset({(0, 1)}))
    hc = fermionic_forest_integral(f, np.eye(2), [[{1, 2}, {2, 3}], [{4}]])
    hco = grassmann_oracle(f, np.eye(2), [[{1, 2}, {2, 3}], [{4}]])
    rep.check("hardcore", hc == 0 and hco == 0, value=hc)
    return rep


def suite_resum(cfg: RunConfig) -> Report:
    from .direct_eval import z_direct_quadrature
    from .perturbation import log_z_coefficients
    from .resummation import (borel_pade_evaluate, euler_integral, euler_series,
                              remainder_growth_diagnostic, resum_table)
    rep = Report("resum", cfg)
    for lam in (0.01, 0.1, 0.3):
        v = borel_pade_evaluate(euler_series(6), lam).value
        ref = euler_integral(lam)
        rep.check(f"euler_lambda_{lam}", abs(v - ref) < 1e-6, value=v, reference=ref)
    ps = log_z_coefficients(0, 4)

    def ref(lam):
        return math.log(z_direct_quadrature(lam, 0).value.real) if lam else 0.0

    lams = [0.05, 0.1, 0.2]
    rows = resum_table(ps, lams, ref)
    rep.check("model_lambda_0.05", rows[0]["abs_error"] < 1e-4, **rows[0])
    rem = remainder_growth_diagnostic(ps, [0.0] + lams, reference=ref)
    rep.check("remainder_growth", rem.ok, K=rem.K, rows=rem.rows)
    rep.rows = rows
    return rep


def suite_bounds_report(cfg: RunConfig) -> Report:
    from .direct_eval import nelson_bound_check, resolvent_derivative_check, resolvent_norm_check
    from .direct_eval import sample_sigma
    from .perturbation import tadpole_cancellation_check
    rep = Report("bounds-report", cfg)
    rng = np.random.default_rng(cfg.seed)
    phases = np.linspace(-0.95 * math.pi, 0.95 * math.pi, 20)
    lams = [0.5 * cfg.rho * math.cos(p / 2) ** 2 * complex(math.cos(p), math.sin(p))
            for p in phases]
    for L in (1, 2):
        r = resolvent_norm_check(max(10_000, min(cfg.samples, 10_000)), cfg.seed, lams, L)
        rep.check(f"resolvent_norm_cutoff{L}", r["ok"], max_ratio=r["max_ratio"])
    sig = sample_sigma(rng, 2, 1)[0]
    worst = 0.0
    for kind in ("plain", "symmetric"):
        for d in ((0, 0), (0, 1), (1, 1)):
            worst = max(worst, resolvent_derivative_check(sig, 0.3 + 0.2j, 1, d, 1e-5, kind))
    rep.check("resolvent_derivative", worst < 1e-5, max_rel_error=worst)
    for lam in (0.1, 0.5, 1.0):
        for L in (0, 1):
            n = nelson_bound_check(lam, L)
            rep.check(f"nelson_lambda_{lam}_cutoff{L}", n["ok"], z=n["z"], bound=n["bound"])
    bounded = True
    for k in range(11):
        t = tadpole_cancellation_check(2 ** k)
        bounded &= t["bounded"]
    rep.check("tadpole_cancellation", bounded, max_cutoff=2 ** 10,
              survivor=float(t["survivor"]))
    return rep


RUNNERS = {"verify-representation": suite_verify_representation,
           "coefficients": suite_coefficients,
           "slice-bounds": suite_slice_bounds,
           "slice-testing": suite_slice_testing,
           "forests": suite_forests,
           "grassmann": suite_grassmann,
           "resum": suite_resum,
           "bounds-report": suite_bounds_report}


def _timed(name, cfg):
    t0 = time.perf_counter()
    rep = RUNNERS[name](cfg)
    rep.timings["seconds"] = round(time.perf_counter() - t0, 3)
    return rep


def thread_count() -> int:
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else (os.cpu_count() or 1)


def run(subcommand: str, cfg: RunConfig) -> list:
    cfg.validate()
    names = SUITES if subcommand == "all" else (subcommand,)
    if len(names) == 1:
        return [_timed(names[0], cfg)]
    with ThreadPoolExecutor(max_workers=thread_count()) as ex:
        return list(ex.map(lambda n: _timed(n, cfg), names))


# -- output ------------------------------------------------------------------------

def _write_json(path: Path, data):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, rows: list):
    if not rows:
        return
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: _csv_cell(v) for k, v in r.items()})


def _csv_cell(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(_jsonable(v))
    return v


def _plot(path: Path, suite: str, rows: list):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if suite == "slice-bounds":
        ax.plot([r["omega"] for r in rows], [r["c_norm"] for r in rows], ".", label="c_norm")
        ax.plot([r["omega"] for r in rows], [r["c_trace"] for r in rows], ".", label="c_trace")
        ax.set_xscale("symlog")
        ax.set_xlabel("omega")
    elif suite == "resum":
        ax.semilogy([r["lambda_re"] for r in rows], [r["abs_error"] for r in rows], "o-")
        ax.set_xlabel("lambda")
        ax.set_ylabel("|resummed - log Z|")
    elif suite == "forests":
        ax.semilogy([r["n"] for r in rows], [r["two_level_trees"] for r in rows], "o-",
                    label="two-level trees")
        ax.semilogy([r["n"] for r in rows], [r["forests"] for r in rows], "s-", label="forests")
        ax.set_xlabel("n")
    else:
        plt.close(fig)
        return
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def emit(reports: list, cfg: RunConfig) -> dict:
    out = Path(cfg.out)
    summary = {}
    for rep in reports:
        data = rep.to_json()
        _write_json(out / f"{rep.suite}.json", data)
        summary[rep.suite] = data["status"]
        rows = getattr(rep, "rows", None)
        if cfg.csv and rows:
            _write_csv(out / f"{rep.suite}.csv", rows)
        if cfg.plot and rows:
            _plot(out / f"{rep.suite}.png", rep.suite, rows)
        if rep.suite == "coefficients" and cfg.csv:
            _write_csv(out / "coefficients.csv",
                       [{"n": i + 1, "a_n": c} for i, c in enumerate(rep.series.coefficients)])
    return summary


# -- argument parsing ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="artifact", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="INI file with a [run] section")
    p.add_argument("--out", help="report directory (default: reports)")
    p.add_argument("--seed", type=int)
    p.add_argument("--csv", action="store_true", default=None, help="also write CSV tables")
    p.add_argument("--plot", action="store_true", default=None, help="also write PNG plots")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *flags):
        for f in flags:
            if f == "cutoff":
                sp.add_argument("--cutoff", type=int)
            elif f == "lambda":
                sp.add_argument("--lambda", dest="lambdas", type=float, nargs="+")
            elif f == "samples":
                sp.add_argument("--samples", type=int)

    common(sub.add_parser("verify-representation"), "cutoff", "lambda", "samples")
    sp = sub.add_parser("coefficients")
    common(sp, "cutoff")
    sp.add_argument("--order", type=int)
    sp.add_argument("--cache-dir", dest="cache_dir")
    sp = sub.add_parser("slice-bounds")
    sp.add_argument("--M", type=int)
    sp.add_argument("--j-max", dest="j_max", type=int)
    sp.add_argument("--rho", type=float)
    common(sub.add_parser("slice-testing"), "cutoff", "lambda", "samples")
    sp = sub.add_parser("forests")
    sp.add_argument("--count-two-level", dest="count_two_level", type=int,
                    help="print 2^(n-1) n^(n-2) checked by enumeration and exit")
    sp.add_argument("--n-max", dest="n_max", type=int)
    sub.add_parser("grassmann")
    sub.add_parser("resum")
    sp = sub.add_parser("bounds-report")
    sp.add_argument("--rho", type=float)
    common(sp, "samples")
    sp = sub.add_parser("all")
    common(sp, "cutoff", "lambda", "samples")
    sp.add_argument("--rho", type=float)
    return p


def make_config(args) -> RunConfig:
    values = load_config(args.config) if args.config else {}
    for k in ("out", "seed", "csv", "plot", "cutoff", "lambdas", "samples", "order",
              "cache_dir", "M", "j_max", "rho", "n_max"):
        v = getattr(args, k, None)
        if v is not None:
            values[k] = v
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
    except (ValueError, FileNotFoundError, TypeError) as exc:
        parser.print_usage(sys.stderr)
        print(f"artifact: error: {exc}", file=sys.stderr)
        return 2
    if args.command == "forests" and args.count_two_level is not None:
        from .forests import count_two_level_trees, enumerate_two_level_trees
        n = args.count_two_level
        count = count_two_level_trees(n)
        if n <= 6 and sum(1 for _ in enumerate_two_level_trees(n)) != count:
            print(f"enumeration disagrees with {count}", file=sys.stderr)
            return 1
        print(count)
        return 0
    try:
        reports = run(args.command, cfg)
    except Exception as exc:  # surface module errors with the suite name
        print(f"artifact {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    summary = emit(reports, cfg)
    if args.command == "coefficients":
        print(json.dumps(reports[0].series.to_json(), sort_keys=True))
    for name, status in summary.items():
        print(f"{name}: {status}")
    return 0 if all(s == "pass" for s in summary.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
