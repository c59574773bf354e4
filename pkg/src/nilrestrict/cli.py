"""Command-line drivers for the verification suites.

Every subcommand writes a self-describing report: newline-delimited JSON
(a header record, one record per row, one per verdict, a summary) or a
headered CSV table framed by ``#`` comment lines.  Reports are
byte-identical for identical arguments; wall time goes to stderr only.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage error,
3 numerical non-convergence (unreachable tolerance, optimizer stall).
"""
import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .basis import (
    SectorIndex,
    TorusIndex,
    apply_sublaplacian,
    covariance_check,
    eigenvalue,
    enumerate_spectrum,
    eval_chi,
    eval_h,
    gram_matrix,
)
from .extremal import (
    EXTREMIZER_GRID,
    bernstein_ceiling,
    calibrate_bernstein,
    load_bernstein_config,
    maximize_ratio,
    sector_mu,
    sharpness_scan,
    upper_bound_constant,
)
from .group import GroupElement, multiply
from .key_identity import TruncationError, identity_residual
from .special import (
    fit_laguerre_constant,
    hermite_all,
    hermite_direct,
    hermite_laguerre_residual,
    laguerre_all,
    oscillator_residual,
)
from .zygmund import zygmund_certificate

SCHEMA_VERSION = 1
DEFAULTS = {"tol": 1e-6, "grid": 512, "seed": 20240101}
THREADS_ENV = "NILRESTRICT_THREADS"

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NONCONVERGED = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    params: dict
    fmt: str = "json"
    output: str = None
    threads: int = 1


@dataclass
class ReportRecord:
    command: str
    config: dict
    columns: list
    rows: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    nonconverged: int = 0
    notes: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.verdicts.values())

    @property
    def exit_code(self):
        if not self.passed:
            return EXIT_FAIL
        return EXIT_NONCONVERGED if self.nonconverged else EXIT_OK


def _plain(x):
    # numpy scalars to Python scalars; non-finite floats to strings for strict JSON
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def render(report, fmt):
    """Serialise a report; deterministic for identical contents."""
    header = {
        "record": "header",
        "tool": "nilrestrict",
        "version": __version__,
        "schema": SCHEMA_VERSION,
        "command": report.command,
        "config": _plain(report.config),
        "defaults": DEFAULTS,
        "notes": _plain(report.notes),
    }
    summary = {
        "record": "summary",
        "passed": report.passed,
        "nonconverged": report.nonconverged,
        "exit_code": report.exit_code,
    }
    if fmt == "json":
        lines = [json.dumps(header, sort_keys=True)]
        for row in report.rows:
            lines.append(json.dumps({"record": "row", **_plain(row)}, sort_keys=True))
        for name, ok in report.verdicts.items():
            lines.append(json.dumps({"record": "verdict", "check": name, "passed": bool(ok)}, sort_keys=True))
        lines.append(json.dumps(summary, sort_keys=True))
        return "\n".join(lines) + "\n"
    buf = io.StringIO()
    buf.write(f"# nilrestrict {__version__} schema {SCHEMA_VERSION} command {report.command}\n")
    for key in sorted(header["config"]):
        buf.write(f"# config {key}={header['config'][key]}\n")
    for key in sorted(DEFAULTS):
        buf.write(f"# default {key}={DEFAULTS[key]}\n")
    for key in sorted(header["notes"]):
        buf.write(f"# note {key}={header['notes'][key]}\n")
    writer = csv.DictWriter(buf, fieldnames=report.columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in report.rows:
        writer.writerow({k: ("" if v is None else v) for k, v in _plain(row).items()})
    for name, ok in report.verdicts.items():
        buf.write(f"# verdict {name} {'PASS' if ok else 'FAIL'}\n")
    buf.write(f"# summary {'PASS' if report.passed else 'FAIL'} exit_code={report.exit_code}\n")
    return buf.getvalue()


# ----------------------------------------------------------------------------
# suites


def cmd_special_fn(cfg):
    p = cfg.params
    ell_max = p["ell_max"]
    osc_max = min(ell_max, 200)
    u = np.linspace(-20.0, 20.0, 801)
    v = np.geomspace(1e-3, 1e4, 400)
    lag = np.abs(laguerre_all(ell_max, v))
    C, _ = fit_laguerre_constant(ell_max)
    rows = []
    for ell in range(ell_max + 1):
        osc = float(oscillator_residual(ell, u).max()) if ell <= osc_max else None
        rel = hermite_laguerre_residual(ell, 1.0, 0.5) if ell <= 20 else None
        rows.append({
            "ell": ell,
            "osc_residual": osc,
            "osc_tol": 1e-6 * (2 * ell + 1) if osc is not None else None,
            "laguerre_sup": float(lag[ell].max()),
            "laguerre_sup_tol": 1.0,
            "laguerre_scaled_max": float((lag[ell] * v / (2 * ell + 1)).max()),
            "laguerre_C": C,
            "rel_residual": rel,
            "rel_tol": 1e-8 if rel is not None else None,
        })
    grid = np.linspace(-20.0, 20.0, 401)
    direct_gap = max(
        float(np.max(np.abs(hermite_all(20, grid)[ell] - hermite_direct(ell, grid)))) for ell in range(21)
    )
    xi = np.linspace(-15.0, 15.0, 3001)
    H = hermite_all(15, xi) * math.sqrt(xi[1] - xi[0])
    gram_gap = float(np.max(np.abs(H @ H.T - np.eye(16))))
    verdicts = {
        "oscillator_equation": all(r["osc_residual"] < r["osc_tol"] for r in rows if r["osc_residual"] is not None),
        "laguerre_linfty": all(r["laguerre_sup"] <= 1.0 + 1e-12 for r in rows),
        "laguerre_decay_constant_finite": math.isfinite(C),
        "hermite_laguerre_identity": all(r["rel_residual"] < r["rel_tol"] for r in rows if r["rel_residual"] is not None),
        "hermite_direct_agreement": direct_gap < 1e-10,
        "hermite_orthonormality": gram_gap < 1e-8,
    }
    notes = {"laguerre_C": C, "hermite_direct_gap": direct_gap, "hermite_gram_gap": gram_gap}
    columns = list(rows[0])
    return ReportRecord(cfg.command, p, columns, rows, verdicts, 0, notes)


def _coeffs(seed, lam, ell, trial):
    rng = np.random.default_rng([seed, lam + 2 ** 20, ell, trial])
    n = abs(lam)
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def cmd_key_identity(cfg):
    p = cfg.params
    rows = []
    flagged = 0
    for lam in p["lambdas"]:
        # with the general window, ell only labels an independent batch of draws
        for ell in p["ells"]:
            for trial in range(p["trials"]):
                gamma = _coeffs(p["seed"], lam, ell, trial)
                try:
                    chk = identity_residual(gamma, ell, lam=lam, grid_n=p["grid"],
                                            general_window=p["general_window"])
                except TruncationError:
                    flagged += 1
                    continue
                flagged += not chk.lhs_converged
                rows.append({
                    "lambda": lam,
                    "ell": ell,
                    "window": "h2+h5" if p["general_window"] else f"h{ell}",
                    "trial": trial,
                    "lhs": chk.lhs,
                    "rhs": chk.rhs,
                    "residual": chk.residual,
                    "tol": p["tol"],
                    "lhs_doubling_delta": chk.lhs_delta,
                    "tail_bound": chk.tail_bound,
                })
    verdicts = {"identity_residual": all(r["residual"] < r["tol"] for r in rows)}
    columns = ["lambda", "ell", "window", "trial", "lhs", "rhs", "residual", "tol", "lhs_doubling_delta", "tail_bound"]
    return ReportRecord(cfg.command, p, columns, rows, verdicts, flagged)


def cmd_zygmund(cfg):
    p = cfg.params
    rep = zygmund_certificate(p["n_max"], p["trials"], p["seed"], p["pair_check_max"], workers=cfg.threads)
    rows = [{
        "n": r.n,
        "r2": r.r2,
        "max_ratio4": r.max_ratio4,
        "tol": 5.0,
        "max_offdiag_ratio": r.max_offdiag_ratio,
        "offdiag_tol": 4.0,
        "max_pairs": r.max_pairs,
        "pairs_tol": 2,
    } for r in rep.rows]
    verdicts = {
        "ratio4_at_most_5": rep.violations == 0,
        "offdiagonal_at_most_4": rep.offdiag_violations == 0,
        "at_most_two_pairs": rep.pair_violations == 0,
    }
    notes = {"circles_tested": rep.circles_tested, "max_ratio4": rep.max_ratio4, "argmax_n": rep.argmax_n}
    columns = list(rows[0]) if rows else ["n"]
    return ReportRecord(cfg.command, p, columns, rows, verdicts, 0, notes)


def _powers_of_two(lo, hi):
    out = []
    k = 1
    while k <= hi:
        if k >= lo:
            out.append(k)
        k *= 2
    return out


def cmd_sharpness(cfg):
    p = cfg.params
    lams = _powers_of_two(p["lambda_min"], p["lambda_max"])
    rep = sharpness_scan(lams, ell=0, workers=cfg.threads)
    c_low = load_bernstein_config()["c_fit"]
    rows = [{
        "lambda": r.lam,
        "mu": r.mu,
        "A": r.A,
        "ratio": r.ratio,
        "rhs": r.rhs,
        "lemma_bound": r.lemma_bound,
        "ceiling": bernstein_ceiling(r.mu),
        "floor": c_low * math.sqrt(r.mu),
    } for r in rep.rows]
    lo, hi = rep.slope_window
    verdicts = {
        "rhs_at_least_lemma_bound": rep.lemma_ok,
        "ratio_at_least_one": all(r["ratio"] >= 1.0 for r in rows),
        "ratio_below_ceiling": all(r["ratio"] <= r["ceiling"] for r in rows),
        "slope_in_window": rep.slope_ok,
    }
    notes = {"fitted_slope": rep.fitted_slope, "slope_window": f"[{lo}, {hi}]", "skipped": rep.skipped}
    columns = ["lambda", "mu", "A", "ratio", "rhs", "lemma_bound", "ceiling", "floor"]
    return ReportRecord(cfg.command, p, columns, rows, verdicts, 0, notes)


def _brute_force_multiplicity(key, kind):
    if kind == "torus":
        top = math.isqrt(key)
        return sum(1 for a in range(-top, top + 1) for b in range(-top, top + 1) if a * a + b * b == key)
    count = 0
    for lam in range(-key, key + 1):
        if lam == 0:
            continue
        for ell in range(key + 1):
            if abs(lam) * (2 * ell + 1) == key:
                count += abs(lam)  # one index per q in Z/lam
    return count


def cmd_spectrum(cfg):
    p = cfg.params
    lines = enumerate_spectrum(p["mu_max"])
    rows = []
    for line in lines:
        sectors = " ".join(f"({lam},{ell})" for lam, ell in line.lambda_sectors)
        points = " ".join(f"({w1},{w2})" for w1, w2 in line.torus_points)
        rows.append({
            "mu": line.mu,
            "kind": line.kind,
            "key": line.key,
            "multiplicity": line.multiplicity,
            "brute_force": _brute_force_multiplicity(line.key, line.kind),
            "sectors": sectors,
            "torus_points": points,
        })
    verdicts = {
        "multiplicity_matches_brute_force": all(r["multiplicity"] == r["brute_force"] for r in rows),
        "sector_torus_disjoint": all(not (ln.lambda_sectors and ln.torus_points) for ln in lines),
        "first_line_sqrt_2pi": bool(lines) and abs(lines[0].mu - math.sqrt(2 * math.pi)) < 1e-12,
    }
    columns = ["mu", "kind", "key", "multiplicity", "brute_force", "sectors", "torus_points"]
    return ReportRecord(cfg.command, p, columns, rows, verdicts)


def cmd_extremize(cfg):
    p = cfg.params
    cells = [(lam, ell) for lam in p["lambdas"] for ell in p["ells"]] if p["lambdas"] else list(EXTREMIZER_GRID)
    c_low = load_bernstein_config()["c_fit"]
    rows = []
    nonconv = 0
    monotone = True
    above_seeds = True
    for lam, ell in cells:
        res = maximize_ratio(lam, ell, p["restarts"], p["max_iters"], p["step_rule"], p["seed"], workers=cfg.threads)
        nonconv += not res.converged
        monotone &= all(all(b >= a for a, b in zip(h, h[1:])) for h in res.history)
        best_seed = max(h[0] for h in res.history)
        above_seeds &= res.objective >= best_seed * (1 - 1e-12)
        mu = sector_mu(lam, ell)
        rows.append({
            "lambda": lam,
            "ell": ell,
            "mu": mu,
            "ratio": res.ratio,
            "best_seed_ratio": best_seed ** 0.25,
            "upper_bound_root": upper_bound_constant(lam, ell) ** 0.25,
            "ceiling": bernstein_ceiling(mu),
            "floor": c_low * math.sqrt(mu),
            "converged": res.converged,
            "best_restart": res.best_restart,
            "iterations": sum(len(h) - 1 for h in res.history),
        })
    verdicts = {
        "monotone_ascent": monotone,
        "dominates_seeds": above_seeds,
        "below_weight_sum_bound": all(r["ratio"] <= r["upper_bound_root"] * (1 + 1e-12) for r in rows),
        "below_ceiling": all(r["ratio"] <= r["ceiling"] for r in rows),
        "above_floor": all(r["ratio"] >= r["floor"] for r in rows),
    }
    columns = ["lambda", "ell", "mu", "ratio", "best_seed_ratio", "upper_bound_root", "ceiling", "floor",
               "converged", "best_restart", "iterations"]
    return ReportRecord(cfg.command, p, columns, rows, verdicts, nonconv)


def _random_points(rng, k):
    return rng.uniform(0, 1, k), rng.uniform(0, 1, k), rng.uniform(0, 1, k)


def cmd_basis(cfg):
    p = cfg.params
    lam_max, ell_max, w_max = p["lambda_max"], p["ell_max"], p["omega_max"]
    sectors = [
        SectorIndex(s * lam, q, ell)
        for lam in range(1, lam_max + 1) for s in (1, -1) for q in range(lam) for ell in range(ell_max + 1)
    ]
    tori = [
        TorusIndex(a, b)
        for a in range(-w_max, w_max + 1) for b in range(-w_max, w_max + 1) if a * a + b * b <= w_max * w_max
    ]
    rng = np.random.default_rng(p["seed"])
    gram = gram_matrix(sectors + tori, grid_n=p["gram_grid"])
    gram_gap = float(np.max(np.abs(gram.value - np.eye(len(sectors) + len(tori)))))
    rows = [{"check": "gram_identity", "index": f"{len(sectors)}+{len(tori)} functions", "value": gram_gap,
             "tol": 1e-8}]
    for idx in sectors:
        pts = _random_points(rng, p["points"])
        shift = int(rng.integers(-2 * abs(idx.lam), 2 * abs(idx.lam) + 1))
        cov = max(covariance_check(idx, shift, pts))
        E = eigenvalue(idx)
        h = eval_h(idx, pts)
        Lh = apply_sublaplacian(idx, pts)
        eig = float(np.max(np.abs(Lh - E * h)) / (E * np.max(np.abs(h))))
        g0 = GroupElement(*[int(x) for x in rng.integers(-3, 4, 3)])
        a, b, c = pts
        moved = multiply(g0, GroupElement(a, b, c))
        inv = float(np.max(np.abs(eval_h(idx, (moved.a, moved.b, moved.c)) - h)))
        label = f"({idx.lam},{idx.q},{idx.ell})"
        rows.append({"check": "covariance", "index": label, "value": cov, "tol": 1e-5})
        rows.append({"check": "eigen_residual", "index": label, "value": eig, "tol": 1e-6})
        rows.append({"check": "gamma_invariance", "index": label, "value": inv, "tol": 1e-12})
    for idx in tori:
        pts = _random_points(rng, p["points"])
        chi = eval_chi(idx, pts)
        Lchi = apply_sublaplacian(idx, pts)
        eig = float(np.max(np.abs(Lchi - eigenvalue(idx) * chi)))
        rows.append({"check": "eigen_residual", "index": f"({idx.w1},{idx.w2})", "value": eig, "tol": 1e-6})
    verdicts = {}
    for row in rows:
        verdicts[row["check"]] = verdicts.get(row["check"], True) and row["value"] < row["tol"]
    return ReportRecord(cfg.command, p, ["check", "index", "value", "tol"], rows, verdicts, int(not gram.converged))


def cmd_calibrate(cfg):
    p = cfg.params
    new = calibrate_bernstein(restarts=p["restarts"], max_iters=p["max_iters"], seed=p["seed"])
    frozen = load_bernstein_config()
    rows = [{"quantity": key, "recomputed": new[key], "frozen": frozen[key]} for key in ("C_fit", "c_fit")]
    verdicts = {"frozen_matches_recomputed": all(abs(r["recomputed"] - r["frozen"]) <= 1e-9 * r["frozen"] for r in rows)}
    return ReportRecord(cfg.command, p, ["quantity", "recomputed", "frozen"], rows, verdicts)


COMMANDS = {
    "special-fn": cmd_special_fn,
    "key-identity": cmd_key_identity,
    "zygmund": cmd_zygmund,
    "sharpness": cmd_sharpness,
    "spectrum": cmd_spectrum,
    "extremize": cmd_extremize,
    "basis": cmd_basis,
    "calibrate": cmd_calibrate,
}


# ----------------------------------------------------------------------------
# argument parsing


def _lambda_arg(text):
    try:
        lam = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"lambda must be an integer, got {text!r}")
    if lam == 0:
        raise argparse.ArgumentTypeError("lambda must be nonzero (lambda != 0)")
    return lam


def _positive_float(text):
    val = float(text)
    if not val > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return val


def _positive_int(text):
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return val


def _power_of_two(text):
    val = _positive_int(text)
    if val & (val - 1):
        raise argparse.ArgumentTypeError(f"grid must be a power of two, got {val}")
    return val


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--threads", type=_positive_int, default=None,
                        help=f"worker threads (default: ${THREADS_ENV} or 1)")
    common.add_argument("--seed", type=int, default=DEFAULTS["seed"])
    common.add_argument("--tol", type=_positive_float, default=DEFAULTS["tol"])

    parser = argparse.ArgumentParser(prog="nilrestrict", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("special-fn", parents=[common], help="Hermite/Laguerre recurrences, bounds, identities")
    sp.add_argument("--ell-max", type=int, default=200)

    sp = sub.add_parser("key-identity", parents=[common], help="quadrature vs lattice-sum residuals")
    sp.add_argument("--lambda", dest="lambdas", type=_lambda_arg, nargs="+",
                    default=[1, 2, 3, 4, 5, 6, 7, 8, -1, -3])
    sp.add_argument("--ell", dest="ells", type=int, nargs="+", default=[0, 1, 2, 4])
    sp.add_argument("--trials", type=_positive_int, default=10)
    sp.add_argument("--grid", type=_power_of_two, default=DEFAULTS["grid"])
    sp.add_argument("--general-window", action="store_true",
                    help="use the normalised h_2 + h_5 window and its matrix coefficients")

    sp = sub.add_parser("zygmund", parents=[common], help="torus L4 bound on integer circles")
    sp.add_argument("--n-max", type=_positive_int, default=10000)
    sp.add_argument("--trials", type=_positive_int, default=50)
    sp.add_argument("--pair-check-max", type=int, default=2500)

    sp = sub.add_parser("sharpness", parents=[common], help="indicator-window ratios and their slope")
    sp.add_argument("--lambda-min", type=_positive_int, default=128)
    sp.add_argument("--lambda-max", type=_positive_int, default=16384)

    sp = sub.add_parser("spectrum", parents=[common], help="eigenvalues of sqrt(L_M) with multiplicities")
    sp.add_argument("--mu-max", type=_positive_float, default=30.0)

    sp = sub.add_parser("extremize", parents=[common], help="search for extremizing coefficient vectors")
    sp.add_argument("--lambda", dest="lambdas", type=_lambda_arg, nargs="+", default=None,
                    help="default: the calibration grid")
    sp.add_argument("--ell", dest="ells", type=int, nargs="+", default=[0])
    sp.add_argument("--restarts", type=_positive_int, default=4)
    sp.add_argument("--max-iters", type=_positive_int, default=2000)
    sp.add_argument("--step-rule", choices=("armijo", "monotone"), default="armijo")

    sp = sub.add_parser("basis", parents=[common], help="orthonormality, covariance, eigen-equations")
    sp.add_argument("--lambda-max", type=_positive_int, default=3)
    sp.add_argument("--ell-max", type=int, default=3)
    sp.add_argument("--omega-max", type=int, default=2)
    sp.add_argument("--gram-grid", type=_power_of_two, default=32)
    sp.add_argument("--points", type=_positive_int, default=100)

    sp = sub.add_parser("calibrate", parents=[common], help="recompute the frozen ceiling constants")
    sp.add_argument("--restarts", type=_positive_int, default=4)
    sp.add_argument("--max-iters", type=_positive_int, default=2000)
    return parser


def _threads(arg):
    if arg is not None:
        return arg
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise SystemExit(f"{THREADS_ENV} must be an integer, got {env!r}")
    return 1


def parse_config(argv=None):
    args = build_parser().parse_args(argv)
    params = {k: v for k, v in vars(args).items() if k not in ("command", "format", "output", "threads")}
    return RunConfig(args.command, params, args.format, args.output, _threads(args.threads))


def run(cfg):
    return COMMANDS[cfg.command](cfg)


def main(argv=None):
    cfg = parse_config(argv)
    start = time.perf_counter()
    try:
        report = run(cfg)
    except TruncationError as exc:
        print(f"nilrestrict: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    text = render(report, cfg.fmt)
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"nilrestrict {cfg.command}: {'PASS' if report.passed else 'FAIL'} "
          f"in {time.perf_counter() - start:.2f}s", file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
