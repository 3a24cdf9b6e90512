"""Command-line front end: run, sweep and verify problems described in YAML files.

Exit codes: 0 success (or certified, for verify), 1 not certified (verify
only), 2 spec or input error, 3 solver failure, 4 certification failed and
the LP cross-check disagrees (or was switched off). See docs/spec_format.md
for the file format.
"""

import argparse
import copy
import csv
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from .cfi import Cfi, contains, verify_extreme
from .errors import (GridMismatchError, InvalidCfiError, NotConvexError, PreconditionError,
                     SolverError)
from .grid_fn import GridFunction, SlopeInterval
from .lp import cfi_lp
from .measure import SignedMeasure
from .solve import affine_bound_kind, concavify_solve, verify_optimality
from . import apps
from .apps.common import LP_GAP_TOL, Mechanism, Menu

EXIT_OK, EXIT_UNCERTIFIED, EXIT_SPEC, EXIT_SOLVER, EXIT_CERT = 0, 1, 2, 3, 4
OUT_ENV = "CFIKIT_OUT"
APPLICATIONS = ("screening", "delegation", "contest", "persuasion", "raw_cfi", "design_menu")
PRIMARY_CUTOFF = {"screening": "theta_star", "delegation": "theta_star", "contest": "theta_star",
                  "persuasion": "x_star", "raw_cfi": None, "design_menu": "price"}


class SpecError(Exception):
    """Malformed or inconsistent problem file; carries the offending field and its line."""

    def __init__(self, message, where=None, line=None):
        self.where, self.line = where, line
        loc = ""
        if where:
            loc += f"field '{where}'"
        if line:
            loc += f" (line {line})"
        loc = loc.strip()
        super().__init__(f"{loc}: {message}" if loc else message)


# reading specs

def _line_map(node, path=(), out=None):
    """Map every key path of a composed YAML document to its 1-based line."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            p = path + (str(k.value),)
            out[p] = k.start_mark.line + 1
            _line_map(v, p, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            p = path + (str(i),)
            out[p] = v.start_mark.line + 1
            _line_map(v, p, out)
    return out


@dataclass
class Spec:
    data: dict
    lines: dict = field(default_factory=dict)
    base: str = "."

    def line(self, path):
        parts = tuple(path.split(".")) if path else ()
        while parts:
            if parts in self.lines:
                return self.lines[parts]
            parts = parts[:-1]
        return None

    def error(self, path, message):
        return SpecError(message, path, self.line(path))

    def get(self, path, default=KeyError):
        cur = self.data
        for p in path.split("."):
            if isinstance(cur, dict) and p in cur:
                cur = cur[p]
            elif isinstance(cur, list) and p.isdigit() and int(p) < len(cur):
                cur = cur[int(p)]
            else:
                if default is KeyError:
                    raise self.error(path, "missing")
                return default
        return cur

    def number(self, path, default=KeyError):
        v = self.get(path, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise self.error(path, f"expected a number, got {v!r}")
        return float(v)

    def path(self, path):
        v = self.get(path)
        if not isinstance(v, str):
            raise self.error(path, "expected a file path")
        return v if os.path.isabs(v) else os.path.join(self.base, v)


def load_spec(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise SpecError(f"cannot read {path}: {e.strerror}")
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise SpecError(f"YAML syntax: {getattr(e, 'problem', e)}", line=mark.line + 1 if mark else None)
    if not isinstance(data, dict):
        raise SpecError("top level must be a mapping")
    spec = Spec(data, _line_map(node) if node is not None else {}, os.path.dirname(os.path.abspath(path)))
    app = spec.get("application")
    if not isinstance(app, str) or app.lower() not in APPLICATIONS:
        raise spec.error("application", f"must be one of {', '.join(APPLICATIONS)}")
    data["application"] = app.lower()
    return spec


def _distribution(spec, path):
    block = spec.get(path)
    if not isinstance(block, dict) or "kind" not in block:
        raise spec.error(path, "expected a block with a 'kind'")
    kind = str(block["kind"]).lower()
    support = spec.get(f"{path}.support", [0.0, 1.0])
    if not (isinstance(support, list) and len(support) == 2):
        raise spec.error(f"{path}.support", "expected [lo, hi]")
    support = (float(support[0]), float(support[1]))
    try:
        if kind == "uniform":
            return apps.uniform(*support)
        if kind == "truncated_logistic":
            return apps.truncated_logistic(spec.number(f"{path}.location"), spec.number(f"{path}.scale"), support)
        if kind == "truncated_gaussian_mixture":
            lists = [spec.get(f"{path}.{k}") for k in ("weights", "means", "sigmas")]
            if len({len(v) if isinstance(v, list) else -1 for v in lists}) != 1 or not isinstance(lists[0], list):
                raise spec.error(path, "weights, means and sigmas must be lists of equal length")
            return apps.truncated_gaussian_mixture(*lists, support=support)
        if kind == "tabulated":
            return apps.tabulated(GridFunction.read_csv(spec.path(f"{path}.csv")))
        if kind == "point_mass":
            return apps.PointMass(spec.number(f"{path}.at"))
        if kind == "mixture":
            parts = spec.get(f"{path}.parts")
            if not isinstance(parts, list) or not parts:
                raise spec.error(f"{path}.parts", "expected a nonempty list")
            return apps.Mixture([(spec.number(f"{path}.parts.{i}.weight"), _distribution(spec, f"{path}.parts.{i}.of"))
                                 for i in range(len(parts))])
    except (ValueError, KeyError, OSError) as e:
        if isinstance(e, SpecError):
            raise
        raise spec.error(path, str(e))
    raise spec.error(f"{path}.kind", f"unknown distribution kind {kind!r}")


def _items(spec, path):
    items = spec.get(path)
    if not isinstance(items, list) or not items:
        raise spec.error(path, "expected a nonempty list of pairs")
    out = []
    for i, it in enumerate(items):
        if not (isinstance(it, list) and len(it) == 2 and all(isinstance(v, (int, float)) for v in it)):
            raise spec.error(f"{path}.{i}", "expected a pair of numbers")
        out.append((float(it[0]), float(it[1])))
    return out


def _screening_menu(spec):
    if "menu" not in spec.data:
        return apps.null_menu()
    if spec.get("menu.posted_price", None) is not None:
        return apps.posted_price_menu(spec.number("menu.posted_price"))
    return Menu(tuple(_items(spec, "menu.items")))


def _delegation_menu(spec, F):
    base = apps.default_delegation_menu(F.lo, F.hi).items
    extra = []
    if spec.get("menu.items", None) is not None:
        extra += _items(spec, "menu.items")
    if spec.get("menu.lotteries", None) is not None:
        extra += [apps.lottery_item(m, v) for m, v in _items(spec, "menu.lotteries")]
    return Menu(tuple(dict.fromkeys(base + tuple(extra))), kind="delegation")


def _objective(spec):
    obj = spec.get("objective", "revenue")
    if isinstance(obj, str) and obj.lower() == "revenue":
        return apps.REVENUE
    if isinstance(obj, dict) and "welfare" in obj:
        return _welfare(spec, "objective.welfare")
    raise spec.error("objective", "expected 'revenue' or a 'welfare' block")


def _welfare(spec, path):
    pareto = spec.get(f"{path}.pareto", None)
    if pareto is not None:
        p = spec.number(f"{path}.pareto")
        pareto = lambda t, p=p: np.full_like(np.asarray(t, dtype=float), p)
    alpha = spec.number(f"{path}.alpha", 1.0)
    if not alpha > 0:
        raise spec.error(f"{path}.alpha", "must be positive")
    return apps.Welfare(pareto, alpha, spec.number(f"{path}.cost", 0.0))


def _value(spec):
    kind = str(spec.get("value.kind")).lower()
    if kind == "logistic":
        return apps.logistic_value(spec.number("value.center", 0.4), spec.number("value.scale", 0.1))
    if kind == "quadratic":
        return apps.quadratic_value(spec.number("value.a", 1.0))
    raise spec.error("value.kind", f"unknown value kind {kind!r} (logistic or quadratic)")


def _prices(spec, path):
    v = spec.get(path)
    if isinstance(v, list) and v and all(isinstance(p, (int, float)) for p in v):
        return [float(p) for p in v]
    if isinstance(v, dict):
        return list(np.linspace(spec.number(f"{path}.start"), spec.number(f"{path}.stop"),
                                int(spec.number(f"{path}.num"))))
    raise spec.error(path, "expected a list of prices or {start, stop, num}")


def _raw_problem(spec, n_cells=None):
    """Cfi and measure from a directory written by Cfi.to_dir / SignedMeasure.to_csv, or from CSVs."""
    try:
        if spec.get("cfi.dir", None) is not None:
            c = Cfi.from_dir(spec.path("cfi.dir"), check_smooth=False)
        else:
            lo = GridFunction.read_csv(spec.path("cfi.lower"))
            up = GridFunction.read_csv(spec.path("cfi.upper"))
            s = spec.get("cfi.slopes", [None, None])
            sl = SlopeInterval(-np.inf if s[0] is None else float(s[0]), np.inf if s[1] is None else float(s[1]))
            c = Cfi(lo, up, sl, check_smooth=False)
        mu = SignedMeasure.read_csv(spec.path("measure.dir"))
        c.grid.check_same(mu.grid)
    except GridMismatchError as e:
        raise spec.error("measure", str(e))
    except (InvalidCfiError, NotConvexError, ValueError, OSError) as e:
        raise spec.error("cfi", str(e))
    if n_cells is not None and n_cells != c.grid.n_cells:
        raise spec.error("cfi", "--grid cannot resample a raw interval")
    return c, mu


def _n_cells(spec, override):
    if override is not None:
        return int(override)
    n = spec.get("grid.n_cells", 200)
    if not isinstance(n, int) or n < 2:
        raise spec.error("grid.n_cells", "expected an integer >= 2")
    return n


def build_problem(spec, n_cells=None):
    """(Cfi, SignedMeasure) the spec describes, without solving."""
    app = spec.data["application"]
    if app == "raw_cfi":
        return _raw_problem(spec, n_cells)
    n = _n_cells(spec, n_cells)
    F = _distribution(spec, "distribution")
    if app in ("screening", "design_menu"):
        menu = _screening_menu(spec) if app == "screening" else apps.null_menu()
        c = apps.screening_cfi(F, menu, n)
        obj = _objective(spec) if app == "screening" else apps.REVENUE
        from .apps.screening import objective_measure
        return c, objective_measure(F, c.grid, obj)
    if app == "delegation":
        return apps.delegation_cfi(F, spec.number("beta"), _delegation_menu(spec, F), n)
    if app == "contest":
        return apps.contest_cfi(F, _distribution(spec, "prizes"), spec.number("m"), n)
    return apps.persuasion_cfi(F, _distribution(spec, "lower"), _distribution(spec, "upper"), _value(spec), n)


# solving

@dataclass
class RunReport:
    status: str
    objective: float = None
    cutoffs: dict = field(default_factory=dict)
    certified: bool = None
    oracle_gap: float = None
    wall_time: float = 0.0
    artifacts: dict = field(default_factory=dict)
    code: int = EXIT_OK
    message: str = ""

    def text(self):
        lines = [f"status = {self.status}"]
        if self.objective is not None:
            lines.append(f"objective = {self.objective:.12g}")
        lines += [f"{k} = {v:.10g}" for k, v in self.cutoffs.items()]
        lines.append(f"certified = {self.certified}")
        lines.append("oracle_gap = " + ("skipped" if self.oracle_gap is None else f"{self.oracle_gap:.3e}"))
        lines.append(f"wall_time = {self.wall_time:.3f}s")
        lines += [f"artifact.{k} = {v}" for k, v in self.artifacts.items()]
        if self.message:
            lines.append(f"message = {self.message}")
        return "\n".join(lines)


def _solve_raw(c, mu, tol, oracle):
    if affine_bound_kind(c) is not None:
        res = concavify_solve(c, mu)
        u, value, part = res.u, res.objective, res.partition
        gap = None
        if oracle:
            lp = cfi_lp(c, mu)
            gap = abs(value - lp.objective) / (1.0 + abs(lp.objective))
    else:
        lp = cfi_lp(c, mu)
        u, value, part, gap = lp.u, lp.objective, None, (0.0 if oracle else None)
    rep = verify_optimality(c, u, mu, partition=part, tol=tol)
    if not rep.overall and part is not None:
        rep = verify_optimality(c, u, mu, tol=tol)
    ext = verify_extreme(c, u)
    zero = GridFunction(c.grid, np.zeros(c.grid.n_nodes))
    d = u.slopes()
    return Mechanism(u, GridFunction(c.grid, np.append(d, d[-1])), zero, value, {},
                     bool(rep.overall and ext.ok), gap, rep, {})


def _solve_design(spec, n, jobs):
    F = _distribution(spec, "distribution")
    welfare = _welfare(spec, "welfare") if "welfare" in spec.data else apps.Welfare()
    prices = _prices(spec, "prices")
    two = bool(spec.get("two_kink", False))
    share = spec.number("share", 0.5)
    best, _, val, scan = apps.design_default_menu(F, welfare, prices, n, two_kink=two, share=share, jobs=jobs)
    if two:
        p1, p2 = best
        menu = Menu(((0.0, 0.0), (share, share * p1), (1.0, share * p1 + (1 - share) * p2)))
    else:
        menu = apps.posted_price_menu(best)
    mech = apps.solve_screening(F, menu, n_cells=n, oracle=False)
    mech.cutoffs = dict(mech.cutoffs)
    if two:
        mech.cutoffs.update({"price": p1, "price_2": p2})
    else:
        mech.cutoffs["price"] = best
    mech.cutoffs["planner_value"] = val
    c = apps.screening_cfi(F, menu, n)
    return mech, (c, apps.mu_revenue(F, c.grid)), scan


def solve_spec(spec, n_cells=None, tol=None, oracle=True, jobs=1):
    """Run the pipeline a spec describes; returns (Mechanism, raw (Cfi, measure) or None, design scan or None)."""
    app = spec.data["application"]
    if app == "raw_cfi":
        c, mu = _raw_problem(spec, n_cells)
        return _solve_raw(c, mu, tol, oracle), (c, mu), None
    if app == "design_menu":
        return _solve_design(spec, _n_cells(spec, n_cells), jobs)
    n = _n_cells(spec, n_cells)
    F = _distribution(spec, "distribution")
    if app == "screening":
        m = apps.solve_screening(F, _screening_menu(spec), _objective(spec), n, oracle, tol)
    elif app == "delegation":
        m = apps.solve_delegation(F, spec.number("beta"), _delegation_menu(spec, F), n, oracle, tol)
    elif app == "contest":
        m = apps.solve_contest(F, _distribution(spec, "prizes"), spec.number("m"), n, oracle, tol)
    else:
        m = apps.solve_persuasion_sshaped(F, _distribution(spec, "lower"), _distribution(spec, "upper"),
                                          _value(spec), n, oracle, tol)
    return m, None, None


def _status(mech, oracle):
    if mech.certified:
        return "SUCCESS", EXIT_OK, ""
    if oracle and mech.oracle_gap is not None and mech.oracle_gap <= LP_GAP_TOL:
        return "SUCCESS", EXIT_OK, "optimality conditions not certified; LP cross-check agrees"
    if not oracle:
        return "CERTIFICATION_FAILED", EXIT_CERT, "optimality conditions not certified and LP cross-check is off"
    return "CERTIFICATION_FAILED", EXIT_CERT, f"not certified and LP gap {mech.oracle_gap:.3e} > {LP_GAP_TOL:g}"


def execute(spec, out_dir, n_cells=None, tol=None, oracle=True, jobs=1):
    """Solve, write artifacts into out_dir and return a RunReport (never raises for input or solver errors)."""
    t0 = time.perf_counter()
    try:
        mech, raw, scan = solve_spec(spec, n_cells, tol, oracle, jobs)
    except SpecError as e:
        return RunReport("SPEC_ERROR", code=EXIT_SPEC, message=str(e))
    except (PreconditionError, InvalidCfiError, NotConvexError, GridMismatchError) as e:
        return RunReport("SPEC_ERROR", code=EXIT_SPEC, message=f"{type(e).__name__}: {e}")
    except (SolverError, ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
        return RunReport("SOLVER_FAILURE", code=EXIT_SOLVER, message=f"{type(e).__name__}: {e}")
    status, code, msg = _status(mech, oracle)
    rep = RunReport(status, mech.value, dict(mech.cutoffs), mech.certified, mech.oracle_gap,
                    code=code, message=msg)
    os.makedirs(out_dir, exist_ok=True)
    rep.artifacts = mech.write(out_dir)
    try:
        c, mu = raw if raw is not None else build_problem(spec, n_cells)
    except Exception:
        c = mu = None
    if c is not None:
        c.to_dir(os.path.join(out_dir, "cfi"))
        mu.to_csv(os.path.join(out_dir, "measure"))
        rep.artifacts["cfi"] = os.path.join(out_dir, "cfi")
        rep.artifacts["measure"] = os.path.join(out_dir, "measure")
    if scan is not None:
        p = os.path.join(out_dir, "design_scan.csv")
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["param", "planner_value"])
            for prm, v in scan:
                w.writerow([" ".join(map(repr, prm)) if isinstance(prm, tuple) else repr(prm), repr(v)])
        rep.artifacts["design_scan"] = p
    rep.wall_time = time.perf_counter() - t0
    with open(os.path.join(out_dir, "run_report.txt"), "w") as fh:
        fh.write(rep.text() + "\n")
    return rep


# sweeps

def _set_path(data, path, value):
    cur = data
    parts = path.split(".")
    for p in parts[:-1]:
        if isinstance(cur, list):
            cur = cur[int(p)]
        else:
            cur = cur.setdefault(p, {})
    if isinstance(cur, list):
        cur[int(parts[-1])] = value
    else:
        cur[parts[-1]] = value


def _sweep_task(args):
    data, lines, base, out_dir, n_cells, tol, oracle = args
    rep = execute(Spec(data, lines, base), out_dir, n_cells, tol, oracle, 1)
    return rep


def monotone(values, direction, tol=0.0):
    d = np.diff(np.asarray(values, dtype=float))
    if direction == "nonincreasing":
        return bool(np.all(d <= tol))
    if direction == "nondecreasing":
        return bool(np.all(d >= -tol))
    raise ValueError(f"unknown direction {direction!r}")


def sweep(spec, out_dir, n_cells=None, tol=None, oracle=True, jobs=1):
    """Run the pipeline for each sweep value; returns (exit code, rows, monotone flag or None)."""
    block = spec.get("sweep")
    param = spec.get("sweep.param")
    values = spec.get("sweep.values")
    if not isinstance(param, str):
        raise spec.error("sweep.param", "expected a dotted field name")
    if not isinstance(values, list) or not values:
        raise spec.error("sweep.values", "expected a nonempty list")
    expect = block.get("expect")
    if expect not in (None, "nonincreasing", "nondecreasing"):
        raise spec.error("sweep.expect", "expected 'nonincreasing' or 'nondecreasing'")
    app = spec.data["application"]
    cutoff = block.get("cutoff", PRIMARY_CUTOFF[app])
    tasks = []
    for i, v in enumerate(values):
        data = copy.deepcopy(spec.data)
        data.pop("sweep")
        _set_path(data, param, v)
        tasks.append((data, spec.lines, spec.base, os.path.join(out_dir, f"run_{i:03d}"), n_cells, tol, oracle))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            reports = list(ex.map(_sweep_task, tasks))
    else:
        reports = [_sweep_task(t) for t in tasks]
    rows = []
    for v, r in zip(values, reports):
        cut = r.cutoffs.get(cutoff) if cutoff else None
        rows.append((param, v, cut, r.objective))
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "sweep.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["param", "value", "cutoff", "objective"])
        for prm, v, cut, obj in rows:
            w.writerow([prm, repr(v), "" if cut is None else repr(cut), "" if obj is None else repr(obj)])
    flag = None
    cuts = [r[2] for r in rows]
    if expect and all(cu is not None for cu in cuts):
        g = tol if tol is not None else 1e-9
        flag = monotone(cuts, expect, g)
    with open(os.path.join(out_dir, "sweep_report.txt"), "w") as fh:
        for (prm, v, cut, obj), r in zip(rows, reports):
            fh.write(f"{prm}={v}: status={r.status} cutoff={cut} objective={obj} {r.message}\n")
        if expect:
            fh.write(f"expected {expect}: monotone = {flag}\n")
    codes = [r.code for r in reports]
    worst = next((c for c in (EXIT_SPEC, EXIT_SOLVER, EXIT_CERT) if c in codes), EXIT_OK)
    return worst, reports, rows, flag


# verification

def verify_candidate(spec, candidate_path, n_cells=None, tol=None):
    """Returns (exit code, report lines)."""
    c, mu = build_problem(spec, n_cells)
    try:
        u = GridFunction.read_csv(candidate_path, c.grid)
    except (GridMismatchError, ValueError, OSError) as e:
        raise SpecError(f"candidate {candidate_path}: {e}")
    if not contains(c, u):
        return EXIT_SPEC, ["candidate lies outside the interval (level, slope or convexity violated)"]
    ext = verify_extreme(c, u)
    rep = verify_optimality(c, u, mu, tol=tol)
    lines = rep.lines() + [f"extreme = {ext.ok}" + ("" if ext.ok else f" ({ext.failure} at node {ext.node})"),
                           f"optimality = {rep.overall} (partition: {rep.source})",
                           f"objective = {mu.integrate(u):.12g}"]
    ok = bool(rep.overall and ext.ok)
    lines.append("CERTIFIED" if ok else "NOT CERTIFIED")
    return (EXIT_OK if ok else EXIT_UNCERTIFIED), lines


# entry point

def _parser():
    p = argparse.ArgumentParser(prog="cfikit", description="Convex function interval solver")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--grid", type=int, default=None, help="number of grid cells (overrides the spec)")
        sp.add_argument("--tol", type=float, default=None, help="tolerance for the optimality checks")

    for name, helptext in (("run", "solve one problem"), ("sweep", "solve a problem for each sweep value")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("spec")
        common(sp)
        sp.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./cfikit_out)")
        sp.add_argument("--oracle", choices=("on", "off"), default="on", help="LP cross-check")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")
    sp = sub.add_parser("verify", help="certify a candidate indirect utility")
    sp.add_argument("spec")
    sp.add_argument("candidate", help="CSV with header x,value on the spec's grid")
    common(sp)
    return p


def _out_dir(arg):
    return arg or os.environ.get(OUT_ENV) or os.path.join(os.getcwd(), "cfikit_out")


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.grid is not None and args.grid < 2:
        print("error: --grid must be at least 2", file=sys.stderr)
        return EXIT_SPEC
    try:
        spec = load_spec(args.spec)
        if args.command == "verify":
            code, lines = verify_candidate(spec, args.candidate, args.grid, args.tol)
            print("\n".join(lines))
            return code
        out = _out_dir(args.out)
        oracle = args.oracle == "on"
        if args.command == "run":
            if "sweep" in spec.data:
                print("note: sweep block ignored by 'run'", file=sys.stderr)
            rep = execute(spec, out, args.grid, args.tol, oracle, max(1, args.jobs))
            if rep.code in (EXIT_SPEC, EXIT_SOLVER):
                print(f"error: {rep.message}", file=sys.stderr)
            else:
                print(rep.text())
                if rep.message:
                    print(f"warning: {rep.message}", file=sys.stderr)
            return rep.code
        code, reports, rows, flag = sweep(spec, out, args.grid, args.tol, oracle, max(1, args.jobs))
        for (prm, v, cut, obj), r in zip(rows, reports):
            print(f"{prm}={v}\t{r.status}\tcutoff={cut}\tobjective={obj}")
            if r.code != EXIT_OK:
                print(f"  {r.message}", file=sys.stderr)
        if flag is not None:
            print(f"monotone ({spec.get('sweep.expect')}) = {flag}")
        print(f"wrote {os.path.join(out, 'sweep.csv')}")
        return code
    except SpecError as e:
        print(f"spec error: {e}", file=sys.stderr)
        return EXIT_SPEC
    except (PreconditionError, InvalidCfiError, NotConvexError, GridMismatchError) as e:
        print(f"input error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_SPEC
    except (SolverError, ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"solver failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
