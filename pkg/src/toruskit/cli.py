"""Batch front-end: parse a TOML scenario, dispatch to the modules, emit artifacts.

Subcommands: aa-chart, alpha, average, gram, mu-sweep, hje, flow, selfcheck.
Exit status 0 on success, 2 on domain/infeasibility errors, 3 on config
errors; every failure prints a one-line diagnostic naming the offending
field.  CSV output is byte-deterministic for a fixed config and seed.
"""

from __future__ import annotations

import argparse
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

import numpy as np

from . import action_angle as aa
from . import averaging as av
from . import elliptic as el
from . import flow as fl
from . import gram as gr
from . import hje
from . import mather as mt
from . import reporting as rp
from .errors import ConfigError, DomainError
from .potentials import PeriodicPotential1D, TorusPotential, normalize_min_zero

COMMANDS = ("aa-chart", "alpha", "average", "gram", "mu-sweep", "hje", "flow", "selfcheck")


def _load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config: file not found: {path}")
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"config: malformed TOML: {err}")


def _require(cfg: dict, key: str, context: str):
    if key not in cfg:
        raise ConfigError(f"{context}.{key}: missing required field")
    return cfg[key]


def _systems(cfg) -> list[aa.MechanicalSystem1D]:
    axes = _require(cfg, "axes", "scenario")
    if not isinstance(axes, list) or not axes:
        raise ConfigError("axes: expected a non-empty array of tables")
    systems = []
    for i, axis in enumerate(axes):
        mu = float(axis.get("mu", 0.0))
        if mu < 0:
            raise ConfigError(f"axes[{i}].mu: must be >= 0")
        pot = PeriodicPotential1D.from_document(_require(axis, "potential", f"axes[{i}]"))
        try:
            systems.append(aa.MechanicalSystem1D(mu, normalize_min_zero(pot)))
        except DomainError as err:
            raise ConfigError(f"axes[{i}]: {err}")
    dim = cfg.get("dimension")
    if dim is not None and int(dim) != len(systems):
        raise ConfigError(f"dimension: {dim} inconsistent with {len(systems)} axes")
    return systems


def _perturbation(cfg, d: int) -> TorusPotential:
    doc = _require(cfg, "perturbation", "scenario")
    U = TorusPotential.from_document(d, doc)
    return U


def _energy(cfg, section=None) -> float:
    if section and "energy" in section:
        e = section["energy"]
    elif "energy" in cfg:
        e = cfg["energy"]
    else:
        raise ConfigError("energy: missing required field")
    e = float(e)
    if e <= 0:
        raise ConfigError("energy: must be > 0")
    return e


def _run_aa_chart(cfg, out, opts):
    sec = cfg.get("aa_chart", {})
    systems = _systems(cfg)
    axis = int(sec.get("axis", len(systems) - 1))
    if not 0 <= axis < len(systems):
        raise ConfigError("aa_chart.axis: out of range")
    chart = aa.ActionAngleChart(systems[axis], _energy(cfg, sec),
                                branch=sec.get("branch", "+"))
    path = os.path.join(out, "aa_chart.csv")
    rp.write_csv(path, ["x", "theta", "dtheta_dx"], chart.to_rows())
    if opts.plot:
        rows = chart.to_rows()
        rp.render_lines(rp.figure_path(path), rows[:, 0],
                        [("theta(x)", rows[:, 1]), ("dtheta/dx", rows[:, 2])],
                        "x", f"action-angle chart (mu={systems[axis].mu}, "
                        f"E={chart.energy}, I={chart.action:.6g})")
    return [path]


def _run_alpha(cfg, out, opts):
    sec = cfg.get("alpha", {})
    systems = _systems(cfg)
    axis = int(sec.get("axis", len(systems) - 1))
    if not 0 <= axis < len(systems):
        raise ConfigError("alpha.axis: out of range")
    c_min = float(sec.get("c_min", -2.0))
    c_max = float(sec.get("c_max", 2.0))
    steps = int(sec.get("steps", 401))
    if steps < 2 or c_max <= c_min:
        raise ConfigError("alpha: need steps >= 2 and c_max > c_min")
    alpha = mt.AlphaFunction1D(systems[axis])
    cs = np.linspace(c_min, c_max, steps)
    vals = alpha.profile(cs)
    path = os.path.join(out, "alpha.csv")
    rp.write_csv(path, ["c", "alpha"], np.column_stack([cs, vals]))
    if opts.plot:
        rp.render_lines(rp.figure_path(path), cs, [("alpha(c)", vals)], "c",
                        f"Mather alpha (mu={systems[axis].mu}, flat edge "
                        f"{alpha.c_flat:.6g})")
    return [path]


def _run_average(cfg, out, opts):
    sec = cfg.get("average", {})
    systems = _systems(cfg)
    U = _perturbation(cfg, len(systems))
    n = int(sec.get("theta_grid_n", 32))
    tol = opts.tol if opts.tol is not None else float(sec.get("residual_tol", 1e-6))
    offset = None
    if opts.seed is not None:
        rng = np.random.default_rng(opts.seed)
        offset = rng.uniform(0.0, 1.0 / n, size=len(systems))
    report = av.separability_test(U, systems, _energy(cfg, sec), theta_grid_n=n,
                                  residual_tol=tol, threads=opts.threads,
                                  grid_offset=offset)
    path = os.path.join(out, "average.json")
    rp.write_json(path, report.to_dict())
    if opts.plot:
        feasible = [r for r in report.results if r.feasible]
        rp.render_bars(os.path.join(out, "average.png"),
                       [str(r.b) for r in feasible],
                       [max(r.max_residual, 1e-18) for r in feasible],
                       "max averaged residual", f"verdict: {report.verdict}",
                       hline=tol)
    return [path]


def _run_gram(cfg, out, opts):
    sec = cfg.get("gram", {})
    systems = _systems(cfg)
    degrees = tuple(int(v) for v in _require(sec, "degrees", "gram"))
    fixed_k1 = sec.get("fixed_k1")
    fixed_k1 = int(fixed_k1) if fixed_k1 is not None else None
    tol = opts.tol if opts.tol is not None else float(sec.get("rank_tol", 1e-8))
    report = gr.gram_matrix(degrees, systems, _energy(cfg, sec),
                            fixed_k1=fixed_k1, rank_tol=tol)
    path = os.path.join(out, "gram.json")
    rp.write_json(path, report.to_dict())
    if opts.plot:
        rp.render_heatmap(os.path.join(out, "gram.png"), report.matrix,
                          f"|G|, sigma_min={report.sigma_min:.4g}, "
                          f"full rank: {report.full_rank}")
    return [path]


def _run_mu_sweep(cfg, out, opts):
    sec = cfg.get("mu_sweep", {})
    systems = _systems(cfg)
    degrees = tuple(int(v) for v in _require(sec, "degrees", "mu_sweep"))
    values = _require(sec, "values", "mu_sweep")
    fixed_k1 = sec.get("fixed_k1")
    fixed_k1 = int(fixed_k1) if fixed_k1 is not None else None
    tol = opts.tol if opts.tol is not None else float(sec.get("rank_tol", 1e-8))
    pots = [s.V for s in systems]
    rows = gr.mu_sweep(degrees, pots, _energy(cfg, sec), values,
                       fixed_k1=fixed_k1, rank_tol=tol)
    path = os.path.join(out, "mu_sweep.csv")
    if all(len(r.mu) == 2 and r.mu[0] == 0.0 for r in rows) and not isinstance(values[0], list):
        header = ["mu", "detG_re", "detG_im", "sigma_min", "full_rank"]
        table = [[r.mu[1], r.det.real, r.det.imag, r.sigma_min, r.full_rank] for r in rows]
        mu_axis = [r.mu[1] for r in rows]
    else:
        header = [f"mu{i+1}" for i in range(len(rows[0].mu))] + \
            ["detG_re", "detG_im", "sigma_min", "full_rank"]
        table = [list(r.mu) + [r.det.real, r.det.imag, r.sigma_min, r.full_rank] for r in rows]
        mu_axis = [r.mu[-1] for r in rows]
    rp.write_csv(path, header, table)
    if opts.plot:
        rp.render_lines(rp.figure_path(path), mu_axis,
                        [("sigma_min", [r.sigma_min for r in rows]),
                         ("Re det G", [r.det.real for r in rows])],
                        "mu", "Gram sweep", logy=False)
    return [path]


def _run_hje(cfg, out, opts):
    sec = cfg.get("hje", {})
    systems = _systems(cfg)
    U = _perturbation(cfg, len(systems))
    path = os.path.join(out, "hje.json")
    if "omega" in sec:
        omega = [float(v) for v in sec["omega"]]
        sol = hje.solve_first_order(U, omega)
        payload = sol.to_dict()
        payload["transport_residual"] = hje.transport_residual(sol, U)
    elif "c" in sec:
        c = [float(v) for v in sec["c"]]
        eps = float(sec.get("epsilon", 0.0))
        lin = hje.lindstedt_first_order(systems, U, c, eps)
        payload = lin.transport.to_dict()
        payload.update({"c": c, "epsilon": eps, "alpha0": lin.alpha0,
                        "alpha_eps": lin.alpha_eps,
                        "defect": hje.lindstedt_defect(lin) if eps else 0.0})
    else:
        raise ConfigError("hje: need either 'omega' (transport) or 'c' (lindstedt)")
    rp.write_json(path, payload)
    if opts.plot:
        ks = [tuple(m["k"]) for m in payload["modes"]]
        mags = [abs(complex(m["re"], m["im"])) for m in payload["modes"]]
        rp.render_bars(os.path.join(out, "hje.png"), [str(k) for k in ks],
                       [max(m, 1e-18) for m in mags], "|u1_k|",
                       f"first-order solution, {len(payload['obstructions'])} obstruction(s)")
    return [path]


def _run_flow(cfg, out, opts):
    sec = cfg.get("flow", {})
    systems = _systems(cfg)
    d = len(systems)
    U = None
    eps = float(sec.get("epsilon", 0.0))
    if eps and "perturbation" in cfg:
        U = _perturbation(cfg, d)
    x0 = [float(v) for v in _require(sec, "x0", "flow")]
    p0 = [float(v) for v in _require(sec, "p0", "flow")]
    if len(x0) != d or len(p0) != d:
        raise ConfigError("flow.x0/p0: wrong dimension")
    h = float(sec.get("h", 1e-3))
    T = float(sec.get("t_final", 100.0))
    order = int(sec.get("order", 2))
    stride = int(sec.get("record_stride", max(1, int(round(T / h)) // 20000)))
    traj = fl.integrate(systems, U, eps, fl.PhaseState(x0, p0), h, T,
                        order=order, record_stride=max(1, stride))
    path = os.path.join(out, "flow.csv")
    header = (["t"] + [f"x{i+1}" for i in range(d)] + [f"lift{i+1}" for i in range(d)]
              + [f"p{i+1}" for i in range(d)] + ["H", "F1"])
    rp.write_csv(path, header, fl.trajectory_rows(traj))
    if opts.plot:
        rp.render_trajectory(rp.figure_path(path), traj,
                             f"flow (eps={eps}, h={h}, order={order})")
    return [path]


def _run_selfcheck(cfg, out, opts):
    """Condensed cross-module oracle suite; writes selfcheck.json."""
    checks = []

    def record(name, ok, detail):
        checks.append({"name": name, "pass": bool(ok), "detail": detail})
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")

    V = PeriodicPotential1D.pendulum()
    sysp = aa.MechanicalSystem1D(0.2, V)
    chart = aa.ActionAngleChart(sysp, 1.0)
    xg = np.linspace(0.0, 1.0, 51)
    dev = float(np.max(np.abs(chart.theta_of_x(xg) - el.pendulum_angle(xg, 0.2, 1.0))))
    record("chart-vs-elliptic", dev < 1e-8, f"sup dev {dev:.2e}")

    c_pend = mt.separatrix_constant(V)
    record("separatrix-constant", abs(c_pend - 4 / np.pi) < 1e-8,
           f"c(V)={c_pend:.12f}")

    free = [aa.MechanicalSystem1D(0.0, V), aa.MechanicalSystem1D(0.0, V)]
    torus = av.resonant_torus(free, 1.0, (1, 2))
    worst = 0.0
    for k in [(2, -1), (1, 1), (-2, 1), (3, 1)]:
        val = gr.mode_function(torus, k, (0.2, 0.7))
        kb = k[0] * 1 + k[1] * 2
        want = np.exp(2j * np.pi * (k[0] * 0.2 + k[1] * 0.7)) if kb == 0 else 0.0
        worst = max(worst, abs(val - want))
    record("flat-annihilation", worst < 1e-10, f"max dev {worst:.2e}")

    rep = gr.gram_matrix((2, 2), free, 1.0)
    dev = float(np.max(np.abs(rep.matrix - 4 * np.eye(len(rep.mode_index)))))
    record("gram-flat-limit", dev < 1e-8, f"||G-4I|| {dev:.2e}")

    U = TorusPotential(2, {(1, 1): 0.5, (-1, -1): 0.5})
    sol = hje.solve_first_order(U, (1.0, np.sqrt(2.0)))
    res = hje.transport_residual(sol, U)
    record("transport-residual", res < 1e-10, f"residual {res:.2e}")

    sys2 = [aa.MechanicalSystem1D(0.1, V), aa.MechanicalSystem1D(0.2, V)]
    tr = fl.integrate(sys2, None, 0.0, fl.PhaseState([0.1, 0.4], [1.2, 0.9]),
                      1e-3, 10.0, order=4, record_stride=10)
    drift = float(np.max(np.abs(tr.f1 - tr.f1[0])))
    record("flow-F1", drift < 1e-8, f"sup drift {drift:.2e}")

    path = os.path.join(out, "selfcheck.json")
    rp.write_json(path, {"checks": checks, "all_pass": all(c["pass"] for c in checks)})
    if not all(c["pass"] for c in checks):
        raise DomainError("selfcheck: at least one cross-module oracle failed")
    return [path]


_RUNNERS = {
    "aa-chart": _run_aa_chart,
    "alpha": _run_alpha,
    "average": _run_average,
    "gram": _run_gram,
    "mu-sweep": _run_mu_sweep,
    "hje": _run_hje,
    "flow": _run_flow,
    "selfcheck": _run_selfcheck,
}


class _Options:
    def __init__(self, ns):
        self.threads = ns.threads
        self.tol = ns.tol
        self.seed = ns.seed
        self.plot = not ns.no_plot


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="toruskit",
        description="Numerical toolkit for separability of perturbed Liouville "
                    "systems on tori: action-angle charts, alpha-functions, "
                    "resonant averaging, Gram certificates, symplectic flows.")
    parser.add_argument("command", choices=COMMANDS, metavar="command",
                        help=f"one of: {', '.join(COMMANDS)}")
    parser.add_argument("--config", required=False, help="TOML scenario file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--tol", type=float, default=None,
                        help="override the command's main tolerance")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for grid jitter in robustness runs")
    parser.add_argument("--no-plot", action="store_true",
                        help="skip rendering companion figures")

    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and argv[0] not in COMMANDS and not argv[0].startswith("-"):
            raise ConfigError(f"command: unknown command {argv[0]!r}")
        try:
            ns = parser.parse_args(argv)
        except SystemExit as exc:
            if exc.code == 0:
                return 0
            raise ConfigError("command line: invalid usage (see --help)")
        opts = _Options(ns)
        if ns.command == "selfcheck":
            cfg = {}
        else:
            if not ns.config:
                raise ConfigError("--config: required for this command")
            cfg = _load_config(ns.config)
        os.makedirs(ns.out, exist_ok=True)
        artifacts = _RUNNERS[ns.command](cfg, ns.out, opts)
        for a in artifacts:
            print(f"wrote {a}")
        return 0
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 3
    except DomainError as err:
        print(f"domain error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
