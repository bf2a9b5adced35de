"""Scenario configuration, experiment orchestration and CSV/report emission.

Commands
--------
simulate <cfg>            run the scenario, write snapshot archive + series.csv
verify-identities <cfg>   finite-difference d/dt of each virial column against
                          its analytic right-hand side; identities.csv + summary
decay-report <cfg>        region-norm decay table, log-log slope fits and a
                          plotting script (never executed here)
exact-eval <spec>         sample a closed-form solution onto a grid, write CSV

Configs are JSON.  All CSV output uses ',' separators, '.' decimals and 17
significant digits, and is written via write-then-rename so failures never
leave partial files.  Exit codes: 0 success, 1 malformed config / missing
input, 2 blow-up detected, 3 tail budget exceeded, 4 identity check failed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .exact import ExactKind, ExactSpec, evaluate
from .functionals import (
    Center,
    Region,
    RegionNorm,
    ThetaSpec,
    VirialKind,
    WeightShape,
    WeightSpec,
    conserved,
    default_weight,
    region_norm,
    virial_rhs,
    virial_value,
)
from .grid import Field, PeriodicGrid
from .integrate import RunStatus, SimConfig, Trajectory, load_archive, model_from_dict, run, save_archive

OUTPUT_ROOT_ENV = "CHVIRIAL_OUTPUT_ROOT"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BLOWUP = 2
EXIT_TAIL = 3
EXIT_IDENTITY = 4

_STATUS_EXIT = {
    RunStatus.COMPLETED: EXIT_OK,
    RunStatus.BLOW_UP_DETECTED: EXIT_BLOWUP,
    RunStatus.TAIL_BUDGET_EXCEEDED: EXIT_TAIL,
}


class ConfigError(ValueError):
    """Malformed scenario configuration; message names the offending field."""


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _require(cond: bool, where: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{where}: {msg}")


def _get(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return d[key]


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such config file")
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}")


def _exact_spec_from(d: dict, where: str) -> ExactSpec:
    kind_name = _get(d, "kind", where)
    try:
        kind = ExactKind(kind_name)
    except ValueError:
        raise ConfigError(f"{where}.kind: unknown exact kind {kind_name!r}")
    kwargs = {}
    for key in ("c", "k", "A", "sigma", "x0"):
        if key in d:
            kwargs[key] = float(d[key])
    if "p" in d:
        kwargs["p"] = int(d["p"])
    try:
        return ExactSpec(kind, **kwargs)
    except ValueError as e:
        raise ConfigError(f"{where}: {e}")


def _weight_from(d: dict | None, kind: VirialKind, where: str) -> WeightSpec:
    if d is None:
        return default_weight(kind)
    base = default_weight(kind)
    try:
        return WeightSpec(
            shape=WeightShape(d.get("shape", base.shape.value)),
            b=float(d.get("b", base.b)),
            center=Center(d.get("center", base.center.value)),
            C0=float(d.get("C0", base.C0)),
            scale_s=float(d.get("scale_s", base.scale_s)),
        )
    except ValueError as e:
        raise ConfigError(f"{where}.weight: {e}")


class Scenario:
    """Parsed and validated simulate/diagnose configuration."""

    def __init__(self, cfg: dict, cfg_dir: str):
        where = "config"
        _require(isinstance(cfg, dict), where, "top level must be an object")
        self.name = str(_get(cfg, "name", where))

        gd = _get(cfg, "grid", where)
        try:
            self.grid = PeriodicGrid(int(_get(gd, "N", "grid")), float(_get(gd, "L", "grid")))
        except ValueError as e:
            raise ConfigError(f"grid: {e}")

        try:
            self.model = model_from_dict(_get(cfg, "model", where))
        except (KeyError, ValueError) as e:
            raise ConfigError(f"model: {e}")

        td = _get(cfg, "time", where)
        guard = cfg.get("guard", {})
        try:
            self.sim = SimConfig(
                model=self.model,
                grid=self.grid,
                dt=float(_get(td, "dt", "time")),
                T=float(_get(td, "T", "time")),
                snapshot_stride=int(td.get("snapshot_stride", 1)),
                guard_threshold=guard.get("threshold"),
                tail_budget=float(guard.get("tail_budget", 1e-6)),
                decay_experiment=bool(cfg.get("decay_experiment", False)),
            )
        except ValueError as e:
            raise ConfigError(f"time/guard: {e}")

        raw_init = _get(cfg, "initial", where)
        self.initial_specs: list[ExactSpec] | None = None
        self.initial_file: str | None = None
        if isinstance(raw_init, dict) and "file" in raw_init:
            self.initial_file = os.path.join(cfg_dir, raw_init["file"])
        else:
            items = raw_init if isinstance(raw_init, list) else [raw_init]
            self.initial_specs = [
                _exact_spec_from(item, f"initial[{i}]") for i, item in enumerate(items)
            ]
            for i, spec in enumerate(self.initial_specs):
                _require(
                    spec.kind is not ExactKind.SHOCK_PEAKON,
                    f"initial[{i}]",
                    "shock peakon is not in H^1 and is evaluation-only; it cannot be integrated",
                )

        self.diagnostics = []
        names_seen: set[str] = set()
        for i, d in enumerate(cfg.get("diagnostics", [])):
            where_i = f"diagnostics[{i}]"
            cadence = int(d.get("cadence", 1))
            _require(cadence >= 1, where_i, "cadence must be >= 1")
            if "virial" in d:
                try:
                    kind = VirialKind(d["virial"])
                except ValueError:
                    raise ConfigError(f"{where_i}.virial: unknown kind {d['virial']!r}")
                weight = _weight_from(d.get("weight"), kind, where_i)
                theta = None
                if "theta" in d:
                    try:
                        theta = ThetaSpec(float(d["theta"].get("a", 0.0)),
                                          float(d["theta"].get("iota", 1.0)))
                    except ValueError as e:
                        raise ConfigError(f"{where_i}.theta: {e}")
                label = d.get("label", kind.value)
                entry = {"type": "virial", "kind": kind, "weight": weight,
                         "theta": theta, "cadence": cadence, "label": label}
            elif "region" in d:
                try:
                    reg = Region(d["region"])
                    nrm = RegionNorm(d.get("norm", "L2"))
                except ValueError as e:
                    raise ConfigError(f"{where_i}: {e}")
                label = d.get("label", f"{reg.value}_{nrm.value}")
                entry = {"type": "region", "region": reg, "norm": nrm,
                         "C0": float(d.get("C0", 1.0)), "b": float(d.get("b", 0.5)),
                         "a_ext": float(d.get("a_ext", 0.5)), "b_ext": float(d.get("b_ext", 0.5)),
                         "cadence": cadence, "label": label}
            else:
                raise ConfigError(f"{where_i}: needs either a 'virial' or a 'region' key")
            _require(entry["label"] not in names_seen, where_i, f"duplicate label {entry['label']!r}")
            names_seen.add(entry["label"])
            self.diagnostics.append(entry)

        tol = cfg.get("tolerances", {})
        self.tol_rel = float(tol.get("rel", 1e-3))
        self.tol_small = float(tol.get("small", 1e-5))
        self.tol_abs = float(tol.get("abs", 1e-8))

        out = str(_get(cfg, "output_dir", where))
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if root and not os.path.isabs(out):
            out = os.path.join(root, out)
        elif not os.path.isabs(out):
            out = os.path.join(cfg_dir, out)
        self.output_dir = out
        self.report = cfg.get("report", {})

    # -- paths -------------------------------------------------------------

    @property
    def archive_path(self) -> str:
        return os.path.join(self.output_dir, "archive.bin")

    def build_initial(self) -> Field:
        if self.initial_file is not None:
            try:
                raw = np.fromfile(self.initial_file, dtype="<f8")
            except OSError as e:
                raise ConfigError(f"initial.file: {e}")
            _require(raw.size == self.grid.N, "initial.file",
                     f"expected {self.grid.N} float64 values, found {raw.size}")
            return Field(self.grid, raw)
        total = self.grid.zeros()
        for spec in self.initial_specs:
            total = total + evaluate(spec, 0.0, self.grid).values
        return Field(self.grid, total)


def identity_pass(lhs: float, rhs: float, rel: float, small: float, abs_tol: float) -> bool:
    """Relative tolerance, with an absolute gate when both sides are tiny."""
    err = abs(lhs - rhs)
    scale = max(abs(lhs), abs(rhs))
    if scale < small:
        return err <= abs_tol or err <= rel * scale
    return err <= rel * scale


# -- series evaluation -------------------------------------------------------

def _diag_columns(sc: Scenario) -> list[str]:
    cols = []
    for d in sc.diagnostics:
        if d["type"] == "virial":
            cols.extend([f"{d['label']}:value", f"{d['label']}:rhs"])
        else:
            cols.append(d["label"])
    return cols


def _diag_values(sc: Scenario, traj: Trajectory, i: int) -> list[float]:
    t = float(traj.times[i])
    u = traj.field(i)
    p = int(sc.model.p) if sc.model.p is not None else 2
    out: list[float] = []
    for d in sc.diagnostics:
        usable = t >= 2.0 and i % d["cadence"] == 0
        if d["type"] == "virial":
            if usable:
                out.append(virial_value(d["kind"], u, t, d["weight"], d["theta"]))
                out.append(virial_rhs(d["kind"], u, t, d["weight"], d["theta"], p=p))
            else:
                out.extend([math.nan, math.nan])
        else:
            if usable:
                try:
                    val = region_norm(u, t, d["region"], d["norm"], C0=d["C0"], b=d["b"],
                                      a_ext=d["a_ext"], b_ext=d["b_ext"])
                except ValueError:
                    val = math.nan  # region outside the torus window
                out.append(val)
            else:
                out.append(math.nan)
    return out


def write_series_csv(sc: Scenario, traj: Trajectory, path: str) -> None:
    header = ["t", "I1", "E", "M_bbm", "E_bbm", "E_dp"] + _diag_columns(sc)
    lines = [",".join(header)]
    for i in range(traj.n_snapshots):
        u = traj.field(i)
        q = conserved(sc.model, u)
        row = [traj.times[i], q.I1, q.E, q.M_bbm, q.E_bbm, q.E_dp]
        row.extend(_diag_values(sc, traj, i))
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


# -- commands ----------------------------------------------------------------

def cmd_simulate(cfg_path: str) -> int:
    sc = Scenario(load_config(cfg_path), os.path.dirname(os.path.abspath(cfg_path)))
    u0 = sc.build_initial()
    os.makedirs(sc.output_dir, exist_ok=True)
    traj = run(sc.sim, u0)
    save_archive(traj, sc.archive_path)
    write_series_csv(sc, traj, os.path.join(sc.output_dir, "series.csv"))
    print(f"[{sc.name}] status={traj.status.value} snapshots={traj.n_snapshots} "
          f"final_t={traj.times[-1]:.6g} -> {sc.output_dir}")
    return _STATUS_EXIT[traj.status]


def cmd_verify_identities(cfg_path: str) -> int:
    sc = Scenario(load_config(cfg_path), os.path.dirname(os.path.abspath(cfg_path)))
    if not os.path.exists(sc.archive_path):
        print(f"error: missing snapshot archive {sc.archive_path}", file=sys.stderr)
        return EXIT_CONFIG
    traj = load_archive(sc.archive_path)
    p = int(sc.model.p) if sc.model.p is not None else 2
    virials = [d for d in sc.diagnostics if d["type"] == "virial"]
    if not virials:
        print("error: config has no virial diagnostics to verify", file=sys.stderr)
        return EXIT_CONFIG

    lines = ["t,kind,lhs_fd,rhs_analytic,abs_err,rel_err,pass"]
    summary: dict[str, list[int]] = {}
    for d in virials:
        kind, w, th = d["kind"], d["weight"], d["theta"]
        ts = traj.times
        vals: dict[int, float] = {}
        for i, t in enumerate(ts):
            if t >= 2.0 and i % d["cadence"] == 0:
                vals[i] = virial_value(kind, traj.field(i), float(t), w, th)
        idx = sorted(vals)
        n_pass = n_fail = 0
        for j in range(1, len(idx) - 1):
            i0, i1, i2 = idx[j - 1], idx[j], idx[j + 1]
            h1, h2 = ts[i1] - ts[i0], ts[i2] - ts[i1]
            if abs(h1 - h2) > 1e-9 * max(h1, h2):
                continue  # centered stencil needs equispaced neighbours
            lhs = (vals[i2] - vals[i0]) / (h1 + h2)
            rhs = virial_rhs(kind, traj.field(i1), float(ts[i1]), w, th, p=p)
            err = abs(lhs - rhs)
            scale = max(abs(lhs), abs(rhs))
            rel = err / scale if scale > 0 else 0.0
            ok = identity_pass(lhs, rhs, sc.tol_rel, sc.tol_small, sc.tol_abs)
            n_pass += ok
            n_fail += not ok
            lines.append(",".join([
                _fmt(float(ts[i1])), d["label"], _fmt(lhs), _fmt(rhs), _fmt(err), _fmt(rel),
                "1" if ok else "0",
            ]))
        summary[d["label"]] = [n_pass, n_fail]

    os.makedirs(sc.output_dir, exist_ok=True)
    _atomic_write(os.path.join(sc.output_dir, "identities.csv"), "\n".join(lines) + "\n")
    all_ok = True
    for label, (n_pass, n_fail) in summary.items():
        status = "PASS" if n_fail == 0 and n_pass > 0 else "FAIL"
        if status == "FAIL":
            all_ok = False
        print(f"{status} {label}: {n_pass} ok, {n_fail} failed")
    return EXIT_OK if all_ok else EXIT_IDENTITY


def _fit_loglog_slope(ts: np.ndarray, ys: np.ndarray) -> float:
    good = (ys > 0) & (ts > 0)
    if good.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(ts[good]), np.log(ys[good]), 1)[0])


_PLOT_SCRIPT = """\
# Plot commands for the decay report (generic gnuplot syntax; not executed
# by the toolkit).  Run from the report directory.
set datafile separator ','
set logscale xy
set xlabel 't'
set ylabel 'region norm'
plot 'decay.csv' using 1:3 with linespoints title 'decay'
"""


def cmd_decay_report(cfg_path: str) -> int:
    cfg = load_config(cfg_path)
    if "shock_closed_form" in cfg:
        return _decay_report_closed_form(cfg, cfg_path)
    sc = Scenario(cfg, os.path.dirname(os.path.abspath(cfg_path)))
    if not os.path.exists(sc.archive_path):
        print(f"error: missing snapshot archive {sc.archive_path}", file=sys.stderr)
        return EXIT_CONFIG
    traj = load_archive(sc.archive_path)
    if traj.n_snapshots < 16:
        print(f"error: need at least 16 snapshots for a report, have {traj.n_snapshots}",
              file=sys.stderr)
        return EXIT_CONFIG
    regions = [d for d in sc.diagnostics if d["type"] == "region"]
    if not regions:
        print("error: config has no region diagnostics", file=sys.stderr)
        return EXIT_CONFIG

    lines = ["t,region,norm"]
    slopes = ["region,slope,t_lo,t_hi"]
    t_final = float(traj.times[-1])
    fit_lo, fit_hi = sc.report.get("fit_window", [t_final / 4.0, t_final])
    for d in regions:
        ts, ys = [], []
        for i, t in enumerate(traj.times):
            if t < 2.0 or i % d["cadence"] != 0:
                continue
            try:
                val = region_norm(traj.field(i), float(t), d["region"], d["norm"],
                                  C0=d["C0"], b=d["b"], a_ext=d["a_ext"], b_ext=d["b_ext"])
            except ValueError:
                continue
            ts.append(float(t))
            ys.append(val)
            lines.append(f"{_fmt(float(t))},{d['label']},{_fmt(val)}")
        ts, ys = np.array(ts), np.array(ys)
        window = (ts >= fit_lo) & (ts <= fit_hi)
        slope = _fit_loglog_slope(ts[window], ys[window])
        slopes.append(f"{d['label']},{_fmt(slope)},{_fmt(fit_lo)},{_fmt(fit_hi)}")
        print(f"{d['label']}: log-log slope {slope:.4f} over t in [{fit_lo:.4g}, {fit_hi:.4g}]")

    os.makedirs(sc.output_dir, exist_ok=True)
    _atomic_write(os.path.join(sc.output_dir, "decay.csv"), "\n".join(lines) + "\n")
    _atomic_write(os.path.join(sc.output_dir, "decay_slopes.csv"), "\n".join(slopes) + "\n")
    _atomic_write(os.path.join(sc.output_dir, "plot_decay.gp"), _PLOT_SCRIPT)
    return EXIT_OK


def _decay_report_closed_form(cfg: dict, cfg_path: str) -> int:
    from .exact import shock_peakon_local_l2

    d = cfg["shock_closed_form"]
    try:
        k = float(_get(d, "k", "shock_closed_form"))
        b = float(d.get("b", 0.5))
        t_min = float(d.get("t_min", 10.0))
        t_max = float(d.get("t_max", 1e4))
        n = int(d.get("n_points", 60))
        _require(t_min >= 2 and t_max > t_min and n >= 2, "shock_closed_form", "bad t grid")
    except ConfigError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigError(f"shock_closed_form: {e}")

    out = str(_get(cfg, "output_dir", "config"))
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not os.path.isabs(out):
        out = os.path.join(root, out)
    elif not os.path.isabs(out):
        out = os.path.join(os.path.dirname(os.path.abspath(cfg_path)), out)

    ts = np.exp(np.linspace(math.log(t_min), math.log(t_max), n))
    ys = np.array([shock_peakon_local_l2(float(t), k, b) for t in ts])
    label = "I_b_closed_form_L2sq"
    lines = ["t,region,norm"] + [f"{_fmt(float(t))},{label},{_fmt(float(y))}" for t, y in zip(ts, ys)]
    slope = _fit_loglog_slope(ts, ys)
    print(f"{label}: log-log slope {slope:.4f} over t in [{t_min:.4g}, {t_max:.4g}]")
    os.makedirs(out, exist_ok=True)
    _atomic_write(os.path.join(out, "decay.csv"), "\n".join(lines) + "\n")
    _atomic_write(os.path.join(out, "decay_slopes.csv"),
                  f"region,slope,t_lo,t_hi\n{label},{_fmt(slope)},{_fmt(t_min)},{_fmt(t_max)}\n")
    _atomic_write(os.path.join(out, "plot_decay.gp"), _PLOT_SCRIPT)
    return EXIT_OK


def cmd_exact_eval(spec_path: str, t: float, N: int, L: float, out: str | None) -> int:
    spec = _exact_spec_from(load_config(spec_path), "spec")
    grid = PeriodicGrid(N, L)
    u = evaluate(spec, t, grid)
    lines = ["x,u"] + [f"{_fmt(float(x))},{_fmt(float(v))}" for x, v in zip(grid.x, u.values)]
    text = "\n".join(lines) + "\n"
    if out:
        _atomic_write(out, text)
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="chvirial",
                                 description="Pseudospectral runs and virial/decay diagnostics "
                                             "for CH/DP/BBM-type equations")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("simulate", "verify-identities", "decay-report"):
        p = sub.add_parser(name)
        p.add_argument("config", help="scenario config (JSON)")
    pe = sub.add_parser("exact-eval")
    pe.add_argument("spec", help="closed-form spec (JSON)")
    pe.add_argument("--t", type=float, default=0.0)
    pe.add_argument("--N", type=int, default=1024)
    pe.add_argument("--L", type=float, default=100.0)
    pe.add_argument("--out", default=None)
    args = ap.parse_args(argv)

    try:
        if args.command == "simulate":
            return cmd_simulate(args.config)
        if args.command == "verify-identities":
            return cmd_verify_identities(args.config)
        if args.command == "decay-report":
            return cmd_decay_report(args.config)
        return cmd_exact_eval(args.spec, args.t, args.N, args.L, args.out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
