"""Fixed-step RK4 time integration with breakdown and wraparound guards.

The flows are nonstiff after the nonlocal regularization (the linear symbol
k/(1+k^2) is bounded), so classical RK4 with an advective step restriction
dt <= 0.5 L/N is adequate.  Runs abort -- never silently continue -- when the
slope guard trips, a stage goes non-finite, or energy reaches the torus
boundary (tail norm over |x| > 0.4 L exceeding tail_budget times the initial
energy would mean periodization is polluting the line dynamics).
"""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.fft as sfft

from .grid import Field, PeriodicGrid
from .models import Family, ModelSpec, rhs_values, sign_condition_m0

ARCHIVE_MAGIC = "CHVIRIAL-ARCHIVE v1"


class RunStatus(enum.Enum):
    COMPLETED = "Completed"
    BLOW_UP_DETECTED = "BlowUpDetected"
    TAIL_BUDGET_EXCEEDED = "TailBudgetExceeded"


class BlowUpError(RuntimeError):
    """A non-finite value appeared inside a time step."""


@dataclass(frozen=True)
class SimConfig:
    model: ModelSpec
    grid: PeriodicGrid
    dt: float
    T: float
    snapshot_stride: int = 1
    guard_threshold: float | None = None  # None -> 50 x initial max|u_x|
    tail_budget: float = 1e-6
    decay_experiment: bool = False

    def __post_init__(self) -> None:
        if not (self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.T > 0):
            raise ValueError(f"T must be positive, got {self.T}")
        if self.snapshot_stride < 1:
            raise ValueError(f"snapshot_stride must be >= 1, got {self.snapshot_stride}")
        if self.dt > 0.5 * self.grid.L / self.grid.N + 1e-15:
            raise ValueError(
                f"dt={self.dt} violates the advective stability margin "
                f"0.5*L/N = {0.5 * self.grid.L / self.grid.N:.6g}"
            )


@dataclass
class Trajectory:
    grid: PeriodicGrid
    times: np.ndarray
    snapshots: np.ndarray  # (n_snapshots, N), snapshot-major
    status: RunStatus
    config: SimConfig | None = None
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.times) != len(self.snapshots):
            raise ValueError("one snapshot per time required")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    def field(self, i: int) -> Field:
        return Field(self.grid, self.snapshots[i])

    @property
    def n_snapshots(self) -> int:
        return len(self.times)


def step_rk4_values(m: ModelSpec, grid: PeriodicGrid, v: np.ndarray, dt: float) -> np.ndarray:
    k1 = rhs_values(m, grid, v)
    k2 = rhs_values(m, grid, v + 0.5 * dt * k1)
    k3 = rhs_values(m, grid, v + 0.5 * dt * k2)
    k4 = rhs_values(m, grid, v + dt * k3)
    out = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out = sfft.irfft(sfft.rfft(out) * grid.dealias_mask, n=grid.N)
    if not np.isfinite(out).all():
        raise BlowUpError("non-finite state after RK4 stage")
    return out


def step_rk4(m: ModelSpec, u: Field, dt: float) -> Field:
    """One classical RK4 step; the result is dealiased."""
    u.check_finite("step_rk4 input")
    return Field(u.grid, step_rk4_values(m, u.grid, u.values, dt))


def _tail_norm(grid: PeriodicGrid, v: np.ndarray) -> float:
    vx = grid.deriv_values(v, 1)
    mask = np.abs(grid.x) > 0.4 * grid.L
    return float(grid.dx * np.sum((v * v + vx * vx)[mask]))


def run(cfg: SimConfig, u0: Field) -> Trajectory:
    """Integrate u_t = F(u) from u0, snapshotting every snapshot_stride steps.

    CH runs tagged as decay experiments require the sign condition
    m0 = u0 - u0_xx >= 0 (the global-existence regime the decay statements
    assume); other data is rejected up front.
    """
    u0.check_finite("initial data")
    grid = cfg.grid
    if cfg.decay_experiment and cfg.model.family is Family.CH:
        if not sign_condition_m0(u0):
            raise ValueError("CH decay experiment requires m0 = u0 - u0_xx >= 0")

    ux0 = grid.deriv_values(u0.values, 1)
    threshold = cfg.guard_threshold
    if threshold is None:
        threshold = 50.0 * float(np.max(np.abs(ux0)))
    energy0 = grid.dx * float(np.sum(u0.values**2 + ux0**2))

    n_steps = int(round(cfg.T / cfg.dt))
    times = [0.0]
    snaps = [u0.values.copy()]
    status = RunStatus.COMPLETED

    def guards_ok(v: np.ndarray) -> RunStatus | None:
        vx = grid.deriv_values(v, 1)
        if threshold > 0 and np.max(np.abs(vx)) > threshold:
            return RunStatus.BLOW_UP_DETECTED
        if energy0 > 0:
            tail = grid.dx * float(np.sum((v * v + vx * vx)[np.abs(grid.x) > 0.4 * grid.L]))
            if tail > cfg.tail_budget * energy0:
                return RunStatus.TAIL_BUDGET_EXCEEDED
        return None

    v = u0.values.copy()
    for step in range(1, n_steps + 1):
        try:
            v = step_rk4_values(cfg.model, grid, v, cfg.dt)
        except BlowUpError:
            status = RunStatus.BLOW_UP_DETECTED
            break
        if step % cfg.snapshot_stride == 0 or step == n_steps:
            bad = guards_ok(v)
            if bad is not None:
                status = bad
                break
            times.append(step * cfg.dt)
            snaps.append(v.copy())

    return Trajectory(grid, np.array(times), np.array(snaps), status, cfg)


# -- snapshot archive ------------------------------------------------------
# One file per run: a magic line, a JSON header recording the full config,
# then the snapshots as little-endian float64, snapshot-major.

def _model_to_dict(m: ModelSpec) -> dict:
    d: dict = {"family": m.family.value}
    if m.b is not None:
        d["b"] = m.b
    if m.gamma is not None:
        d["gamma"] = m.gamma
    if m.p is not None:
        d["p"] = m.p
    return d


def model_from_dict(d: dict) -> ModelSpec:
    return ModelSpec(
        family=Family(d["family"]),
        b=d.get("b"),
        gamma=d.get("gamma"),
        p=d.get("p"),
    )


def save_archive(traj: Trajectory, path: str) -> None:
    cfg = traj.config
    header = {
        "grid": {"N": traj.grid.N, "L": traj.grid.L},
        "status": traj.status.value,
        "n_snapshots": traj.n_snapshots,
        "times": [float(t) for t in traj.times],
    }
    if cfg is not None:
        header["config"] = {
            "model": _model_to_dict(cfg.model),
            "dt": cfg.dt,
            "T": cfg.T,
            "snapshot_stride": cfg.snapshot_stride,
            "guard_threshold": cfg.guard_threshold,
            "tail_budget": cfg.tail_budget,
            "decay_experiment": cfg.decay_experiment,
        }
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write((ARCHIVE_MAGIC + "\n").encode())
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(np.ascontiguousarray(traj.snapshots, dtype="<f8").tobytes())
    os.replace(tmp, path)


def load_archive(path: str) -> Trajectory:
    with open(path, "rb") as fh:
        magic = fh.readline().decode().strip()
        if magic != ARCHIVE_MAGIC:
            raise ValueError(f"{path}: not a snapshot archive (bad magic {magic!r})")
        header = json.loads(fh.readline().decode())
        payload = fh.read()
    grid = PeriodicGrid(header["grid"]["N"], header["grid"]["L"])
    n = header["n_snapshots"]
    expected = n * grid.N * 8
    if len(payload) != expected:
        raise ValueError(f"{path}: truncated payload ({len(payload)} != {expected} bytes)")
    snaps = np.frombuffer(payload, dtype="<f8").reshape(n, grid.N).copy()
    cfg = None
    if "config" in header:
        c = header["config"]
        cfg = SimConfig(
            model=model_from_dict(c["model"]),
            grid=grid,
            dt=c["dt"],
            T=c["T"],
            snapshot_stride=c["snapshot_stride"],
            guard_threshold=c["guard_threshold"],
            tail_budget=c["tail_budget"],
            decay_experiment=c.get("decay_experiment", False),
        )
    return Trajectory(grid, np.array(header["times"]), snaps, RunStatus(header["status"]), cfg)
