"""Condition sweeps, dataset assembly and polar success-rate maps.

A sweep runs the per-condition optimizer over a (speed, angle) grid with
several repeats, each cell seeded independently from the master seed so
any subset can be recomputed (or resumed) without touching the rest.
Datasets are JSON-lines with canonical formatting, hashed for policy
provenance.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .contact import LandingClass
from .control import ApproachCondition, ControllerGains
from .dynamics import QuadParams
from .ephe import (ConditionResult, DomainRandomization, EpheConfig,
                   learn_condition, randomize_inertia)
from .jsonio import canonical_json, canonical_json_bytes, load_json, sha256_hex
from .legs import LEG_DESIGNS, LegConfig
from .policy import TrainedPolicy, run_two_stage
from .reward import RewardConfig
from .rollout import RolloutConfig
from .sensing import SensoryState

DESK_SPEEDS = (1.5, 2.0, 2.5, 3.0, 3.5)        # [m/s]
DESK_ANGLES = (30.0, 45.0, 60.0, 75.0, 90.0)   # [deg]
FULL_SPEEDS = tuple(round(1.5 + 0.1 * i, 1) for i in range(21))
FULL_ANGLES = tuple(round(30.0 + 3.75 * i, 2) for i in range(17))


@dataclass(frozen=True)
class SweepSpec:
    speeds: tuple[float, ...] = DESK_SPEEDS
    angles: tuple[float, ...] = DESK_ANGLES
    repeats: int = 3
    leg: LegConfig = LEG_DESIGNS["Semi-Narrow-Long"]
    randomization: DomainRandomization | None = DomainRandomization()
    seed: int = 0
    extended_range: bool = False    # lift the speed/angle range check

    def __post_init__(self):
        if not self.speeds or not self.angles:
            raise ValueError("speeds and angles must be non-empty")
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        if not self.extended_range:
            if min(self.speeds) < 1.5 or max(self.speeds) > 3.5:
                raise ValueError(f"speeds outside [1.5, 3.5]: {self.speeds}")
            if min(self.angles) < 30.0 or max(self.angles) > 90.0:
                raise ValueError(f"angles outside [30, 90] deg: {self.angles}")

    @property
    def n_cells(self) -> int:
        return len(self.speeds) * len(self.angles) * self.repeats

    def cell(self, idx: int) -> tuple[float, float, int]:
        """(speed, angle, repeat) for a flat cell index."""
        per_speed = len(self.angles) * self.repeats
        speed = self.speeds[idx // per_speed]
        rem = idx % per_speed
        return speed, self.angles[rem // self.repeats], rem % self.repeats


def cell_seed(master: int, idx: int) -> int:
    """Stable per-cell seed; independent streams for every cell."""
    return int(np.random.SeedSequence([master, idx]).generate_state(1)[0])


@dataclass
class SweepDataset:
    spec: SweepSpec
    rows: list[dict] = field(default_factory=list)

    def sha256(self) -> str:
        return sha256_hex(dataset_bytes(self))


def _result_row(res: ConditionResult, repeat: int) -> dict:
    s = res.s_trg
    return {
        "speed": res.condition.speed,
        "angle_deg": res.condition.angle_deg,
        "repeat": repeat,
        "leg": res.leg_name,
        "seed": res.seed,
        "tau_cr": res.mu.tau_cr,
        "a_rot": res.mu.a_rot,
        "sigma_tau": res.sigma[0],
        "sigma_arot": res.sigma[1],
        "episodes": res.episodes,
        "converged": res.converged,
        "feasible": res.feasible,
        "stagnant_episodes": res.stagnant_episodes,
        "total_rollouts": res.total_rollouts,
        "success_rate": res.success_rate,
        "outcomes": dict(sorted(res.outcome_counts.items())),
        "s_trg": None if s is None else [s.tau, s.theta_x, s.d_ceil],
        "trigger_tau": res.trigger_tau,
        "best_reward": res.best_reward,
        "curve": res.curve,
    }


def _run_cell(args) -> dict:
    spec, idx, ephe, rollout_cfg, reward_cfg, gains, params = args
    speed, angle, repeat = spec.cell(idx)
    cond = ApproachCondition(speed=speed, angle_deg=angle)
    res = learn_condition(cond, spec.leg, params, cell_seed(spec.seed, idx),
                          ephe=ephe, rand=spec.randomization, gains=gains,
                          rollout_cfg=rollout_cfg, reward_cfg=reward_cfg)
    return _result_row(res, repeat)


def run_sweep(spec: SweepSpec, ephe: EpheConfig = EpheConfig(),
              rollout_cfg: RolloutConfig = RolloutConfig(),
              reward_cfg: RewardConfig = RewardConfig(),
              gains: ControllerGains = ControllerGains(),
              params: QuadParams = QuadParams(),
              jobs: int = 1, resume_dir: str | None = None,
              progress=None) -> SweepDataset:
    """Learn every grid cell; deterministic for a given spec.

    resume_dir: directory of per-cell JSON files; finished cells are
    loaded instead of recomputed and fresh cells are written as they
    complete, so an interrupted sweep restarts where it stopped.
    """
    if resume_dir is not None:
        os.makedirs(resume_dir, exist_ok=True)

    def cell_path(idx: int) -> str:
        return os.path.join(resume_dir, f"cell_{idx:05d}.json")

    rows: dict[int, dict] = {}
    todo: list[int] = []
    for idx in range(spec.n_cells):
        if resume_dir is not None and os.path.exists(cell_path(idx)):
            rows[idx] = load_json(cell_path(idx))
        else:
            todo.append(idx)

    work = [(spec, idx, ephe, rollout_cfg, reward_cfg, gains, params)
            for idx in todo]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            fresh = list(pool.map(_run_cell, work, chunksize=1))
    else:
        fresh = []
        for w in work:
            fresh.append(_run_cell(w))
            if progress is not None:
                progress(w[1], spec.n_cells, fresh[-1])

    for idx, row in zip(todo, fresh):
        rows[idx] = row
        if resume_dir is not None:
            with open(cell_path(idx), "wb") as fh:
                fh.write(canonical_json_bytes(row))
    return SweepDataset(spec, [rows[i] for i in range(spec.n_cells)])


def dataset_bytes(ds: SweepDataset) -> bytes:
    lines = [canonical_json(row) for row in ds.rows]
    return ("\n".join(lines) + "\n").encode("ascii")


def save_dataset(ds: SweepDataset, path) -> bytes:
    data = dataset_bytes(ds)
    with open(path, "wb") as fh:
        fh.write(data)
    return data


def load_dataset_rows(path) -> list[dict]:
    import json
    with open(path, "r", encoding="ascii") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def filter_training_set(rows: list[dict], threshold: float
                        ) -> list[tuple[SensoryState, float]]:
    """(trigger state, a_rot) pairs whose evaluated success clears the bar."""
    pairs = []
    for row in rows:
        if row["success_rate"] >= threshold and row["s_trg"] is not None:
            pairs.append((SensoryState(*row["s_trg"]), row["a_rot"]))
    if not pairs:
        raise ValueError(
            f"no rows reach success threshold {threshold}; relax the "
            f"threshold (max observed "
            f"{max((r['success_rate'] for r in rows), default=0.0):.2f})")
    return pairs


def evaluate_policy_grid(policy: TrainedPolicy, spec: SweepSpec,
                         n_eval: int = 10,
                         params: QuadParams = QuadParams(),
                         rollout_cfg: RolloutConfig = RolloutConfig(),
                         gains: ControllerGains = ControllerGains(),
                         progress=None) -> list[dict]:
    """Fly the two-stage policy n_eval times per (speed, angle) cell.

    Rates are over triggered flights; flights that never enter the
    trigger region are counted separately and flagged when the whole
    cell stays outside it.
    """
    grid = []
    for si, speed in enumerate(spec.speeds):
        for ai, angle in enumerate(spec.angles):
            cond = ApproachCondition(speed=speed, angle_deg=angle)
            n_opt = n_sub = n_trig = 0
            for k in range(n_eval):
                idx = (si * len(spec.angles) + ai) * n_eval + k
                rng = np.random.default_rng([spec.seed, 9_000_001, idx])
                p = (randomize_inertia(params, spec.randomization, rng)
                     if spec.randomization is not None else params)
                rec = run_two_stage(cond, spec.leg, policy, p, rollout_cfg,
                                    gains, rng)
                if rec.no_trigger:
                    continue
                n_trig += 1
                cls = rec.outcome.landing_class
                if cls is LandingClass.OPTIMAL_FOUR_LEG:
                    n_opt += 1
                elif cls in (LandingClass.SUBOPTIMAL_FOUR_LEG_CONTACT,
                             LandingClass.SUBOPTIMAL_TWO_LEG):
                    n_sub += 1
            cell = {
                "speed": speed,
                "angle_deg": angle,
                "success_rate": n_opt / n_trig if n_trig else 0.0,
                "suboptimal_rate": n_sub / n_trig if n_trig else 0.0,
                "n": n_trig,
                "n_eval": n_eval,
                "no_trigger": n_trig == 0,
            }
            grid.append(cell)
            if progress is not None:
                progress(len(grid), len(spec.speeds) * len(spec.angles), cell)
    return grid


def dataset_success_grid(rows: list[dict], speeds, angles) -> list[dict]:
    """Collapse dataset repeats into one mean-success cell per condition."""
    grid = []
    for speed in speeds:
        for angle in angles:
            sel = [r for r in rows
                   if r["speed"] == speed and r["angle_deg"] == angle]
            n = len(sel)
            mean_opt = sum(r["success_rate"] for r in sel) / n if n else 0.0
            sub = 0.0
            if n:
                tot = sum(sum(r["outcomes"].values()) for r in sel)
                nsub = sum(v for r in sel for k, v in r["outcomes"].items()
                           if k.startswith("SubOptimal"))
                sub = nsub / tot if tot else 0.0
            grid.append({"speed": speed, "angle_deg": angle,
                         "success_rate": mean_opt, "suboptimal_rate": sub,
                         "n": n, "no_trigger": n == 0})
    return grid


def band_mean(grid: list[dict], lo: float, hi: float,
              key: str = "success_rate") -> float:
    """Mean rate over cells with angle in (lo, hi]."""
    sel = [c[key] for c in grid if lo < c["angle_deg"] <= hi]
    return sum(sel) / len(sel) if sel else math.nan


# ---------------------------------------------------------------- plots

def _smooth_grid(values: np.ndarray) -> np.ndarray:
    """3x3 neighbor mean on the speed x angle lattice (render only)."""
    out = np.empty_like(values)
    ns, na = values.shape
    for i in range(ns):
        for j in range(na):
            block = values[max(i - 1, 0):i + 2, max(j - 1, 0):j + 2]
            out[i, j] = block.mean()
    return out


def _heat_color(v: float) -> str:
    """Three-stop blue -> yellow -> red map on [0, 1]."""
    v = min(max(v, 0.0), 1.0)
    stops = [(0.0, (40, 60, 150)), (0.5, (240, 220, 60)), (1.0, (200, 30, 30))]
    for (v0, c0), (v1, c1) in zip(stops[:-1], stops[1:]):
        if v <= v1:
            f = (v - v0) / (v1 - v0)
            rgb = [round(a + f * (b - a)) for a, b in zip(c0, c1)]
            return f"#{rgb[0]:02x}{rgb[1]:02x}{rgb[2]:02x}"
    return "#c81e1e"


def polar_map_csv(grid: list[dict]) -> str:
    lines = ["speed,angle_deg,success_rate,suboptimal_rate,n"]
    for c in sorted(grid, key=lambda c: (c["speed"], c["angle_deg"])):
        lines.append(f"{c['speed']:.10g},{c['angle_deg']:.10g},"
                     f"{c['success_rate']:.10g},{c['suboptimal_rate']:.10g},"
                     f"{c['n']}")
    return "\n".join(lines) + "\n"


def polar_map_svg(grid: list[dict], smooth: bool = True,
                  size: int = 420) -> str:
    """Polar heat map: radius = speed, angular axis = flight angle."""
    speeds = sorted({c["speed"] for c in grid})
    angles = sorted({c["angle_deg"] for c in grid})
    half = size / 2.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" '
        f'height="{size}" viewBox="0 0 {size} {size}">',
        f"<!-- polar success map; smoothing={'3x3-mean' if smooth else 'none'}"
        " (render only, data files stay raw) -->",
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    if speeds and angles:
        vals = np.zeros((len(speeds), len(angles)))
        lookup = {(c["speed"], c["angle_deg"]): c["success_rate"] for c in grid}
        for i, s in enumerate(speeds):
            for j, a in enumerate(angles):
                vals[i, j] = lookup.get((s, a), 0.0)
        shown = _smooth_grid(vals) if smooth else vals
        rmax = max(speeds)
        r_edges = _edges(speeds, lo=max(2.0 * speeds[0] - speeds[min(1, len(speeds) - 1)], 0.0))
        a_edges = _edges(angles)
        scale = (half - 30.0) / rmax
        cx, cy = 20.0, size - 20.0          # origin bottom-left, 30..90 deg fan
        for i in range(len(speeds)):
            for j in range(len(angles)):
                r0, r1 = r_edges[i] * scale, r_edges[i + 1] * scale
                a0, a1 = math.radians(a_edges[j]), math.radians(a_edges[j + 1])
                parts.append(_wedge(cx, cy, r0, r1, a0, a1,
                                    _heat_color(shown[i, j])))
        for j, a in enumerate(angles):
            rad = math.radians(a)
            parts.append(
                f'<text x="{cx + (rmax * scale + 12) * math.cos(rad):.1f}" '
                f'y="{cy - (rmax * scale + 12) * math.sin(rad):.1f}" '
                f'font-size="11" text-anchor="middle">{a:g}&#176;</text>')
        for i, s in enumerate(speeds):
            parts.append(
                f'<text x="{cx + r_edges[i + 1] * scale:.1f}" y="{cy + 14:.1f}" '
                f'font-size="11" text-anchor="middle">{s:g}</text>')
        parts.append(f'<text x="{cx + rmax * scale / 2:.1f}" y="{cy + 28:.1f}" '
                     f'font-size="12" text-anchor="middle">speed [m/s]</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _edges(centers: list[float], lo: float | None = None) -> list[float]:
    """Cell edges bracketing sorted centers."""
    if len(centers) == 1:
        c = centers[0]
        return [c * 0.9 if lo is None else lo, c * 1.1]
    mids = [(a + b) / 2.0 for a, b in zip(centers[:-1], centers[1:])]
    first = centers[0] - (mids[0] - centers[0]) if lo is None else lo
    last = centers[-1] + (centers[-1] - mids[-1])
    return [first] + mids + [last]


def _wedge(cx, cy, r0, r1, a0, a1, color) -> str:
    x00, y00 = cx + r0 * math.cos(a0), cy - r0 * math.sin(a0)
    x01, y01 = cx + r1 * math.cos(a0), cy - r1 * math.sin(a0)
    x11, y11 = cx + r1 * math.cos(a1), cy - r1 * math.sin(a1)
    x10, y10 = cx + r0 * math.cos(a1), cy - r0 * math.sin(a1)
    return (f'<path d="M {x00:.2f} {y00:.2f} L {x01:.2f} {y01:.2f} '
            f'A {r1:.2f} {r1:.2f} 0 0 0 {x11:.2f} {y11:.2f} '
            f'L {x10:.2f} {y10:.2f} '
            f'A {r0:.2f} {r0:.2f} 0 0 1 {x00:.2f} {y00:.2f} Z" '
            f'fill="{color}" stroke="white" stroke-width="0.5"/>')


def export_polar_map(grid: list[dict], csv_path, svg_path,
                     smooth: bool = True) -> None:
    with open(csv_path, "wb") as fh:
        fh.write(polar_map_csv(grid).encode("ascii"))
    with open(svg_path, "wb") as fh:
        fh.write(polar_map_svg(grid, smooth=smooth).encode("ascii"))
