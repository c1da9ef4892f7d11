"""Sweep harness: cell seeding, resume, dataset persistence, polar maps."""

import numpy as np
import pytest

from perchlab.harness import (SweepSpec, band_mean, cell_seed,
                              dataset_success_grid, evaluate_policy_grid,
                              filter_training_set, load_dataset_rows,
                              polar_map_csv, polar_map_svg, run_sweep,
                              save_dataset)
from perchlab.legs import LEG_DESIGNS
from perchlab.ocsvm import OcSvmModel
from perchlab.policy import Normalizer, TrainedPolicy
from perchlab.actionnet import ActionNet
from perchlab.jsonio import canonical_json_bytes, load_json, sha256_hex


TINY = SweepSpec(speeds=(2.0,), angles=(45.0, 60.0), repeats=1)


def test_spec_validation_and_cell_mapping():
    with pytest.raises(ValueError):
        SweepSpec(speeds=())
    with pytest.raises(ValueError):
        SweepSpec(repeats=0)
    with pytest.raises(ValueError):
        SweepSpec(speeds=(0.5, 2.0))
    with pytest.raises(ValueError):
        SweepSpec(angles=(10.0, 45.0))
    SweepSpec(speeds=(0.5, 5.0), angles=(10.0, 95.0), extended_range=True)

    spec = SweepSpec(speeds=(1.5, 2.5), angles=(30.0, 60.0, 90.0), repeats=2)
    assert spec.n_cells == 12
    flat = [(s, a, r) for s in spec.speeds for a in spec.angles
            for r in range(spec.repeats)]
    assert [spec.cell(i) for i in range(spec.n_cells)] == flat


def test_cell_seed_streams():
    seeds = [cell_seed(0, i) for i in range(100)]
    assert len(set(seeds)) == 100, "cell seeds must not collide"
    assert seeds == [cell_seed(0, i) for i in range(100)]
    assert cell_seed(1, 0) != cell_seed(0, 0)


def test_sweep_determinism_and_round_trip(tmp_path):
    ds_a = run_sweep(TINY)
    ds_b = run_sweep(TINY)
    assert ds_a.sha256() == ds_b.sha256(), "same spec must give identical bytes"

    path = tmp_path / "dataset.jsonl"
    data = save_dataset(ds_a, path)
    assert sha256_hex(data) == ds_a.sha256()
    rows = load_dataset_rows(path)
    assert rows == ds_a.rows

    for row in rows:
        for key in ("speed", "angle_deg", "repeat", "leg", "seed", "tau_cr",
                    "a_rot", "episodes", "converged", "success_rate",
                    "outcomes", "s_trg", "trigger_tau", "curve"):
            assert key in row, f"dataset row missing {key}"


def test_sweep_resume_uses_cached_cells(tmp_path):
    cells = tmp_path / "cells"
    ds = run_sweep(TINY, resume_dir=str(cells))
    files = sorted(cells.iterdir())
    assert [f.name for f in files] == ["cell_00000.json", "cell_00001.json"]

    # plant a sentinel in cell 0: resume must trust the cache, not recompute
    row = load_json(files[0])
    row["tau_cr"] = 0.123456
    files[0].write_bytes(canonical_json_bytes(row))
    again = run_sweep(TINY, resume_dir=str(cells))
    assert again.rows[0]["tau_cr"] == 0.123456
    assert again.rows[1] == ds.rows[1]


def fake_rows():
    def row(speed, angle, rate, s_trg, opt, sub, fail):
        return {"speed": speed, "angle_deg": angle, "success_rate": rate,
                "s_trg": s_trg, "a_rot": 5.0,
                "outcomes": {"OptimalFourLeg": opt,
                             "SubOptimalTwoLeg": sub,
                             "FailureBodyOnly": fail}}
    return [
        row(2.0, 45.0, 0.9, [0.2, 2.0, 0.3], 9, 1, 0),
        row(2.0, 45.0, 0.7, [0.21, 2.1, 0.31], 7, 2, 1),
        row(2.0, 60.0, 0.5, [0.19, 1.9, 0.29], 5, 0, 5),
        row(2.0, 60.0, 0.3, None, 3, 3, 4),
        row(2.0, 75.0, 0.0, None, 0, 0, 10),
    ]


def test_filter_training_set_threshold():
    rows = fake_rows()
    strict = filter_training_set(rows, 0.8)
    loose = filter_training_set(rows, 0.4)
    assert len(strict) == 1 and len(loose) == 3
    assert all(p in loose for p in strict), "lower bar must keep every pair"
    # rows without a recorded trigger state never become pairs
    assert all(p[1] == 5.0 for p in loose)

    with pytest.raises(ValueError, match="0.90"):
        filter_training_set(rows, 0.95)


def test_dataset_success_grid_exact_rates():
    grid = dataset_success_grid(fake_rows(), speeds=(2.0,),
                                angles=(45.0, 60.0, 75.0, 90.0))
    by_angle = {c["angle_deg"]: c for c in grid}
    assert abs(by_angle[45.0]["success_rate"] - 0.8) < 1e-15
    assert abs(by_angle[45.0]["suboptimal_rate"] - 3 / 20) < 1e-15
    assert abs(by_angle[60.0]["success_rate"] - 0.4) < 1e-15
    assert by_angle[90.0]["n"] == 0 and by_angle[90.0]["no_trigger"]


def test_band_mean_selection():
    grid = [{"angle_deg": a, "success_rate": v}
            for a, v in ((30.0, 0.2), (45.0, 0.4), (65.0, 0.6),
                         (75.0, 0.8), (90.0, 1.0))]
    assert abs(band_mean(grid, 30.0, 65.0) - 0.5) < 1e-15   # 45 and 65 only
    assert abs(band_mean(grid, 65.0, 90.0) - 0.9) < 1e-15
    assert np.isnan(band_mean(grid, 100.0, 120.0))


def test_polar_map_exports():
    grid = dataset_success_grid(fake_rows(), speeds=(2.0,),
                                angles=(45.0, 60.0, 75.0))
    csv = polar_map_csv(grid)
    lines = csv.strip().split("\n")
    assert lines[0] == "speed,angle_deg,success_rate,suboptimal_rate,n"
    assert len(lines) == 1 + len(grid)
    assert csv == polar_map_csv(list(reversed(grid))), "CSV must sort rows"

    svg_raw = polar_map_svg(grid, smooth=False)
    svg_smooth = polar_map_svg(grid, smooth=True)
    for svg in (svg_raw, svg_smooth):
        assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
        assert svg.count("<path") == len(grid)
    assert svg_raw != svg_smooth, "smoothing changes the render"
    assert polar_map_csv(grid) == csv, "smoothing never touches data files"

    empty_csv = polar_map_csv([])
    assert empty_csv == "speed,angle_deg,success_rate,suboptimal_rate,n\n"
    empty_svg = polar_map_svg([])
    assert empty_svg.startswith("<svg") and "</svg>" in empty_svg


def test_evaluate_grid_counts_no_trigger():
    # trigger that can never fire: single far-away SV, large offset
    trigger = OcSvmModel(support_vectors=np.array([[50.0, 50.0, 50.0]]),
                         alphas=np.array([1.0]), rho=1.0, gamma=2.0, nu=0.05)
    sizes = (3, 10, 10, 1)
    net = ActionNet(weights=[np.zeros((fi, fo))
                             for fi, fo in zip(sizes[:-1], sizes[1:])],
                    biases=[np.zeros(fo) for fo in sizes[1:]],
                    target_mean=5.0, target_std=1.0)
    policy = TrainedPolicy(Normalizer(np.zeros(3), np.ones(3)), trigger, net,
                           0.8, {})
    spec = SweepSpec(speeds=(2.0,), angles=(60.0,), repeats=1)
    grid = evaluate_policy_grid(policy, spec, n_eval=2)
    assert len(grid) == 1
    cell = grid[0]
    assert cell["no_trigger"] and cell["n"] == 0
    assert cell["success_rate"] == 0.0 and cell["suboptimal_rate"] == 0.0
