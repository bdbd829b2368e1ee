import csv
import math

import numpy as np
import pytest

from planartri.bench import (
    BENCH_COLUMNS,
    HIST_BINS,
    bin_index,
    e_tr,
    fixed_length_noise,
    generate_scene,
    histogram_edges,
    run_benchmark,
    stability_harness,
    write_bench_csv,
    write_histogram_csv,
)
from planartri.errors import ZeroNoiseMetric
from planartri.geometry import ProjectivePoint3, project


def test_noise_has_fixed_length(rng):
    n = fixed_length_noise(rng, 50, 1e-3)
    assert np.allclose(np.linalg.norm(n, axis=1), 1e-3)


def test_scene_points_on_plane_and_consistent():
    s = generate_scene(3, 5, 1e-6, 7)
    pi = s.rig.plane.pi
    for X, clean, noisy in zip(s.points, s.clean_observations, s.noisy_observations):
        assert abs(pi @ X.coords) < 1e-12 * np.linalg.norm(pi) * np.linalg.norm(X.coords)
        img = np.array([project(c, X).affine() for c in s.rig.cameras])
        assert np.allclose(img, clean, atol=1e-10)
        assert np.allclose(np.linalg.norm(noisy - clean, axis=1), 1e-6)
    assert np.all(np.abs(s.clean_observations[0][0]) <= 1.0 + 1e-12)


def test_scene_is_seeded():
    a, b = generate_scene(2, 3, 1e-3, 5), generate_scene(2, 3, 1e-3, 5)
    assert all(np.array_equal(x, y) for x, y in zip(a.noisy_observations, b.noisy_observations))


def test_scene_argument_validation():
    with pytest.raises(ValueError):
        generate_scene(1, 5, 1e-3, 0)
    with pytest.raises(ValueError):
        generate_scene(2, 5, -1.0, 0)


def test_e_tr_metric():
    X = ProjectivePoint3([0, 0, 0, 1])
    Y = ProjectivePoint3([3e-6, 4e-6, 0, 1])
    assert math.isclose(e_tr([Y], [X], 5e-6), 0.0, abs_tol=1e-12)
    assert e_tr([X], [X], 1e-3) == -math.inf
    with pytest.raises(ZeroNoiseMetric):
        e_tr([X], [X], 0.0)
    with pytest.raises(ValueError):
        e_tr([X], [], 1.0)


def test_benchmark_records_and_csv(tmp_path):
    recs = run_benchmark(2, 3, 1e-12, 4, ("c", "uc", "h", "fast"), seed=2)
    assert len(recs) == 16
    assert [r.method for r in recs[:4]] == ["c"] * 4
    assert all(r.status == "ok" and np.isfinite(r.e_tr) for r in recs)
    # errors at the noise scale: log10 ratio of order one
    assert all(-4 < r.e_tr < 6 for r in recs)
    path = tmp_path / "b.csv"
    write_bench_csv(recs, path)
    rows = list(csv.reader(open(path)))
    assert tuple(rows[0]) == BENCH_COLUMNS
    assert rows[1][0] == "C" and len(rows) == 17
    with pytest.raises(ValueError):
        run_benchmark(2, 3, 1e-12, 1, ("xyz",))


def test_benchmark_zero_noise_uses_absolute_error():
    recs = run_benchmark(2, 2, 0.0, 2, ("uc",), seed=1)
    assert all(r.e_tr < -8 for r in recs)


def test_histogram_binning():
    edges = histogram_edges()
    assert len(edges) == HIST_BINS + 1
    assert bin_index(0.0, edges) == 0
    assert bin_index(1e-30, edges) == 0
    assert bin_index(1e20, edges) == HIST_BINS
    assert bin_index(math.nan, edges) == HIST_BINS
    k = bin_index(3e-9, edges)
    assert edges[k] <= 3e-9 < edges[k + 1]


def test_stability_harness_small(tmp_path):
    h = stability_harness(2, 30, seed=1)
    assert h.total == len(h.values) + h.failures
    assert h.median() < 1e-8
    assert h.fraction_below(1e-6) >= 0.9
    path = tmp_path / "h.csv"
    write_histogram_csv(h, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["bin_left", "bin_right", "count"]
    assert len(rows) == HIST_BINS + 2
    assert rows[-1][1] == "inf"
    assert sum(int(r[2]) for r in rows[1:]) == h.total


def test_stability_fast_solver():
    h = stability_harness(3, 10, solver="fast", seed=0)
    assert len(h.sample_values) == 10


def test_stability_argument_validation():
    with pytest.raises(ValueError):
        stability_harness(4, 10)
    with pytest.raises(ValueError):
        stability_harness(2, 0)
    with pytest.raises(ValueError):
        stability_harness(2, 5, solver="other")
