"""Acceptance criteria 1-11 at their stated sizes and tolerances.

Each test prints and records one PASS/FAIL line; the lines are repeated in
the pytest terminal summary.  Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import csv
import math

import numpy as np
import pytest

from planartri import analysis, bench, pipeline
from planartri.cli import main
from planartri.critical import solve_critical_points
from planartri.geometry import (
    CameraRig,
    build_homographies,
    multidegree_lines_count,
    multidegree_point_count,
    scale_fit_residual,
)
from planartri.objective import Objective, build_critical_system, chart_embed
from planartri.triangulate import (
    triangulate_constrained_batch,
    triangulate_constrained_fast,
    triangulate_hybrid,
    triangulate_unconstrained,
)

from conftest import ACCEPTANCE_LINES


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_01_ed_degree_certification(tmp_path, capsys):
    need = {2: (100, 8, 0.99), 3: (50, 24, 0.96), 4: (20, 49, 0.90)}
    parts, ok = [], True
    for m, (trials, expected, freq) in need.items():
        out = tmp_path / f"eddeg{m}.csv"
        code = main(["eddeg", "--views", str(m), "--trials", str(trials), "--seed", "0", "--out", str(out)])
        counts = [int(r[1]) for r in list(csv.reader(open(out)))[1:]]
        mode, f = analysis.modal_count(counts)
        parts.append(f"m={m}: {mode} in {f:.0%}")
        ok &= code == 0 and mode == expected and f >= freq
    capsys.readouterr()
    record(1, ok, "; ".join(parts))


def test_criterion_02_formula_consistency():
    ok = all(analysis.eddeg_via_euler(m).eddeg == analysis.eddeg_closed_form(m) for m in range(2, 51))
    br = analysis.eddeg_via_euler(2)
    tup = (br.chi_variety, br.chi_d_infinity, br.chi_dq_cap_dinf, br.chi_dq)
    record(2, ok and tup == (3, 3, 5, -3), f"m=2..50 agree: {ok}; breakdown at m=2 {tup}")


def test_criterion_03_homography_laws():
    rng = np.random.default_rng(3)
    worst = 0.0
    for m in (2, 3, 4):
        for _ in range(100):
            rig = analysis.sample_rig(m, rng)
            h = build_homographies(rig)
            I = np.eye(3)
            for i in range(m):
                worst = max(worst, scale_fit_residual(h.transfer(i, i), I))
                for j in range(m):
                    worst = max(worst, scale_fit_residual(h.transfer(i, j) @ h.transfer(j, i), I))
                    for k in range(m):
                        worst = max(worst, scale_fit_residual(h.transfer(k, j) @ h.transfer(j, i), h.transfer(k, i)))
            G = rng.uniform(-1, 1, (3, 3)) + 2 * np.eye(3)
            h2 = build_homographies(CameraRig(rig.cameras, rig.chart.with_gauge(G)))
            for i in range(m):
                for j in range(m):
                    worst = max(worst, scale_fit_residual(h.transfer(j, i), h2.transfer(j, i)))
    record(3, worst < 1e-10, f"worst relative residual {worst:.2e} over 300 rigs")


def test_criterion_04_multidegree():
    rng = np.random.default_rng(4)
    pts, lines = [], []
    for _ in range(100):
        rig = analysis.sample_rig(2, rng)
        c1, c2 = rig.cameras
        pts.append(multidegree_point_count(c1, rng.uniform(-1, 1, 3), rig.plane))
        lines.append(multidegree_lines_count(c1, rng.uniform(-1, 1, 3), c2, rng.uniform(-1, 1, 3), rig.plane))
    ok = set(pts) == {1} and set(lines) == {1}
    record(4, ok, f"point counts {sorted(set(pts))}, line counts {sorted(set(lines))} over 100 instances each")


def test_criterion_05_exact_data_recovery():
    rng = np.random.default_rng(5)
    insts, truths = [], []
    for k in range(100):
        m = (2, 3)[k % 2]
        rig = analysis.sample_rig(m, rng)
        obj = Objective(rig, np.zeros((m, 2)))
        p = rng.uniform(-1, 1, 2)
        insts.append((rig, chart_embed(build_homographies(rig), p)))
        truths.append(obj.to_world(p).affine())

    def rel(X, Y):
        return np.linalg.norm(X - Y) / max(1.0, np.linalg.norm(Y))

    worst = {"UC": 0.0, "C": 0.0, "fast": 0.0, "H": 0.0}
    incidence = 0.0
    for (rig, u), T, rc in zip(insts, truths, triangulate_constrained_batch(insts)):
        assert not isinstance(rc, Exception), rc
        worst["C"] = max(worst["C"], rel(rc.world_point.affine(), T))
        pi = rig.plane.pi / np.linalg.norm(rig.plane.pi)
        X = rc.world_point.coords / np.linalg.norm(rc.world_point.coords)
        incidence = max(incidence, abs(pi @ X))
        worst["UC"] = max(worst["UC"], rel(triangulate_unconstrained(rig, u).world_point.affine(), T))
        worst["fast"] = max(worst["fast"], rel(triangulate_constrained_fast(rig, u).world_point.affine(), T))
        worst["H"] = max(worst["H"], rel(triangulate_hybrid(rig, u).world_point.affine(), T))
    ok = max(worst.values()) < 1e-8 and incidence < 1e-9
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    record(5, ok, f"worst relative error {detail}; C plane incidence {incidence:.1e}")


def test_criterion_06_gradient_correctness():
    # central differences with h = 1e-6 carry an error ~ (h / dist)^2 near a
    # view's line at infinity, so points within 1e-3 of one are redrawn
    rng = np.random.default_rng(6)
    worst_fd, worst_clear, worst_dense, dense_bad, redrawn, n = 0.0, 0.0, 0.0, 0, 0, 0
    while n < 1000:
        m = (2, 3, 4)[n % 3]
        rig, u = analysis.sample_instance(m, rng)
        obj = Objective(rig, u)
        cs = build_critical_system(obj)
        p = rng.uniform(-1, 1, 2)
        x = np.array([*p, 1.0])
        dist = min(abs(obj.h3[j] @ x) / (np.linalg.norm(obj.h3[j]) * np.linalg.norm(x)) for j in range(1, m))
        if dist < 1e-3:
            redrawn += 1
            continue
        g = obj.gradient(p)
        h = 1e-6
        fd = np.array([(obj.value(p + h * e) - obj.value(p - h * e)) / (2 * h) for e in np.eye(2)])
        worst_fd = max(worst_fd, np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1.0))
        scale = np.array([cs.scale_a, cs.scale_b]) / cs.clearing_factor(*p)
        err = np.linalg.norm(cs.evaluate(*p) * scale - g) / max(np.linalg.norm(g), 1.0)
        worst_clear = max(worst_clear, err)
        dense = np.linalg.norm(cs.evaluate_expanded(*p) * scale - g) / max(np.linalg.norm(g), 1.0)
        worst_dense = max(worst_dense, dense)
        dense_bad += dense > 1e-8
        n += 1
    ok = worst_fd < 1e-5 and worst_clear < 1e-8
    record(6, ok, f"finite differences {worst_fd:.1e}, cleared system {worst_clear:.1e} over 1000 pairs "
                  f"({redrawn} points redrawn near a pole; expanded-coefficient evaluation worst {worst_dense:.1e}, "
                  f"{dense_bad} pairs above 1e-8)")


def test_criterion_07_global_optimality():
    levels = (1e-8, 1e-6, 1e-4, 1e-2)
    scenes = [bench.generate_scene(2, 1, levels[k % 4], np.random.default_rng([7, k])) for k in range(200)]
    insts = [(s.rig, s.noisy_observations[0]) for s in scenes]
    res = triangulate_constrained_batch(insts)
    crit = solve_critical_points(insts, expected=8)
    optimal, agree, low = 0, 0, 0
    for (rig, u), s, r, cp in zip(insts, scenes, res, crit):
        obj = Objective(rig, u)
        f_best = obj.value(tuple(r.chart_point))
        vals = []
        for a, b in cp.solutions:
            if max(abs(a.imag), abs(b.imag)) <= 1e-8 * max(1.0, abs(a), abs(b)):
                try:
                    vals.append(obj.value((a.real, b.real)))
                except Exception:
                    pass
        optimal += f_best <= min(vals) * (1 + 1e-9) + 1e-20
        if s.noise_level <= 1e-6:
            low += 1
            try:
                fast = triangulate_constrained_fast(rig, u)
            except Exception:
                continue
            X, Y = fast.world_point.affine(), r.world_point.affine()
            agree += np.linalg.norm(X - Y) <= 1e-6 * max(1.0, np.linalg.norm(Y))
    ok = optimal == 200 and agree >= 0.95 * low
    record(7, ok, f"C optimal on {optimal}/200; fast agrees on {agree}/{low} low-noise instances")


@pytest.mark.parametrize("m", [2, 3])
def test_criterion_08_benchmark_ordering(m):
    recs = bench.run_benchmark(m, 5, 1e-12, 200, ("c", "uc"), seed=8)
    means = {}
    for mt in ("c", "uc"):
        v = [r.e_tr for r in recs if r.method == mt and math.isfinite(r.e_tr)]
        means[mt] = float(np.mean(v))
    failed = sum(r.status != "ok" for r in recs)
    record(8, means["c"] <= means["uc"],
           f"m={m}: mean E_tr C {means['c']:.3f} <= UC {means['uc']:.3f} ({failed} failed records)")


def test_criterion_09_stability():
    h = bench.stability_harness(2, 10_000, seed=9)
    med, frac = h.median(), h.fraction_below(1e-6)
    record(9, med < 1e-8 and frac >= 0.99,
           f"median eps_d {med:.1e}; {frac:.2%} of samples below 1e-6; {h.failures} failed samples")


def test_criterion_10_pipeline():
    scene, groups = pipeline.synthetic_two_plane_scene(seed=10, per_plane=30, outliers=5, noise=1e-6)
    found = pipeline.detect_planes(scene, 2, seed=10)
    truth = [sorted(groups["plane0"]), sorted(groups["plane1"])]
    members = sorted(sorted(d.member_track_ids) for d in found)
    exact = members == sorted(truth)
    rows = pipeline.run_pipeline(scene, 3, seed=10)
    by = {}
    for r in rows:
        by.setdefault(r.strategy, {})[(r.window, r.track)] = r
    med = {s: float(np.nanmedian([r.eps_tr for r in by[s].values()])) for s in by}
    # H differs from C only where C reprojects beyond the hybrid threshold
    h_ok = all(
        by["h"][k].eps_tr == rc.eps_tr or (by["h"][k].strategy_used == "H-fell-back" and max(rc.reprojection_errors) > 5.0)
        for k, rc in by["c"].items()
    )
    ok = exact and med["c"] <= med["uc"] and h_ok
    record(10, ok, f"exact membership {exact}; median eps_tr C {med['c']:.2e} <= UC {med['uc']:.2e}; H consistent {h_ok}")


def test_criterion_11_determinism(tmp_path, capsys):
    scene, _ = pipeline.synthetic_two_plane_scene(seed=11, per_plane=12, outliers=2, n_views=3)
    sp = str(tmp_path / "scene.json")
    pipeline.save_scene(scene, sp)
    commands = {
        "eddeg": ["eddeg", "--views", "2", "--trials", "5", "--seed", "1"],
        "triangulate": ["triangulate", "--scene", sp, "--method", "h"],
        "bench": ["bench", "--views", "2", "--points", "3", "--iters", "4", "--seed", "1"],
        "stability": ["stability", "--views", "2", "--samples", "20", "--seed", "1"],
        "detect-planes": ["detect-planes", "--scene", sp, "--num-planes", "2", "--seed", "1"],
        "pipeline": ["pipeline", "--scene", sp, "--views", "2", "--seed", "1"],
    }
    same = {}
    for name, argv in commands.items():
        texts = []
        for k in range(2):
            out = str(tmp_path / f"{name}{k}.out")
            main(argv + ["--out", out])
            rows = list(csv.reader(open(out))) if name != "detect-planes" else [open(out).read()]
            if rows and "wall_time_ns" in rows[0]:
                col = rows[0].index("wall_time_ns")
                rows = [r[:col] + r[col + 1:] for r in rows]
            texts.append(rows)
        same[name] = texts[0] == texts[1]
    capsys.readouterr()
    record(11, all(same.values()), ", ".join(f"{k} {'identical' if v else 'DIFFERS'}" for k, v in same.items()))
