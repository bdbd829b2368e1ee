import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import least_squares, minimize

from planartri.errors import DegenerateGeometry, InvalidGeometry, LocalSearchFailed, NoRealSolution
from planartri.geometry import Camera, CameraRig, Plane, ProjectivePoint3, build_homographies, make_chart, project
from planartri.objective import Objective, chart_embed
from planartri.triangulate import (
    C,
    H_FELL_BACK,
    H_KEPT_C,
    UC,
    reprojection_errors,
    select_minimum,
    triangulate_constrained,
    triangulate_constrained_batch,
    triangulate_constrained_fast,
    triangulate_hybrid,
    triangulate_unconstrained,
)

from conftest import random_instance, random_rig

seeds = st.integers(0, 2**32 - 1)


def exact_instance(m, seed):
    rig = random_rig(m, seed)
    p = np.random.default_rng(seed).uniform(-1, 1, 2)
    u = chart_embed(build_homographies(rig), p)
    return rig, u, Objective(rig, u).to_world(p)


def rel_err(X, Y):
    x, y = X.affine(), Y.affine()
    return np.linalg.norm(x - y) / max(1.0, np.linalg.norm(y))


def test_unconstrained_recovers_known_point():
    # identity camera plus a translated one
    c1 = Camera(np.hstack([np.eye(3), np.zeros((3, 1))]))
    c2 = Camera(np.hstack([np.eye(3), [[-1.0], [0.0], [0.0]]]))
    rig = CameraRig([c1, c2], make_chart(Plane([0, 0, 1, -4])))
    X = ProjectivePoint3([0.5, 0.2, 4.0, 1.0])
    u = [project(c, X).affine() for c in (c1, c2)]
    res = triangulate_unconstrained(rig, u)
    assert np.allclose(res.world_point.affine(), [0.5, 0.2, 4.0], atol=1e-12)
    assert res.strategy_used == UC
    assert res.max_reprojection_error < 1e-12


@settings(max_examples=10)
@given(seeds)
def test_exact_data_all_strategies(seed):
    rig, u, X = exact_instance(2, seed)
    for fn in (triangulate_unconstrained, triangulate_constrained, triangulate_constrained_fast, triangulate_hybrid):
        res = fn(rig, u)
        assert rel_err(res.world_point, X) < 1e-8
        assert res.objective_value < 1e-16


@settings(max_examples=10)
@given(seeds, st.sampled_from([2, 3]))
def test_constrained_output_on_plane(seed, m):
    rig, u = random_instance(m, seed)
    try:
        res = triangulate_constrained(rig, u)
    except NoRealSolution:
        return
    pi = rig.plane.pi / np.linalg.norm(rig.plane.pi)
    X = res.world_point.coords / np.linalg.norm(res.world_point.coords)
    assert abs(pi @ X) < 1e-9
    assert res.strategy_used == C
    assert res.derivative_error < 1e-6


def test_unconstrained_matches_scipy_least_squares():
    rig, u = random_instance(3, 4)
    res = triangulate_unconstrained(rig, u)
    Ps = np.array([c.matrix for c in rig.cameras])

    def r(X):
        x = Ps @ np.append(X, 1.0)
        return (x[:, :2] / x[:, 2:3] - u).ravel()

    ref = least_squares(r, res.world_point.affine() + 1e-3, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    assert np.sum(r(res.world_point.affine()) ** 2) <= 2 * ref.cost * (1 + 1e-8) + 1e-20


def _multistart_min(obj, rng, starts=60):
    best = math.inf
    for p0 in rng.uniform(-3, 3, (starts, 2)):
        try:
            out = minimize(lambda p: obj.value(p), p0, method="Nelder-Mead",
                           options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
        except Exception:
            continue
        if np.isfinite(out.fun):
            best = min(best, out.fun)
    return best


@pytest.mark.parametrize("seed", range(4))
def test_constrained_is_global_against_multistart(seed):
    rig, u = random_instance(2, 100 + seed)
    res = triangulate_constrained(rig, u)
    obj = Objective(rig, u)
    f = obj.value(tuple(res.chart_point))
    ref = _multistart_min(obj, np.random.default_rng(seed))
    assert f <= ref + 1e-9 * max(1.0, ref)


def test_batch_matches_single():
    inst = [random_instance(2, s) for s in range(3)] + [random_instance(3, 3)]
    batch = triangulate_constrained_batch(inst)
    for (rig, u), r in zip(inst, batch):
        single = triangulate_constrained(rig, u)
        assert rel_err(r.world_point, single.world_point) < 1e-10


def test_fast_solver_from_explicit_seed():
    rig, u, X = exact_instance(3, 2)
    p = Objective(rig, u).chart_coordinates(X)
    res = triangulate_constrained_fast(rig, u, seed=(p.a + 0.01, p.b - 0.01))
    assert rel_err(res.world_point, X) < 1e-8
    assert res.solver_diagnostics["iterations"] >= 1


def test_fast_solver_rejects_seed_on_line_at_infinity():
    rig, u = random_instance(2, 3)
    d = Objective(rig, u).h3[1]
    with pytest.raises(LocalSearchFailed):
        triangulate_constrained_fast(rig, u, seed=(0.3, -(d[0] * 0.3 + d[2]) / d[1]))


def test_hybrid_keeps_constrained_on_plane_point():
    rig, u, _ = exact_instance(2, 5)
    res = triangulate_hybrid(rig, u + 1e-4)
    assert res.strategy_used == H_KEPT_C


def test_hybrid_falls_back_off_plane():
    rig = random_rig(2, 6)
    h = build_homographies(rig)
    p = np.array([0.2, -0.3])
    X = Objective(rig, np.zeros((2, 2))).to_world(p).affine()
    # move the point well off the plane along its normal
    n = rig.plane.pi[:3] / np.linalg.norm(rig.plane.pi[:3])
    Xoff = ProjectivePoint3.from_affine(X + 0.5 * n)
    u = np.array([project(c, Xoff).affine() for c in rig.cameras])
    c = triangulate_constrained(rig, u)
    if c.max_reprojection_error <= 1e-3:
        pytest.skip("offset invisible from this rig")
    res = triangulate_hybrid(rig, u, threshold_px=1e-3)
    assert res.strategy_used == H_FELL_BACK
    assert np.allclose(res.world_point.affine(), Xoff.affine(), rtol=1e-6)
    with pytest.raises(ValueError):
        triangulate_hybrid(rig, u, threshold_px=0)
    assert h.m == 2


def test_unconstrained_degenerate_rays():
    # both centers on the z axis; an on-axis image gives the same ray twice
    c1 = Camera(np.hstack([np.eye(3), np.zeros((3, 1))]))
    c2 = Camera(np.hstack([np.eye(3), [[0.0], [0.0], [1.0]]]))
    rig = CameraRig([c1, c2], make_chart(Plane([1, 0, 0, -1])))
    with pytest.raises(DegenerateGeometry):
        triangulate_unconstrained(rig, [[0.0, 0.0], [0.0, 0.0]])


def test_wrong_observation_count():
    rig, u = random_instance(2, 1)
    with pytest.raises(InvalidGeometry):
        triangulate_constrained(rig, u[:1])


def test_select_minimum_ties_and_domain():
    rig, u = random_instance(2, 8)
    obj = Objective(rig, u)
    d = obj.h3[1]
    bad = (0.3, -(d[0] * 0.3 + d[2]) / d[1])
    assert select_minimum(obj, [bad]) is None
    p = (0.1, 0.1)
    assert select_minimum(obj, [bad, p, p]) == 1


def test_reprojection_errors_zero_at_truth():
    rig, u, X = exact_instance(3, 9)
    assert max(reprojection_errors(rig, u, X)) < 1e-10
