"""Point triangulation: plane-constrained (complete or local), unconstrained
DLT with refinement, and the hybrid of the two.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ChartSingularity,
    DegenerateGeometry,
    InvalidViewCount,
    LocalSearchFailed,
    NoRealSolution,
    PlanarTriError,
    SolverIncomplete,
)
from .geometry import Camera, CameraRig, ProjectivePoint3, project
from .objective import ChartPoint, Objective, as_observations
from .analysis import eddeg_closed_form
from .critical import solve_critical_points

UC = "UC"
C = "C"
H_KEPT_C = "H-kept-C"
H_FELL_BACK = "H-fell-back"

GRAD_TOL = 1e-8
# fast-solver result is accepted by the constrained strategy below this ε_d
FAST_ACCEPT_EPS = 1e-6
TIE_TOL = 1e-12


@dataclass
class TriangulationResult:
    world_point: ProjectivePoint3
    chart_point: ChartPoint = None
    objective_value: float = math.nan
    reprojection_errors: list = field(default_factory=list)
    derivative_error: float = math.nan
    strategy_used: str = C
    solver_diagnostics: dict = field(default_factory=dict)

    @property
    def max_reprojection_error(self):
        return max(self.reprojection_errors)


def reprojection_errors(rig, u, X):
    """Per-view pixel distances between ``u`` and the images of ``X``."""
    u = as_observations(u, rig.m)
    out = []
    for cam, uj in zip(rig.cameras, u):
        x = project(cam, X)
        out.append(float(np.linalg.norm(x.coords[:2] / x.coords[2] - uj)) if x.is_finite else math.inf)
    return out


def _result(rig, u, X, strategy, chart_point=None, eps_d=math.nan, diagnostics=None):
    errs = reprojection_errors(rig, u, X)
    return TriangulationResult(
        world_point=ProjectivePoint3(X.coords / np.linalg.norm(X.coords)),
        chart_point=chart_point,
        objective_value=float(sum(e * e for e in errs)),
        reprojection_errors=errs,
        derivative_error=eps_d,
        strategy_used=strategy,
        solver_diagnostics=diagnostics or {},
    )


def _refine_critical(obj, p, iters=4):
    """A few Newton steps on the real gradient; keeps the better point."""
    best, best_eps = p, obj.derivative_error(p)
    for _ in range(iters):
        if best_eps == 0.0:
            break
        try:
            step = np.linalg.solve(obj.hessian(best), obj.gradient(best))
            q = (best[0] - step[0], best[1] - step[1])
            eps = obj.derivative_error(q)
        except (np.linalg.LinAlgError, ChartSingularity):
            break
        if not eps < best_eps:
            break
        best, best_eps = q, eps
    return best, best_eps


def select_minimum(obj, points):
    """Index of the in-domain point with least ``f``; ties go to smaller ``(a, b)``."""
    best, best_f = None, math.inf
    for k, p in enumerate(points):
        try:
            f = obj.value(p)
        except ChartSingularity:
            continue
        if best is None or f < best_f - TIE_TOL or (abs(f - best_f) <= TIE_TOL and tuple(p) < tuple(points[best])):
            best, best_f = k, min(f, best_f)
    return best


def triangulate_constrained(rig, u, cfg=None, imag_tol=1e-8, max_missing=None):
    """Global minimizer of the reprojection error over points of the rig's plane.

    All critical points are computed by homotopy continuation; the real
    in-domain one with the smallest objective wins.  ``max_missing`` bounds
    how many critical points (relative to the generic count) may be lost
    before :class:`SolverIncomplete` is raised; ``None`` disables the check.
    """
    res = triangulate_constrained_batch([(rig, u)], cfg, imag_tol, max_missing)[0]
    if isinstance(res, PlanarTriError):
        raise res
    return res


def triangulate_constrained_batch(instances, cfg=None, imag_tol=1e-8, max_missing=None):
    """:func:`triangulate_constrained` over ``(rig, u)`` pairs with one path-tracking sweep.

    Failed instances yield the exception object in place of a result.
    """
    instances = [(rig, as_observations(u, rig.m)) for rig, u in instances]
    normed = [_normalized(rig, u) for rig, u in instances]
    by_m = {}
    for i, (rig, _) in enumerate(instances):
        by_m.setdefault(rig.m, []).append(i)
    results = {}
    for m, idx in by_m.items():
        expected = eddeg_closed_form(m)
        crit = solve_critical_points([normed[i][:2] for i in idx], cfg, expected=expected)
        for i, cp in zip(idx, crit):
            try:
                results[i] = _select_critical(instances[i], normed[i], cp, expected, imag_tol, max_missing)
            except PlanarTriError as err:
                results[i] = err
    return [results[i] for i in range(len(instances))]


def _normalized(rig, u):
    """Rig and observations in shifted, uniformly scaled image coordinates.

    Each view's observation moves to the origin and all views share one
    scale, so ``f`` only changes by a constant factor and the critical
    points are unchanged up to the coordinate map.  Pixel-sized coordinates
    otherwise make the homotopy paths long and ill-conditioned.
    """
    s = 1.0 / max(1.0, float(np.abs(u).max()))
    cams = []
    for cam, (cx, cy) in zip(rig.cameras, u):
        S = np.array([[s, 0.0, -s * cx], [0.0, s, -s * cy], [0.0, 0.0, 1.0]])
        cams.append(Camera(S @ cam.matrix))
    return CameraRig(cams, rig.chart), np.zeros_like(u), s, u[0]


def _select_critical(instance, normed, cp, expected, imag_tol, max_missing):
    rig, u = instance
    nrig, nu, s, c = normed
    obj = Objective(nrig, nu)
    diag = cp.summary()
    if max_missing is not None and expected - cp.finite_count > max_missing:
        raise SolverIncomplete(f"only {cp.finite_count} critical points found")
    # the solver's tolerance is relative to the point; rescale for the real filter
    cands = []
    for a, b in cp.solutions:
        if max(abs(a.imag), abs(b.imag)) <= imag_tol * max(1.0, abs(a), abs(b)):
            p, _ = _refine_critical(obj, (a.real, b.real))
            cands.append(p)
    k = select_minimum(obj, cands)
    if k is None:
        raise NoRealSolution("no real critical point in the chart domain")
    diag["real_count"] = len(cands)
    X = obj.to_world(cands[k])
    p = (cands[k][0] / s + c[0], cands[k][1] / s + c[1])
    try:
        eps = Objective(rig, u).derivative_error(p)
    except ChartSingularity:
        eps = math.nan
    return _result(rig, u, X, C, ChartPoint(*p), eps, diag)


def triangulate_constrained_fast(rig, u, seed=None, max_iters=100, grad_tol=GRAD_TOL):
    """Local damped-Newton descent on the plane from ``seed``.

    The default seed is the view-1 observation itself.
    """
    obj = Objective(rig, u)
    p = np.array(obj.u[0] if seed is None else tuple(seed), dtype=float)
    try:
        f = obj.value(p)
    except ChartSingularity as e:
        raise LocalSearchFailed("seed is outside the chart domain") from e
    lam = 1e-3
    for it in range(max_iters):
        try:
            r, J = obj.residual_jacobian(*p)
        except ChartSingularity as e:
            raise LocalSearchFailed("iterate left the chart domain") from e
        g = 2.0 * np.einsum("ji,jik->k", r, J)
        if np.max(np.abs(g)) < grad_tol:
            break
        Hgn = 2.0 * np.einsum("jik,jil->kl", J, J)
        try:
            H = obj.hessian(p)
        except ChartSingularity as e:
            raise LocalSearchFailed("iterate left the chart domain") from e
        # exact Newton when the Hessian is positive definite, Gauss-Newton otherwise
        if np.all(np.linalg.eigvalsh(H) > 0):
            base = H
        else:
            base = Hgn
        scale = np.trace(base) / 2 or 1.0
        accepted = False
        for _ in range(40):
            try:
                step = np.linalg.solve(base + lam * scale * np.eye(2), g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            q = p - step
            try:
                fq = obj.value(q)
            except ChartSingularity:
                lam *= 10
                continue
            if fq <= f:
                p, f, accepted = q, fq, True
                lam = max(lam / 10, 1e-12)
                break
            lam *= 10
        if not accepted:
            break
    eps = obj.derivative_error(tuple(p))
    if not eps < grad_tol:
        raise LocalSearchFailed(f"gradient {eps:.3g} above tolerance after {it + 1} iterations")
    pt = ChartPoint(float(p[0]), float(p[1]))
    return _result(rig, u, obj.to_world(pt), C, pt, eps, {"iterations": it + 1})


def _dlt(cameras, u):
    rows = []
    for cam, (x, y) in zip(cameras, u):
        P = cam.matrix
        rows.append(x * P[2] - P[0])
        rows.append(y * P[2] - P[1])
    A = np.array(rows)
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    w, V = np.linalg.eigh(A.T @ A)
    if w[1] - w[0] <= 1e-14 * w[-1]:
        raise DegenerateGeometry("viewing rays are nearly parallel")
    return V[:, 0]


def triangulate_unconstrained(rig, u, max_iters=50):
    """DLT initialization refined by damped Gauss-Newton in affine 3-space."""
    if rig.m < 2:
        raise InvalidViewCount("need at least two views")
    u = as_observations(u, rig.m)
    Xh = _dlt(rig.cameras, u)
    if abs(Xh[3]) <= 1e-12 * np.max(np.abs(Xh)):
        raise DegenerateGeometry("triangulated point is at infinity")
    X = Xh[:3] / Xh[3]
    Ps = np.array([c.matrix for c in rig.cameras])

    def residuals(X):
        x = Ps @ np.append(X, 1.0)
        return x[:, :2] / x[:, 2:3] - u, x

    r, x = residuals(X)
    cost = float(np.sum(r * r))
    lam = 1e-3
    for _ in range(max_iters):
        # d(x_k / x_3)/dX = (P_k - q_k P_3) / x_3 restricted to the first three columns
        q = x[:, :2] / x[:, 2:3]
        J = (Ps[:, :2, :3] - q[:, :, None] * Ps[:, 2:3, :3]) / x[:, 2, None, None]
        J = J.reshape(-1, 3)
        rv = r.ravel()
        g = J.T @ rv
        if np.max(np.abs(g)) <= 1e-15 * max(1.0, np.max(np.abs(X))):
            break
        JtJ = J.T @ J
        improved = False
        for _ in range(20):
            step = np.linalg.solve(JtJ + lam * np.diag(np.diag(JtJ)), g)
            Xn = X - step
            rn, xn = residuals(Xn)
            cn = float(np.sum(rn * rn))
            if cn <= cost:
                improved = True
                done = cost - cn <= 1e-15 * cost or np.linalg.norm(step) <= 1e-15 * np.linalg.norm(Xn)
                X, r, x, cost = Xn, rn, xn, cn
                lam = max(lam / 10, 1e-12)
                break
            lam *= 10
        if not improved or done:
            break
    return _result(rig, u, ProjectivePoint3.from_affine(X), UC)


def _fast_accepted(rig, u, fallback_px):
    try:
        res = triangulate_constrained_fast(rig, u)
    except PlanarTriError:
        return None
    if res.derivative_error < FAST_ACCEPT_EPS and res.max_reprojection_error <= fallback_px:
        res.solver_diagnostics["solver"] = "fast"
        return res
    return None


def constrained_with_fallback_batch(instances, fallback_px=5.0, cfg=None):
    """Fast local solver first; the complete solver (one batch) where it fails or misfits.

    Failed instances yield the exception object in place of a result.
    """
    out = [_fast_accepted(rig, u, fallback_px) for rig, u in instances]
    todo = [i for i, r in enumerate(out) if r is None]
    for i, res in zip(todo, triangulate_constrained_batch([instances[i] for i in todo], cfg)):
        if not isinstance(res, Exception):
            res.solver_diagnostics["solver"] = "complete"
        out[i] = res
    return out


def _constrained_with_fallback(rig, u, fallback_px, cfg):
    res = constrained_with_fallback_batch([(rig, u)], fallback_px, cfg)[0]
    if isinstance(res, PlanarTriError):
        raise res
    return res


def _hybrid_choice(rig, u, res, threshold_px):
    if isinstance(res, PlanarTriError):
        uc = triangulate_unconstrained(rig, u)
        uc.strategy_used = H_FELL_BACK
        uc.solver_diagnostics["constrained_error"] = type(res).__name__
        return uc
    if res.max_reprojection_error > threshold_px:
        try:
            uc = triangulate_unconstrained(rig, u)
        except PlanarTriError:
            res.strategy_used = H_KEPT_C
            return res
        uc.strategy_used = H_FELL_BACK
        uc.solver_diagnostics["constrained_max_px"] = res.max_reprojection_error
        return uc
    res.strategy_used = H_KEPT_C
    return res


def triangulate_hybrid(rig, u, threshold_px=5.0, cfg=None, fallback_px=5.0):
    """Constrained triangulation, replaced by the unconstrained one when the
    constrained point reprojects worse than ``threshold_px`` in some view.

    ``fallback_px`` is the separate threshold that sends the constrained
    stage from the fast local solver to the complete one.
    """
    res = triangulate_hybrid_batch([(rig, u)], threshold_px, cfg, fallback_px)[0]
    if isinstance(res, PlanarTriError):
        raise res
    return res


def triangulate_hybrid_batch(instances, threshold_px=5.0, cfg=None, fallback_px=5.0):
    """:func:`triangulate_hybrid` over ``(rig, u)`` pairs; failures yield exception objects."""
    if not threshold_px > 0:
        raise ValueError("threshold_px must be positive")
    out = []
    for (rig, u), res in zip(instances, constrained_with_fallback_batch(instances, fallback_px, cfg)):
        try:
            out.append(_hybrid_choice(rig, u, res, threshold_px))
        except PlanarTriError as err:
            out.append(err)
    return out
