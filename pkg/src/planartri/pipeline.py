"""File-based experimental pipeline: scene documents, Sampson gating, RANSAC
plane detection and per-window triangulation with the three strategies.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DegenerateSample,
    IdenticalCenters,
    InsufficientInput,
    InsufficientSupport,
    PlanarTriError,
    SceneFormatError,
)
from .geometry import Camera, CameraRig, Plane, make_chart, projective_residual, skew
from .triangulate import (
    _hybrid_choice,
    constrained_with_fallback_batch,
    triangulate_constrained_fast,
    triangulate_unconstrained,
)

log = logging.getLogger(__name__)

SAMPSON_GATE_PX = 2.0
MIN_SUPPORT = 10
RANSAC_ITERS = 1000
STRATEGIES = ("uc", "c", "h")


# -- scene documents ---------------------------------------------------------


@dataclass
class Track:
    id: object
    observations: list  # (view_index, x, y)


@dataclass
class SceneFile:
    views: list  # 3x4 camera matrices
    tracks: list
    plane: np.ndarray = None
    points3d: list = None  # (id, xyz)
    depth_points: list = None  # (track_id, xyz)

    def __post_init__(self):
        n = len(self.views)
        seen = set()
        for t in self.tracks:
            if t.id in seen:
                raise SceneFormatError(f"duplicate track id {t.id!r}")
            seen.add(t.id)
            if len(t.observations) < 2:
                raise SceneFormatError(f"track {t.id!r} has fewer than two observations")
            for v, _, _ in t.observations:
                if not 0 <= v < n:
                    raise SceneFormatError(f"track {t.id!r} references view {v} of {n}")

    def camera(self, k):
        return Camera(np.asarray(self.views[k], dtype=float).reshape(3, 4))

    def track(self, tid):
        for t in self.tracks:
            if t.id == tid:
                return t
        raise KeyError(tid)

    def ground_truth(self):
        return {} if self.points3d is None else {pid: np.asarray(x, float) for pid, x in self.points3d}

    def to_dict(self):
        d = {
            "views": [{"camera": [float(v) for v in np.asarray(P, float).ravel()]} for P in self.views],
            "tracks": [
                {"id": t.id, "observations": [{"view_index": int(v), "x": float(x), "y": float(y)} for v, x, y in t.observations]}
                for t in self.tracks
            ],
        }
        if self.plane is not None:
            d["plane"] = [float(v) for v in self.plane]
        if self.points3d is not None:
            d["points3d"] = [{"id": pid, "xyz": [float(v) for v in x]} for pid, x in self.points3d]
        if self.depth_points is not None:
            d["depth_points"] = [{"track_id": tid, "xyz": [float(v) for v in x]} for tid, x in self.depth_points]
        return d

    @classmethod
    def from_dict(cls, d):
        try:
            views = []
            for v in d["views"]:
                cam = [float(c) for c in v["camera"]]
                if len(cam) != 12:
                    raise SceneFormatError("a camera needs 12 entries")
                views.append(np.array(cam).reshape(3, 4))
            tracks = [
                Track(t["id"], [(int(o["view_index"]), float(o["x"]), float(o["y"])) for o in t["observations"]])
                for t in d["tracks"]
            ]
            plane = None if d.get("plane") is None else np.array([float(v) for v in d["plane"]])
            pts = None if d.get("points3d") is None else [(p["id"], np.array(p["xyz"], float)) for p in d["points3d"]]
            dep = None if d.get("depth_points") is None else [(p["track_id"], np.array(p["xyz"], float)) for p in d["depth_points"]]
        except (KeyError, TypeError, ValueError) as err:
            if isinstance(err, SceneFormatError):
                raise
            raise SceneFormatError(f"malformed scene: {err}") from err
        return cls(views, tracks, plane, pts, dep)


def dumps_scene(scene):
    # repr of a float is its shortest round-tripping form (at most 17 significant digits)
    return json.dumps(scene.to_dict(), indent=1)


def loads_scene(text):
    try:
        return SceneFile.from_dict(json.loads(text))
    except json.JSONDecodeError as err:
        raise SceneFormatError(f"not a JSON document: {err}") from err


def load_scene(path):
    with open(path, encoding="utf-8") as fh:
        return loads_scene(fh.read())


def save_scene(scene, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_scene(scene))


# -- epipolar gate -------------------------------------------------------------


def fundamental_from_cameras(camA, camB):
    """``F`` with ``xb^T F xa = 0`` for corresponding points."""
    ca, cb = camA.center.coords, camB.center.coords
    if projective_residual(ca, cb) < 1e-12:
        raise IdenticalCenters("cameras share a center")
    e = camB.matrix @ ca
    return skew(e) @ camB.matrix @ np.linalg.pinv(camA.matrix)


def sampson_error(camA, camB, xa, xb):
    """First-order geometric distance (pixels) of ``(xa, xb)`` to the epipolar constraint."""
    F = fundamental_from_cameras(camA, camB)
    a = np.array([xa[0], xa[1], 1.0])
    b = np.array([xb[0], xb[1], 1.0])
    Fa, Ftb = F @ a, F.T @ b
    den = Fa[0] ** 2 + Fa[1] ** 2 + Ftb[0] ** 2 + Ftb[1] ** 2
    num = float(b @ F @ a)
    return math.sqrt(num * num / den) if den > 0 else (0.0 if num == 0 else math.inf)


# -- RANSAC plane ----------------------------------------------------------------


@dataclass
class DetectedPlane:
    plane: Plane
    member_track_ids: list
    inlier_threshold: float
    support: int
    details: dict = field(default_factory=dict, repr=False)


def fit_plane_lsq(points):
    """Least-squares plane: centroid plus smallest principal direction as normal."""
    P = np.asarray(points, dtype=float)
    c = P.mean(axis=0)
    _, V = np.linalg.eigh((P - c).T @ (P - c))
    n = V[:, 0]
    return Plane(np.append(n, -n @ c))


def ransac_plane(points, threshold, max_iters=RANSAC_ITERS, seed=0, ids=None):
    """Three-point RANSAC with a least-squares refit on the consensus set."""
    P = np.asarray(points, dtype=float).reshape(-1, 3)
    n = len(P)
    if n < 3:
        raise InsufficientInput("RANSAC needs at least three points")
    ids = list(range(n)) if ids is None else list(ids)
    rng = np.random.default_rng(seed)
    scale = max(float(np.ptp(P, axis=0).max()), 1e-300)
    best, best_count, degenerate = None, -1, 0
    for _ in range(max_iters):
        i, j, k = rng.choice(n, 3, replace=False)
        nrm = np.cross(P[j] - P[i], P[k] - P[i])
        nn = np.linalg.norm(nrm)
        if nn <= 1e-12 * scale * scale:
            degenerate += 1
            continue
        nrm = nrm / nn
        inl = np.abs((P - P[i]) @ nrm) <= threshold
        count = int(inl.sum())
        if count > best_count:
            best, best_count = inl, count
            if count == n:
                break
    if best is None:
        raise DegenerateSample(f"all {degenerate} samples were collinear")
    plane = fit_plane_lsq(P[best])
    sel = np.nonzero(plane.distance(P) <= threshold)[0]
    return DetectedPlane(plane, [ids[s] for s in sel], float(threshold), int(len(sel)))


# -- plane detection -----------------------------------------------------------


def _gated(scene, track, views, gate_px, mode):
    obs = {v: (x, y) for v, x, y in track.observations}
    if any(v not in obs for v in views):
        return False
    pairs = [(views[0], v) for v in views[1:]]
    if mode == "all":
        pairs = [(views[a], views[b]) for a in range(len(views)) for b in range(a + 1, len(views))]
    for va, vb in pairs:
        if not sampson_error(scene.camera(va), scene.camera(vb), obs[va], obs[vb]) < gate_px:
            return False
    return True


def default_inlier_threshold(scene):
    """Membership threshold relative to the extent of the depth points."""
    if not scene.depth_points:
        raise InsufficientInput("scene has no depth points")
    P = np.array([x for _, x in scene.depth_points])
    return 1e-3 * float(np.linalg.norm(np.ptp(P, axis=0)))


def detect_planes(scene, num_planes, inlier_threshold=None, sampson_gate_px=SAMPSON_GATE_PX, seed=0,
                  min_support=MIN_SUPPORT, views=None, gate_mode="first", max_iters=RANSAC_ITERS):
    """Planes found by RANSAC over depth points, with Sampson-gated members.

    ``views`` restricts the search to tracks observed in all of those views
    (default: all views); gating is against the first of them, or between
    all pairs with ``gate_mode="all"``.  Members are the gated tracks whose
    depth point is a RANSAC inlier; the reported plane is refit by RANSAC to
    their unconstrained triangulations.  Planes with fewer than
    ``min_support`` members are skipped.
    """
    if not scene.depth_points:
        raise InsufficientInput("scene has no depth points")
    if len(scene.views) < 2:
        raise InsufficientInput("need at least two views")
    if gate_mode not in ("first", "all"):
        raise ValueError("gate_mode must be 'first' or 'all'")
    views = list(range(len(scene.views))) if views is None else list(views)
    thr = default_inlier_threshold(scene) if inlier_threshold is None else float(inlier_threshold)
    tracks = {t.id: t for t in scene.tracks}
    visible = {tid for tid, t in tracks.items() if {v for v, _, _ in t.observations} >= set(views)}
    remaining = [(tid, np.asarray(x, float)) for tid, x in scene.depth_points if tid in visible]
    rng = np.random.default_rng(seed)
    found = []
    for j in range(num_planes):
        if len(remaining) < 3:
            log.info("plane %d: only %d depth points left", j, len(remaining))
            break
        sub_seed = int(rng.integers(2**63))
        try:
            first = ransac_plane([x for _, x in remaining], thr, max_iters, sub_seed, ids=[t for t, _ in remaining])
        except DegenerateSample as err:
            log.info("plane %d: %s", j, err)
            break
        consumed = set(first.member_track_ids)
        gated = [tid for tid in first.member_track_ids if _gated(scene, tracks[tid], views, sampson_gate_px, gate_mode)]
        remaining = [(t, x) for t, x in remaining if t not in consumed]
        try:
            if len(gated) < max(min_support, 3):
                raise InsufficientSupport(f"plane {j}: {len(gated)} gated tracks, need {min_support}")
            pts, ok_ids = [], []
            for tid in gated:
                try:
                    pts.append(_triangulate_track_uc(scene, tracks[tid], views))
                    ok_ids.append(tid)
                except PlanarTriError:
                    continue
            if len(ok_ids) < max(min_support, 3):
                raise InsufficientSupport(f"plane {j}: {len(ok_ids)} triangulated tracks, need {min_support}")
            refit = ransac_plane(pts, thr, max_iters, int(rng.integers(2**63)), ids=ok_ids)
        except InsufficientSupport as err:
            log.info("%s", err)
            continue
        found.append(DetectedPlane(refit.plane, gated, thr, len(gated), {
            "depth_inliers": sorted(consumed, key=str),
            "refit_inliers": refit.member_track_ids,
        }))
    return found


def _triangulate_track_uc(scene, track, views):
    obs = {v: (x, y) for v, x, y in track.observations}
    cams = [scene.camera(v) for v in views]
    u = np.array([obs[v] for v in views])
    rig = _loose_rig(cams)
    return triangulate_unconstrained(rig, u).world_point.affine()


def _loose_rig(cams):
    # the unconstrained method never reads the chart; use a plane clear of all centers
    rng = np.random.default_rng(0)
    while True:
        try:
            return CameraRig(cams, make_chart(Plane(rng.normal(size=4))))
        except PlanarTriError:
            continue


# -- experimental pipeline -------------------------------------------------------


@dataclass
class PipelineRow:
    window: int
    plane: int
    track: object
    strategy: str
    eps_tr: float
    reprojection_errors: list
    strategy_used: str


PIPELINE_COLUMNS = ("window", "plane", "track", "strategy", "eps_tr", "reprojection_errors", "strategy_used")


def _track_rig(scene, track, views, plane):
    obs = {v: (x, y) for v, x, y in track.observations}
    rig = CameraRig([scene.camera(v) for v in views], make_chart(plane))
    return rig, np.array([obs[v] for v in views])


def triangulate_tracks(scene, tracks, views, plane, strategies, threshold_px=5.0, fallback_px=5.0, cfg=None):
    """Results per strategy for several tracks on one plane.

    The constrained stage (fast, then complete in one batch) runs once and
    is shared by ``c`` and ``h``.  Returns ``{strategy: [result or exception]}``.
    """
    for s in strategies:
        if s not in STRATEGIES + ("fast",):
            raise ValueError(f"unknown strategy {s!r}")
    insts = []
    for t in tracks:
        try:
            insts.append(_track_rig(scene, t, views, plane))
        except PlanarTriError as err:
            insts.append(err)
    ok = [i for i, x in enumerate(insts) if not isinstance(x, Exception)]

    def each(fn):
        out = []
        for x in insts:
            if isinstance(x, Exception):
                out.append(x)
                continue
            try:
                out.append(fn(*x))
            except PlanarTriError as err:
                out.append(err)
        return out

    out = {}
    if "uc" in strategies:
        out["uc"] = each(triangulate_unconstrained)
    if "fast" in strategies:
        out["fast"] = each(triangulate_constrained_fast)
    if "c" in strategies or "h" in strategies:
        con = list(insts)
        for i, r in zip(ok, constrained_with_fallback_batch([insts[i] for i in ok], fallback_px, cfg)):
            con[i] = r
        if "c" in strategies:
            out["c"] = con
        if "h" in strategies:
            hyb = []
            for x, r in zip(insts, con):
                if isinstance(x, Exception):
                    hyb.append(x)
                    continue
                if not isinstance(r, Exception):
                    r = replace(r, solver_diagnostics=dict(r.solver_diagnostics))
                try:
                    hyb.append(_hybrid_choice(*x, r, threshold_px))
                except PlanarTriError as err:
                    hyb.append(err)
            out["h"] = hyb
    return out


def triangulate_track(scene, track, views, plane, strategy, threshold_px=5.0, fallback_px=5.0, cfg=None):
    """Triangulate one track from ``views`` with strategy ``uc``, ``c``, ``h`` or ``fast``."""
    res = triangulate_tracks(scene, [track], views, plane, (strategy,), threshold_px, fallback_px, cfg)[strategy][0]
    if isinstance(res, Exception):
        raise res
    return res


def run_pipeline(scene, m, strategies=STRATEGIES, threshold_px=5.0, seed=0, fallback_px=5.0,
                 num_planes=2, inlier_threshold=None, sampson_gate_px=SAMPSON_GATE_PX,
                 min_support=MIN_SUPPORT, cfg=None):
    """Per-track errors over sliding windows of ``m`` consecutive views.

    Planes are detected per window; each member track is triangulated with
    every strategy.  Failures produce a row with ``eps_tr = nan`` and the
    error name as ``strategy_used``.
    """
    M = len(scene.views)
    if m < 2 or m > M:
        raise InsufficientInput(f"need 2 <= m <= {M}")
    for s in strategies:
        if s not in STRATEGIES + ("fast",):
            raise ValueError(f"unknown strategy {s!r}")
    gt = scene.ground_truth()
    rng = np.random.default_rng(seed)
    rows = []
    for w in range(M - m + 1):
        views = list(range(w, w + m))
        planes = detect_planes(scene, num_planes, inlier_threshold, sampson_gate_px,
                               int(rng.integers(2**63)), min_support, views)
        for j, dp in enumerate(planes):
            ids = list(dp.member_track_ids)
            res = triangulate_tracks(scene, [scene.track(t) for t in ids], views, dp.plane, strategies,
                                     threshold_px, fallback_px, cfg)
            for k, tid in enumerate(ids):
                for s in strategies:
                    r = res[s][k]
                    if isinstance(r, Exception):
                        rows.append(PipelineRow(w, j, tid, s, math.nan, [], type(r).__name__))
                        continue
                    eps = math.nan
                    if tid in gt:
                        eps = float(np.linalg.norm(r.world_point.affine() - gt[tid]))
                    rows.append(PipelineRow(w, j, tid, s, eps, r.reprojection_errors, r.strategy_used))
    return rows


def write_pipeline_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PIPELINE_COLUMNS)
        for r in rows:
            w.writerow([r.window, r.plane, r.track, r.strategy.upper(), repr(float(r.eps_tr)),
                        ";".join(repr(float(e)) for e in r.reprojection_errors), r.strategy_used])


# -- synthetic scenes --------------------------------------------------------------


def _look_camera(center, yaw, K):
    c, s = math.cos(yaw), math.sin(yaw)
    R = np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])
    return K @ np.hstack([R, (-R @ center)[:, None]])


def synthetic_two_plane_scene(seed=0, per_plane=30, outliers=5, misassigned=0, noise=1e-6,
                              n_views=4, depth_noise=0.0, focal=800.0):
    """Desk-scale scene with two planes seen by ``n_views`` forward-looking cameras.

    Plane 0 is the wall ``z = 6`` (left half), plane 1 the slanted surface
    ``z = 4.5 + x / 2`` (right half).  Each observation is the projection of
    the ground-truth point moved by a 3D perturbation of length ``noise``.
    Outlier tracks have a depth point on plane 0 but observations displaced
    by tens of pixels; misassigned tracks have a depth point on plane 0 but
    ground truth one unit in front of it.  Returns the scene and a dict of
    the track-id groups.
    """
    rng = np.random.default_rng(seed)
    K = np.array([[focal, 0.0, 640.0], [0.0, focal, 480.0], [0.0, 0.0, 1.0]])
    views = [_look_camera(np.array([0.3 * k - 0.45, 0.05 * k, 0.0]), 0.02 * (k - 1.5), K) for k in range(n_views)]
    planes = [np.array([0.0, 0.0, 1.0, -6.0]), np.array([-0.5, 0.0, 1.0, -4.5])]

    def on_plane(k):
        if k == 0:
            return np.array([rng.uniform(-2.5, -0.2), rng.uniform(-1.5, 1.5), 6.0])
        x = rng.uniform(0.2, 2.0)
        return np.array([x, rng.uniform(-1.5, 1.5), 4.5 + 0.5 * x])

    def observe(X, displace=0.0):
        obs = []
        for v, P in enumerate(views):
            d = rng.normal(size=3)
            x = P @ np.append(X + noise * d / np.linalg.norm(d), 1.0)
            xy = x[:2] / x[2]
            if displace and v > 0:
                ang = rng.uniform(0, 2 * np.pi)
                xy = xy + displace * rng.uniform(1.0, 2.0) * np.array([math.cos(ang), math.sin(ang)])
            obs.append((v, float(xy[0]), float(xy[1])))
        return obs

    tracks, pts, depth = [], [], []
    groups = {"plane0": [], "plane1": [], "outliers": [], "misassigned": []}
    tid = 0
    for k in (0, 1):
        for _ in range(per_plane):
            X = on_plane(k)
            tracks.append(Track(tid, observe(X)))
            pts.append((tid, X))
            depth.append((tid, X + depth_noise * rng.normal(size=3)))
            groups[f"plane{k}"].append(tid)
            tid += 1
    for _ in range(outliers):
        X = on_plane(0)
        tracks.append(Track(tid, observe(X, displace=25.0)))
        pts.append((tid, X))
        depth.append((tid, X))
        groups["outliers"].append(tid)
        tid += 1
    for _ in range(misassigned):
        Xp = on_plane(0)
        X = Xp - np.array([0.0, 0.0, 1.0])
        tracks.append(Track(tid, observe(X)))
        pts.append((tid, X))
        depth.append((tid, Xp))
        groups["misassigned"].append(tid)
        tid += 1
    scene = SceneFile(views, tracks, planes[0], pts, depth)
    return scene, groups
