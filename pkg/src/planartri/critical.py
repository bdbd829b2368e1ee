"""Complete critical-point computation for triangulation instances.

The cleared system is written in the chart of one anchor view.  Which view
serves as anchor does not change the critical points, only the conditioning
of the polynomial system, so instances are solved in the chart of their
best-conditioned view and, when the count falls short, additionally in the
charts of the other views.  Everything is mapped back to view-1 chart
coordinates and merged.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import CameraRig, build_homographies
from .objective import Objective, as_observations, build_critical_system
from .polysys import PathTrackerConfig, _dedup, _den_array, _relative_den, _target_for, solve_batch

ANCHOR_MODES = ("first", "best", "adaptive", "all")


@dataclass
class CriticalPoints:
    """Critical points of one instance, in view-1 chart coordinates."""

    solutions: list
    finite_count: int
    anchors: list
    reports: list = field(default_factory=list, repr=False)

    @property
    def primary(self):
        return self.reports[0]

    def summary(self):
        out = dict(self.primary.summary())
        out["finite_count"] = self.finite_count
        out["anchors"] = list(self.anchors)
        return out


def anchor_order(rig):
    """View indices sorted by the condition number of their plane homography."""
    h = build_homographies(rig)
    conds = [np.linalg.cond(A) for A in h.a]
    return [int(k) for k in np.argsort(conds, kind="stable")]


def _reanchored(rig, u, k):
    order = [k] + [j for j in range(rig.m) if j != k]
    sub = CameraRig([rig.cameras[j] for j in order], rig.chart)
    return build_critical_system(Objective(sub, u[order]))


def _to_view1(H, sols):
    if not sols:
        return np.zeros((0, 2), dtype=complex)
    ab = np.array(sols, dtype=complex)
    x = np.column_stack([ab, np.ones(len(ab))]) @ H.T
    with np.errstate(all="ignore"):
        return x[:, :2] / x[:, 2:3]


def solve_critical_points(instances, cfg=None, anchors="adaptive", expected=None):
    """Critical points of the reprojection objective for ``(rig, u)`` pairs.

    ``anchors`` selects the chart(s) the cleared system is solved in:
    ``"first"`` uses view 1 only, ``"best"`` the best-conditioned view,
    ``"all"`` every view, and ``"adaptive"`` the best view plus the others
    whenever fewer than ``expected`` points were found.  All systems of one
    round are tracked in a single batch.
    """
    if anchors not in ANCHOR_MODES:
        raise ValueError(f"anchors must be one of {ANCHOR_MODES}")
    cfg = cfg or PathTrackerConfig()
    n = len(instances)
    if n == 0:
        return []
    us = [as_observations(u, rig.m) for rig, u in instances]
    homs = [build_homographies(rig) for rig, _ in instances]
    orders = [anchor_order(rig) if anchors != "first" else list(range(rig.m)) for rig, _ in instances]
    found = [[] for _ in range(n)]
    used = [[] for _ in range(n)]
    reports = [[] for _ in range(n)]
    view1 = {}

    def run(jobs):
        # jobs: list of (instance, anchor); systems of equal degree share a batch
        by_m = {}
        for i, k in jobs:
            by_m.setdefault(instances[i][0].m, []).append((i, k))
        for group in by_m.values():
            systems = [_reanchored(instances[i][0], us[i], k) for i, k in group]
            for (i, k), cs, rep in zip(group, systems, solve_batch(systems, cfg)):
                if k == 0:
                    view1[i] = cs
                used[i].append(k)
                reports[i].append(rep)
                found[i].append(_to_view1(homs[i].transfer(0, k), rep.solutions))

    run([(i, orders[i][0]) for i in range(n)])
    if anchors == "all":
        run([(i, k) for i in range(n) for k in orders[i][1:]])
    elif anchors == "adaptive" and expected is not None:
        run([(i, k) for i in range(n) if len(found[i][0]) < expected for k in orders[i][1:]])

    for i in range(n):
        if i not in view1:
            view1[i] = build_critical_system(Objective(instances[i][0], us[i]))
    merged = _merge([view1[i] for i in range(n)], found, cfg)
    return [CriticalPoints(merged[i], len(merged[i]), used[i], reports[i]) for i in range(n)]


def _merge(systems, found, cfg):
    """Polish mapped points on the view-1 systems, filter and deduplicate."""
    owner = np.concatenate([np.full(sum(len(g) for g in f), i, dtype=int) for i, f in enumerate(found)])
    pts = np.concatenate([g for f in found for g in f] or [np.zeros((0, 2), dtype=complex)])
    out = [[] for _ in systems]
    if not len(pts):
        return out
    with np.errstate(all="ignore"):
        fin = np.isfinite(pts).all(axis=1)
        safe = np.where(fin[:, None], pts, 0.0)
        by_m = {}
        for i, cs in enumerate(systems):
            by_m.setdefault(cs.degrees, []).append(i)
        pol = safe.copy()
        rel_d = np.zeros(len(pts))
        for idx in by_m.values():
            tgt, _ = _target_for([systems[i] for i in idx])
            local = np.full(len(systems), -1)
            local[idx] = np.arange(len(idx))
            sel = np.nonzero(local[owner] >= 0)[0]
            if not sel.size:
                continue
            p2, conv, _ = tgt.take(local[owner[sel]]).rational_newton(safe[sel], 4)
            # accept the polish only if it stays at the same root
            moved = np.linalg.norm(p2 - safe[sel], axis=1) / np.maximum(1.0, np.linalg.norm(safe[sel], axis=1))
            good = conv & np.isfinite(p2).all(axis=1) & (moved <= 1e-6)
            pol[sel] = np.where(good[:, None], p2, safe[sel])
            den = np.stack([_den_array(systems[i]) for i in idx])
            rel_d[sel] = _relative_den(den[local[owner[sel]]], pol[sel])
        keep = fin & (rel_d >= cfg.denominator_tol) & (np.linalg.norm(pol, axis=1) < cfg.divergence_radius)
    for i in range(len(systems)):
        cand = pol[keep & (owner == i)]
        idx, _ = _dedup(list(cand), cfg.dedup_tol)
        out[i] = [(complex(cand[k, 0]), complex(cand[k, 1])) for k in idx]
    return out
