"""Synthetic accuracy/runtime benchmark and the solver-stability histogram."""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass

import numpy as np

from .analysis import eddeg_closed_form, sample_instance, sample_rig
from .critical import solve_critical_points
from .errors import ChartSingularity, GenericitySamplingFailed, PlanarTriError, ZeroNoiseMetric
from .geometry import ProjectivePoint3, build_homographies
from .objective import Objective
from .triangulate import (
    triangulate_constrained_batch,
    triangulate_constrained_fast,
    triangulate_hybrid,
    triangulate_unconstrained,
)

METHODS = ("c", "uc", "h", "fast")
# keep sampled points away from every view's line at infinity and from the plane's
_DEHOM_TOL = 1e-3


@dataclass
class SyntheticScene:
    rig: object
    points: list
    clean_observations: list
    noise_level: float
    noisy_observations: list
    seed: object


@dataclass
class BenchRecord:
    method: str
    iteration: int
    e_tr: float
    wall_time_ns: int
    seed: int
    status: str = "ok"


def _scene_rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def fixed_length_noise(rng, shape, eps):
    """Perturbations of length exactly ``eps`` per 2-vector, uniform direction."""
    theta = rng.uniform(0.0, 2.0 * np.pi, shape)
    return eps * np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def generate_scene(m, n, eps, seed, max_attempts=1000):
    """Random rig and ``n`` plane points seen in ``m`` views, plus noisy copies.

    Points are drawn uniformly from ``[-1, 1]^2`` in view-1 image coordinates
    and lifted to the plane through the chart, so they lie on it exactly.
    """
    if m < 2 or n < 1 or not eps >= 0:
        raise ValueError("need m >= 2, n >= 1, eps >= 0")
    rng = _scene_rng(seed)
    rig = sample_rig(m, rng)
    h = build_homographies(rig)
    U = rig.chart.basis
    pts, clean = [], []
    attempts = 0
    while len(pts) < n:
        attempts += 1
        if attempts > max_attempts:
            raise GenericitySamplingFailed("could not sample well-placed plane points")
        y = h.a_inv[0] @ np.array([*rng.uniform(-1.0, 1.0, 2), 1.0])
        X = U @ y
        if abs(X[3]) <= _DEHOM_TOL * np.linalg.norm(X):
            continue
        imgs = [c.matrix @ X for c in rig.cameras]
        if any(abs(x[2]) <= _DEHOM_TOL * np.linalg.norm(x) for x in imgs):
            continue
        pts.append(ProjectivePoint3(X / X[3]))
        clean.append(np.array([x[:2] / x[2] for x in imgs]))
    noisy = [c + fixed_length_noise(rng, m, eps) for c in clean]
    return SyntheticScene(rig, pts, clean, float(eps), noisy, seed)


def _affine(X):
    c = X.coords if isinstance(X, ProjectivePoint3) else np.asarray(X, dtype=float)
    return c[:3] / c[3] if c.shape[0] == 4 else c


def e_tr(recovered, truth, eps):
    """log10 of the mean point error in units of the noise level."""
    if len(recovered) != len(truth) or not truth:
        raise ValueError("need equally long, non-empty point lists")
    if eps == 0:
        raise ZeroNoiseMetric("relative error is undefined at zero noise")
    total = sum(float(np.linalg.norm(_affine(w) - _affine(x))) for w, x in zip(recovered, truth))
    return math.log10(total / (len(truth) * eps)) if total > 0 else -math.inf


def _abs_error(recovered, truth):
    total = sum(float(np.linalg.norm(_affine(w) - _affine(x))) for w, x in zip(recovered, truth))
    return math.log10(total / len(truth)) if total > 0 else -math.inf


def _run_single(method, scene):
    fn = {
        "uc": triangulate_unconstrained,
        "h": triangulate_hybrid,
        "fast": triangulate_constrained_fast,
    }[method]
    out, times = [], []
    for u in scene.noisy_observations:
        t0 = time.perf_counter_ns()
        out.append(fn(scene.rig, u))
        times.append(time.perf_counter_ns() - t0)
    return out, times


def run_benchmark(m, n, eps, iterations, methods=("c", "uc"), seed=0, cfg=None):
    """Triangulate fresh synthetic scenes with each method; one record per (method, iteration).

    The complete constrained solver tracks all points of all iterations in
    one batch, so its wall time is the batch time divided evenly over the
    points.  Records are ordered by method, then iteration.
    """
    methods = [mt.lower() for mt in methods]
    for mt in methods:
        if mt not in METHODS:
            raise ValueError(f"unknown method {mt!r}")
    scenes = []
    for it in range(iterations):
        try:
            scenes.append(generate_scene(m, n, eps, np.random.default_rng([seed, it])))
        except PlanarTriError as err:
            scenes.append(err)

    def metric(ws, scene):
        truth = scene.points
        return e_tr(ws, truth, eps) if eps > 0 else _abs_error(ws, truth)

    records = []
    for mt in methods:
        if mt == "c":
            flat = [(s.rig, u) for s in scenes if not isinstance(s, Exception) for u in s.noisy_observations]
            t0 = time.perf_counter_ns()
            res = triangulate_constrained_batch(flat, cfg)
            per_point = (time.perf_counter_ns() - t0) // max(1, len(flat))
            pos = 0
            for it, s in enumerate(scenes):
                if isinstance(s, Exception):
                    records.append(BenchRecord(mt, it, math.nan, 0, seed, type(s).__name__))
                    continue
                chunk = res[pos:pos + n]
                pos += n
                bad = [r for r in chunk if isinstance(r, Exception)]
                if bad:
                    records.append(BenchRecord(mt, it, math.nan, per_point * n, seed, type(bad[0]).__name__))
                else:
                    records.append(BenchRecord(mt, it, metric([r.world_point for r in chunk], s), per_point * n, seed))
            continue
        for it, s in enumerate(scenes):
            if isinstance(s, Exception):
                records.append(BenchRecord(mt, it, math.nan, 0, seed, type(s).__name__))
                continue
            try:
                res, times = _run_single(mt, s)
            except PlanarTriError as err:
                records.append(BenchRecord(mt, it, math.nan, 0, seed, type(err).__name__))
                continue
            records.append(BenchRecord(mt, it, metric([r.world_point for r in res], s), sum(times), seed))
    return records


BENCH_COLUMNS = ("method", "iteration", "e_tr", "wall_time_ns", "seed")


def write_bench_csv(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BENCH_COLUMNS)
        for r in records:
            w.writerow([r.method.upper(), r.iteration, repr(float(r.e_tr)), r.wall_time_ns, r.seed])


# -- stability histogram ----------------------------------------------------

HIST_LO, HIST_HI, HIST_BINS = 1e-20, 1e10, 120


def histogram_edges():
    return np.logspace(math.log10(HIST_LO), math.log10(HIST_HI), HIST_BINS + 1)


@dataclass
class StabilityHistogram:
    """Counts of ``eps_d`` over fixed log bins; the last count is the overflow bin.

    Values below the first edge (including exact zeros) land in the first
    bin; values above the last edge, non-finite values and failed samples
    land in the overflow bin.
    """

    edges: np.ndarray
    counts: np.ndarray
    values: list
    sample_values: list
    failures: int

    @property
    def total(self):
        return int(self.counts.sum())

    def median(self):
        return float(np.median(self.values)) if self.values else math.nan

    def fraction_below(self, thr):
        """Fraction of samples whose worst solution has ``eps_d`` below ``thr``."""
        s = np.asarray(self.sample_values, dtype=float)
        return float(np.mean(s < thr)) if s.size else math.nan

    def rows(self):
        out = [(self.edges[k], self.edges[k + 1], int(self.counts[k])) for k in range(HIST_BINS)]
        out.append((self.edges[-1], math.inf, int(self.counts[-1])))
        return out


def bin_index(value, edges=None):
    edges = histogram_edges() if edges is None else edges
    if not np.isfinite(value) or value > edges[-1]:
        return HIST_BINS
    if value < edges[0]:
        return 0
    return int(min(np.searchsorted(edges, value, side="right") - 1, HIST_BINS - 1))


def stability_harness(m, samples, solver="complete", seed=0, cfg=None, imag_tol=1e-8):
    """Histogram of the derivative error at solver outputs on random instances.

    ``complete`` evaluates ``eps_d`` at every real critical point returned
    by the homotopy solver (unrefined); ``fast`` at the local solver's
    output.  A failed sample adds one count to the overflow bin.
    """
    if m not in (2, 3):
        raise ValueError("stability harness supports m in {2, 3}")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if solver not in ("complete", "fast"):
        raise ValueError("solver must be 'complete' or 'fast'")
    rng = np.random.default_rng(seed)
    instances = [sample_instance(m, rng) for _ in range(samples)]
    per_sample = []
    if solver == "complete":
        crit = solve_critical_points(instances, cfg, expected=eddeg_closed_form(m))
        for (rig, u), cp in zip(instances, crit):
            obj = Objective(rig, u)
            vals = []
            for a, b in cp.solutions:
                if max(abs(a.imag), abs(b.imag)) <= imag_tol * max(1.0, abs(a), abs(b)):
                    try:
                        vals.append(obj.derivative_error((a.real, b.real)))
                    except ChartSingularity:
                        vals.append(math.inf)
            per_sample.append(vals if vals else None)
    else:
        for rig, u in instances:
            try:
                per_sample.append([triangulate_constrained_fast(rig, u).derivative_error])
            except PlanarTriError:
                per_sample.append(None)
    edges = histogram_edges()
    counts = np.zeros(HIST_BINS + 1, dtype=np.int64)
    values, worst, failures = [], [], 0
    for vals in per_sample:
        if vals is None:
            failures += 1
            counts[HIST_BINS] += 1
            worst.append(math.inf)
            continue
        for v in vals:
            counts[bin_index(v, edges)] += 1
            values.append(v)
        worst.append(max(vals))
    return StabilityHistogram(edges, counts, values, worst, failures)


def write_histogram_csv(hist, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("bin_left", "bin_right", "count"))
        for lo, hi, c in hist.rows():
            w.writerow([repr(float(lo)), repr(float(hi)), c])
