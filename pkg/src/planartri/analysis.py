"""ED degree: closed form, Euler-characteristic decomposition and empirical counts."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from math import comb

import numpy as np

from .critical import solve_critical_points
from .errors import (
    GenericitySamplingFailed,
    InvalidViewCount,
    PlanarTriError,
    UnderdeterminedFit,
)
from .geometry import CameraRig, Plane, build_homographies, make_chart, random_camera


def _check_m(m):
    if int(m) != m or m < 2:
        raise InvalidViewCount(f"need m >= 2 views, got {m}")
    return int(m)


def eddeg_closed_form(m):
    """Generic number of complex critical points for ``m`` views."""
    m = _check_m(m)
    return (9 * m * m - 13 * m + 6) // 2


@dataclass(frozen=True)
class EDDegreeBreakdown:
    m: int
    chi_variety: int
    chi_d_infinity: int
    chi_dq_cap_dinf: int
    chi_dq: int
    eddeg: int


def eddeg_via_euler(m):
    """ED degree assembled from the Euler characteristics of its strata."""
    m = _check_m(m)
    pairs = comb(m, 2)
    chi_var = 3
    chi_inf = 2 * m - pairs
    chi_cap = 2 * m + pairs
    chi_q = -4 * m * m + 6 * m + pairs
    return EDDegreeBreakdown(m, chi_var, chi_inf, chi_cap, chi_q, chi_var - chi_inf + chi_cap - chi_q)


def sample_rig(m, rng, max_attempts=100):
    """Random rig with uniform entries in ``[-1, 1]``, resampled until generic."""
    m = _check_m(m)
    for _ in range(max_attempts):
        cams = [random_camera(rng) for _ in range(m)]
        pi = rng.uniform(-1.0, 1.0, 4)
        try:
            rig = CameraRig(cams, make_chart(Plane(pi)))
            build_homographies(rig)
        except PlanarTriError:
            continue
        return rig
    raise GenericitySamplingFailed(f"no generic {m}-view rig in {max_attempts} attempts")


def sample_instance(m, rng):
    """Random rig plus a uniform observation tuple in ``[-1, 1]^2``."""
    rig = sample_rig(m, rng)
    return rig, rng.uniform(-1.0, 1.0, (m, 2))


def eddeg_empirical(m, trials, cfg=None, seed=0):
    """Number of finite critical points found on ``trials`` random instances.

    A trial whose solve raises is recorded as ``-1``.
    """
    m = _check_m(m)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    instances = [sample_instance(m, rng) for _ in range(trials)]
    expected = eddeg_closed_form(m)
    try:
        return [cp.finite_count for cp in solve_critical_points(instances, cfg, expected=expected)]
    except PlanarTriError:
        pass
    # fall back to one trial at a time so a single failure does not sink the batch
    counts = []
    for inst in instances:
        try:
            counts.append(solve_critical_points([inst], cfg, expected=expected)[0].finite_count)
        except PlanarTriError:
            counts.append(-1)
    return counts


def modal_count(counts):
    """Most frequent count and its relative frequency (ties go to the larger count)."""
    if not counts:
        raise ValueError("no counts")
    c = Counter(counts)
    mode = max(c, key=lambda k: (c[k], k))
    return mode, c[mode] / len(counts)


class QuadraticFit(tuple):
    """Coefficients ``(c2, c1, c0)`` with the RMS fit residual attached."""

    def __new__(cls, coeffs, residual):
        obj = super().__new__(cls, coeffs)
        obj.residual = residual
        return obj


def quadratic_fit(points):
    """Least-squares quadratic ``c2 m^2 + c1 m + c0`` through ``(m, count)`` pairs."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(np.unique(pts[:, 0])) < 3:
        raise UnderdeterminedFit("need at least three distinct view counts")
    V = np.vander(pts[:, 0], 3)
    coef, *_ = np.linalg.lstsq(V, pts[:, 1], rcond=None)
    resid = float(np.sqrt(np.mean((V @ coef - pts[:, 1]) ** 2)))
    return QuadraticFit(tuple(float(c) for c in coef), resid)
