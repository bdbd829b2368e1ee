"""Total-degree homotopy continuation for square systems in two unknowns.

Paths are tracked in homogeneous coordinates ``(z0, z1, z2)`` on a random
affine patch ``l . z = 1`` so that endpoints at infinity stay bounded.  All
paths of a solve (or of many solves, see :func:`solve_batch`) are advanced
together as numpy arrays; each path keeps its own ``t`` and step size.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import SingularJacobian
from .objective import ChartPoint

log = logging.getLogger(__name__)

CONVERGED = "converged"
DIVERGED = "diverged"
SINGULAR = "singular"
FILTERED = "filtered_denominator"


def _unit_complex(rng):
    return complex(np.exp(2j * np.pi * rng.uniform()))


@dataclass(frozen=True)
class PathTrackerConfig:
    initial_step: float = 0.05
    min_step: float = 1e-6
    max_step: float = 0.1
    corrector_tol: float = 1e-6
    max_corrector_iters: int = 3
    divergence_radius: float = 1e8
    polish_iters: int = 12
    denominator_tol: float = 1e-8
    dedup_tol: float = 1e-6
    singular_cond: float = 1e10
    retrack_rounds: int = 2
    endgame_cutoff: float = 1e-14
    growth_streak: int = 3
    seed: int = 0
    gamma: complex = field(default=None)

    def __post_init__(self):
        if not 0 < self.min_step <= self.initial_step <= self.max_step < 1:
            raise ValueError("need 0 < min_step <= initial_step <= max_step < 1")
        if self.corrector_tol <= 0 or self.divergence_radius <= 1:
            raise ValueError("corrector_tol must be > 0 and divergence_radius > 1")
        if self.gamma is None:
            object.__setattr__(self, "gamma", _unit_complex(np.random.default_rng(self.seed)))

    def stricter(self):
        """Configuration for re-tracking paths suspected of jumping."""
        return replace(
            self,
            initial_step=self.initial_step / 4,
            max_step=self.max_step / 4,
            min_step=min(self.min_step, self.initial_step / 4) / 4,
            corrector_tol=self.corrector_tol / 10,
        )


@dataclass
class SolveReport:
    solutions: list
    path_statuses: list
    raw_count: int
    finite_count: int
    filtered_count: int
    endpoints: np.ndarray = field(repr=False, default=None)

    def status_counts(self):
        out = {}
        for s in self.path_statuses:
            out[s] = out.get(s, 0) + 1
        return out

    def summary(self):
        return {
            "raw_count": self.raw_count,
            "finite_count": self.finite_count,
            "filtered_count": self.filtered_count,
            **self.status_counts(),
        }


# -- batched evaluation of homogenized systems --------------------------------


class _Homogenized:
    """Two homogenized polynomials per path, evaluated in batch.

    ``coeffs`` has shape ``(P, 2, n, n)`` (or ``(1, 2, n, n)`` shared by all
    paths); equation ``k`` is homogenized to degree ``degrees[k]``.
    """

    def __init__(self, coeffs, degrees):
        self.coeffs = coeffs
        self.degrees = tuple(int(d) for d in degrees)
        n = coeffs.shape[-1]
        p, q = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        self.n = n
        self.e0 = []
        self.cp, self.cq, self.ce = [], [], []
        for k, D in enumerate(self.degrees):
            e0 = D - p - q
            if np.any(coeffs[:, k][:, e0 < 0] != 0):
                raise ValueError("coefficient beyond the declared degree")
            e0 = np.clip(e0, 0, None)
            self.e0.append(e0)
            self.cp.append(coeffs[:, k] * p)
            self.cq.append(coeffs[:, k] * q)
            self.ce.append(coeffs[:, k] * e0)

    def take(self, idx):
        if self.coeffs.shape[0] == 1:
            return self
        sub = object.__new__(_Homogenized)
        sub.coeffs = self.coeffs[idx]
        sub.degrees, sub.n, sub.e0 = self.degrees, self.n, self.e0
        sub.cp = [c[idx] for c in self.cp]
        sub.cq = [c[idx] for c in self.cq]
        sub.ce = [c[idx] for c in self.ce]
        return sub

    def __call__(self, z):
        """Values ``(P, 2)`` and Jacobians ``(P, 2, 3)`` at homogeneous ``z``."""
        n = self.n
        e = np.arange(n)
        em = np.clip(e - 1, 0, None)
        Z = z[:, :, None] ** e  # (P, 3, n)
        Zm = z[:, :, None] ** em
        P = z.shape[0]
        F = np.empty((P, 2), dtype=complex)
        J = np.empty((P, 2, 3), dtype=complex)
        for k in range(2):
            e0 = self.e0[k]
            G0 = Z[:, 0, :][:, e0]
            G0m = Zm[:, 0, :][:, e0]
            K = Z[:, 1, :, None] * Z[:, 2, None, :]
            c = self.coeffs[:, k]
            F[:, k] = np.sum(c * K * G0, axis=(1, 2))
            J[:, k, 0] = np.sum(self.ce[k] * K * G0m, axis=(1, 2))
            J[:, k, 1] = np.sum(self.cp[k] * (Zm[:, 1, :, None] * Z[:, 2, None, :]) * G0, axis=(1, 2))
            J[:, k, 2] = np.sum(self.cq[k] * (Z[:, 1, :, None] * Zm[:, 2, None, :]) * G0, axis=(1, 2))
        return F, J


def _dmul(x, y):
    return x[0] * y[0], x[0][:, None] * y[1] + y[0][:, None] * x[1]


def _dadd(x, y):
    return x[0] + y[0], x[1] + y[1]


def _dscale(x, c):
    return c * x[0], c[..., None] * x[1] if np.ndim(c) else c * x[1]


class _Factored:
    """Cleared gradient system evaluated from its factors.

    Expanding ``sum_j num_j prod_{k != j} d_k**3`` into monomials loses most
    significant digits wherever some ``d_k`` is small; evaluating the
    factors keeps the relative error at rounding level.  Values and
    ``z``-gradients are propagated together as (value, gradient) pairs.
    """

    def __init__(self, T, U, scale, degrees):
        self.T = T
        self.U = U
        self.scale = scale
        self.degrees = tuple(int(d) for d in degrees)

    def take(self, idx):
        return _Factored(self.T[idx], self.U[idx], self.scale[idx], self.degrees)

    def rational_newton(self, ab, iters, tol=1e-11):
        """Newton on the uncleared gradient ``g / prod d_k**3`` from affine ``ab``.

        Near a spurious root of the cleared system (where some ``d_k``
        vanishes) the uncleared gradient has a pole, so the iteration is
        pushed towards nearby genuine critical points instead.
        """
        ab = np.array(ab, dtype=complex)
        P = ab.shape[0]
        conv = np.zeros(P, dtype=bool)
        h3 = self.T[:, 1:, 2, :]  # (P, m-1, 3) in (a, b, 1) order
        with np.errstate(all="ignore"):
            for _ in range(iters):
                z = np.column_stack([np.ones(P), ab])
                F, J = self(z)
                d = np.einsum("pkc,pc->pk", h3, np.column_stack([ab, np.ones(P)]))
                dlog = 3.0 * np.sum(h3[:, :, :2] / d[:, :, None], axis=1)
                Jr = J[:, :, 1:] - F[:, :, None] * dlog[:, None, :]
                step = _solve2(Jr, F)
                bad = ~np.isfinite(step).all(axis=1)
                step[bad] = 0
                ab = ab - np.where(conv[:, None], 0, step)
                small = np.linalg.norm(step, axis=1) <= tol * np.maximum(1.0, np.linalg.norm(ab, axis=1))
                conv |= small & ~bad
            z = np.column_stack([np.ones(P), ab])
            F, J = self(z)
            d = np.einsum("pkc,pc->pk", h3, np.column_stack([ab, np.ones(P)]))
            dlog = 3.0 * np.sum(h3[:, :, :2] / d[:, :, None], axis=1)
            cond = np.linalg.cond(J[:, :, 1:] - F[:, :, None] * dlog[:, None, :])
        return ab, conv, cond

    def __call__(self, z):
        P, m = self.T.shape[0], self.T.shape[1]
        perm = [2, 0, 1]  # (a, b, 1) coefficients -> (z0, z1, z2) order

        def form(rows):
            c = rows[:, perm].astype(complex)
            return np.einsum("pc,pc->p", c, z), c

        X, Y, D = [], [], []
        for j in range(m):
            Tj, uj = self.T[:, j], self.U[:, j]
            X.append(form(Tj[:, 0] - uj[:, :1] * Tj[:, 2]))
            Y.append(form(Tj[:, 1] - uj[:, 1:] * Tj[:, 2]))
            D.append(form(Tj[:, 2]))
        cubes = [None] + [_dmul(_dmul(D[k], D[k]), D[k]) for k in range(1, m)]
        one = (np.ones(P, dtype=complex), np.zeros((P, 3), dtype=complex))

        def prod_except(j):
            out = one
            for k in range(1, m):
                if k != j:
                    out = _dmul(out, cubes[k])
            return out

        rest = [prod_except(j) for j in range(m)]
        z0 = (z[:, 0], np.tile(np.array([1.0, 0.0, 0.0], dtype=complex), (P, 1)))
        F = np.empty((P, 2), dtype=complex)
        J = np.empty((P, 2, 3), dtype=complex)
        for v in range(2):
            g = _dscale(_dmul(X[0] if v == 0 else Y[0], rest[0]), 2.0)
            acc = (np.zeros(P, dtype=complex), np.zeros((P, 3), dtype=complex))
            for j in range(1, m):
                xv, yv, dv = X[j][1][:, 1 + v], Y[j][1][:, 1 + v], D[j][1][:, 1 + v]
                cross = _dadd(_dscale(X[j], xv), _dscale(Y[j], yv))
                sq = _dadd(_dmul(X[j], X[j]), _dmul(Y[j], Y[j]))
                num = _dadd(_dscale(_dmul(cross, D[j]), 2.0), _dscale(sq, -2.0 * dv))
                acc = _dadd(acc, _dmul(num, rest[j]))
            g = _dadd(g, _dmul(_dmul(z0, z0), acc))
            F[:, v] = g[0] / self.scale[:, v]
            J[:, v] = g[1] / self.scale[:, v, None]
        return F, J


def _start_eval(z, degrees):
    F = np.empty((z.shape[0], 2), dtype=complex)
    J = np.zeros((z.shape[0], 2, 3), dtype=complex)
    for k, D in enumerate(degrees):
        F[:, k] = z[:, k + 1] ** D - z[:, 0] ** D
        J[:, k, k + 1] = D * z[:, k + 1] ** (D - 1)
        J[:, k, 0] = -D * z[:, 0] ** (D - 1)
    return F, J


def start_points(degrees, patch):
    """Roots of ``(z1^d1 - z0^d1, z2^d2 - z0^d2)`` on the patch, row-major order."""
    d1, d2 = degrees
    w1 = np.exp(2j * np.pi * np.arange(d1) / d1)
    w2 = np.exp(2j * np.pi * np.arange(d2) / d2)
    pts = np.array([[1.0, x, y] for x in w1 for y in w2], dtype=complex)
    return pts / (pts @ patch)[:, None]


def _solve3(A, b):
    """Batched 3x3 solve by the adjugate, after equilibrating the rows."""
    with np.errstate(all="ignore"):
        r = np.max(np.abs(A), axis=2)
        r = np.where(r > 0, r, 1.0)
        A = A / r[:, :, None]
        b = b / r
        c0 = np.cross(A[:, 1], A[:, 2])
        c1 = np.cross(A[:, 2], A[:, 0])
        c2 = np.cross(A[:, 0], A[:, 1])
        det = np.einsum("pk,pk->p", A[:, 0], c0)
        x = (c0 * b[:, :1] + c1 * b[:, 1:2] + c2 * b[:, 2:]) / det[:, None]
    return x


def _homotopy(target, z, t, gamma, patch):
    F, JF = target(z)
    S, JS = _start_eval(z, target.degrees)
    s = (1.0 - t)[:, None]
    tt = t[:, None]
    P = z.shape[0]
    H = np.empty((P, 3), dtype=complex)
    H[:, :2] = s * gamma * S + tt * F
    H[:, 2] = z @ patch - 1.0
    Jz = np.empty((P, 3, 3), dtype=complex)
    Jz[:, :2, :] = s[:, :, None] * gamma * JS + tt[:, :, None] * JF
    Jz[:, 2, :] = patch
    Ht = np.zeros((P, 3), dtype=complex)
    Ht[:, :2] = F - gamma * S
    return H, Jz, Ht


def track_paths(target, z0, gamma, patch, cfg):
    """Track every start point in ``z0`` from ``t = 0`` to ``t = 1``.

    Returns endpoints, final ``t`` and a per-path flag that is ``True`` for
    paths that reached ``t = 1``.
    """
    z = np.array(z0, dtype=complex)
    P = z.shape[0]
    t = np.zeros(P)
    h = np.full(P, cfg.initial_step)
    streak = np.zeros(P, dtype=int)
    done = np.zeros(P, dtype=bool)
    stalled = np.zeros(P, dtype=bool)
    with np.errstate(all="ignore"):
        while True:
            act = np.nonzero(~done & ~stalled)[0]
            if act.size == 0:
                break
            tg = target.take(act)
            za, ta = z[act], t[act]
            ha = np.minimum(h[act], 1.0 - ta)
            _, Jz, Ht = _homotopy(tg, za, ta, gamma, patch)
            dz = -_solve3(Jz, Ht)
            t1 = np.where(ha >= 1.0 - ta, 1.0, ta + ha)
            zp = za + (t1 - ta)[:, None] * dz
            ok = np.zeros(act.size, dtype=bool)
            alive = np.isfinite(zp).all(axis=1)
            prev = np.full(act.size, np.inf)
            for _ in range(cfg.max_corrector_iters):
                H, Jz, _ = _homotopy(tg, zp, t1, gamma, patch)
                delta = _solve3(Jz, H)
                zp = zp - delta
                nd = np.linalg.norm(delta, axis=1)
                nz = np.linalg.norm(zp, axis=1)
                alive &= np.isfinite(nd) & (nd < 0.5 * prev + 1e-300)
                prev = nd
                ok |= alive & (nd <= cfg.corrector_tol * np.maximum(nz, 1.0))
                alive &= ~ok
                if not alive.any():
                    break
            good = act[ok]
            z[good] = zp[ok]
            t[good] = t1[ok]
            # grow only after a run of successes, so a step that just failed is not retried at once
            streak[good] += 1
            grow = good[streak[good] >= cfg.growth_streak]
            h[grow] = np.minimum(2.0 * h[grow], cfg.max_step)
            streak[grow] = 0
            done[good] = t[good] >= 1.0 - cfg.endgame_cutoff
            bad = act[~ok]
            h[bad] *= 0.5
            streak[bad] = 0
            # the minimum step is relative to the remaining time 1 - t
            stalled[bad] = h[bad] < cfg.min_step * (1.0 - t[bad])
            # a step below one ulp of t makes no progress and would loop forever
            stalled[act[t1 <= ta]] = True
    return z, t, done


# -- endpoint processing ---------------------------------------------------


def _affine_newton(target, ab, iters, tol=1e-11):
    """Batched Newton on ``F(1, a, b) = 0``. Returns points, residual norms, Jacobian conditions, converged flags."""
    ab = np.array(ab, dtype=complex)
    conv = np.zeros(ab.shape[0], dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(iters):
            z = np.column_stack([np.ones(ab.shape[0]), ab])
            F, J = target(z)
            J2 = J[:, :, 1:]
            step = _solve2(J2, F)
            bad = ~np.isfinite(step).all(axis=1)
            step[bad] = 0
            ab = ab - np.where(conv[:, None], 0, step)
            small = np.linalg.norm(step, axis=1) <= tol * np.maximum(1.0, np.linalg.norm(ab, axis=1))
            conv |= small & ~bad
        z = np.column_stack([np.ones(ab.shape[0]), ab])
        F, J = target(z)
        cond = np.linalg.cond(J[:, :, 1:])
    return ab, np.linalg.norm(F, axis=1), cond, conv


def _solve2(A, b):
    det = A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0]
    x0 = (A[:, 1, 1] * b[:, 0] - A[:, 0, 1] * b[:, 1]) / det
    x1 = (A[:, 0, 0] * b[:, 1] - A[:, 1, 0] * b[:, 0]) / det
    return np.column_stack([x0, x1])


def chordal_distance(p, q):
    """Distance of ``(1, a, b)`` lines on the unit sphere (sine of the angle)."""
    u = np.array([1.0, *p], dtype=complex)
    v = np.array([1.0, *q], dtype=complex)
    u /= np.linalg.norm(u)
    v /= np.linalg.norm(v)
    # projection form; sqrt(1 - |<u, v>|^2) cancels below ~1e-8
    return float(min(1.0, np.linalg.norm(u - v * np.vdot(v, u))))


def _relative_den(den, ab):
    if not den.shape[1]:
        return np.full(ab.shape[0], np.inf)
    pt = np.column_stack([ab, np.ones(ab.shape[0])])
    vals = np.abs(np.einsum("pkc,pc->pk", den, pt))
    norms = np.linalg.norm(den, axis=2) * np.linalg.norm(pt, axis=1)[:, None]
    return np.min(vals / norms, axis=1)


def _classify(target, z, reached, den, cfg):
    """Status per endpoint, polished affine points and a rescue flag.

    ``den`` has shape ``(P, k, 3)``: linear denominators per path (may be
    ``k = 0``).  Endpoints that fail to polish on the cleared system get a
    second chance with Newton on the uncleared system when the target
    supports it; those are flagged as rescued.
    """
    P = z.shape[0]
    status = np.array([CONVERGED] * P, dtype=object)
    scale = np.linalg.norm(z[:, 1:], axis=1)
    with np.errstate(all="ignore"):
        diverged = ~(np.abs(z[:, 0]) * cfg.divergence_radius > scale) | ~np.isfinite(z).all(axis=1)
    status[diverged] = DIVERGED
    ab = np.zeros((P, 2), dtype=complex)
    rescued = np.zeros(P, dtype=bool)
    fin = np.nonzero(~diverged)[0]
    if fin.size:
        ab0 = z[fin, 1:] / z[fin, :1]
        abp, res, cond, conv = _affine_newton(target.take(fin), ab0, cfg.polish_iters)
        far = np.linalg.norm(abp, axis=1) > cfg.divergence_radius
        ab[fin] = np.where(np.isfinite(abp), abp, ab0)
        rel_d = _relative_den(den[fin], ab[fin])
        sub = np.array([CONVERGED] * fin.size, dtype=object)
        sing = ~conv | ~(cond < cfg.singular_cond) | ~reached[fin]
        sub[sing] = SINGULAR
        sub[rel_d < cfg.denominator_tol] = FILTERED
        sub[far] = DIVERGED
        retry = np.nonzero(sub == SINGULAR)[0]
        if retry.size and hasattr(target, "rational_newton"):
            abr, convr, condr = target.take(fin[retry]).rational_newton(ab0[retry], 2 * cfg.polish_iters)
            with np.errstate(all="ignore"):
                ok = (
                    convr
                    & (condr < cfg.singular_cond)
                    & np.isfinite(abr).all(axis=1)
                    & (np.linalg.norm(abr, axis=1) < cfg.divergence_radius)
                    & (_relative_den(den[fin[retry]], abr) >= cfg.denominator_tol)
                )
            sub[retry[ok]] = CONVERGED
            ab[fin[retry[ok]]] = abr[ok]
            rescued[fin[retry[ok]]] = True
        status[fin] = sub
    return status, ab, rescued


def _dedup(points, tol):
    """Greedy clustering under the chordal metric; returns kept indices and groups."""
    if len(points) == 0:
        return [], []
    V = np.column_stack([np.ones(len(points)), np.array(points, dtype=complex).reshape(len(points), 2)])
    with np.errstate(all="ignore"):
        V /= np.linalg.norm(V, axis=1, keepdims=True)
        c = np.minimum(np.abs(V.conj() @ V.T), 1.0)
    close = np.sqrt(np.maximum(0.0, 1.0 - c * c)) < tol
    keep, groups = [], []
    for i in range(len(points)):
        hits = [g for g, k in enumerate(keep) if close[i, k]]
        if hits:
            groups[hits[0]].append(i)
        else:
            keep.append(i)
            groups.append([i])
    return keep, groups


def _den_array(system):
    rows = [[d.coeffs[1, 0], d.coeffs[0, 1], d.coeffs[0, 0]] for d in system.denominator_factors]
    return np.array(rows, dtype=complex).reshape(len(rows), 3)


def _target_for(systems):
    """Batched evaluator for ``systems``; factored when every system allows it."""
    degrees = systems[0].degrees
    if any(s.degrees != degrees for s in systems):
        raise ValueError("batched systems must share their degrees")
    factored = all(getattr(s, "transfers", None) is not None for s in systems)
    if factored and len({s.transfers.shape for s in systems}) == 1:
        T = np.stack([s.transfers for s in systems])
        U = np.stack([s.observations for s in systems])
        scale = np.array([[s.scale_a, s.scale_b] for s in systems])
        return _Factored(T, U, scale, degrees), degrees
    n = max(degrees) + 1
    C = np.zeros((len(systems), 2, n, n), dtype=complex)
    for i, s in enumerate(systems):
        for k, g in enumerate(s.equations):
            c = g.coeffs
            C[i, k, :c.shape[0], :c.shape[1]] = c[:n, :n]
    return _Homogenized(C, degrees), degrees


def solve_batch(systems, cfg=None, chunk=40000):
    """Solve several systems of equal degrees in one vectorized sweep."""
    cfg = cfg or PathTrackerConfig()
    if not systems:
        return []
    target_all, degrees = _target_for(systems)
    if min(degrees) < 1:
        raise ValueError("system degrees must be >= 1")
    rng = np.random.default_rng([cfg.seed, 0x5EED])
    patch = rng.normal(size=3) + 1j * rng.normal(size=3)
    starts = start_points(degrees, patch)
    npath = starts.shape[0]
    dens = [_den_array(s) for s in systems]
    kmax = max(d.shape[0] for d in dens)
    den = np.zeros((len(systems), kmax, 3), dtype=complex)
    for i, d in enumerate(dens):
        den[i, :d.shape[0]] = d
        if d.shape[0] < kmax:
            den[i, d.shape[0]:] = [0, 0, 1]

    def run(sys_idx, path_idx, conf):
        Z, T, R = [], [], []
        for lo in range(0, len(sys_idx), chunk):
            si, pi = sys_idx[lo:lo + chunk], path_idx[lo:lo + chunk]
            tgt = target_all.take(si)
            zf, tf, reached = track_paths(tgt, starts[pi], conf.gamma, patch, conf)
            Z.append(zf)
            T.append(_classify(tgt, zf, reached, den[si], conf))
        zf = np.concatenate(Z)
        status, ab, rescued = (np.concatenate([t[k] for t in T]) for k in range(3))
        return zf, status, ab, rescued

    sys_idx = np.repeat(np.arange(len(systems)), npath)
    path_idx = np.tile(np.arange(npath), len(systems))
    zf, status, ab, rescued = run(sys_idx, path_idx, cfg)
    status = status.reshape(len(systems), npath)
    rescued = rescued.reshape(len(systems), npath)
    ab = ab.reshape(len(systems), npath, 2)
    zf = zf.reshape(len(systems), npath, 3)

    conf = cfg
    for _ in range(cfg.retrack_rounds):
        # paths that collide on a regular root have jumped; redo them more carefully
        redo = []
        for i in range(len(systems)):
            # rescued endpoints may legitimately share a root with a tracked path
            idx = np.nonzero((status[i] == CONVERGED) & ~rescued[i])[0]
            _, groups = _dedup([ab[i, k] for k in idx], cfg.dedup_tol)
            for g in groups:
                if len(g) > 1:
                    redo.extend((i, idx[k]) for k in g)
        if not redo:
            break
        conf = conf.stricter()
        log.debug("re-tracking %d paths with step %.3g", len(redo), conf.max_step)
        si = np.array([r[0] for r in redo])
        pi = np.array([r[1] for r in redo])
        z2, s2, a2, r2 = run(si, pi, conf)
        zf[si, pi] = z2
        status[si, pi] = s2
        ab[si, pi] = a2
        rescued[si, pi] = r2

    reports = []
    for i in range(len(systems)):
        st = list(status[i])
        ok = [k for k in range(npath) if st[k] == CONVERGED]
        keep, _ = _dedup([ab[i, k] for k in ok], cfg.dedup_tol)
        sols = [(complex(ab[i, ok[k], 0]), complex(ab[i, ok[k], 1])) for k in keep]
        survivors = sum(s in (CONVERGED, SINGULAR) for s in st)
        reports.append(SolveReport(
            solutions=sols,
            path_statuses=st,
            raw_count=npath,
            finite_count=len(sols),
            filtered_count=survivors,
            endpoints=ab[i].copy(),
        ))
    return reports


def solve_total_degree(system, cfg=None):
    """All isolated regular finite roots of a :class:`CriticalSystem`-like system."""
    return solve_batch([system], cfg)[0]


def real_solutions(report, imag_tol=1e-8):
    out = []
    for a, b in report.solutions:
        if max(abs(a.imag), abs(b.imag)) < imag_tol:
            out.append(ChartPoint(a.real, b.real))
    return out


def newton_polish(system, z, iters=6, tol=1e-15, cond_limit=1e12):
    """Newton iteration on ``system`` from the complex pair ``z``."""
    a, b = complex(z[0]), complex(z[1])
    for _ in range(iters):
        F = system.evaluate(a, b)
        if np.linalg.norm(F) <= tol:
            break
        J = system.jacobian(a, b)
        if not np.all(np.isfinite(J)) or np.linalg.cond(J) > cond_limit:
            raise SingularJacobian(f"Jacobian singular at ({a}, {b})")
        da, db = np.linalg.solve(J, F)
        a, b = a - da, b - db
        if abs(da) + abs(db) <= tol * (1 + abs(a) + abs(b)):
            break
    return a, b
