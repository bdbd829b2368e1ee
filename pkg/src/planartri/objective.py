"""Affine chart of the plane-anchored image variety and the squared
reprojection objective on it.

A plane point is identified with its view-1 image ``(a, b, 1)``; view ``j``
sees ``q(H_j1 (a, b, 1))`` where ``q`` dehomogenizes.  The objective is

    f(a, b) = |(a, b) - u_1|^2 + sum_j |q(H_j1 (a, b, 1)) - u_j|^2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ChartSingularity, InvalidGeometry
from .geometry import ProjectivePoint3, build_homographies
from .polynomial import BivariatePolynomial

DENOM_TOL = 1e-12


@dataclass(frozen=True)
class ChartPoint:
    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise InvalidGeometry("chart coordinates must be finite")

    def __iter__(self):
        yield self.a
        yield self.b


def as_observations(u, m=None):
    """Validate an observation tuple into an ``(m, 2)`` float array.

    Homogeneous rows (length 3) are dehomogenized.
    """
    arr = np.asarray(u, dtype=float)
    if arr.ndim != 2 or arr.shape[1] not in (2, 3):
        raise InvalidGeometry("observations must be an (m, 2) or (m, 3) array")
    if arr.shape[1] == 3:
        arr = arr[:, :2] / arr[:, 2:3]
    if m is not None and arr.shape[0] != m:
        raise InvalidGeometry(f"expected {m} observations, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidGeometry("observations must be finite")
    return arr


def transfer_stack(h):
    """``(m, 3, 3)`` array of ``H_j1`` scaled to unit Frobenius norm; ``H_11 = I``."""
    T = np.empty((h.m, 3, 3))
    T[0] = np.eye(3)
    for j in range(1, h.m):
        H = h.transfer(j, 0)
        T[j] = H / np.linalg.norm(H)
    return T


def _lift(a, b):
    return np.array([a, b, 1.0], dtype=np.result_type(a, b, float))


def _check_denominators(T, x, tol=DENOM_TOL):
    d = T[:, 2, :] @ x
    scale = np.linalg.norm(T[:, 2, :], axis=1) * np.linalg.norm(x)
    bad = np.nonzero(np.abs(d[1:]) <= tol * scale[1:])[0]
    if bad.size:
        raise ChartSingularity(int(bad[0]) + 1)
    return d


def chart_embed(h, p):
    """Affine images ``(m, 2)`` of the chart point ``p`` in all views."""
    T = transfer_stack(h)
    x = _lift(*p)
    d = _check_denominators(T, x)
    return (T[:, :2, :] @ x) / d[:, None]


class Objective:
    """Squared reprojection error as a function of the chart point."""

    def __init__(self, rig, u, homographies=None):
        self.rig = rig
        self.homographies = homographies or build_homographies(rig)
        self.u = as_observations(u, rig.m)
        self.T = transfer_stack(self.homographies)
        self.h1 = self.T[:, 0, :]
        self.h2 = self.T[:, 1, :]
        self.h3 = self.T[:, 2, :]

    @property
    def m(self):
        return self.rig.m

    # evaluation works for complex (a, b) as well; domain checks only for real use
    def residuals(self, a, b, check=True):
        x = _lift(a, b)
        d = _check_denominators(self.T, x) if check else self.h3 @ x
        return (self.T[:, :2, :] @ x) / d[:, None] - self.u

    def value(self, p):
        r = self.residuals(*p)
        return float(np.sum(r * r))

    def residual_jacobian(self, a, b, check=True):
        """Residuals ``(m, 2)`` and their derivatives ``(m, 2, 2)`` in ``(a, b)``."""
        x = _lift(a, b)
        d = _check_denominators(self.T, x) if check else self.h3 @ x
        n = self.T[:, :2, :] @ x
        r = n / d[:, None] - self.u
        # d(n/d)/dk = (n_k d - n d_k) / d^2
        J = (self.T[:, :2, :2] * d[:, None, None] - n[:, :, None] * self.h3[:, None, :2]) / (d ** 2)[:, None, None]
        return r, J

    def gradient(self, p, check=True):
        r, J = self.residual_jacobian(*p, check=check)
        return 2.0 * np.einsum("ji,jik->k", r, J)

    def hessian(self, p):
        """Exact Hessian of ``f``."""
        a, b = p
        x = _lift(a, b)
        d = _check_denominators(self.T, x)
        n = self.T[:, :2, :] @ x
        r, J = self.residual_jacobian(a, b)
        nk = self.T[:, :2, :2]
        dk = self.h3[:, :2]
        # d2(n/d)/dk dl = -(n_k d_l + n_l d_k)/d^2 + 2 n d_k d_l / d^3
        second = (
            -(nk[:, :, :, None] * dk[:, None, None, :] + nk[:, :, None, :] * dk[:, None, :, None])
            / (d ** 2)[:, None, None, None]
            + 2.0 * n[:, :, None, None] * (dk[:, :, None] * dk[:, None, :])[:, None, :, :]
            / (d ** 3)[:, None, None, None]
        )
        return 2.0 * (np.einsum("jik,jil->kl", J, J) + np.einsum("ji,jikl->kl", r, second))

    def derivative_error(self, p, check=True):
        """``max(|df/da|, |df/db|)``; complex points use the analytic continuation."""
        return float(np.max(np.abs(self.gradient(p, check=check))))

    def to_world(self, p):
        """World point on the plane whose view-1 image is ``(a, b, 1)``."""
        y = self.homographies.a_inv[0] @ _lift(*p)
        return ProjectivePoint3(self.rig.chart.basis @ y)

    def chart_coordinates(self, X):
        """View-1 affine image of a plane point."""
        x = self.rig.cameras[0].matrix @ (X.coords if isinstance(X, ProjectivePoint3) else np.asarray(X, float))
        return ChartPoint(x[0] / x[2], x[1] / x[2])


def objective_eval(obj, p):
    return obj.value(p)


def objective_grad(obj, p):
    g = obj.gradient(p)
    return float(g[0]), float(g[1])


@dataclass(frozen=True)
class CriticalSystem:
    """Cleared gradient equations ``g_a = 0``, ``g_b = 0``.

    ``g_a * scale_a == df/da * prod_j d_j**3`` (and likewise for ``b``), with
    ``g_a``, ``g_b`` normalized to unit largest coefficient.
    """

    g_a: BivariatePolynomial
    g_b: BivariatePolynomial
    denominator_factors: tuple
    scale_a: float
    scale_b: float
    # factored form (transfers, observations) for accurate evaluation
    transfers: np.ndarray = None
    observations: np.ndarray = None

    @property
    def equations(self):
        return (self.g_a, self.g_b)

    @property
    def degrees(self):
        return (self.g_a.degree, self.g_b.degree)

    def evaluate(self, a, b):
        """``(g_a, g_b)`` at ``(a, b)``, from the factors when they are available.

        The expanded coefficients lose most digits to cancellation near the
        lines ``d_j = 0``; the factored form does not.
        """
        if self.transfers is None:
            return self.evaluate_expanded(a, b)
        x = _lift(a, b)
        T, U = self.transfers, self.observations
        n = T @ x
        lx = n[:, 0] - U[:, 0] * n[:, 2]
        ly = n[:, 1] - U[:, 1] * n[:, 2]
        N = lx * lx + ly * ly
        d = n[:, 2]
        cubes = d ** 3
        out = []
        for k in (0, 1):
            dN = 2.0 * (lx * (T[:, 0, k] - U[:, 0] * T[:, 2, k]) + ly * (T[:, 1, k] - U[:, 1] * T[:, 2, k]))
            num = dN * d - 2.0 * N * T[:, 2, k]
            total = 0.0
            for j in range(len(d)):
                rest = np.prod(np.delete(cubes[1:], j - 1)) if j else np.prod(cubes[1:])
                total = total + num[j] * rest
            out.append(total)
        return np.array([out[0] / self.scale_a, out[1] / self.scale_b])

    def evaluate_expanded(self, a, b):
        """``(g_a, g_b)`` from the expanded monomial coefficients."""
        return np.array([self.g_a(a, b), self.g_b(a, b)])

    def jacobian(self, a, b):
        ga, gb = self.g_a, self.g_b
        return np.array([
            [ga.deriv("a")(a, b), ga.deriv("b")(a, b)],
            [gb.deriv("a")(a, b), gb.deriv("b")(a, b)],
        ])

    def clearing_factor(self, a, b):
        out = 1.0 + 0j
        for d in self.denominator_factors:
            out = out * d(a, b) ** 3
        return out

    def denominator_values(self, a, b):
        """``|d_j(a, b)|`` relative to the size of ``d_j``'s coefficients and the point."""
        scale = np.sqrt(abs(a) ** 2 + abs(b) ** 2 + 1.0)
        return np.array([abs(d(a, b)) / (np.linalg.norm(d.coeffs) * scale) for d in self.denominator_factors])


def build_critical_system(obj):
    """Clear the gradient of ``f`` by ``prod_{j>=2} d_j**3``.

    Each view contributes ``N_j / d_j**2`` with ``N_j`` quadratic; its
    derivative is ``(N_j' d_j - 2 N_j d_j') / d_j**3``.  The cleared
    polynomials have total degree ``3m - 2``.
    """
    P = BivariatePolynomial
    lin = [P.linear(*row) for row in obj.T.reshape(obj.m * 3, 3)]
    lin = [lin[3 * j:3 * j + 3] for j in range(obj.m)]
    dens = [P.constant(1.0)] + [lin[j][2] for j in range(1, obj.m)]
    cubes = [d ** 3 for d in dens]

    def others(j):
        out = P.constant(1.0)
        for k in range(1, obj.m):
            if k != j:
                out = out * cubes[k]
        return out

    g = {"a": P.zero(), "b": P.zero()}
    for j in range(obj.m):
        n1, n2, d = lin[j]
        ux, uy = obj.u[j]
        lx = n1 - d * ux
        ly = n2 - d * uy
        N = lx * lx + ly * ly
        rest = others(j)
        for v in ("a", "b"):
            num = N.deriv(v) * d - N * d.deriv(v) * 2.0
            g[v] = g[v] + num * rest
    ga, gb = g["a"].trimmed(), g["b"].trimmed()
    sa, sb = ga.max_abs_coeff(), gb.max_abs_coeff()
    return CriticalSystem(
        g_a=ga.scale(1.0 / sa),
        g_b=gb.scale(1.0 / sb),
        denominator_factors=tuple(dens[1:]),
        scale_a=sa,
        scale_b=sb,
        transfers=np.array(obj.T, dtype=float),
        observations=np.array(obj.u, dtype=float),
    )
