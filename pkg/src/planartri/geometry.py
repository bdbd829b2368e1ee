"""Projective primitives: points, cameras, planes, plane charts and the
homographies a plane induces between views.

Points and cameras are real; complex arithmetic lives in the solver.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CenterProjection,
    InvalidGeometry,
    LineInPlane,
    NearSingularHomography,
)

RANK_TOL = 1e-9
DEHOM_TOL = 1e-14
PROJECTION_TOL = 1e-12


def normalize_max(v):
    """Scale a homogeneous vector so its largest-magnitude entry is +1."""
    v = np.asarray(v, dtype=float)
    k = int(np.argmax(np.abs(v)))
    if v[k] == 0:
        raise InvalidGeometry("zero vector has no projective normalization")
    return v / v[k]


def projective_equal(u, v, tol=1e-10):
    """True when ``u`` and ``v`` represent the same projective point."""
    return bool(np.max(np.abs(normalize_max(u) - normalize_max(v))) <= tol)


def projective_residual(u, v):
    """Relative distance between the lines spanned by ``u`` and ``v``.

    This is the sine of the angle between the two representatives, so it is
    scale invariant and zero iff the points coincide.
    """
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    c = abs(u @ v) / (nu * nv)
    return float(np.sqrt(max(0.0, 1.0 - min(1.0, c) ** 2)))


def scale_fit_residual(M, N):
    """``min_l ||M - l N|| / ||N||`` for matrices of equal shape."""
    M = np.asarray(M, dtype=float).ravel()
    N = np.asarray(N, dtype=float).ravel()
    lam = (N @ M) / (N @ N)
    return float(np.linalg.norm(M - lam * N) / np.linalg.norm(N))


def inv3(A):
    """Inverse of a 3x3 matrix through its adjugate."""
    A = np.asarray(A, dtype=float)
    adj = np.array([
        [A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1],
         A[0, 2] * A[2, 1] - A[0, 1] * A[2, 2],
         A[0, 1] * A[1, 2] - A[0, 2] * A[1, 1]],
        [A[1, 2] * A[2, 0] - A[1, 0] * A[2, 2],
         A[0, 0] * A[2, 2] - A[0, 2] * A[2, 0],
         A[0, 2] * A[1, 0] - A[0, 0] * A[1, 2]],
        [A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0],
         A[0, 1] * A[2, 0] - A[0, 0] * A[2, 1],
         A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]],
    ])
    det = A[0] @ adj[:, 0]
    return adj / det


def skew(v):
    """Cross-product matrix ``[v]_x``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


# -- types -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProjectivePoint3:
    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).reshape(4)
        if not np.any(np.abs(c) > 0) or not np.all(np.isfinite(c)):
            raise InvalidGeometry("a projective point needs finite, not-all-zero coordinates")
        c.flags.writeable = False
        object.__setattr__(self, "coords", c)

    @classmethod
    def from_affine(cls, xyz):
        return cls(np.append(np.asarray(xyz, dtype=float), 1.0))

    def affine(self):
        w = self.coords[3]
        if abs(w) <= DEHOM_TOL * np.max(np.abs(self.coords)):
            raise InvalidGeometry("point at infinity has no affine coordinates")
        return self.coords[:3] / w

    def normalized(self):
        return normalize_max(self.coords)

    def __eq__(self, other):
        if not isinstance(other, ProjectivePoint3):
            return NotImplemented
        return projective_equal(self.coords, other.coords)

    def __repr__(self):
        return f"ProjectivePoint3({np.array2string(self.coords, precision=6)})"


@dataclass(frozen=True, eq=False)
class ImagePoint:
    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).reshape(3)
        if not np.any(np.abs(c) > 0):
            raise InvalidGeometry("image point has all-zero coordinates")
        c.flags.writeable = False
        object.__setattr__(self, "coords", c)

    @classmethod
    def from_affine(cls, xy):
        return cls(np.append(np.asarray(xy, dtype=float), 1.0))

    @property
    def is_finite(self):
        return abs(self.coords[2]) > DEHOM_TOL * np.max(np.abs(self.coords))

    def affine(self):
        if not self.is_finite:
            raise InvalidGeometry("image point at infinity has no affine coordinates")
        return self.coords[:2] / self.coords[2]

    def __eq__(self, other):
        if not isinstance(other, ImagePoint):
            return NotImplemented
        return projective_equal(self.coords, other.coords)


@dataclass(frozen=True, eq=False)
class Camera:
    """Pinhole camera given by a full-rank 3x4 matrix."""

    matrix: np.ndarray
    center: ProjectivePoint3 = field(init=False)

    def __post_init__(self):
        P = np.array(self.matrix, dtype=float)
        if P.shape != (3, 4) or not np.all(np.isfinite(P)):
            raise InvalidGeometry(f"camera matrix must be finite 3x4, got {P.shape}")
        _, s, vt = np.linalg.svd(P)
        if s[-1] <= RANK_TOL * s[0]:
            raise InvalidGeometry("camera matrix is rank deficient")
        P.flags.writeable = False
        object.__setattr__(self, "matrix", P)
        object.__setattr__(self, "center", ProjectivePoint3(vt[-1]))

    @classmethod
    def from_krt(cls, K, R, t):
        return cls(np.asarray(K, float) @ np.hstack([np.asarray(R, float), np.reshape(t, (3, 1))]))


@dataclass(frozen=True, eq=False)
class Plane:
    """Plane ``{X : pi . X = 0}`` in projective 3-space."""

    pi: np.ndarray

    def __post_init__(self):
        p = np.array(self.pi, dtype=float).reshape(4)
        if not np.any(np.abs(p) > 0) or not np.all(np.isfinite(p)):
            raise InvalidGeometry("plane covector must be finite and nonzero")
        p.flags.writeable = False
        object.__setattr__(self, "pi", p)

    @classmethod
    def from_point_normal(cls, point, normal):
        n = np.asarray(normal, dtype=float)
        return cls(np.append(n, -n @ np.asarray(point, dtype=float)))

    def incidence(self, X):
        """Normalized incidence ``|pi . X| / (|pi| |X|)``."""
        X = X.coords if isinstance(X, ProjectivePoint3) else np.asarray(X, dtype=float)
        return float(abs(self.pi @ X) / (np.linalg.norm(self.pi) * np.linalg.norm(X)))

    def distance(self, xyz):
        """Euclidean distance of affine points to the plane (finite planes only)."""
        n = self.pi[:3]
        nn = np.linalg.norm(n)
        if nn == 0:
            raise InvalidGeometry("plane at infinity has no Euclidean distance")
        xyz = np.asarray(xyz, dtype=float)
        return np.abs(xyz @ n + self.pi[3]) / nn


@dataclass(frozen=True, eq=False)
class PlaneChart:
    plane: Plane
    basis: np.ndarray

    def __post_init__(self):
        U = np.array(self.basis, dtype=float)
        if U.shape != (4, 3):
            raise InvalidGeometry("chart basis must be 4x3")
        s = np.linalg.svd(U, compute_uv=False)
        if s[-1] <= RANK_TOL * s[0]:
            raise InvalidGeometry("chart basis is rank deficient")
        pi = self.plane.pi
        if np.max(np.abs(pi @ U)) > RANK_TOL * np.linalg.norm(pi) * s[0]:
            raise InvalidGeometry("chart basis columns are not on the plane")
        U.flags.writeable = False
        object.__setattr__(self, "basis", U)

    def embed(self, y):
        """Plane point ``U y`` for chart coordinates ``y`` (homogeneous 3-vector)."""
        return ProjectivePoint3(self.basis @ np.asarray(y, dtype=float))

    def coordinates(self, X):
        """Inverse of :meth:`embed` for a point on the plane (least squares)."""
        X = X.coords if isinstance(X, ProjectivePoint3) else np.asarray(X, dtype=float)
        return np.linalg.lstsq(self.basis, X, rcond=None)[0]

    def with_gauge(self, G):
        """Same plane, basis changed to ``U G``."""
        return PlaneChart(self.plane, self.basis @ np.asarray(G, dtype=float))


def make_chart(plane):
    """Deterministic orthonormal basis of the plane's kernel.

    Gram-Schmidt on the standard basis vectors, visited from the one least
    aligned with ``pi`` to the most aligned; the most aligned is dropped.
    """
    n = plane.pi / np.linalg.norm(plane.pi)
    order = np.argsort(np.abs(n), kind="stable")
    cols = []
    for k in order[:3]:
        v = np.zeros(4)
        v[k] = 1.0
        v -= (n @ v) * n
        for c in cols:
            v -= (c @ v) * c
        v /= np.linalg.norm(v)
        cols.append(v)
    return PlaneChart(plane, np.column_stack(cols))


@dataclass(frozen=True, eq=False)
class CameraRig:
    cameras: tuple
    chart: PlaneChart

    def __post_init__(self):
        cams = tuple(c if isinstance(c, Camera) else Camera(c) for c in self.cameras)
        if len(cams) < 2:
            raise InvalidGeometry("a rig needs at least two cameras")
        centers = [normalize_max(c.center.coords) for c in cams]
        for i in range(len(centers)):
            for j in range(i):
                if projective_residual(centers[i], centers[j]) < RANK_TOL:
                    raise InvalidGeometry(f"cameras {j} and {i} share a center")
        pi = self.chart.plane
        for i, c in enumerate(cams):
            if pi.incidence(c.center) <= RANK_TOL:
                raise InvalidGeometry(f"center of camera {i} lies on the plane")
        object.__setattr__(self, "cameras", cams)

    @property
    def m(self):
        return len(self.cameras)

    @property
    def plane(self):
        return self.chart.plane


@dataclass(frozen=True, eq=False)
class HomographySet:
    """Plane-induced maps ``A_i = C_i U`` and transfers ``H_ji = A_j A_i^-1``."""

    a: tuple
    a_inv: tuple

    @property
    def m(self):
        return len(self.a)

    def transfer(self, j, i):
        return self.a[j] @ self.a_inv[i]


def build_homographies(rig):
    a, a_inv = [], []
    U = rig.chart.basis
    for i, cam in enumerate(rig.cameras):
        A = cam.matrix @ U
        A.flags.writeable = False
        det = np.linalg.det(A)
        if abs(det) <= RANK_TOL * np.linalg.norm(A, 2) ** 3:
            raise NearSingularHomography(f"A_{i} is singular: camera {i} center is near the plane")
        Ai = inv3(A)
        Ai.flags.writeable = False
        a.append(A)
        a_inv.append(Ai)
    return HomographySet(tuple(a), tuple(a_inv))


# -- operations --------------------------------------------------------------


def project(camera, X):
    """Image of ``X`` under ``camera`` as a homogeneous :class:`ImagePoint`."""
    Xc = X.coords if isinstance(X, ProjectivePoint3) else np.asarray(X, dtype=float)
    x = camera.matrix @ Xc
    if np.linalg.norm(x) < PROJECTION_TOL * np.linalg.norm(camera.matrix, 2) * np.linalg.norm(Xc):
        raise CenterProjection("point coincides with the camera center")
    return ImagePoint(x)


def backproject_to_plane(camera, x, plane):
    """Intersection of the viewing ray of ``x`` with ``plane``."""
    xc = x.coords if isinstance(x, ImagePoint) else np.asarray(x, dtype=float)
    xc = xc / np.linalg.norm(xc)
    P = camera.matrix / np.linalg.norm(camera.matrix)
    pi = plane.pi / np.linalg.norm(plane.pi)
    M = np.vstack([skew(xc) @ P, pi])
    _, s, vt = np.linalg.svd(M)
    if s[2] <= RANK_TOL * s[0]:
        raise LineInPlane("viewing ray is contained in the plane")
    return ProjectivePoint3(vt[-1])


def nullity(M, tol=RANK_TOL):
    """Dimension of the (numerical) null space of ``M``."""
    M = np.asarray(M, dtype=float)
    s = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(s > tol * s[0]))
    return M.shape[1] - rank


def multidegree_point_count(camera, x, plane):
    """Number of plane points projecting to ``x``: nullity of ray + plane system.

    A nullity of one is a single projective point; this certifies
    ``D(2, 0, ..., 0) = 1`` for a generic ``x``.
    """
    xc = x.coords if isinstance(x, ImagePoint) else np.asarray(x, dtype=float)
    M = np.vstack([skew(xc / np.linalg.norm(xc)) @ camera.matrix, plane.pi])
    return nullity(M)


def multidegree_lines_count(cam1, line1, cam2, line2, plane):
    """Number of plane points whose images lie on ``line1`` and ``line2``.

    Back-projected planes ``l1^T C1`` and ``l2^T C2`` together with ``pi``
    form a 3x4 system; nullity one certifies ``D(1, 1, 0, ..., 0) = 1``.
    """
    M = np.vstack([
        np.asarray(line1, float) @ cam1.matrix,
        np.asarray(line2, float) @ cam2.matrix,
        plane.pi,
    ])
    M = M / np.linalg.norm(M, axis=1, keepdims=True)
    return nullity(M)


def random_camera(rng, low=-1.0, high=1.0):
    """Camera with i.i.d. uniform entries, resampled until full rank."""
    while True:
        P = rng.uniform(low, high, size=(3, 4))
        s = np.linalg.svd(P, compute_uv=False)
        if s[-1] > 1e-3 * s[0]:
            return Camera(P)
