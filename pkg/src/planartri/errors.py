"""Exception types raised across the package."""


class PlanarTriError(Exception):
    """Base class for all errors raised by planartri."""


class InvalidGeometry(PlanarTriError, ValueError):
    """A geometric object violates its construction invariants."""


class NearSingularHomography(PlanarTriError, ValueError):
    """A plane-induced homography is numerically singular.

    Happens when a camera center lies (almost) on the anchor plane.
    """


class CenterProjection(PlanarTriError, ValueError):
    """Projection of a camera's own center."""


class LineInPlane(PlanarTriError, ValueError):
    """The back-projected ray of an image point lies inside the plane."""


class ChartSingularity(PlanarTriError, ValueError):
    """A chart point maps to the line at infinity of some view."""

    def __init__(self, view, message=None):
        self.view = view
        super().__init__(message or f"chart point maps to infinity in view {view}")


class SingularJacobian(PlanarTriError, ArithmeticError):
    """Newton iteration hit a (numerically) singular Jacobian."""


class NoRealSolution(PlanarTriError, RuntimeError):
    """No real, in-domain critical point was found."""


class SolverIncomplete(PlanarTriError, RuntimeError):
    """Too many homotopy paths failed to certify a global minimum."""


class LocalSearchFailed(PlanarTriError, RuntimeError):
    """Local descent did not reach the gradient tolerance."""


class DegenerateGeometry(PlanarTriError, ValueError):
    """Viewing rays are (nearly) parallel; the point is not determined."""


class InvalidViewCount(PlanarTriError, ValueError):
    """Fewer than two views."""


class UnderdeterminedFit(PlanarTriError, ValueError):
    """Not enough distinct abscissae for the requested fit."""


class GenericitySamplingFailed(PlanarTriError, RuntimeError):
    """Rejection sampling could not produce a generic configuration."""


class ZeroNoiseMetric(PlanarTriError, ValueError):
    """The relative error metric is undefined at zero noise."""


class IdenticalCenters(PlanarTriError, ValueError):
    """Two cameras share a center; epipolar geometry is undefined."""


class DegenerateSample(PlanarTriError, RuntimeError):
    """RANSAC could not draw a non-degenerate minimal sample."""


class InsufficientSupport(PlanarTriError, RuntimeError):
    """A detected plane has fewer members than required."""


class InsufficientInput(PlanarTriError, ValueError):
    """The input scene lacks data required by the operation."""


class SceneFormatError(PlanarTriError, ValueError):
    """A scene document is malformed or violates its invariants."""
