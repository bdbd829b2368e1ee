"""Optimal triangulation of points constrained to a known plane."""
from .analysis import eddeg_closed_form, eddeg_empirical, eddeg_via_euler, quadratic_fit
from .critical import solve_critical_points
from .errors import *  # noqa: F401,F403
from .geometry import (
    Camera,
    CameraRig,
    HomographySet,
    ImagePoint,
    Plane,
    PlaneChart,
    ProjectivePoint3,
    backproject_to_plane,
    build_homographies,
    make_chart,
    project,
)
from .objective import ChartPoint, Objective, build_critical_system, chart_embed, objective_eval, objective_grad
from .polysys import PathTrackerConfig, SolveReport, newton_polish, real_solutions, solve_total_degree
from .triangulate import (
    TriangulationResult,
    constrained_with_fallback_batch,
    triangulate_constrained,
    triangulate_constrained_batch,
    triangulate_constrained_fast,
    triangulate_hybrid,
    triangulate_hybrid_batch,
    triangulate_unconstrained,
)

__version__ = "0.1.0"
