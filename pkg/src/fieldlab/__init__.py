"""fieldlab: numerical experiments on retarded potentials and surface terms.

The package computes electromagnetic potentials and fields of compactly
supported sources by direct retarded-time quadrature, reconstructs fields
from boundary data through a collapsed time-domain surface integral, and
measures far-field scaling laws.  Everything is deterministic for a fixed
configuration, independent of worker count.
"""

__version__ = "0.1.0"

from .errors import (
    CurlUnavailable,
    FieldlabError,
    GeometryViolation,
    MeshTooCoarse,
    NonPositiveSample,
    ParseError,
    QuadratureNotConverged,
    ValidationError,
)
from .sources import (
    GaussianChargeSource,
    HertzianDipoleSource,
    RotatingPolarizationSource,
    SourceModel,
    SpacetimePoint,
    SuperposedSource,
    UnitSystem,
)
from .quadrature import (
    FourPotentialSample,
    PotentialJacobian,
    QuadratureSpec,
    potential_jacobian,
    retarded_potential,
    retarded_time,
)
from .fields import (
    FieldSample,
    GaugeFunction,
    field_from_potential,
    field_source_term,
    gauge_transform,
    lorenz_residual,
)
from .spheremesh import SphereMesh, build_sphere_mesh, refine_faces
from .kirchhoff import (
    BoundaryFieldData,
    CancellationReport,
    DecompositionReport,
    collapsed_kirchhoff_contribution,
    decompose_field,
    exterior_cancellation,
    reconstruct_in_shell,
    sample_boundary_data,
)
from .scaling import (
    BeamMap,
    PowerLawFit,
    RadialSweep,
    ScalingReport,
    SweepResult,
    beam_solid_angle,
    find_beam_peak,
    fit_power_law,
    geometric_radii,
    gradient_sweep,
    sweep_field,
)
from .validate import (
    OnsetReport,
    ResidualGrid,
    WaveResidualReport,
    dalembertian_residual_A,
    dalembertian_residual_B,
    initial_condition_check,
)
from .scenario import Scenario, build_source, parse_scenario
from .runner import RunResult, run_scenario

__all__ = [
    "__version__",
    # errors
    "FieldlabError", "CurlUnavailable", "QuadratureNotConverged", "MeshTooCoarse",
    "GeometryViolation", "NonPositiveSample", "ParseError", "ValidationError",
    # sources
    "UnitSystem", "SpacetimePoint", "SourceModel", "RotatingPolarizationSource",
    "HertzianDipoleSource", "GaussianChargeSource", "SuperposedSource",
    # quadrature
    "QuadratureSpec", "FourPotentialSample", "PotentialJacobian",
    "retarded_time", "retarded_potential", "potential_jacobian",
    # fields
    "FieldSample", "GaugeFunction", "field_from_potential", "field_source_term",
    "gauge_transform", "lorenz_residual",
    # sphere meshes
    "SphereMesh", "build_sphere_mesh", "refine_faces",
    # surface terms
    "BoundaryFieldData", "CancellationReport", "DecompositionReport",
    "sample_boundary_data", "collapsed_kirchhoff_contribution",
    "reconstruct_in_shell", "exterior_cancellation", "decompose_field",
    # scaling
    "PowerLawFit", "RadialSweep", "ScalingReport", "SweepResult", "BeamMap",
    "fit_power_law", "sweep_field", "gradient_sweep", "beam_solid_angle",
    "find_beam_peak", "geometric_radii",
    # validation
    "ResidualGrid", "WaveResidualReport", "OnsetReport",
    "dalembertian_residual_A", "dalembertian_residual_B", "initial_condition_check",
    # scenarios
    "Scenario", "parse_scenario", "build_source", "RunResult", "run_scenario",
]
