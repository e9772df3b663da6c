"""Identification and stiffness analysis of spring gravity compensators.

The core is functional (``fit_arc``, ``fit_concentric``, ``calibrate``,
``plan_joint_angles`` ...); :mod:`gravcomp.estimators` wraps the fits as
scikit-learn estimators.
"""

from importlib import resources

__version__ = "0.1.0"

from .arcfit import ArcFitResult, MarkerTrace, fit_arc, residual_of, winding_sense
from .axisfit import AxisFitResult, fit_concentric
from .doe import (
    ExperimentPlan,
    cov_center,
    make_plan,
    plan_joint_angles,
    plan_marker_angles,
    trig_objective,
    variance_mu,
)
from .exceptions import (
    CalibrationWarning,
    DataError,
    DegenerateGeometryError,
    DomainError,
    FitError,
    GravCompError,
    NumericalError,
    PlanningError,
)
from .model import (
    REFERENCE_GEOMETRY,
    REFERENCE_JOINT,
    REFERENCE_SPRING,
    CompensatorGeometry,
    JointStiffnessConfig,
    SpringParameters,
    compensator_force,
    compensator_state,
    compensator_torque,
    compliance_curve,
    equivalent_joint_stiffness,
    eta_coefficient,
    link_angle_phi,
    spring_length,
)
from .pipeline import CalibrationInput, CalibrationReport, calibrate, ingest_measurements, report_to_json
from .uncertainty import UncertaintyConfig, linearized_covariance, monte_carlo_bounds


def reference_measurements_path():
    """Path of the bundled reference measurement CSV (six joint angles, three markers)."""
    return resources.files(__name__) / "data" / "reference_measurements.csv"


def load_reference_measurements(**kwargs) -> CalibrationInput:
    """Ingest the bundled reference measurements; ``kwargs`` go to :func:`ingest_measurements`."""
    with resources.as_file(reference_measurements_path()) as path:
        return ingest_measurements(path, **kwargs)


__all__ = [
    "ArcFitResult",
    "AxisFitResult",
    "CalibrationInput",
    "CalibrationReport",
    "CalibrationWarning",
    "CompensatorGeometry",
    "DataError",
    "DegenerateGeometryError",
    "DomainError",
    "ExperimentPlan",
    "FitError",
    "GravCompError",
    "JointStiffnessConfig",
    "MarkerTrace",
    "NumericalError",
    "PlanningError",
    "REFERENCE_GEOMETRY",
    "REFERENCE_JOINT",
    "REFERENCE_SPRING",
    "SpringParameters",
    "UncertaintyConfig",
    "calibrate",
    "compensator_force",
    "compensator_state",
    "compensator_torque",
    "compliance_curve",
    "cov_center",
    "equivalent_joint_stiffness",
    "eta_coefficient",
    "fit_arc",
    "fit_concentric",
    "ingest_measurements",
    "linearized_covariance",
    "link_angle_phi",
    "load_reference_measurements",
    "make_plan",
    "monte_carlo_bounds",
    "plan_joint_angles",
    "plan_marker_angles",
    "reference_measurements_path",
    "report_to_json",
    "residual_of",
    "spring_length",
    "trig_objective",
    "variance_mu",
    "winding_sense",
]
