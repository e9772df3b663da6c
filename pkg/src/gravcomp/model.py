"""Geometric and elastostatic model of a spring gravity compensator on joint 2.

The compensator is a triangle P0-P1-P2: P2 sits on the joint-2 axis, P1 rotates
with link 2 at distance ``L`` from P2, P0 is fixed on link 1 at distance
``a = |(a_x, a_y)|`` from P2, and the spring spans P0-P1 with length ``s(q2)``.

Units follow the measurement data: lengths in mm, forces in N, torques in N*mm,
angles in rad.  ``K_c`` is a spring *rate* (N/mm).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, Iterable, NamedTuple, Sequence

from ._validation import DOMAIN_TOL, clamp_unit
from .exceptions import DataError, DegenerateGeometryError, DomainError

__all__ = [
    "CompensatorGeometry",
    "SpringParameters",
    "JointStiffnessConfig",
    "CompensatorState",
    "CurveRow",
    "CURVE_HEADER",
    "REFERENCE_GEOMETRY",
    "REFERENCE_SPRING",
    "REFERENCE_JOINT",
    "spring_length",
    "compensator_force",
    "link_angle_phi",
    "compensator_torque",
    "eta_coefficient",
    "equivalent_joint_stiffness",
    "compensator_state",
    "compliance_curve",
    "write_curve_csv",
]


@dataclass(frozen=True)
class CompensatorGeometry:
    """Compensator geometry: offset ``(a_x, a_y)`` of P2 from P0 and crank length ``L``."""

    a_x: float
    a_y: float
    L: float

    def __post_init__(self):
        for name in ("a_x", "a_y", "L"):
            if not math.isfinite(getattr(self, name)):
                raise DataError(f"{name} must be finite")
        if self.L <= 0:
            raise DataError(f"L must be positive, got {self.L}")
        if math.hypot(self.a_x, self.a_y) <= 0:
            raise DataError("a = |(a_x, a_y)| must be positive")

    @property
    def a(self) -> float:
        return math.hypot(self.a_x, self.a_y)

    @property
    def alpha(self) -> float:
        return math.atan2(self.a_y, self.a_x)

    @classmethod
    def from_polar(cls, a: float, alpha: float, L: float) -> "CompensatorGeometry":
        return cls(a * math.cos(alpha), a * math.sin(alpha), L)


@dataclass(frozen=True)
class SpringParameters:
    """Spring rate ``K_c`` (N/mm) and free length ``s0`` (mm)."""

    K_c: float
    s0: float

    def __post_init__(self):
        if not (math.isfinite(self.K_c) and math.isfinite(self.s0)):
            raise DataError("spring parameters must be finite")
        # K_c == 0 models a removed compensator
        if self.K_c < 0:
            raise DataError(f"K_c must be non-negative, got {self.K_c}")
        if self.s0 < 0:
            raise DataError(f"s0 must be non-negative, got {self.s0}")

    @classmethod
    def from_compliance(cls, k_c: float, s0: float, unit_scale: float = 1.0) -> "SpringParameters":
        """Build from a compliance value; ``K_c = unit_scale / k_c``.

        ``unit_scale=1e3`` reads ``k_c`` in um/N and yields N/mm.
        """
        if k_c <= 0:
            raise DataError(f"compliance must be positive, got {k_c}")
        return cls(unit_scale / k_c, s0)


@dataclass(frozen=True)
class JointStiffnessConfig:
    """Baseline rotational stiffness of joint 2 without the compensator (N*mm/rad)."""

    K_theta2_0: float

    def __post_init__(self):
        if not (math.isfinite(self.K_theta2_0) and self.K_theta2_0 > 0):
            raise DataError(f"K_theta2_0 must be positive, got {self.K_theta2_0}")

    @classmethod
    def from_compliance(cls, k_2: float, unit_scale: float = 1.0) -> "JointStiffnessConfig":
        """``unit_scale=1e9`` reads ``k_2`` in urad/(N*m) and yields N*mm/rad."""
        if k_2 <= 0:
            raise DataError(f"compliance must be positive, got {k_2}")
        return cls(unit_scale / k_2)


# Reference heavy-payload compensator.  Compliances are 0.144 um/N (spring) and
# 0.302 urad/(N*m) (joint 2); the unit scales below convert them to N/mm and
# N*mm/rad.  See the README for the unit reading.
REFERENCE_GEOMETRY = CompensatorGeometry(a_x=685.93, a_y=120.30, L=184.72)
REFERENCE_SPRING = SpringParameters.from_compliance(0.144, 458.0, unit_scale=1e3)
REFERENCE_JOINT = JointStiffnessConfig.from_compliance(0.302, unit_scale=1e9)


class CompensatorState(NamedTuple):
    q2: float
    s: float
    phi: float
    F_s: float
    M_c: float
    eta: float


def spring_length(geom: CompensatorGeometry, q2: float) -> float:
    """Spring length ``s = sqrt(a^2 + L^2 + 2 a L cos(alpha - q2))``."""
    a, L = geom.a, geom.L
    s2 = a * a + L * L + 2.0 * a * L * math.cos(geom.alpha - q2)
    if s2 < 0.0:
        # only reachable through rounding when a == L and the links fold
        if s2 < -DOMAIN_TOL * (a + L) ** 2:
            raise DomainError(f"negative squared spring length {s2!r}")
        s2 = 0.0
    return math.sqrt(s2)


def compensator_force(spring: SpringParameters, s: float) -> float:
    """Linear spring force ``K_c (s - s0)``; negative when compressed below ``s0``."""
    if s < 0:
        raise DataError(f"spring length must be non-negative, got {s}")
    return spring.K_c * (s - spring.s0)


def link_angle_phi(geom: CompensatorGeometry, q2: float, s: float | None = None) -> float:
    """Angle between the spring P0-P1 and the crank P1-P2 (principal asin branch)."""
    if s is None:
        s = spring_length(geom, q2)
    if s <= 0:
        raise DegenerateGeometryError("spring length is zero; link angle undefined")
    return math.asin(clamp_unit(geom.a / s * math.sin(geom.alpha - q2), what="sin(phi)"))


def compensator_torque(geom: CompensatorGeometry, spring: SpringParameters, q2: float) -> float:
    """Torque applied by the compensator to joint 2 (N*mm)."""
    s = spring_length(geom, q2)
    if s <= 0:
        raise DegenerateGeometryError("spring length is zero; torque undefined")
    return spring.K_c * (1.0 - spring.s0 / s) * geom.a * geom.L * math.sin(geom.alpha - q2)


def eta_coefficient(geom: CompensatorGeometry, spring: SpringParameters, q2: float) -> float:
    """Dimensionless factor mapping ``K_c a L`` to the joint-2 stiffness contribution.

    Equals ``dM_c/dq2 / (K_c a L)``.
    """
    s = spring_length(geom, q2)
    if s <= 0:
        raise DegenerateGeometryError("spring length is zero; eta undefined")
    d = geom.alpha - q2
    c, sn = math.cos(d), math.sin(d)
    return spring.s0 / s * (geom.a * geom.L / (s * s) * sn * sn + c) - c


def equivalent_joint_stiffness(
    geom: CompensatorGeometry,
    spring: SpringParameters,
    cfg: JointStiffnessConfig,
    q2: float,
) -> float:
    """Joint-2 stiffness including the compensator, ``K0 + K_c a L eta(q2)``."""
    return cfg.K_theta2_0 + spring.K_c * geom.a * geom.L * eta_coefficient(geom, spring, q2)


def compensator_state(geom: CompensatorGeometry, spring: SpringParameters, q2: float) -> CompensatorState:
    s = spring_length(geom, q2)
    return CompensatorState(
        q2=q2,
        s=s,
        phi=link_angle_phi(geom, q2, s),
        F_s=compensator_force(spring, s),
        M_c=compensator_torque(geom, spring, q2),
        eta=eta_coefficient(geom, spring, q2),
    )


class CurveRow(NamedTuple):
    q2: float
    s0: float
    eta: float
    K_theta2: float
    compliance: float
    unstable: bool


CURVE_HEADER = ("q2_deg", "s0_mm", "eta", "K_theta2", "compliance")


def compliance_curve(
    geom: CompensatorGeometry,
    spring: SpringParameters,
    cfg: JointStiffnessConfig,
    q2_grid: Iterable[float],
    s0_list: Sequence[float] | None = None,
) -> list[CurveRow]:
    """Tabulate eta, joint stiffness and compliance over ``q2_grid`` x ``s0_list``.

    ``s0_list`` defaults to the spring's own free length.  Rows with a
    non-positive stiffness are kept and marked ``unstable``; their compliance is
    ``inf`` when the stiffness is exactly zero.
    """
    q2_grid = [float(q) for q in q2_grid]
    if not q2_grid:
        raise DataError("q2 grid is empty")
    s0_values = [spring.s0] if s0_list is None else [float(v) for v in s0_list]
    if not s0_values:
        raise DataError("s0 list is empty")
    rows = []
    for s0 in s0_values:
        sp = SpringParameters(spring.K_c, s0)
        for q2 in q2_grid:
            eta = eta_coefficient(geom, sp, q2)
            k = cfg.K_theta2_0 + sp.K_c * geom.a * geom.L * eta
            compliance = 1.0 / k if k != 0 else math.inf
            rows.append(CurveRow(q2, s0, eta, k, compliance, k <= 0))
    return rows


def write_curve_csv(rows: Iterable[CurveRow], fh: IO[str]) -> None:
    """Write curve rows with the ``q2_deg,s0_mm,eta,K_theta2,compliance`` header."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CURVE_HEADER)
    for r in rows:
        writer.writerow([repr(math.degrees(r.q2)), repr(r.s0), repr(r.eta), repr(r.K_theta2), repr(r.compliance)])
