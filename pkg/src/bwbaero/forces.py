"""Body-frame/wind-frame coefficient algebra and panel-sum integration.

Pointwise pressure and friction coefficients aggregate into body-frame
force coefficients, rotate into the wind frame through the angle of
attack, then sum over panel areas into lift, drag and pitching moment.
All reductions run in fixed index order so results are bitwise
reproducible; above 100k panels an exactly rounded sum is used instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError

_COMPENSATED_THRESHOLD = 100_000
_UNIT_TOL = 1e-6


@dataclass(frozen=True)
class IntegratedCoefficients:
    """Integrated lift, drag and nose-referenced pitching moment."""

    cl: float
    cd: float
    cmy: float
    a_ref: float = 1.0
    c_ref: float = 1.0

    def __post_init__(self):
        if not (self.a_ref > 0.0 and self.c_ref > 0.0):
            raise DomainError("a_ref and c_ref must be positive")


def _fixed_order_sum(values: np.ndarray) -> float:
    """Deterministic reduction: sequential index order, exact above threshold."""
    if values.size > _COMPENSATED_THRESHOLD:
        return math.fsum(values)
    if values.size == 0:
        return 0.0
    return float(np.cumsum(values)[-1])


def body_frame_coefficients(cp, cf, normal) -> np.ndarray:
    """Body-frame force coefficients C_i = -cp * n_i + cf_i, i in {x,y,z}.

    Accepts a single point (scalar cp, 3-vectors) or N points (shape (N,)
    and (N,3)); the result matches the input arrangement.
    """
    cp = np.asarray(cp, dtype=float)
    cf = np.asarray(cf, dtype=float)
    normal = np.asarray(normal, dtype=float)
    single = normal.ndim == 1
    cf2 = np.atleast_2d(cf)
    n2 = np.atleast_2d(normal)
    if cf2.shape[-1] != 3 or n2.shape[-1] != 3:
        raise ShapeError("cf and normal must have 3 components")
    norms = np.linalg.norm(n2, axis=-1)
    if np.any(np.abs(norms - 1.0) > _UNIT_TOL):
        raise DomainError("normal must be unit length within 1e-6")
    out = -cp.reshape(-1, 1) * n2 + cf2
    return out[0] if single else out


def wind_frame(cx, cz, alpha: float):
    """Rotate body-frame (cx, cz) into wind-frame (cd, cl); alpha in degrees."""
    a = math.radians(alpha)
    if not math.isfinite(a):
        raise DomainError("alpha must be finite")
    ca, sa = math.cos(a), math.sin(a)
    cd = cx * ca + cz * sa
    cl = -cx * sa + cz * ca
    return cd, cl


def _pointwise_wind(cloud, fields, alpha: float):
    """Per-point (cd, cl) arrays for a cloud with aligned fields."""
    n = cloud.n_points
    if len(fields.cp) != n:
        raise ShapeError(f"fields have {len(fields.cp)} points, cloud has {n}")
    cf = np.column_stack([fields.cfx, fields.cfy, fields.cfz])
    body = body_frame_coefficients(fields.cp, cf, cloud.normals)
    return wind_frame(body[:, 0], body[:, 2], alpha)


def integrate_forces(cloud, fields, alpha: float, a_ref: float = 1.0):
    """Area-weighted lift and drag coefficients: (cl, cd)."""
    cd_pts, cl_pts = _pointwise_wind(cloud, fields, alpha)
    cl = _fixed_order_sum(cl_pts * cloud.areas) / a_ref
    cd = _fixed_order_sum(cd_pts * cloud.areas) / a_ref
    return cl, cd


def integrate_moment(cloud, fields, ref_point=(0.0, 0.0, 0.0),
                     a_ref: float = 1.0, c_ref: float = 1.0) -> float:
    """Pitching-moment coefficient about ref_point (default: the nose at the origin)."""
    n = cloud.n_points
    if len(fields.cp) != n:
        raise ShapeError(f"fields have {len(fields.cp)} points, cloud has {n}")
    cf = np.column_stack([fields.cfx, fields.cfy, fields.cfz])
    body = body_frame_coefficients(fields.cp, cf, cloud.normals)
    ref = np.asarray(ref_point, dtype=float)
    dx = cloud.points[:, 0] - ref[0]
    dz = cloud.points[:, 2] - ref[2]
    terms = body[:, 0] * cloud.areas * dz - body[:, 2] * cloud.areas * dx
    return _fixed_order_sum(terms) / (a_ref * c_ref)


def integrate_case(cloud, fields, alpha: float, ref_point=(0.0, 0.0, 0.0),
                   a_ref: float = 1.0, c_ref: float = 1.0) -> IntegratedCoefficients:
    """All three integrated coefficients for one case."""
    cl, cd = integrate_forces(cloud, fields, alpha, a_ref=a_ref)
    cmy = integrate_moment(cloud, fields, ref_point=ref_point, a_ref=a_ref, c_ref=c_ref)
    return IntegratedCoefficients(cl=cl, cd=cd, cmy=cmy, a_ref=a_ref, c_ref=c_ref)
