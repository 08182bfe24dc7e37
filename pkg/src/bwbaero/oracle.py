"""Synthetic surface-field generator standing in for an external CFD corpus.

Desk-scale training and evaluation need ground-truth pointwise fields; this
module supplies a smooth analytic pseudo-physics with the right qualitative
structure and magnitudes:

    psi     = (x - LE(y)) / c(y)                       local chord fraction
    twist   = -TWIST_MAX * (|y| / semispan) * (mean_sweep / 50 deg)
    Cp      = -A0 * (1 - (2 psi - 1)^2) * sin(alpha + twist)
              * sign(n_z) * (1 + A1 * Mach^2) + A2 * n_z
    Cfx     = B0 * Re^(-1/5) * (psi + B1)^(-1/5)
    Cfz     = B2 * Cfx * n_z
    Cfy     = B2 * Cfx * n_y

Upper-surface suction grows with the local effective incidence, so the
integrated lift rises monotonically with alpha over the sampled range;
friction follows a flat-plate-like Reynolds and chordwise decay, two to
three orders smaller than Cp. Everything is smooth in (alpha, Mach,
planform parameters), giving the neural surrogates a learnable target.
Deterministic unless ``noise`` is positive.
"""

from __future__ import annotations

import numpy as np

from .atmosphere import FlightCondition, freestream
from .dataio import FieldQuad
from .errors import DomainError
from .geometry import PlanformParams, SurfaceCloud, build_planform

A0 = 1.2    # Cp magnitude
A1 = 0.5    # Mach-squared amplification
A2 = 0.05   # normal-direction Cp offset
B0 = 0.06   # Cf magnitude
B1 = 0.05   # leading-edge clip of the chordwise friction decay
B2 = 0.3    # friction projection onto the normal components

TWIST_MAX_DEG = 2.0   # spanwise washout proxy at the tip
SWEEP_NORM_DEG = 50.0


def synthetic_field_oracle(cloud: SurfaceCloud, flight: FlightCondition,
                           params: PlanformParams, seed: int = 0,
                           noise: float = 0.0) -> FieldQuad:
    """Analytic pointwise (Cp, Cfx, Cfy, Cfz) for a sampled surface.

    ``noise`` adds zero-mean Gaussian perturbations scaled per channel
    (seeded); the default 0.0 keeps the fields fully deterministic.
    """
    stations = build_planform(params)
    y_abs = np.abs(cloud.points[:, 1])
    le = np.interp(y_abs, stations.y, stations.le_x)
    chord = np.interp(y_abs, stations.y, stations.chord)
    psi = np.clip((cloud.points[:, 0] - le) / chord, 0.0, 1.0)

    fs = freestream(flight)
    if fs.reynolds_number <= 0.0:
        raise DomainError("synthetic fields need a positive Reynolds number (Mach > 0)")

    alpha = np.radians(flight.alpha)
    mean_sweep = (params.s1 + params.s2 + params.s3) / 3.0
    twist = (-np.radians(TWIST_MAX_DEG) * (y_abs / stations.semispan)
             * (mean_sweep / SWEEP_NORM_DEG))
    nz = cloud.normals[:, 2]
    ny = cloud.normals[:, 1]

    bump = 1.0 - (2.0 * psi - 1.0) ** 2
    cp = (-A0 * bump * np.sin(alpha + twist) * np.sign(nz)
          * (1.0 + A1 * flight.mach ** 2) + A2 * nz)
    cfx = B0 * fs.reynolds_number ** (-0.2) * (psi + B1) ** (-0.2)
    cfz = B2 * cfx * nz
    cfy = B2 * cfx * ny

    if noise > 0.0:
        rng = np.random.default_rng(seed)
        cp = cp + noise * rng.standard_normal(cp.shape)
        scale = noise * float(np.mean(cfx))
        cfx = cfx + scale * rng.standard_normal(cfx.shape)
        cfy = cfy + scale * rng.standard_normal(cfy.shape)
        cfz = cfz + scale * rng.standard_normal(cfz.shape)
    return FieldQuad(cp=cp, cfx=cfx, cfy=cfy, cfz=cfz)
