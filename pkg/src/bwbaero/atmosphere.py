"""Freestream state: US Standard Atmosphere 1976 plus Sutherland viscosity.

Covers the troposphere and the lower isothermal stratosphere, which is
enough for the 0-40 kft flight envelope (the reader is capped at 47 kft).
The Reynolds number is never sampled directly; it is recovered from the
freestream state and the chosen Reynolds length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

# Flight-condition sampling bounds.
FLIGHT_BOUNDS: dict[str, tuple[float, float]] = {
    "altitude": (0.0, 40.0),        # kft
    "mach": (0.05, 0.5),
    "reynolds_length": (0.1, 10.0),  # m
    "alpha": (-10.0, 20.0),          # deg
}

FLIGHT_NAMES: tuple[str, ...] = tuple(FLIGHT_BOUNDS)

KFT_TO_M = 304.8
MAX_ALTITUDE_KFT = 47.0

# ISA 1976 sea level and layer constants.
_T0 = 288.15           # K
_P0 = 101325.0         # Pa
_R = 287.0528          # J/(kg K)
_G = 9.80665           # m/s^2
_LAPSE = 0.0065        # K/m, troposphere
_H_TROPOPAUSE = 11000.0  # m
_GAMMA = 1.4

# Sutherland's law for air.
_MU_REF = 1.716e-5     # Pa s
_T_REF = 273.15        # K
_S_SUTH = 110.4        # K


@dataclass(frozen=True)
class FlightCondition:
    """One aerodynamic case: altitude (kft), Mach, Reynolds length (m), alpha (deg)."""

    altitude: float
    mach: float
    reynolds_length: float
    alpha: float

    def __post_init__(self):
        for name in FLIGHT_NAMES:
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"flight condition {name} must be finite")

    def validate_bounds(self) -> None:
        bad = []
        for name, (lo, hi) in FLIGHT_BOUNDS.items():
            v = getattr(self, name)
            if not (lo <= v <= hi):
                bad.append(f"{name}={v} outside [{lo}, {hi}]")
        if bad:
            raise DomainError("flight condition out of bounds: " + "; ".join(bad))

    def as_array(self):
        return [getattr(self, n) for n in FLIGHT_NAMES]

    @classmethod
    def from_array(cls, values) -> "FlightCondition":
        values = list(values)
        if len(values) != len(FLIGHT_NAMES):
            raise DomainError(f"expected {len(FLIGHT_NAMES)} flight values, got {len(values)}")
        return cls(**dict(zip(FLIGHT_NAMES, map(float, values))))


@dataclass(frozen=True)
class FreestreamState:
    temperature: float        # K
    density: float            # kg/m^3
    dynamic_viscosity: float  # Pa s
    speed_of_sound: float     # m/s
    reynolds_number: float    # from mach, reynolds_length


def sutherland_viscosity(temperature: float) -> float:
    """Dynamic viscosity of air (Pa s) from Sutherland's law."""
    return (_MU_REF * (temperature / _T_REF) ** 1.5
            * (_T_REF + _S_SUTH) / (temperature + _S_SUTH))


def standard_atmosphere(altitude_kft: float) -> tuple[float, float, float, float]:
    """(temperature, density, viscosity, speed of sound) at a geopotential altitude.

    Lapse-rate troposphere below 11 km, isothermal above; supported up to
    47 kft which stays inside the isothermal layer.
    """
    if not (0.0 <= altitude_kft <= MAX_ALTITUDE_KFT):
        raise DomainError(f"altitude {altitude_kft} kft outside supported [0, {MAX_ALTITUDE_KFT}]")
    h = altitude_kft * KFT_TO_M
    if h <= _H_TROPOPAUSE:
        t = _T0 - _LAPSE * h
        p = _P0 * (t / _T0) ** (_G / (_LAPSE * _R))
    else:
        t = _T0 - _LAPSE * _H_TROPOPAUSE
        p_tropo = _P0 * (t / _T0) ** (_G / (_LAPSE * _R))
        p = p_tropo * math.exp(-_G * (h - _H_TROPOPAUSE) / (_R * t))
    rho = p / (_R * t)
    return t, rho, sutherland_viscosity(t), math.sqrt(_GAMMA * _R * t)


def freestream(fc: FlightCondition) -> FreestreamState:
    """Full freestream state including the post-computed Reynolds number."""
    t, rho, mu, a = standard_atmosphere(fc.altitude)
    re = rho * (fc.mach * a) * fc.reynolds_length / mu
    return FreestreamState(temperature=t, density=rho, dynamic_viscosity=mu,
                           speed_of_sound=a, reynolds_number=re)


def reynolds_number(fc: FlightCondition) -> float:
    return freestream(fc).reynolds_number
