import pytest

from bwbaero.atmosphere import (
    FlightCondition,
    freestream,
    reynolds_number,
    standard_atmosphere,
    sutherland_viscosity,
)
from bwbaero.errors import DomainError

# Published 1976 standard-atmosphere values used as the oracle.
SEA_LEVEL_T = 288.15       # K
SEA_LEVEL_RHO = 1.2250     # kg/m^3
SEA_LEVEL_A = 340.29       # m/s
SEA_LEVEL_MU = 1.7894e-5   # Pa s
TROPOPAUSE_T = 216.65      # K at 11 km = 36.089 kft


def test_sea_level():
    t, rho, mu, a = standard_atmosphere(0.0)
    assert t == pytest.approx(SEA_LEVEL_T, rel=1e-3)
    assert rho == pytest.approx(SEA_LEVEL_RHO, rel=1e-3)
    assert a == pytest.approx(SEA_LEVEL_A, rel=1e-3)
    assert mu == pytest.approx(SEA_LEVEL_MU, rel=1e-3)


def test_tropopause_temperature():
    t, _, _, _ = standard_atmosphere(36.089)
    assert t == pytest.approx(TROPOPAUSE_T, rel=1e-3)


def test_density_decreases_with_altitude():
    _, rho0, _, _ = standard_atmosphere(0.0)
    _, rho40, _, _ = standard_atmosphere(40.0)
    assert rho40 < rho0


def test_temperature_constant_above_tropopause():
    t1, _, _, _ = standard_atmosphere(38.0)
    t2, _, _, _ = standard_atmosphere(45.0)
    assert t1 == pytest.approx(t2, rel=1e-12)


def test_altitude_domain():
    with pytest.raises(DomainError):
        standard_atmosphere(-1.0)
    with pytest.raises(DomainError):
        standard_atmosphere(48.0)


def test_sutherland_increases_with_temperature():
    assert sutherland_viscosity(300.0) > sutherland_viscosity(250.0)


def test_reynolds_zero_at_mach_zero():
    fc = FlightCondition(altitude=10.0, mach=0.0, reynolds_length=1.0, alpha=0.0)
    assert reynolds_number(fc) == 0.0


def test_reynolds_linear_in_length():
    fc1 = FlightCondition(altitude=5.0, mach=0.3, reynolds_length=1.0, alpha=2.0)
    fc2 = FlightCondition(altitude=5.0, mach=0.3, reynolds_length=2.0, alpha=2.0)
    assert reynolds_number(fc2) == pytest.approx(2.0 * reynolds_number(fc1), rel=1e-15)


def test_reynolds_sea_level_oracle():
    # rho * (M a) * L / mu with published sea-level values
    expected = SEA_LEVEL_RHO * (0.3 * SEA_LEVEL_A) * 1.0 / SEA_LEVEL_MU
    fc = FlightCondition(altitude=0.0, mach=0.3, reynolds_length=1.0, alpha=0.0)
    assert reynolds_number(fc) == pytest.approx(expected, rel=1e-2)


def test_freestream_consistency():
    fc = FlightCondition(altitude=20.0, mach=0.4, reynolds_length=3.0, alpha=5.0)
    fs = freestream(fc)
    assert fs.reynolds_number == pytest.approx(
        fs.density * fc.mach * fs.speed_of_sound * fc.reynolds_length
        / fs.dynamic_viscosity, rel=1e-15)
    assert fs.temperature > 0 and fs.density > 0
    assert fs.dynamic_viscosity > 0 and fs.speed_of_sound > 0


def test_flight_condition_bounds():
    FlightCondition(altitude=0.0, mach=0.05, reynolds_length=0.1, alpha=-10.0).validate_bounds()
    FlightCondition(altitude=40.0, mach=0.5, reynolds_length=10.0, alpha=20.0).validate_bounds()
    with pytest.raises(DomainError, match="mach"):
        FlightCondition(altitude=10.0, mach=0.7, reynolds_length=1.0, alpha=0.0).validate_bounds()


def test_flight_condition_array_round_trip():
    fc = FlightCondition(altitude=12.0, mach=0.33, reynolds_length=4.5, alpha=-3.0)
    assert FlightCondition.from_array(fc.as_array()) == fc
