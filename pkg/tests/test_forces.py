import math

import numpy as np
import pytest

from bwbaero.dataio import FieldQuad
from bwbaero.errors import DomainError, ShapeError
from bwbaero.forces import (
    IntegratedCoefficients,
    body_frame_coefficients,
    integrate_case,
    integrate_forces,
    integrate_moment,
    wind_frame,
)
from bwbaero.geometry import SurfaceCloud

from conftest import random_cloud_fields


def single_panel_cloud(point=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0), area=1.0):
    return SurfaceCloud(points=np.array([point], dtype=float),
                        normals=np.array([normal], dtype=float),
                        areas=np.array([area], dtype=float))


class TestBodyFrame:
    def test_pressure_pushes_against_normal(self):
        out = body_frame_coefficients(1.0, (0.0, 0.0, 0.0), (0.0, 0.0, 1.0))
        assert np.array_equal(out, [0.0, 0.0, -1.0])

    def test_friction_passes_through(self):
        out = body_frame_coefficients(0.0, (0.01, 0.0, 0.0), (0.0, 0.0, 1.0))
        assert np.array_equal(out, [0.01, 0.0, 0.0])

    def test_combined(self):
        out = body_frame_coefficients(2.0, (0.003, 0.0, 0.001), (0.0, 0.0, 1.0))
        assert out == pytest.approx([0.003, 0.0, -1.999], rel=1e-14)

    def test_non_unit_normal_rejected(self):
        with pytest.raises(DomainError):
            body_frame_coefficients(1.0, (0.0, 0.0, 0.0), (0.0, 0.0, 1.1))

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(0)
        cp = rng.standard_normal(50)
        cf = rng.standard_normal((50, 3))
        n = rng.standard_normal((50, 3))
        n /= np.linalg.norm(n, axis=1, keepdims=True)
        batch = body_frame_coefficients(cp, cf, n)
        for i in range(50):
            assert np.array_equal(batch[i], body_frame_coefficients(cp[i], cf[i], n[i]))


class TestWindFrame:
    def test_identity_at_zero_alpha(self):
        cd, cl = wind_frame(0.01, 0.5, 0.0)
        assert (cd, cl) == (0.01, 0.5)

    def test_quarter_turn_swap(self):
        cd, cl = wind_frame(0.01, 0.5, 90.0)
        assert cd == pytest.approx(0.5, abs=1e-12)
        assert cl == pytest.approx(-0.01, abs=1e-12)

    def test_ten_degree_case(self):
        # Independent trig evaluation of the rotation.
        a = math.radians(10.0)
        expected_cd = 0.01 * math.cos(a) + 0.5 * math.sin(a)
        expected_cl = -0.01 * math.sin(a) + 0.5 * math.cos(a)
        cd, cl = wind_frame(0.01, 0.5, 10.0)
        assert cd == pytest.approx(expected_cd, rel=1e-12)
        assert cl == pytest.approx(expected_cl, rel=1e-12)

    def test_magnitude_preserved(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            cx, cz = rng.standard_normal(2)
            alpha = rng.uniform(-180.0, 180.0)
            cd, cl = wind_frame(cx, cz, alpha)
            assert cd * cd + cl * cl == pytest.approx(cx * cx + cz * cz, rel=1e-12)

    def test_non_finite_alpha(self):
        with pytest.raises(DomainError):
            wind_frame(0.1, 0.2, math.inf)


class TestIntegrateForces:
    def test_zero_fields(self, midpoint_cloud):
        fields = FieldQuad.zeros(midpoint_cloud.n_points)
        assert integrate_forces(midpoint_cloud, fields, alpha=5.0) == (0.0, 0.0)

    def test_single_panel(self):
        # alpha=0 so local (cd, cl) = (Cx, Cz); cp=-0.5 gives Cz=0.5, cfx gives Cx=0.1.
        cloud = single_panel_cloud(area=2.0)
        fields = FieldQuad(cp=np.array([-0.5]), cfx=np.array([0.1]),
                           cfy=np.zeros(1), cfz=np.zeros(1))
        cl, cd = integrate_forces(cloud, fields, alpha=0.0, a_ref=1.0)
        assert (cl, cd) == pytest.approx((1.0, 0.2), rel=1e-15)

    def test_uniform_cp_closed_surface(self, midpoint_cloud):
        n = midpoint_cloud.n_points
        fields = FieldQuad(cp=np.ones(n), cfx=np.zeros(n), cfy=np.zeros(n), cfz=np.zeros(n))
        tol = 1e-3 * midpoint_cloud.total_area
        for alpha in (0.0, 7.0, -12.0):
            cl, cd = integrate_forces(midpoint_cloud, fields, alpha)
            assert abs(cl) <= tol and abs(cd) <= tol

    def test_length_mismatch(self, midpoint_cloud):
        fields = FieldQuad.zeros(midpoint_cloud.n_points - 1)
        with pytest.raises(ShapeError):
            integrate_forces(midpoint_cloud, fields, alpha=0.0)

    def test_linearity(self, midpoint_cloud):
        rng = np.random.default_rng(5)
        f1 = random_cloud_fields(midpoint_cloud, rng)
        f2 = random_cloud_fields(midpoint_cloud, rng)
        a, b = 0.37, -1.2
        combo = FieldQuad(cp=a * f1.cp + b * f2.cp, cfx=a * f1.cfx + b * f2.cfx,
                          cfy=a * f1.cfy + b * f2.cfy, cfz=a * f1.cfz + b * f2.cfz)
        cl_c, cd_c = integrate_forces(midpoint_cloud, combo, alpha=4.0)
        cl1, cd1 = integrate_forces(midpoint_cloud, f1, alpha=4.0)
        cl2, cd2 = integrate_forces(midpoint_cloud, f2, alpha=4.0)
        assert cl_c == pytest.approx(a * cl1 + b * cl2, rel=1e-12, abs=1e-14)
        assert cd_c == pytest.approx(a * cd1 + b * cd2, rel=1e-12, abs=1e-14)

    def test_z_mirror_alpha_flip(self, midpoint_cloud):
        # Mirroring the cloud and fields in z while negating alpha flips cl
        # and preserves cd.
        rng = np.random.default_rng(9)
        fields = random_cloud_fields(midpoint_cloud, rng)
        flip = np.array([1.0, 1.0, -1.0])
        mirrored = SurfaceCloud(points=midpoint_cloud.points * flip,
                                normals=midpoint_cloud.normals * flip,
                                areas=midpoint_cloud.areas)
        m_fields = FieldQuad(cp=fields.cp, cfx=fields.cfx,
                             cfy=fields.cfy, cfz=-fields.cfz)
        alpha = 6.0
        cl, cd = integrate_forces(midpoint_cloud, fields, alpha)
        cl_m, cd_m = integrate_forces(mirrored, m_fields, -alpha)
        assert cl_m == pytest.approx(-cl, rel=1e-12)
        assert cd_m == pytest.approx(cd, rel=1e-12)


class TestIntegrateMoment:
    def test_zero_fields(self, midpoint_cloud):
        fields = FieldQuad.zeros(midpoint_cloud.n_points)
        assert integrate_moment(midpoint_cloud, fields) == 0.0

    def test_single_panel_lever_arm(self):
        # Cz=1 at dx=1: C_My = -Cz * A * dx = -1.
        cloud = single_panel_cloud(point=(1.0, 0.0, 0.0))
        fields = FieldQuad(cp=np.array([-1.0]), cfx=np.zeros(1),
                           cfy=np.zeros(1), cfz=np.zeros(1))
        assert integrate_moment(cloud, fields) == pytest.approx(-1.0, rel=1e-15)

    def test_pure_couple(self):
        # Equal and opposite Cz at +/- dx: lift cancels, moment = -2 Cz A dx.
        points = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
        normals = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]])
        cloud = SurfaceCloud(points=points, normals=normals, areas=np.ones(2))
        fields = FieldQuad(cp=np.array([-1.0, 1.0]), cfx=np.zeros(2),
                           cfy=np.zeros(2), cfz=np.zeros(2))
        cl, _ = integrate_forces(cloud, fields, alpha=0.0)
        cmy = integrate_moment(cloud, fields)
        assert cl == 0.0
        assert cmy == pytest.approx(-2.0, rel=1e-15)

    def test_reference_point_shift(self, midpoint_cloud):
        rng = np.random.default_rng(12)
        fields = random_cloud_fields(midpoint_cloud, rng)
        m0 = integrate_moment(midpoint_cloud, fields, ref_point=(0.0, 0.0, 0.0))
        m1 = integrate_moment(midpoint_cloud, fields, ref_point=(0.5, 0.0, 0.0))
        # Shifting the reference adds +dx_ref * sum(Cz_i A_i).
        from bwbaero.forces import body_frame_coefficients
        cf = np.column_stack([fields.cfx, fields.cfy, fields.cfz])
        body = body_frame_coefficients(fields.cp, cf, midpoint_cloud.normals)
        cz_total = float(np.sum(body[:, 2] * midpoint_cloud.areas))
        assert m1 - m0 == pytest.approx(0.5 * cz_total, rel=1e-10)


class TestBruteForceEquivalence:
    def test_loop_oracle_matches_vectorized(self, midpoint_cloud):
        # Naive per-point Python loop, sequential accumulation in index order.
        rng = np.random.default_rng(100)
        for trial in range(10):
            fields = random_cloud_fields(midpoint_cloud, rng)
            alpha = float(rng.uniform(-10.0, 20.0))
            a = math.radians(alpha)
            ca, sa = math.cos(a), math.sin(a)
            acc_cl = acc_cd = acc_cm = 0.0
            for i in range(midpoint_cloud.n_points):
                nx, ny, nz = midpoint_cloud.normals[i]
                cp = fields.cp[i]
                cx = -cp * nx + fields.cfx[i]
                cz = -cp * nz + fields.cfz[i]
                area = midpoint_cloud.areas[i]
                acc_cd += (cx * ca + cz * sa) * area
                acc_cl += (-cx * sa + cz * ca) * area
                x, _, z = midpoint_cloud.points[i]
                acc_cm += cx * area * z - cz * area * x
            cl, cd = integrate_forces(midpoint_cloud, fields, alpha)
            cmy = integrate_moment(midpoint_cloud, fields)
            assert cl == pytest.approx(acc_cl, rel=1e-12)
            assert cd == pytest.approx(acc_cd, rel=1e-12)
            assert cmy == pytest.approx(acc_cm, rel=1e-12)


def test_integrated_coefficients_reference_validation():
    with pytest.raises(DomainError):
        IntegratedCoefficients(cl=0.0, cd=0.0, cmy=0.0, a_ref=0.0)


def test_integrate_case_bundles_all_three(midpoint_cloud):
    rng = np.random.default_rng(2)
    fields = random_cloud_fields(midpoint_cloud, rng)
    ic = integrate_case(midpoint_cloud, fields, alpha=3.0)
    cl, cd = integrate_forces(midpoint_cloud, fields, alpha=3.0)
    assert (ic.cl, ic.cd) == (cl, cd)
    assert ic.cmy == integrate_moment(midpoint_cloud, fields)
