import numpy as np
import pytest

from bwbaero.geometry import CstSection, PlanformParams, sample_surface


@pytest.fixture(scope="session")
def midpoint_params():
    return PlanformParams.midpoint()


@pytest.fixture(scope="session")
def midpoint_cloud(midpoint_params):
    return sample_surface(midpoint_params, CstSection(), n_chord=36, n_span=20,
                          mirror=True, geometry_id="mid")


def random_cloud_fields(cloud, rng):
    """Random but finite fields aligned with a cloud."""
    from bwbaero.dataio import FieldQuad
    n = cloud.n_points
    return FieldQuad(cp=rng.standard_normal(n),
                     cfx=0.01 * rng.standard_normal(n),
                     cfy=0.01 * rng.standard_normal(n),
                     cfz=0.01 * rng.standard_normal(n))
