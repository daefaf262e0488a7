import math

import pytest

from app.models.physics import PhysicalParams
from app.services.master_service import build_liouvillian, steady_state_numeric
from app.services.trajectory_service import TrajectoryService

STRONG_R = 1.0 / math.pi


@pytest.fixture
def far_params():
    """Fringe-rich geometry, r = 10 wavelengths, Omega = 0.3 A"""
    return PhysicalParams.driven(0.3, 10.0)


@pytest.fixture
def independent_params(far_params):
    return far_params.model_copy(update={"include_coupling": False})


@pytest.fixture
def strong_params():
    return PhysicalParams.driven(0.3, STRONG_R)


@pytest.fixture
def independent_steady_state(independent_params):
    return steady_state_numeric(build_liouvillian(independent_params))


@pytest.fixture
def small_service():
    return TrajectoryService(batch_size=64, max_workers=1)
