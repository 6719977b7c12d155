import numpy as np
import pytest

from curbmap import (CurbParams, GroundParams, SceneSpec, VotingParams,
                     build_height_grid, extract_ground_candidates, generate_scene,
                     refine_dem, saliency_field)

# street-scene operating point: thresholds are scene-relative and these
# are the documented defaults for the synthetic street
STREET_CURB = CurbParams(plate_threshold=0.35, outlier_min_neighbors=5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240 + 7)


@pytest.fixture(scope="session")
def street_spec():
    return SceneSpec()


@pytest.fixture(scope="session")
def street_cloud(street_spec):
    return generate_scene(street_spec)


@pytest.fixture(scope="session")
def street_field(street_cloud):
    """Saliency channels over the full street scene, computed once."""
    return saliency_field(street_cloud, VotingParams(sigma=0.3), threads=2)


@pytest.fixture(scope="session")
def street_dem(street_field):
    params = GroundParams()
    ground_idx = extract_ground_candidates(street_field, params)
    height = build_height_grid(street_field.points[ground_idx], params.height_cell,
                               min_samples=params.min_samples)
    refined = refine_dem(height, params.coarse_cell, params.refined_cell,
                         params.consistency)
    return ground_idx, refined
