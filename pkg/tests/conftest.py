"""Shared fixtures: a small synthetic scene reused across test modules."""

import pytest

from sirec.synth import SceneConfig, generate_dataset


@pytest.fixture(scope="session")
def small_scene():
    return SceneConfig()


@pytest.fixture(scope="session")
def small_train(small_scene):
    # 4 rows per (material, class, fine fill) cell: 120 rows total
    return generate_dataset(small_scene, 4, seed=1)


@pytest.fixture(scope="session")
def small_test(small_scene):
    return generate_dataset(small_scene, 2, seed=2)
