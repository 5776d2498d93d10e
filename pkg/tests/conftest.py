import hypothesis
import pytest

from convexcell import NetworkConfig

hypothesis.settings.register_profile(
    "suite", max_examples=25, deadline=None, derandomize=True
)
hypothesis.settings.load_profile("suite")


@pytest.fixture
def tiny_config():
    """Small, fast config for unit tests; class counts [54, 3, 3]."""
    return NetworkConfig(
        area_side=1000.0,
        macro_density=3.0,
        small_density=12.0,
        user_count=60,
        trials=3,
        seed=7,
    )
