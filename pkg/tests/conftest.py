import pytest

from orbitpool.images import ImageSpec, synthesize


@pytest.fixture(scope="session")
def gauss():
    """Unit-width Gaussian at the origin on the default grid."""
    return synthesize(ImageSpec(kind="gaussian", sigma=1.0, margin=0.5))


@pytest.fixture(scope="session")
def gauss_off():
    """Narrow off-centre Gaussian that stays inside the grid under [0, 1]^2 pooling."""
    return synthesize(ImageSpec(kind="gaussian", sigma=0.5, center=(-0.5, -0.5), margin=0.2))


@pytest.fixture(scope="session")
def gabor():
    return synthesize(
        ImageSpec(kind="gabor", sigma=0.7, center=(0.3, -0.2), frequency=0.5, orientation=0.4, margin=0.5)
    )


# acceptance criterion -> PASS/FAIL line, filled by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
