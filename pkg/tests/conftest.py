import pytest


def pytest_addoption(parser):
    parser.addoption(
        "--full",
        action="store_true",
        default=False,
        help="run the acceptance protocols at publication scale (slow)",
    )


@pytest.fixture(scope="session")
def full_profile(request) -> bool:
    return request.config.getoption("--full")
