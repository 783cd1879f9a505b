import pytest

from lsmlab.farfield import svd
from lsmlab.forward import assemble_far_field_matrix
from lsmlab.geometry import BoundaryCurve, Scatterer, build_direction_grid, two_circles

# filled by test_acceptance, printed at the end of the session
ACCEPTANCE_RESULTS = {}


@pytest.fixture(scope="session")
def grid60():
    return build_direction_grid(60)


@pytest.fixture(scope="session")
def unit_circle():
    return Scatterer((BoundaryCurve.circle(1.0),))


@pytest.fixture(scope="session")
def unit_circle_matrix(unit_circle, grid60):
    return assemble_far_field_matrix(unit_circle, 1.0, grid60, 128)


@pytest.fixture(scope="session")
def fig1_matrix(grid60):
    return assemble_far_field_matrix(two_circles(2.0), 1.0, grid60, 128)


@pytest.fixture(scope="session")
def fig2_matrix(grid60):
    return assemble_far_field_matrix(two_circles(1.5), 1.0, grid60, 128)


@pytest.fixture(scope="session")
def fig1_svd(fig1_matrix):
    return svd(fig1_matrix)


@pytest.fixture(scope="session")
def fig2_svd(fig2_matrix):
    return svd(fig2_matrix)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
