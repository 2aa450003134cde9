import pytest

from conformal_tiling.assembly import assemble
from conformal_tiling.discrete_conformal import flatten, tile_quad
from conformal_tiling.goldilocks import solve_cstar
from conformal_tiling.patch_mesher import mesh_patch

C_REF = -0.2411
ACCEPTANCE_RESULTS = []


@pytest.fixture(scope="session")
def ref_patch():
    return mesh_patch(C_REF)


@pytest.fixture(scope="session")
def ref_flat(ref_patch):
    return flatten(ref_patch)


@pytest.fixture(scope="session")
def ref_tiles(ref_patch, ref_flat):
    return tile_quad(ref_patch, ref_flat)


@pytest.fixture(scope="session")
def ref_surface(ref_patch, ref_tiles):
    return assemble(ref_patch, ref_tiles)


@pytest.fixture(scope="session")
def cstar_report():
    return solve_cstar()


@pytest.fixture(scope="session")
def small_patch():
    # about 50 vertices
    return mesh_patch(C_REF, 0.2)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {number} {name}: {'PASS' if ok else 'FAIL'}  {detail}")
