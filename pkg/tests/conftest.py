import numpy as np
import pytest

from ecis import kernels
from ecis._backend import NUMBA_AVAILABLE
from ecis.core import PixelImage

# Acceptance lines collected by tests/test_acceptance.py, echoed in the summary.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def camera():
    skdata = pytest.importorskip("skimage.data")
    return PixelImage.from_array(skdata.camera())


@pytest.fixture(scope="session")
def camera_crop(camera):
    # 96x96 patch with both texture and flat regions
    return PixelImage.from_array(camera.pixels[200:296, 200:296])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# parametrization over the available kernel implementations
BACKENDS = ["numpy"] + (["numba"] if NUMBA_AVAILABLE else [])


def backend_fns(name):
    prefix = "np_" if name == "numpy" else "nb_"
    return {
        fn: getattr(kernels, prefix + fn)
        for fn in ("splitmix_fill", "gaussian_fill", "select_uniform", "select_weighted", "derange", "block_mapping", "next_uniform", "omp")
    }
