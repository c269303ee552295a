import numpy as np
import pytest

from spvlad.datamodel import ImageRecord


def random_record(rng, n_regions=None, dim=6, width=None, height=None, image_id="img", f32=False):
    """A valid ImageRecord with random boxes inside the frame."""
    width = width or int(rng.integers(20, 800))
    height = height or int(rng.integers(20, 800))
    n = n_regions or int(rng.integers(1, 40))
    w = rng.uniform(0.5, width, n)
    h = rng.uniform(0.5, height, n)
    x = rng.uniform(0, 1, n) * (width - w)
    y = rng.uniform(0, 1, n) * (height - h)
    boxes = np.column_stack([x, y, w, h])
    feats = rng.standard_normal((n, dim))
    if f32:
        boxes = boxes.astype(np.float32).astype(np.float64)
        feats = feats.astype(np.float32)
    return ImageRecord.from_arrays(image_id, width, height, boxes, feats)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_acceptance = {}


def pytest_runtest_logreport(report):
    marker = report.keywords.get("acceptance")
    if marker is None:
        return
    if report.when == "call" or report.outcome != "passed":
        name = report.nodeid.split("::")[-1]
        prev = _acceptance.get(name, "PASS")
        _acceptance[name] = "PASS" if report.passed and prev == "PASS" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance):
        terminalreporter.write_line(f"{_acceptance[name]}  {name}")
