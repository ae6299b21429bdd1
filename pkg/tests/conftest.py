import sys
from pathlib import Path

import numpy as np
import pytest

from backscatter_rti import pipeline
from backscatter_rti.config import load_run_config
from backscatter_rti.geometry import Point3, build_grid

ROOT = Path(__file__).resolve().parents[1]
LAB_CFG = ROOT / "configs" / "lab_scene.cfg"


@pytest.fixture(scope="session")
def lab_cfg():
    return load_run_config(LAB_CFG)


@pytest.fixture(scope="session")
def lab_model(lab_cfg):
    return pipeline.build_model(lab_cfg)


@pytest.fixture
def grid2x2():
    return build_grid(Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 0, 1), 2, 2, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
