import os
import time
from pathlib import Path

import pytest

from picard3 import cli
from picard3 import forms_engine as fe
from picard3 import picard_curves as pc
from picard3.nf_core import LABELS
from picard3.sunit_solver import solve_all

# criterion number -> (passed, detail), filled in by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}")


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory) -> Path:
    """Shared pipeline cache. PICARD3_TEST_CACHE lets a child pytest run
    reuse the results of the parent run."""
    env = os.environ.get("PICARD3_TEST_CACHE")
    if env:
        return Path(env)
    return tmp_path_factory.mktemp("picard3_cache")


@pytest.fixture(scope="session")
def sunit_results(cache_dir):
    """label -> (SolveResult, seconds) for every field."""
    out = {}
    for label in LABELS:
        t = time.perf_counter()
        res = solve_all(label, cache_dir=cache_dir / "sunits")
        out[label] = (res, time.perf_counter() - t)
    return out


@pytest.fixture(scope="session")
def solutions(sunit_results):
    return {k: v[0].solutions for k, v in sunit_results.items()}


@pytest.fixture(scope="session")
def run_config(cache_dir, sunit_results):
    return cli.RunConfig("forms4", cache_dir=cache_dir)


@pytest.fixture(scope="session")
def f4_results(run_config):
    """system name -> F4Result, through the cached forms4 stage."""
    return {name: cli.stage_forms4(run_config, name) for name in fe.SYSTEMS}


@pytest.fixture(scope="session")
def blocks(solutions):
    return pc.enumerate_all(solutions)
