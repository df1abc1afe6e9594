import re
import warnings
from collections import defaultdict
from dataclasses import replace

import pytest

from tailwave.profiles import RadialProfile
from tailwave.solver import RunConfig, evolve

# reference data for the acceptance runs (g is only C^2 at its edge)
REF_G = RadialProfile("poly_bump", 1.0, 1.0, 3)
REF = RunConfig(p=3, epsilon=0.05, f=RadialProfile.zero(), g=REF_G, N=8000, t_final=100.0,
                observers=(0.5, 1.0, 2.0))
NONGEN = replace(REF, f=RadialProfile("poly_bump", 1.0, 1.0, 4), g=RadialProfile.zero())


@pytest.fixture(scope="session")
def ref_config():
    return REF


def _run(config):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return evolve(config)


@pytest.fixture(scope="session")
def ref_run():
    return _run(REF)


@pytest.fixture(scope="session")
def eps_runs(ref_run):
    """Reference data at eps = 0.05, 0.1, 0.2."""
    return {0.05: ref_run, 0.1: _run(replace(REF, epsilon=0.1)), 0.2: _run(replace(REF, epsilon=0.2))}


@pytest.fixture(scope="session")
def nongen_run():
    return _run(NONGEN)


@pytest.fixture(scope="session")
def linear_runs():
    """Linear evolutions of the full field at N = 2000, 4000, 8000."""
    base = replace(REF, nonlinear=False, formulation="full", N=2000)
    return [_run(replace(base, N=n, r_max=base.resolved_r_max)) for n in (2000, 4000, 8000)]


# ---- one pass/fail line per acceptance criterion in the terminal summary

_AC = defaultdict(list)
_AC_NAME = re.compile(r"test_ac(\d+)_")


def pytest_runtest_logreport(report):
    m = _AC_NAME.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _AC[int(m.group(1))].append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _AC:
        return
    terminalreporter.section("acceptance criteria")
    for ac in sorted(_AC):
        results = _AC[ac]
        ok = all(outcome == "passed" for _, outcome in results)
        names = ", ".join(f"{name}={outcome}" for name, outcome in results)
        terminalreporter.write_line(f"AC-{ac}: {'PASS' if ok else 'FAIL'}  ({names})")
