import time

import pytest

from qbarrier import load_config
from qbarrier.cli import bundled_config_path, run_job

# every bundled row the acceptance criteria touch; executed once per session
CIRCUIT_RUNS = [
    "zgate3_finite",
    "zgate3_finite_t8",
    "zgate3_infinite",
    "zgate4_infinite",
    "zgate5_infinite",
    "tgate3_infinite",
    "tgate4_infinite",
    "tgate5_infinite",
    "cnot2_infinite",
    "czgate2_infinite",
    "swap2_infinite",
    "altcxcz2_infinite",
    "cxcz2_infinite",
    "hadamard1_infinite",
    "hadamard1_finite_t1",
    "hadamard1_finite_t2",
    "xgate1_finite_t1",
    "xgate2_infinite",
    "xgate2_finite_t1",
    "groverfull2_infinite",
]


@pytest.fixture(scope="session")
def bundled_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("bundled")
    out = {}
    for name in CIRCUIT_RUNS:
        job = load_config(bundled_config_path(name))
        t0 = time.perf_counter()
        report = run_job(job, base / name)
        out[name] = (report, time.perf_counter() - t0)
    return out


def passline(ok: bool, label: str):
    print(f"{'PASS' if ok else 'FAIL'}: {label}")
    return ok
