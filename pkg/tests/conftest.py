import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import adiaprep
import adiaprep.cli
import adiaprep.estimators
import adiaprep.evolution
import adiaprep.experiment

# (criterion, passed, detail) lines reported at the end of the session
ACCEPTANCE = []
# worst relative norm change of every evolve() call in the session
NORM_DRIFTS = []

_evolve = adiaprep.evolution.evolve


def _recording_evolve(h0, h1, f, plan, psi0, diagnostics=None):
    out = _evolve(h0, h1, f, plan, psi0, diagnostics=diagnostics)
    before = np.linalg.norm(np.asarray(psi0, dtype=complex).reshape(out.shape[0], -1), axis=0)
    after = np.linalg.norm(np.asarray(out).reshape(out.shape[0], -1), axis=0)
    ok = before > 0
    if np.any(ok):
        NORM_DRIFTS.append(float(np.max(np.abs(after[ok] / before[ok] - 1.0))))
    return out


for _module in (adiaprep, adiaprep.evolution, adiaprep.experiment, adiaprep.estimators, adiaprep.cli):
    _module.evolve = _recording_evolve


def record(criterion, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion:>2}: {detail}"
    ACCEPTANCE.append((criterion, line))
    print(line)


def pytest_collection_modifyitems(config, items):
    # acceptance runs last so the unitarity check sees the whole suite
    items.sort(key=lambda item: item.get_closest_marker("acceptance") is not None)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE, key=lambda x: x[0]):
        terminalreporter.write_line(line)
