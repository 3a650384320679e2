import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import numpy as np

ACCEPTANCE_RESULTS = {}


def record_acceptance(number, name, passed):
    ACCEPTANCE_RESULTS[number] = (name, bool(passed))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        name, passed = ACCEPTANCE_RESULTS[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number} ({name}): {verdict}")


def finite_difference(f, arrays, h=1e-5):
    """Central-difference gradients of a scalar function of numpy arrays.

    f takes the list of arrays and returns a float. Completely independent
    of the autodiff engine; used as the gradient oracle everywhere.
    """
    grads = []
    for k, arr in enumerate(arrays):
        g = np.zeros_like(arr, dtype=np.float64)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            hi = f(arrays)
            flat[i] = orig - h
            lo = f(arrays)
            flat[i] = orig
            gflat[i] = (hi - lo) / (2.0 * h)
        grads.append(g)
    return grads


def rel_error(a, b, floor=1e-6):
    """Norm-based relative difference between two gradient arrays.

    The floor absorbs central-difference noise (~1e-10 at h=1e-5) when both
    gradients are numerically zero.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = max(np.linalg.norm(a), np.linalg.norm(b), floor)
    return np.linalg.norm(a - b) / denom
