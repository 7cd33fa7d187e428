"""Acceptance battery: each criterion at its stated tolerance.

Every criterion prints one ``PASS``/``FAIL`` line with its measured summary.
The configurations live in :data:`roughfio.experiments.ACCEPTANCE`.
"""

import json
import time
import warnings

import pytest

from roughfio.experiments import ACCEPTANCE, run_criterion

pytestmark = pytest.mark.slow


def _short(summary):
    return json.dumps(summary, default=str, sort_keys=True)


@pytest.mark.parametrize("criterion", sorted(ACCEPTANCE))
def test_criterion(criterion, capsys):
    start = time.time()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        outcomes = run_criterion(criterion)
    passed = all(o.passed for o in outcomes)
    elapsed = time.time() - start
    with capsys.disabled():
        status = "PASS" if passed else "FAIL"
        parts = "; ".join(f"{o.name}={'pass' if o.passed else 'fail'} {_short(o.summary)}" for o in outcomes)
        print(f"\ncriterion {criterion:2d}: {status} ({elapsed:.0f} s) {parts}")
    assert passed, [(o.name, o.summary) for o in outcomes if not o.passed]
