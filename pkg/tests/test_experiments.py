"""
Tests de los chequeos que arman los subcomandos
"""

import numpy as np

from experiments.bayes import bayes_rows
from experiments.dmz import dmz_checks
from experiments.properties import determinism_check, stream_independence_check
from fbsfilter.export import TRACE_HEADER
from fbsfilter.suite import run_particles, simulate_truth


def test_bayes_rows_follow_path(scenario):
    ensemble = run_particles(scenario, simulate_truth(scenario).WY.increments.values)
    path = scenario.paths[0]
    rows = bayes_rows(ensemble, scenario.test_functions[0], path)
    assert len(rows) == len(path)
    assert set(rows[0]) == set(TRACE_HEADER)
    assert all(0 < row["n_eff"] <= ensemble.size + 1e-9 for row in rows)


def test_dmz_checks_cover_both_cases(scenario):
    checks = dmz_checks(scenario, sigmas=5.0)
    assert [c.name for c in checks] == [
        "dmz_full_identity", "dmz_full_one", "dmz_reduced_identity", "dmz_reduced_one",
    ]
    assert all(np.isfinite(c.statistic) for c in checks)


def test_determinism_check(scenario):
    assert determinism_check(scenario).passed


def test_stream_independence(scenario):
    assert stream_independence_check(scenario.master_seed, 5.0).passed
