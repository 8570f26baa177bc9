import numpy as np

from torsion_flow.solver import IntegratorOptions
from torsion_flow.verify import (
    closed_form_suite,
    convergence_suite,
    gradient_suite,
    monotonicity_suite,
    oracle_suite,
    reduction_suite,
    reeb_suite,
    repelling_suite,
    run_all,
    scaling_suite,
    start_grid,
)


def test_start_grid_covers_the_box():
    grid = start_grid()
    assert len(grid) == 25
    assert min(a for a, _ in grid) == -2.0
    assert max(a for a, _ in grid) == 2.0
    assert min(c for _, c in grid) == 0.25
    assert max(c for _, c in grid) == 4.0


def test_identity_suites_pass():
    rng = np.random.default_rng(3)
    for suite in (oracle_suite, scaling_suite, reeb_suite, reduction_suite):
        result = suite(200, rng)
        assert result.passed, result.failures[:3]
        assert result.cases == 200


def test_closed_form_suite_covers_every_start():
    result = closed_form_suite(IntegratorOptions())
    assert result.cases == 15
    assert result.passed, result.failures


def test_normalized_dynamics_suites():
    opts = IntegratorOptions()
    converging = convergence_suite(opts)
    assert converging.cases == 28
    assert converging.passed, converging.failures
    repelling = repelling_suite(opts)
    assert repelling.cases == 25
    assert repelling.passed, repelling.failures


def test_monotonicity_suite_runs_all_flows_on_both_groups():
    result = monotonicity_suite(IntegratorOptions())
    assert result.cases == 8
    assert result.passed, result.failures


def test_einstein_hilbert_gradient_identity_on_random_structures():
    result = gradient_suite(50, np.random.default_rng(7), IntegratorOptions())
    assert result.cases == 50
    assert result.passed, result.failures[:3]


def test_run_all_lists_every_suite():
    report = run_all(seed=0, cases=3)
    names = [suite.name for suite in report.suites]
    assert names == [
        "oracle equivalence",
        "scaling laws",
        "reeb derivative",
        "normalized reduction",
        "frame invariance",
        "closed-form agreement",
        "convergence",
        "repelling dynamics",
        "monotonicity",
        "gradient identity",
    ]
    assert report.passed
    assert report.lines()[-1] == "all suites pass"
