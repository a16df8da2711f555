"""
tests/test_experiments.py

各実験を小さな設定で実行するテスト
"""

import os

import pytest

from dlab.errors import ConfigError
from dlab.impl.artifact_store import CHECKS_FILE

COUNTEREXAMPLE = {"c": "geometric 1/2", "tau": "loglog_sqrt", "M": [0, 3, 5, 8]}


def statuses(result):
    return {row.check: row.status for row in result.checks}


def test_sieve_checks_small(run_mapping):
    result, directory = run_mapping({
        "experiment": {"kind": "sieve-checks", "name": "sieve-small"},
        "checks": {"N": 10**5, "n_max": 2000, "interval": "1/3,2/3", "identity_n_max": 2000,
                   "witness_limit": 10**4, "elementary_n_max": 50, "residue_n_max": 40},
    })
    assert result.passed, [(row.check, row.detail) for row in result.failures]
    assert len(result.checks) == 8
    assert os.path.exists(os.path.join(directory, CHECKS_FILE))


def test_counterexample_experiment(run_mapping):
    result, _ = run_mapping({
        "experiment": {"kind": "counterexample", "name": "counterexample"},
        "counterexample": dict(COUNTEREXAMPLE, C=1),
    })
    assert result.passed
    status = statuses(result)
    assert status["Mj-advisory-1"] == "info"
    assert status["limsup-collapse"] == "pass"
    assert status["sweet-spot-series"] == "pass"
    assert [row["j"] for row in result.tables["ledger"]] == [1, 2, 3]
    assert result.summary["bound_status"] == "holds"


def test_counterexample_rejects_bad_block_count(run_mapping):
    with pytest.raises(ConfigError):
        run_mapping({
            "experiment": {"kind": "counterexample", "name": "bad-J"},
            "counterexample": dict(COUNTEREXAMPLE),
            "checks": {"J": 9},
        })
    with pytest.raises(ConfigError):
        run_mapping({
            "experiment": {"kind": "counterexample", "name": "bad-M"},
            "counterexample": {"M": [0, 1, 5]},
        })


def test_catlin_experiment(run_mapping):
    result, _ = run_mapping({
        "experiment": {"kind": "catlin", "name": "catlin"},
        "counterexample": dict(COUNTEREXAMPLE),
        "checks": {"points": 50, "point_denominator": 1000},
    })
    assert result.passed
    assert len(result.tables["series"]) >= 1


def test_catlin_rejects_closed_form_psi(run_mapping):
    with pytest.raises(ConfigError):
        run_mapping({
            "experiment": {"kind": "catlin", "name": "catlin-closed"},
            "psi": {"spec": "closed_form c=1 alpha=2"},
        })


def test_truncated_measure(run_mapping):
    result, _ = run_mapping({
        "experiment": {"kind": "truncated-measure", "name": "truncated"},
        "profile": {"spec": "full"},
        "psi": {"spec": "closed_form c=1/2 alpha=2"},
        "checks": {"N0": 0, "N1": 200, "points": 5000},
    })
    status = statuses(result)
    assert status["union-bound"] == "pass"
    assert status["monotone-in-N1"] == "pass"
    assert status["series-partial"] == "info"
    assert [row["N1"] for row in result.tables["measure"]] == [20, 100, 200]


def test_truncated_measure_certified(run_mapping):
    result, _ = run_mapping({
        "experiment": {"kind": "truncated-measure", "name": "truncated-certified"},
        "profile": {"spec": "phi"},
        "psi": {"spec": "closed_form c=1/2 alpha=2"},
        "checks": {"N0": 10, "N1": 100, "points": 2000},
    }, mode="certified")
    assert result.summary["mode"] == "certified"
    assert statuses(result)["union-bound"] == "pass"


def test_ubiquity_phi(run_mapping):
    result, _ = run_mapping({
        "experiment": {"kind": "ubiquity", "name": "ubiquity-small"},
        "profile": {"spec": "phi"},
        "scheme": {"k": 2, "t_min": 4, "t_max": 6},
        "intervals": {"dyadic_min": 1, "dyadic_max": 2},
        "checks": {"kappa_floor": "1/100"},
    })
    assert result.passed
    assert [row["t"] for row in result.tables["kappa_trajectory"]] == [4, 5, 6]
    assert result.summary["kappa_estimate"] >= result.summary["kappa_floor"]


def test_concentration_is_thread_independent(run_mapping):
    data = {
        "experiment": {"kind": "concentration", "name": "concentration-small"},
        "profile": {"spec": "phi", "sampler": "shuffle"},
        "seeds": {"master": 0, "trials": 60},
        "checks": {"hypergeometric": [10, 5, 4], "frequency_trials": 2000, "chi_square_trials": 1000,
                   "binomial_N": 200, "binomial_trials": 300, "statistic": "both", "regime": "urn",
                   "t": 5, "correlation_trials": 200},
    }
    single, _ = run_mapping(data, threads=1, run_name="single")
    pooled, _ = run_mapping(data, threads=3, run_name="pooled")
    status = statuses(single)
    assert status["hypergeometric-mean"] == "pass"
    assert status["hypergeometric-variance-bound"] == "pass"
    assert status["binomial-concentration"] == "pass"
    assert status["x-expectation-lower"] == "pass"
    assert status["x-variance-bound"] == "pass"
    assert [(r.check, r.status, r.detail) for r in single.checks] == \
           [(r.check, r.status, r.detail) for r in pooled.checks]
    assert [row["statistic"] for row in single.tables["chebyshev"]] == ["X_t", "Z_t"]


def test_seed_override_and_reproducibility(run_mapping):
    data = {
        "experiment": {"kind": "catlin", "name": "catlin-seeded"},
        "counterexample": dict(COUNTEREXAMPLE),
        "seeds": {"master": 1},
        "checks": {"points": 30},
    }
    first, _ = run_mapping(data, run_name="first")
    second, _ = run_mapping(data, run_name="second")
    assert first.summary == second.summary
    assert first.summary["seed"] == 1
    overridden, _ = run_mapping(data, seed=99, run_name="third")
    assert overridden.summary["seed"] == 99


SMALL_CONCENTRATION_CHECKS = {"hypergeometric": [10, 5, 4], "frequency_trials": 2000, "chi_square_trials": 1000,
                              "binomial_N": 200, "binomial_trials": 300, "t": 5}


def test_concentration_regimes(run_mapping):
    base = {
        "experiment": {"kind": "concentration", "name": "concentration-regimes"},
        "profile": {"spec": "phi"},
        "seeds": {"master": 2, "trials": 100},
        "checks": dict(SMALL_CONCENTRATION_CHECKS, statistic="X_t"),
    }
    default, _ = run_mapping(base, run_name="default")
    assert default.tables["chebyshev"][0]["regime"] == "realized"
    assert "x-regime-agreement" not in statuses(default)

    both, _ = run_mapping(dict(base, checks=dict(base["checks"], regime="both")), run_name="both")
    assert statuses(both)["x-regime-agreement"] == "pass"
    row = next(r for r in both.checks if r.check == "x-regime-agreement")
    assert set(row.detail) >= {"realized_mean", "urn_mean"}

    with pytest.raises(ConfigError):
        run_mapping(dict(base, checks=dict(base["checks"], regime="pooled")), run_name="bad")


def test_saturated_correlation_is_reported_as_info(run_mapping):
    result, _ = run_mapping({
        "experiment": {"kind": "concentration", "name": "concentration-saturated"},
        "profile": {"spec": "full"},
        "seeds": {"master": 0, "trials": 20},
        "checks": dict(SMALL_CONCENTRATION_CHECKS, statistic="Z_t", t=3, correlation_trials=30),
    })
    rows = {check: status for check, status in statuses(result).items() if check.startswith("negative-correlation")}
    assert len(rows) == 3
    assert set(rows.values()) == {"info"}
