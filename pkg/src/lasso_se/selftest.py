"""Fast invariant checks behind ``lasso-se selftest``.

Each check is small enough that the whole suite finishes in seconds; the
full test suite under ``tests/`` goes much further.
"""

import io
import os
import tempfile

import numpy as np
from scipy import integrate

from . import estimators, experiments, lasso, mmse
from . import scalar_gaussian as sg
from . import state_evolution as se


def _quad(f):
    val, _ = integrate.quad(lambda z: f(z) * sg.gauss_pdf(z), -np.inf, np.inf, epsabs=1e-13, epsrel=1e-13)
    return val


def check_closed_forms():
    for x, a in [(0.0, 1.0), (0.7, 0.9), (-2.5, 0.3), (4.0, 2.0)]:
        mse = _quad(lambda z: (sg.soft_threshold(x + z, a) - x) ** 2)
        assert abs(sg.atom_mse(x, a) - mse) < 1e-8
        h = _quad(lambda z: abs(sg.soft_threshold(x + z, a))) - abs(x)
        assert abs(sg.h_alpha(x, a) - h) < 1e-8


def check_alpha_min():
    for d in (0.2, 0.5, 0.9):
        a = sg.alpha_min(d)
        resid = (1 + a * a) * sg.gauss_cdf(-a) - a * sg.gauss_pdf(a) - d / 2
        assert abs(resid) <= 1e-12


def check_state_evolution():
    law = se.AtomDistribution.sparse_gaussian(0.1, 201)
    fp = se.solve_fixed_point(law, 0.8, 0.2, 0.3)
    r1, r2 = se.residuals(law, fp)
    assert abs(r1) <= 1e-10 and abs(r2) <= 1e-10
    assert fp.tau_star >= fp.sigma and fp.r_star >= 0


def check_lasso_kkt():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((30, 60)) / np.sqrt(30)
    y = X[:, :5] @ rng.standard_normal(5) + 0.1 * rng.standard_normal(30)
    prob = lasso.DesignProblem(X, y)
    f = lasso.fit(prob, 0.05)
    rep = lasso.kkt_report(f, prob)
    assert rep["max_abs_subgrad"] <= 1 + 1e-6 and rep["sign_violations"] == 0
    assert np.all(np.diff(f.objective_history) <= 1e-12 * f.objective_history[0])


def check_estimator_identity():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((80, 100)) / np.sqrt(80)
    y = X[:, :10] @ rng.standard_normal(10) + 0.2 * rng.standard_normal(80)
    prob = lasso.DesignProblem(X, y)
    estimators.sigma_hat_sq(lasso.fit(prob, 0.1), prob)


def check_mutual_info_limits():
    assert mmse.mutual_info(3.0, mmse.MmsePrior(0.0)) == 0.0
    assert abs(mmse.mutual_info(3.0, mmse.MmsePrior(1.0)) - 0.5 * np.log(4.0)) <= 1e-9


def check_csv_round_trip():
    from .cli import emit_csv, read_csv
    cfg = experiments.ExperimentConfig(N=40, replicates=1, lambda_count=3, folds=2)
    res = experiments.run_experiment(cfg, threads=1)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "run.csv")
        emit_csv(res.records, path)
        header, rows = read_csv(path)
    assert header == list(experiments.CSV_COLUMNS)
    for rec, row in zip(res.records, rows):
        want = np.array(rec.row(), dtype=float)
        assert np.allclose(row, want, rtol=1e-11, atol=0, equal_nan=True)


CHECKS = [
    check_closed_forms,
    check_alpha_min,
    check_state_evolution,
    check_lasso_kkt,
    check_estimator_identity,
    check_mutual_info_limits,
    check_csv_round_trip,
]


def run(verbose=False, stream=None):
    """Run every check; returns ``(passed, failed)``."""
    out = stream or io.StringIO()
    passed = failed = 0
    for chk in CHECKS:
        name = chk.__name__.removeprefix("check_")
        try:
            chk()
        except Exception as exc:  # a failing check is reported, not raised
            failed += 1
            line = f"FAIL {name}: {type(exc).__name__}: {exc}"
        else:
            passed += 1
            line = f"ok   {name}"
        if verbose:
            print(line)
        else:
            out.write(line + "\n")
    return passed, failed
