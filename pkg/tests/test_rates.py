import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjhomog.errors import ConfigError, FitError
from hjhomog.problem import catalog
from hjhomog.rates import (
    CellResult,
    RateConfig,
    RateReport,
    check_short_time,
    fit_exponent,
    partition_check,
    run_rate_sweep,
    run_static_sweep,
    verify_prop_41,
    verify_prop_42,
    verify_prop_43,
    verify_static_uniformity,
    verify_thm_main,
    verify_thm_static,
)


def synthetic_report(kind, t_or_lam, eps, errors, tols=None):
    tols = tols if tols is not None else tuple(1e-12 for _ in errors)
    cells = tuple(
        CellResult(kind, t_or_lam, e, err, tol, "ok")
        for e, err, tol in zip(eps, errors, tols)
    )
    return RateReport(
        spec_name="synthetic", kind=kind, t_or_lam=t_or_lam,
        eps_list=tuple(eps), errors=tuple(errors), cell_tols=tuple(tols),
        alpha=None, c_hat=None, residual=None, fit_note="",
        verdicts={}, cells=cells, runtime_seconds=0.0,
    )


# ---------------------------------------------------------------- fits

def test_fit_exponent_exact_on_power_laws():
    eps = [0.4, 0.2, 0.1, 0.05]
    alpha, c_hat, resid = fit_exponent(eps, [3.0 * e**0.5 for e in eps])
    assert abs(alpha - 0.5) < 1e-12
    assert abs(c_hat - 3.0) < 1e-12
    assert resid < 1e-12
    alpha, c_hat, resid = fit_exponent(eps, [0.25 * e for e in eps])
    assert abs(alpha - 1.0) < 1e-12
    assert abs(c_hat - 0.25) < 1e-12


@settings(max_examples=60, deadline=None)
@given(
    alpha=st.floats(-1.0, 2.0),
    log_c=st.floats(-6.0, 6.0),
    n=st.integers(3, 8),
)
def test_fit_exponent_recovers_generating_law(alpha, log_c, n):
    eps = np.logspace(-0.5, -3.0, n)
    c = math.exp(log_c)
    a_hat, c_fit, resid = fit_exponent(eps, c * eps**alpha)
    assert abs(a_hat - alpha) < 1e-8
    assert abs(math.log(c_fit) - log_c) < 1e-8
    assert resid < 1e-8


def test_fit_exponent_rejects_bad_input():
    with pytest.raises(FitError):
        fit_exponent([0.2, 0.1], [1.0, 0.5])
    with pytest.raises(FitError):
        fit_exponent([0.2, 0.1, 0.05], [1.0, 0.0, 0.5])
    with pytest.raises(FitError):
        fit_exponent([0.2, 0.1, 0.05], [1.0, -0.5, 0.5])
    with pytest.raises(FitError):
        fit_exponent([0.2, 0.1, 0.05], [1.0, math.nan, 0.5])
    with pytest.raises(FitError):
        fit_exponent([0.1, 0.1, 0.1], [1.0, 1.0, 1.0])
    with pytest.raises(FitError):
        fit_exponent([0.2, 0.1, 0.05], [1.0, 0.5])


# ---------------------------------------------------------------- report invariants

def test_report_requires_decreasing_eps_and_clean_errors():
    with pytest.raises(ConfigError):
        synthetic_report("cauchy", 1.0, (0.1, 0.2), (1.0, 2.0))
    with pytest.raises(ConfigError):
        synthetic_report("cauchy", 1.0, (0.2, 0.1), (1.0, -2.0))
    with pytest.raises(ConfigError):
        synthetic_report("cauchy", 1.0, (0.2, 0.1), (1.0, math.inf))
    with pytest.raises(ConfigError):
        synthetic_report("elliptic", 1.0, (0.2, 0.1), (1.0, 2.0))
    with pytest.raises(ConfigError):
        RateReport(
            spec_name="s", kind="cauchy", t_or_lam=1.0,
            eps_list=(0.2,), errors=(1.0, 2.0), cell_tols=(0.1,),
            alpha=None, c_hat=None, residual=None, fit_note="",
            verdicts={}, cells=(), runtime_seconds=0.0,
        )


def test_with_verdict_does_not_mutate_original():
    rep = synthetic_report("cauchy", 1.0, (0.2, 0.1), (1.0, 0.5))
    rep2 = rep.with_verdict("demo", {"status": "pass"})
    assert "demo" not in rep.verdicts
    assert rep2.verdicts["demo"]["status"] == "pass"
    assert rep2.errors == rep.errors


def test_sweep_argument_validation(eff_tables):
    spec = catalog("prop43_cauchy")
    eff = eff_tables("prop43_cauchy")
    with pytest.raises(ConfigError):
        run_rate_sweep(spec, eff, [1.0], [])
    with pytest.raises(ConfigError):
        run_rate_sweep(spec, eff, [1.0], [0.1, 0.2])
    with pytest.raises(ConfigError):
        run_rate_sweep(spec, eff, [-1.0], [0.2, 0.1])
    with pytest.raises(ConfigError):
        run_rate_sweep(spec, eff, [1.0], [0.2, -0.1])
    with pytest.raises(ConfigError):
        run_static_sweep(spec, eff, -0.5, [0.2, 0.1])
    with pytest.raises(ConfigError):
        RateConfig(h_over_eps=1.0 / 16.0)
    with pytest.raises(ConfigError):
        RateConfig(band=0.5)


# ---------------------------------------------------------------- verdict logic

def test_verdict_regimes_and_mixed_regime_error():
    # t = 0.3 sits between sqrt(0.05) and sqrt(0.2): mixing must raise.
    eps = (0.2, 0.1, 0.05)
    rep = synthetic_report("cauchy", 1.0, eps, tuple(0.3 * e for e in eps))
    v = verify_thm_main(rep).verdicts["thm_main"]
    assert v["regime"] == "t>=sqrt(eps)"
    assert v["status"] == "pass"
    small = synthetic_report("cauchy", 0.05, eps, tuple(0.02 * 3 for _ in eps))
    v = verify_thm_main(small).verdicts["thm_main"]
    assert v["regime"] == "t<sqrt(eps)"
    mixed = synthetic_report("cauchy", 0.3, (0.2, 0.05), (0.1, 0.05))
    with pytest.raises(ConfigError):
        verify_thm_main(mixed)


def test_verdict_band_and_trend_parts():
    eps = (0.2, 0.1, 0.05, 0.025)
    # ratios constant: pass
    rep = synthetic_report("cauchy", 1.0, eps, tuple(0.5 * math.sqrt(e) for e in eps))
    assert verify_thm_main(rep).verdicts["thm_main"]["status"] == "pass"
    # errors ~ eps^{1/4}: ratio spread over 8x range is only 2^{3/4} < 4,
    # but the trend slope -1/4 betrays the slower rate.
    rep = synthetic_report("cauchy", 1.0, eps, tuple(0.5 * e**0.25 for e in eps))
    v = verify_thm_main(rep).verdicts["thm_main"]
    assert v["spread"] < 4.0
    assert v["trend_slope"] < -0.2
    assert v["status"] == "fail"
    # blatant band violation fails regardless of trend
    rep = synthetic_report("cauchy", 1.0, eps, (0.5 * math.sqrt(0.2), 0.5 * math.sqrt(0.1),
                                                0.5 * math.sqrt(0.05), 5.0 * math.sqrt(0.025)))
    assert verify_thm_main(rep).verdicts["thm_main"]["status"] == "fail"


def test_verdict_mixed_noise_floor_raises():
    rep = synthetic_report("cauchy", 1.0, (0.2, 0.1), (1.0, 1e-15),
                           tols=(1e-12, 1e-12))
    with pytest.raises(ConfigError):
        verify_thm_main(rep)


def test_verdict_kind_mismatch():
    cau = synthetic_report("cauchy", 1.0, (0.2, 0.1), (1.0, 0.5))
    sta = synthetic_report("static", 0.5, (0.2, 0.1), (1.0, 0.5))
    with pytest.raises(ConfigError):
        verify_thm_static(cau)
    with pytest.raises(ConfigError):
        verify_thm_main(sta)
    with pytest.raises(ConfigError):
        verify_static_uniformity([cau])


# ---------------------------------------------------------------- real sweeps

def test_free_sweep_is_degenerate(eff_tables):
    spec = catalog("free")
    eff = eff_tables("free")
    (rep,) = run_rate_sweep(spec, eff, [0.5], [0.2, 0.1, 0.05])
    assert all(e <= tol for e, tol in zip(rep.errors, rep.cell_tols))
    assert rep.alpha is None
    assert "degenerate" in rep.fit_note
    v = verify_thm_main(rep).verdicts["thm_main"]
    assert v["status"] == "pass" and v["degenerate"]


@pytest.fixture(scope="module")
def prop43_reports(eff_tables):
    spec = catalog("prop43_cauchy")
    reports = run_rate_sweep(spec, eff_tables("prop43_cauchy"), [1.0, 0.05],
                             [0.2, 0.1, 0.05])
    return [verify_thm_main(r) for r in reports]


def test_cauchy_sweep_large_time(prop43_reports):
    rep = prop43_reports[0]
    assert rep.t_or_lam == 1.0
    v = rep.verdicts["thm_main"]
    assert v["status"] == "pass"
    assert v["regime"] == "t>=sqrt(eps)"
    assert v["spread"] <= 4.0
    # gap shrinks linearly in eps here, well inside the sqrt guarantee
    assert 0.8 <= rep.alpha <= 1.15
    # fitted law reproduces every error within the reported residual
    for e, err in zip(rep.eps_list, rep.errors):
        assert abs(math.log(err) - math.log(rep.c_hat * e**rep.alpha)) <= rep.residual + 1e-12
    # prefactor stability: err/eps^alpha varies by less than a factor 2
    c_vals = [err / e**rep.alpha for e, err in zip(rep.eps_list, rep.errors)]
    assert max(c_vals) / min(c_vals) < 2.0
    assert all(err > tol for err, tol in zip(rep.errors, rep.cell_tols))


def test_cauchy_sweep_small_time(prop43_reports):
    rep = prop43_reports[1]
    v = rep.verdicts["thm_main"]
    assert v["status"] == "pass"
    assert v["regime"] == "t<sqrt(eps)"
    assert v["spread"] <= 4.0


def test_sweep_is_deterministic(eff_tables):
    spec = catalog("prop43_cauchy")
    eff = eff_tables("prop43_cauchy")
    cfg = RateConfig(refine_cells=False)
    (a,) = run_rate_sweep(spec, eff, [0.5], [0.2, 0.1], cfg)
    (b,) = run_rate_sweep(spec, eff, [0.5], [0.2, 0.1], cfg)
    assert a.errors == b.errors
    assert a.cell_tols == b.cell_tols


def test_saturating_cells_are_skipped_not_fatal(eff_tables):
    # a deliberately tiny speed bound trips the saturation guard per cell
    spec = catalog("prop43_cauchy")
    eff = eff_tables("prop43_cauchy")
    cfg = RateConfig(speed_bound=0.6, refine_cells=False)
    (rep,) = run_rate_sweep(spec, eff, [1.0], [0.2, 0.1], cfg)
    assert rep.eps_list == ()
    assert all(c.status == "skipped" and c.reason for c in rep.cells)
    v = verify_thm_main(rep).verdicts["thm_main"]
    assert v["status"] == "skipped"


def test_report_serialization_round_trip(prop43_reports):
    rep = prop43_reports[0]
    blob = json.dumps(rep.to_dict())
    back = json.loads(blob)
    assert back["spec"] == "prop43_cauchy"
    assert back["verdicts"]["thm_main"]["status"] == "pass"
    assert len(back["cells"]) == len(rep.cells)
    rows = rep.csv_rows()
    assert len(rows) == len(rep.eps_list)
    assert rows[0][0] == rep.eps_list[0]


def test_static_sweep_and_uniformity(eff_tables):
    spec = catalog("prop43_static")
    eff = eff_tables("prop43_static")
    reps = [
        verify_thm_static(run_static_sweep(spec, eff, lam, [0.2, 0.1]))
        for lam in (0.5, 0.25)
    ]
    for rep in reps:
        v = rep.verdicts["thm_static"]
        assert v["status"] == "pass"
        assert all(err > tol for err, tol in zip(rep.errors, rep.cell_tols))
    pooled = verify_static_uniformity(reps)
    assert pooled["status"] == "pass"
    assert pooled["spread"] <= 4.0
    assert len(pooled["cells"]) == 4


# ---------------------------------------------------------------- lower bounds

def test_barrier_lower_bound_both_times():
    out = verify_prop_41()
    assert out["status"] == "pass"
    for cell in out["cells"]:
        assert cell["error"] >= cell["bound"] - cell["tol"]
    # waiting out the barrier costs the full running cost at small times
    short = next(c for c in out["cells"] if c["t"] == 0.05)
    assert abs(short["error"] - 0.05) < 1e-9


def test_forcing_floor_lower_bound():
    out = verify_prop_43()
    assert out["status"] == "pass"
    for cell in out["cauchy"]:
        assert cell["error"] >= cell["bound"]
    assert out["static"][0]["error"] >= out["static"][0]["bound"]


def test_cusp_cell_structure_at_coarse_scale():
    # one affordable scale: locality, vanishing effective value, vacuous
    # intermediate bound; the exponent checks need the full sweep.
    out = verify_prop_42(eps_exponents=(8,))
    assert out["status"] == "pass"
    assert out["checks"]["domain_doubling"]["difference"] <= 1e-9
    assert out["checks"]["effective_zero"]["status"] == "pass"
    cell = out["checks"]["intermediate_bound"]["cells"][0]
    assert cell["vacuous"] and cell["status"] == "pass"
    assert out["checks"]["alpha_window"]["status"] == "skipped"
    assert out["checks"]["upper_rate_fails"]["status"] == "skipped"
    # the gap itself sits near the quarter-power law already
    assert 0.6 <= out["cells"][0]["error"] / out["cells"][0]["eps"] ** 0.25 <= 1.1


# ---------------------------------------------------------------- proof-side checks

def test_partition_sum_along_minimizer():
    spec = catalog("prop43_cauchy")
    out = partition_check(spec, 0.1, 1.0, 0.6)
    assert out["status"] == "pass"
    assert out["pieces"] == 3
    assert out["sum"] <= out["bound"]
    assert out["max_piece"] <= out["sum"] + 1e-15
    with pytest.raises(ConfigError):
        partition_check(spec, 0.1, 0.2, 0.1)  # t below sqrt(eps)


def test_short_time_regularity():
    spec = catalog("prop43_cauchy")
    out = check_short_time(spec, 0.1, 0.05)
    assert out["status"] == "pass"
    assert out["observed"] <= out["allowance"]
    assert out["c_bound"] == spec.k0
