"""Executable acceptance criteria tying the numerical guarantees together.

Each criterion is a self-contained runner returning a CriterionResult with
a pass/fail status and the measured quantities it judged.  Criteria cover
the exactly known effective-Hamiltonian values, the structural lower
bounds with explicit constants, the factor-band regime checks of the
upper-bound theorems, and cross-method solver agreement.

tol_scale multiplies every additive tolerance and every multiplicative
band, letting a caller tighten (<1) or relax (>1) the whole gate at once.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .effective import (
    EffectiveHamiltonian1D,
    ergodic_cell_check,
    mechanical_effective,
    p_critical,
)
from .errors import ConfigError
from .metric import DPConfig, check_lemma_metric, check_scaling_lemma
from .problem import (
    CATALOG_NAMES,
    FunctionTable1D,
    Potential,
    catalog,
    with_initial,
)
from .rates import (
    RateConfig,
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
from .solvers import (
    SolverConfig,
    lf_with_declared_tol,
    solve_cauchy_eff,
    solve_cauchy_ms,
    solve_static_eff,
    solve_static_ms,
    sup_norm_error,
)


@dataclass(frozen=True)
class CriterionResult:
    cid: str
    title: str
    status: str
    runtime_seconds: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def line(self) -> str:
        return f"{self.cid} {self.status:4s} {self.title} ({self.runtime_seconds:.1f}s)"

    def to_dict(self) -> dict:
        return {
            "cid": self.cid,
            "title": self.title,
            "status": self.status,
            "runtime_seconds": self.runtime_seconds,
            "details": dict(self.details),
        }


def _ac1_effective_exactness(ts: float) -> dict:
    """Flat piece and one closed-form point of the tent-well cell problem."""
    tent = Potential.tent_well()
    p_flat = np.linspace(0.0, 2.0 / 3.0, 257)
    flat_worst = max(abs(mechanical_effective(tent, float(p))) for p in p_flat)
    p_star = 1.2189514
    star_val = mechanical_effective(tent, p_star)
    pc = p_critical(tent)
    ok = flat_worst <= 1e-6 * ts and abs(star_val - 0.5) <= 1e-5 * ts
    return {"status": "pass" if ok else "fail",
            "flat_worst": flat_worst, "p_crit": pc,
            "value_at_p_star": star_val, "star_gap": abs(star_val - 0.5)}


def _ac2_cell_problem_cross_check(ts: float) -> dict:
    """Discounted torus dynamic programming against the quadrature values."""
    momenta = (0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0, 1.22, 2.0)
    cells = []
    worst = 0.0
    seen = {}
    for name in CATALOG_NAMES:
        spec = catalog(name)
        eff = EffectiveHamiltonian1D.build(spec)
        key = (spec.micro.kind, spec.micro.params)
        for p in momenta:
            if (key, p) not in seen:
                seen[(key, p)] = ergodic_cell_check(spec.micro, p, 1e-3, grid=1024)
            gap = abs(eff.oscillatory_at(p) - seen[(key, p)])
            worst = max(worst, gap)
            cells.append({"spec": name, "p": p, "gap": gap})
    ok = worst <= 1e-2 * ts
    return {"status": "pass" if ok else "fail", "worst_gap": worst,
            "cells": cells}


def _ac3_cauchy_forcing_floor(ts: float) -> dict:
    """Gap at the origin beats eps*t/2 while the homogenized value is zero."""
    spec = catalog("prop43_cauchy")
    eff = EffectiveHamiltonian1D.build(spec)
    cells = []
    ok = True
    for eps in (0.2, 0.1, 0.05):
        scfg = SolverConfig.for_cauchy(spec, eps, 1.0)
        ums = solve_cauchy_ms(spec, eps, 1.0, scfg, t_keep=[0.5, 1.0])
        uef = solve_cauchy_eff(spec, eff, 1.0, scfg, t_keep=[0.5, 1.0])
        i0 = int(np.argmin(np.abs(ums.x)))
        tol = (ums.diagnostics["declared_tol"] + uef.diagnostics["declared_tol"]) * ts
        gap = float(ums.slice_at(1.0)[i0] - uef.slice_at(1.0)[i0])
        eff_vals = [float(uef.slice_at(t)[i0]) for t in (0.5, 1.0)]
        passed = gap >= 0.5 * eps - tol and all(abs(v) <= tol for v in eff_vals)
        ok = ok and passed
        cells.append({"eps": eps, "gap": gap, "bound": 0.5 * eps, "tol": tol,
                      "eff_values": eff_vals, "status": "pass" if passed else "fail"})
    return {"status": "pass" if ok else "fail", "cells": cells}


def _ac4_static_forcing_floor(ts: float) -> dict:
    """Discounted gap beats eps/(2*lam) under the running-cost sup bound."""
    spec = catalog("prop43_static")
    eff = EffectiveHamiltonian1D.build(spec)
    lam = 0.5
    cells = []
    ok = True
    for eps in (0.2, 0.1):
        scfg = SolverConfig.for_static(spec, eps, lam)
        vms = solve_static_ms(spec, eps, lam, scfg)
        vef = solve_static_eff(spec, eff, lam, scfg)
        i0 = int(np.argmin(np.abs(vms.x)))
        gap = float(vms.values[0][i0] - vef.values[0][i0])
        tol = (vms.diagnostics["declared_tol"] + vef.diagnostics["declared_tol"]) * ts
        sup = float(np.max(np.abs(vms.values)))
        # discrete discounting weights each step at its left endpoint,
        # overshooting the continuum cap by at most k0*dt
        cap = spec.k0 / lam + (spec.k0 * vms.diagnostics["dt"] + tol) * ts
        passed = gap >= eps / (2.0 * lam) - tol and sup <= cap
        ok = ok and passed
        cells.append({"eps": eps, "gap": gap, "bound": eps / (2.0 * lam),
                      "tol": tol, "sup": sup, "sup_cap": cap,
                      "status": "pass" if passed else "fail"})
    return {"status": "pass" if ok else "fail", "lam": lam, "cells": cells}


def _ac5_barrier_lower_bound(ts: float) -> dict:
    """(sqrt(2)/3)*min{t,eps} gap for the barrier micro-potential."""
    out = verify_prop_41()
    ok = True
    for cell in out["cells"]:
        cell["status"] = ("pass" if cell["error"] >= cell["bound"] - cell["tol"] * ts
                          else "fail")
        ok = ok and cell["status"] == "pass"
    out["status"] = "pass" if ok else "fail"
    return out


def _ac6_cauchy_regime_band(ts: float) -> dict:
    """Factor-band of the normalized Cauchy errors in both time regimes."""
    spec = catalog("prop43_cauchy")
    eff = EffectiveHamiltonian1D.build(spec)
    cfg = RateConfig(band=4.0 * ts)
    reports = run_rate_sweep(spec, eff, [1.0, 0.05], [0.2, 0.1, 0.05, 0.025], cfg)
    reports = [verify_thm_main(r, cfg) for r in reports]
    verdicts = {f"t={r.t_or_lam}": r.verdicts["thm_main"] for r in reports}
    partitions = [partition_check(spec, eps, 1.0, 0.6, band=4.0 * ts)
                  for eps in (0.1, 0.05)]
    ok = (all(v["status"] == "pass" for v in verdicts.values())
          and all(p["status"] == "pass" for p in partitions))
    return {"status": "pass" if ok else "fail",
            "verdicts": verdicts,
            "partition": partitions,
            "alpha_large_time": reports[0].alpha,
            "reports": [r.to_dict() for r in reports]}


def _ac7_static_regime_band(ts: float) -> dict:
    """Factor-band of err*lam/sqrt(eps), pooled across two discount rates."""
    spec = catalog("prop43_static")
    eff = EffectiveHamiltonian1D.build(spec)
    cfg = RateConfig(band=4.0 * ts)
    reports = [verify_thm_static(run_static_sweep(spec, eff, lam,
                                                  [0.2, 0.1, 0.05], cfg), cfg)
               for lam in (0.25, 0.5)]
    pooled = verify_static_uniformity(reports, cfg)
    ok = (all(r.verdicts["thm_static"]["status"] == "pass" for r in reports)
          and pooled["status"] == "pass")
    return {"status": "pass" if ok else "fail",
            "per_lambda": {r.t_or_lam: r.verdicts["thm_static"] for r in reports},
            "pooled": pooled,
            "reports": [r.to_dict() for r in reports]}


def _ac8_quarter_power_necessity(ts: float) -> dict:
    """Quarter-power gap growth where the fast-variable hypotheses fail."""
    out = verify_prop_42(eps_exponents=(8, 10, 12))
    if ts != 1.0:
        inter_ok = True
        for cell in out["checks"]["intermediate_bound"]["cells"]:
            cell["status"] = ("pass" if cell["error"] >= cell["bound"]
                              - next(c["tol"] for c in out["cells"]
                                     if c["eps"] == cell["eps"]) * ts
                              else "fail")
            inter_ok = inter_ok and cell["status"] == "pass"
        out["checks"]["intermediate_bound"]["status"] = ("pass" if inter_ok
                                                         else "fail")
        dbl = out["checks"]["domain_doubling"]
        dbl["status"] = "pass" if dbl["difference"] <= 1e-9 * ts else "fail"
        ok = all(v["status"] in ("pass", "skipped")
                 for v in out["checks"].values())
        out["status"] = "pass" if ok else "fail"
    return out


def _ac9_metric_lemma_bands(ts: float) -> dict:
    """Frozen metric comparison in a band; curve-doubling gaps uniformly small."""
    spec = catalog("prop43_cauchy")
    eff = EffectiveHamiltonian1D.build(spec)
    cfg = DPConfig.for_scale(0.2, speed_bound=2.5)
    ratios = []
    grid = []
    for c in (0.0, 0.5, 1.0):
        rows = check_lemma_metric(c, 4.0, 0.0, 4.0, [0.2, 0.1, 0.05], spec, eff, cfg)
        for eps, dev in rows:
            ratios.append(dev / eps)
            grid.append({"c": c, "eps": float(eps), "ratio": dev / eps})
    spread = float(max(ratios) / min(ratios))
    band_ok = spread <= 4.0 * ts

    cfg1 = DPConfig.for_scale(1.0)
    gaps = []
    for c in (0.0, 0.3, 0.7, 1.5):
        for t in (2.0, 4.0, 8.0):
            fwd = check_scaling_lemma(c, t, t / 2.0, spec, cfg1)
            rev = check_scaling_lemma(c, t, t / 2.0, spec, cfg1, reverse=True)
            gaps.append({"c": c, "t": t, "gap": fwd, "reverse_gap": rev})
    worst_gap = max(max(abs(g["gap"]), abs(g["reverse_gap"])) for g in gaps)
    gap_ok = worst_gap <= 1.0 * ts
    return {"status": "pass" if band_ok and gap_ok else "fail",
            "ratio_spread": spread, "ratio_grid": grid,
            "worst_scaling_gap": worst_gap, "scaling_gaps": gaps}


def _random_table_pair(rng: np.random.Generator):
    # ordered pair of piecewise-linear data: g2 = g1 + nonnegative bump
    lo, hi, n = -8.0, 8.0, 257
    h = (hi - lo) / (n - 1)
    vals = np.concatenate([[0.0], np.cumsum(rng.uniform(-1.0, 1.0, n - 1) * h)])
    bump = rng.uniform(0.0, 0.5, n)
    g1 = Potential.from_table(FunctionTable1D(lo, hi, vals))
    g2 = Potential.from_table(FunctionTable1D(lo, hi, vals + bump))
    return g1, g2


def _ac10_method_equivalence(ts: float) -> dict:
    """Cross-method agreement, refinement stability, and monotonicity."""
    eps, horizon = 0.1, 1.0
    per_spec = []
    ok = True
    for name in CATALOG_NAMES:
        spec = catalog(name)
        cfg_dp = SolverConfig.for_cauchy(spec, eps, horizon)
        cfg_lf = SolverConfig.for_cauchy(spec, eps, horizon,
                                         method="lax_friedrichs",
                                         h_over_eps=1.0 / 64.0)
        udp = solve_cauchy_ms(spec, eps, horizon, cfg_dp)
        ulf = lf_with_declared_tol(spec, eps, horizon, cfg_lf)
        d1 = sup_norm_error(udp, ulf, 1.0)
        decl = (udp.diagnostics["declared_tol"]
                + ulf.diagnostics["declared_tol"]) * ts
        udp2 = solve_cauchy_ms(spec, eps, horizon, cfg_dp.refined())
        ulf2 = lf_with_declared_tol(spec, eps, horizon, cfg_lf.refined())
        d2 = sup_norm_error(udp2, ulf2, 1.0)
        passed = d1 <= decl and abs(d1 - d2) < decl
        ok = ok and passed
        per_spec.append({"spec": name, "disagreement": d1,
                         "refined_disagreement": d2, "declared": decl,
                         "status": "pass" if passed else "fail"})

    rng = np.random.default_rng(20240817)
    base = catalog("free")
    worst_violation = 0.0
    for trial in range(20):
        g1, g2 = _random_table_pair(rng)
        s1 = with_initial(base, g1, name="pair_lo")
        s2 = with_initial(base, g2, name="pair_hi")
        m = max(s1.speed_bound(), s2.speed_bound())
        methods = ("lax_oleinik_dp", "lax_friedrichs") if trial == 0 else ("lax_oleinik_dp",)
        for method in methods:
            cfg = SolverConfig.for_cauchy(s1, 0.2, 0.25, report_radius=0.5,
                                          method=method, speed_bound=m)
            u1 = solve_cauchy_ms(s1, 0.2, 0.25, cfg, method=method)
            u2 = solve_cauchy_ms(s2, 0.2, 0.25, cfg, method=method)
            worst_violation = max(worst_violation,
                                  float(np.max(u1.values - u2.values)))
    mono_ok = worst_violation <= 1e-12
    ok = ok and mono_ok
    return {"status": "pass" if ok else "fail", "per_spec": per_spec,
            "monotonicity_worst_violation": worst_violation}


_CRITERIA = {
    "AC-1": ("effective Hamiltonian exactness", _ac1_effective_exactness),
    "AC-2": ("cell-problem cross-check", _ac2_cell_problem_cross_check),
    "AC-3": ("Cauchy forcing-floor lower bound", _ac3_cauchy_forcing_floor),
    "AC-4": ("static forcing-floor lower bound", _ac4_static_forcing_floor),
    "AC-5": ("barrier lower bound", _ac5_barrier_lower_bound),
    "AC-6": ("Cauchy regime factor-band", _ac6_cauchy_regime_band),
    "AC-7": ("static regime factor-band", _ac7_static_regime_band),
    "AC-8": ("quarter-power rate necessity", _ac8_quarter_power_necessity),
    "AC-9": ("metric lemma bands", _ac9_metric_lemma_bands),
    "AC-10": ("solver method equivalence", _ac10_method_equivalence),
}

CRITERION_IDS = tuple(_CRITERIA)


def run_criterion(cid: str, tol_scale: float = 1.0) -> CriterionResult:
    if cid not in _CRITERIA:
        raise ConfigError(f"unknown criterion {cid!r}; expected one of {CRITERION_IDS}")
    if tol_scale <= 0.0 or not math.isfinite(tol_scale):
        raise ConfigError("tol_scale must be positive and finite")
    title, runner = _CRITERIA[cid]
    started = time.perf_counter()
    details = runner(tol_scale)
    status = details.pop("status")
    return CriterionResult(cid=cid, title=title, status=status,
                           runtime_seconds=time.perf_counter() - started,
                           details=details)


def run_all(ids=None, tol_scale: float = 1.0) -> list:
    ids = list(ids) if ids is not None else list(CRITERION_IDS)
    return [run_criterion(cid, tol_scale) for cid in ids]
