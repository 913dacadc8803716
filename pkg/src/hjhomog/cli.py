"""Experiment orchestration: config files, result cache, reports and plots.

One JSON config file describes one reproducible experiment.  Every run is
keyed by the SHA-256 of the canonical config serialization, the subcommand,
and the package version; outputs land in the cache under that key and are
copied into the output directory, so a rerun with an identical config is a
byte-identical cache hit and any solver change invalidates stale results.

Independent cells (sweep times, discount rates, acceptance criteria) are
computed on a thread pool sized by --workers; the dynamic-programming
kernels release the GIL, so threads scale.  All file writes go through a
single writer so manifests stay consistent.

Exit codes: 0 ok, 1 verdict failure (verify-all), 2 config error,
3 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import CRITERION_IDS, run_criterion
from .effective import EffectiveHamiltonian1D
from .errors import ConfigError, FitError, NumericalError
from .metric import DPConfig, check_lemma_metric, check_scaling_lemma, m_eps
from .problem import CATALOG_NAMES, FunctionTable1D, Potential, ProblemSpec, catalog
from .rates import (
    RateConfig,
    run_rate_sweep,
    run_static_sweep,
    verify_static_uniformity,
    verify_thm_main,
    verify_thm_static,
)
from .solvers import (
    CAUCHY_METHODS,
    SolverConfig,
    solve_cauchy_eff,
    solve_cauchy_ms,
    solve_static_eff,
    solve_static_ms,
)

_POTENTIAL_KEYS = {
    "zero": set(),
    "constant": {"value"},
    "tent_well": set(),
    "vee_barrier": set(),
    "clipped_power": {"exponent"},
    "table": {"lo", "hi", "values", "convex", "even", "periodic"},
}


def _potential_from_dict(d: dict, where: str) -> Potential:
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError(f"{where}: inline potential needs a 'kind' key")
    kind = d["kind"]
    if kind not in _POTENTIAL_KEYS:
        raise ConfigError(f"{where}: unknown potential kind {kind!r}")
    extra = set(d) - {"kind"} - _POTENTIAL_KEYS[kind]
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)} for kind {kind!r}")
    if kind == "zero":
        return Potential.zero()
    if kind == "constant":
        return Potential.constant(float(d["value"]))
    if kind == "tent_well":
        return Potential.tent_well()
    if kind == "vee_barrier":
        return Potential.vee_barrier()
    if kind == "clipped_power":
        return Potential.clipped_power(float(d["exponent"]))
    table = FunctionTable1D(
        float(d["lo"]), float(d["hi"]),
        np.asarray(d["values"], dtype=np.float64),
        convex_flag=bool(d.get("convex", False)),
        even_flag=bool(d.get("even", False)),
        periodic_flag=bool(d.get("periodic", False)),
    )
    return Potential.from_table(table)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs, serializable to a flat JSON object."""

    spec: str = "prop43_cauchy"
    name: str = ""
    macro: dict | None = None
    micro: dict | None = None
    initial: dict | None = None
    eps: float = 0.1
    eps_list: tuple = (0.2, 0.1, 0.05)
    lam: float = 0.5
    static_lams: tuple = ()
    horizon: float = 1.0
    t_list: tuple = (1.0,)
    t_keep: tuple = ()
    method: str = "lax_oleinik_dp"
    dt_over_eps: float = 0.1
    h_over_eps: float = 1.0 / 64.0
    report_radius: float = 1.0
    speed_bound: float | None = None
    domain_radius: float | None = None
    band: float = 4.0
    refine_cells: bool = True
    p_max: float | None = None
    n_p: int = 2049
    metric_c: float = 0.0
    metric_t: float = 4.0
    metric_x: float = 0.0
    metric_y: float = 4.0
    scaling_c: tuple = (0.0, 0.3, 0.7, 1.5)
    scaling_t: tuple = (2.0, 4.0, 8.0)
    criteria: tuple = ()
    out_dir: str = "results"
    use_cache: bool = True

    def __post_init__(self) -> None:
        if self.spec and self.spec not in CATALOG_NAMES:
            raise ConfigError(
                f"key 'spec': unknown catalog name {self.spec!r}; expected one of {CATALOG_NAMES}")
        for key in ("eps", "horizon", "lam", "dt_over_eps", "h_over_eps"):
            v = getattr(self, key)
            if v <= 0 or not math.isfinite(v):
                raise ConfigError(f"key {key!r}: must be positive and finite")
        # the fast scale must be resolved: h = h_over_eps * eps <= eps/32
        if self.h_over_eps > 1.0 / 32.0 + 1e-15:
            raise ConfigError("key 'h_over_eps': must be at most 1/32")
        if not self.eps_list:
            raise ConfigError("key 'eps_list': must not be empty")
        if any(e <= 0 for e in self.eps_list):
            raise ConfigError("key 'eps_list': entries must be positive")
        if any(b >= a for a, b in zip(self.eps_list, self.eps_list[1:])):
            raise ConfigError("key 'eps_list': must be strictly decreasing")
        if any(t <= 0 for t in self.t_list) or not self.t_list:
            raise ConfigError("key 't_list': entries must be positive")
        if any(l <= 0 for l in self.static_lams):
            raise ConfigError("key 'static_lams': entries must be positive")
        if self.method not in CAUCHY_METHODS:
            raise ConfigError(f"key 'method': expected one of {CAUCHY_METHODS}")
        if self.band <= 1.0:
            raise ConfigError("key 'band': must exceed 1")
        if self.n_p < 3:
            raise ConfigError("key 'n_p': must be at least 3")
        if self.report_radius < 0:
            raise ConfigError("key 'report_radius': must be nonnegative")
        for key in ("speed_bound", "domain_radius", "p_max"):
            v = getattr(self, key)
            if v is not None and (v <= 0 or not math.isfinite(v)):
                raise ConfigError(f"key {key!r}: must be positive when given")
        bad = [c for c in self.criteria if c not in CRITERION_IDS]
        if bad:
            raise ConfigError(f"key 'criteria': unknown ids {bad}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        coerced = dict(data)
        for key in ("eps_list", "static_lams", "t_list", "t_keep",
                    "scaling_c", "scaling_t"):
            if key in coerced:
                coerced[key] = tuple(float(v) for v in coerced[key])
        if "criteria" in coerced:
            coerced["criteria"] = tuple(str(c) for c in coerced["criteria"])
        return cls(**coerced)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key, value in d.items():
            if isinstance(value, tuple):
                d[key] = list(value)
        return d

    def canonical(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config {path} is not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}") from exc
    return ExperimentConfig.from_dict(data)


def _spec_from_config(cfg: ExperimentConfig) -> ProblemSpec:
    if cfg.macro is None and cfg.micro is None and cfg.initial is None:
        return catalog(cfg.spec)
    base = catalog(cfg.spec)
    macro = _potential_from_dict(cfg.macro, "macro") if cfg.macro else base.macro
    micro = _potential_from_dict(cfg.micro, "micro") if cfg.micro else base.micro
    initial = _potential_from_dict(cfg.initial, "initial") if cfg.initial else base.initial
    return ProblemSpec(cfg.name or f"{cfg.spec}_inline", macro, micro, initial)


def cache_key(cfg: ExperimentConfig, subcommand: str, tol_scale: float = 1.0) -> str:
    # tol_scale changes verdicts, so it is part of the experiment identity
    blob = f"{cfg.canonical()}|{subcommand}|{tol_scale!r}|{__version__}"
    return hashlib.sha256(blob.encode()).hexdigest()


class ResultWriter:
    """Single funnel for all file output: cache directory plus work copy."""

    def __init__(self, out_dir: Path, key: str, use_cache: bool):
        self.out_dir = out_dir
        self.cache_dir = out_dir / "cache" / key
        self.key = key
        self.use_cache = use_cache

    def cached_manifest(self) -> dict | None:
        path = self.cache_dir / "manifest.json"
        if not (self.use_cache and path.is_file()):
            return None
        manifest = json.loads(path.read_text())
        if manifest.get("config_hash") != self.key:
            return None
        return manifest

    def restore(self, manifest: dict) -> list:
        written = []
        for name in manifest["files"]:
            data = (self.cache_dir / name).read_bytes()
            target = self.out_dir / name
            target.write_bytes(data)
            written.append(str(target))
        return written

    def commit(self, files: dict, manifest: dict) -> list:
        manifest = dict(manifest)
        manifest["config_hash"] = self.key
        manifest["version"] = __version__
        manifest["files"] = sorted(files)
        blob = json.dumps(manifest, indent=1, sort_keys=True).encode()
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        written = []
        for name in sorted(files):
            data = files[name]
            if isinstance(data, str):
                data = data.encode()
            (self.cache_dir / name).write_bytes(data)
            target = self.out_dir / name
            target.write_bytes(data)
            written.append(str(target))
        (self.cache_dir / "manifest.json").write_bytes(blob)
        (self.out_dir / "manifest.json").write_bytes(blob)
        return written + [str(self.out_dir / "manifest.json")]


def _field_csv(fld) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "x", "value"])
    mask = fld.report_mask()
    for i, t in enumerate(fld.t):
        for x, v in zip(fld.x[mask], fld.values[i][mask]):
            w.writerow([repr(float(t)), repr(float(x)), repr(float(v))])
    return buf.getvalue()


def _field_npz(fld) -> bytes:
    buf = io.BytesIO()
    np.savez(buf, x=fld.x, t=fld.t, values=fld.values)
    return buf.getvalue()


def cmd_solve_cauchy(cfg: ExperimentConfig, writer: ResultWriter, workers: int,
                     tol_scale: float) -> int:
    spec = _spec_from_config(cfg)
    eff = EffectiveHamiltonian1D.build(spec, p_max=cfg.p_max, n_p=cfg.n_p)
    scfg = SolverConfig.for_cauchy(
        spec, cfg.eps, cfg.horizon, report_radius=cfg.report_radius,
        method=cfg.method, dt_over_eps=cfg.dt_over_eps,
        h_over_eps=cfg.h_over_eps, speed_bound=cfg.speed_bound,
        domain_radius=cfg.domain_radius)
    keep = list(cfg.t_keep) or None
    started = time.perf_counter()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        f_ms = pool.submit(solve_cauchy_ms, spec, cfg.eps, cfg.horizon, scfg,
                           cfg.method, keep)
        f_eff = pool.submit(solve_cauchy_eff, spec, eff, cfg.horizon, scfg,
                            cfg.method, keep)
        ums, uef = f_ms.result(), f_eff.result()
    files = {
        "field_ms.csv": _field_csv(ums),
        "field_eff.csv": _field_csv(uef),
        "field_ms.npz": _field_npz(ums),
        "field_eff.npz": _field_npz(uef),
    }
    manifest = {
        "subcommand": "solve-cauchy",
        "spec": spec.name,
        "eps": cfg.eps,
        "horizon": cfg.horizon,
        "method": cfg.method,
        "tolerances": {"ms": ums.diagnostics.get("declared_tol"),
                       "eff": uef.diagnostics.get("declared_tol")},
        "timings": {"total_seconds": time.perf_counter() - started},
    }
    for line in writer.commit(files, manifest):
        print(line)
    return 0


def cmd_solve_static(cfg: ExperimentConfig, writer: ResultWriter, workers: int,
                     tol_scale: float) -> int:
    spec = _spec_from_config(cfg)
    eff = EffectiveHamiltonian1D.build(spec, p_max=cfg.p_max, n_p=cfg.n_p)
    scfg = SolverConfig.for_static(
        spec, cfg.eps, cfg.lam, report_radius=cfg.report_radius,
        dt_over_eps=cfg.dt_over_eps, h_over_eps=cfg.h_over_eps,
        speed_bound=cfg.speed_bound, domain_radius=cfg.domain_radius)
    started = time.perf_counter()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        f_ms = pool.submit(solve_static_ms, spec, cfg.eps, cfg.lam, scfg)
        f_eff = pool.submit(solve_static_eff, spec, eff, cfg.lam, scfg)
        vms, vef = f_ms.result(), f_eff.result()
    files = {
        "field_ms.csv": _field_csv(vms),
        "field_eff.csv": _field_csv(vef),
        "field_ms.npz": _field_npz(vms),
        "field_eff.npz": _field_npz(vef),
    }
    manifest = {
        "subcommand": "solve-static",
        "spec": spec.name,
        "eps": cfg.eps,
        "lam": cfg.lam,
        "tolerances": {"ms": vms.diagnostics.get("declared_tol"),
                       "eff": vef.diagnostics.get("declared_tol")},
        "timings": {"total_seconds": time.perf_counter() - started},
    }
    for line in writer.commit(files, manifest):
        print(line)
    return 0


def cmd_effective(cfg: ExperimentConfig, writer: ResultWriter, workers: int,
                  tol_scale: float) -> int:
    spec = _spec_from_config(cfg)
    started = time.perf_counter()
    eff = EffectiveHamiltonian1D.build(spec, p_max=cfg.p_max, n_p=cfg.n_p)
    pgrid = eff.micro_table.grid()
    hbar = io.StringIO()
    w = csv.writer(hbar, lineterminator="\n")
    w.writerow(["p", "hbar1"])
    for p, v in zip(pgrid, eff.micro_table.values):
        w.writerow([repr(float(p)), repr(float(v))])
    lbar = io.StringIO()
    w = csv.writer(lbar, lineterminator="\n")
    w.writerow(["v", "lbar1"])
    for v in pgrid:
        w.writerow([repr(float(v)), repr(float(eff.lagrangian_at(float(v))))])
    files = {"hbar1.csv": hbar.getvalue(), "lbar1.csv": lbar.getvalue()}
    manifest = {
        "subcommand": "effective",
        "spec": spec.name,
        "p_crit": eff.p_crit,
        "timings": {"total_seconds": time.perf_counter() - started},
    }
    for line in writer.commit(files, manifest):
        print(line)
    return 0


def cmd_metric(cfg: ExperimentConfig, writer: ResultWriter, workers: int,
               tol_scale: float) -> int:
    spec = _spec_from_config(cfg)
    eff = EffectiveHamiltonian1D.build(spec, p_max=cfg.p_max, n_p=cfg.n_p)
    started = time.perf_counter()
    eps0 = max(cfg.eps_list)
    dcfg = DPConfig.for_scale(eps0, dt_over_eps=cfg.dt_over_eps,
                              h_over_eps=cfg.h_over_eps,
                              speed_bound=cfg.speed_bound)
    c, t, x, y = cfg.metric_c, cfg.metric_t, cfg.metric_x, cfg.metric_y
    query = m_eps(0.0, t, x, y, cfg.eps, spec, DPConfig.for_scale(
        cfg.eps, dt_over_eps=cfg.dt_over_eps, h_over_eps=cfg.h_over_eps,
        speed_bound=cfg.speed_bound))

    # subadditivity audit through midpoints on the straight chord
    sub_rows = []
    for frac in (0.25, 0.5, 0.75):
        z = x + frac * (y - x)
        s = t / 2.0
        qcfg = DPConfig.for_scale(cfg.eps, dt_over_eps=cfg.dt_over_eps,
                                  h_over_eps=cfg.h_over_eps,
                                  speed_bound=cfg.speed_bound)
        r1 = m_eps(0.0, s, x, z, cfg.eps, spec, qcfg)
        r2 = m_eps(s, t, z, y, cfg.eps, spec, qcfg)
        slack = query.tol + r1.tol + r2.tol + query.snap_error \
            + r1.snap_error + r2.snap_error
        sub_rows.append({
            "z": z, "direct": query.value, "through": r1.value + r2.value,
            "slack": slack,
            "ok": bool(query.value <= r1.value + r2.value + slack),
        })

    rows = check_lemma_metric(c, t, x, y, cfg.eps_list, spec, eff, dcfg)
    dev_csv = io.StringIO()
    w = csv.writer(dev_csv, lineterminator="\n")
    w.writerow(["eps", "deviation", "deviation_over_eps"])
    for eps_i, dev in rows:
        w.writerow([repr(float(eps_i)), repr(float(dev)), repr(float(dev / eps_i))])

    grid_1 = DPConfig.for_scale(1.0, dt_over_eps=cfg.dt_over_eps,
                                h_over_eps=cfg.h_over_eps,
                                speed_bound=cfg.speed_bound)

    def scaling_cell(args):
        cc, tt = args
        return {
            "c": cc, "t": tt,
            "gap": check_scaling_lemma(cc, tt, tt / 2.0, spec, grid_1),
            "reverse_gap": check_scaling_lemma(cc, tt, tt / 2.0, spec, grid_1,
                                               reverse=True),
        }

    jobs = [(cc, tt) for cc in cfg.scaling_c for tt in cfg.scaling_t]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        gaps = list(pool.map(scaling_cell, jobs))

    report = {
        "spec": spec.name,
        "query": query.to_dict(),
        "subadditivity": sub_rows,
        "lemma_rows": [{"eps": float(e), "deviation": float(d)} for e, d in rows],
        "scaling_gaps": gaps,
    }
    files = {
        "metric_report.json": json.dumps(report, indent=1, sort_keys=True),
        "lemma_deviation.csv": dev_csv.getvalue(),
    }
    manifest = {
        "subcommand": "metric",
        "spec": spec.name,
        "timings": {"total_seconds": time.perf_counter() - started},
    }
    for line in writer.commit(files, manifest):
        print(line)
    return 0


def _rates_svg(reports, key: str) -> bytes:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with plt.rc_context({"svg.hashsalt": key}):
        fig, ax = plt.subplots(figsize=(5.0, 3.75))
        for rep in reports:
            keep = [i for i, err in enumerate(rep.errors) if err > 0]
            if not keep:
                continue
            label = f"{rep.kind} {'t' if rep.kind == 'cauchy' else 'lam'}={rep.t_or_lam:g}"
            ax.loglog([rep.eps_list[i] for i in keep],
                      [rep.errors[i] for i in keep], "o-", label=label)
            if rep.alpha is not None:
                e = np.asarray(rep.eps_list)
                ax.loglog(e, rep.c_hat * e ** rep.alpha, "--", alpha=0.6,
                          label=f"fit eps^{rep.alpha:.2f}")
        ax.set_xlabel("eps")
        ax.set_ylabel("sup-norm error")
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize=7)
        ax.grid(True, which="both", alpha=0.3)
        buf = io.BytesIO()
        fig.savefig(buf, format="svg",
                    metadata={"Date": None, "Description": f"config_hash={key}"})
        plt.close(fig)
    return buf.getvalue()


def cmd_rates(cfg: ExperimentConfig, writer: ResultWriter, workers: int,
              tol_scale: float) -> int:
    spec = _spec_from_config(cfg)
    eff = EffectiveHamiltonian1D.build(spec, p_max=cfg.p_max, n_p=cfg.n_p)
    rcfg = RateConfig(dt_over_eps=cfg.dt_over_eps, h_over_eps=cfg.h_over_eps,
                      report_radius=cfg.report_radius, band=cfg.band,
                      speed_bound=cfg.speed_bound,
                      refine_cells=cfg.refine_cells)
    started = time.perf_counter()

    def one_time(t):
        (rep,) = run_rate_sweep(spec, eff, [t], cfg.eps_list, rcfg)
        return verify_thm_main(rep, rcfg)

    def one_lam(lam):
        return verify_thm_static(
            run_static_sweep(spec, eff, lam, cfg.eps_list, rcfg), rcfg)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        reports = list(pool.map(one_time, cfg.t_list))
        static_reports = list(pool.map(one_lam, cfg.static_lams))

    payload = {
        "spec": spec.name,
        "eps_list": list(cfg.eps_list),
        "reports": [r.to_dict() for r in reports],
        "static_reports": [r.to_dict() for r in static_reports],
    }
    if len(static_reports) > 1:
        payload["uniformity"] = verify_static_uniformity(static_reports, rcfg)

    rows_csv = io.StringIO()
    w = csv.writer(rows_csv, lineterminator="\n")
    w.writerow(["kind", "t_or_lam", "eps", "error", "tol"])
    for rep in list(reports) + list(static_reports):
        for eps_i, err, tol in rep.csv_rows():
            w.writerow([rep.kind, repr(float(rep.t_or_lam)), repr(float(eps_i)),
                        repr(float(err)), repr(float(tol))])

    files = {
        "rates_report.json": json.dumps(payload, indent=1, sort_keys=True),
        "rates.csv": rows_csv.getvalue(),
        "rates.svg": _rates_svg(list(reports) + list(static_reports), writer.key),
    }
    manifest = {
        "subcommand": "rates",
        "spec": spec.name,
        "timings": {"total_seconds": time.perf_counter() - started},
    }
    for line in writer.commit(files, manifest):
        print(line)
    return 0


def cmd_verify_all(cfg: ExperimentConfig, writer: ResultWriter, workers: int,
                   tol_scale: float) -> int:
    ids = list(cfg.criteria) or list(CRITERION_IDS)
    started = time.perf_counter()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda cid: run_criterion(cid, tol_scale), ids))
    for r in results:
        print(r.line())
    failing = [r.cid for r in results if not r.passed]
    payload = {
        "tol_scale": tol_scale,
        "results": [r.to_dict() for r in results],
        "failing": failing,
    }
    files = {"verify_report.json": json.dumps(payload, indent=1, sort_keys=True)}
    manifest = {
        "subcommand": "verify-all",
        "criteria": ids,
        "exit_code": 1 if failing else 0,
        "timings": {"total_seconds": time.perf_counter() - started},
    }
    writer.commit(files, manifest)
    if failing:
        print(f"FAILED: {', '.join(failing)}", file=sys.stderr)
        return 1
    return 0


_COMMANDS = {
    "solve-cauchy": cmd_solve_cauchy,
    "solve-static": cmd_solve_static,
    "effective": cmd_effective,
    "metric": cmd_metric,
    "rates": cmd_rates,
    "verify-all": cmd_verify_all,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hjhomog",
        description="homogenization-error experiments for multiscale Hamilton-Jacobi equations")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH", default=None,
                       help="JSON experiment config (defaults used when omitted)")
        p.add_argument("--out", metavar="DIR", default=None,
                       help="output directory (overrides config out_dir)")
        p.add_argument("--workers", metavar="N", type=int, default=1,
                       help="thread pool size for independent cells")
        p.add_argument("--no-cache", action="store_true",
                       help="ignore and bypass the result cache")
        p.add_argument("--tol-scale", metavar="FACTOR", type=float, default=1.0,
                       help="scales acceptance tolerances and bands (verify-all)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        if args.tol_scale <= 0 or not math.isfinite(args.tol_scale):
            raise ConfigError("--tol-scale must be positive and finite")
        out_dir = Path(args.out) if args.out else Path(cfg.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        use_cache = cfg.use_cache and not args.no_cache
        writer = ResultWriter(
            out_dir, cache_key(cfg, args.subcommand, args.tol_scale), use_cache)
        manifest = writer.cached_manifest()
        if manifest is not None:
            for line in writer.restore(manifest):
                print(line)
            print(f"cache hit {writer.key[:12]}")
            return int(manifest.get("exit_code", 0))
        return _COMMANDS[args.subcommand](cfg, writer, args.workers,
                                          args.tol_scale)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FitError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
